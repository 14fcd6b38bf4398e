"""When a controller fails a class condition, build an in-class plant that breaks it.

Each recipe is checked three ways: the plant is a member of the class, the
loop is singular at the pinned point, and the closed-loop poles are not all
in the open left half plane.
"""

import numpy as np

from nicert import (ClassKind, RationalFunction, TransferMatrix, UncertaintyClass,
                    necessity_check, oracle_stability, sample_violating_controller,
                    synthesize_destabilizer, verify_counterexample)


def siso(num, den=(1.0,)):
    return TransferMatrix([[RationalFunction(num, den)]])


def attack(C, cls, label):
    v = necessity_check(C, cls)
    r = synthesize_destabilizer(C, cls, v)
    rep = verify_counterexample(r, C, cls)
    o = oracle_stability(r.plant, C)
    where = o.status.value if o.offending_pole is None else f"pole {o.offending_pole:.3g}"
    print(f"{label:<40} {v.violation.kind:<18} {r.recipe_kind:<21} "
          f"pin {rep['pin_residual']:.1e}  {where}")
    return r


# %% hand examples
print(f"{'controller / class':<40} {'violation':<18} {'recipe':<21}")
attack(siso([2.0]), UncertaintyClass(ClassKind.SNI_instNonneg), "C = 2, SNI plants")
r = attack(siso([0.0, 1.0], [1.0, 1.0]), UncertaintyClass(ClassKind.SNI_instNonneg),
           "C = s/(s+1), SNI plants")
attack(siso([0.0]), UncertaintyClass(ClassKind.N0_instNonneg_dcStrict, 1.0),
       "C = 0, N0 with P(0) < I")
attack(siso([-1.0, -2.0], [1.0, 1.0]), UncertaintyClass(ClassKind.NI_noDoubleOriginPole),
       "C = -(1+2s)/(1+s), origin poles allowed")

# %% the second-order plant found for C = s/(s+1)
p = r.plant.entries[0][0]
print("\nplant for s/(s+1): num", np.round(p.num.coeffs, 6), "den", np.round(p.den.coeffs, 6))
print(f"pinned at w0 = {r.omega0:g}: C(jw0) = {r.r:.4f} exp(j {r.theta:.4f})")

# %% random violating controllers, two per kind, 2x2
print()
cases = [(ClassKind.StrictlyProperNI, None, "NotSNI", "half"),
         (ClassKind.StrictlyProperNI, None, "StaticGainBound", "zero"),
         (ClassKind.N0_dcBounded, 1.0, "NotSNI", "pi"),
         (ClassKind.SNI_dcBounded, 1.0, "NotNI", "low"),
         (ClassKind.SNI_dcBounded, 1.0, "InstGainSign", None)]
for kind, gamma, violation, angle in cases:
    cls = UncertaintyClass(kind, gamma)
    C = sample_violating_controller(cls, violation, n=2, seed=5, angle=angle)
    attack(C, cls, f"random 2x2, {kind.value}")
