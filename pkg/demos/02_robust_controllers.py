"""Which controllers stabilize a whole class of NI plants?

A scalar warm-up first: C = alpha against every lag 1/(s + beta), beta > 0.
Then the class-level check on a few controllers, with a sampled sufficiency run.
"""

import numpy as np

from nicert import (ClassKind, RationalFunction, TransferMatrix, UncertaintyClass,
                    closed_loop_poles, necessity_check, oracle_stability, sufficiency_check)


def siso(num, den=(1.0,)):
    return TransferMatrix([[RationalFunction(num, den)]])


# %% C = alpha closes 1/(s + beta) into a single pole at alpha - beta
betas = np.geomspace(1e-3, 1e3, 13)
for alpha in (-0.5, 0.1):
    stable = [oracle_stability(siso([1.0], [b, 1.0]), siso([alpha])).status.value
              for b in betas]
    print(f"alpha={alpha:+.1f}:", " ".join("S" if s == "Stable" else "u" for s in stable))
print("pole for alpha=0.1, beta=0.05:", closed_loop_poles(siso([1.0], [0.05, 1.0]), siso([0.1])))

# %% the same question asked of the class: SNI plants with P(inf) >= 0
cls = UncertaintyClass(ClassKind.SNI_instNonneg)
for alpha in (-0.5, 0.0, 0.1):
    v = necessity_check(siso([alpha]), cls)
    print(f"C = {alpha:+.1f}: {v.status.value}", "" if v.violation is None else
          f"(violation {v.violation.kind})")

# %% strictly proper NI plants need an SNI controller with C(0) < 0
cls = UncertaintyClass(ClassKind.StrictlyProperNI)
C = siso([-1.0, -2.0], [1.0, 1.0])       # -(1 + 2s)/(1 + s)
v = necessity_check(C, cls)
print("\n-(1+2s)/(1+s) on strictly proper NI:", v.status.value, v.controller_conditions)
rep = sufficiency_check(C, cls, 60, seed=1)
print(f"sampled plants: {rep.stable}/{rep.samples} stable, "
      f"worst closed-loop real part {rep.worst_real_part:.3g}")

# %% a controller whose static gain is too large for a gamma-bounded class
cls = UncertaintyClass(ClassKind.SNI_dcBounded, gamma=2.0)
for k in (0.3, 0.6):
    C = siso([k], [1.0, 1.0])            # C(0) = k, bound is 1/gamma = 0.5
    print(f"k/(s+1), k={k}: {necessity_check(C, cls).status.value}")

# %% no controller at all works for NI plants allowing a simple origin pole
v = necessity_check(siso([-1.0, -2.0], [1.0, 1.0]), UncertaintyClass(ClassKind.NI_noDoubleOriginPole))
print("\nNI with simple origin poles:", v.status.value)
