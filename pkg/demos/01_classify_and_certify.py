"""Classify a few transfer functions, then certify a feedback loop several ways.

Run with ``python3 demos/01_classify_and_certify.py``.
"""

import numpy as np

from nicert import (RationalFunction, TransferMatrix, classify_ni, lemma2_check, lemma3_check,
                    lemma4_check, oracle_stability, theorem1_check, theorem2_check)

# %% scalar systems; coefficients are ascending powers of s
systems = {
    "1/(s+1)": RationalFunction([1.0], [1.0, 1.0]),
    "1/s": RationalFunction([1.0], [0.0, 1.0]),
    "s/(s+1)": RationalFunction([0.0, 1.0], [1.0, 1.0]),
    "1/(s^2+4)": RationalFunction([1.0], [4.0, 0.0, 1.0]),
}
for name, g in systems.items():
    cl = classify_ni(TransferMatrix([[g]]))
    line = f"{name:>10}: {cl.verdict}"
    if cl.witness is not None:
        w = cl.witness
        line += f"  (clause {w.clause} fails at w={w.omega0:.3g}, defect {w.defect:.3g})"
    if cl.marginal_poles:
        line += f"  marginal poles {[complex(p.location) for p in cl.marginal_poles]}"
    print(line)

# %% a 2x2 plant: a slow lag in one direction, a fast lag in another
a, b = np.array([1.0, 0.0]), np.array([1.0, 1.0]) / np.sqrt(2)
lag = RationalFunction([1.0], [1.0, 1.0])
mode = RationalFunction([1.0], [1.0, 0.2])
P = TransferMatrix.scalar(lag, np.outer(a, a)) + TransferMatrix.scalar(mode, np.outer(b, b))
print("\nplant verdict:", classify_ni(P).verdict)

# %% controller C(s) = -(1 + 2s)/(1 + s) I: SNI, C(0) = -I, C(inf) = -2I
c = RationalFunction([-1.0, -2.0], [1.0, 1.0])
C = TransferMatrix.scalar(c, np.eye(2))
print("controller verdict:", classify_ni(C).verdict)

# %% every test should agree the loop is stable
print("\noracle   ", oracle_stability(P, C).status)
print("lemma2   ", lemma2_check(P, C).status)
print("lemma3   ", lemma3_check(P, C).status)
print("lemma4   ", lemma4_check(P, C).status)
h = theorem1_check(P, C)
print("homotopy ", "Stable" if h.equivalent_verdict else "Unstable",
      f"(statements a/b/c: {h.statement_a}/{h.statement_b}/{h.statement_c})")
print("thm2     ", theorem2_check(P, C).status)

# %% a positive static gain breaks the loop: lambda_max(P(0) C(0)) exceeds 1
C_bad = TransferMatrix.scalar(RationalFunction([1.5], [1.0, 1.0]), np.eye(2))
v = lemma2_check(P, C_bad)
print("\nwith C = 1.5/(s+1) I:", v.status, "failed condition:", v.failed_condition)
print("unstable closed-loop pole:", np.round(oracle_stability(P, C_bad).offending_pole, 4))
