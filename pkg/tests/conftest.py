import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from nicert.lti import RationalFunction, TransferMatrix

# derandomized so the suite is reproducible; numerical routines are slow-ish
settings.register_profile("repo", deadline=None, derandomize=True, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "repo"))


def siso(num, den=(1.0,)):
    """Scalar system from ascending coefficient lists."""
    return TransferMatrix.siso(num, den)


def mat(rows):
    """Transfer matrix from a nested list of (num, den) pairs or numbers."""
    out = []
    for row in rows:
        r = []
        for e in row:
            if isinstance(e, RationalFunction):
                r.append(e)
            elif isinstance(e, tuple):
                r.append(RationalFunction(*e))
            else:
                r.append(RationalFunction([float(e)]))
        out.append(r)
    return TransferMatrix(out)


def rank_one(a, num, den):
    """a a^T num(s)/den(s)."""
    a = np.asarray(a, dtype=float)
    return TransferMatrix.scalar(RationalFunction(num, den), np.outer(a, a))


# SNI stand-in for the "negative lag" controllers: -2 + 1/(s+1) = -(1 + 2s)/(1 + s)
# has C(0) = -1, C(inf) = -2 and j(C - C*) = 2w/(1 + w^2) > 0
SNI_NEG = siso([-1.0, -2.0], [1.0, 1.0])


@pytest.fixture
def sni_neg():
    return SNI_NEG
