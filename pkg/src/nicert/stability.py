"""Feedback stability of positive interconnections [P, C].

``oracle_stability`` computes closed-loop poles from minimal realizations
and is the reference every gain-based test is compared against.  The
other checks only look at P(0), P(inf), C(0), C(inf) (plus a limit at the
origin for plants with integrators).
"""

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .classify import classify_ni
from .exceptions import IllPosed, LimitDiverges, PreconditionViolated, PsiInvalid
from .lti import POLE_AT_ORIGIN, Polynomial, close_loop, gains

__all__ = ["Status", "StabilityVerdict", "HomotopyReport", "oracle_stability",
           "lemma2_check", "lemma3_check", "lemma4_check", "theorem1_check",
           "theorem2_check", "lemma4_limit", "default_psi", "closed_loop_poles"]

# strict inequalities are decided with this margin; closer values are "boundary"
MARGIN = 1e-9
STABLE_RE = -1e-8
WELLPOSED_RTOL = 1e-10


class Status(str, enum.Enum):
    STABLE = "Stable"
    UNSTABLE = "Unstable"
    ILL_POSED = "IllPosed"
    INCONCLUSIVE = "Inconclusive"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class StabilityVerdict:
    status: Status
    offending_pole: complex = None
    failed_condition: str = None
    boundary: bool = False
    conditions: dict = field(default_factory=dict)

    @property
    def stable(self):
        return self.status is Status.STABLE

    def to_dict(self):
        pole = self.offending_pole
        return {
            "status": str(self.status),
            "offending_pole": None if pole is None else [pole.real, pole.imag],
            "failed_condition": self.failed_condition,
            "boundary": self.boundary,
            "conditions": {k: (float(v) if np.isscalar(v) else v)
                           for k, v in self.conditions.items()},
        }


def closed_loop_poles(P, C):
    return close_loop(P, C).eigenvalues()


def oracle_stability(P, C):
    """Stable iff every closed-loop pole has Re < -1e-8."""
    try:
        ev = closed_loop_poles(P, C)
    except IllPosed:
        return StabilityVerdict(Status.ILL_POSED, failed_condition="well-posedness")
    if ev.size == 0:
        return StabilityVerdict(Status.STABLE, conditions={"max_real_part": -np.inf})
    k = int(np.argmax(ev.real))
    worst = complex(ev[k])
    cond = {"max_real_part": worst.real}
    if worst.real < STABLE_RE:
        return StabilityVerdict(Status.STABLE, conditions=cond)
    return StabilityVerdict(Status.UNSTABLE, offending_pole=worst,
                            boundary=abs(worst.real - STABLE_RE) < MARGIN, conditions=cond)


# --------------------------------------------------------------------------
# preconditions
# --------------------------------------------------------------------------

def _require(P, C, *, origin_ok=False, pre=True):
    if not pre:
        return
    cp = classify_ni(P)
    if not cp.is_ni:
        raise PreconditionViolated("P is not negative imaginary", cp.witness)
    if not origin_ok and gains(P).has_origin_pole:
        raise PreconditionViolated("P has a pole at the origin")
    cc = classify_ni(C)
    if not cc.is_sni:
        raise PreconditionViolated("C is not strictly negative imaginary",
                                   cc.witness or cc.sni_witness)


def _lmax(M):
    ev = np.linalg.eigvals(M)
    return float(np.max(ev.real))


def _nonsingular(M, scale=1.0):
    return np.linalg.svd(M, compute_uv=False)[-1] > WELLPOSED_RTOL * (1.0 + scale)


def _decide(values, labels, P, C, prefix_ok=True):
    """Turn condition values (must be < 0) into a verdict."""
    conds = dict(zip(labels, values))
    boundary = False
    for lab, v in zip(labels, values):
        if abs(v) <= MARGIN:
            boundary = True
        if not v < -MARGIN:
            pole = _unstable_pole(P, C)
            return StabilityVerdict(Status.UNSTABLE, offending_pole=pole,
                                    failed_condition=lab, boundary=boundary,
                                    conditions=conds)
    return StabilityVerdict(Status.STABLE, boundary=boundary, conditions=conds)


def _unstable_pole(P, C):
    if P is None:
        return None
    try:
        ev = closed_loop_poles(P, C)
    except IllPosed:
        return None
    if ev.size == 0:
        return None
    z = complex(ev[np.argmax(ev.real)])
    return z if z.real >= STABLE_RE else None


def _gain_mats(P, C):
    gp, gc = gains(P), gains(C)
    return gp.static_gain, gp.instantaneous_gain, gc.static_gain, gc.instantaneous_gain


def lemma2_conditions(P0, Pinf, C0, Cinf):
    n = P0.shape[0]
    I = np.eye(n)
    W = I - Pinf @ Cinf
    if not _nonsingular(W, np.linalg.norm(Pinf, 2) * np.linalg.norm(Cinf, 2)):
        return None
    b = _lmax(np.linalg.solve(W, Pinf @ C0 - I))
    V = I - C0 @ Pinf
    if not _nonsingular(V, np.linalg.norm(Pinf, 2) * np.linalg.norm(C0, 2)):
        return b, np.inf
    c = _lmax(np.linalg.solve(V, C0 @ P0 - I))
    return b, c


def lemma3_conditions(P0, Pinf, C0, Cinf):
    n = P0.shape[0]
    I = np.eye(n)
    W = I - Pinf @ Cinf
    if not _nonsingular(W, np.linalg.norm(Pinf, 2) * np.linalg.norm(Cinf, 2)):
        return None
    b = _lmax((P0 @ Cinf - I) @ np.linalg.inv(W))
    V = I - Cinf @ P0
    if not _nonsingular(V, np.linalg.norm(Cinf, 2) * np.linalg.norm(P0, 2)):
        return b, np.inf
    c = _lmax((C0 @ P0 - I) @ np.linalg.inv(V))
    return b, c


def _gain_check(conds_fn, P, C, pre):
    _require(P, C, pre=pre)
    P0, Pinf, C0, Cinf = _gain_mats(P, C)
    vals = conds_fn(P0, Pinf, C0, Cinf)
    if vals is None:
        return StabilityVerdict(Status.ILL_POSED, failed_condition="a")
    return _decide(vals, ("b", "c"), P, C)


def lemma2_check(P, C, pre=True):
    """Gain test for P NI without origin poles and C SNI (necessary and sufficient)."""
    return _gain_check(lemma2_conditions, P, C, pre)


def lemma3_check(P, C, pre=True):
    """Alternative gain test with the factors in the other order."""
    return _gain_check(lemma3_conditions, P, C, pre)


# --------------------------------------------------------------------------
# plants with integrators
# --------------------------------------------------------------------------

def default_psi(P):
    """-c I with c chosen so that lambda_max(P(inf) Psi) <= 1/2."""
    Pinf = P.at_infinity()
    lo = min(0.0, float(np.min(np.linalg.eigvals(Pinf).real)))
    return -0.5 / (1.0 + abs(lo)) * np.eye(P.n)


def _poly_det(M, perm=False):
    """Determinant of a square matrix of coefficient arrays (Laplace).

    With ``perm`` the permanent is returned; applied to absolute values it
    bounds the size of the terms summed into each coefficient.
    """
    n = len(M)
    if n == 1:
        return M[0][0]
    acc = np.zeros(1)
    for j in range(n):
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = np.polynomial.polynomial.polymul(M[0][j], _poly_det(minor, perm))
        acc = np.polynomial.polynomial.polyadd(acc, term if perm or j % 2 == 0 else -term)
    return acc


def _poly_adj(M, perm=False):
    n = len(M)
    if n == 1:
        return [[np.ones(1)]]
    adj = [[None] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(M) if k != i]
            c = _poly_det(minor, perm)
            adj[j][i] = c if perm or (i + j) % 2 == 0 else -c
    return adj


# a power-series coefficient is zero when it is this small relative to the
# magnitude of the terms that were summed into it
CANCEL_RTOL = 1e-9


def _series(c, K):
    out = np.zeros(K)
    c = np.asarray(c, dtype=float)[:K]
    out[:len(c)] = c
    return out


def _taylor(rf, K):
    """First K Taylor coefficients at s = 0 of a rational function analytic there."""
    num, den = _series(rf.num.coeffs, K), _series(rf.den.coeffs, K)
    if den[0] == 0.0:
        raise LimitDiverges("not analytic at the origin")
    out = np.zeros(K)
    for k in range(K):
        out[k] = (num[k] - np.dot(den[1:k + 1], out[k - 1::-1][:k])) / den[0]
    return out


def _mat_series_mul(A, B, K):
    """Product of matrix power series given as arrays (K, n, n)."""
    out = np.zeros_like(A)
    for k in range(K):
        for i in range(k + 1):
            out[k] += A[i] @ B[k - i]
    return out


def lemma4_limit(P, C, psi):
    """lim_{s->0} (I - Psi P(inf)) (I - C(s) P(inf))^-1 (C(s) P(s) - I) (I - Psi P(s))^-1.

    P is written as N(s)/d(s) over a common denominator, so that
    (C P - I)(I - Psi P)^-1 = (C N - d I) adj(d I - Psi N) / det(d I - Psi N).
    Numerator and determinant are expanded in powers of s; the limit is the
    ratio of the first significant determinant coefficient and the matching
    numerator coefficient.
    """
    n = P.n
    dens = []
    for row in P.entries:
        for e in row:
            if e.den.degree >= 1 and not any(e.den == d for d in dens):
                dens.append(e.den)
    d = Polynomial([1.0])
    for q in dens:
        d = d * q
    N = [[(e.num * divmod(d, e.den)[0]).coeffs for e in row] for row in P.entries]
    dI = [[d.coeffs if i == j else np.zeros(1) for j in range(n)] for i in range(n)]
    A = [[np.polynomial.polynomial.polysub(
        dI[i][j], sum(psi[i, k] * _series(N[k][j], d.degree + 1) for k in range(n)))
        for j in range(n)] for i in range(n)]
    detA = _poly_det(A)
    adjA = _poly_adj(A)
    absA = [[np.abs(c) for c in row] for row in A]
    detB = _series(_poly_det(absA, perm=True), len(detA))
    sig = np.nonzero(np.abs(detA) > CANCEL_RTOL * detB)[0]
    if sig.size == 0:
        raise LimitDiverges("I - Psi P(s) is singular")
    v = int(sig[0])
    K = v + 1
    Cs = np.array([[_taylor(e, K) for e in row] for row in C.entries]).transpose(2, 0, 1)
    Ns = np.array([[_series(c, K) for c in row] for row in N]).transpose(2, 0, 1)
    ds = _series(d.coeffs, K)
    Bs = _mat_series_mul(Cs, Ns, K) - ds[:, None, None] * np.eye(n)[None]
    adjs = np.array([[_series(c, K) for c in row] for row in adjA]).transpose(2, 0, 1)
    F = _mat_series_mul(Bs, adjs, K)
    # magnitude bound for every coefficient of F
    Bb = _mat_series_mul(np.abs(Cs), np.abs(Ns), K) + np.abs(ds)[:, None, None] * np.eye(n)[None]
    adjb = np.array([[_series(c, K) for c in row]
                     for row in _poly_adj(absA, perm=True)]).transpose(2, 0, 1)
    Fb = _mat_series_mul(Bb, adjb, K)
    for k in range(v):
        if np.any(np.abs(F[k]) > CANCEL_RTOL * Fb[k]):
            raise LimitDiverges("the expression has a pole at the origin")
    core = F[v] / detA[v]
    Pinf = P.at_infinity()
    C0 = np.array([[_taylor(e, 1)[0] for e in row] for row in C.entries])
    I = np.eye(n)
    return (I - psi @ Pinf) @ np.linalg.solve(I - C0 @ Pinf, core)


def lemma4_check(P, C, psi=None, pre=True):
    """Gain test allowing integrators in P; psi < 0 with lambda_max(P(inf) psi) < 1."""
    _require(P, C, origin_ok=True, pre=pre)
    psi = default_psi(P) if psi is None else np.atleast_2d(np.asarray(psi, dtype=float))
    Pinf = P.at_infinity()
    if psi.shape != (P.n, P.n) or not np.allclose(psi, psi.T, atol=1e-12):
        raise PsiInvalid("psi must be a real symmetric n x n matrix")
    if np.max(np.linalg.eigvalsh(psi)) >= 0:
        raise PsiInvalid("psi must be negative definite")
    if _lmax(Pinf @ psi) >= 1:
        raise PsiInvalid("lambda_max(P(inf) psi) must be < 1")
    gc = gains(C)
    C0, Cinf = gc.static_gain, gc.instantaneous_gain
    I = np.eye(P.n)
    W = I - Pinf @ Cinf
    if not _nonsingular(W, np.linalg.norm(Pinf, 2) * np.linalg.norm(Cinf, 2)):
        return StabilityVerdict(Status.ILL_POSED, failed_condition="a")
    b = _lmax(np.linalg.solve(W, Pinf @ C0 - I))
    try:
        c = _lmax(lemma4_limit(P, C, psi))
    except LimitDiverges:
        c = np.inf
    return _decide((b, c), ("b", "c"), P, C)


# --------------------------------------------------------------------------
# homotopy and eigenvalue tests
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HomotopyReport:
    tau_grid: np.ndarray
    det_conditions_b: np.ndarray     # (len(tau), 3)
    det_conditions_c: np.ndarray
    statement_a: bool
    statement_b: bool
    statement_c: bool

    @property
    def equivalent_verdict(self):
        return self.statement_b and self.statement_c

    @property
    def consistent(self):
        return self.statement_a == self.statement_b == self.statement_c

    def to_dict(self):
        return {"tau_points": int(len(self.tau_grid)),
                "statement_a": self.statement_a, "statement_b": self.statement_b,
                "statement_c": self.statement_c,
                "equivalent_verdict": self.equivalent_verdict,
                "consistent": self.consistent,
                "min_abs_det_b": float(np.min(np.abs(self.det_conditions_b))),
                "min_abs_det_c": float(np.min(np.abs(self.det_conditions_c)))}


def _det_family_vanishes(X, tau):
    """Does det(tau X - I) vanish somewhere on [0, 1]?"""
    n = X.shape[0]
    f = lambda t: float(np.real(np.linalg.det(t * X - np.eye(n))))
    vals = np.array([f(t) for t in tau])
    if np.any(vals == 0.0) or np.any(np.sign(vals[1:]) != np.sign(vals[:-1])):
        return True, vals
    for i in np.nonzero(np.abs(vals) < 1e-6)[0]:
        lo, hi = tau[max(i - 1, 0)], tau[min(i + 1, len(tau) - 1)]
        res = minimize_scalar(lambda t: abs(f(t)), bounds=(lo, hi), method="bounded",
                              options={"xatol": 1e-12})
        if res.fun < 1e-10:
            return True, vals
    return False, vals


def theorem1_check(P, C, points=101, pre=True):
    """Evaluate the three equivalent statements of the homotopy theorem."""
    _require(P, C, pre=pre)
    P0, Pinf, C0, Cinf = _gain_mats(P, C)
    tau = np.linspace(0.0, 1.0, max(points, 101))
    fam_b = [Pinf @ Cinf, P0 @ Cinf, P0 @ C0]
    fam_c = [Pinf @ Cinf, Pinf @ C0, P0 @ C0]
    hit_b, vals_b = zip(*[_det_family_vanishes(X, tau) for X in fam_b])
    hit_c, vals_c = zip(*[_det_family_vanishes(X, tau) for X in fam_c])
    a = True
    for t in tau:
        vals = lemma2_conditions(t * P0, t * Pinf, C0, Cinf)
        if vals is None or not all(v < -MARGIN for v in vals):
            a = False
            break
    return HomotopyReport(tau, np.array(vals_b).T, np.array(vals_c).T,
                          a, not any(hit_b), not any(hit_c))


def theorem2_check(P, C, pre=True):
    """Sufficient test: lambda_max(P(0)C(0)) < 1 and lambda_max(P(inf)C(inf)) < 1.

    Requires P(inf) >= 0 or C(inf) >= 0.  Returns Inconclusive when either
    bound fails; the test never certifies instability.
    """
    _require(P, C, pre=pre)
    P0, Pinf, C0, Cinf = _gain_mats(P, C)
    psd = lambda M: np.min(np.linalg.eigvalsh(0.5 * (M + M.T))) >= -MARGIN
    if not (psd(Pinf) or psd(Cinf)):
        raise PreconditionViolated("neither P(inf) nor C(inf) is positive semidefinite")
    v0 = _lmax(P0 @ C0) - 1.0
    vinf = _lmax(Pinf @ Cinf) - 1.0
    conds = {"lmax_P0C0_minus_1": v0, "lmax_PinfCinf_minus_1": vinf}
    boundary = abs(v0) <= MARGIN or abs(vinf) <= MARGIN
    if v0 < -MARGIN and vinf < -MARGIN:
        return StabilityVerdict(Status.STABLE, boundary=boundary, conditions=conds)
    failed = "static" if not v0 < -MARGIN else "instantaneous"
    return StabilityVerdict(Status.INCONCLUSIVE, failed_condition=failed,
                            boundary=boundary, conditions=conds)
