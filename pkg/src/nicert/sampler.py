"""Seeded random generators of plants in each uncertainty class.

Plants are sums of modal terms that are NI by construction::

    damped      g a a^T w^2 / (s^2 + 2 z w s + w^2)
    lag         g a a^T / (s/w + 1)
    undamped    g a a^T w^2 / (s^2 + w^2)        (NI and N0 families)
    integrator  g a a^T / s                      (NI family)

plus a symmetric feedthrough D.  Gains are then rescaled so the class
bounds on P(0) and P(inf) hold, and every sample is re-classified before
it is returned.
"""

from dataclasses import dataclass

import numpy as np

from .classes import ClassKind, UncertaintyClass, class_membership
from .classify import classify_ni
from .exceptions import SamplerExhausted
from .lti import Polynomial, RationalFunction, TransferMatrix

__all__ = ["SampleSpec", "sample_plant", "sample_sni_controller", "sample_violating_controller",
           "modal_sum"]

MAX_ATTEMPTS = 100


@dataclass(frozen=True)
class SampleSpec:
    cls: UncertaintyClass
    n: int = 1
    modes: int = 2
    seed: int = 0
    scale: float = 1.0
    origin_poles: bool = True

    def __post_init__(self):
        if not 1 <= self.n <= 4:
            raise ValueError("n must be in 1..4")
        if not 1 <= self.modes <= 8:
            raise ValueError("modes must be in 1..8")
        if not self.scale > 0:
            raise ValueError("scale must be positive")


def _unit(rng, n):
    v = rng.standard_normal(n)
    return v / np.linalg.norm(v)


def _loguniform(rng, lo, hi):
    return float(np.exp(rng.uniform(np.log(lo), np.log(hi))))


def modal_sum(terms, D):
    """Assemble sum_k G_k q_k(s) + D over one common denominator.

    ``terms`` is a list of (G_k, num_k, den_k) with real n x n G_k and
    ascending coefficient lists for the scalar factor q_k = num_k/den_k.
    """
    D = np.atleast_2d(np.asarray(D, dtype=float))
    n = D.shape[0]
    dens = [Polynomial(d) for _, _, d in terms]
    common = Polynomial([1.0])
    for d in dens:
        common = common * d
    parts = []
    for k, (G, num, _) in enumerate(terms):
        other = Polynomial([1.0])
        for l, d in enumerate(dens):
            if l != k:
                other = other * d
        parts.append((np.asarray(G, dtype=float), Polynomial(num) * other))
    entries = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = common * D[i, j]
            for G, p in parts:
                if G[i, j] != 0.0:
                    acc = acc + p * G[i, j]
            row.append(RationalFunction(acc.coeffs, common.coeffs))
        entries.append(row)
    return TransferMatrix(entries)


def _draw(spec, rng):
    cls, n = spec.cls, spec.n
    kinds = ["damped", "lag"]
    if cls.allows_marginal_poles:
        kinds.append("undamped")
    if cls.allows_origin_poles and spec.origin_poles:
        kinds.append("integrator")
    terms = []
    static = np.zeros((n, n))
    for _ in range(spec.modes):
        kind = kinds[rng.integers(len(kinds))]
        a = _unit(rng, n)
        G = _loguniform(rng, 0.1, 10.0) * spec.scale * np.outer(a, a)
        w = _loguniform(rng, 1e-2, 1e2)
        if kind == "damped":
            z = _loguniform(rng, 1e-2, 1.0)
            terms.append((G, [w * w], [w * w, 2 * z * w, 1.0]))
            static += G
        elif kind == "lag":
            terms.append((G, [1.0], [1.0, 1.0 / w]))
            static += G
        elif kind == "undamped":
            terms.append((G, [w * w], [w * w, 0.0, 1.0]))
            static += G
        else:
            terms.append((G, [1.0], [0.0, 1.0]))
    if cls.family == "SNI" and n > 1:
        # full-rank lag so that j(P - P*) > 0 in every direction
        w = _loguniform(rng, 1e-2, 1e2)
        G = _loguniform(rng, 0.1, 1.0) * spec.scale * np.eye(n)
        terms.append((G, [1.0], [1.0, 1.0 / w]))
        static += G

    if cls.strictly_proper:
        D = np.zeros((n, n))
    else:
        B = rng.standard_normal((n, n)) * spec.scale
        D = 0.5 * (B + B.T)
        if cls.inst_nonneg:
            D = B @ B.T / n
    P0 = static + D
    if cls.dc_nonneg:
        lo = np.linalg.eigvalsh(P0)[0]
        if lo < 0:
            D = D + (1e-3 - lo) * np.eye(n)
            P0 = static + D
    if cls.dc_bound is not None:
        top = np.linalg.eigvalsh(P0)[-1]
        target = 0.9 * cls.gamma
        if top > target:
            k = target / top
            terms = [(G * k, num, den) for G, num, den in terms]
            D = D * k
    return modal_sum(terms, D)


def sample_plant(spec):
    """Draw one in-class plant; deterministic in ``spec``."""
    rng = np.random.default_rng(spec.seed)
    for _ in range(MAX_ATTEMPTS):
        P = _draw(spec, rng)
        ok, _, _ = class_membership(P, spec.cls)
        if ok:
            return P
    raise SamplerExhausted(f"no in-class plant after {MAX_ATTEMPTS} attempts for {spec}")


def sample_sni_controller(n=1, modes=2, seed=0, dc_below=None, inst_nonneg=False,
                          dc_zero_eig=False, scale=1.0):
    """Random stable SNI controller.

    ``dc_below`` shifts the feedthrough so that lambda_max(C(0)) equals
    ``dc_below`` minus a random positive offset.  ``dc_zero_eig`` instead
    makes C(0) singular with all other eigenvalues negative.
    """
    rng = np.random.default_rng(seed)
    cls = UncertaintyClass(ClassKind.SNI_dcBounded, gamma=1e6)
    for _ in range(MAX_ATTEMPTS):
        C = _draw(SampleSpec(cls, n, modes, 0, scale), rng)
        if inst_nonneg:
            Cinf = C.at_infinity()
            lo = np.linalg.eigvalsh(0.5 * (Cinf + Cinf.T))[0]
            if lo < 0:
                C = C + TransferMatrix.constant((1e-3 - lo) * np.eye(n))
        if dc_below is not None or dc_zero_eig:
            C0 = np.array([[e(0.0).real for e in row] for row in C.entries])
            ev, U = np.linalg.eigh(0.5 * (C0 + C0.T))
            if dc_zero_eig:
                # top eigenvalue moved to 0, the others to random negative values
                new = np.concatenate([-np.array([_loguniform(rng, 1e-1, 1.0)
                                                 for _ in range(n - 1)]), [0.0]])
                C = C + TransferMatrix.constant(U @ np.diag(new - ev) @ U.T)
            else:
                target = dc_below - _loguniform(rng, 1e-2, 1.0)
                C = C + TransferMatrix.constant((target - ev[-1]) * np.eye(n))
        if classify_ni(C).is_sni:
            return C
    raise SamplerExhausted("no SNI controller found")


def _rotation(rng, n):
    Q, R = np.linalg.qr(rng.standard_normal((n, n)))
    return Q * np.sign(np.diag(R))


def _sni_scalar(rng):
    a = _loguniform(rng, 0.2, 5.0)
    return RationalFunction([_loguniform(rng, 0.2, 2.0) * a], [a, 1.0])


def sample_violating_controller(cls, violation, n=1, seed=0, angle=None):
    """Random stable controller failing the condition of ``cls`` in a chosen way.

    ``violation`` is one of "NotNI", "NotSNI", "StaticGainBound",
    "InstGainSign".  For the frequency violations ``angle`` selects the
    phase of x* C(j w0) x at the witness: "zero", "pi", "null" (x* C x = 0),
    "half" (pi/2), "low" (0, pi/2) or "high" (pi/2, pi).  The controller is
    Q diag(h, g_2, ..., g_n) Q^T with SNI g_k and a scalar h carrying the
    violation, so the witness direction is real.
    """
    rng = np.random.default_rng(seed)
    Q = _rotation(rng, n)
    gamma = cls.gamma if cls.gamma is not None else 1.0
    rel, bound = cls.controller_dc_bound() or ("<", 0.0)

    def assemble(h, others=None):
        diag = [h] + (others if others is not None else [_sni_scalar(rng) for _ in range(n - 1)])
        D = [[RationalFunction([0.0]) for _ in range(n)] for _ in range(n)]
        for k in range(n):
            D[k][k] = diag[k]
        Dm = TransferMatrix(D)
        return TransferMatrix.constant(Q) @ Dm @ TransferMatrix.constant(Q.T)

    if violation in ("NotNI", "NotSNI"):
        a = _loguniform(rng, 0.3, 3.0)
        k = _loguniform(rng, 0.2, 2.0)
        if angle in ("zero", "pi", "null"):
            c = {"zero": 1.0, "pi": -1.0, "null": 0.0}[angle] * _loguniform(rng, 0.05, 0.5) / gamma
            h = RationalFunction([c])
        elif angle == "half":
            h = RationalFunction([-k * a, k], [a, 1.0])         # k (s - a)/(s + a)
        elif angle == "low":
            h = RationalFunction([0.0, k], [a, 1.0])            # k s/(s + a), angle pi/4
            h = h + RationalFunction([_loguniform(rng, 0.01, 0.3) * k])
        elif angle == "high":
            h = RationalFunction([-k], [a, 1.0])                # -k/(s + a), angle 3 pi/4
            h = h + RationalFunction([-_loguniform(rng, 0.01, 0.3) * k])
        else:
            raise ValueError(f"unknown angle {angle!r}")
        C = assemble(h)
        # keep the static and instantaneous conditions satisfied for the other directions
        return C

    if violation == "StaticGainBound":
        if cls.kind in (ClassKind.StrictlyProperNI, ClassKind.NI_noDoubleOriginPole) \
                and angle == "zero":
            return sample_sni_controller(n, 2, seed, dc_zero_eig=True)
        over = bound + _loguniform(rng, 1e-2, 1.0) * max(bound, 1.0)
        C = sample_sni_controller(n, 2, seed, dc_below=bound - 1.0)
        C0 = np.array([[e(0.0).real for e in row] for row in C.entries])
        ev, U = np.linalg.eigh(0.5 * (C0 + C0.T))
        bump = (over - ev[-1]) * np.outer(U[:, -1], U[:, -1])
        return C + TransferMatrix.constant(bump)

    if violation == "InstGainSign":
        for _ in range(MAX_ATTEMPTS):
            C = sample_sni_controller(n, 2, int(rng.integers(2 ** 32)),
                                      dc_below=bound - _loguniform(rng, 1e-2, 0.5) * max(bound, 1.0))
            Cinf = C.at_infinity()
            if np.linalg.eigvalsh(0.5 * (Cinf + Cinf.T))[0] < -1e-3:
                return C
        raise SamplerExhausted("no controller with an indefinite instantaneous gain")
    raise ValueError(f"unknown violation {violation!r}")
