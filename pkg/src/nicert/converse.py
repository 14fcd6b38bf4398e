"""Robust-stability conditions on the controller, and destabilizer synthesis.

For each uncertainty class the controller-side condition is checked
exactly as stated for that class.  When it fails, an in-class plant
that breaks closed-loop stability is constructed from the violated
condition and then verified independently: class membership by the
classifier, the pinned singularity numerically, and instability by the
closed-loop oracle.
"""

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .classes import ClassKind, UncertaintyClass, class_membership
from .classify import classify_ni, is_stable, _phase_normalize
from .exceptions import (ControllerUnstable, NotSynthesizable, PreconditionViolated,
                         SufficiencyCounterexampleFound, VerificationFailed)
from .lti import RationalFunction, TransferMatrix, close_loop, gains
from .parallel import pmap
from .sampler import SampleSpec, sample_plant
from .stability import Status, lemma4_check, oracle_stability

__all__ = ["NecessityStatus", "Violation", "NecessityVerdict", "CounterexampleRecipe",
           "RECIPE_KINDS", "necessity_check", "synthesize_destabilizer",
           "verify_counterexample", "sufficiency_check", "SufficiencyReport",
           "catalog_p", "catalog_interval", "lossless_N", "build_plant"]

MARGIN = 1e-9
PIN_TOL = 1e-6
ANGLE_SNAP = 1e-9

RECIPE_KINDS = ("ResonantRankOne_eps", "CatalogSecondOrder", "SchurConstant",
                "SchurFirstOrder", "SchurIntegrator", "InstGainLag",
                "InverseStaticGain", "ResonantPlusLossless")


class NecessityStatus(str, enum.Enum):
    ROBUST = "RobustlyStabilizing"
    VIOLATED = "Violated"
    IMPOSSIBLE = "ClassImpossible"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class Violation:
    kind: str            # NotSNI, NotNI, StaticGainBound, InstGainSign, NonexistenceClass
    omega0: object       # frequency, "Origin" or "Infinity"
    x: np.ndarray
    margin: float

    def to_dict(self):
        d = {"kind": self.kind, "omega0": self.omega0, "margin": self.margin}
        if self.x is not None:
            d["x_re"] = np.real(self.x).tolist()
            d["x_im"] = np.imag(self.x).tolist()
        return d


@dataclass(frozen=True)
class NecessityVerdict:
    status: NecessityStatus
    cls: UncertaintyClass
    controller_conditions: dict
    violation: Violation = None
    classification: object = None

    def to_dict(self):
        return {"status": str(self.status), "class": self.cls.to_dict(),
                "controller_conditions": dict(self.controller_conditions),
                "violation": self.violation.to_dict() if self.violation else None,
                "classification": self.classification.to_dict() if self.classification else None}


def _sym(M):
    return 0.5 * (M + M.T)


def _require_stable(C):
    if not is_stable(C):
        raise ControllerUnstable("controller has poles in the closed right half plane "
                                 "or on the imaginary axis")


def necessity_check(C, cls):
    """Evaluate the controller condition that characterizes robust stability for ``cls``."""
    _require_stable(C)
    if cls.kind is ClassKind.NI_noDoubleOriginPole:
        inner = necessity_check(C, UncertaintyClass(ClassKind.StrictlyProperNI))
        conds = dict(inner.controller_conditions)
        conds["a stable controller exists"] = False
        return NecessityVerdict(NecessityStatus.IMPOSSIBLE, cls, conds,
                                Violation("NonexistenceClass", None, None, np.nan),
                                inner.classification)

    cl = classify_ni(C)
    conds = {}
    violation = None

    member = cls.controller_membership
    if member == "SNI":
        ok = cl.is_sni
        conds["C is SNI"] = ok
        if not ok:
            w = cl.witness if cl.witness is not None else cl.sni_witness
            violation = Violation("NotSNI", w.omega0, w.x, float(w.defect))
    else:
        ok = cl.is_ni
        conds["C is NI"] = ok
        if not ok:
            w = cl.witness
            violation = Violation("NotNI", w.omega0, w.x, float(w.defect))

    g = gains(C)
    C0, Cinf = _sym(g.static_gain), _sym(g.instantaneous_gain)
    rel, bound = cls.controller_dc_bound()
    ev, V = np.linalg.eigh(C0)
    top = float(ev[-1])
    label = "0" if bound == 0.0 else "I/gamma"
    ok = top < bound - MARGIN if rel == "<" else top <= bound + MARGIN
    conds[f"C(0) {rel} {label}"] = bool(ok)
    if not ok and violation is None:
        violation = Violation("StaticGainBound", "Origin", V[:, -1], top - bound)

    if cls.controller_inst_nonneg:
        evi, Vi = np.linalg.eigh(Cinf)
        ok = evi[0] >= -MARGIN
        conds["C(inf) >= 0"] = bool(ok)
        if not ok and violation is None:
            violation = Violation("InstGainSign", "Infinity", Vi[:, 0], float(evi[0]))

    status = NecessityStatus.ROBUST if violation is None else NecessityStatus.VIOLATED
    return NecessityVerdict(status, cls, conds, violation, cl)


# --------------------------------------------------------------------------
# recipes
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class CounterexampleRecipe:
    """A destabilizing plant together with the data it was built from.

    ``pin`` names how the loop is broken: "frequency" (I - P C singular at
    j omega0), "resonance" (closed-loop pole at j omega0), "origin"
    (I - P(0) C(0) singular), "origin-pole" (closed-loop pole at 0) or
    "infinity" (I - P(inf) C(inf) singular).
    """

    recipe_kind: str
    plant: TransferMatrix
    pin: str
    omega0: float = None
    x: np.ndarray = None
    r: float = None
    theta: float = None
    alpha: np.ndarray = None
    beta: np.ndarray = None
    catalog_param: dict = None
    epsilon: float = None
    M: np.ndarray = None
    U: np.ndarray = None
    D: np.ndarray = None
    E0: np.ndarray = None
    lossless: dict = None
    gamma_used: float = None
    witness_omega0: float = None
    regularization: dict = None
    violation_kind: str = None

    def to_dict(self):
        from .io import system_to_dict

        def arr(v):
            if v is None:
                return None
            v = np.asarray(v)
            if np.iscomplexobj(v):
                return {"re": v.real.tolist(), "im": v.imag.tolist()}
            return v.tolist()

        return {
            "recipe_kind": self.recipe_kind, "pin": self.pin, "omega0": self.omega0,
            "x": arr(self.x), "r": self.r, "theta": self.theta,
            "alpha": arr(self.alpha), "beta": arr(self.beta),
            "catalog_param": self.catalog_param, "epsilon": self.epsilon,
            "M": arr(self.M), "U": arr(self.U), "D": arr(self.D), "E0": arr(self.E0),
            "lossless": self.lossless, "gamma_used": self.gamma_used,
            "witness_omega0": self.witness_omega0, "regularization": self.regularization,
            "violation_kind": self.violation_kind,
            "plant": system_to_dict(self.plant),
        }


def _outer_poly_plant(alpha, beta, scalar):
    """f(s) q(s) f(-s)^T with f(s) = alpha s + beta and scalar rational q."""
    n = len(alpha)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            # (a_i s + b_i)(b_j - a_j s)
            poly = [beta[i] * beta[j], alpha[i] * beta[j] - beta[i] * alpha[j],
                    -alpha[i] * alpha[j]]
            row.append(scalar * RationalFunction(poly))
        rows.append(row)
    return TransferMatrix(rows)


def _split(x, w0):
    x = np.asarray(x, dtype=complex)
    return x.real.copy(), x.imag / w0


def catalog_interval(theta, w0, r, beta2, gamma):
    """Name and open interval of the free parameter for angle ``theta``.

    Returns (name, lo, hi); hi may be inf.
    """
    if theta == 0.0:
        hi = w0 * np.sqrt(beta2 / (beta2 - gamma * r)) if beta2 > gamma * r else np.inf
        return "a", w0, hi
    if theta == np.pi:
        return "b", w0 * np.sqrt(beta2 / (beta2 + gamma * r)), w0
    if theta == np.pi / 2:
        return "c", 0.0, gamma * r * w0 / beta2
    ct = np.cos(theta)
    if theta < np.pi / 2:
        bound = beta2 - gamma * r * ct
        hi = w0 * np.sqrt(beta2 / bound) if bound > 0 else np.inf
        return "d", w0, hi
    return "e", w0 * np.sqrt(beta2 / (beta2 - gamma * r * ct)), w0


def _interior(name, lo, hi, w0):
    """Midpoint (in the squared variable for the frequency parameters)."""
    if name == "c":
        return 0.5 * (lo + hi) if np.isfinite(hi) else (2.0 * lo if lo > 0 else w0)
    if not np.isfinite(hi):
        return 2.0 * lo if lo > 0 else w0
    return float(np.sqrt(0.5 * (lo * lo + hi * hi)))


def catalog_p(theta, w0, r, name, v):
    """Scalar second-order p(s) with p(j w0) r e^{j theta} = 1."""
    if name == "a":
        return RationalFunction([(v * v - w0 * w0) / r], [v * v, 0.0, 1.0])
    if name == "b":
        return RationalFunction([(w0 * w0 - v * v) / r], [v * v, 0.0, 1.0])
    if name == "c":
        return RationalFunction([v * w0 / r], [w0 * w0, v, 1.0])
    k = (v * v - w0 * w0)
    return RationalFunction([k / np.cos(theta) / r], [v * v, k * np.tan(theta) / w0, 1.0])


def lossless_N(alpha, w0):
    """k s / (s^2 + w1^2) alpha alpha^T with w1 = w0/2 and N(j w0) = -j alpha alpha^T."""
    alpha = np.asarray(alpha, dtype=float)
    w1 = 0.5 * w0
    k = (w0 * w0 - w1 * w1) / w0
    N = TransferMatrix.scalar(RationalFunction([0.0, k], [w1 * w1, 0.0, 1.0]),
                              np.outer(alpha, alpha))
    return N, {"omega1": w1, "k": k}


def _snap_theta(z):
    th = float(np.angle(z))
    for target in (0.0, np.pi / 2, np.pi):
        if abs(th - target) < ANGLE_SNAP:
            return target
    if abs(th + np.pi) < ANGLE_SNAP:
        return np.pi
    if not 0.0 <= th <= np.pi:
        raise NotSynthesizable(f"witness angle {th:.3g} lies outside [0, pi]")
    return th


def _prefer_real(C, w0, x, strict):
    """Replace x by a real vector violating the same inequality, when one exists."""
    Cj = C(1j * w0)
    H = 1j * (Cj - Cj.conj().T)
    Hr = _sym(H.real)
    ev, V = np.linalg.eigh(Hr)
    scale = 1.0 + np.linalg.norm(H, 2)
    if (ev[0] < -1e-12 * scale) if strict else (ev[0] <= 1e-12 * scale):
        return _phase_normalize(V[:, 0].astype(complex))
    return _phase_normalize(x)


def build_plant(recipe):
    """Rebuild the plant of a frequency recipe from its stored parameters."""
    a, b, w0 = recipe.alpha, recipe.beta, recipe.witness_omega0 or recipe.omega0
    if recipe.recipe_kind == "ResonantRankOne_eps":
        q = RationalFunction([recipe.epsilon], [w0 * w0, 0.0, 1.0])
        P = _outer_poly_plant(a, b, q)
    elif recipe.recipe_kind == "CatalogSecondOrder":
        (name, v), = recipe.catalog_param.items()
        P = _outer_poly_plant(a, b, catalog_p(recipe.theta, w0, recipe.r, name, v))
    else:
        raise ValueError(f"{recipe.recipe_kind} is not rebuilt from parameters")
    reg = recipe.regularization
    if reg:
        P = P + np.asarray(reg["shift"])
        if reg["delta"]:
            P = P + TransferMatrix.scalar(RationalFunction([reg["delta"]], [1.0, 1.0]),
                                          np.eye(P.n))
        P = P * reg["kappa"]
    return P


def _track_crossings(Pb, C, w0):
    """Frequencies where an eigenvalue of Pb(jw) C(jw) crosses the positive real axis."""
    w = np.unique(np.concatenate([np.geomspace(w0 / 100, w0 * 100, 4001), [w0]]))
    with np.errstate(all="ignore"):
        M = Pb.freqresp(w) @ C.freqresp(w)
    finite = np.all(np.isfinite(M), axis=(1, 2))
    lam = np.full((w.size, Pb.n), np.nan, dtype=complex)
    lam[finite] = np.linalg.eigvals(M[finite])

    def eig_at(om):
        return np.linalg.eigvals(Pb(1j * om) @ C(1j * om))

    out = []
    for i in range(w.size - 1):
        if not (finite[i] and finite[i + 1]):
            continue
        for a in lam[i]:
            bvals = lam[i + 1]
            b = bvals[np.argmin(np.abs(bvals - a))]
            if a.real <= 0 or b.real <= 0 or np.sign(a.imag) == np.sign(b.imag):
                continue
            lo, hi, cur = w[i], w[i + 1], a
            for _ in range(80):
                mid = np.sqrt(lo * hi)
                ev = eig_at(mid)
                m = ev[np.argmin(np.abs(ev - cur))]
                if np.sign(m.imag) == np.sign(cur.imag):
                    lo, cur = mid, m
                else:
                    hi = mid
                if hi / lo - 1.0 < 1e-15:
                    break
            ev = eig_at(lo)
            m = ev[np.argmin(np.abs(ev - cur))]
            if m.real > 0:
                out.append((float(lo), float(m.real)))
    out.sort(key=lambda t: abs(np.log(t[0] / w0)))
    return out


def _repin(P, C, cls, w0, need_shift, need_sni, base):
    """Move a rank-one catalog plant into the class and re-pin it.

    The plant is shifted by -P(inf) (when P(inf) >= 0 or strict properness
    is required) and/or augmented by delta I/(s+1) (when SNI is required
    for n >= 2).  Because both changes break the original pinning, a new
    frequency w1 is located where an eigenvalue of Pb C is real and
    positive, and the plant is scaled by kappa = 1/lambda so that
    I - kappa Pb(j w1) C(j w1) is singular.
    """
    n = P.n
    shift = -P.at_infinity() if need_shift else np.zeros((n, n))
    P0 = np.real(np.array([[e.num.coeffs[0] / e.den.coeffs[0] for e in row]
                           for row in P.entries])) + shift
    top = float(np.linalg.eigvalsh(_sym(P0))[-1])
    if cls.dc_bound is not None:
        delta0 = 0.1 * max(cls.gamma - top, 1e-3 * cls.gamma)
    else:
        delta0 = 0.1 * max(abs(top), 1e-3)
    deltas = [delta0 / 2 ** k for k in range(10)] if need_sni else [0.0]
    for delta in deltas:
        Pb = P + shift
        if delta:
            Pb = Pb + TransferMatrix.scalar(RationalFunction([delta], [1.0, 1.0]), np.eye(n))
        for w1, lam in _track_crossings(Pb, C, w0)[:4]:
            kappa = 1.0 / lam
            cand = Pb * kappa
            ok, _, _ = class_membership(cand, cls)
            if ok:
                reg = {"shift": shift.tolist(), "delta": delta, "kappa": kappa}
                return replace(base, plant=cand, omega0=w1, pin="frequency", regularization=reg)
    raise NotSynthesizable("could not move the rank-one construction into the class "
                           "while keeping a singular return difference")


def _frequency_recipe(C, cls, violation, gamma):
    w0 = float(violation.omega0)
    strict = violation.kind == "NotNI"
    n = C.n
    Cj = C(1j * w0)
    sv = np.linalg.svd(Cj, compute_uv=False)

    # singular C(j w0): resonant plant plus a lossless term (integrator-free)
    if cls.kind in (ClassKind.StrictlyProperNI, ClassKind.NI_noDoubleOriginPole) \
            and sv[-1] <= 1e-9 * (1.0 + sv[0]):
        Uc, _, _ = np.linalg.svd(Cj)
        x = _phase_normalize(Uc[:, -1])
        beta, alpha = _split(x, w0)
        G = _outer_poly_plant(alpha, beta, RationalFunction([1.0], [w0 * w0, 0.0, 1.0]))
        _, info = lossless_N(alpha, w0)
        # (w0/s) N(s) = w0 k / (s^2 + w1^2) alpha alpha^T, the s cancels exactly
        wN = TransferMatrix.scalar(
            RationalFunction([w0 * info["k"]], [info["omega1"] ** 2, 0.0, 1.0]),
            np.outer(alpha, alpha))
        Pl = G - G.at_infinity() + wN
        return CounterexampleRecipe("ResonantPlusLossless", Pl, "resonance", omega0=w0, x=x,
                                    alpha=alpha, beta=beta, lossless=info,
                                    witness_omega0=w0, violation_kind=violation.kind)

    x = _prefer_real(C, w0, violation.x, strict)
    beta, alpha = _split(x, w0)
    z = complex(x.conj() @ Cj @ x)
    b2 = float(beta @ beta)
    real_x = not np.any(alpha)
    need_shift = (not real_x) and (cls.inst_nonneg or cls.strictly_proper)
    need_sni = cls.family == "SNI" and n > 1

    if abs(z) <= 1e-9 * max(1.0, sv[0]):
        if cls.family == "SNI":
            raise NotSynthesizable("x* C(j w0) x = 0 cannot occur for a strict NI violation")
        eps = min(gamma * w0 * w0 / (2.0 * b2), 1.0)
        P = _outer_poly_plant(alpha, beta, RationalFunction([eps], [w0 * w0, 0.0, 1.0]))
        rec = CounterexampleRecipe("ResonantRankOne_eps", P, "resonance", omega0=w0, x=x,
                                   alpha=alpha, beta=beta, epsilon=eps, gamma_used=gamma,
                                   witness_omega0=w0, violation_kind=violation.kind)
    else:
        r = abs(z)
        theta = _snap_theta(z)
        if cls.family == "SNI" and theta in (0.0, np.pi):
            raise NotSynthesizable("witness angle is 0 or pi; a strict violation needs (0, pi)")
        name, lo, hi = catalog_interval(theta, w0, r, b2, gamma)
        v = _interior(name, lo, hi, w0)
        safe = 0.0 if name == "c" else w0
        for _ in range(60):
            p = catalog_p(theta, w0, r, name, v)
            P = _outer_poly_plant(alpha, beta, p)
            p0 = b2 * p(0.0).real
            if cls.dc_bound is None or p0 < gamma * (1.0 - 1e-12):
                break
            v = 0.5 * (v + safe) if name == "c" else float(np.sqrt(0.5 * (v * v + safe * safe)))
        rec = CounterexampleRecipe("CatalogSecondOrder", P, "frequency", omega0=w0, x=x, r=r,
                                   theta=theta, alpha=alpha, beta=beta,
                                   catalog_param={name: v}, gamma_used=gamma,
                                   witness_omega0=w0, violation_kind=violation.kind)
    if need_shift or need_sni:
        return _repin(rec.plant, C, cls, w0, need_shift, need_sni, rec)
    return rec


def _static_recipe(C, cls, violation):
    n = C.n
    C0 = _sym(gains(C).static_gain)
    ev, V = np.linalg.eigh(C0)
    order = np.argsort(ev)[::-1]
    ev, U = ev[order], V[:, order]
    d11 = float(ev[0])
    u = U[:, :1]
    lag = RationalFunction([1.0], [1.0, 1.0])
    kind = cls.kind
    if kind in (ClassKind.StrictlyProperNI, ClassKind.NI_noDoubleOriginPole):
        if d11 > MARGIN:
            M = (u @ u.T) / d11
            return CounterexampleRecipe("SchurFirstOrder", TransferMatrix.scalar(lag, M), "origin",
                                        M=M, U=U, D=np.diag(ev), violation_kind=violation.kind)
        E0 = C.derivative_at_zero()
        a = 1.0 / (2.0 * (np.linalg.norm(E0, 2) + 1.0))
        M = a * (u @ u.T)
        P = TransferMatrix.scalar(RationalFunction([1.0], [0.0, 1.0]), M)
        return CounterexampleRecipe("SchurIntegrator", P, "origin-pole", M=M, U=U,
                                    D=np.diag(ev), E0=E0, violation_kind=violation.kind)
    if kind is ClassKind.SNI_instNonneg:
        M = (u @ u.T) / d11 + (np.eye(n) - u @ u.T)
        return CounterexampleRecipe("SchurFirstOrder", TransferMatrix.scalar(lag, M), "origin",
                                    M=M, U=U, D=np.diag(ev), violation_kind=violation.kind)
    if cls.family == "N0":
        M = np.eye(n) / d11
        return CounterexampleRecipe("SchurConstant", TransferMatrix.constant(M), "origin",
                                    M=M, U=U, D=np.diag(ev), violation_kind=violation.kind)
    M = np.eye(n) / d11
    return CounterexampleRecipe("SchurFirstOrder", TransferMatrix.scalar(lag, M), "origin",
                                M=M, U=U, D=np.diag(ev), violation_kind=violation.kind)


def synthesize_destabilizer(C, cls, verdict=None):
    """Build an in-class plant that destabilizes C, from the violated condition."""
    if verdict is None:
        verdict = necessity_check(C, cls)
    if verdict.status is NecessityStatus.ROBUST:
        raise PreconditionViolated("controller satisfies the class condition; nothing to attack")
    n = C.n
    gamma = cls.gamma if cls.gamma is not None else 1.0

    if verdict.status is NecessityStatus.IMPOSSIBLE:
        inner = necessity_check(C, UncertaintyClass(ClassKind.StrictlyProperNI))
        if inner.status is NecessityStatus.ROBUST:
            C0 = _sym(gains(C).static_gain)
            M = np.linalg.inv(C0)
            return CounterexampleRecipe("InverseStaticGain", TransferMatrix.constant(M), "origin",
                                        M=M, violation_kind="NonexistenceClass")
        verdict = inner

    v = verdict.violation
    if v.kind in ("NotSNI", "NotNI"):
        if not isinstance(v.omega0, (float, int, np.floating)):
            raise NotSynthesizable(f"no finite witness frequency ({v.omega0})")
        return _frequency_recipe(C, cls, v, gamma)
    if v.kind == "StaticGainBound":
        return _static_recipe(C, cls, v)
    if v.kind == "InstGainSign":
        Cinf = _sym(gains(C).instantaneous_gain)
        lo = float(np.linalg.eigvalsh(Cinf)[0])
        P = TransferMatrix.scalar(RationalFunction([0.0, 1.0 / lo], [1.0, 1.0]), np.eye(n))
        return CounterexampleRecipe("InstGainLag", P, "infinity", violation_kind=v.kind)
    raise NotSynthesizable(f"no construction for violation {v.kind}")


# --------------------------------------------------------------------------
# verification
# --------------------------------------------------------------------------

def _pin_value(recipe, C):
    P = recipe.plant
    n = P.n
    I = np.eye(n)
    smin = lambda M: float(np.linalg.svd(M, compute_uv=False)[-1])
    if recipe.pin == "frequency":
        s = 1j * recipe.omega0
        return smin(I - P(s) @ C(s))
    if recipe.pin == "origin":
        g = gains(P)
        return smin(I - g.static_gain @ gains(C).static_gain)
    if recipe.pin == "infinity":
        return smin(I - P.at_infinity() @ C.at_infinity())
    ev = close_loop(P, C).eigenvalues()
    target = 0.0 if recipe.pin == "origin-pole" else 1j * recipe.omega0
    return float(np.min(np.abs(ev - target))) if ev.size else np.inf


def verify_counterexample(recipe, C, cls):
    """Check membership, the pinned singularity and closed-loop instability.

    Returns a report dict; raises VerificationFailed naming the failed clause.
    """
    ok, reason, cl = class_membership(recipe.plant, cls)
    if not ok:
        raise VerificationFailed("class membership", reason)
    try:
        pin = _pin_value(recipe, C)
    except Exception as exc:    # evaluation at a pole etc.
        raise VerificationFailed("pin", str(exc)) from exc
    if not pin < PIN_TOL:
        raise VerificationFailed("pin", f"pinned singularity residual {pin:.3g} >= {PIN_TOL}")
    verdict = oracle_stability(recipe.plant, C)
    if verdict.status is Status.STABLE:
        raise VerificationFailed("oracle", "closed loop is stable")
    return {"membership": True, "plant_verdict": str(cl.verdict), "pin": recipe.pin,
            "pin_residual": pin, "oracle": verdict.to_dict(), "verified": True}


# --------------------------------------------------------------------------
# sufficiency
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SufficiencyReport:
    cls: UncertaintyClass
    samples: int
    stable: int
    lemma4_stable: int = None
    worst_real_part: float = None
    seed: int = 0
    modes: int = 3

    def to_dict(self):
        return {"class": self.cls.to_dict(), "samples": self.samples, "stable": self.stable,
                "lemma4_stable": self.lemma4_stable, "worst_real_part": self.worst_real_part,
                "seed": self.seed, "modes": self.modes,
                "coverage": "relative to the modal-sum sampler family"}


def sufficiency_check(C, cls, samples, seed, modes=3):
    """Sample in-class plants and confirm every closed loop is stable."""
    verdict = necessity_check(C, cls)
    if verdict.status is not NecessityStatus.ROBUST:
        raise PreconditionViolated("controller does not satisfy the class condition")
    children = np.random.SeedSequence(seed).spawn(samples)
    seeds = [int(c.generate_state(1, dtype=np.uint64)[0]) for c in children]
    C0 = _sym(gains(C).static_gain)
    replay = cls.kind is ClassKind.StrictlyProperNI

    def one(sd):
        m = 1 + int(np.random.default_rng(sd).integers(modes))
        P = sample_plant(SampleSpec(cls, C.n, m, sd))
        v = oracle_stability(P, C)
        l4 = lemma4_check(P, C, psi=C0, pre=False).status if replay else None
        return P, v, l4

    results = pmap(one, seeds)
    stable = l4ok = 0
    worst = -np.inf
    for P, v, l4 in results:
        if v.status is not Status.STABLE:
            raise SufficiencyCounterexampleFound(
                f"in-class plant gives {v.status} (pole {v.offending_pole})", P)
        stable += 1
        worst = max(worst, v.conditions.get("max_real_part", -np.inf))
        if replay:
            if l4 is not Status.STABLE:
                raise SufficiencyCounterexampleFound("lemma4_check with psi = C(0) is not Stable", P)
            l4ok += 1
    return SufficiencyReport(cls, samples, stable, l4ok if replay else None, worst, seed, modes)
