"""Negative-imaginary, strictly-NI and positive-real membership tests.

Frequency-domain conditions are checked on a log-spaced grid with local
refinement.  The quantity compared against ``tol`` is the smallest
eigenvalue of ``j(G - G*)`` divided by ``|G(jw) - G(inf)|`` and weighted by
``w + 1/w``; the weight undoes the generic low/high-frequency decay of the
imaginary part so that strictly NI systems do not look marginal at the ends
of the grid.
"""

import enum
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .exceptions import LimitDiverges, NotStable
from .lti import AXIS_TOL, POLE_AT_ORIGIN, gains, poles, scaled_origin_limit

__all__ = ["Verdict", "Witness", "NIClassification", "GridSpec", "classify_ni",
           "is_positive_real", "is_output_strictly_passive", "replay_witness",
           "is_stable", "ni_margin"]

TOL = 1e-9
NOISE_RTOL = 1e-12


class Verdict(str, enum.Enum):
    NOT_NI = "NotNI"
    NI = "NI"
    SNI = "SNI"

    def __str__(self):
        return self.value


@dataclass(frozen=True)
class GridSpec:
    omega_min: float = 1e-6
    omega_max: float = 1e6
    points: int = 400
    refine: int = 8

    def base(self):
        return np.logspace(np.log10(self.omega_min), np.log10(self.omega_max), self.points)

    def to_dict(self):
        return {"omega_min": self.omega_min, "omega_max": self.omega_max,
                "points": self.points, "refine": self.refine}


@dataclass(frozen=True)
class Witness:
    """Where a defining inequality fails (or is tightest).

    ``omega0`` is a frequency in (0, inf), or the strings "Origin" /
    "Infinity", or None for the open-RHP pole clause.  ``defect`` is the
    value of the violated quantity, e.g. ``x* j(G - G*) x`` at ``omega0``.
    """

    clause: str
    omega0: object
    x: np.ndarray
    defect: float

    def to_dict(self):
        d = {"clause": self.clause, "omega0": self.omega0, "defect": self.defect}
        if self.x is not None:
            d["x_re"] = np.real(self.x).tolist()
            d["x_im"] = np.imag(self.x).tolist()
        return d


@dataclass(frozen=True)
class NIClassification:
    verdict: Verdict
    witness: Witness = None
    marginal_poles: list = field(default_factory=list)
    sni_witness: Witness = None     # tightest point when verdict is NI
    min_margin: float = np.nan      # smallest normalized eigenvalue on the grid
    grid: GridSpec = None
    tol: float = TOL
    checked_points: int = 0

    @property
    def is_ni(self):
        return self.verdict in (Verdict.NI, Verdict.SNI)

    @property
    def is_sni(self):
        return self.verdict is Verdict.SNI

    def to_dict(self):
        return {
            "verdict": str(self.verdict),
            "witness": self.witness.to_dict() if self.witness else None,
            "sni_witness": self.sni_witness.to_dict() if self.sni_witness else None,
            "marginal_poles": [{"re": p.location.real, "im": p.location.imag,
                                "multiplicity": p.multiplicity} for p in self.marginal_poles],
            "min_margin": self.min_margin,
            "grid": self.grid.to_dict() if self.grid else None,
            "checked_points": self.checked_points,
            "tol": self.tol,
        }


def _phase_normalize(x):
    x = np.asarray(x, dtype=complex)
    x = x / np.linalg.norm(x)
    idx = np.nonzero(np.abs(x) > 1e-12)[0]
    if idx.size:
        x = x * (abs(x[idx[0]]) / x[idx[0]])
    return x


class _Response:
    """Batched evaluation of the strictly proper part of G on the axis."""

    def __init__(self, G):
        self.G = G
        self.n = G.n
        self.Ginf = G.at_infinity()
        self.sp = [[e - self.Ginf[i, j] for j, e in enumerate(row)]
                   for i, row in enumerate(G.entries)]
        skew = self.Ginf - self.Ginf.T
        # a rounding-level asymmetry of the feedthrough is not a violation
        if np.linalg.norm(skew, 2) <= 1e-12 * (1.0 + np.linalg.norm(self.Ginf, 2)):
            skew = np.zeros_like(skew)
        self.skew = 1j * skew
        self.floor = 1e-14 * (1.0 + np.linalg.norm(self.Ginf, 2)) + np.linalg.norm(skew, 2)

    def strictly_proper(self, omega):
        s = 1j * np.atleast_1d(omega)
        out = np.empty((s.size, self.n, self.n), dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            for i, row in enumerate(self.sp):
                for j, e in enumerate(row):
                    out[:, i, j] = e(s)
        return out

    def ni_margin(self, omega):
        """(normalized margin, raw lambda_min, eigenvector) per frequency."""
        omega = np.atleast_1d(np.asarray(omega, dtype=float))
        Gsp = self.strictly_proper(omega)
        H = 1j * (Gsp - np.conj(np.swapaxes(Gsp, 1, 2))) + self.skew
        H = 0.5 * (H + np.conj(np.swapaxes(H, 1, 2)))
        lam, V = np.linalg.eigh(H)
        scale = np.linalg.norm(Gsp, ord=2, axis=(1, 2)) + self.floor
        # eigenvalues at rounding level are zero; the frequency weight below
        # would otherwise amplify them at the ends of the grid
        noise = NOISE_RTOL * (scale + np.linalg.norm(self.Ginf, 2))
        lo = np.where(np.abs(lam[:, 0]) <= noise, 0.0, lam[:, 0])
        m = lo / scale * (omega + 1.0 / omega)
        return m, lam[:, 0], V[:, :, 0]


def replay_witness(G, witness):
    """Recompute ``x* j(G(jw0) - G(jw0)*) x`` for a frequency witness."""
    w = float(witness.omega0)
    Gw = G.freqresp([w])[0]
    x = witness.x
    return float(np.real(x.conj() @ (1j * (Gw - Gw.conj().T)) @ x))


def _frequency_grid(grid, axis_freqs):
    base = grid.base()
    extra = []
    for wp in axis_freqs:
        for k in range(1, 6):
            extra += [wp * (1 - 10.0 ** -k), wp * (1 + 10.0 ** -k)]
    # w = 1 is always sampled so that ties resolve to it exactly
    w = np.unique(np.concatenate([base, np.asarray(extra, dtype=float), [1.0]]))
    w = w[(w > 0)]
    for wp in axis_freqs:
        w = w[np.abs(w - wp) > 1e-7 * wp]
    return w


def _local_minima(v):
    idx = [i for i in range(len(v))
           if (i == 0 or v[i] <= v[i - 1]) and (i == len(v) - 1 or v[i] <= v[i + 1])]
    return sorted(idx, key=lambda i: v[i])


def _refine(fun, w, v, count):
    """Polish the ``count`` lowest local minima of v(w) by bounded search in log w."""
    pts, vals = [], []
    for i in _local_minima(v)[:count]:
        lo = np.log10(w[max(i - 1, 0)])
        hi = np.log10(w[min(i + 1, len(w) - 1)])
        if hi - lo < 1e-12:
            continue
        res = minimize_scalar(lambda t: float(fun(10.0 ** t)), bounds=(lo, hi),
                              method="bounded", options={"xatol": 1e-10})
        if res.success:
            pts.append(10.0 ** res.x)
            vals.append(float(res.fun))
    return np.asarray(pts), np.asarray(vals)


def _pick_near_one(w, v, vmin, tol):
    """Among points within tol of the minimum, prefer the one closest to w = 1."""
    cand = np.nonzero(v <= vmin + tol)[0]
    return cand[np.argmin(np.abs(np.log10(w[cand])))]


def ni_margin(G, omega):
    """Normalized NI margin at given frequencies (see module docstring)."""
    return _Response(G).ni_margin(omega)[0]


# module-wide defaults, read at call time so a front end can override them
DEFAULT_GRID = GridSpec()


def _defaults(grid, tol):
    return (DEFAULT_GRID if grid is None else grid), (TOL if tol is None else tol)


def classify_ni(G, grid=None, tol=None):
    """Classify G as NotNI, NI or SNI.

    The clauses are checked in order: open right half-plane poles,
    frequency inequality, simple imaginary poles with Hermitian PSD
    residue of jG, and the origin conditions (lim s^2 G >= 0, s^3 G -> 0).
    A NotNI verdict carries a replayable witness.
    """
    grid, tol = _defaults(grid, tol)
    pl = poles(G)
    marginal = [p for p in pl if p.on_axis]
    common = dict(marginal_poles=marginal, grid=grid, tol=tol)

    # (i) open right half plane
    for p in pl:
        if p.location.real > 0 and not p.on_axis:
            return NIClassification(Verdict.NOT_NI, Witness("i", None, None, -p.location.real),
                                    **common)

    # (iii) imaginary-axis poles away from the origin
    axis_freqs = []
    for p in marginal:
        w0 = p.location.imag
        if abs(p.location) <= AXIS_TOL:
            continue
        if w0 > 0:
            axis_freqs.append(w0)
        if w0 <= 0:
            continue
        if p.multiplicity > 1:
            return NIClassification(Verdict.NOT_NI, Witness("iii", w0, None, -np.inf), **common)
        K = 1j * p.residue_matrix
        scale = 1.0 + np.linalg.norm(K, 2)
        if np.linalg.norm(K - K.conj().T, 2) > 1e-8 * scale:
            return NIClassification(Verdict.NOT_NI,
                                    Witness("iii", w0, None, -np.linalg.norm(K - K.conj().T, 2)),
                                    **common)
        lam, V = np.linalg.eigh(0.5 * (K + K.conj().T))
        if lam[0] < -tol * scale:
            return NIClassification(Verdict.NOT_NI,
                                    Witness("iii", w0, _phase_normalize(V[:, 0]), float(lam[0])),
                                    **common)

    # (iv) the origin
    has_origin = any(abs(p.location) <= AXIS_TOL for p in marginal)
    if has_origin:
        try:
            L2 = scaled_origin_limit(G, 2)
            scaled_origin_limit(G, 3)
        except LimitDiverges:
            return NIClassification(Verdict.NOT_NI, Witness("iv", "Origin", None, -np.inf), **common)
        scale = 1.0 + np.linalg.norm(L2, 2)
        if np.linalg.norm(L2 - L2.T, 2) > 1e-8 * scale:
            return NIClassification(Verdict.NOT_NI,
                                    Witness("iv", "Origin", None, -np.linalg.norm(L2 - L2.T, 2)),
                                    **common)
        lam, V = np.linalg.eigh(0.5 * (L2 + L2.T))
        if lam[0] < -tol * scale:
            return NIClassification(Verdict.NOT_NI,
                                    Witness("iv", "Origin", _phase_normalize(V[:, 0]), float(lam[0])),
                                    **common)

    # (ii) frequency inequality
    resp = _Response(G)
    w = _frequency_grid(grid, axis_freqs)
    m, raw, V = resp.ni_margin(w)
    rw, rm = _refine(lambda t: resp.ni_margin(t)[0][0], w, m, grid.refine)
    if rw.size:
        w = np.concatenate([w, rw])
        m2, raw2, V2 = resp.ni_margin(rw)
        m, raw, V = np.concatenate([m, m2]), np.concatenate([raw, raw2]), np.concatenate([V, V2])
    order = np.argsort(w)
    w, m, raw, V = w[order], m[order], raw[order], V[order]
    mmin = float(np.min(m))
    checked = int(w.size)
    common.update(min_margin=mmin, checked_points=checked)

    if mmin < -tol:
        bad = m < -tol
        # witness: most negative raw eigenvalue inside the violating set
        wb, rb = w[bad], raw[bad]
        pw, pv = _refine(lambda t: resp.ni_margin(t)[1][0], wb, rb, grid.refine) \
            if wb.size > 2 else (np.zeros(0), np.zeros(0))
        cand_w = np.concatenate([wb, pw])
        cand_v = np.concatenate([rb, pv])
        keep = resp.ni_margin(cand_w)[0] < -tol if cand_w.size else cand_v < 0
        cand_w, cand_v = cand_w[keep], cand_v[keep]
        k = int(np.argmin(cand_v))
        w0 = float(cand_w[k])
        _, lam0, v0 = resp.ni_margin(w0)
        x = _phase_normalize(v0[0])
        wit = Witness("ii", w0, x, 0.0)
        wit = Witness("ii", w0, x, replay_witness(G, wit))
        return NIClassification(Verdict.NOT_NI, wit, **common)

    # NI.  Decide strictness.
    k = _pick_near_one(w, m, mmin, tol)
    x = _phase_normalize(V[k])
    sw = Witness("sni", float(w[k]), x, 0.0)
    sw = Witness("sni", float(w[k]), x, replay_witness(G, sw))
    if marginal:
        p0 = marginal[0].location
        sw = Witness("stability", abs(p0.imag) if abs(p0) > AXIS_TOL else "Origin", None, 0.0)
        return NIClassification(Verdict.NI, sni_witness=sw, **common)
    if mmin > tol:
        return NIClassification(Verdict.SNI, sni_witness=sw, **common)
    return NIClassification(Verdict.NI, sni_witness=sw, **common)


# --------------------------------------------------------------------------
# positive realness
# --------------------------------------------------------------------------

def is_stable(G, tol=AXIS_TOL):
    return all(p.location.real < -tol * (1.0 + abs(p.location)) for p in poles(G))


def is_positive_real(G, grid=None, tol=None, allow_lossless=False):
    """Check G(jw) + G(jw)* >= 0 for all w >= 0, including w = 0 and infinity.

    Returns ``(flag, witness)``.  G must be stable.  With
    ``allow_lossless`` simple imaginary-axis poles are admitted when their
    residues are Hermitian PSD (the classical positive-real definition
    that covers lossless elements).

    Raises
    ------
    NotStable
        If G has a pole with Re >= -1e-8 (and ``allow_lossless`` does not
        cover it).
    """
    grid, tol = _defaults(grid, tol)
    pl = poles(G)
    axis_freqs = []
    for p in pl:
        z = p.location
        if z.real < -AXIS_TOL * (1.0 + abs(z)):
            continue
        if not (allow_lossless and p.on_axis and p.multiplicity == 1):
            raise NotStable(f"pole at {z}")
        R = p.residue_matrix
        Rh = 0.5 * (R + R.conj().T)
        if (np.linalg.norm(R - R.conj().T, 2) > 1e-8 * (1 + np.linalg.norm(R, 2))
                or np.linalg.eigvalsh(Rh)[0] < -tol * (1 + np.linalg.norm(R, 2))):
            return False, Witness("residue", abs(z.imag), None, float(np.linalg.eigvalsh(Rh)[0]))
        if z.imag > 0:
            axis_freqs.append(z.imag)
    w = _frequency_grid(grid, axis_freqs)
    has_origin = any(abs(p.location) <= AXIS_TOL for p in pl)
    Ginf = G.at_infinity()

    def margin(omega):
        Gw = G.freqresp(omega)
        H = Gw + np.conj(np.swapaxes(Gw, 1, 2))
        lam, V = np.linalg.eigh(0.5 * (H + np.conj(np.swapaxes(H, 1, 2))))
        scale = 1.0 + np.linalg.norm(Gw, ord=2, axis=(1, 2))
        return lam[:, 0] / scale, lam[:, 0], V[:, :, 0]

    m, raw, V = margin(w)
    rw, _ = _refine(lambda t: margin(t)[0][0], w, m, grid.refine)
    if rw.size:
        m2, raw2, V2 = margin(rw)
        w, m, raw, V = (np.concatenate([w, rw]), np.concatenate([m, m2]),
                        np.concatenate([raw, raw2]), np.concatenate([V, V2]))
    ends = []
    if not has_origin:
        G0 = gains(G).static_gain
        if G0 is not POLE_AT_ORIGIN:
            ends.append((0.0, G0))
    ends.append(("Infinity", Ginf))
    for where, M in ends:
        H = M + M.conj().T
        lam, Ve = np.linalg.eigh(0.5 * (H + H.conj().T))
        if lam[0] / (1.0 + np.linalg.norm(M, 2)) < -tol:
            return False, Witness("pr", where, _phase_normalize(Ve[:, 0]), float(lam[0]))
    k = int(np.argmin(m))
    if m[k] < -tol:
        return False, Witness("pr", float(w[k]), _phase_normalize(V[k]), float(raw[k]))
    return True, None


def _osp_ratio(M):
    """Largest eps with M + M* >= eps M* M (restricted to the range of M)."""
    H = M + M.conj().T
    Q = M.conj().T @ M
    lam, U = np.linalg.eigh(Q)
    keep = lam > 1e-12 * max(lam[-1], 1e-300)
    if not np.any(keep):
        return np.inf
    Ur = U[:, keep]
    L = np.diag(1.0 / np.sqrt(lam[keep]))
    Hr = L @ Ur.conj().T @ H @ Ur @ L
    return float(np.linalg.eigvalsh(0.5 * (Hr + Hr.conj().T))[0])


def is_output_strictly_passive(G, grid=None, tol=None):
    """Return ``(flag, eps_star)`` with eps_star the largest feasible epsilon
    on the grid (including w = 0 and infinity)."""
    grid, tol = _defaults(grid, tol)
    if not is_stable(G):
        raise NotStable("output strict passivity requires a stable system")
    w = grid.base()
    Gw = G.freqresp(w)
    vals = [_osp_ratio(M) for M in Gw]
    vals.append(_osp_ratio(np.asarray(gains(G).static_gain, dtype=complex)))
    vals.append(_osp_ratio(G.at_infinity().astype(complex)))
    eps = float(np.min(vals))
    return eps > tol, eps
