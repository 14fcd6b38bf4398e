"""Rational transfer matrices, realizations and closed loops.

The rational representation is the source of truth: limits at the origin
and at infinity are read off polynomial coefficients.  State-space
realizations are built from it only where eigenvalues are needed (pole
locations and the closed-loop oracle).

Polynomial coefficients are stored in *ascending* powers of ``s``
throughout, matching the system JSON format.
"""

from dataclasses import dataclass, field

import numpy as np
import numpy.polynomial.polynomial as npoly
import scipy.linalg

from .exceptions import ComplexSpectrum, EvalAtPole, IllPosed, LimitDiverges

__all__ = [
    "Polynomial", "RationalFunction", "TransferMatrix", "StateSpaceRealization",
    "GainData", "SpectralSummary", "PoleData", "POLE_AT_ORIGIN",
    "rational", "eval_at", "poles", "gains", "scaled_origin_limit",
    "minimal_realization", "close_loop", "spectral", "is_axis_pole",
]

# coefficients below this fraction of the largest one are rounding noise
COEFF_RTOL = 1e-13
# numerical rank threshold for Kalman reduction
RANK_RTOL = 1e-9
# residue rank cut; contour quadrature of high-degree entries carries ~1e-8 noise
REALIZATION_RTOL = 1e-7
# |Re p| below this (times 1 + |p|) puts a pole on the imaginary axis
AXIS_TOL = 1e-8
# relative distance at which roots are considered the same pole
ROOT_CLUSTER_RTOL = 1e-5


class _PoleAtOrigin:
    """Marker returned in place of a static gain that does not exist."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self):
        return "PoleAtOrigin"

    def __bool__(self):
        return False


POLE_AT_ORIGIN = _PoleAtOrigin()


def is_axis_pole(p, tol=AXIS_TOL):
    return abs(p.real) < tol * (1.0 + abs(p))


def _trim(c):
    c = np.atleast_1d(np.asarray(c, dtype=float)).copy()
    if c.size == 0:
        return np.zeros(1)
    if not np.all(np.isfinite(c)):
        raise ValueError("polynomial coefficients must be finite")
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return np.zeros(1)
    keep = np.nonzero(np.abs(c) > COEFF_RTOL * scale)[0]
    c = c[:keep[-1] + 1]
    return c


def _valuation(c, rtol=COEFF_RTOL):
    """Order of the zero at s = 0 (index of first significant coefficient)."""
    scale = np.max(np.abs(c))
    if scale == 0.0:
        return None
    return int(np.nonzero(np.abs(c) > rtol * scale)[0][0])


def _cluster_tol(k, rtol=ROOT_CLUSTER_RTOL):
    """Relative spread allowed for a k-fold root; rounding splits it by ~eps**(1/k)."""
    return max(rtol, 4.0 * np.finfo(float).eps ** (1.0 / k))


def _cluster(roots, rtol=ROOT_CLUSTER_RTOL):
    """Group numerically repeated roots.  Returns list of (center, count).

    For each root the largest k is taken such that k roots lie within the
    k-fold spread around it.  Distances are relative to the roots, so slow
    poles are not merged with the origin; the absolute floor scales with the
    largest root.
    """
    rest = sorted(np.atleast_1d(roots).astype(complex), key=lambda z: (z.real, z.imag))
    floor = 1e-13 * max((abs(z) for z in rest), default=0.0)
    groups = []
    while rest:
        r = rest[0]
        d = np.array([abs(q - r) for q in rest])
        take = [0]
        for k in range(len(rest), 1, -1):
            near = np.nonzero(d <= 2.0 * _cluster_tol(k, rtol) * abs(r) + floor)[0]
            if near.size >= k:
                take = list(near[np.argsort(d[near], kind="stable")][:k])
                break
        groups.append((complex(np.mean([rest[i] for i in take])), len(take)))
        rest = [q for i, q in enumerate(rest) if i not in take]
    return groups


def _polish(c, r, steps=3):
    """Newton refinement of isolated roots; companion eigenvalues of badly
    scaled polynomials can be off by ~1e-8 relative."""
    if r.size < 1:
        return r
    dc = npoly.polyder(c)
    out = r.copy()
    for k, z in enumerate(r):
        gap = np.min(np.abs(r[np.arange(r.size) != k] - z)) if r.size > 1 else np.inf
        for _ in range(steps):
            f, d = npoly.polyval(z, c), npoly.polyval(z, dc)
            if d == 0:
                break
            step = f / d
            if not abs(step) < 0.1 * gap or abs(npoly.polyval(z - step, c)) > abs(f):
                break
            z = z - step
        out[k] = z
    # keep conjugate symmetry exact
    real = np.abs(out.imag) <= 1e-14 * (1.0 + np.abs(out))
    out[real] = out[real].real
    return out


class Polynomial:
    """Real polynomial, coefficients in ascending powers of s.

    The zero polynomial has ``degree == -1``.
    """

    __slots__ = ("coeffs",)

    def __init__(self, coeffs):
        object.__setattr__(self, "coeffs", _trim(coeffs))
        self.coeffs.flags.writeable = False

    def __setattr__(self, name, value):
        raise AttributeError("Polynomial is immutable")

    @property
    def degree(self):
        if self.is_zero():
            return -1
        return len(self.coeffs) - 1

    def is_zero(self):
        return len(self.coeffs) == 1 and self.coeffs[0] == 0.0

    @property
    def leading(self):
        return self.coeffs[-1]

    def __call__(self, s):
        return npoly.polyval(s, self.coeffs)

    def __add__(self, other):
        return Polynomial(npoly.polyadd(self.coeffs, _as_poly(other).coeffs))

    __radd__ = __add__

    def __neg__(self):
        return Polynomial(-self.coeffs)

    def __sub__(self, other):
        return Polynomial(npoly.polysub(self.coeffs, _as_poly(other).coeffs))

    def __rsub__(self, other):
        return _as_poly(other) - self

    def __mul__(self, other):
        return Polynomial(npoly.polymul(self.coeffs, _as_poly(other).coeffs))

    __rmul__ = __mul__

    def __divmod__(self, other):
        q, r = npoly.polydiv(self.coeffs, _as_poly(other).coeffs)
        return Polynomial(q), Polynomial(r)

    def deriv(self, m=1):
        if self.degree < m:
            return Polynomial([0.0])
        return Polynomial(npoly.polyder(self.coeffs, m))

    def roots(self):
        if self.degree < 1:
            return np.zeros(0, dtype=complex)
        r = np.asarray(npoly.polyroots(self.coeffs), dtype=complex)
        return _polish(self.coeffs, r)

    def valuation(self):
        return _valuation(self.coeffs)

    def shift_down(self, k):
        """Divide by s**k, dropping the k lowest coefficients."""
        if k <= 0:
            return self
        return Polynomial(self.coeffs[k:] if len(self.coeffs) > k else [0.0])

    def __eq__(self, other):
        return (isinstance(other, Polynomial)
                and self.coeffs.shape == other.coeffs.shape
                and np.array_equal(self.coeffs, other.coeffs))

    def __hash__(self):
        return hash(self.coeffs.tobytes())

    def __repr__(self):
        return f"Polynomial({self.coeffs.tolist()})"


def _as_poly(x):
    if isinstance(x, Polynomial):
        return x
    return Polynomial(np.atleast_1d(np.asarray(x, dtype=float)))


def _poly_from_roots(roots):
    """Monic real polynomial with the given (conjugate-closed) roots."""
    c = np.array([1.0 + 0j])
    for r in roots:
        c = npoly.polymul(c, [-r, 1.0])
    return Polynomial(np.real(c))


class RationalFunction:
    """num(s) / den(s) with a monic denominator.

    Common factors ``s**k`` are cancelled on construction, other common
    factors only by :meth:`reduce`.
    """

    __slots__ = ("num", "den")

    def __init__(self, num, den=(1.0,)):
        num, den = _as_poly(num), _as_poly(den)
        if den.is_zero():
            raise ZeroDivisionError("zero denominator")
        if num.is_zero():
            num, den = Polynomial([0.0]), Polynomial([1.0])
        else:
            k = min(num.valuation(), den.valuation())
            if k > 0:
                num, den = num.shift_down(k), den.shift_down(k)
        lead = den.leading
        object.__setattr__(self, "num", Polynomial(num.coeffs / lead))
        object.__setattr__(self, "den", Polynomial(den.coeffs / lead))

    def __setattr__(self, name, value):
        raise AttributeError("RationalFunction is immutable")

    # --- evaluation -------------------------------------------------------
    def __call__(self, s):
        return self.num(s) / self.den(s)

    def is_proper(self):
        return self.num.degree <= self.den.degree

    def is_zero(self):
        return self.num.is_zero()

    @property
    def relative_degree(self):
        if self.num.is_zero():
            return np.inf
        return self.den.degree - self.num.degree

    def at_infinity(self):
        if self.num.degree < self.den.degree:
            return 0.0
        if self.num.degree == self.den.degree:
            return self.num.leading / self.den.leading
        raise ValueError("improper rational function has no value at infinity")

    def origin_order(self):
        """Order of the pole at s = 0 (negative for a zero, 0 if neither)."""
        if self.num.is_zero():
            return -np.inf
        return self.den.valuation() - self.num.valuation()

    def deriv(self):
        num = self.num.deriv() * self.den - self.num * self.den.deriv()
        return RationalFunction(num, self.den * self.den)

    def reduce(self, rtol=1e-7):
        """Cancel numerically common roots of numerator and denominator."""
        if self.num.degree < 1 or self.den.degree < 1:
            return self
        nr = list(self.num.roots())
        dr = self.den.roots()
        # relative match; the floor only lets exact zeros at the origin cancel
        floor = 1e-13 * max(np.max(np.abs(dr)), max((abs(z) for z in nr), default=0.0))
        common = []
        for d in dr:
            for i, z in enumerate(nr):
                if abs(z - d) <= rtol * max(abs(z), abs(d)) + floor:
                    common.append(0.5 * (z + d))
                    nr.pop(i)
                    break
        if not common:
            return self
        # keep the factor real: pair off conjugates
        fac = _poly_from_roots(_conj_closed(common))
        if fac.degree < 1:
            return self
        qn, _ = divmod(self.num, fac)
        qd, _ = divmod(self.den, fac)
        return RationalFunction(qn, qd)

    # --- arithmetic -------------------------------------------------------
    def __add__(self, other):
        other = _as_rational(other)
        if other.den == self.den:
            return RationalFunction(self.num + other.num, self.den)
        return RationalFunction(self.num * other.den + other.num * self.den,
                                self.den * other.den)

    __radd__ = __add__

    def __neg__(self):
        return RationalFunction(-self.num, self.den)

    def __sub__(self, other):
        return self + (-_as_rational(other))

    def __rsub__(self, other):
        return _as_rational(other) - self

    def __mul__(self, other):
        other = _as_rational(other)
        return RationalFunction(self.num * other.num, self.den * other.den)

    __rmul__ = __mul__

    def __truediv__(self, other):
        other = _as_rational(other)
        if other.is_zero():
            raise ZeroDivisionError("division by the zero rational function")
        return RationalFunction(self.num * other.den, self.den * other.num)

    def __rtruediv__(self, other):
        return _as_rational(other) / self

    def __repr__(self):
        return f"RationalFunction({self.num.coeffs.tolist()}, {self.den.coeffs.tolist()})"


def _conj_closed(roots):
    """Snap a list of roots to a conjugate-closed set."""
    out, pending = [], list(roots)
    while pending:
        r = pending.pop(0)
        if abs(r.imag) <= 1e-10 * (1.0 + abs(r)):
            out.append(complex(r.real, 0.0))
            continue
        j = min(range(len(pending)), key=lambda i: abs(pending[i] - np.conj(r)),
                default=None)
        if j is not None and abs(pending[j] - np.conj(r)) <= 1e-6 * (1.0 + abs(r)):
            pending.pop(j)
            out.extend([r, np.conj(r)])
        # an unpaired complex root cannot belong to a real factor; drop it
    return out


def _as_rational(x):
    if isinstance(x, RationalFunction):
        return x
    if isinstance(x, Polynomial):
        return RationalFunction(x)
    return RationalFunction([float(x)])


def rational(num, den=(1.0,)):
    """Shorthand: ``rational([1], [1, 1])`` is 1/(s+1) (ascending coeffs)."""
    return RationalFunction(num, den)


S = RationalFunction([0.0, 1.0])


class TransferMatrix:
    """Square matrix of proper real-rational transfer functions."""

    __slots__ = ("entries", "n")

    def __init__(self, entries):
        rows = [[_as_rational(e) for e in row] for row in entries]
        n = len(rows)
        if n == 0 or any(len(r) != n for r in rows):
            raise ValueError("transfer matrix must be square and non-empty")
        for row in rows:
            for e in row:
                if not e.is_proper():
                    raise ValueError(f"improper entry {e!r}")
        object.__setattr__(self, "entries", tuple(tuple(r) for r in rows))
        object.__setattr__(self, "n", n)

    def __setattr__(self, name, value):
        raise AttributeError("TransferMatrix is immutable")

    # --- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, M):
        M = np.atleast_2d(np.asarray(M, dtype=float))
        return cls([[RationalFunction([v]) for v in row] for row in M])

    @classmethod
    def scalar(cls, rf, M=None):
        """``rf(s) * M`` for a scalar rational function and real matrix M."""
        rf = _as_rational(rf)
        M = np.eye(1) if M is None else np.atleast_2d(np.asarray(M, dtype=float))
        return cls([[rf * float(v) if v != 0.0 else RationalFunction([0.0])
                     for v in row] for row in M])

    @classmethod
    def siso(cls, num, den=(1.0,)):
        return cls([[RationalFunction(num, den)]])

    @classmethod
    def zeros(cls, n):
        return cls.constant(np.zeros((n, n)))

    @classmethod
    def identity(cls, n):
        return cls.constant(np.eye(n))

    # --- evaluation -------------------------------------------------------
    def __call__(self, s):
        return eval_at(self, s)

    def freqresp(self, omega):
        """G(j omega) for an array of frequencies, shape (len(omega), n, n)."""
        s = 1j * np.atleast_1d(np.asarray(omega, dtype=float))
        out = np.empty((s.size, self.n, self.n), dtype=complex)
        with np.errstate(divide="ignore", invalid="ignore"):
            for i, row in enumerate(self.entries):
                for j, e in enumerate(row):
                    out[:, i, j] = e(s)
        return out

    def at_infinity(self):
        return np.array([[e.at_infinity() for e in row] for row in self.entries])

    def is_strictly_proper(self):
        return not np.any(self.at_infinity())

    def derivative_at_zero(self):
        """dG/ds at s = 0, by exact differentiation of each entry."""
        return np.array([[np.real(e.deriv()(0.0)) for e in row]
                         for row in self.entries])

    def reduce(self):
        return TransferMatrix([[e.reduce() for e in row] for row in self.entries])

    # --- arithmetic -------------------------------------------------------
    def _other(self, other):
        if isinstance(other, TransferMatrix):
            if other.n != self.n:
                raise ValueError("dimension mismatch")
            return other
        other = np.asarray(other, dtype=float)
        if other.ndim == 0:
            return TransferMatrix.constant(other * np.eye(self.n))
        return TransferMatrix.constant(other)

    def __add__(self, other):
        other = self._other(other)
        return TransferMatrix([[a + b for a, b in zip(r1, r2)]
                               for r1, r2 in zip(self.entries, other.entries)])

    __radd__ = __add__

    def __neg__(self):
        return TransferMatrix([[-e for e in row] for row in self.entries])

    def __sub__(self, other):
        return self + (-self._other(other))

    def __rsub__(self, other):
        return self._other(other) - self

    def __matmul__(self, other):
        other = self._other(other)
        n = self.n
        out = []
        for i in range(n):
            row = []
            for j in range(n):
                acc = RationalFunction([0.0])
                for k in range(n):
                    a, b = self.entries[i][k], other.entries[k][j]
                    if not (a.is_zero() or b.is_zero()):
                        acc = acc + a * b
                row.append(acc)
            out.append(row)
        return TransferMatrix(out)

    def __rmatmul__(self, other):
        return self._other(other) @ self

    def __mul__(self, scalar):
        if isinstance(scalar, (TransferMatrix, np.ndarray)):
            raise TypeError("use @ for matrix products")
        return TransferMatrix([[e * scalar for e in row] for row in self.entries])

    __rmul__ = __mul__

    @property
    def T(self):
        return TransferMatrix([[self.entries[j][i] for j in range(self.n)]
                               for i in range(self.n)])

    def __repr__(self):
        return f"TransferMatrix(n={self.n}, entries={[list(r) for r in self.entries]!r})"


def eval_at(G, s, rtol=1e-12):
    """Evaluate G(s) entrywise; raises EvalAtPole at a pole of any entry."""
    s = complex(s)
    out = np.empty((G.n, G.n), dtype=complex)
    for i, row in enumerate(G.entries):
        for j, e in enumerate(row):
            d = e.den(s)
            if abs(d) <= rtol * np.linalg.norm(e.den.coeffs):
                # a common factor may still cancel the pole
                r = e.reduce()
                d = r.den(s)
                if abs(d) <= rtol * np.linalg.norm(r.den.coeffs):
                    raise EvalAtPole(f"s={s} is a pole of entry ({i}, {j})")
                e = r
            out[i, j] = e.num(s) / d
    return out


# --------------------------------------------------------------------------
# gains, limits, poles
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class GainData:
    static_gain: object          # ndarray, or POLE_AT_ORIGIN
    instantaneous_gain: np.ndarray

    @property
    def has_origin_pole(self):
        return self.static_gain is POLE_AT_ORIGIN


def gains(G):
    """Static gain G(0) (or the PoleAtOrigin marker) and G(infinity)."""
    inst = G.at_infinity()
    for row in G.entries:
        for e in row:
            if e.origin_order() > 0:
                return GainData(POLE_AT_ORIGIN, inst)
    static = np.array([[e.num.coeffs[0] / e.den.coeffs[0] for e in row]
                       for row in G.entries])
    return GainData(static, inst)


def scaled_origin_limit(G, k):
    """lim_{s -> 0} s**k G(s), read off the lowest-order coefficients."""
    if k < 1:
        raise ValueError("k must be a positive integer")
    out = np.zeros((G.n, G.n))
    for i, row in enumerate(G.entries):
        for j, e in enumerate(row):
            order = e.origin_order()
            if order > k:
                raise LimitDiverges(f"entry ({i}, {j}) has an origin pole of order {order} > {k}")
            if order == k:
                out[i, j] = e.num.coeffs[e.num.valuation()] / e.den.coeffs[e.den.valuation()]
    return out


@dataclass(frozen=True)
class PoleData:
    location: complex
    multiplicity: int
    residue_matrix: np.ndarray = None

    @property
    def on_axis(self):
        return is_axis_pole(self.location)


def poles(G, reduce=True):
    """Poles of G with their order; simple axis poles carry lim (s-p) G(s).

    ``multiplicity`` is the order of the pole (size of the largest Jordan
    block of a minimal realization), so diag(1/s, 1/s) has a simple pole.
    With ``reduce=False`` common factors are not cancelled first, so the
    list may contain removable poles.
    """
    red = G.reduce() if reduce else G
    found = []  # (center, order, {(i, j): entry order})
    for i, row in enumerate(red.entries):
        for j, e in enumerate(row):
            if e.is_zero():
                continue
            for p, m in _cluster(e.den.roots()):
                for f in found:
                    tol = 2.0 * _cluster_tol(max(m, f[1])) * max(abs(p), abs(f[0]))
                    if abs(f[0] - p) <= tol:
                        f[1] = max(f[1], m)
                        f[2][(i, j)] = m
                        break
                else:
                    found.append([p, m, {(i, j): m}])
    out = []
    for p, m, where in found:
        if is_axis_pole(p):
            p = complex(0.0, p.imag)
        if abs(p.imag) <= 1e-12 * (1.0 + abs(p)):
            p = complex(p.real, 0.0)
        res = None
        if m == 1 and is_axis_pole(p):
            res = np.zeros((G.n, G.n), dtype=complex)
            for (i, j) in where:
                e = red.entries[i][j]
                res[i, j] = e.num(p) / e.den.deriv()(p)
        out.append(PoleData(p, int(m), res))
    out.sort(key=lambda d: (d.location.real, d.location.imag))
    return out


# --------------------------------------------------------------------------
# state space
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class StateSpaceRealization:
    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray

    @property
    def order(self):
        return self.A.shape[0]

    def __call__(self, s):
        nx = self.order
        if nx == 0:
            return self.D.astype(complex)
        return self.C @ np.linalg.solve(s * np.eye(nx) - self.A, self.B) + self.D

    def eigenvalues(self):
        if self.order == 0:
            return np.zeros(0, dtype=complex)
        return np.linalg.eigvals(self.A)

    def similarity(self, T):
        Ti = np.linalg.inv(T)
        return StateSpaceRealization(Ti @ self.A @ T, Ti @ self.B, self.C @ T, self.D)

    def to_dict(self):
        return {k: np.asarray(getattr(self, k)).tolist() for k in "ABCD"}

    @classmethod
    def from_dict(cls, d):
        D = np.atleast_2d(np.asarray(d["D"], dtype=float))
        A = np.asarray(d["A"], dtype=float).reshape(-1, len(d["A"]) or 0)
        nx = A.shape[0]
        B = np.asarray(d["B"], dtype=float).reshape(nx, D.shape[1])
        C = np.asarray(d["C"], dtype=float).reshape(D.shape[0], nx)
        return cls(A, B, C, D)


def _laurent(G, p, m, rho, points=128):
    """R_1..R_m with G(s) = sum_k R_k (s - p)^-k + analytic, by contour quadrature."""
    t = np.exp(2j * np.pi * (np.arange(points) + 0.5) / points)
    s = p + rho * t
    vals = np.empty((points, G.n, G.n), dtype=complex)
    for i, row in enumerate(G.entries):
        for j, e in enumerate(row):
            vals[:, i, j] = e(s)
    # R_k = (1 / 2 pi j) \oint G (s - p)^(k-1) ds  =  mean(G * (rho t)^k)
    return [np.mean(vals * ((rho * t) ** k)[:, None, None], axis=0) for k in range(1, m + 1)]


def _ho_kalman(R, rtol):
    """Minimal (N, B, C) with R_k = C N^(k-1) B and N nilpotent."""
    m, n = len(R), R[0].shape[0]
    dtype = complex if any(np.iscomplexobj(r) for r in R) else float
    H = np.zeros((m * n, m * n), dtype=dtype)
    Hs = np.zeros_like(H)
    for i in range(m):
        for j in range(m - i):
            H[i * n:(i + 1) * n, j * n:(j + 1) * n] = R[i + j]
            if i + j + 1 < m:
                Hs[i * n:(i + 1) * n, j * n:(j + 1) * n] = R[i + j + 1]
    U, sv, Vh = np.linalg.svd(H)
    r = int(np.sum(sv > rtol))
    if r == 0:
        return None
    sq = np.sqrt(sv[:r])
    O = U[:, :r] * sq
    Gam = sq[:, None] * Vh[:r]
    N = (U[:, :r].conj().T @ Hs @ Vh[:r].conj().T) / np.outer(sq, sq)
    return N, Gam[:, :n], O[:n]


def minimal_realization(G, rtol=REALIZATION_RTOL):
    """Minimal (A, B, C, D) for G in block-diagonal modal form.

    For every distinct pole p of order m the Laurent coefficients
    R_1..R_m are obtained by trapezoidal quadrature on a small circle
    around p; a minimal nilpotent realization of sum R_k (s-p)^-k follows
    from the SVD of their block Hankel matrix.  Conjugate pole pairs are
    combined into one real block.
    """
    # the unreduced entries are evaluated exactly; approximate cancellation
    # would perturb the residues, and removable poles simply get no state
    red = G
    n = red.n
    D = red.at_infinity()
    pl = [q for q in poles(red, reduce=False) if q.location.imag >= 0]
    if not pl:
        z = np.zeros((0, 0))
        return StateSpaceRealization(z, np.zeros((0, n)), np.zeros((n, 0)), D)
    allp = [q.location for q in pl] + [q.location.conjugate() for q in pl if q.location.imag > 0]
    blocks = []
    for q in pl:
        p, m = q.location, q.multiplicity
        others = [abs(p - o) for o in allp if o != p]
        rho = 0.25 * min(others) if others else 0.5 * (1.0 + abs(p))
        R = _laurent(red, p, m, rho)
        real = p.imag == 0.0
        if real:
            R = [r.real for r in R]
        blocks.append((p, m, R, real))
    scale = max(max(np.linalg.norm(r, 2) for r in R) for _, _, R, _ in blocks)
    As, Bs, Cs = [], [], []
    for p, m, R, real in blocks:
        h = max(np.linalg.norm(r, 2) for r in R)
        if h <= 1e-12 * scale:
            continue
        fac = _ho_kalman(R, max(rtol * h, 1e-3 * rtol * scale))
        if fac is None:
            continue
        N, B, C = fac
        A = p * np.eye(N.shape[0]) + N
        if real:
            As.append(np.real(A)); Bs.append(np.real(B)); Cs.append(np.real(C))
        else:
            # z and conj(z) -> (Re z, Im z)
            As.append(np.block([[A.real, -A.imag], [A.imag, A.real]]))
            Bs.append(np.vstack([B.real, B.imag]))
            Cs.append(np.hstack([2 * C.real, -2 * C.imag]))
    nx = sum(a.shape[0] for a in As)
    A = scipy.linalg.block_diag(*As) if As else np.zeros((0, 0))
    B = np.vstack(Bs) if Bs else np.zeros((0, n))
    C = np.hstack(Cs) if Cs else np.zeros((n, 0))
    return StateSpaceRealization(A.reshape(nx, nx), B, C, D)


def close_loop(P, C, rtol=1e-10):
    """Realization of the positive-feedback loop [P, C].

    Inputs are the two loop disturbances (w1, w2), outputs the two plant
    inputs (u1, u2); the state matrix carries every closed-loop pole.
    Accepts TransferMatrix or StateSpaceRealization operands.
    """
    rp = P if isinstance(P, StateSpaceRealization) else minimal_realization(P)
    rc = C if isinstance(C, StateSpaceRealization) else minimal_realization(C)
    n = rp.D.shape[0]
    if rc.D.shape[0] != n:
        raise ValueError("dimension mismatch")
    W = np.eye(n) - rc.D @ rp.D
    smin = np.linalg.svd(W, compute_uv=False)[-1]
    if smin <= rtol * (1.0 + np.linalg.norm(rp.D, 2) * np.linalg.norm(rc.D, 2)):
        raise IllPosed("I - P(inf) C(inf) is singular")
    E = np.linalg.inv(W)
    Ap, Bp, Cp, Dp = rp.A, rp.B, rp.C, rp.D
    Ac, Bc, Cc, Dc = rc.A, rc.B, rc.C, rc.D
    # u1 = E (Dc Cp xp + Cc xc + w1 + Dc w2),  u2 = Cp xp + Dp u1 + w2
    U1x = np.hstack([E @ Dc @ Cp, E @ Cc])
    U1w = np.hstack([E, E @ Dc])
    U2x = np.hstack([Cp, np.zeros((n, Ac.shape[0]))]) + Dp @ U1x
    U2w = np.hstack([np.zeros((n, n)), np.eye(n)]) + Dp @ U1w
    npx, ncx = Ap.shape[0], Ac.shape[0]
    A = np.zeros((npx + ncx, npx + ncx))
    A[:npx, :npx] = Ap
    A[npx:, npx:] = Ac
    A[:npx] += Bp @ U1x
    A[npx:] += Bc @ U2x
    B = np.vstack([Bp @ U1w, Bc @ U2w])
    Cout = np.vstack([U1x, U2x])
    Dout = np.vstack([U1w, U2w])
    return StateSpaceRealization(A, B, Cout, Dout)


# --------------------------------------------------------------------------
# spectra
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectralSummary:
    lambda_max: float
    lambda_min: float
    sigma_min: float


def spectral(M, real_spectrum=True, itol=1e-8):
    """Largest / smallest eigenvalue and smallest singular value of M.

    With ``real_spectrum`` the eigenvalues must be real up to ``itol``
    times the spectral radius, otherwise ComplexSpectrum is raised.
    """
    M = np.atleast_2d(np.asarray(M))
    if M.shape[0] and np.allclose(M, M.conj().T, rtol=0, atol=1e-14 * (1 + np.abs(M).max())):
        ev = np.linalg.eigvalsh(0.5 * (M + M.conj().T)).astype(complex)
    else:
        ev = np.linalg.eigvals(M)
    rho = np.max(np.abs(ev)) if ev.size else 0.0
    if real_spectrum and np.any(np.abs(ev.imag) > itol * max(rho, 1e-300)):
        raise ComplexSpectrum(f"eigenvalues {ev} are not real")
    sv = np.linalg.svd(M, compute_uv=False)
    return SpectralSummary(float(np.max(ev.real)), float(np.min(ev.real)), float(sv[-1]))


def lambda_max(M):
    return spectral(M, real_spectrum=False).lambda_max


def lambda_min(M):
    return spectral(M, real_spectrum=False).lambda_min
