"""JSON formats for systems and realizations.

A system file holds a square transfer matrix::

    {"n": 2, "entries": [[{"num": [1.0], "den": [1.0, 1.0]}, ...], ...]}

Coefficients are listed in ascending powers of s, so ``[1.0, 1.0]`` is
``1 + s``.  A realization file holds ``{"A": ..., "B": ..., "C": ..., "D": ...}``.
An object with a ``"plant"`` member, as written by ``attack``, is read as
that plant.
"""

import json

import numpy as np

from .lti import RationalFunction, StateSpaceRealization, TransferMatrix

__all__ = ["SystemFormatError", "system_to_dict", "system_from_dict", "load_system",
           "save_system", "dumps"]


class SystemFormatError(ValueError):
    """Malformed system description."""


def system_to_dict(G):
    return {"n": G.n,
            "entries": [[{"num": [float(c) for c in e.num.coeffs],
                          "den": [float(c) for c in e.den.coeffs]} for e in row]
                        for row in G.entries]}


def _coeffs(v, what):
    if not isinstance(v, list) or not v:
        raise SystemFormatError(f"{what} must be a non-empty list of numbers")
    try:
        c = np.asarray(v, dtype=float)
    except (TypeError, ValueError):
        raise SystemFormatError(f"{what} must contain only numbers") from None
    if c.ndim != 1 or not np.all(np.isfinite(c)):
        raise SystemFormatError(f"{what} must be a flat list of finite numbers")
    return c


def system_from_dict(d):
    if not isinstance(d, dict):
        raise SystemFormatError("system must be a JSON object")
    if "entries" not in d and isinstance(d.get("plant"), dict):
        # counterexample reports carry the destabilizing plant
        return system_from_dict(d["plant"])
    if "A" in d:
        try:
            real = StateSpaceRealization.from_dict(d)
        except (KeyError, ValueError, TypeError) as exc:
            raise SystemFormatError(f"bad realization: {exc}") from None
        return _realization_to_tf(real)
    if "entries" not in d:
        raise SystemFormatError("missing 'entries'")
    rows = d["entries"]
    if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
        raise SystemFormatError("'entries' must be a list of rows")
    n = d.get("n", len(rows))
    if n != len(rows) or any(len(r) != n for r in rows):
        raise SystemFormatError(f"dimension mismatch: expected {n} x {n} entries")
    out = []
    for i, row in enumerate(rows):
        r = []
        for j, e in enumerate(row):
            if not isinstance(e, dict) or "num" not in e:
                raise SystemFormatError(f"entry ({i}, {j}) needs 'num' (and optionally 'den')")
            num = _coeffs(e["num"], f"entry ({i}, {j}) num")
            den = _coeffs(e.get("den", [1.0]), f"entry ({i}, {j}) den")
            if not np.any(den):
                raise SystemFormatError(f"entry ({i}, {j}) has a zero denominator")
            r.append(RationalFunction(num, den))
        out.append(r)
    try:
        return TransferMatrix(out)
    except ValueError as exc:
        raise SystemFormatError(str(exc)) from None


def _realization_to_tf(real):
    """Transfer matrix of (A, B, C, D) via interpolation-free adjugate formula."""
    A, B, C, D = real.A, real.B, real.C, real.D
    n = D.shape[0]
    nx = A.shape[0]
    if nx == 0:
        return TransferMatrix.constant(D)
    char = np.poly(A)[::-1].real          # ascending det(sI - A)
    # C adj(sI - A) B via Faddeev-LeVerrier
    Ns = []
    Mk = np.eye(nx)
    coeffs = np.poly(A).real
    for k in range(1, nx + 1):
        Ns.append(C @ Mk @ B)
        Mk = A @ Mk + coeffs[k] * np.eye(nx)
    # Ns[k] multiplies s^(nx-1-k)
    entries = []
    for i in range(n):
        row = []
        for j in range(n):
            num = np.zeros(nx + 1)
            for k, Nk in enumerate(Ns):
                num[nx - 1 - k] += Nk[i, j]
            num = num + D[i, j] * char
            row.append(RationalFunction(num, char))
        entries.append(row)
    return TransferMatrix(entries)


def load_system(path):
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as exc:
        raise SystemFormatError(f"{path}: malformed JSON ({exc})") from None
    return system_from_dict(d)


def save_system(G, path):
    with open(path, "w") as fh:
        json.dump(system_to_dict(G), fh, indent=2)


def _default(o):
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.bool_):
        return bool(o)
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    if hasattr(o, "to_dict"):
        return o.to_dict()
    if hasattr(o, "value"):
        return o.value
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def dumps(obj, **kw):
    """json.dumps with numpy and report-object support; infinities become strings."""
    def clean(v):
        if isinstance(v, float) and not np.isfinite(v):
            return "nan" if np.isnan(v) else ("inf" if v > 0 else "-inf")
        if isinstance(v, dict):
            return {str(k): clean(x) for k, x in v.items()}
        if isinstance(v, (list, tuple)):
            return [clean(x) for x in v]
        return v
    return json.dumps(clean(json.loads(json.dumps(obj, default=_default))), **kw)
