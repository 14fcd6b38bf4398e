"""Uncertainty classes of NI plants and the matching controller conditions.

Each class fixes a plant family (all NI, NI without origin poles, or
stable SNI), optional bounds on P(0) and P(inf), and the controller-side
condition that is necessary and sufficient for robust stability against
the whole class.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .classify import classify_ni

__all__ = ["ClassKind", "UncertaintyClass", "class_membership", "CLI_NAMES"]

PSD_RTOL = 1e-9


class ClassKind(str, enum.Enum):
    StrictlyProperNI = "StrictlyProperNI"
    NI_noDoubleOriginPole = "NI_noDoubleOriginPole"
    N0_dcBounded = "N0_dcBounded"
    N0_dcBoundedNonneg = "N0_dcBoundedNonneg"
    N0_instNonneg_dcStrict = "N0_instNonneg_dcStrict"
    SNI_instNonneg = "SNI_instNonneg"
    SNI_instNonneg_dcBounded = "SNI_instNonneg_dcBounded"
    SNI_dcBounded = "SNI_dcBounded"
    SNI_dcBoundedNonneg = "SNI_dcBoundedNonneg"

    def __str__(self):
        return self.value


# kind -> (theorem, plant family, strictly proper, at most simple origin poles,
#          P(inf) >= 0, P(0) upper bound ("<=", "<" or None), P(0) >= 0)
_PLANT = {
    ClassKind.StrictlyProperNI:         (3, "NI",  True,  False, False, None, False),
    ClassKind.NI_noDoubleOriginPole:    (4, "NI",  False, True,  False, None, False),
    ClassKind.N0_dcBounded:             (5, "N0",  False, False, False, "<=", False),
    ClassKind.N0_dcBoundedNonneg:       (5, "N0",  False, False, False, "<=", True),
    ClassKind.N0_instNonneg_dcStrict:   (6, "N0",  False, False, True,  "<",  False),
    ClassKind.SNI_instNonneg:           (7, "SNI", False, False, True,  None, False),
    ClassKind.SNI_instNonneg_dcBounded: (8, "SNI", False, False, True,  "<=", False),
    ClassKind.SNI_dcBounded:            (9, "SNI", False, False, False, "<=", False),
    ClassKind.SNI_dcBoundedNonneg:      (9, "SNI", False, False, False, "<=", True),
}

# kind -> (controller membership, static-gain condition, C(inf) >= 0)
# static-gain condition: ("<", 0) means C(0) < 0, ("<=", "1/gamma") means C(0) <= I/gamma
_CONTROLLER = {
    ClassKind.StrictlyProperNI:         ("SNI", ("<", "0"),        False),
    ClassKind.NI_noDoubleOriginPole:    (None, None, False),
    ClassKind.N0_dcBounded:             ("SNI", ("<", "1/gamma"),  True),
    ClassKind.N0_dcBoundedNonneg:       ("SNI", ("<", "1/gamma"),  True),
    ClassKind.N0_instNonneg_dcStrict:   ("SNI", ("<=", "1/gamma"), False),
    ClassKind.SNI_instNonneg:           ("NI",  ("<=", "0"),       False),
    ClassKind.SNI_instNonneg_dcBounded: ("NI",  ("<", "1/gamma"),  False),
    ClassKind.SNI_dcBounded:            ("NI",  ("<", "1/gamma"),  True),
    ClassKind.SNI_dcBoundedNonneg:      ("NI",  ("<", "1/gamma"),  True),
}

CLI_NAMES = {
    "strictly-proper-ni": ClassKind.StrictlyProperNI,
    "ni-no-double-origin-pole": ClassKind.NI_noDoubleOriginPole,
    "n0-dc-bounded": ClassKind.N0_dcBounded,
    "n0-dc-bounded-nonneg": ClassKind.N0_dcBoundedNonneg,
    "n0-inst-nonneg-dc-strict": ClassKind.N0_instNonneg_dcStrict,
    "sni-inst-nonneg": ClassKind.SNI_instNonneg,
    "sni-inst-nonneg-dc-bounded": ClassKind.SNI_instNonneg_dcBounded,
    "sni-dc-bounded": ClassKind.SNI_dcBounded,
    "sni-dc-bounded-nonneg": ClassKind.SNI_dcBoundedNonneg,
}


@dataclass(frozen=True)
class UncertaintyClass:
    """A plant uncertainty class; ``gamma`` bounds P(0) for the bounded kinds."""

    kind: ClassKind
    gamma: float = None

    def __post_init__(self):
        kind = ClassKind(self.kind)
        object.__setattr__(self, "kind", kind)
        if _PLANT[kind][5] is not None:
            if self.gamma is None or not self.gamma > 0:
                raise ValueError(f"{kind} requires gamma > 0")
            object.__setattr__(self, "gamma", float(self.gamma))
        elif self.gamma is not None:
            # gamma is meaningless here; keep it only if positive, for reporting
            if not self.gamma > 0:
                raise ValueError("gamma must be positive")
            object.__setattr__(self, "gamma", float(self.gamma))

    @classmethod
    def from_cli(cls, name, gamma=None):
        try:
            kind = CLI_NAMES[name] if name in CLI_NAMES else ClassKind(name)
        except ValueError:
            raise ValueError(f"unknown class {name!r}; choose from {sorted(CLI_NAMES)}") from None
        if _PLANT[kind][5] is None:
            gamma = None
        return cls(kind, gamma)

    @property
    def cli_name(self):
        return next(k for k, v in CLI_NAMES.items() if v is self.kind)

    @property
    def theorem(self):
        return _PLANT[self.kind][0]

    @property
    def family(self):
        return _PLANT[self.kind][1]

    @property
    def strictly_proper(self):
        return _PLANT[self.kind][2]

    @property
    def simple_origin_only(self):
        return _PLANT[self.kind][3]

    @property
    def inst_nonneg(self):
        return _PLANT[self.kind][4]

    @property
    def dc_bound(self):
        return _PLANT[self.kind][5]

    @property
    def dc_nonneg(self):
        return _PLANT[self.kind][6]

    @property
    def allows_origin_poles(self):
        return self.family == "NI"

    @property
    def allows_marginal_poles(self):
        return self.family in ("NI", "N0")

    @property
    def controller_membership(self):
        return _CONTROLLER[self.kind][0]

    @property
    def controller_inst_nonneg(self):
        return _CONTROLLER[self.kind][2]

    def controller_dc_bound(self):
        """(relation, bound) for C(0), or None."""
        spec = _CONTROLLER[self.kind][1]
        if spec is None:
            return None
        rel, b = spec
        return rel, (0.0 if b == "0" else 1.0 / self.gamma)

    def to_dict(self):
        return {"kind": str(self.kind), "cli_name": self.cli_name,
                "theorem": self.theorem, "gamma": self.gamma}


def _sym(M):
    return 0.5 * (M + M.T)


def _lmin(M):
    return float(np.linalg.eigvalsh(_sym(M))[0])


def _lmax(M):
    return float(np.linalg.eigvalsh(_sym(M))[-1])


def class_membership(P, cls, classification=None):
    """Check P against the class; returns (ok, reason, classification)."""
    cl = classify_ni(P) if classification is None else classification
    origin = max(e.origin_order() for row in P.entries for e in row)
    if cls.family == "SNI":
        if not cl.is_sni:
            return False, f"plant is {cl.verdict}, SNI required", cl
    elif not cl.is_ni:
        return False, "plant is not NI", cl
    if cls.family in ("N0", "SNI") and origin > 0:
        return False, "plant has a pole at the origin", cl
    if cls.simple_origin_only and origin > 1:
        return False, "plant has a double pole at the origin", cl
    Pinf = P.at_infinity()
    if cls.strictly_proper and np.max(np.abs(Pinf)) > 1e-12:
        return False, "plant is not strictly proper", cl
    if cls.inst_nonneg and _lmin(Pinf) < -PSD_RTOL * (1.0 + np.linalg.norm(Pinf, 2)):
        return False, "P(inf) is not positive semidefinite", cl
    if cls.dc_bound is not None or cls.dc_nonneg:
        P0 = np.array([[e.num.coeffs[0] / e.den.coeffs[0] for e in row] for row in P.entries])
        scale = 1.0 + np.linalg.norm(P0, 2)
        top = _lmax(P0)
        if cls.dc_bound == "<=" and top > cls.gamma + PSD_RTOL * scale:
            return False, f"lambda_max(P(0)) = {top:.6g} exceeds gamma", cl
        if cls.dc_bound == "<" and not top < cls.gamma:
            return False, f"lambda_max(P(0)) = {top:.6g} is not below gamma", cl
        if cls.dc_nonneg and _lmin(P0) < -PSD_RTOL * scale:
            return False, "P(0) is not positive semidefinite", cl
    return True, "", cl
