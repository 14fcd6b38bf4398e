"""Command-line front end: ``nicert <verb> ...``.

Verbs
-----
classify           NI / SNI / NotNI verdict with witness
certify            feedback stability of [P, C] by one of six tests
robust-check       controller condition for an uncertainty class
attack             synthesize and verify a destabilizing in-class plant
prove-sufficiency  sample in-class plants and check every closed loop
sample             draw one in-class plant

Exit codes: 0 affirmative verdict, 1 negative verdict, 2 usage or input error.
"""

import argparse
import contextlib
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field

import numpy as np

from . import classify as _classify
from . import converse as _converse
from . import stability as _stability
from .classes import CLI_NAMES, ClassKind, UncertaintyClass
from .converse import (NecessityStatus, necessity_check, sufficiency_check,
                       synthesize_destabilizer, verify_counterexample)
from .exceptions import (ControllerUnstable, NIError, NotSynthesizable, PreconditionViolated,
                         PsiInvalid, SamplerExhausted, SufficiencyCounterexampleFound,
                         VerificationFailed)
from .io import SystemFormatError, dumps, load_system, save_system, system_to_dict
from .parallel import ENV_VAR, thread_count
from .sampler import SampleSpec, sample_plant
from .stability import Status

EXIT_OK, EXIT_NEGATIVE, EXIT_USAGE = 0, 1, 2

REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["verb", "exit_code", "inputs", "verdicts", "witnesses", "tolerances",
                 "grid", "timing", "threads"],
    "additionalProperties": False,
    "properties": {
        "verb": {"enum": ["classify", "certify", "robust-check", "attack",
                          "prove-sufficiency", "sample"]},
        "exit_code": {"enum": [0, 1, 2]},
        "inputs": {"type": "array", "items": {
            "type": "object", "required": ["path", "sha256"],
            "properties": {"path": {"type": "string"},
                           "sha256": {"type": "string", "pattern": "^[0-9a-f]{64}$"}}}},
        "verdicts": {"type": "object"},
        "witnesses": {"type": "object"},
        "tolerances": {"type": "object", "additionalProperties": {"type": "number"}},
        "grid": {"type": "object"},
        "timing": {"type": "object", "additionalProperties": {"type": "number"}},
        "threads": {"type": "integer", "minimum": 1},
        "error": {"type": ["string", "null"]},
    },
}


@dataclass
class RunReport:
    verb: str
    exit_code: int = EXIT_OK
    inputs: list = field(default_factory=list)
    verdicts: dict = field(default_factory=dict)
    witnesses: dict = field(default_factory=dict)
    tolerances: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    timing: dict = field(default_factory=dict)
    threads: int = 1
    error: str = None

    def to_dict(self):
        # one JSON pass normalizes numpy scalars, enums and infinities
        return json.loads(dumps({
            "verb": self.verb, "exit_code": self.exit_code, "inputs": self.inputs,
            "verdicts": self.verdicts, "witnesses": self.witnesses,
            "tolerances": self.tolerances, "grid": self.grid, "timing": self.timing,
            "threads": self.threads, "error": self.error}))

    @classmethod
    def from_dict(cls, d):
        return cls(**d)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_text(self):
        lines = [f"verb: {self.verb}"]
        for k, v in self.verdicts.items():
            lines.append(f"{k}: {_short(v)}")
        for k, v in self.witnesses.items():
            if v is not None:
                lines.append(f"{k}: {_short(v)}")
        if self.error:
            lines.append(f"error: {self.error}")
        lines.append(f"exit: {self.exit_code}")
        return "\n".join(lines)


def _short(v):
    if isinstance(v, (dict, list)):
        return json.dumps(json.loads(dumps(v)), sort_keys=True)
    return str(v)


class UsageError(Exception):
    pass


def _sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return h.hexdigest()


def _load(path, report):
    try:
        G = load_system(path)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror or exc}") from None
    except SystemFormatError as exc:
        msg = str(exc)
        raise UsageError(msg if msg.startswith(str(path)) else f"{path}: {msg}") from None
    report.inputs.append({"path": str(path), "sha256": _sha256(path)})
    return G


def _class_arg(args):
    try:
        return UncertaintyClass.from_cli(args.cls, args.gamma)
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _write_json(obj, path):
    with open(path, "w") as fh:
        fh.write(dumps(obj, indent=2))
        fh.write("\n")


# --------------------------------------------------------------------------
# tolerances
# --------------------------------------------------------------------------

# flag -> (default, [(module, attribute), ...])
_TOLERANCES = {
    "tol": (_classify.TOL, [(_classify, "TOL")]),
    "margin": (_stability.MARGIN, [(_stability, "MARGIN"), (_converse, "MARGIN")]),
    "stable_re": (_stability.STABLE_RE, [(_stability, "STABLE_RE")]),
    "pin_tol": (_converse.PIN_TOL, [(_converse, "PIN_TOL")]),
}


@contextlib.contextmanager
def _overrides(args):
    """Apply tolerance and grid flags to the module defaults for one run."""
    saved = []
    try:
        for name, (_, targets) in _TOLERANCES.items():
            val = getattr(args, name)
            for mod, attr in targets:
                saved.append((mod, attr, getattr(mod, attr)))
                setattr(mod, attr, val)
        saved.append((_classify, "DEFAULT_GRID", _classify.DEFAULT_GRID))
        _classify.DEFAULT_GRID = _classify.GridSpec(args.omega_min, args.omega_max,
                                                    args.grid_points)
        yield
    finally:
        for mod, attr, val in reversed(saved):
            setattr(mod, attr, val)


def _positive(text):
    v = float(text)
    if not v > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return v


def _negative(text):
    v = float(text)
    if not v < 0:
        raise argparse.ArgumentTypeError(f"must be negative, got {text}")
    return v


# --------------------------------------------------------------------------
# verbs
# --------------------------------------------------------------------------

def _cmd_classify(args, report):
    G = _load(args.system, report)
    cl = _classify.classify_ni(G)
    d = cl.to_dict()
    report.verdicts["verdict"] = d["verdict"]
    report.verdicts["min_margin"] = d["min_margin"]
    report.witnesses["witness"] = d["witness"]
    report.witnesses["sni_witness"] = d["sni_witness"]
    report.witnesses["marginal_poles"] = d["marginal_poles"]
    return EXIT_OK if cl.is_ni else EXIT_NEGATIVE


def _parse_psi(text, n):
    try:
        data = json.loads(text)
    except json.JSONDecodeError:
        try:
            with open(text) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"--psi is neither a JSON matrix nor a readable JSON file: {exc}") \
                from None
    try:
        psi = np.atleast_2d(np.asarray(data, dtype=float))
    except (TypeError, ValueError):
        raise UsageError("--psi must be a numeric matrix") from None
    if psi.shape != (n, n):
        raise UsageError(f"--psi must be {n} x {n}, got {psi.shape}")
    return psi


def _cmd_certify(args, report):
    P = _load(args.plant, report)
    C = _load(args.controller, report)
    if P.n != C.n:
        raise UsageError(f"dimension mismatch: plant is {P.n} x {P.n}, controller {C.n} x {C.n}")
    pre = not args.no_precheck
    report.verdicts["method"] = args.method
    if args.method == "oracle":
        v = _stability.oracle_stability(P, C)
    elif args.method == "lemma2":
        v = _stability.lemma2_check(P, C, pre=pre)
    elif args.method == "lemma3":
        v = _stability.lemma3_check(P, C, pre=pre)
    elif args.method == "lemma4":
        psi = None if args.psi is None else _parse_psi(args.psi, P.n)
        v = _stability.lemma4_check(P, C, psi=psi, pre=pre)
        report.verdicts["psi"] = (_stability.default_psi(P) if psi is None else psi).tolist()
    elif args.method == "thm1":
        h = _stability.theorem1_check(P, C, points=args.tau_points, pre=pre)
        report.verdicts.update(h.to_dict())
        report.verdicts["status"] = "Stable" if h.equivalent_verdict else "Unstable"
        report.grid["tau_points"] = int(len(h.tau_grid))
        return EXIT_OK if h.equivalent_verdict else EXIT_NEGATIVE
    else:
        v = _stability.theorem2_check(P, C, pre=pre)
    report.verdicts.update(v.to_dict())
    return EXIT_OK if v.status is Status.STABLE else EXIT_NEGATIVE


def _cmd_robust_check(args, report):
    cls = _class_arg(args)
    C = _load(args.controller, report)
    v = necessity_check(C, cls)
    d = v.to_dict()
    report.verdicts["class"] = cls.to_dict()
    report.verdicts["status"] = d["status"]
    report.verdicts["controller_conditions"] = d.get("controller_conditions")
    report.witnesses["violation"] = d.get("violation")
    return EXIT_OK if v.status is NecessityStatus.ROBUST else EXIT_NEGATIVE


def _cmd_attack(args, report):
    cls = _class_arg(args)
    C = _load(args.controller, report)
    v = necessity_check(C, cls)
    report.verdicts["class"] = cls.to_dict()
    report.verdicts["necessity"] = str(v.status)
    if v.status is NecessityStatus.ROBUST:
        report.error = "controller satisfies the class condition; no destabilizing plant exists"
        return EXIT_NEGATIVE
    report.witnesses["violation"] = v.violation.to_dict() if v.violation else None
    try:
        recipe = synthesize_destabilizer(C, cls, v)
    except NotSynthesizable as exc:
        report.error = f"synthesis failed: {exc}"
        return EXIT_NEGATIVE
    out = recipe.to_dict()
    try:
        ver = verify_counterexample(recipe, C, cls)
    except VerificationFailed as exc:
        report.verdicts["verified"] = False
        report.error = f"verification failed ({exc.clause}): {exc}"
        out["verification"] = {"verified": False, "clause": exc.clause}
        if args.output:
            _write_json(out, args.output)
        return EXIT_NEGATIVE
    out["verification"] = ver
    report.verdicts["verified"] = True
    report.verdicts["recipe_kind"] = recipe.recipe_kind
    report.verdicts["oracle"] = ver["oracle"]["status"]
    report.witnesses["recipe"] = {k: out[k] for k in ("recipe_kind", "pin", "omega0", "x",
                                                       "theta", "catalog_param", "epsilon")}
    report.witnesses["plant"] = out["plant"]
    if args.output:
        _write_json(out, args.output)
    return EXIT_OK


def _cmd_prove_sufficiency(args, report):
    cls = _class_arg(args)
    C = _load(args.controller, report)
    report.verdicts["class"] = cls.to_dict()
    try:
        rep = sufficiency_check(C, cls, args.samples, args.seed, modes=args.modes)
    except SufficiencyCounterexampleFound as exc:
        report.verdicts["status"] = "CounterexampleFound"
        report.witnesses["plant"] = system_to_dict(exc.plant)
        report.error = str(exc)
        if args.output:
            save_system(exc.plant, args.output)
        return EXIT_NEGATIVE
    except PreconditionViolated as exc:
        report.verdicts["status"] = "ConditionViolated"
        report.error = str(exc)
        return EXIT_NEGATIVE
    report.verdicts["status"] = "AllStable"
    report.verdicts.update(rep.to_dict())
    return EXIT_OK


def _cmd_sample(args, report):
    cls = _class_arg(args)
    try:
        spec = SampleSpec(cls, args.n, args.modes, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        P = sample_plant(spec)
    except SamplerExhausted as exc:
        report.error = str(exc)
        return EXIT_NEGATIVE
    report.verdicts["class"] = cls.to_dict()
    report.verdicts["plant"] = system_to_dict(P)
    report.verdicts.update({"n": args.n, "modes": args.modes, "seed": args.seed})
    if args.output:
        save_system(P, args.output)
    return EXIT_OK


# --------------------------------------------------------------------------
# parser
# --------------------------------------------------------------------------

def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", nargs="?", const="-", default=None, metavar="PATH",
                        help="write the JSON report to PATH (stdout if PATH is omitted)")
    g = common.add_argument_group("tolerances")
    g.add_argument("--tol", type=_positive, default=_TOLERANCES["tol"][0],
                   help="classifier eigenvalue tolerance (default %(default)g)")
    g.add_argument("--margin", type=_positive, default=_TOLERANCES["margin"][0],
                   help="margin for strict inequalities (default %(default)g)")
    g.add_argument("--stable-re", type=_negative, default=_TOLERANCES["stable_re"][0],
                   help="oracle: stable iff every pole has Re below this (default %(default)g)")
    g.add_argument("--pin-tol", type=_positive, default=_TOLERANCES["pin_tol"][0],
                   help="counterexample pin residual bound (default %(default)g)")
    g.add_argument("--omega-min", type=_positive, default=_classify.DEFAULT_GRID.omega_min)
    g.add_argument("--omega-max", type=_positive, default=_classify.DEFAULT_GRID.omega_max)
    g.add_argument("--grid-points", type=int, default=_classify.DEFAULT_GRID.points)

    classes = "class names: " + ", ".join(f"{k} (Theorem {UncertaintyClass.from_cli(k, 1.0).theorem})"
                                          for k in CLI_NAMES)
    p = argparse.ArgumentParser(prog="nicert", description=__doc__.split("\n")[0],
                                epilog=f"Parallelism is capped by ${ENV_VAR}.")
    sub = p.add_subparsers(dest="verb", required=True, metavar="VERB")

    s = sub.add_parser("classify", parents=[common], help="NI / SNI / NotNI verdict")
    s.add_argument("system")

    s = sub.add_parser("certify", parents=[common], help="feedback stability of [P, C]")
    s.add_argument("plant")
    s.add_argument("controller")
    s.add_argument("--method", choices=["oracle", "lemma2", "lemma3", "lemma4", "thm1", "thm2"],
                   default="oracle")
    s.add_argument("--psi", help="symmetric negative definite matrix (JSON text or file) for lemma4")
    s.add_argument("--tau-points", type=int, default=101)
    s.add_argument("--no-precheck", action="store_true",
                   help="skip the NI/SNI hypothesis checks of the gain tests")

    def with_class(s):
        s.add_argument("--class", dest="cls", required=True,
                       choices=sorted(CLI_NAMES) + [k.value for k in ClassKind],
                       metavar="CLASS", help=classes)
        s.add_argument("--gamma", type=_positive, default=None,
                       help="bound on P(0) for the bounded classes")

    s = sub.add_parser("robust-check", parents=[common], help="controller condition for a class")
    with_class(s)
    s.add_argument("controller")

    s = sub.add_parser("attack", parents=[common], help="destabilizing in-class plant")
    with_class(s)
    s.add_argument("controller")
    s.add_argument("-o", "--output", help="write the recipe (with its plant) here")

    s = sub.add_parser("prove-sufficiency", parents=[common],
                       help="sampled check that every in-class plant is stabilized")
    with_class(s)
    s.add_argument("controller")
    s.add_argument("--samples", type=int, default=100)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--modes", type=int, default=3)
    s.add_argument("-o", "--output", help="write a counterexample plant here, if one is found")

    s = sub.add_parser("sample", parents=[common], help="draw an in-class plant")
    with_class(s)
    s.add_argument("-n", type=int, default=1, help="plant dimension")
    s.add_argument("--modes", type=int, default=2)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("-o", "--output", help="write the plant here")
    return p


_VERBS = {"classify": _cmd_classify, "certify": _cmd_certify,
          "robust-check": _cmd_robust_check, "attack": _cmd_attack,
          "prove-sufficiency": _cmd_prove_sufficiency, "sample": _cmd_sample}


def run(argv=None, stdout=None, stderr=None):
    """Run the CLI; returns ``(exit_code, RunReport)``.

    The report is None when the arguments do not parse (argparse has
    already printed the diagnostic).
    """
    stdout = sys.stdout if stdout is None else stdout
    stderr = sys.stderr if stderr is None else stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # --help exits 0; anything argparse rejects is a usage error
        return (EXIT_OK if exc.code in (0, None) else EXIT_USAGE), None
    report = RunReport(args.verb)
    report.tolerances = {k.replace("_", "-"): float(getattr(args, k)) for k in _TOLERANCES}
    report.grid = {"omega_min": args.omega_min, "omega_max": args.omega_max,
                   "points": args.grid_points}
    t0 = time.perf_counter()
    try:
        report.threads = thread_count()
        with _overrides(args):
            code = _VERBS[args.verb](args, report)
    except (UsageError, ValueError, PsiInvalid, PreconditionViolated, ControllerUnstable) as exc:
        code = EXIT_USAGE
        report.error = f"{type(exc).__name__}: {exc}" if not isinstance(exc, UsageError) else str(exc)
        print(f"nicert: error: {report.error}", file=stderr)
    except NIError as exc:
        code = EXIT_USAGE
        report.error = f"{type(exc).__name__}: {exc}"
        print(f"nicert: error: {report.error}", file=stderr)
    report.exit_code = code
    report.timing = {"seconds": time.perf_counter() - t0}
    if args.json == "-":
        print(report.to_json(), file=stdout)
    else:
        print(report.to_text(), file=stdout)
        if args.json:
            with open(args.json, "w") as fh:
                fh.write(report.to_json() + "\n")
    return code, report


def main(argv=None):
    code, _ = run(argv)
    return code


if __name__ == "__main__":
    sys.exit(main())
