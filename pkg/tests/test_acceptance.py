"""End-to-end acceptance suite; each test prints one PASS/FAIL line."""

import collections
import time

import numpy as np
import pytest

from nicert.classes import ClassKind as K, UncertaintyClass, class_membership
from nicert.classify import Verdict, classify_ni, is_positive_real, replay_witness
from nicert.converse import (lossless_N, necessity_check, synthesize_destabilizer,
                             verify_counterexample)
from nicert.lti import TransferMatrix, gains
from nicert.sampler import (SampleSpec, sample_plant, sample_sni_controller,
                            sample_violating_controller)
from nicert.stability import (Status, closed_loop_poles, lemma2_check, lemma3_check,
                              lemma4_check, oracle_stability, theorem1_check, theorem2_check)

from conftest import mat, rank_one, siso


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} ({detail})")
        assert ok, detail
    return emit


def gamma_for(kind):
    return None if kind in (K.StrictlyProperNI, K.NI_noDoubleOriginPole, K.SNI_instNonneg) else 1.0


def static(G):
    M = gains(G).static_gain
    return 0.5 * (M + M.T)


# --- 1 ----------------------------------------------------------------------------------------------

CATALOG = [
    (siso([1], [1, 1]), Verdict.SNI),
    (siso([1], [0, 1]), Verdict.NI),
    (siso([0, 1], [1, 1]), Verdict.NOT_NI),
    (siso([1], [4, 0, 1]), Verdict.NI),
    (siso([2.0]), Verdict.NI),
    (siso([-1.0]), Verdict.NI),
    (siso([1], [-1, 1]), Verdict.NOT_NI),
    (rank_one([1, 1], [1], [1, 1]), Verdict.NI),
    (rank_one([1, 0], [1], [1, 1]) + rank_one([1, 1], [1], [1, 1, 1]), Verdict.SNI),
    (rank_one([1, -1], [0, 1], [1, 1]), Verdict.NOT_NI),
]


def test_criterion_1_classification_catalog(report):
    t0 = time.perf_counter()
    wrong, worst = [], 0.0
    for i, (G, verdict) in enumerate(CATALOG):
        cl = classify_ni(G)
        if cl.verdict is not verdict:
            wrong.append(i)
        if cl.witness is not None and cl.witness.clause == "ii":
            worst = max(worst, abs(replay_witness(G, cl.witness) - cl.witness.defect))
    dt = time.perf_counter() - t0
    report(1, not wrong and worst < 1e-9 and dt < 5.0,
           f"{len(CATALOG) - len(wrong)}/{len(CATALOG)} exact, witness replay {worst:.1e}, "
           f"{dt:.2f} s")


# --- 2-4: sampled pairs ------------------------------------------------------------------------

def gain_pair(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    P = sample_plant(SampleSpec(UncertaintyClass(K.N0_dcBounded, 5.0), n,
                                int(rng.integers(1, 4)), 10_000 + seed))
    C = sample_sni_controller(n, int(rng.integers(1, 3)), 20_000 + seed)
    return P, C


def test_criterion_2_gain_tests_match_oracle(report):
    t0 = time.perf_counter()
    agree = disagree = boundary = stable = 0
    for seed in range(1000):
        P, C = gain_pair(seed)
        o = oracle_stability(P, C)
        a = lemma2_check(P, C, pre=False)
        b = lemma3_check(P, C, pre=False)
        if o.boundary or a.boundary or b.boundary:
            boundary += 1
            continue
        stable += o.status is Status.STABLE
        if o.status is a.status is b.status:
            agree += 1
        else:
            disagree += 1
    dt = time.perf_counter() - t0
    report(2, disagree == 0 and boundary < 20 and dt < 120.0,
           f"{agree} agree, {disagree} disagree, {boundary} boundary, {stable} stable, "
           f"{dt:.1f} s")


def test_criterion_3_homotopy_statements_agree(report):
    consistent = 0
    for seed in range(300):
        P, C = gain_pair(50_000 + seed)
        consistent += theorem1_check(P, C, points=101, pre=False).consistent
    report(3, consistent == 300, f"{consistent}/300 consistent")


def test_criterion_4_sufficient_test_is_sound(report):
    certified = sound = 0
    for seed in range(300):
        rng = np.random.default_rng(70_000 + seed)
        n = int(rng.integers(1, 4))
        kind = (K.SNI_instNonneg_dcBounded, K.N0_instNonneg_dcStrict)[seed % 2]
        P = sample_plant(SampleSpec(UncertaintyClass(kind, float(rng.uniform(0.5, 3.0))), n,
                                    int(rng.integers(1, 4)), 80_000 + seed))
        # P(inf) >= 0 holds by class; C(0) drawn around the stability threshold
        C = sample_sni_controller(n, int(rng.integers(1, 3)), 90_000 + seed,
                                  dc_below=float(rng.uniform(-0.5, 1.5)))
        if theorem2_check(P, C, pre=False).status is Status.STABLE:
            certified += 1
            sound += oracle_stability(P, C).status is Status.STABLE
    report(4, certified > 0 and sound == certified,
           f"{sound}/{certified} certified pairs oracle-stable, 300 drawn")


# --- 5 -----------------------------------------------------------------------------------------------

def test_criterion_5_strictly_proper_sufficiency(report):
    cls = UncertaintyClass(K.StrictlyProperNI)
    stable = replayed = origin = 0
    for i in range(20):
        n = 1 + i % 3
        C = sample_sni_controller(n, 1 + i % 3, 100 + i, dc_below=0.0)
        psi = static(C)
        for j in range(25):
            P = sample_plant(SampleSpec(cls, n, 1 + j % 4, 1000 * i + j))
            origin += any(e.origin_order() for row in P.entries for e in row)
            stable += oracle_stability(P, C).status is Status.STABLE
            replayed += lemma4_check(P, C, psi=psi).status is Status.STABLE
    report(5, stable == 500 and replayed == 500,
           f"oracle {stable}/500, lemma4 with psi=C(0) {replayed}/500, "
           f"{origin} plants with origin poles")


# --- 6 -----------------------------------------------------------------------------------------------

def violation_combos():
    combos = []
    for kind in K:
        cls = UncertaintyClass(kind, gamma_for(kind))
        if cls.family == "SNI":
            combos += [(cls, "NotNI", a) for a in ("half", "low", "high")]
        else:
            combos += [(cls, "NotSNI", a) for a in ("zero", "pi", "null", "half", "low", "high")]
        if kind is K.StrictlyProperNI:
            combos += [(cls, "StaticGainBound", "zero"), (cls, "StaticGainBound", None)]
        elif kind is not K.NI_noDoubleOriginPole:
            combos.append((cls, "StaticGainBound", None))
        if cls.controller_inst_nonneg:
            combos.append((cls, "InstGainSign", None))
    return combos


def _theta_case(theta):
    if theta is None:
        return None
    for name, v in (("0", 0.0), ("pi/2", np.pi / 2), ("pi", np.pi)):
        if theta == v:
            return name
    return "interior"


def test_criterion_6_converse_synthesis(report):
    t0 = time.perf_counter()
    combos = violation_combos()
    passed, failures = 0, []
    kinds, recipes, thetas = collections.Counter(), collections.Counter(), collections.Counter()
    for i in range(200):
        cls, violation, angle = combos[i % len(combos)]
        C = sample_violating_controller(cls, violation, 1 + i % 3, 1000 + i, angle)
        try:
            v = necessity_check(C, cls)
            r = synthesize_destabilizer(C, cls, v)
            rep = verify_counterexample(r, C, cls)
            ok, reason, _ = class_membership(r.plant, cls)
            assert ok, reason
            assert rep["pin_residual"] < 1e-6
            assert oracle_stability(r.plant, C).status is not Status.STABLE
        except Exception as exc:       # noqa: BLE001  any failure counts against the criterion
            failures.append((i, cls.kind.value, violation, angle, repr(exc)))
            continue
        passed += 1
        kinds[violation] += 1
        recipes[r.recipe_kind] += 1
        if r.recipe_kind == "CatalogSecondOrder":
            thetas[_theta_case(r.theta)] += 1
    dt = time.perf_counter() - t0
    coverage = ({"NotNI", "NotSNI", "StaticGainBound", "InstGainSign"} <= set(kinds)
                and {"0", "pi/2", "pi", "interior"} <= set(thetas)
                and {"SchurFirstOrder", "SchurIntegrator", "ResonantRankOne_eps"} <= set(recipes))
    report(6, passed == 200 and coverage and dt < 300.0,
           f"{passed}/200 verified, theta cases {dict(thetas)}, recipes {dict(recipes)}, "
           f"{dt:.1f} s" + (f", first failure {failures[0]}" if failures else ""))


# --- 7 -----------------------------------------------------------------------------------------------

def test_criterion_7_scalar_example(report):
    betas = np.geomspace(1e-3, 1e3, 50)
    neg = [oracle_stability(siso([1], [b, 1]), siso([-0.5])).status for b in betas]
    pos = [oracle_stability(siso([1], [b, 1]), siso([0.1])).status for b in betas]
    # with C = alpha the loop denominator is s + beta - alpha
    pos_ok = all((s is Status.STABLE) == (b > 0.1) for s, b in zip(pos, betas))
    pole = closed_loop_poles(siso([1], [0.05, 1]), siso([0.1]))
    err = float(np.min(np.abs(pole - 0.05)))
    report(7, all(s is Status.STABLE for s in neg) and pos_ok and err < 1e-9,
           f"alpha=-0.5 stable on all 50 beta, alpha=0.1 unstable exactly for beta<0.1, "
           f"pole error {err:.1e}")


# --- 8 -----------------------------------------------------------------------------------------------

def test_criterion_8_inverse_static_gain_witness(report):
    ok, worst = 0, 0.0
    for i in range(100):
        n = 1 + i % 3
        C = sample_sni_controller(n, 1 + i % 3, 300 + i, dc_below=0.0)
        P = TransferMatrix.constant(np.linalg.inv(gains(C).static_gain))
        pole = float(np.min(np.abs(closed_loop_poles(P, C))))
        worst = max(worst, pole)
        ok += pole < 1e-8 and oracle_stability(P, C).status is not Status.STABLE
    report(8, ok == 100, f"{ok}/100 with an origin pole, worst |pole| {worst:.1e}")


# --- 9 -----------------------------------------------------------------------------------------------

def test_criterion_9_lossless_discharge(report):
    rng = np.random.default_rng(2024)
    ok, worst = 0, 0.0
    for i in range(50):
        w0 = float(np.exp(rng.uniform(np.log(1e-2), np.log(1e2))))
        alpha = rng.normal(size=1 + i % 4)
        N, _ = lossless_N(alpha, w0)
        err = float(np.max(np.abs(N(1j * w0) - (-1j * np.outer(alpha, alpha)))))
        worst = max(worst, err)
        ok += bool(is_positive_real(N, allow_lossless=True)[0]) and err < 1e-9
    report(9, ok == 50, f"{ok}/50 positive real and pinned, worst error {worst:.1e}")
