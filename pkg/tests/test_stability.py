import numpy as np
import pytest
from hypothesis import given, strategies as st

from nicert.classes import ClassKind, UncertaintyClass
from nicert.exceptions import PreconditionViolated, PsiInvalid
from nicert.lti import TransferMatrix
from nicert.sampler import SampleSpec, sample_plant, sample_sni_controller
from nicert.stability import (Status, closed_loop_poles, default_psi, lemma2_check,
                              lemma3_check, lemma4_check, lemma4_limit, oracle_stability,
                              theorem1_check, theorem2_check)

from conftest import SNI_NEG, siso

LAG = siso([1], [1, 1])
LAG2 = siso([2], [1, 1])
INTEGRATOR = siso([1], [0, 1])


# --- oracle -----------------------------------------------------------------------------------

def test_oracle_stable_first_order():
    v = oracle_stability(LAG, siso([-1.0]))
    assert v.status is Status.STABLE
    assert v.conditions["max_real_part"] == pytest.approx(-2.0)


def test_oracle_unstable_two_lags():
    v = oracle_stability(LAG2, LAG)
    assert v.status is Status.UNSTABLE
    assert v.offending_pole.real == pytest.approx(np.sqrt(2) - 1, abs=1e-12)


def test_oracle_ill_posed():
    assert oracle_stability(siso([1.0]), siso([1.0])).status is Status.ILL_POSED


# --- gain tests on hand examples -----------------------------------------------------------

def test_static_gain_test_hand_values():
    # P(0)=1, P(inf)=0, C(0)=-1, C(inf)=-2:
    # (b) = (P(inf) C(0) - 1)/(1 - P(inf) C(inf)) = -1, (c) = (C(0) P(0) - 1)/(1 - C(0) P(inf)) = -2
    v = lemma2_check(LAG, SNI_NEG)
    assert v.status is Status.STABLE
    assert v.conditions == pytest.approx({"b": -1.0, "c": -2.0})


def test_instantaneous_gain_test_hand_values():
    # (b) = (P(0) C(inf) - 1)/(1 - P(inf) C(inf)) = -3, (c) = (C(0) P(0) - 1)/(1 - C(inf) P(0)) = -2/3
    v = lemma3_check(LAG, SNI_NEG)
    assert v.status is Status.STABLE
    assert v.conditions == pytest.approx({"b": -3.0, "c": -2.0 / 3.0})


def test_gain_tests_agree_with_oracle_on_hand_example():
    # 1 - P C = ((1 + s)^2 + 1 + 2 s)/(1 + s)^2, closed-loop poles -2 +- sqrt(2)
    ev = np.sort(closed_loop_poles(LAG, SNI_NEG).real)
    np.testing.assert_allclose(ev, [-2 - np.sqrt(2), -2 + np.sqrt(2)], atol=1e-12)
    assert oracle_stability(LAG, SNI_NEG).status is Status.STABLE


def test_negative_lag_controller_reproduces_condition_values_without_prechecks():
    # C = -1/(s+2) is not NI, so the hypotheses fail; the condition values are still (-1, -1.5)
    C = siso([-1], [2, 1])
    with pytest.raises(PreconditionViolated):
        lemma2_check(LAG, C)
    v = lemma2_check(LAG, C, pre=False)
    assert v.conditions == pytest.approx({"b": -1.0, "c": -1.5})
    assert v.status is Status.STABLE
    # (s + 1)(s + 2) + 1 = s^2 + 3 s + 3 is Hurwitz
    assert oracle_stability(LAG, C).status is Status.STABLE


@pytest.mark.parametrize("check", [lemma2_check, lemma3_check])
def test_two_lags_fail_condition_c(check):
    # P(0) C(0) = 2, so (c) = 2 - 1 = 1 >= 0
    v = check(LAG2, LAG)
    assert v.status is Status.UNSTABLE
    assert v.failed_condition == "c"
    assert v.conditions["c"] == pytest.approx(1.0)
    assert v.offending_pole.real == pytest.approx(np.sqrt(2) - 1, abs=1e-12)


@pytest.mark.parametrize("check", [lemma2_check, lemma3_check])
def test_zero_plant_is_stable(check):
    v = check(TransferMatrix.zeros(1), SNI_NEG)
    assert v.status is Status.STABLE
    assert v.conditions["b"] == pytest.approx(-1.0)


def test_boundary_flag_on_exact_equality():
    # P(0) C(0) = 1 exactly: condition (c) is 0 and the loop has a pole at the origin
    v = lemma2_check(LAG, LAG)
    assert v.status is Status.UNSTABLE
    assert v.boundary


def test_ill_posed_gain_test():
    P = siso([2, 1], [1, 1])       # 1 + 1/(s+1)
    v = lemma2_check(P, P)
    assert v.status is Status.ILL_POSED
    assert v.failed_condition == "a"


def test_gain_tests_reject_origin_poles():
    with pytest.raises(PreconditionViolated):
        lemma2_check(INTEGRATOR, SNI_NEG)


# --- origin-pole gain test -------------------------------------------------------------------------------------

def test_origin_pole_test_integrator_constant_controller():
    # P = 1/s, C = -1, psi = -1: limit ((C/s - 1) s/(s + 1)) -> -1, loop pole -1
    v = lemma4_check(INTEGRATOR, siso([-1.0]), psi=[[-1.0]], pre=False)
    assert v.status is Status.STABLE
    assert v.conditions["c"] == pytest.approx(-1.0)
    np.testing.assert_allclose(closed_loop_poles(INTEGRATOR, siso([-1.0])), [-1.0], atol=1e-12)


def test_origin_pole_test_limit_equals_static_controller_gain():
    # for P = 1/s and psi = -1 the limit is C(0)
    np.testing.assert_allclose(lemma4_limit(INTEGRATOR, SNI_NEG, np.array([[-1.0]])), [[-1.0]])
    np.testing.assert_allclose(lemma4_limit(INTEGRATOR, LAG, np.array([[-1.0]])), [[1.0]])


def _rescale(G, sigma):
    """G(sigma s), coefficient by coefficient."""
    return siso(*[e.coeffs * sigma ** np.arange(len(e.coeffs))
                  for e in (G.entries[0][0].num, G.entries[0][0].den)])


@given(st.floats(-3.0, 3.0))
def test_origin_pole_test_limit_is_invariant_under_frequency_scaling(log_sigma):
    # integrator plus a slow lightly damped mode, so the coefficients span many decades
    P = siso([1], [0, 1]) + siso([1e-4], [1e-4, 2e-3, 1])
    C = siso([-1, -3], [1, 1]) + siso([5e-3], [1e-2, 1])
    psi = np.array([[-0.7]])
    ref = lemma4_limit(P, C, psi)
    sigma = 10.0 ** log_sigma
    got = lemma4_limit(_rescale(P, sigma), _rescale(C, sigma), psi)
    np.testing.assert_allclose(got, ref, rtol=1e-8)
    assert lemma4_check(_rescale(P, sigma), _rescale(C, sigma), psi=psi).status is Status.STABLE


def test_origin_pole_test_unit_dc_controller_is_unstable():
    v = lemma4_check(INTEGRATOR, LAG, psi=[[-1.0]])
    assert v.status is Status.UNSTABLE
    # s (s + 1) - 1 has the root (sqrt(5) - 1)/2
    assert v.offending_pole.real == pytest.approx((np.sqrt(5) - 1) / 2, abs=1e-12)


def test_origin_pole_test_zero_plant():
    v = lemma4_check(TransferMatrix.zeros(1), SNI_NEG, psi=[[-1.0]])
    assert v.status is Status.STABLE
    assert v.conditions["c"] == pytest.approx(-1.0)


@pytest.mark.parametrize("psi", [[[1.0]], [[0.0]]])
def test_psi_must_be_negative_definite(psi):
    with pytest.raises(PsiInvalid):
        lemma4_check(LAG, SNI_NEG, psi=psi)


def test_psi_must_be_symmetric():
    P = TransferMatrix.scalar(LAG.entries[0][0], np.eye(2))
    C = TransferMatrix.scalar(SNI_NEG.entries[0][0], np.eye(2))
    with pytest.raises(PsiInvalid):
        lemma4_check(P, C, psi=[[-1.0, 0.5], [0.0, -1.0]])


def test_psi_instantaneous_bound_and_default():
    P = siso([-2, -3], [1, 1])     # -3 + 1/(s+1), SNI with P(inf) = -3
    with pytest.raises(PsiInvalid):
        lemma4_check(P, SNI_NEG, psi=[[-1.0]])
    psi = default_psi(P)
    assert psi[0, 0] < 0
    assert (P.at_infinity() @ psi)[0, 0] < 1
    lemma4_check(P, SNI_NEG)      # default is admissible


# --- homotopy determinant test ----------------------------------------------------------------------------------

def test_homotopy_test_stable_example():
    h = theorem1_check(LAG, SNI_NEG)
    assert h.statement_a and h.statement_b and h.statement_c
    assert h.equivalent_verdict and h.consistent
    assert h.tau_grid[0] == 0.0 and h.tau_grid[-1] == 1.0 and len(h.tau_grid) >= 101


def test_homotopy_test_two_lags_determinant_vanishes():
    # det(tau P(0) C(0) - 1) = 2 tau - 1 vanishes at tau = 1/2
    h = theorem1_check(LAG2, LAG)
    assert not h.equivalent_verdict
    assert h.consistent
    k = np.argmin(np.abs(h.tau_grid - 0.5))
    assert h.det_conditions_b[k, 2] == pytest.approx(0.0, abs=1e-12)


def test_homotopy_test_zero_plant():
    h = theorem1_check(TransferMatrix.zeros(1), SNI_NEG)
    assert h.equivalent_verdict
    np.testing.assert_allclose(h.det_conditions_b, -1.0)


# --- sufficient eigenvalue test ----------------------------------------------------------------------------------

def test_eigenvalue_test_stable_example():
    v = theorem2_check(LAG, SNI_NEG)
    assert v.status is Status.STABLE
    assert v.conditions["lmax_P0C0_minus_1"] == pytest.approx(-2.0)


def test_eigenvalue_test_inconclusive_on_unstable_loop():
    v = theorem2_check(LAG2, LAG)
    assert v.status is Status.INCONCLUSIVE
    assert v.failed_condition == "static"
    assert oracle_stability(LAG2, LAG).status is Status.UNSTABLE


def test_eigenvalue_test_zero_plant():
    assert theorem2_check(TransferMatrix.zeros(1), LAG).status is Status.STABLE


def test_eigenvalue_test_sign_hypothesis():
    P = siso([-2, -3], [1, 1])     # P(inf) = -3
    with pytest.raises(PreconditionViolated):
        theorem2_check(P, SNI_NEG)  # C(inf) = -2 as well


# --- properties over sampled pairs --------------------------------------------------------

seeds = st.integers(0, 2 ** 31)
N0 = UncertaintyClass(ClassKind.N0_dcBounded, 5.0)


def _pair(sp, sc, n, cls=N0):
    P = sample_plant(SampleSpec(cls, n, 2, sp))
    C = sample_sni_controller(n, 2, sc)
    return P, C


@given(seeds, seeds, st.integers(1, 2))
def test_gain_tests_match_oracle(sp, sc, n):
    P, C = _pair(sp, sc, n)
    o, a, b = oracle_stability(P, C), lemma2_check(P, C, pre=False), lemma3_check(P, C, pre=False)
    if not (o.boundary or a.boundary or b.boundary):
        assert o.status == a.status == b.status


@given(seeds, seeds, st.integers(1, 2), seeds)
def test_origin_pole_test_verdict_independent_of_psi(sp, sc, n, sq):
    P, C = _pair(sp, sc, n)
    rng = np.random.default_rng(sq)
    Pinf = P.at_infinity()
    verdicts = []
    for _ in range(2):
        Q = rng.standard_normal((n, n))
        psi = -(Q @ Q.T + 0.1 * np.eye(n))
        top = np.max(np.linalg.eigvals(Pinf @ psi).real)
        if top >= 0.5:
            psi = psi * 0.5 / top
        verdicts.append(lemma4_check(P, C, psi=psi, pre=False))
    ref = lemma2_check(P, C, pre=False)
    if not (ref.boundary or any(v.boundary for v in verdicts)):
        assert verdicts[0].status == verdicts[1].status == ref.status


@given(seeds, seeds, st.integers(1, 2))
def test_homotopy_test_statements_agree(sp, sc, n):
    P, C = _pair(sp, sc, n)
    assert theorem1_check(P, C, pre=False).consistent


@given(seeds, seeds, st.integers(1, 2))
def test_eigenvalue_test_is_sufficient(sp, sc, n):
    cls = UncertaintyClass(ClassKind.N0_instNonneg_dcStrict, 2.0)
    P, C = _pair(sp, sc, n, cls)
    if theorem2_check(P, C, pre=False).status is Status.STABLE:
        assert oracle_stability(P, C).status is Status.STABLE
