import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from asyncadmm import analysis
from asyncadmm.admm import ActivationSampler, NetworkState, run
from asyncadmm.errors import InsufficientSamples, NoFeasibleBeta
from asyncadmm.graph import CommGraph, ring_cover, stack, whole_graph_cover
from asyncadmm.harness.experiment import network_constants
from asyncadmm.problems import (
    QuadraticData,
    SparsePcaData,
    centralized_minimizer,
    generate_lasso,
    generate_phase_retrieval,
    generate_quadratic,
    random_symmetric,
)

pos = st.floats(1e-3, 1e2)


# ---------------------------------------------------------------- metrics


def test_gradient_norm_zero_at_stationary_point():
    objs = generate_quadratic(0, 4, 3)
    xs = centralized_minimizer(objs)
    assert analysis.gradient_norm(objs, np.tile(xs, (4, 1))) <= 1e-12


def test_gradient_norm_quadratic_closed_form(rng):
    objs = generate_quadratic(1, 4, 3)
    x = rng.standard_normal((4, 3))
    xbar = x.mean(axis=0)
    expected = np.linalg.norm(sum(o.Q @ xbar - o.c for o in objs))
    assert analysis.gradient_norm(objs, x) == pytest.approx(expected, rel=1e-13)


def test_gradient_norm_pr_truth():
    objs = generate_phase_retrieval(2, 3, 4, 10, noise_sigma=0.0)
    assert analysis.gradient_norm(objs, np.tile(objs[0].x0, (3, 1))) == 0.0


def test_disagreement_basic(rng):
    assert analysis.disagreement(np.tile(rng.standard_normal(3), (5, 1))) == 0.0
    a = np.array([3.0, 4.0])
    assert analysis.disagreement(np.array([a, -a])) == pytest.approx(5.0)


def test_disagreement_two_pass_oracle(rng):
    x = rng.standard_normal((7, 4))
    mean = np.zeros(4)
    for row in x:
        mean += row
    mean /= 7
    oracle = max(np.sqrt(sum((row[k] - mean[k]) ** 2 for k in range(4))) for row in x)
    assert analysis.disagreement(x) == pytest.approx(oracle, rel=1e-13)


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2**31))
def test_metrics_permutation_invariant(seed):
    rng = np.random.default_rng(seed)
    x = rng.standard_normal((5, 3))
    perm = rng.permutation(5)
    objs = generate_quadratic(seed % 50, 5, 3)
    assert analysis.disagreement(x[perm]) == pytest.approx(analysis.disagreement(x), rel=1e-12)
    assert analysis.gradient_norm(objs, x[perm]) == pytest.approx(analysis.gradient_norm(objs, x), rel=1e-12)


def test_prox_residual_smooth_is_step_times_gradient(rng):
    objs = generate_quadratic(3, 3, 2)
    x = rng.standard_normal((3, 2))
    assert analysis.prox_gradient_residual(objs, x, 0.1) == pytest.approx(
        0.1 * analysis.gradient_norm(objs, x), rel=1e-12)


def test_prox_residual_zero_at_sparse_solution():
    # -|x|^2 + l1 on the unit ball: e_1 is stationary when l1 < 2
    objs = [SparsePcaData(np.diag([1.0, 0.5, 0.2]), l1_weight=0.3)]
    assert analysis.prox_gradient_residual(objs, np.array([[1.0, 0.0, 0.0]]), 0.1) <= 1e-15


def test_record_invariants(rng):
    objs = generate_quadratic(0, 3, 2)
    r = analysis.make_record(1, 0.5, objs, rng.standard_normal((3, 2)), (1, 3), 0, 0.0, residual_step=0.5)
    assert r.grad_norm >= 0 and r.disagreement >= 0
    assert r.csv_row()[5] == "1 3"


# ------------------------------------------------------- condition arithmetic


def test_condition_direct_arithmetic():
    ok = analysis.check_gamma_condition(0.05, 1.0, 1.0, 10, 10)
    assert ok.alpha_value * 0.05 == pytest.approx(-0.2225, abs=1e-12)
    assert ok.feasible
    bad = analysis.check_gamma_condition(0.1, 1.0, 1.0, 10, 10)
    assert bad.alpha_value * 0.1 == pytest.approx(0.06, abs=1e-12)
    assert not bad.feasible


@pytest.mark.parametrize("frac", [0.3, 0.49, 0.51, 0.75])
def test_small_gamma_limit(frac):
    expr = analysis.condition_expression(1e-10, 1.0, 1.0, frac)
    assert expr == pytest.approx((1 - frac) - 0.5, abs=1e-8)
    assert (expr < 0) == (frac > 0.5)


def test_minimal_fraction_small_gamma():
    assert analysis.minimal_fraction(1e-8, 1.0, 1.0) == pytest.approx(0.5, abs=1e-6)


@settings(max_examples=100, deadline=None)
@given(gamma=st.floats(1e-6, 0.5), L=pos, ell=pos)
def test_minimal_fraction_bracket(gamma, L, ell):
    q = analysis.minimal_fraction(gamma, L, ell)
    if q is None:
        assert analysis.condition_expression(gamma, L, ell, 1.0) >= 0
        return
    if q + 1e-4 <= 1:
        assert analysis.condition_expression(gamma, L, ell, q + 1e-4) < 0
    if q - 1e-4 >= 0:
        assert analysis.condition_expression(gamma, L, ell, q - 1e-4) >= 0


@settings(max_examples=100, deadline=None)
@given(beta=st.floats(1e-2, 1e4), L=pos, ell=pos, C=st.integers(1, 40))
def test_beta_gamma_duality(beta, L, ell, C):
    b = analysis.check_beta_condition(beta, L, ell, 40, C)
    g = analysis.check_gamma_condition(1 / beta, L, ell, 40, C)
    assert b.feasible == g.feasible
    assert b.alpha_value == g.alpha_value
    assert (b.alpha_value < 0) == b.feasible


def test_beta_examples():
    assert analysis.check_beta_condition(20.0, 1.0, 1.0, 10, 10).feasible
    assert not analysis.check_beta_condition(1.0, 1.0, 1.0, 10, 10).feasible
    rep = analysis.check_beta_condition(1e5, 1.0, 1.0, 10, 4)
    assert not rep.feasible and rep.minimal_beta is None
    with pytest.raises(NoFeasibleBeta):
        analysis.minimal_feasible_beta(1.0, 1.0, 0.4)


def test_beta_literal_fraction_reported():
    rep = analysis.check_beta_condition(50.0, 1.0, 1.0, 30, 24, d=3, num_active=4)
    assert rep.fraction == pytest.approx(0.8)
    assert rep.literal_fraction == pytest.approx(0.4)
    assert rep.literal_feasible is False


@settings(max_examples=100, deadline=None)
@given(L=pos, ell=pos, frac=st.floats(0.55, 1.0))
def test_minimal_beta_is_tight(L, ell, frac):
    try:
        b = analysis.minimal_feasible_beta(L, ell, frac)
    except NoFeasibleBeta:
        return
    assert analysis.beta_expression(b, L, ell, frac) < 0
    assume(b > max(L, 1e-6) * (1 + 1e-6))
    assert analysis.beta_expression(b * (1 - 1e-6), L, ell, frac) >= 0


# ---------------------------------------------------------- smoothness


def test_smoothness_exact_for_quadratic(rng):
    q = QuadraticData(random_symmetric(rng, 6, -2.0, 3.0), np.zeros(6))
    assert analysis.estimate_smoothness(q) == pytest.approx((3.0, 2.0), abs=1e-12)
    assert analysis.estimate_smoothness(SparsePcaData(np.eye(4))) == pytest.approx((2.0, 2.0))


def test_pr_smoothness_monotone_and_dominates_hessians(rng):
    obj = generate_phase_retrieval(3, 1, 3, 20)[0]
    ests = [analysis.estimate_smoothness(obj, 1.0, k, seed=4) for k in (5, 20, 60)]
    assert ests[0][0] <= ests[1][0] <= ests[2][0]
    assert ests[0][1] <= ests[1][1] <= ests[2][1]
    L_hat = ests[-1][0]
    h = 1e-5
    for _ in range(10):
        a = rng.standard_normal(6)
        a *= rng.random() ** (1 / 6) / np.linalg.norm(a)
        H = np.array([(obj.smooth_gradient(a + h * e) - obj.smooth_gradient(a - h * e)) / (2 * h)
                      for e in np.eye(6)])
        assert np.linalg.norm(0.5 * (H + H.T), 2) <= L_hat * 1.1


def test_network_constants_per_copy():
    cover = ring_cover(4, 2)
    objs = generate_quadratic(0, 4, 2, -1.0, 3.0)
    L, ell = network_constants(cover, objs)
    assert L == pytest.approx(1.5) and ell == pytest.approx(0.5)


# ---------------------------------------------------------- statistics


def test_xi_check_full_activation_zero():
    cover = whole_graph_cover(CommGraph.ring(4), 2)
    objs = generate_quadratic(0, 4, 2)
    tr = analysis.xi_trajectory(cover, objs, np.ones(cover.p), 0.1, 300, 4)
    rep = analysis.xi_bound_check(tr["xi_sq"], tr["du_sq"], 0.1, 2.0, 1.0, tr["vu_sq"])
    assert rep.ratio == 0.0 and rep.passed


def test_xi_check_fixed_point_vacuous():
    z = np.zeros(300)
    rep = analysis.xi_bound_check(z, z, 0.1, 2.0, 0.75, z)
    assert rep.passed and rep.ratio == 0.0


def test_xi_check_needs_samples():
    with pytest.raises(InsufficientSamples):
        analysis.xi_bound_check(np.ones(10), np.ones(10), 0.1, 1.0, 0.75)


def test_merit_trend_constant_and_short():
    rep = analysis.merit_trend([2.5] * 600)
    assert rep.stabilized and rep.nonincreasing
    with pytest.raises(InsufficientSamples):
        analysis.merit_trend([1.0] * 499)


def test_merit_trend_detects_growth():
    rep = analysis.merit_trend(np.linspace(0, 1, 600))
    assert not rep.nonincreasing and not rep.stabilized


@pytest.mark.parametrize("subset", [5, 4])
def test_merit_trend_lasso_feasible(subset):
    cover = ring_cover(5, 4)
    objs = generate_lasso(1, 5, 4, 8, lam=0.5)
    L, ell = network_constants(cover, objs)
    beta = analysis.minimal_feasible_beta(L, ell, subset / 5)
    state = NetworkState.from_x(cover, np.random.default_rng(0).standard_normal((5, 4)), beta)
    _, recs = run(state, cover, objs, ActivationSampler(5, subset, seed=1), 1000)
    rep = analysis.merit_trend(recs)
    assert rep.nonincreasing and rep.stabilized


def test_stack_used_in_trajectory_shapes():
    cover = ring_cover(3, 1)
    tr = analysis.xi_trajectory(cover, generate_quadratic(0, 3, 1), stack(cover, np.ones(3)), 0.2, 5, 4)
    assert tr["xi_sq"].shape == tr["du_sq"].shape == tr["vu_sq"].shape == (5,)
