import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from romcert.bounds import (aposteriori_bound, build_error_system, error_gramian, fourier_approximation,
                            fourier_basis, initial_condition_bound, offline_precompute, reduction_error,
                            remainder_norm, steady_state_moments)
from romcert.errors import CacheMissError, GridError
from romcert.inputs import cdplayer_input
from romcert.linalg import solve_log
from romcert.lti import SampledSignal, StateSpaceModel, TimeGrid, l2_norm, simulate
from romcert.reduction import balance, reduce

from conftest import pick_order, random_model
from oracles import periodic_steady_output, trapz_norm

TWO_PI = 2 * np.pi


def scalar(a, c=1.0, d=0.0):
    return StateSpaceModel([[a]], [1.0], [c], d)


def pair(seed, N=20, method="BT", d=0.0):
    m = random_model(seed, N, d=d)
    bal = balance(m)
    rom = reduce(bal, pick_order(bal, np.random.default_rng(seed)), method)
    return m, rom


def smooth_input(grid, seed=0):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(4)
    return SampledSignal.from_function(
        grid, lambda t: a[0] + a[1] * np.sin(1.3 * t) + a[2] * np.exp(0.1 * t) + a[3] * t)


# error system -----------------------------------------------------------

def test_error_system_structure():
    es = build_error_system(scalar(-1.0), scalar(-2.0, 3.0))
    np.testing.assert_array_equal(es.A, np.diag([-1.0, -2.0]))
    np.testing.assert_array_equal(es.c, [1.0, -3.0])
    assert es.d == 0.0


def test_error_system_of_identical_models_is_silent():
    m = random_model(2, 8)
    es = build_error_system(m, m)
    np.testing.assert_array_equal(es.c, np.concatenate([m.c, -m.c]))
    g = TimeGrid(TWO_PI, 500)
    v = np.linspace(-1, 1, 8)
    y, _ = simulate(es.model, smooth_input(g), es.stack_state(v, v))
    assert np.max(np.abs(y.values)) <= 1e-12


def test_error_output_matches_two_simulations():
    fom, rom = pair(3, N=60)
    g = TimeGrid(TWO_PI, 2000)
    u = smooth_input(g, 1)
    x0 = np.random.default_rng(0).standard_normal(60)
    xh0 = rom.project_state(x0)
    e = reduction_error(fom, rom, u, x0, xh0)
    y, _ = simulate(fom, u, x0)
    yh, _ = simulate(rom.model, u, xh0)
    np.testing.assert_allclose(e.values, y.values - yh.values, rtol=0,
                               atol=1e-9 * max(1.0, np.max(np.abs(y.values))))


# error Gramian ----------------------------------------------------------

def test_error_gramian_scalar_closed_form():
    eg = error_gramian(scalar(-1.0), scalar(-2.0))
    assert eg.Q[0, 0] == pytest.approx(1 / 2, rel=1e-14)
    assert eg.Qhat[0, 0] == pytest.approx(1 / 4, rel=1e-14)
    assert eg.S[0, 0] == pytest.approx(-1 / 3, rel=1e-14)


def test_error_gramian_of_identical_models():
    m = random_model(4, 7)
    eg = error_gramian(m, m)
    np.testing.assert_allclose(eg.S, -eg.Q, atol=1e-12 * np.abs(eg.Q).max())
    np.testing.assert_allclose(eg.Qhat, eg.Q, atol=1e-12 * np.abs(eg.Q).max())
    v = np.arange(1.0, 8.0)
    assert initial_condition_bound(eg, np.concatenate([v, v])) <= 1e-6 * np.linalg.norm(v)
    assert initial_condition_bound(eg, np.concatenate([v, -v])) > 0


def test_error_gramian_residuals_and_psd():
    fom, rom = pair(5, N=40)
    eg = error_gramian(fom, rom)
    es = build_error_system(fom, rom)
    G = eg.assembled
    R = es.A.T @ G + G @ es.A + np.outer(es.c, es.c)
    assert np.linalg.norm(R) <= 1e-8 * max(1.0, np.linalg.norm(np.outer(es.c, es.c)))
    w = np.linalg.eigvalsh(G)
    assert w[0] >= -1e-10 * np.sum(np.abs(w))
    np.testing.assert_allclose(eg.factor @ eg.factor.T, G, atol=1e-10 * np.abs(G).max())


def test_initial_condition_bound_zero_state():
    fom, rom = pair(6)
    eg = error_gramian(fom, rom)
    assert initial_condition_bound(eg, np.zeros(fom.order + rom.n)) == 0.0


@pytest.mark.parametrize("seed", range(3))
def test_initial_condition_bound_dominates_free_response(seed):
    fom, rom = pair(seed + 10, N=10)
    eg = error_gramian(fom, rom)
    es = build_error_system(fom, rom)
    xc = np.random.default_rng(seed).standard_normal(es.A.shape[0])
    bound = initial_condition_bound(eg, xc)
    for T in (1.0, 5.0):
        g = TimeGrid(T, 4000)
        y, _ = simulate(es.model, SampledSignal.zeros(g), xc)
        assert l2_norm(y) <= bound * (1 + 1e-6)


# Fourier approximation --------------------------------------------------

def test_fourier_constant_signal():
    g = TimeGrid(TWO_PI, 2000)
    fa = fourier_approximation(SampledSignal(g, np.full(g.m, 3.0)), 4)
    assert fa.lam[0] == pytest.approx(3.0, rel=1e-14)
    np.testing.assert_allclose(fa.lam[1:], 0.0, atol=1e-12)
    assert remainder_norm(fa) <= 1e-6


def test_fourier_single_cosine():
    T = 5.0
    g = TimeGrid(T, 2000)
    u = SampledSignal.from_function(g, lambda t: np.cos(TWO_PI * t / T))
    fa = fourier_approximation(u, 3)
    expected = np.zeros(7)
    expected[1] = 1.0
    np.testing.assert_allclose(fa.lam, expected, atol=1e-6)
    fa0 = fourier_approximation(u, 0)
    assert fa0.lam[0] == pytest.approx(0.0, abs=1e-12)
    assert remainder_norm(fa0) == pytest.approx(np.sqrt(T / 2), rel=1e-6)


def test_fourier_exact_sum_has_no_remainder():
    g = TimeGrid(TWO_PI, 2000)
    lam = np.array([0.5, 1.0, -2.0, 0.3, 0.7, 0.0, -1.1])
    u = SampledSignal(g, lam @ fourier_basis(g.nodes, 3, g.T))
    fa = fourier_approximation(u, 3)
    np.testing.assert_allclose(fa.lam, lam, atol=1e-10)
    assert remainder_norm(fa) <= 1e-6


def test_cdplayer_remainder_about_ten_percent():
    g = TimeGrid(TWO_PI, 2000)
    u = SampledSignal.from_function(g, cdplayer_input)
    rel = remainder_norm(fourier_approximation(u, 15)) / l2_norm(u)
    assert 0.08 <= rel <= 0.12


def test_remainder_identity_matches_direct_norm():
    g = TimeGrid(TWO_PI, 2000)
    u = SampledSignal.from_function(g, cdplayer_input)
    fa = fourier_approximation(u, 10)
    direct = l2_norm(u - fa.sample(g))
    assert fa.remainder_identity == pytest.approx(direct, rel=1e-4)
    assert remainder_norm(fa) == pytest.approx(direct, rel=1e-4)


def test_parseval_identity():
    g = TimeGrid(TWO_PI, 2000)
    u = SampledSignal.from_function(g, cdplayer_input)
    for K in (0, 1, 5, 15):
        fa = fourier_approximation(u, K)
        assert fa.norm_wK == pytest.approx(l2_norm(fa.sample(g)), rel=1e-5)
        assert fa.norm_wK <= fa.norm_u * (1 + 1e-9)


def test_fourier_grid_resolution_enforced():
    g = TimeGrid(TWO_PI, 199)
    with pytest.raises(GridError):
        fourier_approximation(SampledSignal.zeros(g), 10)
    with pytest.raises(ValueError):
        fourier_approximation(SampledSignal.zeros(g), -1)


# steady state -----------------------------------------------------------

def test_steady_state_hand_example():
    es = build_error_system(scalar(-1.0), scalar(-2.0))
    g = TimeGrid(TWO_PI, 2000)
    fa = fourier_approximation(SampledSignal.from_function(g, np.cos), 1)
    ssd = steady_state_moments(es, fa)
    G1 = 1 / (1j + 1) - 1 / (1j + 2)
    assert ssd.transfer[1] == pytest.approx(G1, rel=1e-12)
    assert ssd.transfer[0] == pytest.approx(0.5, rel=1e-12)
    assert ssd.norm_Fst == pytest.approx(np.sqrt(np.pi) * abs(G1), rel=1e-6)
    # long simulation settles onto the steady state
    g_long = TimeGrid(40 * np.pi, 40000)
    y, _ = simulate(es.model, SampledSignal.from_function(g_long, np.cos))
    tail = g_long.nodes >= 38 * np.pi
    ref = (G1 * np.exp(1j * g_long.nodes[tail])).real
    np.testing.assert_allclose(y.values[tail], ref, atol=1e-6)


def test_steady_state_of_identical_models_vanishes():
    m = random_model(12, 9)
    g = TimeGrid(TWO_PI, 2000)
    ssd = steady_state_moments(build_error_system(m, m), fourier_approximation(smooth_input(g), 5))
    assert ssd.norm_Fst <= 1e-12
    np.testing.assert_allclose(ssd.transfer, 0.0, atol=1e-12)


@pytest.mark.parametrize("seed", range(3))
def test_steady_norm_matches_sampled_steady_output(seed):
    fom, rom = pair(seed + 20, N=25)
    es = build_error_system(fom, rom)
    g = TimeGrid(TWO_PI, 2000)
    fa = fourier_approximation(smooth_input(g, seed), 10)
    ssd = steady_state_moments(es, fa)
    y = periodic_steady_output(es.A, es.b, es.c, es.d, fa.lam, 10, g.T, g.nodes)
    assert ssd.norm_Fst == pytest.approx(trapz_norm(g.nodes, y), rel=1e-5)


def test_steady_state_initial_state_reproduces_periodic_output():
    fom, rom = pair(30, N=25)
    es = build_error_system(fom, rom)
    g = TimeGrid(TWO_PI, 2000)
    fa = fourier_approximation(smooth_input(g, 2), 6)
    ssd = steady_state_moments(es, fa)
    y, _ = simulate(es.model, fa.sample(g), ssd.x_st0)
    ref = periodic_steady_output(es.A, es.b, es.c, es.d, fa.lam, 6, g.T, g.nodes)
    np.testing.assert_allclose(y.values, ref, atol=1e-4 * np.max(np.abs(ref)))


# the bound --------------------------------------------------------------

def test_zero_input_zero_state_gives_zero_bound():
    fom, rom = pair(1)
    g = TimeGrid(TWO_PI, 2000)
    rep = aposteriori_bound(fom, rom, SampledSignal.zeros(g), measure=True)
    assert rep.gamma == 0.0 and rep.actual_error == 0.0


def test_tightness_for_exact_fourier_input():
    fom, rom = pair(2, N=20)
    g = TimeGrid(TWO_PI, 2000)
    lam = np.array([0.3, 1.0, -0.5, 0.8, 0.2])
    u = SampledSignal(g, lam @ fourier_basis(g.nodes, 2, g.T))
    es = build_error_system(fom, rom)
    ssd = steady_state_moments(es, fourier_approximation(u, 2))
    N = fom.order
    rep = aposteriori_bound(fom, rom, u, ssd.x_st0[:N], ssd.x_st0[N:], K=2, measure=True)
    assert rep.term_rest <= 1e-6 * rep.alpha * rep.norm_u + 1e-12
    assert rep.term_transient <= 1e-6 * rep.gamma
    assert rep.actual_error == pytest.approx(rep.gamma, rel=2e-3)


def test_decomposition_consistency():
    fom, rom = pair(7, N=20)
    es = build_error_system(fom, rom)
    g = TimeGrid(TWO_PI, 2000)
    u = smooth_input(g, 3)
    rng = np.random.default_rng(3)
    x_stack = rng.standard_normal(es.A.shape[0])
    fa = fourier_approximation(u, 5)
    ssd = steady_state_moments(es, fa)
    w = fa.sample(g)
    y_st, _ = simulate(es.model, w, ssd.x_st0)
    y_xc, _ = simulate(es.model, SampledSignal.zeros(g), x_stack - ssd.x_st0)
    y_rest, _ = simulate(es.model, u - w, np.zeros_like(x_stack))
    y, _ = simulate(es.model, u, x_stack)
    np.testing.assert_allclose(y_st.values + y_xc.values + y_rest.values, y.values, rtol=0, atol=1e-8)


def test_term_rest_nonincreasing_in_K():
    fom, rom = pair(8)
    g = TimeGrid(TWO_PI, 2000)
    u = SampledSignal.from_function(g, cdplayer_input)
    ob = offline_precompute(fom, rom, 15, g.T)
    rest = [ob.evaluate(u, K=K).term_rest for K in range(16)]
    assert all(b <= a * (1 + 1e-9) + 1e-12 for a, b in zip(rest, rest[1:]))


def test_matching_feedthrough_cancels():
    fom = random_model(13, 10, d=0.7)
    rom = reduce(fom, 4, "BT")
    es = build_error_system(fom, rom)
    assert es.d == 0.0


def test_report_terms_are_consistent():
    fom, rom = pair(9)
    g = TimeGrid(TWO_PI, 2000)
    rep = aposteriori_bound(fom, rom, smooth_input(g), x0=np.ones(20) / 10, K=4)
    assert rep.gamma == rep.term_steady + rep.term_transient + rep.term_rest
    assert min(rep.term_steady, rep.term_transient, rep.term_rest) >= 0
    assert rep.apriori == pytest.approx(rep.alpha * rep.norm_u + rep.delta_x0)
    with pytest.raises(ValueError):
        rep.is_rigorous()


def test_stiff_reduced_model_is_measured_exactly():
    # a pole far beyond the grid resolution: sampled output overstates the error norm
    fom = random_model(1, 6)
    rom = StateSpaceModel([[-35291.0]], [183.5], [-183.5], 1.4)
    g = TimeGrid(TWO_PI, 2000)
    x0, xh0 = np.zeros(6), np.ones(1)
    rep = aposteriori_bound(fom, rom, SampledSignal.zeros(g), x0, xh0, K=0, alpha=1.0,
                            measure=True)
    sampled = l2_norm(reduction_error(fom, rom, SampledSignal.zeros(g), x0, xh0))
    assert sampled > 5 * rep.gamma
    assert rep.actual_error <= rep.gamma + 1e-6


@given(st.integers(0, 2**31 - 1), st.sampled_from([0, 1, 3, 10]), st.sampled_from(["BT", "SPA"]))
@settings(max_examples=25, deadline=None)
def test_bound_is_rigorous(seed, K, method):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(3, 16))
    m = random_model(seed, N, d=float(rng.normal()))
    bal = balance(m)
    rom = reduce(bal, pick_order(bal, rng), method)
    g = TimeGrid(TWO_PI, 2000)
    u = smooth_input(g, seed)
    rep = aposteriori_bound(m, rom, u, rng.standard_normal(N), rng.standard_normal(rom.n),
                            K=K, measure=True)
    assert rep.is_rigorous(1e-6)


# offline / online -------------------------------------------------------

def test_offline_matches_scratch():
    fom, rom = pair(14, N=30)
    g = TimeGrid(TWO_PI, 2000)
    ob = offline_precompute(fom, rom, 10, g.T)
    for seed in (0, 1):
        u = smooth_input(g, seed)
        x0 = np.full(30, 0.01 * (seed + 1))
        for K in (0, 3, 10):
            a = ob.evaluate(u, x0, None, K)
            b = aposteriori_bound(fom, rom, u, x0, None, K=K)
            assert a.gamma == pytest.approx(b.gamma, rel=1e-12)


def test_offline_cache_contract():
    fom, rom = pair(15)
    g = TimeGrid(TWO_PI, 2000)
    ob = offline_precompute(fom, rom, 5, g.T)
    ob.evaluate(smooth_input(g), K=5)
    with pytest.raises(CacheMissError):
        ob.evaluate(smooth_input(g), K=6)
    with pytest.raises(GridError):
        ob.evaluate(smooth_input(TimeGrid(3.0, 2000)))


def test_online_phase_performs_no_full_order_solves():
    fom, rom = pair(16, N=40)
    g = TimeGrid(TWO_PI, 2000)
    with solve_log.recording() as offline:
        ob = offline_precompute(fom, rom, 10, g.T)
    assert offline[("lyapunov", 40)] == 1 and offline[("shifted", 40)] == 11
    with solve_log.recording() as online:
        for seed in range(5):
            ob.evaluate(smooth_input(g, seed), np.ones(40), None, 10)
    assert sum(online.values()) == 0
