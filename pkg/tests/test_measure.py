import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxfrac import (AffineMap, Constant, Coordinate, DiscreteMeasure, IfsSystem, Linear,
                     PointCloud, Polynomial, PrunePolicy, chaos_game, contraction_profile,
                     dual_apply, dual_iterate, fractal_iterate, hausdorff, invariant_measure,
                     markov_iterate, markov_step, oscillation, systems)
from maxfrac.errors import CapExceededError, ConvergenceError
from maxfrac.measure import coalesce, rebalance, sample_close_pairs
from maxfrac.symbolic import compose, enumerate_words, word_probability

from conftest import BINARY_MAPS, CANTOR_MAPS, word_sum


# exact word sums over all 2^12 / 2^14 words, computed once with plain floats
CANTOR_MEAN_L12 = 0.49999905916178805
CANTOR_VAR_L12 = 0.12500000000044212
BINARY_M1_L14 = 0.499969482421875
BINARY_M2_L14 = 0.33330281637609005


def test_frozen_word_sum_oracles():
    half = (0.5, 0.5)
    assert word_sum(CANTOR_MAPS, half, 12, lambda x: x) == pytest.approx(CANTOR_MEAN_L12, abs=1e-15)
    assert word_sum(CANTOR_MAPS, half, 12, lambda x: (x - 0.5) ** 2) == pytest.approx(
        CANTOR_VAR_L12, abs=1e-15)
    assert word_sum(BINARY_MAPS, half, 14, lambda x: x) == pytest.approx(BINARY_M1_L14, abs=1e-15)
    assert word_sum(BINARY_MAPS, half, 14, lambda x: x * x) == pytest.approx(BINARY_M2_L14, abs=1e-15)


def test_measure_validation():
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([[0.0], [1.0]]), np.array([0.5, 0.6]))
    with pytest.raises(ValueError):
        DiscreteMeasure(np.array([[0.0], [1.0]]), np.array([1.5, -0.5]))
    mu = DiscreteMeasure.from_atoms([[0.0], [1e-13], [1.0]], [1, 1, 2])
    assert len(mu) == 2 and mu.weights.tolist() == [0.5, 0.5]


def test_rebalance_and_coalesce():
    w = rebalance(np.full(10, 0.1))
    assert math.fsum(w) == 1.0
    pts, w = coalesce(np.array([[0.0], [1.0], [0.0]]), np.array([0.25, 0.5, 0.25]))
    assert pts[:, 0].tolist() == [0.0, 1.0] and w.tolist() == [0.5, 0.5]


def test_markov_step_examples(cantor):
    mu = markov_step(cantor, DiscreteMeasure.dirac([0.0]))
    assert mu.points[:, 0].tolist() == pytest.approx([0, 2 / 3])
    assert mu.weights.tolist() == [0.5, 0.5]
    one = markov_step(systems.swap_single(), DiscreteMeasure.dirac([1.0, 1.0]))
    assert one.points.tolist() == [[2.0, 0.1]] and one.weights.tolist() == [1.0]


def test_markov_iterate_examples(cantor):
    mu, diag = markov_iterate(cantor, DiscreteMeasure.dirac([0.0]), 3)
    expected = sorted(compose([f for f in CANTOR_MAPS], w)(0.0) for w in enumerate_words(2, 3))
    np.testing.assert_allclose(np.sort(mu.points[:, 0]), expected, atol=1e-16)
    assert np.all(mu.weights == 1 / 8) and diag.steps == 3
    same, _ = markov_iterate(cantor, mu, 0)
    assert same is mu
    assert hausdorff(mu.support(), fractal_iterate(cantor, PointCloud([0.0]), 3)) == 0.0


def test_markov_iterate_cap(cantor):
    with pytest.raises(CapExceededError):
        markov_iterate(cantor, DiscreteMeasure.dirac([0.0]), 12, max_atoms=1000)


def test_pruning_respects_budget():
    sys_ = systems.cantor((0.999, 0.001))
    mu, diag = markov_iterate(sys_, DiscreteMeasure.dirac([0.0]), 12,
                              PrunePolicy(w_min=1e-15, budget=1e-12))
    assert 0 < diag.pruned_mass <= 1e-12
    assert len(mu) < 2 ** 12 and math.fsum(mu.weights) == 1.0
    _, none = markov_iterate(sys_, DiscreteMeasure.dirac([0.0]), 12, None)
    assert none.pruned_mass == 0.0 and none.atom_counts[-1] == 2 ** 12


def test_dual_apply_examples(cantor):
    B1 = dual_apply(cantor, Constant(1.0))
    np.testing.assert_array_equal(B1(np.array([[0.0], [0.7], [5.0]])), 1.0)
    assert dual_apply(cantor, Coordinate(0))(np.array([[0.0]]))[0] == pytest.approx(1 / 3)


def test_dual_iterate_closed_form(cantor):
    assert dual_iterate(cantor, Coordinate(0), 0, 0.3) == 0.3
    for n in range(1, 10):
        assert dual_iterate(cantor, Coordinate(0), n, 0.0) == pytest.approx((1 - 3.0 ** -n) / 2,
                                                                           abs=1e-15)
    assert dual_iterate(cantor, Coordinate(0), 4, [0.0]) == pytest.approx(40 / 81, abs=1e-15)


def test_dual_iterate_matches_nested_apply(swap2, rng):
    g = Polynomial([0.0, 1.0, -2.0, 0.5]) + 3.0 * Coordinate(1)
    x = rng.random((7, 2))
    nested = g
    for _ in range(5):
        nested = dual_apply(swap2, nested)
    np.testing.assert_allclose(dual_iterate(swap2, g, 5, x), nested(x), rtol=0, atol=1e-10)


def test_oscillation_examples():
    grid = PointCloud(np.linspace(0, 1, 201))
    assert oscillation(Constant(2.0), grid, 0.3) == 0.0
    assert oscillation(Coordinate(0), grid, 0.1) == pytest.approx(0.1, abs=0.005)
    assert oscillation(Polynomial([0, 0, 1]), grid, 5.0) == pytest.approx(1.0)


@settings(max_examples=40, deadline=None)
@given(st.floats(0, 2), st.floats(0, 2))
def test_oscillation_monotone_in_eps(a, b):
    grid = PointCloud(np.linspace(-1, 1, 41))
    g = Polynomial([0.1, -1, 0, 2])
    lo, hi = sorted((a, b))
    assert oscillation(g, grid, lo) <= oscillation(g, grid, hi)


def test_dual_oscillation_shrinks_with_word_stretch(cantor, swap2, rng):
    # |B^n g(x) - B^n g(y)| <= L_g * max_w d(f_w x, f_w y)
    poly = Polynomial([0, 1, 1])
    for sys_, g, L in ((cantor, poly, poly.lipschitz_on(-1, 2)), (swap2, Coordinate(1), 1.0)):
        x = rng.random((50, sys_.dim))
        y = x + np.clip(0.1 * rng.normal(size=x.shape), -0.5, 0.5)
        for n in range(6):
            gap = np.abs(dual_iterate(sys_, g, n, x) - dual_iterate(sys_, g, n, y))
            worst = np.zeros(len(x))
            for w in enumerate_words(sys_.m, n):
                f = compose(sys_.maps, w)
                worst = np.maximum(worst, np.linalg.norm(f(x) - f(y), axis=1))
            assert np.all(gap <= L * worst + 1e-12)


def test_close_pairs_within_eps(swap2, rng):
    x, y = sample_close_pairs(PointCloud(rng.random((30, 2))), 0.25, 300, rng)
    assert len(x) > 250
    assert np.all(np.linalg.norm(x - y, axis=1) <= 0.25)


def test_profile_cantor(cantor, cantor_cloud):
    prof = contraction_profile(cantor, cantor_cloud, 1.0, 6, 300)
    assert prof.a_hat[3] == pytest.approx(1 / 27, rel=1e-12)
    np.testing.assert_allclose(prof.a_hat[1:], 3.0 ** -np.arange(1, 7), rtol=1e-12)
    assert prof.recursion_violations == 0 and prof.claim_violations == 0


def test_profile_swap_examples(swap2):
    domain = PointCloud([[0, 0], [1, 0], [0, 1], [1, 1]])
    prof = contraction_profile(swap2, domain, 1.0, 6, 300)
    assert prof.a_hat[1] == pytest.approx(2.0)
    assert prof.a_hat[2] == pytest.approx(0.2)
    assert prof.a_hat[4] == pytest.approx(0.04)
    assert prof.recursion_violations == 0 and prof.claim_violations == 0
    assert all(prof.a_hat[n] <= prof.envelope[n] * (1 + 1e-12) for n in range(1, 7))


def test_profile_flags_violations():
    # claims a 0.2 comparison at depth 1 while the map stretches by 2
    sys_ = systems.swap_single(1)
    prof = contraction_profile(sys_, PointCloud([[0, 0], [1, 1]]), 1.0, 4, 60)
    assert prof.recursion_violations > 0 and not prof.recursion_ok[1:].all()


def test_invariant_measure_cantor_moments(cantor):
    res = invariant_measure(cantor, DiscreteMeasure.dirac([0.0]), 1e-4)
    m = res.measure.moments()
    assert res.converged and res.trace[-1] < 1e-4
    assert m["mean"][0] == pytest.approx(CANTOR_MEAN_L12, abs=1e-3)
    assert m["variance"][0] == pytest.approx(CANTOR_VAR_L12, abs=1e-3)


def test_invariant_measure_binary_moments(binary):
    res = invariant_measure(binary, DiscreteMeasure.dirac([0.0]), 1e-4)
    mu = res.measure
    assert mu.integrate(Coordinate(0)) == pytest.approx(BINARY_M1_L14, abs=1e-3)
    assert mu.integrate(Polynomial([0, 0, 1])) == pytest.approx(BINARY_M2_L14, abs=1e-3)


def test_invariant_measure_non_convergence(cantor):
    with pytest.raises(ConvergenceError) as exc:
        invariant_measure(cantor, DiscreteMeasure.dirac([0.0]), 1e-9, max_iter=3)
    assert len(exc.value.result.trace) == 3


def test_chaos_game_deterministic_and_mean(cantor):
    a = chaos_game(cantor, [0.0], 20000, rng_seed=11)
    b = chaos_game(cantor, [0.0], 20000, rng_seed=11)
    np.testing.assert_array_equal(a.points, b.points)
    np.testing.assert_array_equal(a.weights, b.weights)
    assert a.integrate(Coordinate(0)) == pytest.approx(0.5, abs=0.01)
    c = chaos_game(cantor, [0.0], 20000, rng_seed=12)
    assert not np.array_equal(a.points, c.points)


def uniform_atoms(draw_pts):
    return DiscreteMeasure.from_atoms(np.array(draw_pts)[:, None])


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(-2, 2), min_size=1, max_size=10),
       st.lists(st.floats(0.01, 1), min_size=10, max_size=10))
def test_markov_step_mass_and_support(pts, raw_w):
    sys_ = systems.cantor((0.3, 0.7))
    mu = DiscreteMeasure.from_atoms(np.array(pts)[:, None], raw_w[:len(pts)])
    nxt = markov_step(sys_, mu)
    assert math.fsum(nxt.weights) == 1.0
    assert hausdorff(nxt.support(), fractal_iterate(sys_, mu.support(), 1)) == 0.0
    for g in (Constant(1.0), Coordinate(0), Polynomial([0, 0, 1])):
        assert nxt.integrate(g) == pytest.approx(mu.integrate(dual_apply(sys_, g)), abs=1e-12)


def test_w1_controls_lipschitz_integrals(cantor):
    # |int g dmu_n - int g dmu| <= lip(g) W1(mu_n, mu) for every step of the iteration
    from maxfrac import wasserstein1_1d
    limit = invariant_measure(cantor, DiscreteMeasure.dirac([0.0]), 1e-6).measure
    g = Polynomial([0.2, -1.0, 0.5])
    L = g.lipschitz_on(0, 1)
    mu = DiscreteMeasure.dirac([1.0])
    for _ in range(10):
        mu = markov_step(cantor, mu)
        gap = abs(mu.integrate(g) - limit.integrate(g))
        assert gap <= L * wasserstein1_1d(mu, limit) + 1e-12
