import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from maxfrac import DiscreteMeasure, PointCloud, embed, hutchinson_on, mcshane_extend, wasserstein1
from maxfrac import wasserstein1_1d
from maxfrac.errors import DimensionError, MassMismatchError
from maxfrac.metric import pairwise
from maxfrac.transport import lipschitz_constant, measure_on, restrict


def dirac(*x):
    return DiscreteMeasure.dirac(np.array(x, dtype=float))


def random_measure(rng, k, d, spread=1.0):
    return DiscreteMeasure.from_atoms(spread * rng.normal(size=(k, d)), rng.random(k) + 0.05)


def test_w1_examples():
    assert wasserstein1(dirac(0, 0), dirac(3, 4)).cost == 5.0
    mu = DiscreteMeasure.from_atoms([[0.0], [1.0]])
    assert wasserstein1(mu, mu).cost == 0.0
    res = wasserstein1(mu, dirac(0.5))
    assert res.cost == 0.5 and res.gap <= 1e-12
    assert res.plan[:, 2].sum() == pytest.approx(1.0)


def test_w1_1d_examples():
    assert wasserstein1_1d(dirac(0), dirac(1)) == 1.0
    half = DiscreteMeasure.from_atoms([[0.0], [1.0]])
    assert wasserstein1_1d(half, half) == 0.0
    mixed = DiscreteMeasure(np.array([[0.0], [1.0]]), np.array([0.3, 0.7]))
    assert wasserstein1_1d(mixed, dirac(1)) == pytest.approx(0.3, abs=1e-16)


def test_w1_input_checks():
    with pytest.raises(DimensionError):
        wasserstein1(dirac(0), dirac(0, 0))
    with pytest.raises(DimensionError):
        wasserstein1_1d(dirac(0, 0), dirac(1, 1))
    tilted = DiscreteMeasure.__new__(DiscreteMeasure)
    object.__setattr__(tilted, "points", np.array([[0.0]]))
    object.__setattr__(tilted, "weights", np.array([0.5]))
    with pytest.raises(MassMismatchError):
        wasserstein1(tilted, dirac(0))


def check_solve(mu, nu, res):
    assert res.gap <= 1e-8
    # plan marginals
    P = np.zeros((len(mu), len(nu)))
    P[res.plan[:, 0].astype(int), res.plan[:, 1].astype(int)] = res.plan[:, 2]
    np.testing.assert_allclose(P.sum(axis=1), mu.weights, atol=1e-12)
    np.testing.assert_allclose(P.sum(axis=0), nu.weights, atol=1e-12)
    # witness is 1-Lipschitz across all atoms of both sides
    pts = np.concatenate([mu.points, nu.points])
    vals = np.concatenate([res.potential_source, res.potential_target])
    D = pairwise(pts, pts)
    assert np.all(np.abs(vals[:, None] - vals[None, :]) <= D + 1e-12)


def test_w1_matches_cdf_oracle_random_1d(rng):
    for _ in range(60):
        mu = random_measure(rng, rng.integers(1, 30), 1)
        nu = random_measure(rng, rng.integers(1, 30), 1, 2.0)
        res = wasserstein1(mu, nu)
        assert res.cost == pytest.approx(wasserstein1_1d(mu, nu), abs=1e-8)
        check_solve(mu, nu, res)


def test_w1_2d_solves_certified(rng):
    for _ in range(20):
        mu, nu = random_measure(rng, 15, 2), random_measure(rng, 12, 2)
        check_solve(mu, nu, wasserstein1(mu, nu))


def test_w1_triangle_random(rng):
    for _ in range(30):
        a, b, c = (random_measure(rng, 8, 2) for _ in range(3))
        ab, bc, ac = (wasserstein1(*p).cost for p in ((a, b), (b, c), (a, c)))
        assert ac <= ab + bc + 1e-10
        assert ab == pytest.approx(wasserstein1(b, a).cost, abs=1e-12)


def test_w1_translation_of_dirac_mixture():
    mu = DiscreteMeasure.from_atoms([[0.0, 0.0], [1.0, 2.0], [-1.0, 0.5]], [1, 2, 3])
    shifted = DiscreteMeasure(mu.points + np.array([0.3, -0.4]), mu.weights)
    assert wasserstein1(mu, shifted).cost == pytest.approx(0.5, abs=1e-12)


def test_mcshane_examples():
    Y = PointCloud([0.0, 1.0])
    assert mcshane_extend(Y, [0.0, 1.0], 1.0, [0.4]) == pytest.approx(0.4)
    assert mcshane_extend(Y, [0.0, 1.0], 1.0, [1.5]) == pytest.approx(0.5)
    const = mcshane_extend(Y, [2.5, 2.5], 0.0, np.array([[-7.0], [0.3], [9.0]]))
    np.testing.assert_array_equal(const, 2.5)
    with pytest.raises(ValueError):
        mcshane_extend(Y, [0.0, 1.0], 0.5, [0.2])


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 12), st.integers(1, 2), st.integers(0, 2 ** 32 - 1))
def test_mcshane_restriction_and_lipschitz(k, d, seed):
    rng = np.random.default_rng(seed)
    Y = PointCloud(rng.normal(size=(k, d)))
    vals = rng.normal(size=len(Y))
    L = lipschitz_constant(Y, vals)
    ext = mcshane_extend(Y, vals, L, Y.points)
    np.testing.assert_array_equal(ext, vals)
    q = rng.normal(size=(40, d)) * 2
    ev = mcshane_extend(Y, vals, L, q)
    both = np.concatenate([q, Y.points])
    bv = np.concatenate([ev, vals])
    D = pairwise(both, both)
    off = D > 0
    ratios = np.abs(bv[:, None] - bv[None, :])[off] / D[off]
    assert ratios.max() <= L * (1 + 1e-9) + 1e-12


def test_embed_and_measure_on():
    Y = PointCloud([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
    mu = measure_on(Y, [0.5, 0.0, 0.5])
    e = embed(mu, Y)
    np.testing.assert_array_equal(e.points, mu.points)
    np.testing.assert_array_equal(e.weights, mu.weights)
    assert e.mass == pytest.approx(1.0)
    with pytest.raises(ValueError):
        embed(DiscreteMeasure.dirac([5.0, 5.0]), Y)
    np.testing.assert_array_equal(restrict(lambda x: x[..., 0], Y), [0.0, 1.0, 0.0])


@pytest.mark.parametrize("seed", range(15))
def test_restricted_lp_equals_ambient_w1(seed):
    rng = np.random.default_rng(seed)
    Y = PointCloud(rng.normal(size=(int(rng.integers(2, 12)), 2)))
    w1 = rng.random(len(Y)) * (rng.random(len(Y)) < 0.7)
    w2 = rng.random(len(Y))
    w1[0] += 0.1
    mu1, mu2 = measure_on(Y, w1 / w1.sum()), measure_on(Y, w2 / w2.sum())
    assert hutchinson_on(Y, mu1, mu2) == pytest.approx(
        wasserstein1(embed(mu1, Y), embed(mu2, Y)).cost, abs=1e-8)


measures1d = st.lists(st.tuples(st.floats(-5, 5), st.floats(0.01, 1)), min_size=1, max_size=10)


def as_measure(atoms):
    return DiscreteMeasure.from_atoms(np.array([[a] for a, _ in atoms]), [w for _, w in atoms])


@settings(max_examples=100, deadline=None)
@given(measures1d, measures1d, measures1d)
def test_w1_metric_axioms_1d(a, b, c):
    A, B, C = map(as_measure, (a, b, c))
    ab = wasserstein1_1d(A, B)
    assert ab >= 0 and ab == pytest.approx(wasserstein1_1d(B, A), abs=1e-12)
    assert wasserstein1_1d(A, A) == 0.0
    assert wasserstein1_1d(A, C) <= ab + wasserstein1_1d(B, C) + 1e-10
    assert wasserstein1(A, B).cost == pytest.approx(ab, abs=1e-8)
