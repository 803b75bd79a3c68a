import numpy as np
import pytest

from wzlab.errors import DomainError, NotExactlyComputableError
from wzlab.grid import GridFunction, make_grid, sample_brownian_batch, shift_path
from wzlab.wick import (
    PLAIN_EXP,
    STOCH_EXP,
    ExpFactor,
    ExponentialVector,
    gamma_contract,
    inverse_exponential,
    l2_distance_exact,
    lp_norm_exact,
    lp_norm_mc,
    translate,
    wick_first_chaos,
    wick_inverse_exponential,
    wick_product,
)
from wzlab.wick_checks import orthonormal_directions, random_grid_function


@pytest.fixture(scope="module")
def grid():
    return make_grid(1.0, 64)


@pytest.fixture(scope="module")
def paths(grid):
    return sample_brownian_batch(grid, 3, np.arange(1000))


def rand_vec(grid, rng, n=3, max_norm=1.0):
    fs = [random_grid_function(grid, rng, rng.uniform(0.1, max_norm)) for _ in range(n)]
    return ExponentialVector.from_terms(zip(rng.uniform(-1, 1, n), fs))


def rel(a, b):
    return np.max(np.abs(a - b) / np.maximum(np.abs(a), np.abs(b)))


def test_evaluate_matches_definition(grid, paths):
    f = random_grid_function(grid, np.random.default_rng(0), 0.7)
    direct = np.exp(paths.increments @ f.cell_values - 0.5 * f.norm() ** 2)
    assert np.allclose(ExponentialVector.single(f).evaluate(paths), direct, rtol=1e-14)
    assert ExpFactor(f).evaluate(paths) == pytest.approx(np.exp(paths.increments @ f.cell_values), rel=1e-14)


def test_canonical_merge_and_zero_drop(grid):
    f = random_grid_function(grid, np.random.default_rng(1), 0.5)
    g = random_grid_function(grid, np.random.default_rng(2), 0.5)
    v = ExponentialVector.from_terms([(1.0, f), (2.0, g), (0.5, f)])
    assert len(v) == 2
    assert sorted(v.coeffs) == [1.5, 2.0]
    assert len(v - v) == 0
    assert (v - v).expectation() == 0.0


def test_wick_inverse_and_unit(grid, paths):
    rng = np.random.default_rng(3)
    f = random_grid_function(grid, rng, 0.8)
    prod = wick_product(ExponentialVector.single(f), wick_inverse_exponential(f))
    one = ExponentialVector.constant(grid)
    assert prod.equals(one)
    assert np.allclose(prod.evaluate(paths), 1.0, rtol=1e-14)
    a = rand_vec(grid, rng)
    assert wick_product(one, a).equals(a)


def test_wick_commutative_associative_bilinear(grid):
    rng = np.random.default_rng(4)
    a, b, c = (rand_vec(grid, rng, 2) for _ in range(3))
    assert wick_product(a, b).equals(wick_product(b, a))
    assert wick_product(wick_product(a, b), c).equals(wick_product(a, wick_product(b, c)))
    assert wick_product(a + b * 2.0, c).equals(wick_product(a, c) + wick_product(b, c) * 2.0)


def test_wick_expectation_factorises_mc(grid):
    rng = np.random.default_rng(5)
    a, b = rand_vec(grid, rng, 2, 0.5), rand_vec(grid, rng, 2, 0.5)
    big = sample_brownian_batch(grid, 17, np.arange(100_000))
    v = wick_product(a, b).evaluate(big)
    se = v.std(ddof=1) / np.sqrt(v.size)
    assert abs(v.mean() - a.expectation() * b.expectation()) < 3 * se


def test_grid_mismatch(grid):
    other = make_grid(1.0, 32)
    a = ExponentialVector.constant(grid)
    with pytest.raises(DomainError):
        wick_product(a, ExponentialVector.constant(other))
    with pytest.raises(DomainError):
        translate(a, GridFunction.zeros(other))


def test_translate_identity_and_composition(grid):
    rng = np.random.default_rng(6)
    a = rand_vec(grid, rng)
    assert translate(a, GridFunction.zeros(grid)).equals(a)
    g, h = random_grid_function(grid, rng, 0.6), random_grid_function(grid, rng, 0.4)
    assert translate(translate(a, g), h).equals(translate(a, g + h))
    # linear in a
    b = rand_vec(grid, rng)
    assert translate(a + b * 3.0, g).equals(translate(a, g) + translate(b, g) * 3.0)


def test_translate_is_path_shift(grid, paths):
    rng = np.random.default_rng(7)
    a = rand_vec(grid, rng)
    g = random_grid_function(grid, rng, 0.9)
    assert rel(translate(a, g).evaluate(paths), a.evaluate(shift_path(paths, g))) < 1e-10


def test_translate_of_own_exponential(grid, paths):
    # T_h E(h) = exp(delta(h) + |h|^2 / 2) = E(-h)^{-1}
    h = random_grid_function(grid, np.random.default_rng(8), 0.7)
    t = translate(ExponentialVector.single(h), h)
    assert t.coeffs[0] == pytest.approx(np.exp(h.norm() ** 2), rel=1e-14)
    expected = np.exp(paths.increments @ h.cell_values + 0.5 * h.norm() ** 2)
    assert rel(t.evaluate(paths), expected) < 1e-12
    assert rel(t.evaluate(paths), 1 / ExponentialVector.single(-h).evaluate(paths)) < 1e-12


def test_gamma_contract(grid, paths):
    assert gamma_contract(ExponentialVector.constant(grid, 2.5)).equals(ExponentialVector.constant(grid, 2.5))
    for norm in (0.3, 1.0, 2.0):
        f = random_grid_function(grid, np.random.default_rng(9), norm)
        lhs = 1 / ExponentialVector.single(f).evaluate(paths)
        rhs = gamma_contract(ExpFactor(-f * np.sqrt(2.0)).to_vector()).evaluate(paths)
        assert rel(lhs, rhs) < 1e-10
        e = ExponentialVector.single(f)
        assert lp_norm_exact(gamma_contract(e), 2) == pytest.approx(np.exp(norm**2 / 4), rel=1e-12)
        assert lp_norm_exact(gamma_contract(e), 2) <= lp_norm_exact(e, 2)


def test_inverse_exponential_is_reciprocal(grid, paths):
    f = random_grid_function(grid, np.random.default_rng(10), 1.2)
    prod = inverse_exponential(f).evaluate(paths) * ExponentialVector.single(f).evaluate(paths)
    assert np.allclose(prod, 1.0, rtol=1e-12)


def test_lp_norm_exact_values(grid):
    f = orthonormal_directions(grid, 1)[0]
    assert lp_norm_exact(ExponentialVector.single(f), 2) == pytest.approx(1.6487212707, abs=1e-10)
    assert lp_norm_exact(ExpFactor(f), 2) == pytest.approx(2.7182818285, abs=1e-10)
    assert ExponentialVector.single(f).expectation() == 1.0
    assert lp_norm_exact(ExponentialVector.single(f, -2.0), 3) == pytest.approx(2 * np.e, rel=1e-12)
    with pytest.raises(DomainError):
        lp_norm_exact(ExponentialVector.single(f), 0.5)


def test_lp_norm_multi_term(grid, paths):
    rng = np.random.default_rng(11)
    a = rand_vec(grid, rng, 3, 0.5)
    with pytest.raises(NotExactlyComputableError):
        lp_norm_exact(a, 3)
    # p = 2 Gram formula against the expansion of E[a^2]
    expect = sum(ai * aj * np.exp(fi.inner(fj)) for ai, fi in a.terms for aj, fj in a.terms)
    assert lp_norm_exact(a, 2) == pytest.approx(np.sqrt(expect), rel=1e-12)
    est, se = lp_norm_mc(a, 3, paths)
    assert est > 0 and 0 < se < est


def test_lp_norm_mc_matches_exact():
    g = make_grid(1.0, 32)
    big = sample_brownian_batch(g, 21, np.arange(100_000))
    f = random_grid_function(g, np.random.default_rng(12), 0.6)
    for obj in (ExponentialVector.single(f), ExpFactor(f * 0.8)):
        for p in (2, 3):
            est, se = lp_norm_mc(obj, p, big)
            assert abs(est - lp_norm_exact(obj, p)) < 3 * se


def test_l2_distance_exact(grid):
    v, w = orthonormal_directions(grid, 2)
    assert l2_distance_exact(v, v, PLAIN_EXP) == 0.0
    assert l2_distance_exact(v, v, STOCH_EXP) == 0.0
    assert l2_distance_exact(v, w, PLAIN_EXP) == pytest.approx(np.sqrt(2 * np.e**2 - 2 * np.e), rel=1e-12)
    assert l2_distance_exact(v, w, PLAIN_EXP) == pytest.approx(3.0564, abs=1e-4)
    assert l2_distance_exact(v, w, STOCH_EXP) == pytest.approx(np.sqrt(2 * np.e - 2), rel=1e-12)
    with pytest.raises(DomainError):
        l2_distance_exact(v, w, "other")


def test_l2_distance_mc():
    g = make_grid(1.0, 32)
    big = sample_brownian_batch(g, 5, np.arange(100_000))
    rng = np.random.default_rng(13)
    f, h = random_grid_function(g, rng, 0.6), random_grid_function(g, rng, 0.5)
    for kind, mk in ((PLAIN_EXP, lambda u: ExpFactor(u).to_vector()), (STOCH_EXP, ExponentialVector.single)):
        est, se = lp_norm_mc(mk(f) - mk(h), 2, big)
        assert abs(est - l2_distance_exact(f, h, kind)) < 3 * se


def test_wick_first_chaos_is_directional_derivative(grid, paths):
    rng = np.random.default_rng(14)
    a = rand_vec(grid, rng, 2, 0.6)
    u = random_grid_function(grid, rng, 0.5)
    s = 1e-6
    plus = wick_product(a, ExponentialVector.single(u * s)).evaluate(paths)
    minus = wick_product(a, ExponentialVector.single(u * -s)).evaluate(paths)
    fd = (plus - minus) / (2 * s)
    exact = wick_first_chaos(a, u, paths)
    assert np.max(np.abs(fd - exact)) < 1e-6 * np.max(np.abs(exact))
