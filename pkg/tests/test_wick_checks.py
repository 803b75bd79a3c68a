import numpy as np
import pytest

from wzlab.errors import DomainError, NotExactlyComputableError
from wzlab.grid import make_grid, sample_brownian_batch
from wzlab.rates import s_q
from wzlab.wick import translate
from wzlab.wick_checks import (
    BOUND_KINDS,
    IDENTITY_NAMES,
    PLAIN_BOUND,
    STOCH_BOUND,
    INVERSE_BOUND,
    check_s_bound_props,
    constant_exponential_family,
    first_order_slope,
    lipschitz_sweep,
    linear_shift_family,
    orthonormal_directions,
    prop41_finite_difference_check,
    random_grid_function,
    random_smooth_families,
    run_identity_suite,
    s_bound_sweep,
    translation_lipschitz_check,
    zero_shift_family,
)


@pytest.fixture(scope="module")
def grid():
    return make_grid(1.0, 64)


@pytest.fixture(scope="module")
def paths(grid):
    return sample_brownian_batch(grid, 2, np.arange(100))


def test_orthonormal_directions(grid):
    dirs = orthonormal_directions(grid, 3)
    gram = np.array([[u.inner(v) for v in dirs] for u in dirs])
    assert np.allclose(gram, np.eye(3), atol=1e-12)


@pytest.mark.parametrize("kind", BOUND_KINDS)
def test_bound_equal_arguments(grid, kind):
    f = random_grid_function(grid, np.random.default_rng(0), 0.5)
    r = check_s_bound_props(f, f, 2.0, kind)
    assert r.lhs == 0.0 and r.rhs == 0.0 and r.holds


def test_bound_needs_paths_off_p2(grid, paths):
    rng = np.random.default_rng(1)
    f, g = random_grid_function(grid, rng, 0.5), random_grid_function(grid, rng, 0.4)
    with pytest.raises(NotExactlyComputableError):
        check_s_bound_props(f, g, 3.0, STOCH_BOUND)
    r = check_s_bound_props(f, g, 3.0, STOCH_BOUND, paths=paths)
    assert r.lhs > 0
    with pytest.raises(DomainError):
        check_s_bound_props(f, g, 2.0, "unknown_kind")


def test_bound_rhs_increasing_in_lambda(grid):
    v, w = orthonormal_directions(grid, 2)
    rhs = [check_s_bound_props(v * 0.5 + w * lam, v * 0.5, 2.0, STOCH_BOUND).rhs for lam in np.linspace(0.05, 1, 20)]
    assert np.all(np.diff(rhs) > 0)


@pytest.mark.parametrize("kind", BOUND_KINDS)
def test_lambda_sweep_ratio_bounded(grid, kind):
    # lhs / lam tends to the analytic first-order slope along f = g + lam u
    v, w = orthonormal_directions(grid, 2)
    angle = np.pi / 3
    u = v * np.cos(angle) + w * np.sin(angle)
    g = v * 0.6
    slope = first_order_slope(kind, 0.6, np.cos(angle))
    lams = np.geomspace(1e-4, 1e-1, 4)
    gaps = []
    for lam in lams:
        # below 1e-4 the exact distance loses digits to cancellation of O(lam^2) terms
        ratio = check_s_bound_props(g + u * lam, g, 2.0, kind).lhs / lam
        gaps.append(abs(ratio / slope - 1))
        assert ratio < 2 * slope
    assert gaps[0] < 10 * lams[0]
    assert np.all(np.diff(gaps) > 0)


@pytest.mark.parametrize("kind", BOUND_KINDS)
def test_sweep_fitted_constant_covers_holdout(grid, kind):
    fit = s_bound_sweep(kind, grid)
    assert fit.implied.shape == (10, 10)
    assert np.isfinite(fit.fitted_constant)
    hold = s_bound_sweep(kind, grid, lambdas=np.geomspace(1e-4, 1.0, 15), g_norms=np.linspace(0.05, 1.0, 8))
    assert hold.implied.max() <= fit.fitted_constant


def test_lipschitz_orthogonal_and_scaling(grid):
    v, w = orthonormal_directions(grid, 2)
    assert translation_lipschitz_check(v * 0.7, w * 0.5, 2.0, 3.0).lhs < 1e-15
    f, h = v * 0.8, (v + w) * (0.5 / np.sqrt(2))
    expected = abs(f.inner(h)) * np.exp((2.0 - 1) * 0.8**2 / 2)
    for t in (1e-4, 1e-6):
        lhs = translation_lipschitz_check(f, h * t, 2.0, 3.0).lhs
        assert lhs / t == pytest.approx(expected, rel=5 * t)


def test_lipschitz_preconditions(grid):
    v, w = orthonormal_directions(grid, 2)
    with pytest.raises(DomainError):
        translation_lipschitz_check(v, w * 0.5, 2.0, 2.0)
    with pytest.raises(DomainError):
        translation_lipschitz_check(v, w * 1.5, 2.0, 3.0)


def test_lipschitz_sweep_bounded(grid):
    r = lipschitz_sweep(grid)
    assert r.shape == (10, 10)
    assert np.all(np.isfinite(r)) and r.max() < np.e


def test_translate_derivative_zero_shift(grid, paths):
    X, _ = random_smooth_families(grid, np.random.default_rng(3))
    r = prop41_finite_difference_check(zero_shift_family(grid), X, paths)
    assert r.max_relative_discrepancy < 1e-6


def test_translate_derivative_constant_family(grid, paths):
    rng = np.random.default_rng(4)
    f, g = random_grid_function(grid, rng, 0.8), random_grid_function(grid, rng, 0.5)
    r = prop41_finite_difference_check(linear_shift_family(g), constant_exponential_family(f), paths, step=1e-4)
    assert r.max_relative_discrepancy <= 1e-6
    assert r.n_paths == 100


def test_translate_derivative_random_families(grid, paths):
    X, H = random_smooth_families(grid, np.random.default_rng(5))
    r = prop41_finite_difference_check(H, X, paths)
    assert r.max_relative_discrepancy <= 1e-4


def test_translate_derivative_detects_wrong_translation(grid, paths):
    X, H = random_smooth_families(grid, np.random.default_rng(6))
    r = prop41_finite_difference_check(H, X, paths, translate_fn=lambda a, g: translate(a, g * 1.01))
    assert r.max_relative_discrepancy > 1e-3


def test_identity_suite_passes():
    results = run_identity_suite(make_grid(1.0, 64), seed=1, n_paths=300, n_mc=100_000)
    assert [r.name for r in results] == list(IDENTITY_NAMES)
    failed = [(r.name, r.discrepancy) for r in results if not r.passed]
    assert not failed


def test_identity_suite_subset_and_unknown():
    g = make_grid(1.0, 32)
    res = run_identity_suite(g, only=["gjessing"], n_paths=50)
    assert len(res) == 1 and res[0].passed
    with pytest.raises(DomainError):
        run_identity_suite(g, only=["nope"])


def test_identity_suite_catches_faulty_translate():
    g = make_grid(1.0, 32)
    res = run_identity_suite(g, only=["gjessing", "translate_shift", "translate_composition"], n_paths=50,
                             translate_fn=lambda a, h: translate(a, h * 1.01))
    passed = {r.name: r.passed for r in res}
    assert not passed["gjessing"] and not passed["translate_shift"]
    # a uniformly rescaled shift still composes additively
    assert passed["translate_composition"]


def test_s_q_used_by_bounds():
    assert s_q(0.0, 2.0) == 0.0
    assert s_q(1.0, 2.0) == pytest.approx(np.e**2 + np.exp(0.5) - 1, rel=1e-14)
    assert PLAIN_BOUND != STOCH_BOUND != INVERSE_BOUND
