import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from wzlab.errors import DomainError
from wzlab.grid import (
    GridFunction,
    TimeGrid,
    inner_product,
    ito_integral,
    l2_norm,
    make_grid,
    sample_brownian,
    sample_brownian_batch,
    shift_path,
)


def test_make_grid_nodes():
    g = make_grid(1.0, 4)
    assert np.array_equal(g.nodes, [0, 0.25, 0.5, 0.75, 1.0])
    g = make_grid(2.0, 1)
    assert np.array_equal(g.nodes, [0.0, 2.0])
    assert g.dt == 2.0


@pytest.mark.parametrize("T, n", [(1.0, 0), (0.0, 4), (-1.0, 4), (1.0, 2.5)])
def test_make_grid_rejects(T, n):
    with pytest.raises(DomainError):
        make_grid(T, n)


@given(st.floats(1e-3, 1e3), st.integers(1, 5000))
def test_grid_invariants(T, n):
    g = make_grid(T, n)
    nodes = g.nodes
    assert nodes[0] == 0.0
    assert nodes[-1] == T
    assert np.all(np.diff(nodes) > 0)


def test_node_index_rejects_off_grid():
    g = make_grid(1.0, 8)
    assert g.node_index(0.375) == 3
    with pytest.raises(DomainError):
        g.node_index(0.3)


def test_grid_function_shape_checked():
    g = make_grid(1.0, 4)
    with pytest.raises(DomainError):
        GridFunction(g, np.ones(5))


@given(st.lists(st.floats(-10, 10), min_size=6, max_size=6),
       st.lists(st.floats(-10, 10), min_size=6, max_size=6),
       st.floats(-3, 3))
def test_inner_product_bilinear_symmetric(a, b, c):
    g = make_grid(1.5, 6)
    f, h = GridFunction(g, a), GridFunction(g, b)
    assert inner_product(f, h) == pytest.approx(inner_product(h, f), abs=1e-12)
    assert inner_product(f * c, h) == pytest.approx(c * inner_product(f, h), abs=1e-9)
    assert l2_norm(f) ** 2 == pytest.approx(inner_product(f, f), abs=1e-9)
    assert l2_norm(f) >= 0


def test_grid_mismatch_rejected():
    f = GridFunction.constant(make_grid(1.0, 4), 1.0)
    p = sample_brownian(make_grid(1.0, 8), 0, 0)
    with pytest.raises(DomainError):
        ito_integral(f, p)
    with pytest.raises(DomainError):
        shift_path(p, f)


def test_sampling_is_reproducible_and_order_free():
    g = make_grid(1.0, 33)
    a = sample_brownian(g, 123, 7)
    b = sample_brownian(g, 123, 7)
    assert np.array_equal(a.increments, b.increments)
    batch = sample_brownian_batch(g, 123, [9, 7, 2])
    assert np.array_equal(batch.increments[1], a.increments)
    assert not np.array_equal(sample_brownian(g, 124, 7).increments, a.increments)
    assert not np.array_equal(sample_brownian(g, 123, 8).increments, a.increments)


def test_path_values_start_at_zero():
    p = sample_brownian(make_grid(1.0, 10), 1, 0)
    assert p.values[0] == 0.0
    assert np.allclose(np.diff(p.values), p.increments)


def test_increment_variance_and_terminal_mean():
    g = make_grid(1.0, 100)  # dt = 0.01
    paths = sample_brownian_batch(g, 5, np.arange(100_000))
    x = paths.increments[:, 0]
    N = x.size
    var = x.var(ddof=1)
    # chi-square: sd of the sample variance is sigma^2 sqrt(2 / (N - 1))
    assert abs(var - 0.01) < 3 * 0.01 * np.sqrt(2 / (N - 1))
    bT = paths.values[:, -1]
    assert abs(bT.mean()) < 3 * np.sqrt(1.0 / N)


def test_ito_integral_basics():
    g = make_grid(1.0, 16)
    p = sample_brownian(g, 2, 3)
    assert ito_integral(GridFunction.zeros(g), p) == 0.0
    for k in (0, 5, 16):
        assert ito_integral(GridFunction.indicator(g, k), p) == pytest.approx(p.values[k], abs=1e-14)


def test_ito_isometry_mc():
    g = make_grid(1.0, 64)
    f = GridFunction.from_callable(g, lambda t: np.cos(3 * t) + t)
    paths = sample_brownian_batch(g, 11, np.arange(100_000))
    d = ito_integral(f, paths)
    N = d.size
    se = f.norm() ** 2 * np.sqrt(2 / (N - 1))
    assert abs(d.var(ddof=1) - f.norm() ** 2) < 3 * se


def test_shift_path_properties():
    g = make_grid(2.0, 20)
    rng = np.random.default_rng(0)
    p = sample_brownian(g, 4, 0)
    zero = GridFunction.zeros(g)
    assert np.array_equal(shift_path(p, zero).increments, p.increments)
    a = GridFunction(g, rng.standard_normal(20))
    b = GridFunction(g, rng.standard_normal(20))
    back = shift_path(shift_path(p, a), -a)
    assert np.allclose(back.increments, p.increments, rtol=0, atol=4 * np.finfo(float).eps)
    assert np.allclose(shift_path(shift_path(p, a), b).increments, shift_path(p, a + b).increments,
                       rtol=1e-14, atol=1e-15)


@settings(max_examples=25)
@given(st.integers(0, 2**32), st.integers(0, 1000))
def test_shift_covariance(seed, idx):
    g = make_grid(1.0, 24)
    rng = np.random.default_rng(seed)
    f = GridFunction(g, rng.standard_normal(24))
    h = GridFunction(g, rng.standard_normal(24))
    p = sample_brownian(g, seed, idx)
    lhs = ito_integral(f, shift_path(p, h)) - ito_integral(f, p)
    assert lhs == pytest.approx(f.inner(h), rel=1e-12, abs=1e-12)


def test_negative_sample_index_rejected():
    with pytest.raises(DomainError):
        sample_brownian(TimeGrid(1.0, 4), 0, -1)
