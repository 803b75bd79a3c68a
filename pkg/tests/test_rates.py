import numpy as np
import pytest

from wzlab.errors import DomainError
from wzlab.grid import make_grid
from wzlab.kernels import mollifier_kernel, polygonal_kernel
from wzlab.models import DriftSpec, SDEConfig, SigmaSpec
from wzlab.rates import (
    ITO_VS_WICK,
    STRA_VS_WZ,
    ErrorCurve,
    ErrorPoint,
    SBoundParams,
    bound_argument,
    bound_check,
    closed_form_curve,
    closed_form_error,
    closed_form_node_errors,
    fit_rate,
    mc_error,
    s_q,
)


def cfg_for(grid, drift=None, x=1.0):
    return SDEConfig(drift or DriftSpec.zero(), SigmaSpec.constant(1.0), x, grid)


def synthetic(pair, errs_fn, deltas=(0.2, 0.1, 0.05, 0.025), p=2.0, se=0.0):
    return ErrorCurve(pair, p, [ErrorPoint(0.0, d, errs_fn(d), se, 100) for d in deltas])


def test_s_q_values():
    for q in (1.0, 2.0, 3.0, 7.5):
        assert s_q(0.0, q) == 0.0
    assert s_q(1.0, 2.0) == pytest.approx(8.0377773696, abs=1e-9)
    assert s_q(1e-3, 2.0) / 1e-3 == pytest.approx(1.0005, abs=5e-4)
    lam = np.linspace(0, 3, 100)
    assert np.all(np.diff(s_q(lam, 2.0)) > 0)
    assert s_q(0.5, 3.0) > s_q(0.5, 2.0)
    assert SBoundParams(2.0)(1.0) == s_q(1.0, 2.0)
    with pytest.raises(DomainError):
        s_q(-0.1, 2.0)
    with pytest.raises(DomainError):
        s_q(0.1, 0.5)


def test_bound_argument():
    assert bound_argument(STRA_VS_WZ, 0.3) == 0.3
    assert bound_argument(ITO_VS_WICK, 0.3) == pytest.approx(0.3 * np.sqrt(2))
    with pytest.raises(DomainError):
        bound_argument("Other", 0.3)


def test_fit_rate_synthetic():
    f1 = fit_rate(synthetic(STRA_VS_WZ, lambda d: d))
    assert f1.slope == pytest.approx(1.0, abs=1e-12)
    assert f1.r2 == pytest.approx(1.0, abs=1e-12)
    assert f1.q == 3.0
    f2 = fit_rate(synthetic(STRA_VS_WZ, lambda d: 5 * d**2))
    assert f2.slope == pytest.approx(2.0, abs=1e-12)
    assert np.exp(f2.intercept) == pytest.approx(5.0, rel=1e-12)


def test_fit_rate_degenerate():
    with pytest.raises(DomainError):
        fit_rate(synthetic(STRA_VS_WZ, lambda d: d, deltas=(0.2, 0.1)))
    with pytest.raises(DomainError):
        fit_rate(synthetic(STRA_VS_WZ, lambda d: 0.0))
    with pytest.raises(DomainError):
        fit_rate(synthetic(STRA_VS_WZ, lambda d: -d))
    with pytest.raises(DomainError):
        fit_rate(synthetic(STRA_VS_WZ, lambda d: d), q=2.0)


def test_bound_check():
    curve = synthetic(ITO_VS_WICK, lambda d: 3 * d)
    with pytest.raises(DomainError):
        bound_check(curve, 2.0)
    rep = bound_check(curve, 3.0)
    assert rep.all_points_within
    assert rep.fitted_C == pytest.approx(np.max(3 * curve.deltas / s_q(np.sqrt(2) * curve.deltas, 3.0)))
    single = synthetic(STRA_VS_WZ, lambda d: 0.7, deltas=(0.1,))
    rep = bound_check(single, 3.0)
    assert rep.all_points_within
    assert rep.fitted_C == pytest.approx(0.7 / s_q(0.1, 3.0))


def test_error_curve_validation():
    with pytest.raises(DomainError):
        ErrorCurve("Other", 2.0)
    with pytest.raises(DomainError):
        ErrorCurve(STRA_VS_WZ, 0.5)
    c = synthetic(STRA_VS_WZ, lambda d: d)
    assert len(c.subset([True, False, True, False]).points) == 2


def test_closed_form_node_errors_polygonal():
    # at partition nodes the polygonal approximation is exact
    g = make_grid(1.0, 256)
    k = polygonal_kernel(g, 1 / 16)
    for pair in (STRA_VS_WZ, ITO_VS_WICK):
        errs = closed_form_node_errors(pair, cfg_for(g), k)
        assert np.all(errs[::16] < 1e-12)
        assert errs.max() > 0.05


def test_closed_form_plain_formula():
    # sqrt(e^{2|K|^2} + e^{2t} - 2 e^{|K + 1_[0,t]|^2 / 2}) with drift factor
    g = make_grid(1.0, 128)
    k = mollifier_kernel(g, 0.1)
    a = 0.3
    errs = closed_form_node_errors(STRA_VS_WZ, cfg_for(g, DriftSpec.linear(a), x=-2.0), k)
    ind = np.tri(129, 128, k=-1)
    j = 77
    ff = k.table[j] @ k.table[j] * g.dt
    sm = (k.table[j] + ind[j]) @ (k.table[j] + ind[j]) * g.dt
    t = g.nodes[j]
    expected = 2.0 * np.exp(a * t) * np.sqrt(np.exp(2 * ff) + np.exp(2 * t) - 2 * np.exp(sm / 2))
    assert errs[j] == pytest.approx(expected, rel=1e-12)


def test_closed_form_rejects_nonlinear():
    g = make_grid(1.0, 64)
    with pytest.raises(DomainError):
        closed_form_error(STRA_VS_WZ, cfg_for(g, DriftSpec.logistic_clipped(1.0, 2.0)), polygonal_kernel(g, 1 / 8))


def test_closed_form_slope():
    g = make_grid(1.0, 512)
    kernels = [polygonal_kernel(g, 2.0**-j) for j in range(4, 9)]
    for pair in (STRA_VS_WZ, ITO_VS_WICK):
        fit = fit_rate(closed_form_curve(pair, cfg_for(g), kernels))
        assert 0.9 <= fit.slope <= 1.1


@pytest.mark.parametrize("pair", [STRA_VS_WZ, ITO_VS_WICK])
def test_mc_matches_closed_form(pair):
    g = make_grid(1.0, 64)
    k = polygonal_kernel(g, 1 / 8)
    cfg = cfg_for(g, DriftSpec.linear(0.5))
    pt = mc_error(pair, cfg, k, 2.0, 4000, seed=5, subsample=4)
    errs = closed_form_node_errors(pair, cfg, k)
    assert pt.n_samples == 4000 and pt.stderr > 0
    assert abs(pt.error - errs[pt.node]) < 3 * pt.stderr
    assert abs(pt.error - errs.max()) < 3 * pt.stderr


def test_mc_degenerate_kernel_is_exact_at_nodes():
    g = make_grid(1.0, 64)
    pt = mc_error(STRA_VS_WZ, cfg_for(g), polygonal_kernel(g, g.dt), 2.0, 50, seed=1)
    assert pt.error < 1e-12


def test_mc_common_random_numbers_reduce_error():
    g = make_grid(1.0, 64)
    k = polygonal_kernel(g, 1 / 8)
    cfg = cfg_for(g)
    shared = mc_error(STRA_VS_WZ, cfg, k, 2.0, 2000, seed=3)
    indep = mc_error(STRA_VS_WZ, cfg, k, 2.0, 2000, seed=3, crn=False)
    assert shared.error < indep.error


def test_mc_independent_of_jobs_and_reproducible():
    g = make_grid(1.0, 32)
    k = polygonal_kernel(g, 1 / 8)
    cfg = cfg_for(g, DriftSpec.logistic_clipped(1.0, 2.0))
    a = mc_error(STRA_VS_WZ, cfg, k, 2.0, 2500, seed=9, jobs=1)
    b = mc_error(STRA_VS_WZ, cfg, k, 2.0, 2500, seed=9, jobs=2)
    c = mc_error(STRA_VS_WZ, cfg, k, 2.0, 2500, seed=9, jobs=1)
    assert (a.error, a.stderr, a.node) == (b.error, b.stderr, b.node) == (c.error, c.stderr, c.node)


def test_mc_error_decreases_with_delta():
    g = make_grid(1.0, 128)
    cfg = cfg_for(g)
    pts = [mc_error(STRA_VS_WZ, cfg, polygonal_kernel(g, m), 2.0, 1000, seed=2) for m in (1 / 4, 1 / 16, 1 / 64)]
    for a, b in zip(pts, pts[1:]):
        assert b.error < a.error + 3 * (a.stderr + b.stderr)


def test_mc_p_other_than_two():
    g = make_grid(1.0, 32)
    k = polygonal_kernel(g, 1 / 4)
    p3 = mc_error(STRA_VS_WZ, cfg_for(g), k, 3.0, 2000, seed=4)
    p2 = mc_error(STRA_VS_WZ, cfg_for(g), k, 2.0, 2000, seed=4)
    # Lyapunov: L^3 norm dominates the L^2 norm on the same samples
    assert p3.error >= p2.error


def test_mc_argument_validation():
    g = make_grid(1.0, 32)
    k = polygonal_kernel(g, 1 / 4)
    with pytest.raises(DomainError):
        mc_error("Other", cfg_for(g), k)
    with pytest.raises(DomainError):
        mc_error(STRA_VS_WZ, cfg_for(g), k, p=0.5)
    with pytest.raises(DomainError):
        mc_error(STRA_VS_WZ, cfg_for(g), k, n_samples=1)
