"""Numerical checks of the Wick-calculus identities and norm bounds.

Every check returns plain numbers (a discrepancy or a ratio); the identity
suite at the bottom bundles them with tolerances for the ``wick-check``
command.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, NotExactlyComputableError
from .grid import (
    BrownianPath,
    GridFunction,
    TimeGrid,
    ito_integral,
    sample_brownian_batch,
    shift_path,
)
from .rates import s_q
from .wick import (
    ExpFactor,
    ExponentialVector,
    gamma_contract,
    inverse_exponential,
    lp_norm_exact,
    lp_norm_mc,
    translate,
    wick_first_chaos,
    wick_product,
)

PLAIN_BOUND = "plain_exp"
STOCH_BOUND = "stoch_exp"
INVERSE_BOUND = "inverse_exp"
BOUND_KINDS = (PLAIN_BOUND, STOCH_BOUND, INVERSE_BOUND)


def _rel(a, b):
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    scale = np.maximum(np.abs(a), np.abs(b))
    return float(np.max(np.where(scale > 0, np.abs(a - b) / np.where(scale > 0, scale, 1), 0.0)))


def orthonormal_directions(grid: TimeGrid, k: int = 3) -> list[GridFunction]:
    """``k`` grid functions orthonormal in the grid inner product."""
    s = grid.midpoints / grid.T
    raw = np.array([np.cos(np.pi * j * s) + 0.3 * s ** (j + 1) for j in range(k)])
    q, _ = np.linalg.qr(raw.T)
    return [GridFunction(grid, col / np.sqrt(grid.dt)) for col in q.T]


def random_grid_function(grid: TimeGrid, rng: np.random.Generator, norm: float = 1.0) -> GridFunction:
    """Smooth random grid function with a prescribed L2 norm."""
    s = grid.midpoints / grid.T
    modes = np.array([np.cos(np.pi * j * s) for j in range(6)])
    v = rng.standard_normal(6) / (1 + np.arange(6)) @ modes
    f = GridFunction(grid, v)
    return f * (norm / f.norm())


# ----------------------------------------------------------------------------
# bounds on distances between exponentials


@dataclass
class BoundReport:
    kind: str
    p: float
    lhs: float
    argument: float
    s_value: float
    growth: float
    constant: float
    rhs: float
    implied_constant: float
    holds: bool


def _bound_growth(kind: str, p: float, g_norm_sq: float) -> float:
    # the |g|-dependent factor the proofs carry in front of S_p
    c = {PLAIN_BOUND: p, STOCH_BOUND: p - 1, INVERSE_BOUND: 2 * p}[kind]
    return float(np.exp(c * g_norm_sq))


def _difference_vector(kind: str, f: GridFunction, g: GridFunction) -> ExponentialVector:
    if kind == PLAIN_BOUND:
        return ExpFactor(f).to_vector() - ExpFactor(g).to_vector()
    if kind == STOCH_BOUND:
        return ExponentialVector.single(f) - ExponentialVector.single(g)
    if kind == INVERSE_BOUND:
        return inverse_exponential(f) - inverse_exponential(g)
    raise DomainError(f"unknown bound kind {kind!r}; expected one of {BOUND_KINDS}")


def check_s_bound_props(
    f: GridFunction,
    g: GridFunction,
    p: float = 2.0,
    kind: str = STOCH_BOUND,
    poincare: float = 1.0,
    paths: BrownianPath | None = None,
) -> BoundReport:
    """Compare a distance between exponentials with ``C * S_p(|f - g|)``.

    ``kind`` selects the pair: ``plain_exp`` plain exponentials, ``stoch_exp``
    stochastic exponentials, ``inverse_exp`` their reciprocals (argument scaled by
    ``sqrt 2``).  The constant is ``growth(|g|) * max(poincare, 1)``; the
    Poincare-type constant is not known in closed form, so ``poincare`` is a
    free parameter and ``implied_constant`` reports the smallest value that
    makes the bound hold.  ``p = 2`` is exact; other ``p`` need ``paths``.
    """
    diff = _difference_vector(kind, f, g)
    if p == 2:
        lhs = lp_norm_exact(diff, 2)
    elif paths is not None:
        lhs, _ = lp_norm_mc(diff, p, paths)
    else:
        raise NotExactlyComputableError(f"L^{p} distance needs Monte Carlo paths")
    arg = (f - g).norm() * (np.sqrt(2.0) if kind == INVERSE_BOUND else 1.0)
    s_val = s_q(arg, p)
    growth = _bound_growth(kind, p, g.norm() ** 2)
    constant = growth * max(poincare, 1.0)
    rhs = constant * s_val
    implied = lhs / (growth * s_val) if s_val > 0 else 0.0
    return BoundReport(kind, p, lhs, arg, s_val, growth, constant, rhs, implied, bool(lhs <= rhs * (1 + 1e-12)))


def first_order_slope(kind: str, g_norm: float, cos_angle: float) -> float:
    """``lim_{lam -> 0} lhs / lam`` along ``f = g + lam u`` with ``|u| = 1``.

    ``cos_angle`` is ``<g, u> / |g|``.  Derived from the Gaussian change of
    measure ``E[e^{delta(h)} X] = e^{|h|^2/2} E[X(B + int h)]``.
    """
    gu = g_norm * cos_angle
    gg = g_norm**2
    if kind == PLAIN_BOUND:
        return float(np.exp(gg) * np.sqrt(1 + 4 * gu**2))
    if kind == STOCH_BOUND:
        return float(np.exp(gg / 2) * np.sqrt(1 + gu**2))
    if kind == INVERSE_BOUND:
        return float(np.exp(1.5 * gg) * np.sqrt(1 + 9 * gu**2))
    raise DomainError(f"unknown bound kind {kind!r}")


@dataclass
class SweepResult:
    kind: str
    lambdas: np.ndarray
    g_norms: np.ndarray
    implied: np.ndarray
    limits: np.ndarray
    fitted_constant: float


def _pair(lam, gam, dirs, angle):
    v, w = dirs[0], dirs[1]
    g = v * gam
    u = v * np.cos(angle) + w * np.sin(angle)
    return g + u * lam, g


def s_bound_sweep(
    kind: str,
    grid: TimeGrid,
    p: float = 2.0,
    lambdas=None,
    g_norms=None,
    angle: float = np.pi / 3,
) -> SweepResult:
    """Implied constants over a ``(|f - g|, |g|)`` grid.

    The fitted constant is the maximum over the grid together with the
    ``lam -> 0`` limits at each ``|g|`` and at ``|g| = 0``, so that it
    bounds the closure of the swept region and not just the sampled points.
    """
    lambdas = np.linspace(0.1, 1.0, 10) if lambdas is None else np.asarray(lambdas, float)
    g_norms = np.linspace(0.1, 1.0, 10) if g_norms is None else np.asarray(g_norms, float)
    dirs = orthonormal_directions(grid, 2)
    implied = np.empty((lambdas.size, g_norms.size))
    for i, lam in enumerate(lambdas):
        for j, gam in enumerate(g_norms):
            f, g = _pair(lam, gam, dirs, angle)
            implied[i, j] = check_s_bound_props(f, g, p, kind).implied_constant
    scale = np.sqrt(2.0) if kind == INVERSE_BOUND else 1.0
    limits = np.array([
        first_order_slope(kind, gam, np.cos(angle)) / (scale * _bound_growth(kind, p, gam**2))
        for gam in np.concatenate([[0.0], g_norms])
    ])
    fitted = float(max(implied.max(), limits.max()))
    return SweepResult(kind, lambdas, g_norms, implied, limits, fitted)


@dataclass
class LipschitzReport:
    lhs: float
    sobolev_norm: float
    h_norm: float
    ratio: float


def translation_lipschitz_check(f: GridFunction, h: GridFunction, p: float, q: float) -> LipschitzReport:
    """``||T_h E(f) - E(f)||_p`` against ``|h| ||E(f)||_{D^{1,q}}``.

    Both sides are exact: ``T_h E(f) - E(f) = (e^{<h, f>} - 1) E(f)`` and the
    Malliavin derivative of ``E(f)`` is ``E(f) f``.
    """
    if not q > p:
        raise DomainError(f"need q > p, got p={p}, q={q}")
    if h.norm() > 1.0 + 1e-12:
        raise DomainError("|h| must not exceed 1")
    ff = f.norm() ** 2
    lhs = abs(np.expm1(f.inner(h))) * np.exp((p - 1) * ff / 2)
    sob = ((1 + f.norm() ** q) * np.exp(q * (q - 1) * ff / 2)) ** (1 / q)
    hn = h.norm()
    ratio = lhs / (hn * sob) if hn > 0 else 0.0
    return LipschitzReport(float(lhs), float(sob), float(hn), float(ratio))


def lipschitz_sweep(grid: TimeGrid, p: float = 2.0, q: float | None = None,
                    f_norms=None, h_norms=None, angle: float = np.pi / 4):
    q = p + 1 if q is None else q
    f_norms = np.linspace(0.1, 1.0, 10) if f_norms is None else np.asarray(f_norms, float)
    h_norms = np.linspace(0.1, 1.0, 10) if h_norms is None else np.asarray(h_norms, float)
    v, w = orthonormal_directions(grid, 2)
    ratios = np.empty((f_norms.size, h_norms.size))
    for i, a in enumerate(f_norms):
        for j, b in enumerate(h_norms):
            h = (v * np.cos(angle) + w * np.sin(angle)) * b
            ratios[i, j] = translation_lipschitz_check(v * a, h, p, q).ratio
    return ratios


# ----------------------------------------------------------------------------
# derivative of a translated process


@dataclass
class ExponentialFamily:
    """``X_t = sum_j alpha_j(t) E(f_j(t))`` with analytic time derivatives."""

    grid: TimeGrid
    coeffs: Callable[[float], np.ndarray]
    dcoeffs: Callable[[float], np.ndarray]
    exponents: Callable[[float], np.ndarray]
    dexponents: Callable[[float], np.ndarray]

    def at(self, t: float) -> ExponentialVector:
        return ExponentialVector(self.grid, self.coeffs(t), self.exponents(t))

    def translated_derivative(self, t: float, h: GridFunction, path: BrownianPath):
        """Pathwise ``T_h (dX/dt)``.

        ``dX/dt = sum_j [alpha_j' + alpha_j (delta(f_j') - <f_j, f_j'>)] E(f_j)``
        and ``T_h`` multiplies ``E(f_j)`` by ``e^{<f_j, h>}`` and adds
        ``<f_j', h>`` to ``delta(f_j')``.
        """
        dt = self.grid.dt
        a, da = np.asarray(self.coeffs(t), float), np.asarray(self.dcoeffs(t), float)
        f = np.atleast_2d(self.exponents(t))
        df = np.atleast_2d(self.dexponents(t))
        hv = h.cell_values
        fn = np.einsum("ij,ij->i", f, f) * dt
        ef = path.increments @ f.T
        edf = path.increments @ df.T
        fdf = np.einsum("ij,ij->i", f, df) * dt
        weights = da + a * (edf + df @ hv * dt - fdf)
        return (np.exp(ef - fn / 2 + f @ hv * dt) * weights).sum(axis=-1)


@dataclass
class ShiftFamily:
    """Time-indexed shift ``h(t, .)`` with its derivative."""

    grid: TimeGrid
    h: Callable[[float], np.ndarray]
    dh: Callable[[float], np.ndarray]

    def at(self, t):
        return GridFunction(self.grid, self.h(t))

    def d_at(self, t):
        return GridFunction(self.grid, self.dh(t))


def constant_exponential_family(f: GridFunction) -> ExponentialFamily:
    v = f.cell_values[None, :]
    z = np.zeros_like(v)
    return ExponentialFamily(f.grid, lambda t: np.ones(1), lambda t: np.zeros(1),
                             lambda t: v, lambda t: z)


def linear_shift_family(g: GridFunction) -> ShiftFamily:
    v = g.cell_values
    return ShiftFamily(g.grid, lambda t: t * v, lambda t: v)


def zero_shift_family(grid: TimeGrid) -> ShiftFamily:
    z = np.zeros(grid.n_steps)
    return ShiftFamily(grid, lambda t: z, lambda t: z)


def random_smooth_families(grid: TimeGrid, rng: np.random.Generator, n_terms: int = 3):
    """Random smooth ``(X, h)`` families on the exponential span."""
    a, b, c = rng.uniform(-1, 1, (3, n_terms))
    f0 = np.array([random_grid_function(grid, rng, rng.uniform(0.2, 0.8)).cell_values for _ in range(n_terms)])
    f1 = np.array([random_grid_function(grid, rng, rng.uniform(0.1, 0.5)).cell_values for _ in range(n_terms)])
    f2 = np.array([random_grid_function(grid, rng, rng.uniform(0.1, 0.5)).cell_values for _ in range(n_terms)])
    g1 = random_grid_function(grid, rng, 0.5).cell_values
    g2 = random_grid_function(grid, rng, 0.5).cell_values
    X = ExponentialFamily(
        grid,
        lambda t: a + b * t + c * np.sin(t),
        lambda t: b + c * np.cos(t),
        lambda t: f0 + t * f1 + t * t * f2,
        lambda t: f1 + 2 * t * f2,
    )
    H = ShiftFamily(grid, lambda t: np.sin(t) * g1 + t * t * g2, lambda t: np.cos(t) * g1 + 2 * t * g2)
    return X, H


@dataclass
class TranslateDerivativeReport:
    max_relative_discrepancy: float
    times: tuple
    n_paths: int


def prop41_finite_difference_check(
    H: ShiftFamily,
    X: ExponentialFamily,
    paths: BrownianPath,
    times=(0.3, 0.7),
    step: float = 1e-4,
    translate_fn=translate,
) -> TranslateDerivativeReport:
    """Compare ``d/dt T_{h(t)} X_t`` by central differences with the exact
    right side ``T_h dX/dt + T_h X . delta(dh/dt) - T_h X <> delta(dh/dt)``.

    The discrepancy is normalised by the sum of the magnitudes of the three
    right-hand terms, path by path.
    """
    worst = 0.0
    for t in times:
        plus = translate_fn(X.at(t + step), H.at(t + step)).evaluate(paths)
        minus = translate_fn(X.at(t - step), H.at(t - step)).evaluate(paths)
        lhs = (plus - minus) / (2 * step)
        h, dh = H.at(t), H.d_at(t)
        Y = translate_fn(X.at(t), h)
        A = X.translated_derivative(t, h, paths)
        Bt = Y.evaluate(paths) * ito_integral(dh, paths)
        C = wick_first_chaos(Y, dh, paths)
        rhs = A + Bt - C
        scale = np.abs(A) + np.abs(Bt) + np.abs(C)
        disc = np.abs(lhs - rhs) / np.where(scale > 0, scale, 1.0)
        worst = max(worst, float(np.max(disc)))
    return TranslateDerivativeReport(worst, tuple(times), len(paths))


# ----------------------------------------------------------------------------
# identity suite


@dataclass
class IdentityResult:
    name: str
    discrepancy: float
    tolerance: float
    detail: str = ""
    passed: bool = field(init=False)

    def __post_init__(self):
        self.passed = bool(np.isfinite(self.discrepancy) and self.discrepancy <= self.tolerance)


def _random_vector(grid, rng, n_terms=3, max_norm=1.0):
    fs = [random_grid_function(grid, rng, rng.uniform(0.1, max_norm)) for _ in range(n_terms)]
    return ExponentialVector.from_terms(zip(rng.uniform(-1, 1, n_terms), fs))


def _mc_blocks(grid, seed, n, start, block=10_000):
    for lo in range(start, start + n, block):
        yield sample_brownian_batch(grid, seed, np.arange(lo, min(lo + block, start + n)))


def check_gjessing(grid, rng, paths, translate_fn=translate):
    """``F <> E(h) = T_{-h} F . E(h)`` pathwise."""
    F = _random_vector(grid, rng)
    h = random_grid_function(grid, rng, 0.8)
    Eh = ExponentialVector.single(h)
    lhs = wick_product(F, Eh).evaluate(paths)
    rhs = translate_fn(F, -h).evaluate(paths) * Eh.evaluate(paths)
    return _rel(lhs, rhs)


def check_wick_free_rewrite(grid, rng, paths, translate_fn=translate):
    """``T_h E(h) = E(-h)^{-1}`` and the pathwise form of the Wick-free rewrite.

    ``Psi(F <> E(h)) <> E(-h)`` is evaluated through Gjessing's lemma as
    ``Psi((F <> E(h))(B + int h)) E(-h)`` and compared with
    ``Psi(F E(-h)^{-1}) E(-h)`` for a nonlinear ``Psi``.
    """
    h = random_grid_function(grid, rng, 0.9)
    Eh = ExponentialVector.single(h)
    Emh = ExponentialVector.single(-h)
    first = _rel(translate_fn(Eh, h).evaluate(paths), 1.0 / Emh.evaluate(paths))
    F = _random_vector(grid, rng)
    psi = np.tanh
    shifted = shift_path(paths, h)
    lhs = psi(wick_product(F, Eh).evaluate(shifted)) * Emh.evaluate(paths)
    rhs = psi(F.evaluate(paths) / Emh.evaluate(paths)) * Emh.evaluate(paths)
    return max(first, _rel(lhs, rhs))


def check_reciprocal_contraction(grid, rng, paths, max_norm=2.0):
    """``E(f)^{-1} = Gamma(1/sqrt 2) exp(-delta(sqrt 2 f))`` pathwise."""
    worst = 0.0
    for norm in np.linspace(0.25, max_norm, 8):
        f = random_grid_function(grid, rng, norm)
        lhs = 1.0 / ExponentialVector.single(f).evaluate(paths)
        rhs = gamma_contract(ExpFactor(-f * np.sqrt(2.0)).to_vector()).evaluate(paths)
        worst = max(worst, _rel(lhs, rhs))
    return worst


def check_translate_composition(grid, rng, translate_fn=translate):
    F = _random_vector(grid, rng)
    g = random_grid_function(grid, rng, 0.7)
    h = random_grid_function(grid, rng, 0.6)
    a = translate_fn(translate_fn(F, g), h)
    b = translate_fn(F, g + h)
    return float(np.max(np.abs(a.coeffs - b.coeffs)) / np.max(np.abs(b.coeffs)))


def check_translate_shift(grid, rng, paths, translate_fn=translate):
    """``T_g a`` evaluated on ``B`` equals ``a`` evaluated on ``B + int g``."""
    F = _random_vector(grid, rng)
    g = random_grid_function(grid, rng, 0.8)
    return _rel(translate_fn(F, g).evaluate(paths), F.evaluate(shift_path(paths, g)))


def check_wick_algebra(grid, rng):
    a, b, c = (_random_vector(grid, rng, 2) for _ in range(3))
    one = ExponentialVector.constant(grid)
    errs = []
    for x, y in (
        (wick_product(a, b), wick_product(b, a)),
        (wick_product(wick_product(a, b), c), wick_product(a, wick_product(b, c))),
        (wick_product(one, a), a),
    ):
        d = x - y
        errs.append(np.abs(d.coeffs).max(initial=0.0) / max(np.abs(y.coeffs).max(), 1e-300))
    return float(max(errs))


def check_norms_mc(grid, rng, seed, n_samples=100_000, start=0):
    """Largest z-score between exact ``L^2`` norms and their MC estimates."""
    vecs = [ExponentialVector.single(random_grid_function(grid, rng, 0.7)), _random_vector(grid, rng, 3, 0.6)]
    fac = ExpFactor(random_grid_function(grid, rng, 0.5))
    objs = vecs + [fac]
    sums = np.zeros(len(objs))
    sq = np.zeros(len(objs))
    for paths in _mc_blocks(grid, seed, n_samples, start):
        for i, o in enumerate(objs):
            v = np.asarray(o.evaluate(paths)) ** 2
            sums[i] += v.sum()
            sq[i] += (v * v).sum()
    worst = 0.0
    for i, o in enumerate(objs):
        m = sums[i] / n_samples
        var = sq[i] / n_samples - m * m
        se_m = np.sqrt(var * n_samples / (n_samples - 1) / n_samples)
        est = np.sqrt(m)
        se = se_m / (2 * est)
        worst = max(worst, abs(est - lp_norm_exact(o, 2)) / se)
    return float(worst)


def check_wick_expectation_mc(grid, rng, seed, n_samples=100_000, start=0):
    """z-score of ``E[a <> b] = E[a] E[b]`` by Monte Carlo."""
    a, b = _random_vector(grid, rng, 2, 0.5), _random_vector(grid, rng, 2, 0.5)
    ab = wick_product(a, b)
    s = s2 = 0.0
    for paths in _mc_blocks(grid, seed, n_samples, start):
        v = ab.evaluate(paths)
        s += v.sum()
        s2 += (v * v).sum()
    m = s / n_samples
    se = np.sqrt((s2 / n_samples - m * m) / (n_samples - 1))
    return float(abs(m - a.expectation() * b.expectation()) / se)


def check_s_q_properties():
    """Worst violation among the defining properties of ``S_q``."""
    errs = [abs(s_q(0.0, q)) for q in (1.0, 2.0, 3.0, 7.5)]
    errs.append(abs(s_q(1.0, 2.0) - (np.e**2 + np.exp(0.5) - 1)))
    lam0 = 1e-3
    ratio = s_q(lam0, 2.0) / lam0
    errs.append(max(0.0, abs(ratio - 1.0) - 1e-3))
    # series 1 + lam/2 + q lam^2 + O(lam^3)
    errs.append(max(0.0, abs(ratio - (1 + lam0 / 2 + 2 * lam0**2)) - 1e-8))
    lam = np.linspace(0, 3, 100)
    for q in (1.0, 2.0, 3.0):
        d = np.diff(s_q(lam, q))
        errs.append(0.0 if np.all(d > 0) else 1.0)
    qs = np.linspace(1, 5, 20)
    errs.append(0.0 if np.all(np.diff([s_q(0.7, q) for q in qs]) > 0) else 1.0)
    return float(max(errs))


def check_translate_derivative(grid, rng, seed, n_paths=100, translate_fn=translate):
    paths = sample_brownian_batch(grid, seed, np.arange(n_paths))
    X, H = random_smooth_families(grid, rng)
    r1 = prop41_finite_difference_check(H, X, paths, translate_fn=translate_fn)
    f = random_grid_function(grid, rng, 0.8)
    g = random_grid_function(grid, rng, 0.5)
    r2 = prop41_finite_difference_check(linear_shift_family(g), constant_exponential_family(f), paths,
                                        translate_fn=translate_fn)
    return max(r1.max_relative_discrepancy, r2.max_relative_discrepancy)


def check_bound_sweep(grid, kind):
    """Ratio of the worst implied constant on a finer holdout sweep to the fitted one."""
    fit = s_bound_sweep(kind, grid)
    hold = s_bound_sweep(kind, grid, lambdas=np.geomspace(1e-4, 1.0, 40), g_norms=np.linspace(0.05, 1.0, 20))
    return float(hold.implied.max() / fit.fitted_constant)


def check_translation_lipschitz_bound(grid):
    """Worst ratio over the sweep divided by the analytic bound ``e``."""
    return float(lipschitz_sweep(grid).max() / np.e)


IDENTITY_NAMES = (
    "gjessing",
    "wick_free_rewrite",
    "reciprocal_contraction",
    "translate_composition",
    "translate_shift",
    "wick_algebra",
    "wick_expectation_mc",
    "l2_norms_mc",
    "s_q_properties",
    "translate_derivative",
    "plain_exp_bound",
    "stoch_exp_bound",
    "inverse_exp_bound",
    "translation_lipschitz_bound",
)


def run_identity_suite(
    grid: TimeGrid,
    seed: int = 0,
    n_paths: int = 1000,
    n_mc: int = 100_000,
    only=None,
    translate_fn=translate,
) -> list[IdentityResult]:
    """Run the identity checks; ``only`` restricts to a subset of names."""
    names = IDENTITY_NAMES if only is None else tuple(only)
    unknown = set(names) - set(IDENTITY_NAMES)
    if unknown:
        raise DomainError(f"unknown identities {sorted(unknown)}; known: {IDENTITY_NAMES}")
    paths = sample_brownian_batch(grid, seed, np.arange(n_paths))
    out = []
    for name in names:
        rng = np.random.default_rng([seed, IDENTITY_NAMES.index(name)])
        if name == "gjessing":
            r = IdentityResult(name, check_gjessing(grid, rng, paths, translate_fn), 1e-10, "relative")
        elif name == "wick_free_rewrite":
            r = IdentityResult(name, check_wick_free_rewrite(grid, rng, paths, translate_fn), 1e-10, "relative")
        elif name == "reciprocal_contraction":
            r = IdentityResult(name, check_reciprocal_contraction(grid, rng, paths), 1e-10, "relative, |f|<=2")
        elif name == "translate_composition":
            r = IdentityResult(name, check_translate_composition(grid, rng, translate_fn), 1e-12, "coefficients")
        elif name == "translate_shift":
            r = IdentityResult(name, check_translate_shift(grid, rng, paths, translate_fn), 1e-10, "relative")
        elif name == "wick_algebra":
            r = IdentityResult(name, check_wick_algebra(grid, rng), 1e-12, "coefficients")
        elif name == "wick_expectation_mc":
            r = IdentityResult(name, check_wick_expectation_mc(grid, rng, seed, n_mc, start=n_paths), 3.0,
                               "z-score")
        elif name == "l2_norms_mc":
            r = IdentityResult(name, check_norms_mc(grid, rng, seed, n_mc, start=n_paths), 3.0, "z-score")
        elif name == "s_q_properties":
            r = IdentityResult(name, check_s_q_properties(), 1e-12, "absolute")
        elif name == "translate_derivative":
            r = IdentityResult(name, check_translate_derivative(grid, rng, seed, translate_fn=translate_fn), 1e-4, "relative")
        elif name in ("plain_exp_bound", "stoch_exp_bound", "inverse_exp_bound"):
            r = IdentityResult(name, check_bound_sweep(grid, name[: -len("_bound")]), 1.0, "holdout/fitted")
        else:
            r = IdentityResult(name, check_translation_lipschitz_bound(grid), 1.0, "ratio/e")
        out.append(r)
    return out
