"""Rate function, Monte Carlo error curves and log-log rate fits."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, NonFiniteStateError
from .grid import sample_brownian_batch
from .kernels import Kernel
from .models import ITO, STRATONOVICH, SDEConfig
from .solvers import (
    effective_kernel,
    exact_ito,
    exact_stratonovich,
    output_nodes,
    wz_pointwise,
    wz_wick,
)
from .wick import PLAIN_EXP, STOCH_EXP, l2_distance_from_inner

STRA_VS_WZ = "StraVsWZ"
ITO_VS_WICK = "ItoVsWick"
PAIRS = (STRA_VS_WZ, ITO_VS_WICK)

BLOCK_SIZE = 1000


def s_q(lam, q: float):
    """``lam * exp(q lam^2) + exp(lam^2 / 2) - 1``."""
    if q < 1:
        raise DomainError(f"q must be >= 1, got {q}")
    lam_arr = np.asarray(lam, dtype=float)
    if np.any(lam_arr < 0):
        raise DomainError("lambda must be nonnegative")
    out = lam_arr * np.exp(q * lam_arr**2) + np.expm1(lam_arr**2 / 2)
    return float(out) if out.ndim == 0 else out


@dataclass(frozen=True)
class SBoundParams:
    q: float

    def __post_init__(self):
        if not self.q >= 1:
            raise DomainError(f"q must be >= 1, got {self.q}")

    def __call__(self, lam):
        return s_q(lam, self.q)


def bound_argument(pair: str, delta):
    """``delta`` for the pointwise pair, ``sqrt 2 delta`` for the Wick pair."""
    if pair not in PAIRS:
        raise DomainError(f"unknown pair {pair!r}; expected one of {PAIRS}")
    return np.sqrt(2.0) * np.asarray(delta) if pair == ITO_VS_WICK else np.asarray(delta)


@dataclass
class ErrorPoint:
    epsilon: float
    delta: float
    error: float
    stderr: float
    n_samples: int
    node: int | None = None


@dataclass
class ErrorCurve:
    pair: str
    p: float
    points: list = field(default_factory=list)

    def __post_init__(self):
        if self.pair not in PAIRS:
            raise DomainError(f"unknown pair {self.pair!r}; expected one of {PAIRS}")
        if self.p < 1:
            raise DomainError(f"p must be >= 1, got {self.p}")

    @property
    def deltas(self):
        return np.array([pt.delta for pt in self.points])

    @property
    def errors(self):
        return np.array([pt.error for pt in self.points])

    @property
    def stderrs(self):
        return np.array([pt.stderr for pt in self.points])

    @property
    def epsilons(self):
        return np.array([pt.epsilon for pt in self.points])

    def subset(self, mask) -> "ErrorCurve":
        return ErrorCurve(self.pair, self.p, [pt for pt, m in zip(self.points, mask) if m])


@dataclass
class RateFit:
    slope: float
    intercept: float
    r2: float
    fitted_C: float
    q: float


@dataclass
class BoundReport:
    fitted_C: float
    all_points_within: bool
    q: float
    ratios: np.ndarray


# ----------------------------------------------------------------------------
# Monte Carlo


def _pair_cfg(pair: str, cfg: SDEConfig) -> SDEConfig:
    return replace(cfg, interpretation=STRATONOVICH if pair == STRA_VS_WZ else ITO)


def _block_moments(pair, cfg, kernel, p, seed, lo, hi, subsample, crn):
    """Per-node sums of ``|err|^p`` and ``|err|^{2p}`` over samples ``lo..hi-1``."""
    idx = np.arange(lo, hi)
    path = sample_brownian_batch(cfg.grid, seed, idx)
    approx_path = path if crn else sample_brownian_batch(cfg.grid, seed + 1, idx)
    try:
        if pair == STRA_VS_WZ:
            ref = exact_stratonovich(cfg, path)
            app = wz_pointwise(cfg, kernel, approx_path)
            diff = app.values - ref.values
        else:
            ref = exact_ito(cfg, path)
            app = wz_wick(cfg, kernel, approx_path, subsample)
            diff = app.values - ref.values[:, app.node_indices]
    except NonFiniteStateError as exc:
        if exc.sample is not None:
            exc.sample = int(idx[exc.sample])
        raise
    v = np.abs(diff) ** p
    return v.sum(axis=0), (v * v).sum(axis=0)


def _blocks(n_samples, start=0, block=BLOCK_SIZE):
    return [(lo, min(lo + block, start + n_samples)) for lo in range(start, start + n_samples, block)]


def mc_moments(pair, cfg, kernel, p, n_samples, seed, jobs=1, subsample=1, crn=True, start=0):
    """Summed moments over fixed sample blocks.

    Blocks are fixed by sample index, and block totals are combined with a
    pairwise sum, so the result does not depend on ``jobs``.
    """
    blocks = _blocks(n_samples, start)
    args = [(pair, cfg, kernel, p, seed, lo, hi, subsample, crn) for lo, hi in blocks]
    if jobs > 1 and len(blocks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            parts = list(ex.map(_block_moments, *zip(*args)))
    else:
        parts = [_block_moments(*a) for a in args]
    s1 = np.sum(np.array([a for a, _ in parts]), axis=0)
    s2 = np.sum(np.array([b for _, b in parts]), axis=0)
    return s1, s2


def mc_error(pair: str, cfg: SDEConfig, kernel: Kernel, p: float = 2.0, n_samples: int = 1000,
             seed: int = 0, jobs: int = 1, subsample: int = 1, crn: bool = True) -> ErrorPoint:
    """``max_k ||X^eps_{t_k} - X_{t_k}||_p`` with the delta-method standard error.

    Each sample index draws one path shared by the exact and approximate
    solver (common random numbers; ``crn=False`` pairs independent paths).
    The standard error is taken at the argmax node.
    """
    if pair not in PAIRS:
        raise DomainError(f"unknown pair {pair!r}; expected one of {PAIRS}")
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    if n_samples < 2:
        raise DomainError("n_samples must be >= 2")
    cfg = _pair_cfg(pair, cfg)
    s1, s2 = mc_moments(pair, cfg, kernel, p, n_samples, seed, jobs, subsample, crn)
    N = n_samples
    m = s1 / N
    var = np.maximum(s2 / N - m * m, 0.0) * N / (N - 1)
    per_node = m ** (1 / p)
    k = int(np.argmax(per_node))
    se = 0.0 if m[k] == 0 else per_node[k] / (p * m[k]) * np.sqrt(var[k] / N)
    nodes = np.arange(cfg.grid.n_steps + 1) if pair == STRA_VS_WZ else output_nodes(cfg.grid, subsample)
    return ErrorPoint(kernel.epsilon, kernel.delta, float(per_node[k]), float(se), N, int(nodes[k]))


def mc_error_curve(pair, cfg, kernels, p=2.0, n_samples=1000, seed=0, jobs=1, subsample=1) -> ErrorCurve:
    return ErrorCurve(pair, p, [mc_error(pair, cfg, k, p, n_samples, seed, jobs, subsample) for k in kernels])


# ----------------------------------------------------------------------------
# closed forms


def closed_form_node_errors(pair: str, cfg: SDEConfig, kernel: Kernel) -> np.ndarray:
    """Exact ``||X^eps_{t_k} - X_{t_k}||_2`` at every node, for linear drift.

    Pointwise pair: plain exponentials ``x e^{R} exp(delta(.))``; Wick pair:
    stochastic exponentials ``x e^{R} E(.)``; ``R = int_0^t r``.
    """
    if not cfg.drift.is_linear:
        raise DomainError(f"no closed form for drift family {cfg.drift.family!r}")
    grid = cfg.grid
    Kt = effective_kernel(kernel, cfg.sigma)
    sig = cfg.sigma.cell_values(grid)
    ind = np.tri(grid.n_steps + 1, grid.n_steps, k=-1) * sig
    dt = grid.dt
    ff = np.einsum("ij,ij->i", Kt, Kt) * dt
    gg = np.einsum("ij,ij->i", ind, ind) * dt
    fg = np.einsum("ij,ij->i", Kt, ind) * dt
    kind = PLAIN_EXP if pair == STRA_VS_WZ else STOCH_EXP
    scale = abs(cfg.x) * np.exp(cfg.drift.integrated_rate(grid.nodes))
    return scale * l2_distance_from_inner(ff, gg, fg, kind)


def closed_form_error(pair: str, cfg: SDEConfig, kernel: Kernel) -> ErrorPoint:
    errs = closed_form_node_errors(pair, cfg, kernel)
    k = int(np.argmax(errs))
    return ErrorPoint(kernel.epsilon, kernel.delta, float(errs[k]), 0.0, 0, k)


def closed_form_curve(pair: str, cfg: SDEConfig, kernels) -> ErrorCurve:
    return ErrorCurve(pair, 2.0, [closed_form_error(pair, cfg, k) for k in kernels])


# ----------------------------------------------------------------------------
# fits and bounds


def _validate_q(curve: ErrorCurve, q: float):
    if not q > curve.p:
        raise DomainError(f"q must be greater than p (q={q}, p={curve.p})")


def fitted_constant(curve: ErrorCurve, q: float) -> float:
    arg = bound_argument(curve.pair, curve.deltas)
    return float(np.max(curve.errors / s_q(arg, q)))


def fit_rate(curve: ErrorCurve, q: float | None = None) -> RateFit:
    """OLS of ``log error`` on ``log delta`` plus the fitted bound constant."""
    if len(curve.points) < 3:
        raise DomainError(f"need at least 3 points, got {len(curve.points)}")
    d, e = curve.deltas, curve.errors
    if np.any(d <= 0) or np.any(e <= 0) or not np.all(np.isfinite(e)):
        raise DomainError("deltas and errors must be positive and finite")
    if np.unique(d).size < 2:
        raise DomainError("need at least two distinct deltas")
    q = curve.p + 1 if q is None else q
    _validate_q(curve, q)
    x, y = np.log(d), np.log(e)
    A = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = y - A @ np.array([slope, intercept])
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - np.sum(resid**2) / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), float(min(max(r2, 0.0), 1.0)),
                   fitted_constant(curve, q), float(q))


def bound_check(curve: ErrorCurve, q: float) -> BoundReport:
    """One global ``C`` with ``error_i <= C S_q(arg_i) + 3 se_i`` for every point."""
    _validate_q(curve, q)
    if not curve.points:
        raise DomainError("empty curve")
    C = fitted_constant(curve, q)
    arg = bound_argument(curve.pair, curve.deltas)
    bound = C * s_q(arg, q)
    within = bool(np.all(curve.errors <= bound * (1 + 1e-12) + 3 * curve.stderrs)) and np.isfinite(C)
    return BoundReport(C, within, float(q), curve.errors / s_q(arg, q))
