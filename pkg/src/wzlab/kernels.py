"""Smoothing kernels ``K_eps(t, s)`` for Brownian motion on a grid.

A kernel is tabulated at every grid node ``t_k`` as a step function of ``s``
(rows of ``table``) together with its time derivative (rows of ``dtable``).
The smoothed path is ``B^eps_t = int K_eps(t, s) dB_s``.

Families
--------
polygonal
    Piecewise-linear interpolation of ``B`` on a partition whose nodes are
    grid nodes.  ``delta`` is the closed form ``sqrt(mesh) / 2``, the
    supremum over continuous ``t`` (attained mid-cell).
mollifier
    ``B`` convolved in time with the C-infinity bump
    ``rho(u) ~ exp(-1 / (1 - u^2))`` scaled to support ``(-eps, eps)``.  The
    path is extended oddly through ``t = 0`` and constantly past ``T``, which
    gives ``K(t, s) = Phi((t - s)/eps) - Phi((-t - s)/eps)`` with ``Phi`` the
    bump CDF.  ``K(0, .) = 0`` so ``B^eps_0 = 0``.  Cell values are exact cell
    averages and derivative rows are their exact ``t``-derivatives.
exact
    ``K(t, .) = 1_[0, t]`` itself (no derivative table); useful as a limit.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.interpolate import CubicHermiteSpline

from .errors import DomainError
from .grid import BrownianPath, GridFunction, TimeGrid, _check_same_grid

POLYGONAL = "polygonal"
MOLLIFIER = "mollifier"
EXACT = "exact"
FAMILIES = (POLYGONAL, MOLLIFIER)


@dataclass(frozen=True, eq=False)
class Kernel:
    family: str
    epsilon: float
    grid: TimeGrid
    table: np.ndarray
    dtable: np.ndarray | None
    bound: float
    closed_form_delta: float | None = None

    def slice(self, k: int) -> GridFunction:
        return GridFunction(self.grid, self.table[k])

    def dslice(self, k: int) -> GridFunction:
        if self.dtable is None:
            raise DomainError(f"{self.family} kernel has no derivative table")
        return GridFunction(self.grid, self.dtable[k])

    @property
    def norms_sq(self) -> np.ndarray:
        """``|K(t_k, .)|^2`` for every node."""
        return np.einsum("ij,ij->i", self.table, self.table) * self.grid.dt

    def node_distances(self) -> np.ndarray:
        """``|K(t_k, .) - 1_[0, t_k]|`` for every node."""
        n = self.grid.n_steps
        ind = np.tri(n + 1, n, k=-1)
        diff = self.table - ind
        return np.sqrt(np.einsum("ij,ij->i", diff, diff) * self.grid.dt)

    @property
    def delta(self) -> float:
        if self.closed_form_delta is not None:
            return self.closed_form_delta
        return float(self.node_distances().max())

    def __repr__(self):
        return f"Kernel({self.family}, eps={self.epsilon:g}, n={self.grid.n_steps})"


def _freeze(a):
    if a is not None:
        a.flags.writeable = False
    return a


def polygonal_kernel(grid: TimeGrid, mesh: float) -> Kernel:
    """Linear interpolation of the path on the partition of step ``mesh``."""
    m_float = mesh / grid.dt
    m = int(round(m_float))
    if mesh <= 0 or m < 1 or abs(m_float - m) > 1e-9 * max(m_float, 1.0):
        raise DomainError(f"mesh {mesh!r} is not a positive multiple of dt={grid.dt!r}")
    n = grid.n_steps
    dt = grid.dt
    starts = np.arange(0, n, m)
    ends = np.minimum(starts + m, n)

    table = np.zeros((n + 1, n))
    dtable = np.zeros((n + 1, n))
    for k in range(n + 1):
        c = min(k // m, len(starts) - 1)
        a, b = starts[c], ends[c]
        theta = (k - a) / (b - a)
        table[k, :a] = 1.0
        table[k, a:b] = theta
        # left limit at partition nodes, right cell at t = 0
        if k == a and k > 0:
            a, b = starts[c - 1], ends[c - 1]
        dtable[k, a:b] = 1.0 / ((b - a) * dt)
    longest = float((ends - starts).max() * dt)
    return Kernel(
        POLYGONAL,
        float(mesh),
        grid,
        _freeze(table),
        _freeze(dtable),
        bound=float(np.sqrt(grid.T)),
        closed_form_delta=float(np.sqrt(longest) / 2.0),
    )


def _bump(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(-1.0 / (1.0 - u[inside] ** 2))
    return out


@lru_cache(maxsize=1)
def _bump_tables(n_cells: int = 4000):
    """Hermite interpolants of the bump CDF ``Phi`` and of ``Psi = int Phi``."""
    edges = np.linspace(-1.0, 1.0, n_cells + 1)
    x, w = np.polynomial.legendre.leggauss(10)
    h = np.diff(edges)
    pts = edges[:-1, None] + (x[None, :] + 1) * h[:, None] / 2
    wts = w[None, :] * h[:, None] / 2
    rho = _bump(pts)
    mass = np.concatenate([[0.0], np.cumsum((rho * wts).sum(axis=1))])
    first = np.concatenate([[0.0], np.cumsum((pts * rho * wts).sum(axis=1))])
    total = mass[-1]
    cdf = mass / total
    # Psi(w) = E[(w - W)^+] = w Phi(w) - int_{-1}^w u rho(u) du
    psi = edges * cdf - first / total
    cdf[-1] = 1.0
    psi[-1] = 1.0
    density = _bump(edges) / total
    return CubicHermiteSpline(edges, cdf, density), CubicHermiteSpline(edges, psi, cdf), total


def bump_cdf(w):
    phi, _, _ = _bump_tables()
    w = np.asarray(w, dtype=float)
    return np.where(w <= -1, 0.0, np.where(w >= 1, 1.0, phi(np.clip(w, -1, 1))))


def bump_cdf_integral(w):
    _, psi, _ = _bump_tables()
    w = np.asarray(w, dtype=float)
    return np.where(w <= -1, 0.0, np.where(w >= 1, w, psi(np.clip(w, -1, 1))))


def bump_density(w, eps: float = 1.0):
    _, _, total = _bump_tables()
    return _bump(np.asarray(w, dtype=float) / eps) / (total * eps)


def _check_eps(grid: TimeGrid, eps: float):
    if not eps >= 2 * grid.dt * (1 - 1e-12):
        raise DomainError(f"eps={eps!r} under-resolved: need eps >= 2*dt = {2 * grid.dt!r}")


def mollifier_rows(grid: TimeGrid, eps: float, node_indices) -> tuple[np.ndarray, np.ndarray]:
    """Rows of the mollifier ``table`` and ``dtable`` for selected nodes only.

    Useful on fine grids where the full ``(n + 1) x n`` tables do not fit in
    memory.
    """
    _check_eps(grid, eps)
    dt = grid.dt
    t = grid.nodes[np.asarray(node_indices)][:, None]
    s = grid.nodes[None, :]
    # cell average of Phi((+-t - s)/eps) over (s_i, s_{i+1}]
    psi_p = bump_cdf_integral((t - s) / eps)
    psi_m = bump_cdf_integral((-t - s) / eps)
    table = (eps / dt) * ((psi_p[:, :-1] - psi_p[:, 1:]) - (psi_m[:, :-1] - psi_m[:, 1:]))
    del psi_p, psi_m
    phi_p = bump_cdf((t - s) / eps)
    phi_m = bump_cdf((-t - s) / eps)
    dtable = ((phi_p[:, :-1] - phi_p[:, 1:]) + (phi_m[:, :-1] - phi_m[:, 1:])) / dt
    np.clip(table, 0.0, 1.0, out=table)
    return table, dtable


def mollifier_kernel(grid: TimeGrid, eps: float) -> Kernel:
    table, dtable = mollifier_rows(grid, eps, np.arange(grid.n_steps + 1))
    return Kernel(MOLLIFIER, float(eps), grid, _freeze(table), _freeze(dtable),
                  bound=float(np.sqrt(grid.T)))


def exact_kernel(grid: TimeGrid) -> Kernel:
    n = grid.n_steps
    return Kernel(EXACT, 0.0, grid, _freeze(np.tri(n + 1, n, k=-1)), None,
                  bound=float(np.sqrt(grid.T)), closed_form_delta=0.0)


def make_kernel(family: str, grid: TimeGrid, eps: float) -> Kernel:
    if family == POLYGONAL:
        return polygonal_kernel(grid, eps)
    if family == MOLLIFIER:
        return mollifier_kernel(grid, eps)
    raise DomainError(f"unknown kernel family {family!r}; expected one of {FAMILIES}")


def delta_distance(kernel: Kernel) -> float:
    """``sup_t |K(t, .) - 1_[0, t]|`` (closed form for polygonal kernels)."""
    return kernel.delta


@dataclass(frozen=True, eq=False)
class SmoothedPath:
    grid: TimeGrid
    values: np.ndarray
    derivatives: np.ndarray | None


def smooth_path(kernel: Kernel, path: BrownianPath) -> SmoothedPath:
    _check_same_grid(kernel.grid, path.grid)
    values = path.increments @ kernel.table.T
    deriv = None if kernel.dtable is None else path.increments @ kernel.dtable.T
    return SmoothedPath(kernel.grid, values, deriv)


def d_l2norm_dt(kernel: Kernel, k: int, method: str = "chain") -> float:
    """``d|K(t, .)|^2 / dt`` at node ``t_k``.

    ``method="chain"`` returns ``2 <K, dK/dt>`` from the derivative table;
    ``method="fd"`` the forward difference ``(|K_{k+1}|^2 - |K_k|^2) / dt``
    (backward at the last node).
    """
    if method == "chain":
        return 2.0 * kernel.slice(k).inner(kernel.dslice(k))
    if method == "fd":
        sq = kernel.norms_sq
        if k < kernel.grid.n_steps:
            return float((sq[k + 1] - sq[k]) / kernel.grid.dt)
        return float((sq[k] - sq[k - 1]) / kernel.grid.dt)
    raise DomainError(f"unknown method {method!r}")
