"""Uniform time grids, piecewise-constant grid functions and Brownian paths.

A :class:`GridFunction` stores one value per cell ``(t_i, t_{i+1}]`` and
represents a step function in ``L^2([0, T])``.  Wiener integrals of such
functions against a sampled path are exact left-point sums.

Brownian increments come from numpy's counter-based Philox generator keyed by
``(seed, sample_index)``; increment ``i`` is produced by Box-Muller from the
uniform pair at Philox position ``i // 2``, so every increment is a pure
function of ``(seed, sample_index, i)`` and samples can be drawn in any order
or in parallel.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class TimeGrid:
    T: float
    n_steps: int

    def __post_init__(self):
        if not np.isfinite(self.T) or self.T <= 0:
            raise DomainError(f"horizon T must be positive, got {self.T!r}")
        if int(self.n_steps) != self.n_steps or self.n_steps < 1:
            raise DomainError(f"n_steps must be a positive integer, got {self.n_steps!r}")
        object.__setattr__(self, "T", float(self.T))
        object.__setattr__(self, "n_steps", int(self.n_steps))

    @property
    def dt(self) -> float:
        return self.T / self.n_steps

    @property
    def nodes(self) -> np.ndarray:
        # (n * T) / n can still miss T by one ulp, so pin the last node
        t = np.arange(self.n_steps + 1) * self.T / self.n_steps
        t[-1] = self.T
        return t

    @property
    def midpoints(self) -> np.ndarray:
        return (np.arange(self.n_steps) + 0.5) * self.T / self.n_steps

    def node_index(self, t: float) -> int:
        """Index of the grid node equal to ``t``; off-grid times are rejected."""
        k = int(round(t / self.dt))
        if k < 0 or k > self.n_steps or not np.isclose(k * self.dt, t, rtol=0, atol=1e-9 * self.T):
            raise DomainError(f"time {t!r} is not a node of {self}")
        return k


def make_grid(T: float, n_steps: int) -> TimeGrid:
    return TimeGrid(T, n_steps)


def _check_same_grid(a: TimeGrid, b: TimeGrid) -> None:
    if a != b:
        raise DomainError(f"grid mismatch: {a} vs {b}")


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Step function on a grid, one value per cell."""

    grid: TimeGrid
    cell_values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.cell_values, dtype=float)
        if v.shape != (self.grid.n_steps,):
            raise DomainError(
                f"expected {self.grid.n_steps} cell values, got shape {v.shape}"
            )
        v = v.copy()
        v.flags.writeable = False
        object.__setattr__(self, "cell_values", v)

    @classmethod
    def zeros(cls, grid: TimeGrid) -> "GridFunction":
        return cls(grid, np.zeros(grid.n_steps))

    @classmethod
    def constant(cls, grid: TimeGrid, value: float) -> "GridFunction":
        return cls(grid, np.full(grid.n_steps, float(value)))

    @classmethod
    def indicator(cls, grid: TimeGrid, k: int) -> "GridFunction":
        """``1_[0, t_k]`` for the grid node ``t_k``."""
        if not 0 <= k <= grid.n_steps:
            raise DomainError(f"node index {k} outside 0..{grid.n_steps}")
        v = np.zeros(grid.n_steps)
        v[:k] = 1.0
        return cls(grid, v)

    @classmethod
    def from_callable(cls, grid: TimeGrid, fn) -> "GridFunction":
        """Sample ``fn`` at cell midpoints."""
        return cls(grid, np.asarray(fn(grid.midpoints), dtype=float) * np.ones(grid.n_steps))

    def inner(self, other: "GridFunction") -> float:
        _check_same_grid(self.grid, other.grid)
        return float(np.dot(self.cell_values, other.cell_values) * self.grid.dt)

    def norm(self) -> float:
        return float(np.sqrt(self.inner(self)))

    def _coerce(self, other):
        if isinstance(other, GridFunction):
            _check_same_grid(self.grid, other.grid)
            return other.cell_values
        return NotImplemented

    def __add__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return GridFunction(self.grid, self.cell_values + v)

    def __sub__(self, other):
        v = self._coerce(other)
        if v is NotImplemented:
            return v
        return GridFunction(self.grid, self.cell_values - v)

    def __mul__(self, scalar):
        if isinstance(scalar, GridFunction):
            return NotImplemented
        return GridFunction(self.grid, self.cell_values * float(scalar))

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return GridFunction(self.grid, self.cell_values / float(scalar))

    def __neg__(self):
        return GridFunction(self.grid, -self.cell_values)

    def __repr__(self):
        return f"GridFunction(n={self.grid.n_steps}, norm={self.norm():.6g})"


def inner_product(f: GridFunction, g: GridFunction) -> float:
    return f.inner(g)


def l2_norm(f: GridFunction) -> float:
    return f.norm()


@dataclass(frozen=True, eq=False)
class BrownianPath:
    """Wiener increments on a grid.

    ``increments`` has shape ``(n_steps,)`` for one path or ``(m, n_steps)``
    for a stack of ``m`` paths; every operation in the package broadcasts over
    the leading axis.
    """

    grid: TimeGrid
    increments: np.ndarray
    seed: int | None = None
    sample_index: int | np.ndarray | None = field(default=None)

    def __post_init__(self):
        inc = np.asarray(self.increments, dtype=float)
        if inc.ndim not in (1, 2) or inc.shape[-1] != self.grid.n_steps:
            raise DomainError(
                f"increments must have trailing length {self.grid.n_steps}, got {inc.shape}"
            )
        inc = inc.copy()
        inc.flags.writeable = False
        object.__setattr__(self, "increments", inc)

    @property
    def batched(self) -> bool:
        return self.increments.ndim == 2

    def __len__(self):
        return self.increments.shape[0] if self.batched else 1

    @property
    def values(self) -> np.ndarray:
        """``B`` at the grid nodes, starting from ``B_0 = 0``."""
        out = np.zeros(self.increments.shape[:-1] + (self.grid.n_steps + 1,))
        np.cumsum(self.increments, axis=-1, out=out[..., 1:])
        return out

    def __getitem__(self, i):
        """Select paths from a stack."""
        if not self.batched:
            raise IndexError("not a stack of paths")
        idx = None if self.sample_index is None else np.asarray(self.sample_index)[i]
        if np.ndim(idx) == 0 and idx is not None:
            idx = int(idx)
        return BrownianPath(self.grid, self.increments[i], self.seed, idx)


def _normals(seed: int, sample_index: int, n: int) -> np.ndarray:
    key = np.array([seed & _MASK64, sample_index & _MASK64], dtype=np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    m = (n + 1) // 2
    u = gen.random((m, 2))
    r = np.sqrt(-2.0 * np.log1p(-u[:, 0]))  # 1 - u in (0, 1]
    theta = 2.0 * np.pi * u[:, 1]
    z = np.empty((m, 2))
    z[:, 0] = r * np.cos(theta)
    z[:, 1] = r * np.sin(theta)
    return z.reshape(-1)[:n]


def sample_brownian(grid: TimeGrid, seed: int, sample_index: int) -> BrownianPath:
    """Reproducible Brownian path for ``(seed, sample_index)``."""
    if sample_index < 0:
        raise DomainError("sample_index must be nonnegative")
    inc = np.sqrt(grid.dt) * _normals(int(seed), int(sample_index), grid.n_steps)
    return BrownianPath(grid, inc, int(seed), int(sample_index))


def sample_brownian_batch(grid: TimeGrid, seed: int, sample_indices) -> BrownianPath:
    """Stack of paths; row ``j`` equals ``sample_brownian(grid, seed, sample_indices[j])``."""
    idx = np.asarray(sample_indices, dtype=np.int64).reshape(-1)
    if idx.size and idx.min() < 0:
        raise DomainError("sample indices must be nonnegative")
    inc = np.empty((idx.size, grid.n_steps))
    scale = np.sqrt(grid.dt)
    for row, j in enumerate(idx):
        inc[row] = scale * _normals(int(seed), int(j), grid.n_steps)
    return BrownianPath(grid, inc, int(seed), idx)


def ito_integral(f: GridFunction, path: BrownianPath):
    """``int_0^T f(s) dB_s``; a float for one path, an array for a stack."""
    _check_same_grid(f.grid, path.grid)
    out = path.increments @ f.cell_values
    return float(out) if np.ndim(out) == 0 else out


def shift_path(path: BrownianPath, g: GridFunction) -> BrownianPath:
    """Shift the path by ``int_0^. g(s) ds``."""
    _check_same_grid(g.grid, path.grid)
    return BrownianPath(
        path.grid, path.increments + g.cell_values * path.grid.dt, path.seed, path.sample_index
    )
