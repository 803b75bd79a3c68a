"""Coefficient families for the quasi-linear SDE and solution containers."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .grid import TimeGrid

STRATONOVICH = "stratonovich"
ITO = "ito"
INTERPRETATIONS = (STRATONOVICH, ITO)

DRIFT_FAMILIES = ("zero", "linear", "affine_sine", "logistic_clipped")
SIGMA_FAMILIES = ("constant", "piecewise_constant", "sine")


@dataclass(frozen=True)
class DriftSpec:
    """Drift ``b(t, x)``.

    zero
        ``b = 0``.
    linear
        ``b = a x``.
    affine_sine
        ``b = (a + c sin t) x``, a time-dependent linear rate.
    logistic_clipped
        ``b = a x (1 - clip(x, 0, K) / K)``; globally Lipschitz because of
        the clip, and zero stays a fixed point.

    ``C1`` and ``C2`` are the smallest constants with
    ``|b(t,x) - b(t,y)| <= C1 |x - y|`` and ``|b(t,x)| <= C2 (1 + |x|)``.
    """

    family: str = "zero"
    a: float = 0.0
    c: float = 0.0
    K: float = 1.0

    def __post_init__(self):
        if self.family not in DRIFT_FAMILIES:
            raise DomainError(f"unknown drift family {self.family!r}; expected one of {DRIFT_FAMILIES}")
        for name in ("a", "c", "K"):
            if not np.isfinite(getattr(self, name)):
                raise DomainError(f"drift parameter {name} must be finite")
        if self.family == "logistic_clipped" and self.K <= 0:
            raise DomainError("logistic_clipped needs K > 0")

    @classmethod
    def zero(cls):
        return cls("zero")

    @classmethod
    def linear(cls, a: float):
        return cls("linear", a=float(a))

    @classmethod
    def affine_sine(cls, a: float, c: float):
        return cls("affine_sine", a=float(a), c=float(c))

    @classmethod
    def logistic_clipped(cls, a: float, K: float):
        return cls("logistic_clipped", a=float(a), K=float(K))

    def __call__(self, t, x):
        x = np.asarray(x, dtype=float)
        if self.family == "zero":
            return np.zeros_like(x)
        if self.family == "linear":
            return self.a * x
        if self.family == "affine_sine":
            return (self.a + self.c * np.sin(t)) * x
        return self.a * x * (1.0 - np.clip(x, 0.0, self.K) / self.K)

    @property
    def C1(self) -> float:
        if self.family == "affine_sine":
            return abs(self.a) + abs(self.c)
        return abs(self.a) if self.family != "zero" else 0.0

    @property
    def C2(self) -> float:
        return self.C1

    @property
    def is_linear(self) -> bool:
        """True when ``b(t, x) = r(t) x`` and a closed form exists."""
        return self.family in ("zero", "linear", "affine_sine")

    def integrated_rate(self, t):
        """``int_0^t r(s) ds`` for the linear families."""
        if not self.is_linear:
            raise DomainError(f"drift {self.family!r} has no linear rate")
        t = np.asarray(t, dtype=float)
        if self.family == "zero":
            return np.zeros_like(t)
        if self.family == "linear":
            return self.a * t
        return self.a * t + self.c * (1.0 - np.cos(t))


@dataclass(frozen=True, eq=False)
class SigmaSpec:
    """Diffusion coefficient ``sigma(t)``.

    constant
        ``sigma = value``.
    piecewise_constant
        ``values[i]`` on ``[breakpoints[i-1], breakpoints[i])``, right-continuous.
    sine
        ``offset + amplitude sin(2 pi frequency t)``.
    """

    family: str = "constant"
    value: float = 1.0
    breakpoints: tuple = ()
    values: tuple = ()
    offset: float = 0.0
    amplitude: float = 0.0
    frequency: float = 1.0

    def __post_init__(self):
        if self.family not in SIGMA_FAMILIES:
            raise DomainError(f"unknown sigma family {self.family!r}; expected one of {SIGMA_FAMILIES}")
        if self.family == "piecewise_constant":
            bp = tuple(float(b) for b in self.breakpoints)
            vals = tuple(float(v) for v in self.values)
            if len(vals) != len(bp) + 1:
                raise DomainError("piecewise_constant needs len(values) == len(breakpoints) + 1")
            if any(b2 <= b1 for b1, b2 in zip(bp, bp[1:])):
                raise DomainError("breakpoints must be strictly increasing")
            object.__setattr__(self, "breakpoints", bp)
            object.__setattr__(self, "values", vals)
        if not np.isfinite(self.sup):
            raise DomainError("sigma must be bounded")

    @classmethod
    def constant(cls, value: float):
        return cls("constant", value=float(value))

    @classmethod
    def piecewise_constant(cls, breakpoints, values):
        return cls("piecewise_constant", breakpoints=tuple(breakpoints), values=tuple(values))

    @classmethod
    def sine(cls, offset: float, amplitude: float, frequency: float = 1.0):
        return cls("sine", offset=float(offset), amplitude=float(amplitude), frequency=float(frequency))

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if self.family == "constant":
            return np.full_like(t, self.value)
        if self.family == "piecewise_constant":
            idx = np.searchsorted(np.asarray(self.breakpoints), t, side="right")
            return np.asarray(self.values)[idx]
        return self.offset + self.amplitude * np.sin(2 * np.pi * self.frequency * t)

    @property
    def sup(self) -> float:
        if self.family == "constant":
            return abs(self.value)
        if self.family == "piecewise_constant":
            return max(abs(v) for v in self.values)
        return abs(self.offset) + abs(self.amplitude)

    @property
    def is_constant(self) -> bool:
        return self.family == "constant"

    def cell_values(self, grid: TimeGrid) -> np.ndarray:
        """``sigma`` at cell midpoints: the step function used by all solvers."""
        return self(grid.midpoints)


@dataclass(frozen=True, eq=False)
class SDEConfig:
    drift: DriftSpec
    sigma: SigmaSpec
    x: float
    grid: TimeGrid
    interpretation: str = STRATONOVICH

    def __post_init__(self):
        if not np.isfinite(self.x):
            raise DomainError("initial value x must be finite")
        if self.interpretation not in INTERPRETATIONS:
            raise DomainError(f"interpretation must be one of {INTERPRETATIONS}")


EXACT_STRATONOVICH = "ExactStratonovich"
EXACT_ITO = "ExactIto"
WZ_POINTWISE = "WZPointwise"
WZ_WICK = "WZWick"
CLOSED_FORM = "ClosedForm"
FINE_EM = "FineEM"


@dataclass(frozen=True, eq=False)
class PathSolution:
    """Solution values at ``grid.nodes[node_indices]``.

    ``values`` has shape ``(len(node_indices),)`` for one path or
    ``(m, len(node_indices))`` for a stack.
    """

    grid: TimeGrid
    values: np.ndarray
    provenance: str
    node_indices: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.node_indices is None:
            object.__setattr__(self, "node_indices", np.arange(self.grid.n_steps + 1))
        idx = np.asarray(self.node_indices, dtype=np.int64)
        if self.values.shape[-1] != idx.size:
            raise DomainError("values and node_indices disagree in length")
        object.__setattr__(self, "node_indices", idx)

    @property
    def times(self) -> np.ndarray:
        return self.grid.nodes[self.node_indices]

    @property
    def batched(self) -> bool:
        return self.values.ndim == 2

    def at_nodes(self, node_indices) -> np.ndarray:
        pos = np.searchsorted(self.node_indices, node_indices)
        if np.any(self.node_indices[np.minimum(pos, self.node_indices.size - 1)] != node_indices):
            raise DomainError("requested nodes were not computed")
        return self.values[..., pos]
