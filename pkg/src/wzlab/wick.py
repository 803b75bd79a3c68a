"""Exact Wick calculus on finite combinations of stochastic exponentials.

An :class:`ExponentialVector` is ``sum_j alpha_j E(f_j)`` with
``E(f) = exp(delta(f) - |f|^2 / 2)`` and ``delta(f) = int f dB``.  On this span
the Wick product, the Cameron-Martin translation ``T_g``, the contraction
``Gamma(1/sqrt 2)``, expectations and ``L^2`` norms all have closed forms.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NotExactlyComputableError
from .grid import BrownianPath, GridFunction, TimeGrid, _check_same_grid

MERGE_TOL = 1e-12

PLAIN_EXP = "PlainExp"
STOCH_EXP = "StochExp"


def _gram(a: np.ndarray, b: np.ndarray, dt: float) -> np.ndarray:
    return (a @ b.T) * dt


@dataclass(frozen=True, eq=False)
class ExponentialVector:
    grid: TimeGrid
    coeffs: np.ndarray
    exponents: np.ndarray

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float).reshape(-1)
        f = np.asarray(self.exponents, dtype=float).reshape(c.size, self.grid.n_steps)
        c, f = _canonical(c, f, self.grid.dt)
        c.flags.writeable = False
        f.flags.writeable = False
        object.__setattr__(self, "coeffs", c)
        object.__setattr__(self, "exponents", f)

    @classmethod
    def single(cls, f: GridFunction, coeff: float = 1.0) -> "ExponentialVector":
        return cls(f.grid, [coeff], f.cell_values[None, :])

    @classmethod
    def constant(cls, grid: TimeGrid, value: float = 1.0) -> "ExponentialVector":
        return cls(grid, [value], np.zeros((1, grid.n_steps)))

    @classmethod
    def from_terms(cls, terms) -> "ExponentialVector":
        terms = list(terms)
        if not terms:
            raise DomainError("need at least one term to infer the grid")
        grid = terms[0][1].grid
        for _, f in terms:
            _check_same_grid(grid, f.grid)
        return cls(grid, [a for a, _ in terms], np.array([f.cell_values for _, f in terms]))

    @property
    def terms(self):
        return [(float(a), GridFunction(self.grid, f)) for a, f in zip(self.coeffs, self.exponents)]

    def __len__(self):
        return self.coeffs.size

    def norms_sq(self) -> np.ndarray:
        return np.einsum("ij,ij->i", self.exponents, self.exponents) * self.grid.dt

    def evaluate(self, path: BrownianPath):
        """Pathwise value; broadcasts over a stack of paths."""
        _check_same_grid(self.grid, path.grid)
        if not len(self):
            return np.zeros(path.increments.shape[:-1]) if path.batched else 0.0
        logs = path.increments @ self.exponents.T - 0.5 * self.norms_sq()
        out = np.exp(logs) @ self.coeffs
        return float(out) if np.ndim(out) == 0 else out

    def expectation(self) -> float:
        return float(self.coeffs.sum())

    def scale(self, c: float) -> "ExponentialVector":
        return ExponentialVector(self.grid, self.coeffs * c, self.exponents)

    def __add__(self, other):
        if not isinstance(other, ExponentialVector):
            return NotImplemented
        _check_same_grid(self.grid, other.grid)
        return ExponentialVector(
            self.grid,
            np.concatenate([self.coeffs, other.coeffs]),
            np.vstack([self.exponents, other.exponents]),
        )

    def __sub__(self, other):
        if not isinstance(other, ExponentialVector):
            return NotImplemented
        return self + other.scale(-1.0)

    def __mul__(self, c):
        return self.scale(float(c))

    __rmul__ = __mul__

    def __neg__(self):
        return self.scale(-1.0)

    def equals(self, other: "ExponentialVector", atol: float = 1e-12) -> bool:
        """Equality of canonical forms."""
        diff = self - other
        return bool(np.all(np.abs(diff.coeffs) <= atol * max(1.0, np.abs(self.coeffs).max(initial=0))))

    def __repr__(self):
        return f"ExponentialVector({len(self)} terms, n={self.grid.n_steps})"


def _canonical(coeffs, exps, dt):
    """Merge L2-equal exponents and drop zero coefficients."""
    m = coeffs.size
    if m == 0:
        return coeffs.copy(), exps.copy()
    owner = np.arange(m)
    for i in range(m):
        if owner[i] != i:
            continue
        d = exps[i + 1:] - exps[i]
        close = np.sqrt(np.einsum("ij,ij->i", d, d) * dt) <= MERGE_TOL
        for j in np.nonzero(close)[0] + i + 1:
            if owner[j] == j:
                owner[j] = i
    keep = np.unique(owner)
    merged = np.array([coeffs[owner == i].sum() for i in keep])
    nz = merged != 0.0
    return merged[nz], exps[keep][nz].copy()


@dataclass(frozen=True, eq=False)
class ExpFactor:
    """Plain exponential ``exp(delta(f))`` without the ``-|f|^2/2`` correction."""

    exponent: GridFunction

    def evaluate(self, path: BrownianPath):
        from .grid import ito_integral

        return np.exp(ito_integral(self.exponent, path))

    def to_vector(self) -> ExponentialVector:
        f = self.exponent
        return ExponentialVector.single(f, np.exp(0.5 * f.norm() ** 2))


def stochastic_exponential(f: GridFunction, coeff: float = 1.0) -> ExponentialVector:
    return ExponentialVector.single(f, coeff)


def inverse_exponential(f: GridFunction) -> ExponentialVector:
    """Pointwise reciprocal ``E(f)^{-1} = e^{|f|^2} E(-f)``."""
    return ExponentialVector.single(-f, np.exp(f.norm() ** 2))


def wick_product(a: ExponentialVector, b: ExponentialVector) -> ExponentialVector:
    _check_same_grid(a.grid, b.grid)
    coeffs = np.outer(a.coeffs, b.coeffs).reshape(-1)
    exps = (a.exponents[:, None, :] + b.exponents[None, :, :]).reshape(-1, a.grid.n_steps)
    return ExponentialVector(a.grid, coeffs, exps)


def wick_inverse_exponential(f: GridFunction) -> ExponentialVector:
    """Wick inverse of ``E(f)``, which is ``E(-f)``."""
    return ExponentialVector.single(-f)


def translate(a: ExponentialVector, g: GridFunction) -> ExponentialVector:
    """``T_g``: each term ``alpha E(f)`` becomes ``alpha e^{<f, g>} E(f)``."""
    _check_same_grid(a.grid, g.grid)
    shifts = a.exponents @ g.cell_values * a.grid.dt
    return ExponentialVector(a.grid, a.coeffs * np.exp(shifts), a.exponents)


def gamma_contract(a: ExponentialVector) -> ExponentialVector:
    """``Gamma(1/sqrt 2)``: exponents scaled by ``1/sqrt 2``, coefficients kept."""
    return ExponentialVector(a.grid, a.coeffs, a.exponents / np.sqrt(2.0))


def lp_norm_exact(a, p: float) -> float:
    """Closed-form ``||a||_p``.

    Available for a single stochastic exponential and a plain exponential
    (any ``p >= 1``) and for any :class:`ExponentialVector` at ``p = 2``.
    """
    if p < 1:
        raise DomainError(f"p must be >= 1, got {p}")
    if isinstance(a, ExpFactor):
        return float(np.exp(p * a.exponent.norm() ** 2 / 2))
    if len(a) == 0:
        return 0.0
    if len(a) == 1:
        return float(abs(a.coeffs[0]) * np.exp((p - 1) * a.norms_sq()[0] / 2))
    if p == 2:
        G = _gram(a.exponents, a.exponents, a.grid.dt)
        val = a.coeffs @ np.exp(G) @ a.coeffs
        return float(np.sqrt(max(val, 0.0)))
    raise NotExactlyComputableError(
        f"no closed form for the L^{p} norm of a {len(a)}-term vector; use lp_norm_mc"
    )


def lp_norm_mc(a, p: float, paths: BrownianPath):
    """Monte Carlo ``||a||_p`` and its delta-method standard error."""
    vals = np.abs(np.atleast_1d(a.evaluate(paths))) ** p
    n = vals.size
    m = vals.mean()
    se_m = vals.std(ddof=1) / np.sqrt(n) if n > 1 else np.inf
    est = m ** (1 / p)
    se = est / (p * m) * se_m if m > 0 else 0.0
    return float(est), float(se)


def l2_distance_exact(f: GridFunction, g: GridFunction, kind: str = STOCH_EXP) -> float:
    """``||exp(delta f) - exp(delta g)||_2`` or ``||E(f) - E(g)||_2``."""
    _check_same_grid(f.grid, g.grid)
    ff, gg, fg = f.inner(f), g.inner(g), f.inner(g)
    if kind == PLAIN_EXP:
        val = np.exp(2 * ff) + np.exp(2 * gg) - 2 * np.exp((ff + gg + 2 * fg) / 2)
    elif kind == STOCH_EXP:
        val = np.exp(ff) + np.exp(gg) - 2 * np.exp(fg)
    else:
        raise DomainError(f"unknown kind {kind!r}")
    return float(np.sqrt(max(val, 0.0)))


def l2_distance_from_inner(ff, gg, fg, kind: str = STOCH_EXP):
    """Vectorised :func:`l2_distance_exact` from ``|f|^2``, ``|g|^2`` and ``<f, g>``."""
    ff, gg, fg = (np.asarray(v, dtype=float) for v in (ff, gg, fg))
    if kind == PLAIN_EXP:
        val = np.exp(2 * ff) + np.exp(2 * gg) - 2 * np.exp((ff + gg + 2 * fg) / 2)
    elif kind == STOCH_EXP:
        val = np.exp(ff) + np.exp(gg) - 2 * np.exp(fg)
    else:
        raise DomainError(f"unknown kind {kind!r}")
    return np.sqrt(np.maximum(val, 0.0))


def wick_first_chaos(a: ExponentialVector, u: GridFunction, path: BrownianPath):
    """Pathwise value of ``a <> delta(u)``.

    Uses ``E(f) <> delta(u) = E(f) (delta(u) - <f, u>)``, the derivative of
    ``E(f) <> E(lambda u) = E(f + lambda u)`` at ``lambda = 0``.
    """
    from .grid import ito_integral

    _check_same_grid(a.grid, u.grid)
    du = ito_integral(u, path)
    logs = path.increments @ a.exponents.T - 0.5 * a.norms_sq()
    weights = a.coeffs * (a.exponents @ u.cell_values * a.grid.dt)
    return a.evaluate(path) * du - np.exp(logs) @ weights
