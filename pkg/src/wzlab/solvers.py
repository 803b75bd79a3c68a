"""Exact and Wong-Zakai trajectories for ``dX = b(t, X) dt + sigma(t) X dB``.

All routes share one integrator.  Writing the solution as ``X = G e^{L}``
with an explicit log-factor ``L`` (the noise part) leaves the random ODE
``dG/dt = b(t, G e^{L}) e^{-L} + c(t) G`` which is smooth in ``t`` and is
advanced by classical RK4 on the grid; ``L`` is interpolated linearly between
nodes.  The routes differ only in ``L``:

===================  =====================================================
exact Stratonovich   ``L_k = sum_{i<k} sigma_i dB_i``
exact Ito            same, with ``c = -sigma^2 / 2``
pointwise WZ         ``L_k = delta(Kt_k)``
Wick WZ              ``L_j = delta(Kt_j) - <Kt_j, Kt_k> + |Kt_j|^2 / 2`` for
                     output node ``k`` (translated ``S`` equation)
===================  =====================================================

``Kt_k = sum_{j<k} sigma_j (K(t_{j+1}, .) - K(t_j, .))`` is the effective
kernel of ``int_0^t sigma(u) dB^eps_u``; it equals ``sigma K`` for constant
``sigma`` and ``sigma 1_[0, t]`` for the exact kernel.
"""

from __future__ import annotations

import numpy as np

from .errors import DomainError, NonFiniteStateError
from .grid import BrownianPath, GridFunction, TimeGrid, _check_same_grid, _normals, shift_path
from .kernels import POLYGONAL, Kernel, exact_kernel
from .models import (
    CLOSED_FORM,
    EXACT_ITO,
    EXACT_STRATONOVICH,
    FINE_EM,
    ITO,
    STRATONOVICH,
    WZ_POINTWISE,
    WZ_WICK,
    PathSolution,
    SDEConfig,
)

# distinct stream for the bridge refinement of the Euler-Maruyama oracle
_BRIDGE_TAG = 0x5A17_B21D_6E00_0001


def effective_kernel(kernel: Kernel, sigma) -> np.ndarray:
    """Rows ``Kt_k`` of the effective kernel, shape ``(n + 1, n)``."""
    if sigma.is_constant:
        return sigma.value * kernel.table
    sig = sigma.cell_values(kernel.grid)
    out = np.zeros_like(kernel.table)
    np.cumsum(sig[:, None] * np.diff(kernel.table, axis=0), axis=0, out=out[1:])
    return out


def _first_bad(arr, node):
    bad = ~np.isfinite(arr)
    sample = None if arr.ndim == 0 else int(np.argwhere(bad)[0][0])
    return NonFiniteStateError("non-finite solver state", node=node, sample=sample)


def _rk4_factored(drift, grid: TimeGrid, x: float, log_at, shape, n_steps=None,
                  rate=None, record=None):
    """Integrate ``dG/dt = b(t, G e^L) e^{-L} + rate_k G`` on ``[0, t_{n_steps}]``.

    ``log_at(k)`` returns ``L`` at node ``k`` (broadcastable to ``shape``);
    ``rate`` is an optional per-cell linear coefficient.  ``record(k, X)`` is
    called at every node with ``X = G e^{L_k}``; without it the full node
    trajectory is returned.
    """
    n_steps = grid.n_steps if n_steps is None else n_steps
    h = grid.dt
    nodes = grid.nodes
    L0 = np.broadcast_to(log_at(0), shape)
    G = x * np.exp(-L0)
    traj = None
    if record is None:
        traj = np.empty(shape + (n_steps + 1,))
        traj[..., 0] = x

        def record(k, X):
            traj[..., k] = X
    else:
        record(0, np.full(shape, float(x)))
    E0 = np.exp(L0)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n_steps):
            t = nodes[k]
            E1 = np.exp(np.broadcast_to(log_at(k + 1), shape))
            Em = np.sqrt(E0 * E1)
            c = 0.0 if rate is None else rate[k]

            def f(tt, g, e):
                return drift(tt, g * e) / e + c * g

            k1 = f(t, G, E0)
            k2 = f(t + h / 2, G + h / 2 * k1, Em)
            k3 = f(t + h / 2, G + h / 2 * k2, Em)
            k4 = f(t + h, G + h * k3, E1)
            G = G + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            X = G * E1
            if not np.all(np.isfinite(X)):
                raise _first_bad(X, k + 1)
            record(k + 1, X)
            E0 = E1
    return traj


def _log_from_rows(path: BrownianPath, rows: np.ndarray):
    """``delta(row_k)`` for every row, shape ``(..., n + 1)``."""
    return path.increments @ rows.T


def _solution(cfg, path, values, provenance, **meta):
    return PathSolution(cfg.grid, values, provenance, meta=meta)


def _check(cfg: SDEConfig, path: BrownianPath, kernel: Kernel | None = None):
    _check_same_grid(cfg.grid, path.grid)
    if kernel is not None:
        _check_same_grid(cfg.grid, kernel.grid)


def exact_stratonovich(cfg: SDEConfig, path: BrownianPath) -> PathSolution:
    """``X = Z E_0^{-1}`` with ``E_0(t) = exp(-int_0^t sigma dB)``."""
    _check(cfg, path)
    L = np.zeros(path.increments.shape[:-1] + (cfg.grid.n_steps + 1,))
    np.cumsum(path.increments * cfg.sigma.cell_values(cfg.grid), axis=-1, out=L[..., 1:])
    traj = _rk4_factored(cfg.drift, cfg.grid, cfg.x, lambda k: L[..., k], L.shape[:-1])
    return _solution(cfg, path, traj, EXACT_STRATONOVICH, scheme="factored-rk4")


def exact_ito(cfg: SDEConfig, path: BrownianPath) -> PathSolution:
    """Stratonovich form with drift ``b(t, x) - sigma(t)^2 x / 2``."""
    _check(cfg, path)
    sig = cfg.sigma.cell_values(cfg.grid)
    L = np.zeros(path.increments.shape[:-1] + (cfg.grid.n_steps + 1,))
    np.cumsum(path.increments * sig, axis=-1, out=L[..., 1:])
    traj = _rk4_factored(cfg.drift, cfg.grid, cfg.x, lambda k: L[..., k], L.shape[:-1],
                         rate=-0.5 * sig**2)
    return _solution(cfg, path, traj, EXACT_ITO, scheme="factored-rk4", correction="sigma^2")


def _require_derivatives(kernel: Kernel):
    if kernel.dtable is None:
        raise DomainError(f"{kernel.family} kernel has no derivative table")


def wz_pointwise(cfg: SDEConfig, kernel: Kernel, path: BrownianPath, method: str = "factored") -> PathSolution:
    """Solution of ``dX/dt = b(t, X) + sigma(t) X dB^eps/dt``.

    ``method="factored"`` (default) integrates ``G = X e^{-L}``;
    ``method="direct"`` runs RK4 on the ODE itself with ``dB^eps/dt`` taken
    from the kernel's derivative table, and is kept as a cross-check.
    """
    _check(cfg, path, kernel)
    _require_derivatives(kernel)
    if method == "factored":
        L = _log_from_rows(path, effective_kernel(kernel, cfg.sigma))
        traj = _rk4_factored(cfg.drift, cfg.grid, cfg.x, lambda k: L[..., k], L.shape[:-1])
        return _solution(cfg, path, traj, WZ_POINTWISE, scheme="factored-rk4", kernel=repr(kernel))
    if method == "direct":
        traj = _direct_rk4(cfg, kernel, path)
        return _solution(cfg, path, traj, WZ_POINTWISE, scheme="direct-rk4", kernel=repr(kernel))
    raise DomainError(f"unknown method {method!r}")


def _direct_rk4(cfg: SDEConfig, kernel: Kernel, path: BrownianPath):
    grid = cfg.grid
    n, h = grid.n_steps, grid.dt
    lt, rt = _derivative_limits(kernel)
    left = path.increments @ lt.T
    right = path.increments @ rt.T
    sig = cfg.sigma.cell_values(grid)
    X = np.full(path.increments.shape[:-1], float(cfg.x))
    traj = np.empty(X.shape + (n + 1,))
    traj[..., 0] = X
    b = cfg.drift
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(n):
            t = grid.nodes[k]
            r0 = sig[k] * right[..., k]
            r1 = sig[k] * left[..., k + 1]
            rm = 0.5 * (r0 + r1)
            k1 = b(t, X) + r0 * X
            y = X + h / 2 * k1
            k2 = b(t + h / 2, y) + rm * y
            y = X + h / 2 * k2
            k3 = b(t + h / 2, y) + rm * y
            y = X + h * k3
            k4 = b(t + h, y) + r1 * y
            X = X + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(X)):
                raise _first_bad(X, k + 1)
            traj[..., k + 1] = X
    return traj


def output_nodes(grid: TimeGrid, subsample: int = 1) -> np.ndarray:
    """Every ``subsample``-th node, always including ``t_n``."""
    if subsample < 1 or int(subsample) != subsample:
        raise DomainError(f"subsample must be a positive integer, got {subsample!r}")
    idx = np.arange(0, grid.n_steps + 1, int(subsample))
    if idx[-1] != grid.n_steps:
        idx = np.append(idx, grid.n_steps)
    return idx


def wz_wick(cfg: SDEConfig, kernel: Kernel, path: BrownianPath, subsample: int = 1,
            method: str = "gram") -> PathSolution:
    """Wick Wong-Zakai solution through the translated ``S`` equation.

    For each output node ``t_k`` the ``S`` equation
    ``dS/dt = b(t, S) + (1/2) d|Kt_t|^2/dt S + S dL/dt`` is solved on
    ``[0, t_k]`` along the path shifted by ``-int Kt_k``; its value at
    ``t_k`` is ``Y^eps_{t_k}``.  Cost is ``O(n^2)`` per path.

    ``method="gram"`` uses ``delta(f)`` on the shifted path
    ``= delta(f) - <f, Kt_k>`` to treat all output nodes in one vectorised
    sweep; ``method="shift"`` literally builds every shifted path.  Both
    integrate the factored form.  ``method="direct"`` runs RK4 on ``S``
    itself with ``dB^eps/dt`` from the derivative table and the correction
    coefficient ``<Kt, dKt/dt>``, sharing nothing with the factored routes
    but the kernel.

    The representation is established for constant ``sigma``; time-dependent
    ``sigma`` goes through the effective kernel and is flagged
    ``meta["experimental"]``.
    """
    _check(cfg, path, kernel)
    _require_derivatives(kernel)
    ks = output_nodes(cfg.grid, subsample)
    Kt = effective_kernel(kernel, cfg.sigma)
    half_sq = 0.5 * np.einsum("ij,ij->i", Kt, Kt) * cfg.grid.dt
    if method == "gram":
        values = _wick_gram(cfg, path, Kt, half_sq, ks)
    elif method == "shift":
        values = _wick_shift(cfg, path, Kt, half_sq, ks)
    elif method == "direct":
        values = _wick_direct(cfg, kernel, path, Kt, ks)
    else:
        raise DomainError(f"unknown method {method!r}")
    return PathSolution(cfg.grid, values, WZ_WICK, ks,
                        meta={"scheme": f"translated-S/{method}", "subsample": int(subsample),
                              "kernel": repr(kernel), "experimental": not cfg.sigma.is_constant})


def _wick_gram(cfg, path, Kt, half_sq, ks):
    D = path.increments @ Kt.T  # delta(Kt_j), (..., n + 1)
    gram = (Kt @ Kt[ks].T) * cfg.grid.dt  # <Kt_j, Kt_k>, (n + 1, len(ks))
    lead = path.increments.shape[:-1]
    out = np.empty(lead + (ks.size,))
    state = {"lo": 0}

    # columns whose output node has passed are frozen; only active ones advance
    def log_at(j):
        lo = state["lo"]
        return D[..., j, None] - gram[j, lo:] + half_sq[j]

    # record the columns that finish at node j, then drop them
    def record(j, X):
        lo = state["lo"]
        while lo < ks.size and ks[lo] == j:
            out[..., lo] = X[..., 0]
            X = X[..., 1:]
            lo += 1
        state["lo"] = lo

    _rk4_active(cfg, ks, log_at, record, lead, state)
    return out


def _rk4_active(cfg, ks, log_at, record, lead, state):
    """RK4 sweep in which the column set shrinks as output nodes are passed."""
    grid = cfg.grid
    h = grid.dt
    b = cfg.drift
    x = float(cfg.x)
    record(0, np.full(lead + (ks.size,), x))
    lo = state["lo"]
    L0 = np.broadcast_to(log_at(0), lead + (ks.size - lo,))
    G = x * np.exp(-L0)
    E0 = np.exp(L0)
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(int(ks[-1])):
            t = grid.nodes[k]
            E1 = np.exp(log_at(k + 1))
            Em = np.sqrt(E0 * E1)
            k1 = b(t, G * E0) / E0
            k2 = b(t + h / 2, (G + h / 2 * k1) * Em) / Em
            k3 = b(t + h / 2, (G + h / 2 * k2) * Em) / Em
            k4 = b(t + h, (G + h * k3) * E1) / E1
            G = G + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            X = G * E1
            if not np.all(np.isfinite(X)):
                raise _first_bad(X, k + 1)
            before = state["lo"]
            record(k + 1, X)
            drop = state["lo"] - before
            if drop:
                G = G[..., drop:]
                E1 = E1[..., drop:]
            E0 = E1


def _derivative_limits(kernel: Kernel):
    """Left and right limits of ``dK/dt`` at the nodes, as ``(n + 1, n)`` tables.

    Stored rows are left limits; polygonal derivatives jump at partition
    nodes, and there the right limit at ``t_k`` is the left limit at
    ``t_{k+1}``.
    """
    left = kernel.dtable
    if kernel.family == POLYGONAL:
        right = np.vstack([left[1:], left[-1:]])
    else:
        right = left
    return left, right


def _wick_direct(cfg, kernel, path, Kt, ks):
    grid = cfg.grid
    h, dt = grid.dt, grid.dt
    sig = cfg.sigma.cell_values(grid)
    left, right = _derivative_limits(kernel)
    # per node: delta(dK), <dK, Kt_k> for every output k, and <Kt, dK>
    dl, dr = path.increments @ left.T, path.increments @ right.T
    gl, gr = (left @ Kt[ks].T) * dt, (right @ Kt[ks].T) * dt
    cl = np.einsum("ij,ij->i", Kt, left) * dt
    cr = np.einsum("ij,ij->i", Kt, right) * dt
    lead = path.increments.shape[:-1]
    out = np.empty(lead + (ks.size,))
    out[..., 0] = cfg.x
    lo = 1
    S = np.full(lead + (ks.size - 1,), float(cfg.x))
    b = cfg.drift
    with np.errstate(over="ignore", invalid="ignore"):
        for j in range(int(ks[-1])):
            t = grid.nodes[j]
            # total linear rate sigma (dB^eps/dt on the shifted path + <Kt, dK>)
            r0 = sig[j] * (dr[..., j, None] - gr[j, lo:] + cr[j])
            r1 = sig[j] * (dl[..., j + 1, None] - gl[j + 1, lo:] + cl[j + 1])
            rm = 0.5 * (r0 + r1)
            k1 = b(t, S) + r0 * S
            y = S + h / 2 * k1
            k2 = b(t + h / 2, y) + rm * y
            y = S + h / 2 * k2
            k3 = b(t + h / 2, y) + rm * y
            y = S + h * k3
            k4 = b(t + h, y) + r1 * y
            S = S + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
            if not np.all(np.isfinite(S)):
                raise _first_bad(S, j + 1)
            while lo < ks.size and ks[lo] == j + 1:
                out[..., lo] = S[..., 0]
                S = S[..., 1:]
                lo += 1
    return out


def _wick_shift(cfg, path, Kt, half_sq, ks):
    grid = cfg.grid
    lead = path.increments.shape[:-1]
    out = np.empty(lead + (ks.size,))
    out[..., 0] = cfg.x
    for i, k in enumerate(ks):
        if k == 0:
            out[..., i] = cfg.x
            continue
        shifted = shift_path(path, GridFunction(grid, -Kt[k]))
        L = shifted.increments @ Kt[: k + 1].T + half_sq[: k + 1]
        traj = _rk4_factored(cfg.drift, grid, cfg.x, lambda j: L[..., j], lead, n_steps=int(k))
        out[..., i] = traj[..., k]
    return out


def closed_form(cfg: SDEConfig, path: BrownianPath, kernel: Kernel | None = None,
                wick: bool | None = None) -> PathSolution:
    """Closed-form solution for linear drift ``b = r(t) x``.

    Without a kernel this is the exact SDE solution (Stratonovich or Ito per
    ``cfg``); with one it is the Wong-Zakai solution, pointwise for
    Stratonovich and Wick (``x exp(int r + delta(Kt) - |Kt|^2/2)``) for Ito.
    """
    _check(cfg, path, kernel)
    if not cfg.drift.is_linear:
        raise DomainError(f"no closed form for drift family {cfg.drift.family!r}")
    k = exact_kernel(cfg.grid) if kernel is None else kernel
    wick = (cfg.interpretation == ITO) if wick is None else wick
    Kt = effective_kernel(k, cfg.sigma)
    logs = path.increments @ Kt.T + cfg.drift.integrated_rate(cfg.grid.nodes)
    if wick:
        logs = logs - 0.5 * np.einsum("ij,ij->i", Kt, Kt) * cfg.grid.dt
    with np.errstate(over="ignore"):
        values = cfg.x * np.exp(logs)
    return PathSolution(cfg.grid, values, CLOSED_FORM,
                        meta={"kernel": "exact" if kernel is None else repr(kernel), "wick": bool(wick)})


def bridge_refine(path: BrownianPath, factor: int) -> np.ndarray:
    """Sub-increments on a grid ``factor`` times finer that sum to the coarse ones.

    Brownian-bridge construction: independent ``N(0, dt/factor)`` draws
    ``z`` are corrected by ``(sum z - dB) / factor`` within each cell.
    """
    if factor < 1:
        raise DomainError("refinement factor must be >= 1")
    grid = path.grid
    inc = path.increments
    if factor == 1:
        return inc.copy()
    if path.seed is None or path.sample_index is None:
        raise DomainError("bridge refinement needs a seeded path")
    idx = np.atleast_1d(path.sample_index)
    rows = []
    for j in idx:
        rows.append(_normals(int(path.seed) ^ _BRIDGE_TAG, int(j), grid.n_steps * factor))
    z = np.array(rows).reshape(len(idx), grid.n_steps, factor) * np.sqrt(grid.dt / factor)
    coarse = inc.reshape(len(idx), grid.n_steps)
    sub = z - (z.sum(axis=-1) - coarse)[..., None] / factor
    sub = sub.reshape(len(idx), -1)
    return sub if path.batched else sub[0]


def euler_maruyama(cfg: SDEConfig, path: BrownianPath, refine: int = 16) -> PathSolution:
    """Euler-Maruyama for the Ito equation on a ``refine``-times finer grid.

    Values are reported at the coarse nodes.  Independent of the RK4
    machinery; strong order 1/2.
    """
    _check(cfg, path)
    if cfg.interpretation != ITO:
        raise DomainError("euler_maruyama integrates the Ito equation")
    dW = bridge_refine(path, refine)
    n_f = cfg.grid.n_steps * refine
    h = cfg.grid.dt / refine
    t = np.arange(n_f) * h
    sig = np.repeat(cfg.sigma.cell_values(cfg.grid), refine)
    Y = np.full(dW.shape[:-1], float(cfg.x))
    out = np.empty(dW.shape[:-1] + (cfg.grid.n_steps + 1,))
    out[..., 0] = Y
    with np.errstate(over="ignore", invalid="ignore"):
        for i in range(n_f):
            Y = Y + cfg.drift(t[i], Y) * h + sig[i] * Y * dW[..., i]
            if (i + 1) % refine == 0:
                if not np.all(np.isfinite(Y)):
                    raise _first_bad(Y, (i + 1) // refine)
                out[..., (i + 1) // refine] = Y
    return PathSolution(cfg.grid, out, FINE_EM, meta={"refine": refine})


def solve(route: str, cfg: SDEConfig, path: BrownianPath, kernel: Kernel | None = None,
          subsample: int = 1) -> PathSolution:
    """Dispatch by provenance tag."""
    if route == EXACT_STRATONOVICH:
        return exact_stratonovich(cfg, path)
    if route == EXACT_ITO:
        return exact_ito(cfg, path)
    if route == WZ_POINTWISE:
        return wz_pointwise(cfg, kernel, path)
    if route == WZ_WICK:
        return wz_wick(cfg, kernel, path, subsample)
    if route == CLOSED_FORM:
        return closed_form(cfg, path, kernel)
    if route == FINE_EM:
        return euler_maruyama(cfg, path)
    raise DomainError(f"unknown route {route!r}")


def exact_route(interpretation: str) -> str:
    return EXACT_STRATONOVICH if interpretation == STRATONOVICH else EXACT_ITO
