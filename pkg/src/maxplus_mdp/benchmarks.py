"""Grid MDP benchmarks with known optimal value functions.

Each benchmark discretizes a continuous-time control problem on [0,1]^d
whose value function V and running reward b are chosen to satisfy the
associated Hamilton-Jacobi-Bellman identity
    V(x) log(eta) + max_i |dV/dx_i(x)| + b(x) = 0,
so the analytic V tabulated on the grid is an exact reference to converge
to as the grid step shrinks.  Moves step one node along one axis and earn
delta * b at the reached node; edge-of-grid states are absorbing with
self-loop reward (1 - gamma) * V(boundary point); gamma = eta ** delta.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .grids import Grid
from .mdp import DeterministicMdp

ETA_1D = 0.5
ETA_2D = 0.919
NODES_1D = 362
NODES_2D = 45


def _hinge_value(x):
    return np.maximum(1.0 - 3.0 * x, 0.0) + np.maximum(6.0 * x - 4.0, 0.0)


def _hinge_grad_left(x):
    # one-sided (left) derivatives at the kinks x = 1/3 and x = 2/3
    return -3.0 * (x <= 1.0 / 3.0) + 6.0 * (x > 2.0 / 3.0)


def _bump_value(x):
    return np.maximum(1.0 - 36.0 * (x - 0.5) ** 2, 0.0)


def _bump_grad_left(x):
    active = (x > 1.0 / 3.0) & (x <= 2.0 / 3.0)
    return np.where(active, -72.0 * (x - 0.5), 0.0)


@dataclass(frozen=True)
class ValueSpec:
    """Closed-form value function on [0,1]^d with a.e. left derivatives."""
    id: str
    dim: int
    value: Callable[[np.ndarray], np.ndarray]       # (N, d) coords -> (N,)
    grad_left: Callable[[np.ndarray], np.ndarray]   # (N, d) coords -> (N, d)


VALUE_SPECS = {
    "v1d_bumps": ValueSpec(
        "v1d_bumps", 1,
        lambda X: _hinge_value(X[:, 0]) + _bump_value(X[:, 0]),
        lambda X: (_hinge_grad_left(X[:, 0]) + _bump_grad_left(X[:, 0]))[:, None]),
    "v1d_convex": ValueSpec(
        "v1d_convex", 1,
        lambda X: _hinge_value(X[:, 0]),
        lambda X: _hinge_grad_left(X[:, 0])[:, None]),
    "v2d_sparse": ValueSpec(
        "v2d_sparse", 2,
        lambda X: _hinge_value(X[:, 0]),
        lambda X: np.stack([_hinge_grad_left(X[:, 0]), np.zeros(X.shape[0])], axis=1)),
    "v2d_full": ValueSpec(
        "v2d_full", 2,
        lambda X: _hinge_value(X[:, 0]) + _hinge_value(X[:, 1]),
        lambda X: np.stack([_hinge_grad_left(X[:, 0]), _hinge_grad_left(X[:, 1])],
                           axis=1)),
}


@dataclass
class BenchmarkProblem:
    mdp: DeterministicMdp
    grid: Grid
    v_star: np.ndarray
    eta: float
    delta: float
    spec: ValueSpec

    @property
    def gamma(self) -> float:
        return self.mdp.gamma

    @property
    def horizon(self) -> float:
        return 1.0 / (1.0 - self.mdp.gamma)


def reward_from_value(spec: ValueSpec, eta: float) -> Callable[[np.ndarray], np.ndarray]:
    """Running reward b with b = -V log(eta) - max_i |dV/dx_i| (left derivatives)."""
    if not 0.0 < eta <= 1.0:
        raise ValueError("eta must lie in (0, 1]")
    log_eta = np.log(eta)

    def b(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, float))
        return -spec.value(X) * log_eta - np.abs(spec.grad_left(X)).max(axis=1)

    return b


def reward_from_value_1d(spec: ValueSpec, eta: float) -> Callable[[np.ndarray], np.ndarray]:
    """1-D convenience wrapper of reward_from_value taking bare x values."""
    if spec.dim != 1:
        raise ValueError(f"spec {spec.id} is not one-dimensional")
    b = reward_from_value(spec, eta)
    return lambda x: b(np.asarray(x, float).reshape(-1, 1))


def build_1d(spec: ValueSpec, nodes: int = NODES_1D, eta: float = ETA_1D) -> BenchmarkProblem:
    """Chain MDP on ``nodes`` grid points of [0,1] with absorbing endpoints."""
    if isinstance(spec, str):
        spec = VALUE_SPECS[spec]
    if spec.dim != 1:
        raise ValueError(f"spec {spec.id} is not one-dimensional")
    if nodes < 3:
        raise ValueError("need at least 3 nodes")
    grid = Grid((nodes,))
    delta = 1.0 / (nodes - 1)
    gamma = eta ** delta
    bvals = reward_from_value(spec, eta)(grid.coords)
    v_star = spec.value(grid.coords)

    interior = np.arange(1, nodes - 1)
    src = np.concatenate([interior, interior, [0, nodes - 1]])
    dst = np.concatenate([interior + 1, interior - 1, [0, nodes - 1]])
    reward = np.concatenate([delta * bvals[interior + 1], delta * bvals[interior - 1],
                             [(1 - gamma) * v_star[0], (1 - gamma) * v_star[-1]]])
    mdp = DeterministicMdp(nodes, (src, dst, reward), gamma, grid=grid)
    return BenchmarkProblem(mdp, grid, v_star, eta, delta, spec)


def build_2d(spec: ValueSpec, nodes_per_dim: int = NODES_2D,
             eta: float = ETA_2D) -> BenchmarkProblem:
    """Grid MDP on [0,1]^2 with 4 interior moves and absorbing faces."""
    if isinstance(spec, str):
        spec = VALUE_SPECS[spec]
    if spec.dim != 2:
        raise ValueError(f"spec {spec.id} is not two-dimensional")
    if nodes_per_dim < 3:
        raise ValueError("need at least 3 nodes per dimension")
    m = nodes_per_dim
    grid = Grid((m, m))
    delta = 1.0 / (m - 1)
    gamma = eta ** delta
    bvals = reward_from_value(spec, eta)(grid.coords)
    v_star = spec.value(grid.coords)

    idx = grid.indices
    interior = np.flatnonzero((idx > 0).all(axis=1) & (idx < m - 1).all(axis=1))
    srcs, dsts = [], []
    for step in (m, -m, 1, -1):  # +/- axis 0 then +/- axis 1 in ravel order
        srcs.append(interior)
        dsts.append(interior + step)
    src = np.concatenate(srcs)
    dst = np.concatenate(dsts)
    reward = delta * bvals[dst]
    boundary = np.flatnonzero((idx == 0).any(axis=1) | (idx == m - 1).any(axis=1))
    src = np.concatenate([src, boundary])
    dst = np.concatenate([dst, boundary])
    reward = np.concatenate([reward, (1 - gamma) * v_star[boundary]])
    mdp = DeterministicMdp(m * m, (src, dst, reward), gamma, grid=grid)
    return BenchmarkProblem(mdp, grid, v_star, eta, delta, spec)


def build_benchmark(problem_id: str, nodes: int | None = None,
                    eta: float | None = None) -> BenchmarkProblem:
    """Dispatch on the builtin problem id with its default size and discount base."""
    if problem_id not in VALUE_SPECS:
        raise ValueError(f"unknown benchmark {problem_id!r}; "
                         f"choose from {sorted(VALUE_SPECS)}")
    spec = VALUE_SPECS[problem_id]
    if spec.dim == 1:
        return build_1d(spec, nodes or NODES_1D, ETA_1D if eta is None else eta)
    return build_2d(spec, nodes or NODES_2D, ETA_2D if eta is None else eta)


def error_metrics(V, v_star, grid: Grid | None = None) -> tuple[float, float]:
    """(l1, linf) approximation errors; l1 is the grid mean (unit domain volume)."""
    V = np.asarray(V, float)
    v_star = np.asarray(v_star, float)
    if V.shape != v_star.shape:
        raise ValueError("shape mismatch")
    gap = np.abs(V - v_star)
    return float(gap.mean()), float(gap.max())
