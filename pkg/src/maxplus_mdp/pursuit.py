"""Greedy dictionary growth (matching pursuit) for the reduced iteration.

A run keeps a converged reduced fixed point for the current dictionaries
and repeatedly scores candidate modifications by the residual norm they
would leave behind, adopting the best one.  Two modes are provided:

* partition mode: W = Z = indicators of a box partition; a candidate is a
  dyadic midpoint split of the cell containing the worst residual state,
  one proposal per splittable dimension, and the cluster MDP is patched
  incrementally (two rows and two columns) after each adoption;
* atom mode: W = Z = a growing family of scaled negative-distance atoms; a
  candidate pool of (center, scale) pairs is scored with the closed-form
  one-new-atom criteria and the compiled form matrices gain one row and
  one column per adoption.
"""

from __future__ import annotations

import numpy as np

from .core import (NEG_INF, CoverageError, Dictionary, discount_scale,
                   project_upper, residuate, sup_distance)
from .dictionaries import (DistanceAtom, Partition, TabulatedAtom, lipschitz_estimate,
                           make_partition_dictionary, split_box_cell)
from .grids import Grid
from .mdp import (DENSE_POWER_THRESHOLD, ConvergenceError, DeterministicMdp,
                  bellman_apply, compile_power, maxplus_matmul)
from .reduced import CompiledForms, dictionary_key, run_reduced_vi

NORMS = ("l1", "linf")


class SplitExhaustedError(RuntimeError):
    """The located cell cannot be split along any dimension."""


def _aggregate(pointwise: np.ndarray, norm: str) -> float:
    if norm == "linf":
        return float(pointwise.max())
    if norm == "l1":
        return float(pointwise.sum())
    raise ValueError(f"norm must be one of {NORMS}, got {norm!r}")


def criterion_w(U, V, w_values, norm: str = "linf") -> float:
    """Residual norm left on U after adding one atom to the lower dictionary.

    Closed form of || U - proj_lower(W + {w}, U) || given V = proj_lower(W, U):
    pointwise min of the old gap U - V and the new-atom gap
    U(s) - w(s) + max_s' (w(s') - U(s')).
    """
    U = np.asarray(U, float)
    V = np.asarray(V, float)
    w = np.asarray(w_values, float)
    finite = w != NEG_INF
    if not finite.any():
        raise CoverageError("candidate atom is -inf at every state")
    pairing = np.max(w[finite] - U[finite])
    branch = np.where(finite, U - np.where(finite, w, 0.0) + pairing, np.inf)
    return _aggregate(np.minimum(U - V, branch), norm)


def criterion_z(TV, U, z_values, norm: str = "linf") -> float:
    """Residual norm left on TV after adding one atom to the upper dictionary.

    Closed form of || proj_upper(Z + {z}, TV) - TV || given U = proj_upper(Z, TV):
    pointwise min of U - TV and -TV(s) - z(s) + max_s' (TV(s') + z(s')).
    """
    TV = np.asarray(TV, float)
    U = np.asarray(U, float)
    z = np.asarray(z_values, float)
    finite = z != NEG_INF
    if not finite.any():
        raise CoverageError("candidate atom is -inf at every state")
    pairing = np.max(TV[finite] + z[finite])
    branch = np.where(finite, -TV - np.where(finite, z, 0.0) + pairing, np.inf)
    return _aggregate(np.minimum(U - TV, branch), norm)


class SplitProposal:
    """Split one box cell at the index midpoint of one dimension."""

    __slots__ = ("cell", "dim")

    def __init__(self, cell: int, dim: int):
        self.cell = int(cell)
        self.dim = int(dim)

    def __repr__(self):
        return f"SplitProposal(cell={self.cell}, dim={self.dim})"


class AtomProposal:
    """Add one atom (same atom to W and Z); carries its tabulation."""

    __slots__ = ("atom", "values")

    def __init__(self, atom, values):
        self.atom = atom
        self.values = np.asarray(values, float)

    def __repr__(self):
        return f"AtomProposal({self.atom.describe()})"


# ---------------------------------------------------------------------------
# Run state

class GreedyRunState:
    """Shared surface of a pursuit run: dictionaries, coefficients, residuals.

    Invariants after every converged step: V <= U and U >= TV pointwise
    (lower/upper projection geometry).
    """

    def __init__(self, M: DeterministicMdp, rho: int, tol: float, norm: str,
                 grid: Grid, v_star=None,
                 dense_threshold: int = DENSE_POWER_THRESHOLD):
        if norm not in NORMS:
            raise ValueError(f"norm must be one of {NORMS}")
        self.mdp = M
        self.rho = int(rho)
        self.tol = float(tol)
        self.norm = norm
        self.grid = grid
        self.v_star = None if v_star is None else np.asarray(v_star, float)
        self.mdp_power = compile_power(M, rho, dense_threshold)
        self.gamma_eff = self.mdp_power.gamma
        self.alpha = None
        self.beta = None
        self.V = None
        self.TV = None
        self.U = None
        self.error_trace = []

    @property
    def n_atoms(self) -> int:
        raise NotImplementedError

    @property
    def W(self) -> Dictionary:
        raise NotImplementedError

    @property
    def Z(self) -> Dictionary:
        raise NotImplementedError

    @property
    def forms(self) -> CompiledForms:
        raise NotImplementedError

    def residual_norm(self) -> float:
        return _aggregate(self.U - self.TV, self.norm)

    def propose(self):
        raise NotImplementedError

    def score(self, proposal) -> float:
        raise NotImplementedError

    def adopt(self, proposal) -> None:
        raise NotImplementedError

    def _record(self, kind: str, desc: str) -> None:
        if self.v_star is not None:
            gap = np.abs(self.V - self.v_star)
            l1, linf = float(gap.mean()), float(gap.max())
        else:
            l1 = linf = float("nan")
        self.error_trace.append({"n": self.n_atoms, "err_l1": l1, "err_linf": linf,
                                 "atom_kind": kind, "atom_desc": desc,
                                 "rho": self.rho, "norm": self.norm})


class PartitionGreedyState(GreedyRunState):
    """Pursuit over box partitions with the cluster-MDP fast path."""

    def __init__(self, M, partition: Partition, rho=1, tol=1e-8, norm="l1",
                 grid: Grid | None = None, v_star=None,
                 dense_threshold=DENSE_POWER_THRESHOLD, max_iter=1_000_000):
        grid = grid if grid is not None else M.grid
        if grid is None:
            raise ValueError("partition pursuit needs a grid")
        if partition.boxes is None:
            raise ValueError("partition pursuit needs box descriptions to split")
        super().__init__(M, rho, tol, norm, grid, v_star, dense_threshold)
        self.P = partition
        self.max_iter = max_iter
        S = M.state_count
        self._dense_R = self.mdp_power.dense_rewards() if S <= dense_threshold else None
        self._cluster_R = self._full_cluster_R()
        self.alpha = np.zeros(self.P.n_cells)
        self._converge()
        self._record("init", f"partition(n={self.P.n_cells})")

    # -- cluster reward maintenance

    def _full_cluster_R(self) -> np.ndarray:
        n = self.P.n_cells
        R = np.full((n, n), NEG_INF)
        mp = self.mdp_power
        np.maximum.at(R, (self.P.cell_of[mp.src], self.P.cell_of[mp.dst]), mp.reward)
        return R

    def _cluster_row(self, states) -> np.ndarray:
        out = np.full(self.P.n_cells, NEG_INF)
        if self._dense_R is not None:
            np.maximum.at(out, self.P.cell_of, self._dense_R[states].max(axis=0))
        else:
            mp = self.mdp_power
            spans = [np.arange(mp.indptr[s], mp.indptr[s + 1]) for s in states]
            idx = np.concatenate(spans)
            np.maximum.at(out, self.P.cell_of[mp.dst[idx]], mp.reward[idx])
        return out

    def _cluster_col(self, states) -> np.ndarray:
        out = np.full(self.P.n_cells, NEG_INF)
        if self._dense_R is not None:
            np.maximum.at(out, self.P.cell_of, self._dense_R[:, states].max(axis=1))
        else:
            mp = self.mdp_power
            keep = np.isin(mp.dst, states)
            np.maximum.at(out, self.P.cell_of[mp.src[keep]], mp.reward[keep])
        return out

    # -- convergence

    def _converge(self) -> None:
        R = self._cluster_R
        alpha = self.alpha
        threshold = self.tol * (1.0 - self.gamma_eff)
        res = float("inf")
        for t in range(1, self.max_iter + 1):
            nxt = np.max(R + discount_scale(self.gamma_eff, alpha)[None, :], axis=1)
            res = sup_distance(nxt, alpha)
            alpha = nxt
            if res <= threshold:
                break
        else:
            raise ConvergenceError("cluster iteration did not converge",
                                   value=alpha, iterations=self.max_iter, residual=res)
        self.alpha = alpha
        self.beta = alpha
        self.V = alpha[self.P.cell_of]
        self.TV = bellman_apply(self.mdp_power, self.V)
        cellmax = np.full(self.P.n_cells, NEG_INF)
        np.maximum.at(cellmax, self.P.cell_of, self.TV)
        self.U = cellmax[self.P.cell_of]
        r = self.U - self.TV
        self._res = r
        self._res_cell_max = np.zeros(self.P.n_cells)
        np.maximum.at(self._res_cell_max, self.P.cell_of, r)
        self._res_cell_sum = np.bincount(self.P.cell_of, weights=r,
                                         minlength=self.P.n_cells)

    # -- public run-state surface

    @property
    def n_atoms(self) -> int:
        return self.P.n_cells

    @property
    def W(self) -> Dictionary:
        return make_partition_dictionary(self.P)

    Z = W

    @property
    def forms(self) -> CompiledForms:
        n = self.P.n_cells
        zw = np.full((n, n), NEG_INF)
        np.fill_diagonal(zw, 0.0)
        W = self.W
        return CompiledForms(zw=zw, ztw=self._cluster_R.copy(), rho=self.rho,
                             gamma_eff=self.gamma_eff, w_dict=W, z_dict=W,
                             mdp_key=self.mdp.key(), w_key=dictionary_key(W),
                             z_key=dictionary_key(W))

    def propose(self):
        s_star = int(np.argmax(self._res))
        cell = int(self.P.cell_of[s_star])
        box = self.P.boxes[cell]
        proposals = [SplitProposal(cell, d) for d in range(self.grid.dim)
                     if box[d, 1] > box[d, 0]]
        if not proposals:
            raise SplitExhaustedError(
                f"cell {cell} (worst residual) has single-node extent in every dimension")
        return proposals

    def _split_residuals(self, proposal):
        states = self.P.cells[proposal.cell]
        box = self.P.boxes[proposal.cell]
        mid = (int(box[proposal.dim, 0]) + int(box[proposal.dim, 1])) // 2
        low_mask = self.grid.indices[states, proposal.dim] <= mid
        tv = self.TV[states]
        tlow, thigh = tv[low_mask], tv[~low_mask]
        return tlow.max() - tlow, thigh.max() - thigh

    def score(self, proposal) -> float:
        rlow, rhigh = self._split_residuals(proposal)
        if self.norm == "linf":
            others = self._res_cell_max.copy()
            others[proposal.cell] = NEG_INF
            outside = others.max() if others.size > 1 else NEG_INF
            return float(max(outside, rlow.max(), rhigh.max()))
        inside = rlow.sum() + rhigh.sum()
        return float(self._res_cell_sum.sum() - self._res_cell_sum[proposal.cell] + inside)

    def adopt(self, proposal) -> None:
        cell, dim = proposal.cell, proposal.dim
        newP, mid = split_box_cell(self.P, cell, dim, self.grid)
        self.P = newP
        n = newP.n_cells
        Rn = np.full((n, n), NEG_INF)
        Rn[:n - 1, :n - 1] = self._cluster_R
        low, high = newP.cells[cell], newP.cells[n - 1]
        Rn[cell, :] = self._cluster_row(low)
        Rn[n - 1, :] = self._cluster_row(high)
        Rn[:, cell] = self._cluster_col(low)
        Rn[:, n - 1] = self._cluster_col(high)
        self._cluster_R = Rn
        self.alpha = np.append(self.alpha, self.alpha[cell])
        self._converge()
        self._record("split", f"cell={cell} dim={dim} mid={mid}")


class AtomGreedyState(GreedyRunState):
    """Pursuit over shared W = Z atom families with incremental form updates."""

    def __init__(self, M, dictionary: Dictionary, rho=1, tol=1e-8, norm="l1",
                 grid: Grid | None = None, v_star=None,
                 dense_threshold=DENSE_POWER_THRESHOLD, max_iter=1_000_000):
        grid = grid if grid is not None else M.grid
        if grid is None:
            raise ValueError("atom pursuit needs a grid")
        if dictionary.atoms is None:
            raise ValueError("atom pursuit needs symbolic atoms")
        super().__init__(M, rho, tol, norm, grid, v_star, dense_threshold)
        self.max_iter = max_iter
        self.atoms = list(dictionary.atoms)
        self._table = np.array(dictionary.table, copy=True)
        self._tw = np.stack([bellman_apply(self.mdp_power, w) for w in self._table])
        self._zw = maxplus_matmul(self._table, self._table.T)
        self._ztw = maxplus_matmul(self._table, self._tw.T)
        self.alpha = residuate(self.W, np.zeros(M.state_count))
        self._converge()
        self._record("init", f"atoms(n={len(self.atoms)})")

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    @property
    def W(self) -> Dictionary:
        return Dictionary(self._table, self.atoms)

    Z = W

    @property
    def forms(self) -> CompiledForms:
        W = self.W
        key = dictionary_key(W)
        return CompiledForms(zw=self._zw, ztw=self._ztw, rho=self.rho,
                             gamma_eff=self.gamma_eff, w_dict=W, z_dict=W,
                             mdp_key=self.mdp.key(), w_key=key, z_key=key)

    def _converge(self) -> None:
        state, V = run_reduced_vi(self.forms, alpha0=self.alpha, tol=self.tol,
                                  max_iter=self.max_iter)
        self.alpha, self.beta = state.alpha, state.beta
        self.V = V
        self.TV = bellman_apply(self.mdp_power, self.V)
        self.U = project_upper(self.Z, self.TV)

    def propose(self, max_pool: int = 512, scale_factors=(0.5, 1.0, 2.0)):
        return distance_candidate_pool(self, max_pool=max_pool,
                                       scale_factors=scale_factors)

    def score(self, proposal) -> float:
        w = proposal.values
        return max(criterion_w(self.U, self.V, w, self.norm),
                   criterion_z(self.TV, self.U, w, self.norm))

    def adopt(self, proposal) -> None:
        w = proposal.values
        tw = bellman_apply(self.mdp_power, w)
        col_zw = np.max(self._table + w[None, :], axis=1)
        col_ztw = np.max(self._table + tw[None, :], axis=1)
        row_zw = col_zw  # <z_new|w> over old w equals <z|w_new> over old z: same table
        row_ztw = np.max(w[None, :] + self._tw, axis=1)
        corner_zw = float(np.max(w + w))
        corner_ztw = float(np.max(w + tw))
        n = self.n_atoms
        zw = np.full((n + 1, n + 1), NEG_INF)
        zw[:n, :n] = self._zw
        zw[:n, n] = col_zw
        zw[n, :n] = row_zw
        zw[n, n] = corner_zw
        ztw = np.full((n + 1, n + 1), NEG_INF)
        ztw[:n, :n] = self._ztw
        ztw[:n, n] = col_ztw
        ztw[n, :n] = row_ztw
        ztw[n, n] = corner_ztw
        self._zw, self._ztw = zw, ztw
        self._table = np.vstack([self._table, w[None, :]])
        self._tw = np.vstack([self._tw, tw[None, :]])
        self.atoms.append(proposal.atom)
        self.alpha = residuate(self.W, self.V)
        self._converge()
        self._record(type(proposal.atom).__name__.replace("Atom", "").lower(),
                     proposal.atom.describe())


def distance_candidate_pool(state: AtomGreedyState, max_pool: int = 512,
                            scale_factors=(0.5, 1.0, 2.0)):
    """Centers on a coarse sub-grid crossed with a few scales around Lip(V)."""
    grid = state.grid
    S = grid.state_count
    n_scales = len(scale_factors)
    max_centers = max(1, max_pool // n_scales)
    stride = max(1, int(np.ceil(S / max_centers)))
    centers = np.arange(0, S, stride)
    lip = lipschitz_estimate(state.V, grid)
    base = lip if lip > 0 else 1.0
    dists = grid.distances(grid.coords[centers])
    pool = []
    for f in scale_factors:
        scale = f * base
        for c, row in zip(centers, dists):
            atom = DistanceAtom(tuple(grid.coords[c]), scale)
            pool.append(AtomProposal(atom, -scale * row))
    return pool


def propose_partition_split(state: PartitionGreedyState, partition: Partition | None = None):
    """Locate the worst residual state and emit one midpoint split per splittable dim."""
    if partition is not None and partition is not state.P:
        raise ValueError("partition does not match the run state")
    return state.propose()


def greedy_step(state: GreedyRunState, pool, norm: str | None = None) -> GreedyRunState:
    """Score the pool, adopt the best (lowest-criterion, first index wins), reconverge."""
    if not pool:
        raise ValueError("candidate pool is empty")
    norm = state.norm if norm is None else norm
    if norm != state.norm:
        raise ValueError("norm does not match the run state")
    scores = np.array([state.score(p) for p in pool])
    state.adopt(pool[int(np.argmin(scores))])
    return state


def run_matching_pursuit(M: DeterministicMdp, init, n_max: int, rho: int = 1,
                         norm: str = "l1", tol: float = 1e-8,
                         grid: Grid | None = None, v_star=None,
                         dense_threshold=DENSE_POWER_THRESHOLD) -> GreedyRunState:
    """Grow the dictionaries until n_max atoms; the trace has one row per size.

    ``init`` is either a box Partition (partition mode) or a Dictionary of
    atoms (atom mode).
    """
    if isinstance(init, Partition):
        state = PartitionGreedyState(M, init, rho=rho, tol=tol, norm=norm, grid=grid,
                                     v_star=v_star, dense_threshold=dense_threshold)
    elif isinstance(init, Dictionary):
        state = AtomGreedyState(M, init, rho=rho, tol=tol, norm=norm, grid=grid,
                                v_star=v_star, dense_threshold=dense_threshold)
    else:
        raise TypeError("init must be a Partition or a Dictionary")
    while state.n_atoms < n_max:
        pool = state.propose()
        greedy_step(state, pool)
    return state


TRACE_HEADER = ["n", "err_l1", "err_linf", "atom_kind", "atom_desc", "rho", "norm"]


def write_trace(rows, path) -> None:
    import csv
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=TRACE_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow({k: row[k] for k in TRACE_HEADER})


# ---------------------------------------------------------------------------
# Majorization-minimization refinement of one parameterized atom

class TabulatedParam:
    """Full-freedom parameterization: the parameter vector is the tabulation."""

    def __init__(self, init_values):
        self._init = np.asarray(init_values, float)

    def initial_params(self):
        return self._init.copy()

    def values(self, theta):
        return np.asarray(theta, float)

    def project(self, theta):
        return theta

    def atom(self, theta):
        return TabulatedAtom(tuple(np.asarray(theta, float).tolist()))


class DistanceAtomParam:
    """(center, scale) parameterization of a negative-distance atom."""

    def __init__(self, grid: Grid, init_center, init_scale, metric="l1", dims=None):
        self.grid = grid
        self.metric = metric
        self.dims = dims
        self._init = np.concatenate([np.asarray(init_center, float), [float(init_scale)]])

    def initial_params(self):
        return self._init.copy()

    def values(self, theta):
        center, scale = theta[:-1], theta[-1]
        d = self.grid.distances([center], metric=self.metric, dims=self.dims)[0]
        return -scale * d

    def project(self, theta):
        out = np.clip(theta, 0.0, None)
        out[:-1] = np.clip(theta[:-1], 0.0, 1.0)
        out[-1] = max(theta[-1], 1e-9)
        return out

    def atom(self, theta):
        return DistanceAtom(tuple(theta[:-1]), float(theta[-1]),
                            None if self.dims is None else tuple(self.dims), self.metric)


def mm_refine_atom(state: GreedyRunState, param, max_rounds: int = 10,
                   inner_steps: int = 50):
    """Refine one upper-dictionary candidate by majorization-minimization.

    Each round freezes the pointwise branch choice eta*(s) in the two-branch
    criterion (1 where the incumbent gap U - TV is the smaller branch) and
    runs a projected subgradient pass on the resulting upper bound in the
    atom parameters.  The returned atom is the best seen under the true
    criterion, so the criterion never increases.
    """
    TV, U = state.TV, state.U
    A = U - TV
    norm = state.norm

    def true_criterion(values):
        return criterion_z(TV, U, values, norm)

    theta = np.asarray(param.initial_params(), float)
    best_theta = theta.copy()
    best_val = true_criterion(param.values(theta))
    if best_val <= 1e-14:
        return param.atom(best_theta)

    def majorizer(th, keep):
        z = param.values(th)
        branch = -TV - z + np.max(TV + z)
        return _aggregate(np.where(keep, A, branch), norm)

    h = 1e-6
    for _ in range(max_rounds):
        z = param.values(theta)
        branch = -TV - z + np.max(TV + z)
        keep = A <= branch
        cur_best = majorizer(theta, keep)
        cur_theta = theta.copy()
        th = theta.copy()
        step0 = 0.5 * max(1.0, float(np.max(np.abs(theta))))
        for t in range(1, inner_steps + 1):
            g = np.zeros_like(th)
            for i in range(th.size):
                d = np.zeros_like(th)
                d[i] = h
                g[i] = (majorizer(param.project(th + d), keep)
                        - majorizer(param.project(th - d), keep)) / (2 * h)
            gn = float(np.linalg.norm(g))
            if gn == 0.0:
                break
            th = param.project(th - (step0 / np.sqrt(t)) * g / gn)
            val = majorizer(th, keep)
            if val < cur_best:
                cur_best, cur_theta = val, th.copy()
        theta = cur_theta
        val = true_criterion(param.values(theta))
        if val < best_val - 1e-15:
            best_val = val
            best_theta = theta.copy()
        else:
            break
    return param.atom(best_theta)
