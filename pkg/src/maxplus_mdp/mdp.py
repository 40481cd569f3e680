"""Deterministic MDPs, the Bellman operator, value iteration and operator powers.

An MDP here is an edge list (s, s', reward) with a discount gamma < 1.
Parallel edges are collapsed to their maximal reward at construction, so
the reward function r(s, s') is single-valued and the Bellman sweep is one
segmented max over edges sorted by source.
"""

from __future__ import annotations

import hashlib
import math

import numpy as np

from .core import NEG_INF, as_extended, discount_scale
from .grids import Grid

DENSE_POWER_THRESHOLD = 4096


class ConvergenceError(RuntimeError):
    """Value iteration hit max_iter; carries the last iterate and residual."""

    def __init__(self, message, value=None, iterations=0, residual=float("inf")):
        super().__init__(message)
        self.value = value
        self.iterations = iterations
        self.residual = residual


class DeterministicMdp:
    """Finite deterministic MDP stored as a source-sorted, deduplicated edge list."""

    __slots__ = ("state_count", "src", "dst", "reward", "gamma", "grid", "indptr", "_dense")

    def __init__(self, state_count, edges, gamma, grid: Grid | None = None, _sorted_unique=False):
        state_count = int(state_count)
        if state_count < 1:
            raise ValueError("state_count must be positive")
        if not (0.0 <= gamma < 1.0):
            raise ValueError(f"discount must satisfy 0 <= gamma < 1, got {gamma}")
        if isinstance(edges, tuple) and len(edges) == 3:
            src, dst, reward = (np.asarray(a) for a in edges)
        else:
            edges = list(edges)
            if not edges:
                raise ValueError("edge list is empty")
            src = np.array([e[0] for e in edges], dtype=np.int64)
            dst = np.array([e[1] for e in edges], dtype=np.int64)
            reward = np.array([e[2] for e in edges], dtype=float)
        src = src.astype(np.int64, copy=False)
        dst = dst.astype(np.int64, copy=False)
        reward = reward.astype(float, copy=False)
        if src.size == 0:
            raise ValueError("edge list is empty")
        if not (np.isfinite(reward).all()):
            raise ValueError("edge rewards must be finite")
        if src.min() < 0 or src.max() >= state_count or dst.min() < 0 or dst.max() >= state_count:
            raise ValueError("edge endpoints out of range")

        if not _sorted_unique:
            # collapse parallel (s, s') edges to their max reward
            key = src * state_count + dst
            uniq, inverse = np.unique(key, return_inverse=True)
            merged = np.full(uniq.size, NEG_INF)
            np.maximum.at(merged, inverse, reward)
            src = (uniq // state_count).astype(np.int64)
            dst = (uniq % state_count).astype(np.int64)
            reward = merged

        counts = np.bincount(src, minlength=state_count)
        if (counts == 0).any():
            bad = int(np.flatnonzero(counts == 0)[0])
            raise ValueError(f"state {bad} has no outgoing edge")
        self.state_count = state_count
        self.src = src
        self.dst = dst
        self.reward = reward
        self.gamma = float(gamma)
        self.grid = grid
        self.indptr = np.concatenate(([0], np.cumsum(counts)))
        self._dense = None

    @property
    def edge_count(self) -> int:
        return self.src.size

    def dense_rewards(self) -> np.ndarray:
        """Materialize the (S, S) reward matrix with -inf off the edge set."""
        if self._dense is None:
            R = np.full((self.state_count, self.state_count), NEG_INF)
            R[self.src, self.dst] = self.reward
            self._dense = R
        return self._dense

    def key(self) -> str:
        """Content hash used for compiled-form caching."""
        h = hashlib.sha256()
        h.update(np.int64(self.state_count).tobytes())
        h.update(np.float64(self.gamma).tobytes())
        h.update(self.src.tobytes())
        h.update(self.dst.tobytes())
        h.update(self.reward.tobytes())
        return h.hexdigest()

    def __repr__(self):
        return (f"DeterministicMdp(states={self.state_count}, edges={self.edge_count}, "
                f"gamma={self.gamma:.6g})")


def bellman_apply(M: DeterministicMdp, V) -> np.ndarray:
    """TV(s) = max over edges (s, s') of r(s, s') + gamma * V(s').

    V may contain -inf entries (used when sweeping basis functions with
    partial support); -inf stays absorbing under the discount.
    """
    V = as_extended(V, M.state_count, "V")
    scores = M.reward + discount_scale(M.gamma, V[M.dst])
    return np.maximum.reduceat(scores, M.indptr[:-1])


def bellman_residual(M: DeterministicMdp, V) -> float:
    """sup-norm Bellman residual ||TV - V||_inf."""
    V = as_extended(V, M.state_count, "V")
    return float(np.max(np.abs(bellman_apply(M, V) - V)))


def value_iteration(M: DeterministicMdp, V0=None, tol: float = 1e-8,
                    max_iter: int = 1_000_000, record_residuals: bool = False):
    """Iterate V <- TV until the Bellman residual drops below tol.

    Returns (V, iterations, residual) for the first iterate whose residual
    ||TV - V||_inf is <= tol; the fixed point is then within tol/(1-gamma).
    With record_residuals=True returns (V, iterations, residual, history).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    V = np.zeros(M.state_count) if V0 is None else as_extended(V0, M.state_count, "V0").copy()
    history = []
    for t in range(max_iter + 1):
        TV = bellman_apply(M, V)
        res = float(np.max(np.abs(TV - V)))
        if record_residuals:
            history.append(res)
        if res <= tol:
            return (V, t, res, history) if record_residuals else (V, t, res)
        V = TV
    raise ConvergenceError(
        f"value iteration did not reach tol={tol} within {max_iter} iterations "
        f"(residual {res:.3e})", value=V, iterations=max_iter, residual=res)


def range_of_rewards(M: DeterministicMdp) -> float:
    """Spread of the per-state best outgoing reward."""
    best = np.maximum.reduceat(M.reward, M.indptr[:-1])
    return float(best.max() - best.min())


def greedy_policy(M: DeterministicMdp, V) -> np.ndarray:
    """Per-state argmax successor of r(s, s') + gamma * V(s'), first index wins."""
    V = as_extended(V, M.state_count, "V")
    scores = M.reward + discount_scale(M.gamma, V[M.dst])
    best = np.maximum.reduceat(scores, M.indptr[:-1])
    # first edge index attaining the max within each source block
    hit = scores == best[M.src]
    edge_idx = np.where(hit, np.arange(M.src.size), M.src.size)
    first = np.minimum.reduceat(edge_idx, M.indptr[:-1])
    return M.dst[first]


# ---------------------------------------------------------------------------
# Max-plus matrix powers (operator compilation)

try:  # pragma: no cover - exercised indirectly
    import warnings

    warnings.filterwarnings("ignore", message=".*TBB.*")  # old system TBB is fine to skip
    from numba import njit, prange

    @njit(parallel=True, cache=True)
    def _mp_matmul_kernel(A, B):
        n, m = A.shape
        p = B.shape[1]
        C = np.full((n, p), -np.inf)
        for i in prange(n):
            for k in range(m):
                a = A[i, k]
                if a == -np.inf:
                    continue
                for j in range(p):
                    v = a + B[k, j]
                    if v > C[i, j]:
                        C[i, j] = v
        return C

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover
    _HAVE_NUMBA = False


def maxplus_matmul(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """C[i, j] = max_k A[i, k] + B[k, j] over the max-plus semiring."""
    A = np.ascontiguousarray(A, dtype=float)
    B = np.ascontiguousarray(B, dtype=float)
    if A.shape[1] != B.shape[0]:
        raise ValueError(f"inner dimensions differ: {A.shape} x {B.shape}")
    if _HAVE_NUMBA:
        return _mp_matmul_kernel(A, B)
    C = np.full((A.shape[0], B.shape[1]), NEG_INF)
    for i in range(A.shape[0]):
        mask = A[i] != NEG_INF
        if mask.any():
            C[i] = np.max(A[i, mask, None] + B[mask], axis=0)
    return C


def _combine_dense(Ra, exp_a, Rb, gamma):
    """Reward matrix of the (exp_a + exp_b)-step operator from two powers."""
    return maxplus_matmul(Ra, discount_scale(gamma ** exp_a, Rb))


def _combine_sparse(a_rows, exp_a, b_rows, gamma, state_count):
    """Sparse row-list version of _combine_dense (lists of (cols, vals))."""
    g = gamma ** exp_a
    out = []
    scratch = np.full(state_count, NEG_INF)
    for cols_a, vals_a in a_rows:
        touched = []
        for c, va in zip(cols_a, vals_a):
            cols_b, vals_b = b_rows[c]
            cand = va + g * vals_b
            np.maximum.at(scratch, cols_b, cand)
            touched.append(cols_b)
        cols = np.unique(np.concatenate(touched))
        out.append((cols, scratch[cols].copy()))
        scratch[cols] = NEG_INF
    return out


def compile_power(M: DeterministicMdp, rho: int,
                  dense_threshold: int = DENSE_POWER_THRESHOLD) -> DeterministicMdp:
    """MDP whose one-step Bellman operator equals T^rho of M.

    The compiled rewards are R_rho(s, s'') = max over rho-step edge paths of
    the discounted reward sum, built by repeated max-plus squaring with the
    composition rule R_{a+b} = R_a (x) gamma^a R_b.  The discount becomes
    gamma^rho.  Dense (S, S) matrices are used up to ``dense_threshold``
    states, a row-list path-doubling scheme beyond that.
    """
    if rho < 1:
        raise ValueError("rho must be a positive integer")
    if rho == 1:
        return M
    S = M.state_count
    if S <= dense_threshold:
        acc, acc_exp = None, 0
        base, base_exp = M.dense_rewards().copy(), 1
        e = rho
        while e:
            if e & 1:
                if acc is None:
                    acc, acc_exp = base.copy(), base_exp
                else:
                    acc = _combine_dense(acc, acc_exp, base, M.gamma)
                    acc_exp += base_exp
            e >>= 1
            if e:
                base = _combine_dense(base, base_exp, base, M.gamma)
                base_exp *= 2
        src, dst = np.nonzero(acc != NEG_INF)
        rewards = acc[src, dst]
        out = DeterministicMdp(S, (src, dst, rewards), M.gamma ** rho, grid=M.grid,
                               _sorted_unique=True)
        out._dense = acc
        return out

    rows = [(M.dst[M.indptr[s]:M.indptr[s + 1]], M.reward[M.indptr[s]:M.indptr[s + 1]])
            for s in range(S)]
    acc, acc_exp = None, 0
    base, base_exp = rows, 1
    e = rho
    while e:
        if e & 1:
            if acc is None:
                acc, acc_exp = base, base_exp
            else:
                acc = _combine_sparse(acc, acc_exp, base, M.gamma, S)
                acc_exp += base_exp
        e >>= 1
        if e:
            base = _combine_sparse(base, base_exp, base, M.gamma, S)
            base_exp *= 2
    src = np.concatenate([np.full(cols.size, s, dtype=np.int64)
                          for s, (cols, _) in enumerate(acc)])
    dst = np.concatenate([cols for cols, _ in acc]).astype(np.int64)
    rewards = np.concatenate([vals for _, vals in acc])
    return DeterministicMdp(S, (src, dst, rewards), M.gamma ** rho, grid=M.grid,
                            _sorted_unique=True)


def neighborhood_degree(rho: int, d: int) -> int:
    """Number of integer points in the d-dimensional l1 ball of radius rho."""
    if rho < 0 or d < 0:
        raise ValueError("rho and d must be nonnegative")
    return sum(2 ** i * math.comb(d, i) * math.comb(rho, i)
               for i in range(min(d, rho) + 1))


# ---------------------------------------------------------------------------
# Text serialization: `states N gamma G` header, then `edge s t r` lines.

def mdp_to_text(M: DeterministicMdp) -> str:
    lines = [f"states {M.state_count} gamma {M.gamma!r}"]
    lines.extend(f"edge {s} {t} {float(r)!r}" for s, t, r in zip(M.src, M.dst, M.reward))
    return "\n".join(lines) + "\n"


def mdp_from_text(text: str) -> DeterministicMdp:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty MDP text")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "states" or head[2] != "gamma":
        raise ValueError(f"bad MDP header: {lines[0]!r}")
    state_count = int(head[1])
    gamma = float(head[3])
    src, dst, reward = [], [], []
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) != 4 or parts[0] != "edge":
            raise ValueError(f"bad MDP edge line: {ln!r}")
        src.append(int(parts[1]))
        dst.append(int(parts[2]))
        reward.append(float(parts[3]))
    return DeterministicMdp(
        state_count,
        (np.array(src, np.int64), np.array(dst, np.int64), np.array(reward, float)),
        gamma)


def save_mdp(M: DeterministicMdp, path) -> None:
    with open(path, "w") as fh:
        fh.write(mdp_to_text(M))


def load_mdp(path) -> DeterministicMdp:
    with open(path) as fh:
        return mdp_from_text(fh.read())
