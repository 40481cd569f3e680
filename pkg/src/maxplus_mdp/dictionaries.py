"""Atom families, partition machinery and covering constructions.

Four atom kinds are supported: indicators of state cells (piecewise
constant approximation), scaled negative distances to a center point
(piecewise affine), concave perturbations of affine functions built from a
quadratic reference (convex-envelope approximation), and raw tabulations.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from .core import NEG_INF, Dictionary, as_extended
from .grids import METRICS, Grid
from .mdp import DeterministicMdp


# ---------------------------------------------------------------------------
# Atoms

@dataclass(frozen=True)
class IndicatorAtom:
    """0 on a nonempty cell of states, -inf elsewhere."""
    states: tuple

    def __post_init__(self):
        if len(self.states) == 0:
            raise ValueError("indicator cell must be nonempty")
        object.__setattr__(self, "states", tuple(int(s) for s in self.states))

    def tabulate(self, state_count: int, grid: Grid | None = None) -> np.ndarray:
        values = np.full(state_count, NEG_INF)
        values[list(self.states)] = 0.0
        return values

    def describe(self) -> str:
        return f"indicator(cell_size={len(self.states)})"


@dataclass(frozen=True)
class DistanceAtom:
    """-scale * d(x, center) over the selected coordinate axes."""
    center: tuple
    scale: float
    dims: tuple = None
    metric: str = "l1"

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("distance atom scale must be positive")
        if self.metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))
        if self.dims is not None:
            dims = tuple(int(i) for i in self.dims)
            if not dims:
                raise ValueError("dims must be nonempty")
            object.__setattr__(self, "dims", dims)

    def tabulate(self, state_count: int, grid: Grid) -> np.ndarray:
        if grid is None:
            raise ValueError("distance atoms require a grid")
        d = grid.distances([self.center], metric=self.metric, dims=self.dims)[0]
        return -self.scale * d

    def describe(self) -> str:
        c = ",".join(f"{x:.4g}" for x in self.center)
        return f"distance(center=[{c}] scale={self.scale:.4g} metric={self.metric})"


@dataclass(frozen=True)
class BregmanAffineAtom:
    """slope . x - h(x) with the quadratic reference h(x) = (curvature/2)|x|^2."""
    slope: tuple
    curvature: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "slope", tuple(float(w) for w in self.slope))

    def tabulate(self, state_count: int, grid: Grid) -> np.ndarray:
        if grid is None:
            raise ValueError("Bregman atoms require a grid")
        x = grid.coords
        h = 0.5 * self.curvature * np.sum(x * x, axis=1)
        return x @ np.asarray(self.slope) - h

    def describe(self) -> str:
        s = ",".join(f"{w:.4g}" for w in self.slope)
        return f"bregman(slope=[{s}] curvature={self.curvature:.4g})"


@dataclass(frozen=True)
class TabulatedAtom:
    """An explicit table of extended-real values, one per state."""
    values: tuple

    def __post_init__(self):
        arr = as_extended(np.asarray(self.values, float), name="atom values")
        object.__setattr__(self, "values", tuple(arr.tolist()))

    def tabulate(self, state_count: int, grid: Grid | None = None) -> np.ndarray:
        values = np.asarray(self.values, float)
        if values.size != state_count:
            raise ValueError("tabulated atom has wrong length")
        return values

    def describe(self) -> str:
        return f"tabulated(len={len(self.values)})"


def evaluate_atom(atom, s: int, grid: Grid | None = None) -> float:
    """Value of one atom at one state id."""
    if isinstance(atom, IndicatorAtom):
        return 0.0 if s in atom.states else NEG_INF
    if isinstance(atom, DistanceAtom):
        x = grid.coords[s]
        dims = atom.dims if atom.dims is not None else range(grid.dim)
        gaps = [abs(x[i] - atom.center[i]) for i in dims]
        d = sum(gaps) if atom.metric == "l1" else max(gaps)
        return -atom.scale * d
    if isinstance(atom, BregmanAffineAtom):
        x = grid.coords[s]
        return float(np.dot(atom.slope, x) - 0.5 * atom.curvature * np.dot(x, x))
    if isinstance(atom, TabulatedAtom):
        return atom.values[s]
    raise TypeError(f"unknown atom type {type(atom).__name__}")


# ---------------------------------------------------------------------------
# Partitions

class Partition:
    """A partition of states into cells, optionally with box descriptions.

    ``boxes[c]`` is a (d, 2) array of inclusive per-dimension index ranges
    when the partition is made of grid-aligned boxes; it is what the greedy
    split machinery refines dimension by dimension.
    """

    __slots__ = ("cell_of", "cells", "boxes")

    def __init__(self, cell_of, boxes=None):
        cell_of = np.asarray(cell_of, dtype=np.int64)
        if cell_of.ndim != 1:
            raise ValueError("cell_of must be 1-D")
        n = cell_of.max() + 1 if cell_of.size else 0
        if cell_of.min() < 0:
            raise ValueError("negative cell id")
        counts = np.bincount(cell_of, minlength=n)
        if (counts == 0).any():
            raise ValueError("partition has an empty cell id")
        order = np.argsort(cell_of, kind="stable")
        bounds = np.concatenate(([0], np.cumsum(counts)))
        self.cell_of = cell_of
        self.cells = [order[bounds[c]:bounds[c + 1]] for c in range(n)]
        self.boxes = None if boxes is None else [np.asarray(b, np.int64) for b in boxes]
        if self.boxes is not None and len(self.boxes) != n:
            raise ValueError("boxes length must match number of cells")

    @property
    def n_cells(self) -> int:
        return len(self.cells)

    @property
    def state_count(self) -> int:
        return self.cell_of.size


def make_partition_dictionary(P: Partition) -> Dictionary:
    """One indicator atom per cell; the span is the piecewise-constant functions."""
    atoms = [IndicatorAtom(tuple(cell.tolist())) for cell in P.cells]
    return Dictionary.from_atoms(atoms, P.state_count)


def uniform_box_partition(grid: Grid, cells_per_dim) -> Partition:
    """Split each axis into equal-count index chunks; cells are the product boxes."""
    cells_per_dim = tuple(int(k) for k in cells_per_dim)
    if len(cells_per_dim) != grid.dim:
        raise ValueError("cells_per_dim must match grid dimension")
    edges = []
    for n, k in zip(grid.shape, cells_per_dim):
        if not 1 <= k <= n:
            raise ValueError(f"cannot cut an axis of {n} nodes into {k} chunks")
        cuts = np.linspace(0, n, k + 1).astype(np.int64)
        edges.append(cuts)
    boxes = []
    for combo in itertools.product(*[range(k) for k in cells_per_dim]):
        box = np.array([[edges[d][i], edges[d][i + 1] - 1] for d, i in enumerate(combo)])
        boxes.append(box)
    cell_of = np.zeros(grid.state_count, dtype=np.int64)
    for cid, box in enumerate(boxes):
        inside = np.ones(grid.state_count, bool)
        for d in range(grid.dim):
            inside &= (grid.indices[:, d] >= box[d, 0]) & (grid.indices[:, d] <= box[d, 1])
        cell_of[inside] = cid
    return Partition(cell_of, boxes)


def single_cell_partition(grid: Grid) -> Partition:
    return uniform_box_partition(grid, (1,) * grid.dim)


def split_box_cell(P: Partition, cell_id: int, dim: int, grid: Grid):
    """Split one box cell at the index midpoint of one dimension.

    Returns (new_partition, mid_index); the low half keeps ``cell_id`` and
    the high half becomes the new last cell.
    """
    if P.boxes is None:
        raise ValueError("partition has no box description")
    box = P.boxes[cell_id]
    lo, hi = int(box[dim, 0]), int(box[dim, 1])
    if hi <= lo:
        raise ValueError(f"cell {cell_id} has single-node extent along dim {dim}")
    mid = (lo + hi) // 2
    cell_of = P.cell_of.copy()
    states = P.cells[cell_id]
    high = states[grid.indices[states, dim] > mid]
    cell_of[high] = P.n_cells
    boxes = [b.copy() for b in P.boxes]
    boxes[cell_id][dim, 1] = mid
    new_box = box.copy()
    new_box[dim, 0] = mid + 1
    boxes.append(new_box)
    return Partition(cell_of, boxes), mid


# ---------------------------------------------------------------------------
# Covers

@dataclass(frozen=True)
class CoverResult:
    centers: np.ndarray
    radius: float


def k_center_cover(grid: Grid, n: int, metric: str = "l1", states=None) -> CoverResult:
    """Greedy farthest-point centers (the classical 2-approximation).

    Deterministic: the first center is the first listed state and ties are
    broken by first index.  ``radius`` is the realized covering radius.
    """
    states = np.arange(grid.state_count) if states is None else np.asarray(states, np.int64)
    if not 1 <= n <= states.size:
        raise ValueError(f"need 1 <= n <= {states.size}, got {n}")
    coords = grid.coords[states]
    centers = [0]
    dist = grid.distances([coords[0]], metric=metric)[0, states]
    for _ in range(1, n):
        nxt = int(np.argmax(dist))
        centers.append(nxt)
        dist = np.minimum(dist, grid.distances([coords[nxt]], metric=metric)[0, states])
    return CoverResult(centers=states[np.array(centers)], radius=float(dist.max()))


def voronoi_partition(cover: CoverResult, grid: Grid, metric: str = "l1") -> Partition:
    """Assign each state to its nearest center, first index winning ties."""
    d = grid.distances(grid.coords[cover.centers], metric=metric)
    return Partition(np.argmin(d, axis=0))


def make_distance_dictionary(centers, scale: float, grid: Grid, dims=None,
                             metric: str = "l1") -> Dictionary:
    """One scaled negative-distance atom per center (state ids or coord rows)."""
    centers = np.asarray(centers)
    if centers.ndim == 1 and np.issubdtype(centers.dtype, np.integer):
        centers = grid.coords[centers]
    atoms = [DistanceAtom(tuple(c), scale, None if dims is None else tuple(dims), metric)
             for c in np.atleast_2d(centers)]
    return Dictionary.from_atoms(atoms, grid.state_count, grid)


def make_bregman_dictionary(slopes, grid: Grid, curvature: float = 1.0) -> Dictionary:
    """One affine-minus-quadratic atom per slope row."""
    slopes = np.atleast_2d(np.asarray(slopes, float))
    atoms = [BregmanAffineAtom(tuple(w), curvature) for w in slopes]
    return Dictionary.from_atoms(atoms, grid.state_count, grid)


# ---------------------------------------------------------------------------
# Partition-induced cluster MDP and regularity estimates

def reduced_mdp_from_partition(M: DeterministicMdp, P: Partition) -> DeterministicMdp:
    """Cluster-level MDP: R(c, c') is the best edge reward between the cells."""
    if P.state_count != M.state_count:
        raise ValueError("partition does not match MDP state count")
    n = P.n_cells
    R = np.full((n, n), NEG_INF)
    np.maximum.at(R, (P.cell_of[M.src], P.cell_of[M.dst]), M.reward)
    src, dst = np.nonzero(R != NEG_INF)
    return DeterministicMdp(n, (src, dst, R[src, dst]), M.gamma, _sorted_unique=True)


def lipschitz_estimate(V, grid: Grid, metric: str = "l1", p: float = 1.0) -> float:
    """Hoelder-constant estimate from grid-adjacent pairs.

    Exact for the l1 metric on grid-connected sets (differences telescope
    along axis paths); a lower bound for linf in dimension > 1.
    """
    V = as_extended(V, grid.state_count, "V")
    src, dst = grid.adjacent_pairs()
    if src.size == 0:
        return 0.0
    gaps = np.abs(grid.coords[src] - grid.coords[dst])
    d = gaps.sum(axis=1) if metric == "l1" else gaps.max(axis=1)
    return float(np.max(np.abs(V[src] - V[dst]) / d ** p))


# ---------------------------------------------------------------------------
# JSON serialization (dictionaries and partitions)

def atom_to_json(atom) -> dict:
    if isinstance(atom, IndicatorAtom):
        return {"kind": "indicator", "states": list(atom.states)}
    if isinstance(atom, DistanceAtom):
        return {"kind": "distance", "center": list(atom.center), "scale": atom.scale,
                "dims": None if atom.dims is None else list(atom.dims),
                "metric": atom.metric}
    if isinstance(atom, BregmanAffineAtom):
        return {"kind": "bregman", "slope": list(atom.slope), "curvature": atom.curvature}
    if isinstance(atom, TabulatedAtom):
        return {"kind": "tabulated", "values": list(atom.values)}
    raise TypeError(f"unknown atom type {type(atom).__name__}")


def atom_from_json(obj: dict):
    kind = obj["kind"]
    if kind == "indicator":
        return IndicatorAtom(tuple(obj["states"]))
    if kind == "distance":
        dims = obj.get("dims")
        return DistanceAtom(tuple(obj["center"]), obj["scale"],
                            None if dims is None else tuple(dims), obj["metric"])
    if kind == "bregman":
        return BregmanAffineAtom(tuple(obj["slope"]), obj["curvature"])
    if kind == "tabulated":
        return TabulatedAtom(tuple(obj["values"]))
    raise ValueError(f"unknown atom kind {kind!r}")


def dictionary_to_json(W: Dictionary) -> dict:
    if W.atoms is None:
        raise ValueError("dictionary has no symbolic atoms to serialize")
    return {"state_count": W.state_count, "atoms": [atom_to_json(a) for a in W.atoms]}


def dictionary_from_json(obj: dict, grid: Grid | None = None) -> Dictionary:
    atoms = [atom_from_json(a) for a in obj["atoms"]]
    return Dictionary.from_atoms(atoms, int(obj["state_count"]), grid)


def partition_to_json(P: Partition) -> dict:
    out = {"cell_of": P.cell_of.tolist()}
    if P.boxes is not None:
        out["boxes"] = [b.tolist() for b in P.boxes]
    return out


def partition_from_json(obj: dict) -> Partition:
    boxes = obj.get("boxes")
    return Partition(np.asarray(obj["cell_of"], np.int64), boxes)
