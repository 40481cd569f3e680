"""Regular product grids on [0,1]^d used as state spaces.

States are raveled in C order: for shape (n0, n1) the state id of the
multi-index (i0, i1) is i0 * n1 + i1, and coordinate j of a node is
index_j / (shape_j - 1).
"""

from __future__ import annotations

import numpy as np

METRICS = ("l1", "linf")


class Grid:
    """A uniform grid with per-state coordinates and index arithmetic."""

    __slots__ = ("shape", "indices", "coords")

    def __init__(self, shape):
        shape = tuple(int(n) for n in shape)
        if not shape or any(n < 1 for n in shape):
            raise ValueError(f"grid shape must be positive, got {shape}")
        self.shape = shape
        idx = np.stack(
            [g.ravel() for g in np.meshgrid(*[np.arange(n) for n in shape], indexing="ij")],
            axis=1,
        )
        self.indices = idx
        denom = np.array([max(n - 1, 1) for n in shape], dtype=float)
        self.coords = idx / denom

    @property
    def dim(self) -> int:
        return len(self.shape)

    @property
    def state_count(self) -> int:
        return int(np.prod(self.shape))

    @property
    def steps(self) -> np.ndarray:
        """Grid spacing per dimension (1 for degenerate single-node axes)."""
        return 1.0 / np.array([max(n - 1, 1) for n in self.shape], dtype=float)

    def state_of(self, multi_index) -> int:
        return int(np.ravel_multi_index(tuple(multi_index), self.shape))

    def adjacent_pairs(self):
        """(src, dst) state ids of all axis-aligned neighbor pairs, each once."""
        srcs, dsts = [], []
        for axis, n in enumerate(self.shape):
            if n < 2:
                continue
            keep = self.indices[:, axis] < n - 1
            s = np.flatnonzero(keep)
            step = int(np.prod(self.shape[axis + 1:]))
            srcs.append(s)
            dsts.append(s + step)
        if not srcs:
            return np.empty(0, int), np.empty(0, int)
        return np.concatenate(srcs), np.concatenate(dsts)

    def distances(self, points, metric: str = "l1", dims=None) -> np.ndarray:
        """Distances from each row of ``points`` (coords) to every grid node.

        ``dims`` restricts the metric to a subset of coordinate axes.
        Returns an array of shape (len(points), state_count).
        """
        if metric not in METRICS:
            raise ValueError(f"metric must be one of {METRICS}, got {metric!r}")
        points = np.atleast_2d(np.asarray(points, dtype=float))
        if points.shape[1] != self.dim:
            raise ValueError(f"points have dim {points.shape[1]}, grid has {self.dim}")
        dims = tuple(range(self.dim)) if dims is None else tuple(dims)
        if not dims:
            raise ValueError("dims must be nonempty")
        gaps = np.abs(points[:, None, dims] - self.coords[None, :, dims])
        if metric == "l1":
            return gaps.sum(axis=2)
        return gaps.max(axis=2)
