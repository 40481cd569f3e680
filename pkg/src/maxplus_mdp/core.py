"""Max-plus scalars, value vectors, dictionaries and residuated projections.

The semiring is (R u {-inf}, max, +): -inf is the neutral element of max
and absorbing for +.  Vectors are plain float64 numpy arrays in which -inf
is a legal entry but +inf and NaN are rejected at every public boundary.
That discipline matters: adding finite floats to -inf is safe, but the
residuated operators below subtract, and -inf - (-inf) would be NaN.  All
subtractions therefore go through explicit masks that skip -inf entries
instead of relying on IEEE semantics.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

NEG_INF = float("-inf")


class CoverageError(ValueError):
    """A residuated min ran over an empty constraint set.

    Raised when an atom is -inf everywhere (its coefficient would be
    unbounded) or when some state is covered by no atom of a dictionary.
    """


def as_extended(values, length: int | None = None, name: str = "values") -> np.ndarray:
    """Validate and return a 1-D float64 array of extended reals.

    Entries may be -inf; +inf and NaN are rejected.
    """
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be 1-D, got shape {arr.shape}")
    if length is not None and arr.shape[0] != length:
        raise ValueError(f"{name} has length {arr.shape[0]}, expected {length}")
    if np.isnan(arr).any():
        raise ValueError(f"{name} contains NaN")
    if np.isposinf(arr).any():
        raise ValueError(f"{name} contains +inf")
    return arr


def discount_scale(gamma: float, values: np.ndarray) -> np.ndarray:
    """gamma * values with -inf kept absorbing (0 * -inf would be NaN)."""
    if gamma == 0.0:
        return np.where(np.isneginf(values), NEG_INF, 0.0)
    return gamma * values


def sup_distance(a: np.ndarray, b: np.ndarray) -> float:
    """sup-norm distance that treats two -inf entries as equal."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    both = np.isneginf(a) & np.isneginf(b)
    if both.all():
        return 0.0
    diff = np.abs(np.where(both, 0.0, a - b))
    return float(np.max(diff))


class Dictionary:
    """An ordered family of basis functions tabulated on states 0..S-1.

    ``table[k, s]`` is the value of atom ``k`` at state ``s`` (-inf allowed,
    e.g. for indicator atoms).  The optional ``atoms`` sequence keeps the
    symbolic descriptions used for serialization and greedy growth; the
    numeric operators below only ever touch ``table``.
    """

    __slots__ = ("table", "atoms")

    def __init__(self, table, atoms: Sequence | None = None):
        table = np.asarray(table, dtype=float)
        if table.ndim != 2:
            raise ValueError(f"dictionary table must be 2-D, got shape {table.shape}")
        if table.shape[0] == 0:
            raise ValueError("dictionary must contain at least one atom")
        if np.isnan(table).any():
            raise ValueError("dictionary table contains NaN")
        if np.isposinf(table).any():
            raise ValueError("dictionary table contains +inf")
        self.table = table
        self.atoms = list(atoms) if atoms is not None else None

    @classmethod
    def from_atoms(cls, atoms: Sequence, state_count: int, grid=None) -> "Dictionary":
        """Tabulate ``atoms`` (anything with .tabulate(state_count, grid))."""
        atoms = list(atoms)
        if not atoms:
            raise ValueError("dictionary must contain at least one atom")
        table = np.stack([a.tabulate(state_count, grid) for a in atoms])
        return cls(table, atoms)

    @property
    def size(self) -> int:
        return self.table.shape[0]

    @property
    def state_count(self) -> int:
        return self.table.shape[1]

    def __len__(self) -> int:
        return self.size

    def __repr__(self) -> str:
        return f"Dictionary(size={self.size}, state_count={self.state_count})"


def eval_dictionary(W: Dictionary, alpha) -> np.ndarray:
    """Max-plus combination:  s -> max_k alpha[k] + W.table[k, s].

    Entries of the result may be -inf when every term is -inf.
    """
    alpha = as_extended(alpha, W.size, "alpha")
    return np.max(alpha[:, None] + W.table, axis=0)


def residuate(W: Dictionary, V) -> np.ndarray:
    """Largest alpha with eval_dictionary(W, alpha) <= V pointwise.

    ``alpha[k] = min over states s with W.table[k, s] > -inf of V[s] - W.table[k, s]``.
    States where the atom is -inf impose no constraint and are skipped.

    Raises CoverageError if some atom is -inf everywhere (its coefficient
    would be unbounded above).
    """
    V = as_extended(V, W.state_count, "V")
    finite = W.table != NEG_INF
    if not finite.any(axis=1).all():
        bad = int(np.flatnonzero(~finite.any(axis=1))[0])
        raise CoverageError(f"atom {bad} is -inf at every state; residuation unbounded")
    diff = V[None, :] - np.where(finite, W.table, 0.0)
    diff = np.where(finite, diff, np.inf)
    return np.min(diff, axis=1)


def transpose_apply(Z: Dictionary, V) -> np.ndarray:
    """Max-plus pairing against every atom:  z -> max_s V[s] + Z.table[z, s]."""
    V = as_extended(V, Z.state_count, "V")
    return np.max(V[None, :] + Z.table, axis=1)


def transpose_residuate(Z: Dictionary, beta) -> np.ndarray:
    """s -> min over atoms z with Z.table[z, s] > -inf of beta[z] - Z.table[z, s].

    Raises CoverageError if some state is covered by no atom.
    """
    beta = as_extended(beta, Z.size, "beta")
    finite = Z.table != NEG_INF
    if not finite.any(axis=0).all():
        bad = int(np.flatnonzero(~finite.any(axis=0))[0])
        raise CoverageError(f"state {bad} is covered by no atom")
    diff = beta[:, None] - np.where(finite, Z.table, 0.0)
    diff = np.where(finite, diff, np.inf)
    return np.min(diff, axis=0)


def project_lower(W: Dictionary, V) -> np.ndarray:
    """Best under-approximation of V in the max-plus span of W (<= V)."""
    return eval_dictionary(W, residuate(W, V))


def project_upper(Z: Dictionary, V) -> np.ndarray:
    """Best over-approximation of V induced by pairing against Z (>= V)."""
    return transpose_residuate(Z, transpose_apply(Z, V))


def maxplus_dot(z, V) -> float:
    """<z | V> = max_s z[s] + V[s] over tabulated atom values z."""
    z = np.asarray(z, dtype=float)
    V = np.asarray(V, dtype=float)
    return float(np.max(z + V))
