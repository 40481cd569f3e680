"""Reduced value iteration driven by precompiled bilinear forms.

Compilation tabulates, once, the pairings <z|w> = max_s z(s) + w(s) and
<z|T^rho w> over two dictionaries; every subsequent iteration is a
max/min sweep over those two small matrices, with cost |W| * |Z| and no
dependence on the state count or on the discount.
"""

from __future__ import annotations

import hashlib
import json
import os
from dataclasses import dataclass

import numpy as np

from .core import (NEG_INF, CoverageError, Dictionary, as_extended, discount_scale,
                   eval_dictionary, residuate, sup_distance)
from .dictionaries import Partition, reduced_mdp_from_partition
from .mdp import (DENSE_POWER_THRESHOLD, ConvergenceError, DeterministicMdp,
                  bellman_apply, compile_power, maxplus_matmul, value_iteration)


def dictionary_key(D: Dictionary) -> str:
    h = hashlib.sha256()
    h.update(np.int64(D.size).tobytes())
    h.update(np.ascontiguousarray(D.table).tobytes())
    return h.hexdigest()


@dataclass
class CompiledForms:
    """The |Z| x |W| pairing matrices that power the reduced iteration."""
    zw: np.ndarray          # zw[z, w] = <z | w>
    ztw: np.ndarray         # ztw[z, w] = <z | T^rho w>
    rho: int
    gamma_eff: float        # gamma ** rho
    w_dict: Dictionary
    z_dict: Dictionary
    mdp_key: str = ""
    w_key: str = ""
    z_key: str = ""

    @property
    def cache_key(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.mdp_key}|{self.w_key}|{self.z_key}|{self.rho}".encode())
        return h.hexdigest()


@dataclass
class ReducedState:
    alpha: np.ndarray
    beta: np.ndarray
    iteration: int
    residual: float


def compile_forms(M: DeterministicMdp, W: Dictionary, Z: Dictionary, rho: int = 1,
                  mdp_power: DeterministicMdp | None = None,
                  dense_threshold: int = DENSE_POWER_THRESHOLD,
                  cache_dir=None) -> CompiledForms:
    """Precompute <z|w> and <z|T^rho w> for all atom pairs.

    Each w column is one Bellman sweep of the rho-step compiled MDP applied
    to the atom's tabulation (-inf entries stay absorbing), followed by a
    max-plus pairing against the z table.  ``mdp_power`` lets callers reuse
    an already-compiled operator power.
    """
    if W.state_count != M.state_count or Z.state_count != M.state_count:
        raise ValueError("dictionary state count does not match the MDP")
    keys = dict(mdp_key=M.key(), w_key=dictionary_key(W), z_key=dictionary_key(Z))
    if cache_dir is not None:
        cached = load_forms(cache_dir, keys["mdp_key"], keys["w_key"], keys["z_key"],
                            rho, W, Z)
        if cached is not None:
            return cached
    for label, D in (("W", W), ("Z", Z)):
        dead = np.flatnonzero(np.isneginf(D.table).all(axis=1))
        if dead.size:
            raise CoverageError(f"{label} atom {int(dead[0])} is -inf at every state")
    if mdp_power is None:
        mdp_power = compile_power(M, rho, dense_threshold)
    tw = np.stack([bellman_apply(mdp_power, w) for w in W.table])
    zw = maxplus_matmul(Z.table, W.table.T)
    ztw = maxplus_matmul(Z.table, tw.T)
    if np.isneginf(zw).all(axis=0).any():
        # a W atom whose support meets no Z support: its residuated
        # coefficient would be unbounded above
        raise CoverageError("an atom of W pairs against no atom of Z")
    forms = CompiledForms(zw=zw, ztw=ztw, rho=rho, gamma_eff=M.gamma ** rho,
                          w_dict=W, z_dict=Z, **keys)
    if cache_dir is not None:
        save_forms(forms, cache_dir)
    return forms


def reduced_step(F: CompiledForms, alpha) -> tuple[np.ndarray, np.ndarray]:
    """One reduced iteration.

    beta'[z] = max_w gamma_eff * alpha[w] + <z|T^rho w>
    alpha'[w] = min_z beta'[z] - <z|w>          (entries with <z|w> = -inf skipped)
    """
    alpha = as_extended(alpha, F.w_dict.size, "alpha")
    beta = np.max(discount_scale(F.gamma_eff, alpha)[None, :] + F.ztw, axis=1)
    finite = F.zw != NEG_INF
    diff = beta[:, None] - np.where(finite, F.zw, 0.0)
    diff = np.where(finite, diff, np.inf)
    return beta, np.min(diff, axis=0)


def initial_coefficients(F: CompiledForms) -> np.ndarray:
    """Default start: residuation of the zero function onto W."""
    return residuate(F.w_dict, np.zeros(F.w_dict.state_count))


def run_reduced_vi(F: CompiledForms, alpha0=None, tol: float = 1e-8,
                   max_iter: int = 1_000_000, record_residuals: bool = False):
    """Iterate the reduced step to its fixed point.

    Stops when ||alpha_{t+1} - alpha_t||_inf <= tol * (1 - gamma_eff), which
    certifies that the returned value function is within tol of the
    iteration's unique fixed point.  Returns (ReducedState, V).
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iter < 1:
        raise ValueError("max_iter must be at least 1")
    alpha = initial_coefficients(F) if alpha0 is None else \
        as_extended(alpha0, F.w_dict.size, "alpha0").copy()
    threshold = tol * (1.0 - F.gamma_eff)
    history = []
    beta = np.full(F.z_dict.size, NEG_INF)
    for t in range(1, max_iter + 1):
        beta, nxt = reduced_step(F, alpha)
        res = sup_distance(nxt, alpha)
        if record_residuals:
            history.append(res)
        alpha = nxt
        if res <= threshold:
            state = ReducedState(alpha=alpha, beta=beta, iteration=t, residual=res)
            V = eval_dictionary(F.w_dict, alpha)
            return (state, V, history) if record_residuals else (state, V)
    raise ConvergenceError(
        f"reduced iteration did not converge in {max_iter} steps (residual {res:.3e})",
        value=alpha, iterations=max_iter, residual=res)


def partition_reduced_vi(M: DeterministicMdp, P: Partition, rho: int = 1,
                         tol: float = 1e-8, mdp_power: DeterministicMdp | None = None,
                         dense_threshold: int = DENSE_POWER_THRESHOLD) -> np.ndarray:
    """Partition fast path: value iteration on the cluster MDP, broadcast back.

    Equals run_reduced_vi with W = Z = the partition's indicator dictionary,
    at a per-iteration cost of the cluster edge count.
    """
    if mdp_power is None:
        mdp_power = compile_power(M, rho, dense_threshold)
    cluster = reduced_mdp_from_partition(mdp_power, P)
    alpha, _, _ = value_iteration(cluster, np.zeros(cluster.state_count),
                                  tol=tol * (1.0 - mdp_power.gamma))
    return alpha[P.cell_of]


def fixed_point_error_bound(eta: float, gamma_eff: float) -> float:
    """Distance bound 2 * eta / (1 - gamma_eff) from projection quality eta."""
    return 2.0 * eta / (1.0 - gamma_eff)


def fixed_point_error_bound_power(eta: float, gamma: float, rho: int) -> float:
    """The rho-step relaxation 2 * eta * (1 + tau / rho), tau = 1/(1-gamma)."""
    tau = 1.0 / (1.0 - gamma)
    return 2.0 * eta * (1.0 + tau / rho)


# ---------------------------------------------------------------------------
# Compiled-form cache (npz matrices plus a JSON stamp)

def _cache_paths(cache_dir, key):
    return (os.path.join(cache_dir, f"forms-{key}.npz"),
            os.path.join(cache_dir, f"forms-{key}.json"))


def save_forms(F: CompiledForms, cache_dir) -> str:
    os.makedirs(cache_dir, exist_ok=True)
    npz_path, meta_path = _cache_paths(cache_dir, F.cache_key)
    np.savez_compressed(npz_path, zw=F.zw, ztw=F.ztw)
    with open(meta_path, "w") as fh:
        json.dump({"mdp_key": F.mdp_key, "w_key": F.w_key, "z_key": F.z_key,
                   "rho": F.rho, "gamma_eff": F.gamma_eff}, fh)
    return npz_path


def load_forms(cache_dir, mdp_key, w_key, z_key, rho,
               W: Dictionary, Z: Dictionary) -> CompiledForms | None:
    probe = CompiledForms(zw=None, ztw=None, rho=rho, gamma_eff=0.0, w_dict=W,
                          z_dict=Z, mdp_key=mdp_key, w_key=w_key, z_key=z_key)
    npz_path, meta_path = _cache_paths(cache_dir, probe.cache_key)
    if not (os.path.exists(npz_path) and os.path.exists(meta_path)):
        return None
    with open(meta_path) as fh:
        meta = json.load(fh)
    data = np.load(npz_path)
    return CompiledForms(zw=data["zw"], ztw=data["ztw"], rho=rho,
                         gamma_eff=float(meta["gamma_eff"]), w_dict=W, z_dict=Z,
                         mdp_key=mdp_key, w_key=w_key, z_key=z_key)
