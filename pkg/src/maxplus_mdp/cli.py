"""Command-line entry point for benchmarks, solvers and pursuit experiments.

Subcommands
-----------
solve      exact value iteration with a residual certificate
benchmark  ``benchmark build`` writes the MDP text format and a vstar.csv sidecar
approx     reduced value iteration on a fixed dictionary
greedy     matching-pursuit dictionary growth, trace CSV + resume file
sweep      method x rho x n grid of experiments, one CSV row per cell

All commands write a meta.json capturing the full configuration.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .benchmarks import VALUE_SPECS, build_benchmark, error_metrics
from .dictionaries import (lipschitz_estimate, make_distance_dictionary,
                           make_bregman_dictionary, make_partition_dictionary,
                           dictionary_to_json, partition_to_json, single_cell_partition,
                           uniform_box_partition)
from .grids import Grid
from .mdp import load_mdp, save_mdp, value_iteration
from .pursuit import (AtomGreedyState, PartitionGreedyState, greedy_step,
                      write_trace)
from .reduced import compile_forms, partition_reduced_vi, run_reduced_vi

SWEEP_HEADER = ["method", "rho", "n", "err_l1", "err_linf", "wall_ms", "compile_ms"]
SWEEP_METHODS = ["fixed-constant", "fixed-affine", "greedy-constant", "greedy-affine"]


def _positive_float(text):
    value = float(text)
    if value <= 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="maxplus-mdp",
        description="max-plus value-function approximation for deterministic MDPs")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_problem=True):
        if needs_problem:
            p.add_argument("--problem", help=f"builtin benchmark id {sorted(VALUE_SPECS)}"
                                             " (or use --mdp-file)")
            p.add_argument("--mdp-file", help="MDP in the text format")
            p.add_argument("--nodes", type=int, help="benchmark grid nodes (per dim in 2D)")
            p.add_argument("--eta", type=float, help="continuous-time discount base")
        p.add_argument("--tol", type=_positive_float, default=1e-8)
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--cache-dir", default=None)
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--threads", type=int, default=1)

    p = sub.add_parser("solve", help="value iteration with certificate")
    common(p)
    p.add_argument("--rho", type=int, default=1)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("benchmark", help="benchmark utilities")
    bsub = p.add_subparsers(dest="action", required=True)
    pb = bsub.add_parser("build", help="write mdp.txt + vstar.csv")
    common(pb)
    pb.set_defaults(func=cmd_benchmark_build)

    p = sub.add_parser("approx", help="reduced value iteration on a fixed dictionary")
    common(p)
    p.add_argument("--atoms", choices=["constant", "affine", "bregman"], default="constant")
    p.add_argument("--n", type=int, nargs="+", required=True, help="dictionary sizes")
    p.add_argument("--rho", type=int, nargs="+", default=[1])
    p.add_argument("--scale", type=float, help="distance-atom scale (default: Lip of vstar)")
    p.add_argument("--curvature", type=float, default=1.0)
    p.add_argument("--norm", choices=["l1", "linf"], default="l1")
    p.add_argument("--project-vstar", action="store_true",
                   help="also write the plain lower projection of vstar onto each "
                        "dictionary (reference-function overlays)")
    p.set_defaults(func=cmd_approx)

    p = sub.add_parser("greedy", help="matching-pursuit dictionary growth")
    common(p)
    p.add_argument("--atoms", choices=["constant", "affine"], default="constant")
    p.add_argument("--n", type=int, nargs="+", required=True,
                   help="atom budget (max is used)")
    p.add_argument("--rho", type=int, default=1)
    p.add_argument("--norm", choices=["l1", "linf"], default="l1")
    p.set_defaults(func=cmd_greedy)

    p = sub.add_parser("sweep", help="methods x rho x n experiment grid")
    common(p)
    p.add_argument("--methods", nargs="+", choices=SWEEP_METHODS, default=SWEEP_METHODS)
    p.add_argument("--rho", type=int, nargs="+", required=True)
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--norm", choices=["l1", "linf"], default="l1")
    p.add_argument("--scale", type=float, help="distance-atom scale override")
    p.set_defaults(func=cmd_sweep)
    return parser


# ---------------------------------------------------------------------------
# Shared helpers

def _load_problem(args):
    """Returns (mdp, grid, v_star_or_None, source_description)."""
    if getattr(args, "mdp_file", None):
        if not os.path.exists(args.mdp_file):
            raise FileNotFoundError(f"MDP file not found: {args.mdp_file}")
        M = load_mdp(args.mdp_file)
        return M, M.grid, None, {"mdp_file": args.mdp_file}
    if not getattr(args, "problem", None):
        raise ValueError("either --problem or --mdp-file is required")
    bench = build_benchmark(args.problem, args.nodes, args.eta)
    src = {"problem": args.problem, "nodes": args.nodes, "eta": bench.eta,
           "gamma": bench.gamma, "horizon": bench.horizon, "delta": bench.delta}
    return bench.mdp, bench.grid, bench.v_star, src


def _write_meta(outdir, command, args, extra=None):
    config = {k: v for k, v in vars(args).items() if k != "func" and not callable(v)}
    meta = {"command": command, "version": __version__, "config": config}
    if extra:
        meta.update(extra)
    with open(os.path.join(outdir, "meta.json"), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=str)


def _write_values_csv(path, grid: Grid | None, values, state_count):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        dim = grid.dim if grid is not None else 0
        writer.writerow(["state"] + [f"x{i}" for i in range(dim)] + ["value"])
        for s in range(state_count):
            coords = list(grid.coords[s]) if grid is not None else []
            writer.writerow([s] + [repr(float(c)) for c in coords]
                            + [repr(float(values[s]))])


def _fixed_partition(grid: Grid, n: int):
    """Uniform box partition with n cells (near-square factorization in 2D)."""
    if grid.dim == 1:
        return uniform_box_partition(grid, (n,))
    if grid.dim == 2:
        a = int(np.floor(np.sqrt(n)))
        while n % a:
            a -= 1
        return uniform_box_partition(grid, (a, n // a))
    raise ValueError("fixed partitions implemented for 1 and 2 dimensions")


def _fixed_centers(grid: Grid, n: int) -> np.ndarray:
    """n evenly spread grid states (product placement in 2D)."""
    if grid.dim == 1:
        ids = np.unique(np.round(np.linspace(0, grid.state_count - 1, n)).astype(int))
        return ids
    a = int(np.floor(np.sqrt(n)))
    while n % a:
        a -= 1
    b = n // a
    rows = np.round(np.linspace(0, grid.shape[0] - 1, a)).astype(int)
    cols = np.round(np.linspace(0, grid.shape[1] - 1, b)).astype(int)
    return np.array([grid.state_of((r, c)) for r in rows for c in cols])


def _affine_scale(args, v_star, grid):
    if getattr(args, "scale", None):
        return args.scale
    if v_star is None:
        raise ValueError("--scale is required for affine atoms without a builtin vstar")
    return lipschitz_estimate(v_star, grid)


# ---------------------------------------------------------------------------
# Commands

def cmd_solve(args) -> int:
    M, grid, v_star, src = _load_problem(args)
    os.makedirs(args.out, exist_ok=True)
    from .mdp import compile_power
    target = compile_power(M, args.rho) if args.rho > 1 else M
    V, iters, residual = value_iteration(target, tol=args.tol)
    certificate = residual / (1.0 - target.gamma)
    _write_values_csv(os.path.join(args.out, "values.csv"), grid, V, M.state_count)
    extra = {"iterations": iters, "residual": residual,
             "error_bound": certificate, "gamma": target.gamma}
    if v_star is not None:
        l1, linf = error_metrics(V, v_star)
        extra.update({"vstar_gap_l1": l1, "vstar_gap_linf": linf})
    _write_meta(args.out, "solve", args, {"source": src, "result": extra})
    print(f"solved: iterations={iters} residual={residual:.3e} "
          f"certified_error<={certificate:.3e}")
    return 0


def cmd_benchmark_build(args) -> int:
    if not args.problem:
        raise ValueError("benchmark build requires --problem")
    bench = build_benchmark(args.problem, args.nodes, args.eta)
    os.makedirs(args.out, exist_ok=True)
    save_mdp(bench.mdp, os.path.join(args.out, "mdp.txt"))
    _write_values_csv(os.path.join(args.out, "vstar.csv"), bench.grid, bench.v_star,
                      bench.mdp.state_count)
    _write_meta(args.out, "benchmark build", args,
                {"gamma": bench.gamma, "horizon": bench.horizon, "delta": bench.delta})
    print(f"benchmark {args.problem}: states={bench.mdp.state_count} "
          f"gamma={bench.gamma:.4f} tau={bench.horizon:.1f}")
    return 0


def _fixed_dictionary(kind, grid, n, v_star, args):
    if kind == "constant":
        return _fixed_partition(grid, n)
    if kind == "affine":
        scale = _affine_scale(args, v_star, grid)
        return make_distance_dictionary(_fixed_centers(grid, n), scale, grid)
    if kind == "bregman":
        if grid.dim != 1:
            raise ValueError("bregman dictionaries are built for 1-D grids")
        if v_star is None:
            raise ValueError("bregman atoms need a builtin vstar to pick slopes")
        f = v_star + 0.5 * args.curvature * grid.coords[:, 0] ** 2
        g = np.diff(f) / np.diff(grid.coords[:, 0])
        slopes = np.unique(np.round(np.linspace(0, g.size - 1, n)).astype(int))
        return make_bregman_dictionary(g[slopes][:, None], grid, args.curvature)
    raise ValueError(f"unknown atoms kind {kind!r}")


def cmd_approx(args) -> int:
    M, grid, v_star, src = _load_problem(args)
    if grid is None:
        raise ValueError("approx requires grid metadata (builtin benchmarks have it)")
    os.makedirs(args.out, exist_ok=True)
    results = []
    for rho in args.rho:
        for n in args.n:
            d = _fixed_dictionary(args.atoms, grid, n, v_star, args)
            t0 = time.perf_counter()
            if args.atoms == "constant":
                V = partition_reduced_vi(M, d, rho=rho, tol=args.tol)
            else:
                forms = compile_forms(M, d, d, rho=rho, cache_dir=args.cache_dir)
                _, V = run_reduced_vi(forms, tol=args.tol)
            wall = 1e3 * (time.perf_counter() - t0)
            row = {"rho": rho, "n": n, "wall_ms": wall}
            if v_star is not None:
                row["err_l1"], row["err_linf"] = error_metrics(V, v_star)
            results.append(row)
            _write_values_csv(os.path.join(args.out, f"approx-rho{rho}-n{n}.csv"),
                              grid, V, M.state_count)
    if args.project_vstar:
        if v_star is None:
            raise ValueError("--project-vstar needs a builtin benchmark")
        from .core import project_lower
        for n in args.n:
            d = _fixed_dictionary(args.atoms, grid, n, v_star, args)
            W = make_partition_dictionary(d) if args.atoms == "constant" else d
            proj = project_lower(W, v_star)
            _write_values_csv(os.path.join(args.out, f"projection-n{n}.csv"),
                              grid, proj, M.state_count)
    _write_meta(args.out, "approx", args, {"source": src, "results": results})
    print(f"approx: wrote {len(results)} value files to {args.out}")
    return 0


def cmd_greedy(args) -> int:
    M, grid, v_star, src = _load_problem(args)
    if grid is None:
        raise ValueError("greedy requires grid metadata (builtin benchmarks have it)")
    os.makedirs(args.out, exist_ok=True)
    n_max = max(args.n)
    if args.atoms == "constant":
        state = PartitionGreedyState(M, single_cell_partition(grid), rho=args.rho,
                                     tol=args.tol, norm=args.norm, grid=grid,
                                     v_star=v_star)
    else:
        scale = 1.0 if v_star is None else max(lipschitz_estimate(v_star, grid), 1.0)
        init = make_distance_dictionary(np.array([grid.state_count // 2]), scale, grid)
        state = AtomGreedyState(M, init, rho=args.rho, tol=args.tol, norm=args.norm,
                                grid=grid, v_star=v_star)
    while state.n_atoms < n_max:
        greedy_step(state, state.propose())
    write_trace(state.error_trace, os.path.join(args.out, "trace.csv"))
    resume = {"alpha": state.alpha.tolist(), "beta": state.beta.tolist(),
              "rho": args.rho, "norm": args.norm}
    if isinstance(state, PartitionGreedyState):
        resume["partition"] = partition_to_json(state.P)
    else:
        resume["dictionary"] = dictionary_to_json(state.W)
    with open(os.path.join(args.out, "resume.json"), "w") as fh:
        json.dump(resume, fh)
    _write_meta(args.out, "greedy", args, {"source": src,
                                           "final_n": state.n_atoms,
                                           "residual": state.residual_norm()})
    print(f"greedy: grew to {state.n_atoms} atoms, trace in {args.out}/trace.csv")
    return 0


def _sweep_cell_fixed(method, M, grid, v_star, rho, n_list, args):
    rows = []
    for n in n_list:
        t0 = time.perf_counter()
        kind = "constant" if method == "fixed-constant" else "affine"
        d = _fixed_dictionary(kind, grid, n, v_star, args)
        if kind == "constant":
            t1 = time.perf_counter()
            V = partition_reduced_vi(M, d, rho=rho, tol=args.tol)
            compile_ms = 1e3 * (t1 - t0)
        else:
            forms = compile_forms(M, d, d, rho=rho, cache_dir=args.cache_dir)
            t1 = time.perf_counter()
            compile_ms = 1e3 * (t1 - t0)
            _, V = run_reduced_vi(forms, tol=args.tol)
        l1, linf = error_metrics(V, v_star)
        rows.append({"method": method, "rho": rho, "n": n, "err_l1": l1,
                     "err_linf": linf, "wall_ms": 1e3 * (time.perf_counter() - t0),
                     "compile_ms": compile_ms})
    return rows


def _sweep_cell_greedy(method, M, grid, v_star, rho, n_list, args):
    t0 = time.perf_counter()
    if method == "greedy-constant":
        state = PartitionGreedyState(M, single_cell_partition(grid), rho=rho,
                                     tol=args.tol, norm=args.norm, grid=grid,
                                     v_star=v_star)
    else:
        scale = max(lipschitz_estimate(v_star, grid), 1.0)
        init = make_distance_dictionary(np.array([grid.state_count // 2]), scale, grid)
        state = AtomGreedyState(M, init, rho=rho, tol=args.tol, norm=args.norm,
                                grid=grid, v_star=v_star)
    compile_ms = 1e3 * (time.perf_counter() - t0)
    wanted = set(n_list)
    rows = []

    def snapshot():
        if state.n_atoms in wanted:
            tr = state.error_trace[-1]
            rows.append({"method": method, "rho": rho, "n": state.n_atoms,
                         "err_l1": tr["err_l1"], "err_linf": tr["err_linf"],
                         "wall_ms": 1e3 * (time.perf_counter() - t0),
                         "compile_ms": compile_ms})

    snapshot()
    while state.n_atoms < max(n_list):
        greedy_step(state, state.propose())
        snapshot()
    return rows


def cmd_sweep(args) -> int:
    if not args.n or not args.rho:
        raise ValueError("sweep requires nonempty --n and --rho lists")
    M, grid, v_star, src = _load_problem(args)
    if v_star is None:
        raise ValueError("sweep reports errors against vstar; use a builtin --problem")
    os.makedirs(args.out, exist_ok=True)
    n_list = sorted(args.n)
    jobs = []
    for method in args.methods:
        for rho in args.rho:
            if method.startswith("fixed"):
                jobs.append((method, rho, _sweep_cell_fixed))
            else:
                jobs.append((method, rho, _sweep_cell_greedy))

    def run(job):
        method, rho, fn = job
        return fn(method, M, grid, v_star, rho, n_list, args)

    if args.threads > 1:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            results = list(pool.map(run, jobs))
    else:
        results = [run(j) for j in jobs]
    rows = [row for batch in results for row in batch]
    rows.sort(key=lambda r: (r["method"], r["rho"], r["n"]))
    path = os.path.join(args.out, "sweep.csv")
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=SWEEP_HEADER)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    _write_meta(args.out, "sweep", args, {"source": src, "cells": len(rows)})
    print(f"sweep: wrote {len(rows)} rows to {path}")
    return 0


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code else 0
    try:
        return args.func(args)
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
