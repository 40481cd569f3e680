#!/usr/bin/env python3
"""Render CSV outputs of the max-plus MDP toolkit into figures.

Stateless filters: CSV in, image out.  Nothing numeric is recomputed here;
the scripts only parse, validate the declared schemas and draw.

Usage:
    plot_results.py --kind overlay --in vstar.csv approx.csv [...] --out fig.png
    plot_results.py --kind perf_panel --in sweep.csv --out fig.png
"""

import argparse
import csv
import sys

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

SWEEP_COLUMNS = ["method", "rho", "n", "err_l1", "err_linf", "wall_ms", "compile_ms"]
VALUE_COLUMNS = ["state", "x0", "value"]


class SchemaError(ValueError):
    """Input CSV does not match the declared schema."""


def read_value_series(path):
    """Parse a 1-D value CSV (state, x0, value) into (x, value) float lists."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != VALUE_COLUMNS:
            raise SchemaError(f"{path}: expected columns {VALUE_COLUMNS}, "
                              f"got {reader.fieldnames}")
        xs, values = [], []
        for row in reader:
            xs.append(float(row["x0"]))
            values.append(float(row["value"]))
    if not xs:
        raise SchemaError(f"{path}: no data rows")
    return xs, values


def read_sweep(path):
    """Parse a sweep CSV into typed row dicts."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_COLUMNS:
            raise SchemaError(f"{path}: expected columns {SWEEP_COLUMNS}, "
                              f"got {reader.fieldnames}")
        rows = []
        for row in reader:
            rows.append({"method": row["method"], "rho": int(row["rho"]),
                         "n": int(row["n"]), "err_l1": float(row["err_l1"]),
                         "err_linf": float(row["err_linf"])})
    if not rows:
        raise SchemaError(f"{path}: no data rows")
    return rows


def plot_overlay(vstar_csv, approx_csvs, out):
    """Reference value function and approximations on shared axes."""
    x_ref, v_ref = read_value_series(vstar_csv)
    series = []
    for path in approx_csvs:
        x, v = read_value_series(path)
        if x != x_ref:
            raise SchemaError(f"{path}: grid does not match {vstar_csv}")
        series.append((path, v))
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(x_ref, v_ref, "k-", linewidth=2, label="reference")
    for path, v in series:
        ax.plot(x_ref, v, linewidth=1, label=path.rsplit("/", 1)[-1])
    ax.set_xlabel("x")
    ax.set_ylabel("value")
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=110)
    plt.close(fig)


def plot_perf_panel(sweep_csv, out):
    """Error against basis size, one curve per method, one panel per rho."""
    rows = read_sweep(sweep_csv)
    rhos = sorted({r["rho"] for r in rows})
    methods = sorted({r["method"] for r in rows})
    fig, axes = plt.subplots(1, len(rhos), figsize=(4.2 * len(rhos), 3.6),
                             squeeze=False, sharey=True)
    for ax, rho in zip(axes[0], rhos):
        for method in methods:
            pts = sorted((r["n"], r["err_l1"]) for r in rows
                         if r["rho"] == rho and r["method"] == method)
            ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o",
                    label=method)
        ax.set_title(f"rho = {rho}")
        ax.set_xlabel("basis size n")
        ax.set_yscale("log")
    axes[0][0].set_ylabel("l1 error")
    axes[0][-1].legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out, dpi=110)
    plt.close(fig)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--kind", choices=["overlay", "perf_panel"], required=True)
    parser.add_argument("--in", dest="inputs", nargs="+", required=True)
    parser.add_argument("--out", required=True)
    args = parser.parse_args(argv)
    try:
        if args.kind == "overlay":
            if len(args.inputs) < 2:
                raise SchemaError("overlay needs a reference CSV and at least "
                                  "one approximation CSV")
            plot_overlay(args.inputs[0], args.inputs[1:], args.out)
        else:
            if len(args.inputs) != 1:
                raise SchemaError("perf_panel takes exactly one sweep CSV")
            plot_perf_panel(args.inputs[0], args.out)
    except (SchemaError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
