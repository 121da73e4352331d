"""Render summary figures from a sweep CSV.

Produces PNG files next to the delimited output: recovered-fraction versus
noise, exact-recovery rate versus noise, and total runtime versus size.
Rows with a nonempty error column are ignored.
"""
from __future__ import annotations

import os
from collections import defaultdict

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .sweep import read_csv_rows


def _clean(rows) -> list:
    return [r for r in rows if not r.get("error")]


def _series_by_n(rows, x_col, y_col, reduce_fn):
    """{n: ([x ascending], [reduced y])} with one point per x value."""
    grouped = defaultdict(lambda: defaultdict(list))
    for r in rows:
        try:
            grouped[int(r["n"])][float(r[x_col])].append(float(r[y_col]))
        except (TypeError, ValueError):
            continue
    out = {}
    for n, buckets in sorted(grouped.items()):
        xs = sorted(buckets)
        out[n] = (xs, [reduce_fn(buckets[x]) for x in xs])
    return out


def _mean(values):
    return sum(values) / len(values)


def _save(fig, directory, name) -> str:
    path = os.path.join(directory, name)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def overlap_vs_alpha(rows, directory) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, col, style in (("after refinement", "overlap_exact", "-o"),
                              ("before refinement", "overlap_almost", "--s")):
        for n, (xs, ys) in _series_by_n(rows, "alpha", col, _mean).items():
            ax.plot(xs, ys, style, label=f"n={n}, {label}")
    ax.set_xlabel("noise level alpha")
    ax.set_ylabel("mean recovered fraction")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, directory, "overlap_vs_alpha.png")


def exact_rate_vs_alpha(rows, directory) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    grouped = defaultdict(lambda: defaultdict(list))
    for r in rows:
        if r.get("exact") in ("true", "false", True, False):
            flag = r["exact"] in ("true", True)
            grouped[int(r["n"])][float(r["alpha"])].append(flag)
    for n, buckets in sorted(grouped.items()):
        xs = sorted(buckets)
        ax.plot(xs, [_mean(buckets[x]) for x in xs], "-o", label=f"n={n}")
    ax.set_xlabel("noise level alpha")
    ax.set_ylabel("exact recovery rate")
    ax.set_ylim(-0.05, 1.05)
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=8)
    fig.tight_layout()
    return _save(fig, directory, "exact_rate_vs_alpha.png")


def runtime_vs_n(rows, directory) -> str:
    fig, ax = plt.subplots(figsize=(6, 4))
    buckets = defaultdict(list)
    for r in rows:
        try:
            buckets[int(r["n"])].append(float(r["seconds_total"]))
        except (TypeError, ValueError):
            continue
    if buckets:
        xs = sorted(buckets)
        ax.loglog(xs, [_mean(buckets[x]) for x in xs], "-o")
    ax.set_xlabel("n")
    ax.set_ylabel("mean total seconds")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    return _save(fig, directory, "runtime_vs_n.png")


def render_report(csv_path, directory=None) -> list:
    """All figures for one sweep CSV; returns the written paths."""
    if directory is None:
        directory = os.path.dirname(os.path.abspath(csv_path))
    os.makedirs(directory, exist_ok=True)
    rows = _clean(read_csv_rows(csv_path))
    return [
        overlap_vs_alpha(rows, directory),
        exact_rate_vs_alpha(rows, directory),
        runtime_vs_n(rows, directory),
    ]
