"""Parameter-grid experiment harness with journaled, resumable runs.

A sweep is a cartesian grid over model and pipeline parameters.  Every
(cell, trial) result is appended to a journal file as soon as it exists,
so an interrupted sweep rerun with the same spec skips finished work and
still produces the same final CSV (up to the wall-time columns, which are
inherently volatile and documented as such in docs/columns.md).
"""
from __future__ import annotations

import csv
import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor, as_completed
from dataclasses import dataclass

from .errors import DataFormatError, ParameterError
from .model import ModelParams, overlap_fraction, sample_instance
from .pipeline import PipelineParams, match_exact

SWEEP_COLUMNS = [
    "cell", "trial", "seed",
    "n", "np_mult", "p", "alpha", "m", "w", "slack", "epsilon", "rounds",
    "w_clamped", "index_clamped",
    "overlap_almost", "mismatches_almost",
    "overlap_exact", "mismatches_exact", "exact",
    "candidate_entries", "empty_support_rows", "empty_support_cols",
    "peeled", "refine_rounds_run",
    "seconds_compare", "seconds_peel", "seconds_refine", "seconds_total",
    "error",
]

# wall-clock measurements; excluded from byte-identity comparisons
VOLATILE_COLUMNS = [c for c in SWEEP_COLUMNS if c.startswith("seconds_")]


@dataclass(frozen=True)
class SweepCell:
    index: int
    n: int
    np_mult: float
    alpha: float
    m: int | None
    w: int | None
    slack: float | None
    epsilon: float | None


@dataclass(frozen=True)
class SweepSpec:
    """Grid definition; None entries in optional grids mean pipeline defaults.

    np_mults scales the mean degree as a multiple of ln n, so a cell's edge
    probability is np_mult * ln(n) / n.
    """

    ns: tuple
    np_mults: tuple
    alphas: tuple
    ms: tuple = (None,)
    ws: tuple = (None,)
    slacks: tuple = (None,)
    epsilons: tuple = (None,)
    trials: int = 1
    base_seed: int = 0

    def __post_init__(self) -> None:
        for name in ("ns", "np_mults", "alphas", "ms", "ws", "slacks", "epsilons"):
            if len(getattr(self, name)) == 0:
                raise ParameterError(f"grid {name} must be nonempty")
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")

    def cells(self) -> list:
        combos = itertools.product(
            self.ns, self.np_mults, self.alphas,
            self.ms, self.ws, self.slacks, self.epsilons,
        )
        return [
            SweepCell(i, n, np_mult, alpha, m, w, slack, epsilon)
            for i, (n, np_mult, alpha, m, w, slack, epsilon) in enumerate(combos)
        ]


def _blank_row(cell: SweepCell, trial: int, seed: int) -> dict:
    row = {c: None for c in SWEEP_COLUMNS}
    row.update(cell=cell.index, trial=trial, seed=seed, n=cell.n,
               np_mult=cell.np_mult, alpha=cell.alpha,
               m=cell.m, w=cell.w, slack=cell.slack, epsilon=cell.epsilon)
    return row


def run_trial(cell: SweepCell, trial: int, base_seed: int) -> dict:
    seed = base_seed + trial
    row = _blank_row(cell, trial, seed)
    p = cell.np_mult * math.log(cell.n) / cell.n
    row["p"] = p
    try:
        instance = sample_instance(ModelParams(n=cell.n, p=p, alpha=cell.alpha), seed)
        params = PipelineParams(p=p, m=cell.m, w=cell.w, slack=cell.slack,
                                epsilon=cell.epsilon, seed=seed)
        matching, prov = match_exact(instance.g_obs, instance.g_ref, params)
    except ParameterError as exc:
        row["error"] = str(exc)
        return row
    rp = prov.params
    almost = prov.almost_matching
    row.update(
        m=rp.m, w=rp.w, slack=rp.slack, epsilon=rp.epsilon, rounds=rp.rounds,
        w_clamped=rp.w_clamped, index_clamped=prov.index_clamped,
        overlap_almost=overlap_fraction(almost.assign, instance.perm),
        mismatches_almost=int((almost.assign != instance.perm.forward).sum()),
        overlap_exact=overlap_fraction(matching.assign, instance.perm),
        mismatches_exact=int((matching.assign != instance.perm.forward).sum()),
        candidate_entries=prov.candidate_entries,
        empty_support_rows=prov.empty_support_rows,
        empty_support_cols=prov.empty_support_cols,
        peeled=prov.peeled,
        refine_rounds_run=prov.refine_rounds_run,
        seconds_compare=prov.timings.get("compare"),
        seconds_peel=prov.timings.get("peel"),
        seconds_refine=prov.timings.get("refine"),
        seconds_total=prov.timings.get("total"),
        error="",
    )
    row["exact"] = row["mismatches_exact"] == 0
    return row


def run_cell(spec: SweepSpec, cell: SweepCell, skip=()) -> list:
    """All trials of one cell; parameter failures land in the error column."""
    return [
        run_trial(cell, trial, spec.base_seed)
        for trial in range(spec.trials)
        if trial not in skip
    ]


def _format_value(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def emit_csv(rows, path) -> None:
    """Stable column order, RFC-4180 quoting, one line per row."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(SWEEP_COLUMNS)
        for row in rows:
            writer.writerow([_format_value(row.get(c)) for c in SWEEP_COLUMNS])


def read_csv_rows(path) -> list:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_COLUMNS:
            raise DataFormatError(f"{path}: unexpected CSV columns")
        return list(reader)


def load_journal(path) -> dict:
    """(cell, trial) -> row.  A truncated final line is tolerated.

    The journal is append-only; an interrupt can cut the last line short,
    which is expected damage.  A malformed line anywhere else is a real
    format error and is reported.
    """
    done: dict = {}
    if not os.path.exists(path):
        return done
    with open(path, "r", encoding="utf-8") as fh:
        lines = fh.readlines()
    for k, line in enumerate(lines):
        line = line.strip()
        if not line:
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError:
            if k == len(lines) - 1:
                break
            raise DataFormatError(f"{path}:{k + 1}: corrupt journal line")
        done[(row["cell"], row["trial"])] = row
    return done


def run_sweep(spec: SweepSpec, out_csv, threads: int = 1, journal_path=None) -> list:
    """Run the grid, journal every row, and write the final CSV.

    Cells execute concurrently up to `threads`; the journal has a single
    writer (this thread).  Returns the rows in (cell, trial) order.
    """
    if threads < 1:
        raise ParameterError("threads must be at least 1")
    if journal_path is None:
        journal_path = str(out_csv) + ".journal"
    done = load_journal(journal_path)
    cells = spec.cells()
    pending = {
        cell: [t for t in range(spec.trials) if (cell.index, t) not in done]
        for cell in cells
    }
    with open(journal_path, "a", encoding="utf-8") as journal:

        def record(rows):
            for row in rows:
                done[(row["cell"], row["trial"])] = row
                journal.write(json.dumps(row) + "\n")
            journal.flush()

        work = [(cell, trials) for cell, trials in pending.items() if trials]
        if threads == 1 or len(work) <= 1:
            for cell, trials in work:
                record(run_cell(spec, cell,
                                skip=set(range(spec.trials)) - set(trials)))
        else:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                futures = [
                    pool.submit(run_cell, spec, cell,
                                set(range(spec.trials)) - set(trials))
                    for cell, trials in work
                ]
                for future in as_completed(futures):
                    record(future.result())
    ordered = [done[key] for key in sorted(done)]
    emit_csv(ordered, out_csv)
    return ordered
