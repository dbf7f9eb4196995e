"""Replication experiments, statistics, and CSV/metadata export.

A replication study runs the solver several times with disjoint random
streams derived from one master seed, then reports per-iteration means with
two-sided 95% Student-t confidence bands. Exports are byte-deterministic:
floats are written as shortest round-trip decimals, line endings are LF, and
the sibling metadata file carries every parameter needed to regenerate the
CSVs exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats as _scipy_stats

from .solver import DivergedError, SiviProblem, SolverConfig, Trace, solve

METADATA_FORMAT = "sivi-run-metadata-1"


def t_quantile_975(df: int) -> float:
    """Two-sided 95% Student-t multiplier (0.975 quantile) for df degrees of freedom."""
    if df < 1:
        raise ValueError("degrees of freedom must be >= 1")
    return float(_scipy_stats.t.ppf(0.975, df))


@dataclass
class MetricStats:
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray


@dataclass
class ReplicationStats:
    """Aggregated diagnostics of independent replications.

    metrics maps metric name ("gap_norm", and "err" when the problem has a
    known solution) to mean and confidence bounds per recorded iteration; raw
    holds the underlying replication-by-record value matrices. failures lists
    replications that diverged; statistics cover the completed ones.
    """

    problem_name: str
    ks: np.ndarray
    cum_samples: np.ndarray
    metrics: dict[str, MetricStats]
    n_replications: int
    raw: dict[str, np.ndarray] = field(repr=False, default_factory=dict)
    traces: list[Trace] = field(repr=False, default_factory=list)
    failures: list[tuple[int, str]] = field(default_factory=list)


def _aggregate(values: np.ndarray, n_reps: int) -> MetricStats:
    mean = values.mean(axis=0)
    if n_reps < 2:
        raise ValueError("confidence intervals require at least 2 replications")
    half = t_quantile_975(n_reps - 1) * values.std(axis=0, ddof=1) / math.sqrt(n_reps)
    return MetricStats(mean=mean, ci_low=mean - half, ci_high=mean + half)


def run_replications(
    problem_builder: Callable[[], SiviProblem],
    config: SolverConfig,
    n_replications: int,
    replication_indices: Sequence[int] | None = None,
) -> ReplicationStats:
    """Run independent replications and aggregate their traces.

    Each replication gets a fresh problem instance (so per-instance caches
    never leak across runs) and disjoint random streams keyed by its index;
    execution order therefore cannot affect the result. Diverged replications
    are reported in failures and excluded from the statistics, which require
    at least two completed runs.
    """
    if n_replications < 2:
        raise ValueError("n_replications must be >= 2")
    indices = list(range(n_replications)) if replication_indices is None else list(replication_indices)
    if sorted(indices) != list(range(n_replications)):
        raise ValueError("replication_indices must be a permutation of range(n_replications)")

    completed: dict[int, Trace] = {}
    failures: list[tuple[int, str]] = []
    for idx in indices:
        problem = problem_builder()
        try:
            completed[idx] = solve(problem, config, replication=idx)
        except DivergedError as err:
            failures.append((idx, f"seed={config.master_seed} replication={idx}: {err}"))
    if len(completed) < 2:
        detail = "; ".join(msg for _, msg in failures)
        raise RuntimeError(f"fewer than 2 replications completed ({detail})")

    ordered = [completed[idx] for idx in sorted(completed)]
    ks = ordered[0].ks()
    cum = ordered[0].cum_samples()
    for trace in ordered[1:]:
        if not np.array_equal(trace.ks(), ks) or not np.array_equal(trace.cum_samples(), cum):
            raise RuntimeError("replications disagree on recording cadence; cannot aggregate")

    raw = {"gap_norm": np.vstack([t.gap_norms() for t in ordered])}
    if all(t.x_star is not None for t in ordered):
        raw["err"] = np.vstack([t.errors() for t in ordered])
    metrics = {name: _aggregate(values, len(ordered)) for name, values in raw.items()}
    failures.sort()
    return ReplicationStats(
        problem_name=ordered[0].problem_name,
        ks=ks,
        cum_samples=cum,
        metrics=metrics,
        n_replications=len(ordered),
        raw=raw,
        traces=ordered,
        failures=failures,
    )


def _fmt(value) -> str:
    """Shortest decimal that round-trips the float64 value exactly."""
    return repr(float(value))


def export_csv(obj: Trace | ReplicationStats, path) -> Path:
    """Write a trace or replication statistics to CSV (UTF-8, LF endings).

    Traces use columns k,cum_samples,gap_norm,err (err blank when no solution
    is known); statistics use k,cum_samples,metric,mean,ci_low,ci_high with
    one row per recorded iteration per metric.
    """
    target = Path(path)
    lines: list[str] = []
    if isinstance(obj, Trace):
        lines.append("k,cum_samples,gap_norm,err")
        for rec in obj.records:
            err = "" if rec.err is None else _fmt(rec.err)
            lines.append(f"{rec.k},{rec.cum_samples},{_fmt(rec.gap_norm)},{err}")
    elif isinstance(obj, ReplicationStats):
        lines.append("k,cum_samples,metric,mean,ci_low,ci_high")
        metric_names = [m for m in ("gap_norm", "err") if m in obj.metrics]
        for i, k in enumerate(obj.ks):
            for name in metric_names:
                ms = obj.metrics[name]
                lines.append(
                    f"{int(k)},{int(obj.cum_samples[i])},{name},"
                    f"{_fmt(ms.mean[i])},{_fmt(ms.ci_low[i])},{_fmt(ms.ci_high[i])}"
                )
    else:
        raise TypeError(f"cannot export {type(obj).__name__}")
    target.parent.mkdir(parents=True, exist_ok=True)
    with open(target, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
    return target


def read_csv_columns(path) -> dict[str, list]:
    """Parse an exported CSV back into columns (floats where possible)."""
    with open(path, encoding="utf-8") as handle:
        rows = [line.rstrip("\n").split(",") for line in handle if line.strip()]
    header, data = rows[0], rows[1:]
    columns: dict[str, list] = {name: [] for name in header}
    for row in data:
        for name, cell in zip(header, row):
            if cell == "":
                columns[name].append(None)
            else:
                try:
                    columns[name].append(float(cell))
                except ValueError:
                    columns[name].append(cell)
    return columns


def write_run_metadata(path, entries: dict[str, str]) -> Path:
    """Write run metadata as 'key = value' lines in insertion order."""
    target = Path(path)
    target.parent.mkdir(parents=True, exist_ok=True)
    lines = [f"{key} = {value}" for key, value in entries.items()]
    with open(target, "w", encoding="utf-8", newline="\n") as handle:
        handle.write("\n".join(lines) + "\n")
    return target


def read_run_metadata(path) -> dict[str, str]:
    entries: dict[str, str] = {}
    with open(path, encoding="utf-8") as handle:
        for line in handle:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            key, _, value = line.partition(" = ")
            entries[key] = value
    return entries
