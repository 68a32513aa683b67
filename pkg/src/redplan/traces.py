"""Task-runtime traces and the bootstrap redundancy experiment.

The input format is a CSV with header ``job_id,task_id,schedule_time,finish_time``
(times in integer microseconds). Extra columns are ignored.
"""

from __future__ import annotations

import csv
import io
import json
import os
from collections import defaultdict
from dataclasses import dataclass
from typing import IO, Iterable

import numpy as np

from .assignment import balanced_plan
from .distributions import Empirical, ServiceDistribution
from .errors import DomainError, TraceFormatError
from .optimizer import feasible_B
from .simulation import SimConfig, fmt, simulate

__all__ = [
    "TraceRecord",
    "JobDurations",
    "load_trace",
    "write_trace",
    "durations_by_job",
    "empirical_ccdf_points",
    "resample_experiment",
    "ResampleTable",
    "synth_trace",
    "records_from_task_events",
]

REQUIRED_COLUMNS = ("job_id", "task_id", "schedule_time", "finish_time")
MICROS = 1_000_000


@dataclass(frozen=True)
class TraceRecord:
    job_id: str
    task_id: str
    schedule_time: int
    finish_time: int

    @property
    def duration(self) -> float:
        return (self.finish_time - self.schedule_time) / MICROS


@dataclass(frozen=True, eq=False)
class JobDurations:
    job_id: str
    durations: np.ndarray  # seconds

    def __post_init__(self):
        d = np.asarray(self.durations, dtype=float)
        if d.size == 0:
            raise DomainError(f"job {self.job_id} has no durations")
        object.__setattr__(self, "durations", d)

    def __len__(self):
        return self.durations.size

    def distribution(self) -> Empirical:
        return Empirical(self.durations)


def _open(source):
    if isinstance(source, (str, os.PathLike)):
        return open(source, newline=""), True
    return source, False


def load_trace(source: str | os.PathLike | IO[str]) -> tuple[list[TraceRecord], int]:
    """Parse a trace CSV.

    Returns the records and the number of rows dropped because the task
    finished before it was scheduled.
    """
    fh, owned = _open(source)
    try:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in REQUIRED_COLUMNS if c not in header]
        if missing:
            raise TraceFormatError(f"line 1: missing columns {missing}")
        records, dropped = [], 0
        for row in reader:
            line = reader.line_num
            try:
                sched = int(row["schedule_time"])
                fin = int(row["finish_time"])
            except (TypeError, ValueError):
                raise TraceFormatError(f"line {line}: times must be integer microseconds") from None
            if row["job_id"] is None or row["task_id"] is None:
                raise TraceFormatError(f"line {line}: too few fields")
            if fin < sched:
                dropped += 1
                continue
            records.append(TraceRecord(row["job_id"], row["task_id"], sched, fin))
        return records, dropped
    finally:
        if owned:
            fh.close()


def write_trace(records: Iterable[TraceRecord], dest: str | os.PathLike | IO[str]) -> None:
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", newline="") as fh:
            write_trace(records, fh)
        return
    writer = csv.writer(dest, lineterminator="\n")
    writer.writerow(REQUIRED_COLUMNS)
    for r in records:
        writer.writerow([r.job_id, r.task_id, r.schedule_time, r.finish_time])


def durations_by_job(records: Iterable[TraceRecord]) -> dict[str, JobDurations]:
    groups: dict[str, list[float]] = defaultdict(list)
    for r in records:
        groups[r.job_id].append(r.duration)
    return {job: JobDurations(job, np.array(d)) for job, d in groups.items()}


def empirical_ccdf_points(durations) -> list[tuple[float, float]]:
    """Step points ``(x, Pr{X > x})`` at each distinct observed value."""
    x = np.asarray(durations, dtype=float).ravel()
    if x.size == 0:
        raise DomainError("empirical CCDF needs at least one sample")
    values, counts = np.unique(x, return_counts=True)
    surv = (x.size - np.cumsum(counts)) / x.size
    return [(float(v), float(p)) for v, p in zip(values, surv)]


@dataclass(frozen=True)
class ResampleTable:
    n: int
    b: tuple[int, ...]
    mean: tuple[float, ...]  # un-normalized mean job time per B
    normalized_mean: tuple[float, ...]
    stderr: tuple[float, ...]  # of the normalized mean

    @property
    def best_b(self) -> int:
        return min(zip(self.normalized_mean, self.b))[1]

    def rows(self) -> list[dict]:
        return [
            {"B": b, "normalized_mean": fmt(m), "stderr": fmt(s)}
            for b, m, s in zip(self.b, self.normalized_mean, self.stderr)
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["B", "normalized_mean", "stderr"])
        for row in self.rows():
            writer.writerow([row["B"], f"{row['normalized_mean']:.9g}", f"{row['stderr']:.9g}"])
        return buf.getvalue()

    def to_json(self) -> str:
        return json.dumps({"n": self.n, "best_b": self.best_b, "rows": self.rows()}, indent=2)


def resample_experiment(durations, n: int, config: SimConfig | None = None) -> ResampleTable:
    """Normalized mean job time versus B from bootstrap-resampled durations.

    Each replication draws N task durations with replacement, forms a
    balanced plan and evaluates the job time. Every B shares the same seed,
    and the curve is divided by the B = N (no redundancy) mean.
    """
    config = config or SimConfig()
    dist = durations if isinstance(durations, Empirical) else Empirical(durations)
    bs = feasible_B(n)
    results = [simulate(balanced_plan(n, b), dist, config) for b in bs]
    base = results[-1].mean
    if base <= 0:
        raise DomainError("baseline mean job time is zero; cannot normalize")
    return ResampleTable(
        n,
        tuple(bs),
        tuple(r.mean for r in results),
        tuple(r.mean / base for r in results),
        tuple(r.stderr / base for r in results),
    )


def synth_trace(
    dist: ServiceDistribution, n_jobs: int, tasks_per_job: int, rng: np.random.Generator
) -> list[TraceRecord]:
    """Synthetic trace: every task scheduled at 0, duration drawn from ``dist``."""
    records = []
    for j in range(n_jobs):
        d = dist.sample(rng, size=tasks_per_job)
        for t, x in enumerate(d):
            records.append(TraceRecord(f"job{j}", str(t), 0, int(round(float(x) * MICROS))))
    return records


# Column positions in the public cluster-trace task_events tables.
_EV_TIME, _EV_JOB, _EV_TASK, _EV_TYPE = 0, 2, 3, 5
_SCHEDULE, _FINISH = 1, 4


def records_from_task_events(rows: Iterable[Iterable[str]]) -> list[TraceRecord]:
    """Convert task_events rows (no header) into trace records.

    A task contributes one record per FINISH event, paired with its most
    recent SCHEDULE event. Tasks that never finish are skipped.
    """
    last_schedule: dict[tuple[str, str], int] = {}
    out = []
    for row in rows:
        row = list(row)
        try:
            ts, job, task, etype = int(row[_EV_TIME]), row[_EV_JOB], row[_EV_TASK], int(row[_EV_TYPE])
        except (IndexError, ValueError):
            continue
        key = (job, task)
        if etype == _SCHEDULE:
            last_schedule[key] = ts
        elif etype == _FINISH and key in last_schedule:
            start = last_schedule.pop(key)
            if ts >= start:
                out.append(TraceRecord(job, task, start, ts))
    return out
