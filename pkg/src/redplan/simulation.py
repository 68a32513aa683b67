"""Monte Carlo estimation of job compute time.

Each worker draws one slowdown ``tau`` and finishes its batch at
``len(batch) * tau``. The job completes at the earliest instant the batches
of finished workers cover every task, which equals

    max over tasks  of  min over workers hosting the task  of  finish time.

Replications are generated in fixed-size blocks; block ``k`` is seeded from
``SeedSequence(seed, spawn_key=(k,))``. Results therefore do not depend on
how many threads evaluate the blocks.
"""

from __future__ import annotations

import csv
import io
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from statistics import NormalDist
from typing import Sequence

import numpy as np

from .assignment import BatchingPlan
from .distributions import ServiceDistribution
from .errors import DomainError, InvalidPlanError

__all__ = [
    "SimConfig",
    "SimResult",
    "job_times",
    "job_time_once",
    "simulate",
    "compare_schemes",
    "SchemeComparison",
    "BLOCK_SIZE",
]

BLOCK_SIZE = 8192
QUANTILE_LEVELS = (0.5, 0.9, 0.99)


@dataclass(frozen=True)
class SimConfig:
    replications: int = 100_000
    seed: int = 42
    retain_samples: bool = False
    threads: int = 1  # evaluation only; never changes results

    def __post_init__(self):
        if int(self.replications) != self.replications or self.replications < 1:
            raise DomainError(f"replications must be >= 1, got {self.replications!r}")
        if int(self.seed) != self.seed or not 0 <= self.seed < 2**64:
            raise DomainError(f"seed must be an unsigned 64-bit integer, got {self.seed!r}")
        if self.threads < 1:
            raise DomainError("threads must be >= 1")


def fmt(x: float | None) -> float | None:
    """Round to 9 significant digits for serialization."""
    if x is None or not math.isfinite(x):
        return x
    return float(f"{x:.9g}")


@dataclass(frozen=True)
class SimResult:
    mean: float
    std: float
    cov: float | None  # None when undefined (one replication or zero mean)
    quantiles: dict[float, float]
    replications: int
    samples: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def stderr(self) -> float:
        return self.std / math.sqrt(self.replications)

    @classmethod
    def from_samples(cls, x: np.ndarray, retain: bool = False) -> SimResult:
        n = x.size
        mean = float(np.sum(x)) / n
        std = math.sqrt(float(np.sum((x - mean) ** 2)) / (n - 1)) if n > 1 else 0.0
        cov = std / mean if n > 1 and mean != 0 else None
        s = np.sort(x)
        quantiles = {q: float(s[max(math.ceil(q * n) - 1, 0)]) for q in QUANTILE_LEVELS}
        return cls(mean, std, cov, quantiles, n, x if retain else None)

    def to_dict(self) -> dict:
        return {
            "mean": fmt(self.mean),
            "std": fmt(self.std),
            "cov": fmt(self.cov),
            "q50": fmt(self.quantiles[0.5]),
            "q90": fmt(self.quantiles[0.9]),
            "q99": fmt(self.quantiles[0.99]),
            "replications": self.replications,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)

    def to_csv(self) -> str:
        d = self.to_dict()
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(d.keys())
        writer.writerow(["" if v is None else f"{v:.9g}" if isinstance(v, float) else v for v in d.values()])
        return buf.getvalue()

    def samples_csv(self) -> str:
        if self.samples is None:
            raise ValueError("samples were not retained")
        return "job_time\n" + "".join(f"{v:.9g}\n" for v in self.samples)


class _Evaluator:
    """Precomputed host structure of a plan for vectorized job times."""

    def __init__(self, plan: BatchingPlan):
        if not plan.is_covering:
            raise InvalidPlanError("plan leaves some task without a worker")
        self.n_workers = plan.n_workers
        self.sizes = plan.worker_sizes
        groups = sorted(set(plan.task_hosts))
        self.groups = [np.array(g, dtype=np.intp) for g in groups]
        # Disjoint consecutive equal-width groups spanning all workers reduce to a reshape.
        self.width = None
        w = len(groups[0])
        flat = [x for g in groups for x in g]
        if all(len(g) == w for g in groups) and flat == list(range(self.n_workers)):
            self.width = w

    def __call__(self, taus: np.ndarray) -> np.ndarray:
        finish = taus * self.sizes
        if self.width is not None:
            return finish.reshape(finish.shape[0], -1, self.width).min(axis=2).max(axis=1)
        out = finish[:, self.groups[0]].min(axis=1)
        for g in self.groups[1:]:
            np.maximum(out, finish[:, g].min(axis=1), out=out)
        return out


def job_times(plan: BatchingPlan, taus: np.ndarray) -> np.ndarray:
    """Job times for a matrix of per-worker slowdowns (replications x workers)."""
    taus = np.atleast_2d(np.asarray(taus, dtype=float))
    if taus.shape[1] != plan.n_workers:
        raise DomainError(f"expected {plan.n_workers} slowdowns per row, got {taus.shape[1]}")
    return _Evaluator(plan)(taus)


def job_time_once(plan: BatchingPlan, dist: ServiceDistribution, rng: np.random.Generator) -> float:
    """One job time with fresh i.i.d. slowdowns from ``dist``."""
    ev = _Evaluator(plan)
    taus = dist.sample(rng, size=(1, plan.n_workers))
    return float(ev(taus)[0])


def _block_uniforms(seed: int, block: int, rows: int, cols: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))
    return 1.0 - rng.random((rows, cols))


def _blocks(replications: int):
    n_blocks = -(-replications // BLOCK_SIZE)
    return [(k, min(BLOCK_SIZE, replications - k * BLOCK_SIZE)) for k in range(n_blocks)]


def _run_blocks(fn, config: SimConfig):
    blocks = _blocks(config.replications)
    if config.threads == 1:
        return [fn(k, m) for k, m in blocks]
    with ThreadPoolExecutor(max_workers=config.threads) as pool:
        return list(pool.map(lambda km: fn(*km), blocks))


def simulate(plan: BatchingPlan, dist: ServiceDistribution, config: SimConfig | None = None) -> SimResult:
    """Estimate job-time statistics over ``config.replications`` draws."""
    config = config or SimConfig()
    ev = _Evaluator(plan)

    def block(k, m):
        return ev(dist.from_uniform(_block_uniforms(config.seed, k, m, ev.n_workers)))

    x = np.concatenate(_run_blocks(block, config))
    return SimResult.from_samples(x, retain=config.retain_samples)


@dataclass(frozen=True)
class PairedDifference:
    first: str
    second: str
    mean_diff: float  # mean of (first - second)
    stderr: float
    z: float
    ci: tuple[float, float]


@dataclass(frozen=True)
class SchemeComparison:
    labels: tuple[str, ...]
    results: tuple[SimResult, ...]
    differences: tuple[PairedDifference, ...]
    confidence: float

    @property
    def order(self) -> list[str]:
        """Labels sorted by increasing mean job time."""
        idx = sorted(range(len(self.labels)), key=lambda i: (self.results[i].mean, i))
        return [self.labels[i] for i in idx]

    def difference(self, first: str, second: str) -> PairedDifference:
        for d in self.differences:
            if (d.first, d.second) == (first, second):
                return d
            if (d.second, d.first) == (first, second):
                return PairedDifference(first, second, -d.mean_diff, d.stderr, -d.z, (-d.ci[1], -d.ci[0]))
        raise KeyError((first, second))

    def to_dict(self) -> dict:
        z = NormalDist().inv_cdf(0.5 + self.confidence / 2)
        return {
            "confidence": self.confidence,
            "order": self.order,
            "schemes": [
                {
                    "label": lab,
                    "mean": fmt(r.mean),
                    "stderr": fmt(r.stderr),
                    "ci": [fmt(r.mean - z * r.stderr), fmt(r.mean + z * r.stderr)],
                }
                for lab, r in zip(self.labels, self.results)
            ],
            "differences": [
                {
                    "first": d.first,
                    "second": d.second,
                    "mean_diff": fmt(d.mean_diff),
                    "stderr": fmt(d.stderr),
                    "z": fmt(d.z),
                    "ci": [fmt(d.ci[0]), fmt(d.ci[1])],
                }
                for d in self.differences
            ],
        }


def compare_schemes(
    plans: Sequence[BatchingPlan],
    dist: ServiceDistribution,
    config: SimConfig | None = None,
    labels: Sequence[str] | None = None,
    confidence: float = 0.99,
) -> SchemeComparison:
    """Simulate several plans on common random numbers.

    Worker ``w`` sees the same slowdown in every plan, so paired differences
    of job times have far smaller variance than independent runs.
    """
    config = config or SimConfig()
    if not plans:
        raise DomainError("no plans to compare")
    n_workers = plans[0].n_workers
    if any(p.n_workers != n_workers for p in plans):
        raise DomainError("all plans must use the same number of workers")
    labels = list(labels) if labels is not None else [f"plan{i + 1}" for i in range(len(plans))]
    if len(labels) != len(plans):
        raise DomainError("one label per plan required")
    evaluators = [_Evaluator(p) for p in plans]

    def block(k, m):
        taus = dist.from_uniform(_block_uniforms(config.seed, k, m, n_workers))
        return np.stack([ev(taus) for ev in evaluators])

    x = np.concatenate(_run_blocks(block, config), axis=1)
    results = tuple(SimResult.from_samples(row, retain=config.retain_samples) for row in x)
    z_crit = NormalDist().inv_cdf(0.5 + confidence / 2)
    diffs = []
    for i, j in combinations(range(len(plans)), 2):
        d = SimResult.from_samples(x[i] - x[j])
        se = d.stderr
        z = d.mean / se if se > 0 else math.copysign(math.inf, d.mean) if d.mean else 0.0
        diffs.append(
            PairedDifference(labels[i], labels[j], d.mean, se, z, (d.mean - z_crit * se, d.mean + z_crit * se))
        )
    return SchemeComparison(tuple(labels), results, tuple(diffs), confidence)
