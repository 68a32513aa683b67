"""Batching plans, assignment vectors and covering probabilities.

A plan splits ``n_tasks`` tasks into batches and maps every worker to one
batch. Task and worker indices are 0-based; :meth:`BatchingPlan.describe`
prints them 1-based the way the figures in the literature number them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from math import factorial
from typing import Sequence

import numpy as np

from .errors import DomainError, InfeasibleBatchCountError, InvalidPlanError

__all__ = [
    "BatchingPlan",
    "AssignmentVector",
    "balanced_plan",
    "random_plan",
    "cyclic_plan",
    "custom_overlapping_plan",
    "plan_from_vector",
    "majorizes",
    "stirling2",
    "covering_probability",
    "check_divides",
]

# DFS node limit for the subset-decomposition check; larger searches report None.
_DECOMPOSITION_BUDGET = 200_000


def check_divides(n: int, b: int) -> None:
    if int(n) != n or n < 1:
        raise DomainError(f"N must be a positive integer, got {n!r}")
    if int(b) != b or not 1 <= b <= n:
        raise InfeasibleBatchCountError(f"B must satisfy 1 <= B <= N, got B={b}, N={n}")
    if n % b:
        raise InfeasibleBatchCountError(f"B={b} does not divide N={n}")


@dataclass(frozen=True)
class BatchingPlan:
    """Tasks grouped into batches plus the worker-to-batch map.

    Construction fails if an index is out of range or some task belongs to
    no batch. Plans where a batch has no worker are allowed and reported by
    :attr:`is_covering`.
    """

    n_tasks: int
    batches: tuple[tuple[int, ...], ...]
    workers: tuple[int, ...]

    def __post_init__(self):
        n = self.n_tasks
        if int(n) != n or n < 1:
            raise InvalidPlanError(f"n_tasks must be a positive integer, got {n!r}")
        batches = tuple(tuple(sorted(int(t) for t in b)) for b in self.batches)
        workers = tuple(int(w) for w in self.workers)
        if not batches:
            raise InvalidPlanError("plan has no batches")
        if not workers:
            raise InvalidPlanError("plan has no workers")
        seen = set()
        for i, b in enumerate(batches):
            if not b:
                raise InvalidPlanError(f"batch {i} is empty")
            if len(set(b)) != len(b):
                raise InvalidPlanError(f"batch {i} repeats a task")
            if b[0] < 0 or b[-1] >= n:
                raise InvalidPlanError(f"batch {i} has a task outside [0, {n})")
            seen.update(b)
        if len(seen) != n:
            missing = sorted(set(range(n)) - seen)
            raise InvalidPlanError(f"tasks {missing} appear in no batch")
        for w, b in enumerate(workers):
            if not 0 <= b < len(batches):
                raise InvalidPlanError(f"worker {w} maps to unknown batch {b}")
        object.__setattr__(self, "batches", batches)
        object.__setattr__(self, "workers", workers)

    @property
    def n_workers(self) -> int:
        return len(self.workers)

    @property
    def n_batches(self) -> int:
        return len(self.batches)

    @property
    def replica_counts(self) -> tuple[int, ...]:
        """Number of workers hosting each batch (zeros allowed)."""
        counts = [0] * self.n_batches
        for b in self.workers:
            counts[b] += 1
        return tuple(counts)

    def assignment_vector(self) -> AssignmentVector:
        if not self.is_non_overlapping:
            raise InvalidPlanError("assignment vectors are defined for disjoint batches")
        return AssignmentVector(self.replica_counts)

    @property
    def worker_sizes(self) -> np.ndarray:
        return np.array([len(self.batches[b]) for b in self.workers], dtype=float)

    @cached_property
    def task_hosts(self) -> tuple[tuple[int, ...], ...]:
        """For every task, the workers whose batch contains it."""
        hosts: list[list[int]] = [[] for _ in range(self.n_tasks)]
        for w, b in enumerate(self.workers):
            for t in self.batches[b]:
                hosts[t].append(w)
        return tuple(tuple(h) for h in hosts)

    @property
    def is_covering(self) -> bool:
        return all(self.task_hosts)

    @property
    def is_non_overlapping(self) -> bool:
        return sum(len(b) for b in self.batches) == self.n_tasks

    @property
    def uniform_batch_size(self) -> bool:
        return len({len(b) for b in self.batches}) == 1

    @cached_property
    def subset_decomposition(self) -> list[list[int]] | None:
        """Split the workers into groups whose batches each hold every task once.

        Returns the worker groups, or None when no such split exists (or the
        search gave up).
        """
        return _decompose(self)

    @property
    def has_subset_decomposition(self) -> bool:
        return self.subset_decomposition is not None

    def to_dict(self) -> dict:
        return {
            "n_tasks": self.n_tasks,
            "batches": [list(b) for b in self.batches],
            "workers": list(self.workers),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, data: dict) -> BatchingPlan:
        try:
            return cls(int(data["n_tasks"]), data["batches"], data["workers"])
        except KeyError as exc:
            raise InvalidPlanError(f"plan document is missing {exc}") from None

    @classmethod
    def from_json(cls, text: str) -> BatchingPlan:
        return cls.from_dict(json.loads(text))

    def describe(self) -> str:
        """Human-readable, 1-based listing."""
        lines = [f"{self.n_tasks} tasks, {self.n_batches} batches, {self.n_workers} workers"]
        for w, b in enumerate(self.workers):
            tasks = ",".join(str(t + 1) for t in self.batches[b])
            lines.append(f"  W{w + 1}: batch {b + 1} {{{tasks}}}")
        return "\n".join(lines)


def _decompose(plan: BatchingPlan):
    n = plan.n_tasks
    sizes = [len(plan.batches[b]) for b in plan.workers]
    if sum(sizes) % n:
        return None
    n_groups = sum(sizes) // n
    masks = [sum(1 << t for t in plan.batches[b]) for b in plan.workers]
    full = (1 << n) - 1
    by_task: list[list[int]] = [[] for _ in range(n)]
    for w, b in enumerate(plan.workers):
        for t in plan.batches[b]:
            by_task[t].append(w)
    used = [False] * plan.n_workers
    groups: list[list[int]] = []
    budget = [_DECOMPOSITION_BUDGET]

    def extend(covered: int, current: list[int]) -> bool:
        budget[0] -= 1
        if budget[0] < 0:
            return False
        if covered == full:
            groups.append(list(current))
            if len(groups) == n_groups or extend(0, []):
                return True
            groups.pop()
            return False
        # lowest uncovered task
        t = (~covered & (covered + 1)).bit_length() - 1
        tried = set()
        for w in by_task[t]:
            if used[w] or masks[w] & covered or masks[w] in tried:
                continue
            tried.add(masks[w])
            used[w] = True
            current.append(w)
            if extend(covered | masks[w], current):
                return True
            current.pop()
            used[w] = False
        return False

    try:
        found = extend(0, [])
    except RecursionError:
        return None
    return groups if found else None


@dataclass(frozen=True)
class AssignmentVector:
    """Replica counts per batch of a non-overlapping plan."""

    counts: tuple[int, ...]

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if not counts or any(c < 1 for c in counts):
            raise DomainError(f"replica counts must be positive, got {self.counts!r}")
        object.__setattr__(self, "counts", counts)

    @property
    def total(self) -> int:
        return sum(self.counts)

    def majorizes(self, other) -> bool:
        return majorizes(self, other)

    def __len__(self):
        return len(self.counts)

    def __iter__(self):
        return iter(self.counts)


def _as_counts(v) -> list[int]:
    return list(v.counts if isinstance(v, AssignmentVector) else v)


def majorizes(v1, v2) -> bool:
    """True iff ``v1`` majorizes ``v2``.

    Both vectors are sorted in decreasing order; every prefix sum of ``v1``
    must dominate the matching prefix sum of ``v2``.
    """
    a = sorted(_as_counts(v1), reverse=True)
    b = sorted(_as_counts(v2), reverse=True)
    if len(a) != len(b):
        raise DomainError("majorization needs vectors of equal length")
    if sum(a) != sum(b):
        raise DomainError(f"majorization needs equal totals, got {sum(a)} and {sum(b)}")
    pa = pb = 0
    for x, y in zip(a, b):
        pa += x
        pb += y
        if pa < pb:
            return False
    return True


def balanced_plan(n: int, b: int) -> BatchingPlan:
    """B disjoint batches of size N/B, each hosted by N/B consecutive workers."""
    check_divides(n, b)
    size = n // b
    batches = [tuple(range(i * size, (i + 1) * size)) for i in range(b)]
    workers = [w // size for w in range(n)]
    return BatchingPlan(n, batches, workers)


def random_plan(n: int, b: int, rng: np.random.Generator) -> BatchingPlan:
    """B disjoint batches; every worker picks a batch uniformly at random.

    The result may leave batches without workers; check ``is_covering``.
    When B does not divide N the batch sizes differ by at most one.
    """
    if int(n) != n or n < 1:
        raise DomainError(f"N must be a positive integer, got {n!r}")
    if int(b) != b or not 1 <= b <= n:
        raise InfeasibleBatchCountError(f"B must satisfy 1 <= B <= N, got B={b}, N={n}")
    batches = [tuple(int(t) for t in part) for part in np.array_split(np.arange(n), b)]
    workers = rng.integers(0, b, size=n)
    return BatchingPlan(n, batches, workers.tolist())


def cyclic_plan(n: int, b: int) -> BatchingPlan:
    """N overlapping batches; batch j holds tasks j..j+N/B-1 (mod N) on worker j."""
    check_divides(n, b)
    size = n // b
    batches = [tuple((j + i) % n for i in range(size)) for j in range(n)]
    return BatchingPlan(n, batches, list(range(n)))


def plan_from_vector(counts, n_tasks: int | None = None) -> BatchingPlan:
    """Non-overlapping plan whose batch i is hosted by ``counts[i]`` workers."""
    vec = counts if isinstance(counts, AssignmentVector) else AssignmentVector(tuple(counts))
    n_tasks = vec.total if n_tasks is None else n_tasks
    check_divides(n_tasks, len(vec))
    size = n_tasks // len(vec)
    batches = [tuple(range(i * size, (i + 1) * size)) for i in range(len(vec))]
    workers = [i for i, c in enumerate(vec.counts) for _ in range(c)]
    return BatchingPlan(n_tasks, batches, workers)


@dataclass(frozen=True)
class PlanValidation:
    covering: bool
    uniform_batch_size: bool
    subset_decomposition: bool

    @property
    def valid(self) -> bool:
        return self.covering and self.uniform_batch_size and self.subset_decomposition


def custom_overlapping_plan(
    n: int, batches: Sequence[Sequence[int]], workers: Sequence[int]
) -> tuple[BatchingPlan, PlanValidation]:
    """Build an arbitrary plan and report which structural properties hold."""
    plan = BatchingPlan(n, batches, workers)
    return plan, validate_plan(plan)


def validate_plan(plan: BatchingPlan) -> PlanValidation:
    return PlanValidation(
        covering=plan.is_covering,
        uniform_batch_size=plan.uniform_batch_size,
        subset_decomposition=plan.has_subset_decomposition,
    )


_STIRLING_ROWS: list[list[int]] = [[1]]  # row n holds S(n, 0..n)
_STIRLING_CACHE_LIMIT = 512


def stirling2(n: int, k: int) -> int:
    """Stirling number of the second kind, exact.

    Uses ``S(n, k) = k S(n-1, k) + S(n-1, k-1)``; rows up to n=512 are cached.
    """
    if n < 0 or k < 0:
        raise DomainError("stirling2 needs non-negative arguments")
    if k > n:
        return 0
    if n <= _STIRLING_CACHE_LIMIT:
        while len(_STIRLING_ROWS) <= n:
            prev = _STIRLING_ROWS[-1]
            m = len(prev)
            _STIRLING_ROWS.append(
                [0] + [j * (prev[j] if j < m else 0) + prev[j - 1] for j in range(1, m + 1)]
            )
        return _STIRLING_ROWS[n][k]
    row = [1] + [0] * k  # S(0, j)
    for i in range(1, n + 1):
        for j in range(min(i, k), 0, -1):
            row[j] = j * row[j] + row[j - 1]
        row[0] = 0
    return row[k]


def covering_probability(n: int, b: int) -> Fraction:
    """Probability that N workers choosing among B batches uniformly cover all of them.

    Equal to ``B! * S(N, B) / B**N``. Returned as an exact fraction;
    ``float()`` it for a decimal.
    """
    if int(n) != n or n < 1 or int(b) != b or b < 1:
        raise DomainError(f"need positive integers, got N={n!r}, B={b!r}")
    if b > n:
        return Fraction(0)
    return Fraction(factorial(b) * stirling2(n, b), b**n)
