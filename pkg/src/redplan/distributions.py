"""Task service-time distributions.

Four families are supported: exponential, shifted exponential, Pareto and an
empirical (bootstrap) law built from observed durations. All of them sample by
inverse transform from a survival level ``u`` in (0, 1], so two distributions
fed the same uniforms produce coupled draws.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .errors import DomainError, InfiniteMomentError, UnsupportedClosedFormError

__all__ = [
    "ServiceDistribution",
    "Exp",
    "SExp",
    "Pareto",
    "Empirical",
    "TailClassification",
    "fit_sexp",
    "fit_pareto",
    "classify_tail",
]


def _positive(name: str, value: float) -> float:
    value = float(value)
    if not (value > 0 and math.isfinite(value)):
        raise DomainError(f"{name} must be positive and finite, got {value!r}")
    return value


class ServiceDistribution:
    """Base class for service-time laws. Instances are immutable."""

    name = "abstract"

    def ccdf(self, x):
        """Return ``Pr{tau > x}``; accepts scalars or arrays."""
        raise NotImplementedError

    def from_uniform(self, u):
        """Inverse CCDF: map survival levels ``u`` in (0, 1] to times."""
        raise NotImplementedError

    def sample(self, rng: np.random.Generator, size=None):
        """Draw by inverse transform. ``size=None`` returns a float."""
        u = 1.0 - rng.random(size)
        out = self.from_uniform(u)
        return float(out) if size is None else out

    def scale(self, c: float) -> ServiceDistribution:
        """Law of ``c * tau``."""
        raise NotImplementedError

    def min_of_iid(self, k: int) -> ServiceDistribution:
        """Law of the minimum of ``k`` independent copies."""
        raise UnsupportedClosedFormError(
            f"{self.name} has no closed-form minimum; simulate instead"
        )

    def mean(self) -> float:
        raise NotImplementedError

    def variance(self) -> float:
        raise NotImplementedError

    @property
    def support_min(self) -> float:
        return 0.0

    def params(self) -> dict:
        return {}


def _check_scale(c: float) -> float:
    c = float(c)
    if not c > 0:
        raise DomainError(f"scale factor must be > 0, got {c!r}")
    return c


def _check_k(k: int) -> int:
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k!r}")
    return int(k)


@dataclass(frozen=True)
class Exp(ServiceDistribution):
    mu: float
    name = "exp"

    def __post_init__(self):
        object.__setattr__(self, "mu", _positive("mu", self.mu))

    def ccdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(x < 0, 1.0, np.exp(-self.mu * np.maximum(x, 0.0)))
        return float(out) if out.ndim == 0 else out

    def from_uniform(self, u):
        return -np.log(u) / self.mu

    def scale(self, c):
        return Exp(self.mu / _check_scale(c))

    def min_of_iid(self, k):
        return Exp(_check_k(k) * self.mu)

    def mean(self):
        return 1.0 / self.mu

    def variance(self):
        return 1.0 / self.mu**2

    def params(self):
        return {"mu": self.mu}


@dataclass(frozen=True)
class SExp(ServiceDistribution):
    """Shifted exponential: ``delta`` plus an Exp(``mu``) variable."""

    delta: float
    mu: float
    name = "sexp"

    def __post_init__(self):
        delta = float(self.delta)
        if not (delta >= 0 and math.isfinite(delta)):
            raise DomainError(f"delta must be >= 0, got {self.delta!r}")
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "mu", _positive("mu", self.mu))

    @property
    def support_min(self):
        return self.delta

    def ccdf(self, x):
        x = np.asarray(x, dtype=float)
        out = np.where(
            x < self.delta, 1.0, np.exp(-self.mu * np.maximum(x - self.delta, 0.0))
        )
        return float(out) if out.ndim == 0 else out

    def from_uniform(self, u):
        return self.delta - np.log(u) / self.mu

    def scale(self, c):
        c = _check_scale(c)
        return SExp(c * self.delta, self.mu / c)

    def min_of_iid(self, k):
        return SExp(self.delta, _check_k(k) * self.mu)

    def mean(self):
        return self.delta + 1.0 / self.mu

    def variance(self):
        return 1.0 / self.mu**2

    def params(self):
        return {"delta": self.delta, "mu": self.mu}


@dataclass(frozen=True)
class Pareto(ServiceDistribution):
    """Pareto with scale ``sigma`` (support minimum) and shape ``alpha``.

    Any ``alpha > 0`` can be constructed and sampled; moment queries raise
    :class:`InfiniteMomentError` when the moment diverges.
    """

    sigma: float
    alpha: float
    name = "pareto"

    def __post_init__(self):
        object.__setattr__(self, "sigma", _positive("sigma", self.sigma))
        object.__setattr__(self, "alpha", _positive("alpha", self.alpha))

    @property
    def support_min(self):
        return self.sigma

    def ccdf(self, x):
        x = np.asarray(x, dtype=float)
        ratio = np.maximum(x, self.sigma) / self.sigma
        out = np.where(x < self.sigma, 1.0, ratio ** (-self.alpha))
        return float(out) if out.ndim == 0 else out

    def from_uniform(self, u):
        return self.sigma * u ** (-1.0 / self.alpha)

    def scale(self, c):
        return Pareto(_check_scale(c) * self.sigma, self.alpha)

    def min_of_iid(self, k):
        return Pareto(self.sigma, _check_k(k) * self.alpha)

    def mean(self):
        if self.alpha <= 1:
            raise InfiniteMomentError(f"infinite mean: alpha={self.alpha} <= 1")
        return self.alpha * self.sigma / (self.alpha - 1)

    def variance(self):
        if self.alpha <= 2:
            raise InfiniteMomentError(f"infinite variance: alpha={self.alpha} <= 2")
        a = self.alpha
        return self.sigma**2 * a / ((a - 1) ** 2 * (a - 2))

    def params(self):
        return {"sigma": self.sigma, "alpha": self.alpha}


@dataclass(frozen=True, eq=False)
class Empirical(ServiceDistribution):
    """Bootstrap law over observed durations.

    Sampling picks one stored value uniformly at random; there is no
    interpolation between observations.
    """

    samples: np.ndarray = field(repr=False)
    name = "empirical"

    def __post_init__(self):
        arr = np.sort(np.asarray(self.samples, dtype=float).ravel())
        if arr.size == 0:
            raise DomainError("empirical distribution needs at least one sample")
        if not np.all(np.isfinite(arr)) or arr[0] < 0:
            raise DomainError("empirical samples must be finite and >= 0")
        arr.setflags(write=False)
        object.__setattr__(self, "samples", arr)

    def __eq__(self, other):
        if not isinstance(other, Empirical):
            return NotImplemented
        return np.array_equal(self.samples, other.samples)

    def __hash__(self):
        return hash(self.samples.tobytes())

    def __repr__(self):
        return f"Empirical(n={self.samples.size})"

    @property
    def support_min(self):
        return float(self.samples[0])

    def ccdf(self, x):
        x = np.asarray(x, dtype=float)
        n = self.samples.size
        out = (n - np.searchsorted(self.samples, x, side="right")) / n
        return float(out) if np.ndim(out) == 0 else out

    def from_uniform(self, u):
        n = self.samples.size
        idx = n - np.ceil(np.asarray(u) * n).astype(np.intp)
        return self.samples[np.clip(idx, 0, n - 1)]

    def scale(self, c):
        return Empirical(self.samples * _check_scale(c))

    def mean(self):
        return float(np.mean(self.samples))

    def variance(self):
        if self.samples.size < 2:
            return 0.0
        return float(np.var(self.samples, ddof=1))

    def params(self):
        return {"n": int(self.samples.size)}


def _fit_input(samples) -> np.ndarray:
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2 or np.unique(x).size < 2:
        raise DomainError("fitting needs at least two distinct samples")
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise DomainError("fitting needs finite positive samples")
    return x


def fit_sexp(samples) -> SExp:
    """Fit a shifted exponential: shift = minimum, rate = 1 / mean excess."""
    x = _fit_input(samples)
    delta = float(x.min())
    return SExp(delta, 1.0 / (float(x.mean()) - delta))


def fit_pareto(samples) -> Pareto:
    """Maximum-likelihood Pareto fit with the scale pinned at the minimum."""
    x = _fit_input(samples)
    sigma = float(x.min())
    return Pareto(sigma, x.size / float(np.sum(np.log(x / sigma))))


class TailClassification(NamedTuple):
    label: str  # "heavy" or "exponential"
    r2_loglog: float
    r2_semilog: float
    n_points: int


def _r2(x: np.ndarray, y: np.ndarray) -> float:
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    if ss_tot == 0:
        return 1.0
    return 1.0 - float(np.sum(resid**2)) / ss_tot


def classify_tail(samples, min_samples: int = 50) -> TailClassification:
    """Label a sample as heavy- or exponential-tailed.

    The empirical CCDF above the sample median is regressed twice: log CCDF
    against log x (a power law is a straight line there) and log CCDF
    against x (an exponential tail is). The better coefficient of
    determination wins.
    """
    x = np.sort(np.asarray(samples, dtype=float).ravel())
    if x.size < min_samples:
        raise DomainError(
            f"tail classification needs >= {min_samples} samples, got {x.size}"
        )
    pts, probs = _ccdf_steps(x)
    keep = (pts > np.median(x)) & (probs > 0) & (pts > 0)
    pts, probs = pts[keep], probs[keep]
    if pts.size < 3:
        raise DomainError("too few distinct points above the median to classify")
    log_p = np.log(probs)
    r2_loglog = _r2(np.log(pts), log_p)
    r2_semilog = _r2(pts, log_p)
    label = "heavy" if r2_loglog > r2_semilog else "exponential"
    return TailClassification(label, r2_loglog, r2_semilog, int(pts.size))


def _ccdf_steps(sorted_x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    values, counts = np.unique(sorted_x, return_counts=True)
    n = sorted_x.size
    return values, (n - np.cumsum(counts)) / n
