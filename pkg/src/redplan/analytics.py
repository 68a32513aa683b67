"""Closed-form job-time moments for balanced non-overlapping plans.

With ``N`` workers, ``B`` batches and slowdown ``tau``, every worker finishes
its batch at ``(N/B) * tau`` and each batch is replicated ``N/B`` times. The
job time is the maximum over batches of the minimum over replicas:

* SExp(delta, mu): each batch minimum is SExp(N*delta/B, mu), so the job
  time is ``N*delta/B`` plus the maximum of ``B`` Exp(mu) variables.
* Pareto(sigma, alpha): each batch minimum is Pareto(N*sigma/B, N*alpha/B)
  and the job time is the top order statistic of ``B`` such variables.

Gamma ratios are evaluated in log space.
"""

from __future__ import annotations

import math
from functools import lru_cache

from .assignment import check_divides
from .distributions import Exp, Pareto, ServiceDistribution, SExp
from .errors import DomainError, InfiniteMomentError, UnsupportedClosedFormError

EULER_GAMMA = 0.5772156649015329


@lru_cache(maxsize=4096)
def harmonic(n: int, r: int = 1) -> float:
    """Generalized harmonic number ``sum_{k=1}^n k**-r``."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if r not in (1, 2):
        raise DomainError(f"order must be 1 or 2, got {r!r}")
    return math.fsum(1.0 / k**r for k in range(n, 0, -1))


def log_gamma(x: float) -> float:
    """``ln Gamma(x)`` for ``x > 0``."""
    if not x > 0:
        raise DomainError(f"log_gamma needs x > 0, got {x!r}")
    return math.lgamma(x)


def _sexp_args(n, b, delta, mu):
    check_divides(n, b)
    if delta < 0 or not mu > 0:
        raise DomainError("SExp needs delta >= 0 and mu > 0")


def sexp_mean_T(n: int, b: int, delta: float, mu: float) -> float:
    _sexp_args(n, b, delta, mu)
    return n * delta / b + harmonic(b, 1) / mu


def sexp_var_T(n: int, b: int, delta: float, mu: float) -> float:
    _sexp_args(n, b, delta, mu)
    return harmonic(b, 2) / mu**2


def sexp_cov_T(n: int, b: int, delta: float, mu: float) -> float:
    _sexp_args(n, b, delta, mu)
    return math.sqrt(harmonic(b, 2)) / (n * delta * mu / b + harmonic(b, 1))


def sexp_mean_approx(n: int, b: float, delta: float, mu: float) -> float:
    """Continuous-B approximation ``N*delta/B + (ln B + gamma)/mu``."""
    if not b > 0 or not mu > 0:
        raise DomainError("need B > 0 and mu > 0")
    return n * delta / b + (math.log(b) + EULER_GAMMA) / mu


def _pareto_args(n, b, sigma, alpha):
    check_divides(n, b)
    if not sigma > 0 or not alpha > 0:
        raise DomainError("Pareto needs sigma > 0 and alpha > 0")
    return b / (n * alpha)


def _log_raw_moment(b: int, x: float, order: int) -> float:
    # log of E[max^order] / scale^order for the max of b Pareto(1, 1/x) variables
    return log_gamma(b + 1) + log_gamma(1 - order * x) - log_gamma(b + 1 - order * x)


def pareto_mean_T(n: int, b: int, sigma: float, alpha: float) -> float:
    x = _pareto_args(n, b, sigma, alpha)
    if n * alpha <= b:
        raise InfiniteMomentError(f"infinite mean: N*alpha={n * alpha:g} <= B={b}")
    return n * sigma / b * math.exp(_log_raw_moment(b, x, 1))


def pareto_var_T(n: int, b: int, sigma: float, alpha: float) -> float:
    x = _pareto_args(n, b, sigma, alpha)
    if n * alpha <= 2 * b:
        raise InfiniteMomentError(f"infinite variance: N*alpha={n * alpha:g} <= 2B={2 * b}")
    s = n * sigma / b
    second = math.exp(_log_raw_moment(b, x, 2))
    first = math.exp(_log_raw_moment(b, x, 1))
    return s * s * (second - first * first)


def pareto_cov_T(n: int, b: int, sigma: float, alpha: float) -> float:
    """Coefficient of variation, computed from the first two raw moments.

    Independent of ``sigma``.
    """
    x = _pareto_args(n, b, sigma, alpha)
    if n * alpha <= 2 * b:
        raise InfiniteMomentError(f"infinite variance: N*alpha={n * alpha:g} <= 2B={2 * b}")
    log_ratio = _log_raw_moment(b, x, 2) - 2 * _log_raw_moment(b, x, 1)
    return math.sqrt(math.expm1(log_ratio))


def pareto_cov_T_published(n: int, b: int, sigma: float, alpha: float) -> float:
    """The Gamma-ratio CoV expression as it appears in the literature.

    It drops a factor ``Gamma(B+1) Gamma(1-x) / Gamma(B+1-x)`` relative to
    :func:`pareto_cov_T` and disagrees with simulation; kept for comparison.
    """
    x = _pareto_args(n, b, sigma, alpha)
    if n * alpha <= 2 * b:
        raise InfiniteMomentError(f"infinite variance: N*alpha={n * alpha:g} <= 2B={2 * b}")
    val = (
        log_gamma(b + 1 - x) + log_gamma(1 - 2 * x) - log_gamma(b + 1 - 2 * x) - log_gamma(1 - x)
    )
    return math.sqrt(math.expm1(val))


def mean_T(n: int, b: int, dist: ServiceDistribution) -> float:
    """Mean job time of ``balanced_plan(n, b)`` under ``dist``."""
    if isinstance(dist, SExp):
        return sexp_mean_T(n, b, dist.delta, dist.mu)
    if isinstance(dist, Exp):
        return sexp_mean_T(n, b, 0.0, dist.mu)
    if isinstance(dist, Pareto):
        return pareto_mean_T(n, b, dist.sigma, dist.alpha)
    raise UnsupportedClosedFormError(f"no closed form for {dist.name}; use simulation")


def cov_T(n: int, b: int, dist: ServiceDistribution) -> float:
    """Coefficient of variation of the job time of ``balanced_plan(n, b)``."""
    if isinstance(dist, SExp):
        return sexp_cov_T(n, b, dist.delta, dist.mu)
    if isinstance(dist, Exp):
        return sexp_cov_T(n, b, 0.0, dist.mu)
    if isinstance(dist, Pareto):
        return pareto_cov_T(n, b, dist.sigma, dist.alpha)
    raise UnsupportedClosedFormError(f"no closed form for {dist.name}; use simulation")
