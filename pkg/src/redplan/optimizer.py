"""Redundancy-level search over the diversity-parallelism spectrum.

``sweep`` evaluates a metric at every divisor ``B`` of ``N`` and is the
ground truth. The ``*_regime_*`` helpers evaluate published threshold rules
and always carry the sweep's answer next to the rule's, so disagreements are
visible instead of silently trusted.
"""

from __future__ import annotations

import bisect
import csv
import io
import json
import math
from dataclasses import dataclass, field

from . import analytics
from .assignment import balanced_plan
from .distributions import Empirical, Exp, Pareto, ServiceDistribution, SExp
from .errors import DomainError, InfiniteMomentError, NoRootError, UnsupportedClosedFormError
from .simulation import SimConfig, fmt, simulate

__all__ = [
    "feasible_B",
    "SweepRow",
    "RedundancySweep",
    "RegimeReport",
    "sweep",
    "regime_of",
    "sexp_regime_mean",
    "sexp_fast_B",
    "sexp_regime_cov",
    "pareto_alpha_star",
    "pareto_alpha_star_residual",
    "pareto_regime_mean",
    "pareto_regime_cov",
]

FULL_DIVERSITY = "full_diversity"
INTERIOR = "interior"
FULL_PARALLELISM = "full_parallelism"
EITHER_END = "either_end"

ALPHA_BRACKET = (1 + 1e-6, 64.0)


def feasible_B(n: int) -> list[int]:
    """All divisors of ``n`` in increasing order."""
    if int(n) != n or n < 1:
        raise DomainError(f"N must be a positive integer, got {n!r}")
    small, large = [], []
    d = 1
    while d * d <= n:
        if n % d == 0:
            small.append(d)
            if d * d != n:
                large.append(n // d)
        d += 1
    return small + large[::-1]


def regime_of(b: int, n: int) -> str:
    if b == 1:
        return FULL_DIVERSITY
    if b == n:
        return FULL_PARALLELISM
    return INTERIOR


@dataclass(frozen=True)
class SweepRow:
    b: int
    redundancy: int
    value: float  # math.inf where the metric diverges
    stderr: float | None = None

    @property
    def finite(self) -> bool:
        return math.isfinite(self.value)


@dataclass(frozen=True)
class RedundancySweep:
    n: int
    metric: str
    method: str
    rows: tuple[SweepRow, ...]
    best_b: int
    regime: str

    @property
    def best_value(self) -> float:
        return next(r.value for r in self.rows if r.b == self.best_b)

    def values(self) -> dict[int, float]:
        return {r.b: r.value for r in self.rows}

    def _table(self) -> list[dict]:
        return [
            {
                "B": r.b,
                "redundancy": r.redundancy,
                "metric": fmt(r.value) if r.finite else None,
                "is_argmin": r.b == self.best_b,
            }
            for r in self.rows
        ]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["B", "redundancy", "metric", "is_argmin"])
        for row in self._table():
            m = row["metric"]
            writer.writerow([row["B"], row["redundancy"], "" if m is None else f"{m:.9g}", int(row["is_argmin"])])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "metric": self.metric,
            "method": self.method,
            "best_b": self.best_b,
            "regime": self.regime,
            "rows": self._table(),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _argmin(rows) -> int:
    finite = [r for r in rows if r.finite]
    if not finite:
        raise InfiniteMomentError("metric is infinite at every feasible B")
    # Ties go to the smaller B (more diversity).
    return min(finite, key=lambda r: (r.value, r.b)).b


def sweep(
    n: int,
    dist: ServiceDistribution,
    metric: str = "mean",
    method: str = "analytic",
    config: SimConfig | None = None,
) -> RedundancySweep:
    """Evaluate ``metric`` ("mean" or "cov") at every feasible B.

    ``method="analytic"`` uses closed forms (SExp/Exp/Pareto only);
    ``method="simulate"`` runs the Monte Carlo engine with ``config``, using
    the same seed for every B.
    """
    if metric not in ("mean", "cov"):
        raise DomainError(f"metric must be 'mean' or 'cov', got {metric!r}")
    rows = []
    if method == "analytic":
        if isinstance(dist, Empirical) or not isinstance(dist, (Exp, SExp, Pareto)):
            raise UnsupportedClosedFormError(
                f"analytic sweep is not available for {dist.name}; use method='simulate'"
            )
        fn = analytics.mean_T if metric == "mean" else analytics.cov_T
        for b in feasible_B(n):
            try:
                value = fn(n, b, dist)
            except InfiniteMomentError:
                value = math.inf
            rows.append(SweepRow(b, n // b, value))
    elif method == "simulate":
        config = config or SimConfig()
        for b in feasible_B(n):
            res = simulate(balanced_plan(n, b), dist, config)
            if metric == "mean":
                rows.append(SweepRow(b, n // b, res.mean, res.stderr))
            else:
                rows.append(SweepRow(b, n // b, res.cov if res.cov is not None else math.inf))
    else:
        raise DomainError(f"method must be 'analytic' or 'simulate', got {method!r}")
    best = _argmin(rows)
    return RedundancySweep(n, metric, method, tuple(rows), best, regime_of(best, n))


@dataclass(frozen=True)
class RegimeReport:
    """A threshold rule's verdict next to the brute-force sweep's."""

    label: str
    thresholds: dict[str, float]
    sweep: RedundancySweep
    approximate: bool = False
    notes: tuple[str, ...] = field(default=())

    @property
    def sweep_label(self) -> str:
        return self.sweep.regime

    @property
    def agrees(self) -> bool:
        if self.label == EITHER_END:
            return self.sweep_label in (FULL_DIVERSITY, FULL_PARALLELISM)
        return self.label == self.sweep_label

    def to_dict(self) -> dict:
        return {
            "label": self.label,
            "thresholds": {k: fmt(v) for k, v in self.thresholds.items()},
            "sweep_best_b": self.sweep.best_b,
            "sweep_label": self.sweep_label,
            "agrees": self.agrees,
            "approximate": self.approximate,
            "notes": list(self.notes),
        }


def _half(n: int) -> tuple[int, bool]:
    approximate = n % 2 == 1 or n <= 4
    return max(n // 2, 1), approximate


def sexp_regime_mean(n: int, delta: float, mu: float) -> RegimeReport:
    """Where the mean job time is minimized, by the delta*mu threshold rule.

    Full diversity below ``1/N``, full parallelism above
    ``H(N) - H(N/2)``, interior in between.
    """
    half, approximate = _half(n)
    lower = 1.0 / n
    upper = analytics.harmonic(n) - analytics.harmonic(half)
    dm = delta * mu
    if dm < lower:
        label = FULL_DIVERSITY
    elif dm <= upper:
        label = INTERIOR
    else:
        label = FULL_PARALLELISM
    notes = ("N odd or <= 4: thresholds are approximate",) if approximate else ()
    return RegimeReport(
        label,
        {"lower": lower, "upper": upper, "delta_mu": dm},
        sweep(n, SExp(delta, mu), "mean"),
        approximate,
        notes,
    )


def sexp_fast_B(n: int, delta: float, mu: float) -> int:
    """Feasible B closest to ``N*delta*mu`` (ties to the smaller B)."""
    divisors = feasible_B(n)
    target = n * delta * mu
    i = bisect.bisect_left(divisors, target)
    if i == 0:
        return divisors[0]
    if i == len(divisors):
        return divisors[-1]
    lo, hi = divisors[i - 1], divisors[i]
    return lo if target - lo <= hi - target else hi


def sexp_cov_thresholds(n: int) -> dict[str, float]:
    half, _ = _half(n)
    h1, h2 = analytics.harmonic(n, 1), analytics.harmonic(n, 2)
    g1, g2 = analytics.harmonic(half, 1), analytics.harmonic(half, 2)
    return {
        "lower": 3.0 / ((math.sqrt(5) - 1) * n),
        "upper": (h1 * math.sqrt(g2) - g1 * math.sqrt(h2)) / (2 * math.sqrt(h2) - math.sqrt(g2)),
        "switch": h1 / (n * math.sqrt(h2) - 1),
    }


def sexp_regime_cov(n: int, delta: float, mu: float) -> RegimeReport:
    """Published rule for the CoV-minimizing end of the spectrum.

    These thresholds come from endpoint evaluations that drop a ``+1`` in
    the B=1 value, so they are advisory only; compare ``sweep_label``.
    """
    th = sexp_cov_thresholds(n)
    _, approximate = _half(n)
    dm = delta * mu
    notes = ["thresholds derived from approximate endpoint values; verify by sweep"]
    if dm < th["lower"]:
        label = FULL_PARALLELISM
    elif dm > th["upper"]:
        label = FULL_DIVERSITY
    elif n > 11:
        label = FULL_PARALLELISM if dm < th["switch"] else FULL_DIVERSITY
    else:
        label = EITHER_END
    if approximate:
        notes.append("N odd or <= 4: thresholds are approximate")
    return RegimeReport(
        label, {**th, "delta_mu": dm}, sweep(n, SExp(delta, mu), "cov"), approximate, tuple(notes)
    )


def pareto_alpha_star_residual(alpha: float, n: int) -> float:
    a = alpha
    return (
        (4 * a * a + (a - 1) ** 2) / (2 * a * (a - 1))
        - math.sqrt(math.pi) * n ** (-1 / (2 * a)) * 2 ** (1 + 1 / (2 * a))
        - 0.58
    )


def pareto_alpha_star(n: int, tol: float = 1e-6) -> float:
    """Pareto shape above which full parallelism minimizes the mean job time.

    Solved by bisection on ``(1 + 1e-6, 64]``.
    """
    if n <= 4:
        raise DomainError(f"alpha* is defined for N > 4, got N={n}")
    lo, hi = ALPHA_BRACKET
    f_lo, f_hi = pareto_alpha_star_residual(lo, n), pareto_alpha_star_residual(hi, n)
    if f_lo * f_hi > 0:
        raise NoRootError(f"no sign change of the alpha* equation on [{lo}, {hi}] for N={n}")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        f_mid = pareto_alpha_star_residual(mid, n)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def pareto_regime_mean(n: int, sigma: float, alpha: float) -> RegimeReport:
    a_star = pareto_alpha_star(n)
    label = FULL_PARALLELISM if alpha >= a_star else INTERIOR
    return RegimeReport(
        label,
        {"alpha_star": a_star, "alpha": alpha},
        sweep(n, Pareto(sigma, alpha), "mean"),
        notes=("alpha* equation uses a truncated expansion of Gamma near 0",),
    )


def pareto_regime_cov(n: int, sigma: float, alpha: float) -> RegimeReport:
    """CoV is minimized at full diversity; the sweep skips infinite-variance rows."""
    if n * alpha <= 2:
        raise InfiniteMomentError(f"infinite variance at B=1: N*alpha={n * alpha:g} <= 2")
    s = sweep(n, Pareto(sigma, alpha), "cov")
    skipped = tuple(r.b for r in s.rows if not r.finite)
    notes = (f"infinite variance for B in {list(skipped)}",) if skipped else ()
    return RegimeReport(FULL_DIVERSITY, {"alpha": alpha}, s, notes=notes)
