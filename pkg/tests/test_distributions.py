import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from redplan.distributions import (
    Empirical,
    Exp,
    Pareto,
    SExp,
    classify_tail,
    fit_pareto,
    fit_sexp,
)
from redplan.errors import DomainError, InfiniteMomentError, UnsupportedClosedFormError

PARAMETRIC = [Exp(1.5), SExp(2.0, 3.0), Pareto(1.0, 2.5)]


def ks_distance(samples, dist):
    x = np.sort(samples)
    n = x.size
    cdf = 1.0 - dist.ccdf(x)
    upper = np.arange(1, n + 1) / n - cdf
    lower = cdf - np.arange(0, n) / n
    return float(max(upper.max(), lower.max()))


class TestCcdf:
    def test_exp_at_zero(self):
        assert Exp(1).ccdf(0) == 1.0

    def test_sexp_below_shift(self):
        assert SExp(2, 3).ccdf(1) == 1.0

    def test_pareto_value(self):
        assert Pareto(1, 2).ccdf(2) == pytest.approx(0.25)

    def test_pareto_value_matches_sampling(self):
        x = Pareto(1, 2).sample(np.random.default_rng(3), size=10**6)
        assert np.mean(x > 2) == pytest.approx(0.25, abs=3e-3)

    def test_empirical_fraction_above(self):
        d = Empirical([1, 2, 2, 4])
        assert d.ccdf(2) == 0.25
        assert d.ccdf(0.5) == 1.0

    @pytest.mark.parametrize("dist", PARAMETRIC)
    def test_monotone_and_bounded(self, dist):
        xs = np.linspace(-1, 50, 2001)
        c = dist.ccdf(xs)
        assert np.all(np.diff(c) <= 0)
        assert np.all(c[xs < dist.support_min] == 1.0)
        assert dist.ccdf(1e6) < 1e-6


class TestSample:
    def test_exp_inverse_transform(self):
        assert Exp(1).from_uniform(0.5) == pytest.approx(math.log(2))
        assert Exp(1).from_uniform(0.5) == pytest.approx(0.6931, abs=1e-4)

    def test_pareto_inverse_transform(self):
        assert Pareto(1, 2).from_uniform(0.25) == pytest.approx(2.0)

    @given(st.floats(min_value=1e-12, max_value=1.0))
    def test_sexp_respects_shift(self, u):
        assert SExp(0.7, 2.0).from_uniform(u) >= 0.7

    def test_scalar_draw(self):
        assert isinstance(Exp(1).sample(np.random.default_rng(0)), float)

    @pytest.mark.parametrize("dist", PARAMETRIC + [Empirical([0.5, 1.0, 3.0])])
    def test_seeded_draws_are_bit_identical(self, dist):
        a = dist.sample(np.random.default_rng(11), size=1000)
        b = dist.sample(np.random.default_rng(11), size=1000)
        assert a.tobytes() == b.tobytes()

    def test_empirical_bootstrap_picks_stored_values(self):
        d = Empirical([3.0, 1.0, 2.0])
        x = d.sample(np.random.default_rng(0), size=30000)
        assert set(np.unique(x)) == {1.0, 2.0, 3.0}
        for v in (1.0, 2.0, 3.0):
            assert np.mean(x == v) == pytest.approx(1 / 3, abs=0.01)

    def test_empirical_needs_samples(self):
        with pytest.raises(DomainError):
            Empirical([])


class TestScale:
    def test_exp(self):
        assert Exp(2).scale(2) == Exp(1)

    def test_sexp(self):
        scaled = SExp(0.05, 1).scale(100 / 5)
        assert scaled.delta == pytest.approx(1.0)
        assert scaled.mu == pytest.approx(0.05)

    def test_sexp_matches_scaled_samples(self):
        base = SExp(0.05, 1).sample(np.random.default_rng(5), size=10**5)
        assert ks_distance(20 * base, SExp(1, 0.05)) < 0.01

    def test_pareto(self):
        assert Pareto(1, 3).scale(4) == Pareto(4, 3)

    def test_empirical(self):
        assert Empirical([1, 2]).scale(3) == Empirical([3, 6])

    @pytest.mark.parametrize("c", [0, -1])
    def test_rejects_non_positive(self, c):
        with pytest.raises(DomainError):
            Exp(1).scale(c)

    @given(st.integers(-8, 8), st.integers(-8, 8))
    def test_composition_exact_for_powers_of_two(self, i, j):
        a, b = 2.0**i, 2.0**j
        for d in (Exp(1.3), SExp(0.4, 1.7), Pareto(0.9, 2.2)):
            assert d.scale(a).scale(b) == d.scale(a * b)

    @given(st.floats(0.01, 100), st.floats(0.01, 100))
    def test_composition_parameters(self, a, b):
        for d in (Exp(1.3), SExp(0.4, 1.7), Pareto(0.9, 2.2)):
            lhs, rhs = d.scale(a).scale(b).params(), d.scale(a * b).params()
            assert lhs == pytest.approx(rhs, rel=1e-14)


class TestMinOfIid:
    def test_examples(self):
        assert Exp(1).min_of_iid(4) == Exp(4)
        assert SExp(2, 1).min_of_iid(3) == SExp(2, 3)
        assert Pareto(1, 2).min_of_iid(1) == Pareto(1, 2)

    def test_empirical_has_no_closed_form(self):
        with pytest.raises(UnsupportedClosedFormError):
            Empirical([1, 2]).min_of_iid(2)

    @pytest.mark.parametrize("dist", PARAMETRIC)
    @pytest.mark.parametrize("k", range(1, 9))
    def test_matches_simulated_minimum(self, dist, k):
        rng = np.random.default_rng(100 + k)
        draws = dist.sample(rng, size=(10**5, k)).min(axis=1)
        assert ks_distance(draws, dist.min_of_iid(k)) < 0.01


class TestMoments:
    def test_examples(self):
        assert SExp(2, 1).mean() == 3.0
        assert Pareto(4, 8).mean() == pytest.approx(32 / 7)
        assert Exp(2).variance() == 0.25

    def test_pareto_divergent_moments(self):
        with pytest.raises(InfiniteMomentError):
            Pareto(1, 1).mean()
        with pytest.raises(InfiniteMomentError):
            Pareto(1, 2).variance()
        Pareto(1, 0.5).sample(np.random.default_rng(0), size=10)

    @pytest.mark.parametrize("dist", [Exp(2.0), SExp(1.0, 0.5), Pareto(4, 8), Pareto(1, 5)])
    def test_sample_moments_within_three_standard_errors(self, dist):
        x = dist.sample(np.random.default_rng(21), size=10**6)
        n = x.size
        m, v = x.mean(), x.var(ddof=1)
        m4 = np.mean((x - m) ** 4)
        assert abs(m - dist.mean()) <= 3 * math.sqrt(v / n)
        assert abs(v - dist.variance()) <= 3 * math.sqrt((m4 - v * v) / n)


class TestFit:
    def test_sexp_recovers_parameters(self):
        x = SExp(1, 2).sample(np.random.default_rng(1), size=10**5)
        fit = fit_sexp(x)
        assert 0.99 <= fit.delta <= 1.01
        assert 1.9 <= fit.mu <= 2.1

    def test_pareto_recovers_shape(self):
        x = Pareto(1, 3).sample(np.random.default_rng(2), size=10**5)
        assert 2.9 <= fit_pareto(x).alpha <= 3.1

    @pytest.mark.parametrize("fit", [fit_sexp, fit_pareto])
    def test_degenerate(self, fit):
        with pytest.raises(DomainError):
            fit([1, 1, 1])


class TestClassifyTail:
    def test_pareto_is_heavy(self):
        x = Pareto(1, 2).sample(np.random.default_rng(7), size=10**4)
        res = classify_tail(x)
        assert res.label == "heavy"
        assert res.r2_loglog > res.r2_semilog

    def test_shifted_exponential_is_exponential(self):
        x = SExp(10, 1).sample(np.random.default_rng(8), size=10**4)
        assert classify_tail(x).label == "exponential"

    def test_too_few_samples(self):
        with pytest.raises(DomainError):
            classify_tail(np.arange(1, 41, dtype=float))
