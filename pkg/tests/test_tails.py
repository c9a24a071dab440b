import math

import numpy as np
import pytest

from gwbound.errors import InsufficientGrid

from gwbound.tails import (
    BoundedSupportForm,
    EmpiricalForm,
    ExponentialForm,
    GeometricDecay,
    PowerDecay,
    PowerForm,
    SlowDecay,
    TailFunction,
    asymp_equiv_diagnostic,
    dominated_variation_test,
    empirical_tail,
    geometric_grid,
    k_eval,
    k_function,
    series_classifier,
)


def brute_force_k(law, x):
    """Independent oracle: K by direct summation of the survival steps.

    P(N > u) is constant on [m, m+1), so the integral is a finite sum of
    rectangle pieces plus the partial piece at x. Sums the in-table survival
    exactly; the implementation additionally integrates the analytic
    continuation beyond the table, so comparisons allow for that remainder.
    """
    head = law.pmf_head()
    suffix = np.concatenate((np.cumsum(head[::-1])[::-1][1:], [0.0]))
    m0 = int(math.floor(x))
    total = (m0 + 1 - x) * suffix[min(m0, suffix.size - 1)]
    total += suffix[m0 + 1 :].sum()
    return float(total)


class TestKFunction:
    def test_k_at_zero_is_mean(self, law_binary, law_geom1):
        assert k_eval(law_binary, 0.0) == pytest.approx(1.6, abs=1e-14)
        assert k_eval(law_geom1, 0.0) == pytest.approx(5.0, abs=1e-9)

    def test_piecewise_linear_value(self, law_binary):
        # P(N > u) = 0.8 on [1, 2); integrating from 1.5 to 2 gives 0.4
        assert k_eval(law_binary, 1.5) == pytest.approx(0.4, abs=1e-14)

    def test_vanishes_beyond_bounded_support(self, law_binary):
        assert k_eval(law_binary, 2.0) == 0.0
        assert k_eval(law_binary, 5.0) == 0.0

    @pytest.mark.parametrize("x", [0.0, 0.7, 1.5, 3.2, 10.0, 40.5])
    def test_matches_brute_force(self, law_geom1, law_power3, x):
        # geometric tails truncate below 1e-12 total mass; the power-tail
        # table leaves an analytic remainder of order 1e-8 at most
        assert k_eval(law_geom1, x) == pytest.approx(
            brute_force_k(law_geom1, x), rel=1e-9, abs=1e-10)
        assert k_eval(law_power3, x) == pytest.approx(
            brute_force_k(law_power3, x), rel=1e-3, abs=1e-7)

    def test_decreasing_and_convex(self, law_geom1, law_power3):
        xs = np.linspace(0.0, 30.0, 121)
        for law in (law_geom1, law_power3):
            k = k_function(law)
            v = np.asarray(k(xs))
            assert np.all(np.diff(v) <= 1e-12)
            assert np.all(np.diff(v, 2) >= -1e-9)

    def test_finite_differences_recover_survival(self, law_geom1):
        # -K'(x) = P(N > x) at non-integer points
        k = k_function(law_geom1)
        for x in (0.5, 1.5, 2.25, 6.75):
            h = 1e-6
            deriv = (k(x + h) - k(x - h)) / (2 * h)
            assert -deriv == pytest.approx(law_geom1.survival(int(x)),
                                           rel=1e-6, abs=1e-9)

    def test_powertail_analytic_continuation(self, law_power3):
        k = k_function(law_power3)
        c = law_power3.tail_coefficient()
        x = 5.0e4  # beyond the pmf table
        assert float(k(x)) == pytest.approx(c * x**-2.0 / 6.0, rel=1e-6)


class TestDominatedVariation:
    def test_power_tail_in_d(self):
        for p in (0.5, 1.0, 2.0):
            h = TailFunction(lambda x, p=p: x**-p, PowerForm(1.0, p))
            res = dominated_variation_test(h)
            assert res.in_D is True
            assert res.liminf_ratio == pytest.approx(2.0**-p, abs=1e-9)
            assert res.certificate == "analytic"

    def test_bounded_support_not_in_d(self, law_binary):
        res = dominated_variation_test(k_function(law_binary))
        assert res.in_D is False and res.certificate == "analytic"

    def test_geometric_not_in_d(self, law_geom1):
        res = dominated_variation_test(k_function(law_geom1))
        assert res.in_D is False and res.liminf_ratio == 0.0

    def test_k_of_powertail_certified(self, law_power3):
        res = dominated_variation_test(k_function(law_power3))
        assert res.in_D is True
        assert res.liminf_ratio == pytest.approx(0.25, abs=1e-9)

    def test_numeric_advisory_on_exponential_samples(self):
        h = TailFunction(lambda x: np.exp(-x), EmpiricalForm(0))
        res = dominated_variation_test(h, geometric_grid(1e-2, 1e2))
        assert res.certificate == "numeric"
        assert res.in_D is False  # decisively decaying ratio trend

    def test_numeric_power_stays_advisory(self):
        h = TailFunction(lambda x: x**-2.0, EmpiricalForm(0))
        res = dominated_variation_test(h, geometric_grid(1.0, 1e5))
        assert res.certificate == "numeric"
        assert res.in_D is None  # a finite grid cannot certify membership
        assert res.liminf_ratio == pytest.approx(0.25, rel=1e-6)

    def test_insufficient_grid(self):
        h = TailFunction(lambda x: np.exp(-x), EmpiricalForm(0))
        with pytest.raises(InsufficientGrid):
            dominated_variation_test(h, geometric_grid(0.1, 100.0))
        underflow = TailFunction(
            lambda x: np.where(x < 2.0, 1.0, 0.0), EmpiricalForm(0)
        )
        with pytest.raises(InsufficientGrid):
            dominated_variation_test(underflow, geometric_grid(1.0, 1e5))


class TestSeriesClassifier:
    def test_analytic_power_rules(self):
        assert series_classifier(None, asymp=PowerDecay(2.0)).verdict == "converges"
        assert series_classifier(None, asymp=PowerDecay(0.8)).verdict == "diverges"
        assert series_classifier(None, asymp=PowerDecay(1.0)).verdict == "diverges"
        assert series_classifier(None, asymp=PowerDecay(1.0, 2.0)).verdict == "converges"
        assert series_classifier(None, asymp=PowerDecay(1.0, 1.0)).verdict == "diverges"
        assert series_classifier(None, asymp=GeometricDecay()).verdict == "converges"
        assert series_classifier(None, asymp=SlowDecay()).verdict == "diverges"

    def test_moment_boundary_threshold(self, law_power3):
        # composing K with n^b: converges exactly when b(theta-1) > 1
        theta = law_power3.moment_theta0
        b0 = 1.0 / (theta - 1.0)
        for b in (0.2, 0.4, 0.45):
            v = series_classifier(None, asymp=PowerDecay(b * (theta - 1.0)))
            assert v.verdict == "diverges", b
        for b in (0.55, 0.7, 1.5):
            v = series_classifier(None, asymp=PowerDecay(b * (theta - 1.0)))
            assert v.verdict == "converges", b
        assert b0 == 0.5

    def test_numeric_clear_cases(self):
        assert series_classifier(
            lambda n: 1.0 / np.maximum(n, 1) ** 2).verdict == "converges"
        assert series_classifier(
            lambda n: 1.0 / (np.asarray(n, float) + 1)).verdict == "diverges"
        assert series_classifier(
            lambda n: 1.0 / np.maximum(n, 1) ** 0.6).verdict == "diverges"
        assert series_classifier(
            lambda n: np.full(np.asarray(n).shape, 0.2)).verdict == "diverges"

    def test_numeric_terms_from_k_composition(self, law_power3):
        k = k_function(law_power3)
        res = series_classifier(lambda n: np.asarray(k(np.asarray(n, float) ** 0.8)))
        assert res.verdict == "converges"  # 0.8 * 2 = 1.6 > 1
        res = series_classifier(lambda n: np.asarray(k(np.asarray(n, float) ** 0.2)))
        assert res.verdict == "diverges"  # 0.4 < 1

    def test_honest_undecided_near_boundary(self):
        res = series_classifier(lambda n: 1.0 / np.maximum(n, 1) ** 1.02)
        assert res.verdict in ("undecided", "converges")
        floor = series_classifier(
            lambda n: np.where(np.asarray(n) < 500, 1e-3, 0.0))
        assert floor.verdict == "undecided"


class TestAsympEquiv:
    def test_identity(self):
        h = TailFunction(lambda x: 1.0 / (1.0 + x))
        res = asymp_equiv_diagnostic(h, h, np.linspace(1, 50, 25))
        assert res["sup_ratio"] == res["inf_ratio"] == 1.0

    def test_constant_multiple(self):
        h1 = TailFunction(lambda x: x**-2.0)
        h2 = TailFunction(lambda x: 3.0 * x**-2.0)
        res = asymp_equiv_diagnostic(h1, h2, np.geomspace(1, 100, 40))
        assert res["sup_ratio"] == pytest.approx(3.0, rel=1e-12)
        assert res["inf_ratio"] == pytest.approx(3.0, rel=1e-12)

    def test_divide_by_zero(self, law_binary):
        h1 = k_function(law_binary)  # vanishes past the support
        h2 = TailFunction(lambda x: np.exp(-x))
        with pytest.raises(ZeroDivisionError):
            asymp_equiv_diagnostic(h1, h2, np.linspace(1.0, 10.0, 5))

    def test_empirical_w_tail_vs_k(self, law_power3, rng):
        # x * P(W > x) stays two-sided comparable to K(x) over the sampled
        # range in the dominated regime (bounded ratios recorded, not limits)
        from gwbound.tree import sample_w

        w = sample_w(law_power3, 20_000, rng, depth=12)
        emp = empirical_tail(w)
        xw = TailFunction(lambda x: x * np.asarray(emp(x)))
        grid = np.quantile(w, np.linspace(0.5, 0.998, 15))
        res = asymp_equiv_diagnostic(k_function(law_power3), xw, grid)
        assert 0.0 < res["inf_ratio"] <= res["sup_ratio"] < math.inf
        assert res["sup_ratio"] / res["inf_ratio"] < 25.0
