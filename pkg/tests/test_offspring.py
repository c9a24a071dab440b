import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gwbound.errors import ConfigError, DomainError, RangeError
from gwbound.offspring import (
    CustomLaw,
    ExplicitFinite,
    GeometricShifted,
    GeometricTail,
    PowerTail,
    analytic_metadata,
    extinction_prob,
    law_from_config,
    pgf_eval,
    pgf_inverse_iterate,
    pgf_iterate,
    sierpinski_law,
    tilde_law,
)


class TestPgfEval:
    def test_normalization(self, law_quarter):
        assert pgf_eval(law_quarter, 1.0) == pytest.approx(1.0, abs=1e-15)

    def test_value_at_zero_is_p0(self, law_quarter):
        assert pgf_eval(law_quarter, 0.0) == 0.25

    def test_geomshift_closed_form(self, law_geom1):
        # f(s) = s/(5 - 4s) at s = 1/2
        assert pgf_eval(law_geom1, 0.5) == pytest.approx(0.5 / 3.0, rel=1e-14)

    def test_domain_errors(self, law_geom1):
        with pytest.raises(DomainError):
            pgf_eval(law_geom1, -0.1)
        with pytest.raises(DomainError):
            pgf_eval(law_geom1, 1.3)  # S0 = 1.25

    def test_increasing_convex_on_unit_interval(self, law_quarter):
        s = np.linspace(0.0, 1.0, 41)
        v = np.array([pgf_eval(law_quarter, x) for x in s])
        assert np.all(np.diff(v) > 0)
        assert np.all(np.diff(v, 2) > -1e-12)


class TestPgfIterate:
    def test_geomshift_two_steps(self, law_geom1):
        assert pgf_iterate(law_geom1, 2, 0.5) == pytest.approx(0.5 / 13.0,
                                                               rel=1e-13)

    def test_fixed_point_of_normalization(self, law_quarter, law_geom1):
        for law in (law_quarter, law_geom1):
            assert pgf_iterate(law, 3, 1.0) == pytest.approx(1.0, abs=1e-12)

    def test_hand_composition(self, law_quarter):
        # f(0) = 1/4, f(1/4) = 1/4 + 1/16 + 1/32
        assert pgf_iterate(law_quarter, 2, 0.0) == pytest.approx(0.34375,
                                                                 abs=1e-15)

    def test_overflow_past_domain(self, law_geom1):
        with pytest.raises(OverflowError):
            pgf_iterate(law_geom1, 8, 1.2)

    @pytest.mark.parametrize("k", [1, 2, 3])
    def test_closed_form_matches_generic_composition(self, k):
        # generic composition through single pgf evaluations against the
        # closed-form iterate; above s=1 the iterate domain shrinks to the
        # sliver below (a^n/(a^n-1))^(1/k), where conditioning blows up, so
        # the unit interval binds at 1e-12 and the sliver point relatively
        law = GeometricShifted(5.0, k)
        for n in (1, 2, 4, 8):
            for s in np.linspace(0.0, 1.0, 23):
                x = s
                for _ in range(n):
                    x = law.pgf(x)
                assert x == pytest.approx(law.pgf_iterate_closed(n, s),
                                          abs=1e-12)
            s_max = (5.0**n / (5.0**n - 1.0)) ** (1.0 / k)
            s = 1.0 + 0.5 * (s_max - 1.0)
            x = s
            for _ in range(n):
                x = law.pgf(x)
            assert x == pytest.approx(law.pgf_iterate_closed(n, s), rel=1e-8)

    @given(s=st.floats(0.0, 1.0), n=st.integers(1, 5), m=st.integers(1, 5))
    @settings(max_examples=60, deadline=None)
    def test_semigroup_property(self, s, n, m):
        law = ExplicitFinite([0.25, 0.25, 0.5])
        lhs = pgf_iterate(law, n + m, s)
        rhs = pgf_iterate(law, n, pgf_iterate(law, m, s))
        assert lhs == pytest.approx(rhs, abs=1e-10)


class TestInverseIterate:
    def test_round_trip_identity(self, law_geom1):
        t = pgf_eval(law_geom1, 0.5)
        assert pgf_inverse_iterate(law_geom1, 1, t) == pytest.approx(0.5,
                                                                     abs=1e-10)

    def test_fixed_point(self, law_quarter, law_geom1):
        for law in (law_quarter, law_geom1):
            assert pgf_inverse_iterate(law, 4, 1.0) == pytest.approx(1.0,
                                                                     abs=1e-10)

    def test_closed_form_inverse_of_f2(self, law_geom1):
        # solve s/(25 - 24 s) = 4/3 by hand: s = 100/(3 + 24*4/3*...) ->
        # 3 s = 4 (25 - 24 s) -> s (3 + 96) = 100 -> s = 100/99
        x = pgf_inverse_iterate(law_geom1, 2, 4.0 / 3.0)
        assert x == pytest.approx(100.0 / 99.0, rel=1e-13)

    def test_round_trips_on_grid(self, law_sierpinski):
        for n in (1, 2, 5, 10):
            for t in (0.3, 0.8, 1.0, 1.7, 3.0):
                x = pgf_inverse_iterate(law_sierpinski, n, t, tol=1e-9)
                back = x
                for _ in range(n):
                    back = law_sierpinski.pgf(back)
                assert back == pytest.approx(t, abs=1e-8)

    def test_below_fixed_point_is_range_error(self, law_quarter):
        with pytest.raises(RangeError):
            pgf_inverse_iterate(law_quarter, 2, 0.3)  # q = 0.5


class TestExtinction:
    def test_quarter_law_root(self, law_quarter):
        # 2 s^2 - 3 s + 1 = 0 has roots 1/2 and 1
        assert extinction_prob(law_quarter) == pytest.approx(0.5, abs=1e-10)

    def test_zero_iff_p0_zero(self, law_geom1, law_sierpinski):
        assert extinction_prob(law_geom1) == 0.0
        assert extinction_prob(law_sierpinski) == 0.0

    def test_pgf_above_diagonal_between_roots(self, law_quarter):
        q = extinction_prob(law_quarter)
        for s in np.linspace(q + 0.01, 0.99, 9):
            assert pgf_eval(law_quarter, s) < s


class TestTildeLaw:
    def test_identity_when_no_extinction(self, law_geom1):
        assert tilde_law(law_geom1) is law_geom1

    def test_quarter_law_coefficients(self, law_quarter):
        # expand (f(1/2 + s/2) - 1/2) * 2 = (3/4) s + (1/4) s^2
        t = tilde_law(law_quarter)
        assert t.pmf_head() == pytest.approx([0.0, 0.75, 0.25], abs=1e-12)

    def test_no_mass_at_zero_and_mean_preserved(self, law_quarter):
        t = tilde_law(law_quarter)
        assert t.pmf_head()[0] == 0.0
        assert t.mean_a == pytest.approx(law_quarter.mean_a, rel=1e-12)


class TestMetadata:
    def test_binary_law(self, law_binary):
        md = analytic_metadata(law_binary)
        assert md.max_support_M == 2
        assert md.mean_a == pytest.approx(1.6)
        assert md.gamma == pytest.approx(math.log(2) / math.log(1.6), rel=1e-12)
        assert md.gamma > 1
        assert md.radius_S0 == math.inf
        assert md.regime == "bounded_support"

    def test_geomshift(self, law_geom1):
        md = analytic_metadata(law_geom1)
        assert md.radius_S0 == pytest.approx(1.25)
        assert md.max_support_M == math.inf
        assert md.moment_theta0 == math.inf
        assert md.regime == "exponential_boundary"
        assert md.gamma is None

    def test_powertail(self, law_power3):
        md = analytic_metadata(law_power3)
        assert md.moment_theta0 == 3.0
        assert md.radius_S0 == 1.0  # no exponential moment
        assert md.regime == "power_tail"

    def test_regime_exclusivity(self, law_binary, law_geom1, law_power3):
        # exactly one driving flag per law: bounded support, a pgf radius
        # strictly inside (1, inf), or a finite moment boundary
        flags = []
        for law in (law_binary, law_geom1, law_power3):
            md = analytic_metadata(law)
            flags.append((md.max_support_M < math.inf,
                          1.0 < md.radius_S0 < math.inf,
                          md.moment_theta0 < math.inf))
        assert flags == [(True, False, False), (False, True, False),
                         (False, False, True)]
        for f in flags:
            assert sum(f) == 1

    def test_mean_identity_numeric_derivative(self, law_quarter, law_geom1,
                                               law_sierpinski, law_power3):
        # second-order one-sided stencil at s = 1-
        for law in (law_quarter, law_geom1, law_sierpinski, law_power3):
            h = 1e-5
            d = (3.0 * law.pgf(1.0) - 4.0 * law.pgf(1.0 - h)
                 + law.pgf(1.0 - 2 * h)) / (2.0 * h)
            assert d == pytest.approx(law.mean_a, abs=1e-6)


class TestValidation:
    def test_one_point_support_rejected(self):
        with pytest.raises(DomainError):
            ExplicitFinite([0.0, 1.0])

    def test_subcritical_rejected(self):
        with pytest.raises(DomainError):
            ExplicitFinite([0.5, 0.5])

    def test_bad_normalization_rejected(self):
        with pytest.raises(DomainError):
            ExplicitFinite([0.3, 0.3, 0.3])

    def test_powertail_needs_theta_above_one(self):
        with pytest.raises(DomainError):
            PowerTail(1.0, [0.0, 0.4])

    def test_custom_law_boundary_certificate(self):
        law = CustomLaw(lambda n: 0.5 if n in (1, 3) else 0.0, mean_a=2.0)
        with pytest.raises(DomainError):
            law.moment_at_theta0_is_finite()


class TestSampling:
    def test_pmf_tables_normalized(self, law_geom1, law_sierpinski,
                                   law_power3):
        for law in (law_geom1, law_sierpinski, law_power3):
            total = law.pmf_head().sum() + law.tail_mass_beyond_head()
            assert total == pytest.approx(1.0, abs=1e-9)

    def test_geomshift_k2_pmf_profile(self):
        # p_{1+2m} = 5^{-1/2} (1/2)_m / m! (4/5)^m; support {1, 3, 5, ...}
        law = GeometricShifted(5.0, 2)
        head = law.pmf_head()
        assert head[0] == 0.0 and head[2] == 0.0
        assert head[1] == pytest.approx(5.0**-0.5, rel=1e-13)
        assert head[3] == pytest.approx(5.0**-0.5 * 0.5 * 0.8, rel=1e-13)

    def test_grouped_sums_match_law_mean(self, law_sierpinski, rng):
        z = np.full(50, 10_000, dtype=np.int64)
        sums = law_sierpinski.sum_offspring(rng, z)
        assert sums.mean() / 10_000 == pytest.approx(5.0, abs=0.05)

    def test_sampler_mean(self, law_power3, rng):
        x = law_power3.sample(rng, 200_000)
        se = x.std() / math.sqrt(x.size)
        assert abs(x.mean() - law_power3.mean_a) < 4 * se


class TestConfig:
    def test_round_trip(self, law_geom1, law_binary, law_sierpinski):
        for law in (law_geom1, law_binary, law_sierpinski):
            again = law_from_config(law.to_config())
            assert type(again) is type(law)
            assert again.mean_a == pytest.approx(law.mean_a, rel=1e-12)

    def test_sierpinski_alias(self):
        law = law_from_config({"kind": "sierpinski"})
        assert law.mean_a == pytest.approx(5.0)
        assert law.radius_S0 == pytest.approx(4.0 / 3.0)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigError):
            law_from_config({"kind": "zeta"})

    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError):
            law_from_config({"kind": "geomshift", "a": 5, "k": 1, "mean": 5})


@given(
    p0=st.floats(0.0, 0.3),
    p2=st.floats(0.55, 0.9),
)
@settings(max_examples=40, deadline=None)
def test_extinction_fixed_point_property(p0, p2):
    """f(q) = q and q < 1 for random supercritical three-point laws."""
    p1 = 1.0 - p0 - p2
    if p1 < 0:
        return
    law = ExplicitFinite([p0, p1, p2])
    if law.mean_a <= 1.05:
        return
    q = extinction_prob(law)
    assert 0.0 <= q < 1.0
    assert law.pgf(q) == pytest.approx(q, abs=1e-10)
    assert (q == 0.0) == (p0 == 0.0)
