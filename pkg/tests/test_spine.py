import math

import numpy as np
import pytest
from scipy import stats as sps

from gwbound.errors import DomainError
from gwbound.spine import (
    increment_mean,
    rho_y_tail,
    sample_rho_y_increment,
    sample_size_biased_count,
    sample_y0_size_biased,
    sample_y_paths,
    size_biased_pmf,
)
from gwbound.tails import asymp_equiv_diagnostic, k_function
from gwbound.tree import sample_w


class TestSizeBiasedCount:
    def test_pmf_values(self, law_quarter):
        # n p_n / a with a = 1.25: mass 0.2 at 1 and 0.8 at 2
        q = size_biased_pmf(law_quarter)
        assert q[:3] == pytest.approx([0.0, 0.2, 0.8], abs=1e-15)
        assert q.sum() == pytest.approx(1.0, abs=1e-12)

    def test_never_zero(self, law_quarter, rng):
        draws = sample_size_biased_count(law_quarter, rng, 50_000)
        assert draws.min() >= 1

    def test_empirical_frequencies(self, law_quarter, rng):
        draws = sample_size_biased_count(law_quarter, rng, 100_000)
        freq = np.bincount(draws, minlength=3) / draws.size
        assert freq[1] == pytest.approx(0.2, abs=0.006)
        assert freq[2] == pytest.approx(0.8, abs=0.006)

    def test_geometric_second_moment_identity(self, law_geom1, rng):
        # E(Nhat) = E(N^2)/a; for the geometric family E(N^2) = 45 so 9
        draws = sample_size_biased_count(law_geom1, rng, 100_000)
        se = draws.std(ddof=1) / math.sqrt(draws.size)
        assert abs(draws.mean() - 9.0) <= 4 * se


class TestIncrements:
    def test_atom_at_zero(self, law_quarter, law_geom1, rng):
        # V = 0 exactly when every non-spine child subtree dies out (the
        # empty sum on Nhat = 1 included): P(V = 0) = f\'(q)/a.
        # quarter law: f\'(1/2)/a = 0.75/1.25 = 0.6; geometric: p1/a = 0.04
        for law, expect in ((law_quarter, 0.6), (law_geom1, 0.04)):
            v = sample_rho_y_increment(law, rng, 20_000)
            p_hat = (v == 0.0).mean()
            se = math.sqrt(expect * (1 - expect) / v.size)
            assert abs(p_hat - expect) <= 4 * se

    def test_mean_identity(self, law_geom1, rng):
        # E(V) = (E(Nhat) - 1)/a * E(W) = 8/5
        v = sample_rho_y_increment(law_geom1, rng, 30_000, w_depth=20)
        se = v.std(ddof=1) / math.sqrt(v.size)
        assert abs(v.mean() - 1.6) <= 4 * se
        assert increment_mean(law_geom1) == pytest.approx(1.6, rel=1e-9)

    def test_y0_mean_is_second_moment(self, ensembles):
        # E_Q(Y(0)) = E(V) a/(a-1) = 2 = E(W^2) for the Exp(1) limit
        y0 = np.concatenate([e.y_at(0) for e in ensembles])
        se = y0.std(ddof=1) / math.sqrt(y0.size)
        assert abs(y0.mean() - 2.0) <= 4 * se


@pytest.fixture(scope="module")
def ensembles(law_geom1):
    e1 = sample_y_paths(law_geom1, 10_000, depth_D=60,
                        rng=np.random.default_rng(101), w_depth=20)
    e2 = sample_y_paths(law_geom1, 10_000, depth_D=60,
                        rng=np.random.default_rng(202), w_depth=20)
    return e1, e2


class TestYPaths:

    def test_pathwise_monotone(self, ensembles):
        e1, _ = ensembles
        assert np.all(np.diff(e1.y, axis=1) <= 1e-15)

    def test_terminal_values_small(self, ensembles):
        e1, _ = ensembles
        assert np.median(e1.y_at(59)) < 1e-30

    def test_increment_relation(self, ensembles):
        # Y(-n) - Y(-n-1) = a^-n V_n
        e1, _ = ensembles
        n = 3
        lhs = e1.y_at(n) - e1.y_at(n + 1)
        rhs = 5.0**-n * e1.increments[:, n]
        assert lhs == pytest.approx(rhs, rel=1e-10)

    @pytest.mark.parametrize("n", [1, 2, 5])
    def test_shift_self_similarity(self, ensembles, n):
        e1, e2 = ensembles
        res = sps.ks_2samp(5.0**n * e1.y_at(n), e2.y_at(0))
        assert res.pvalue >= 0.01

    def test_increment_independence(self, ensembles):
        e1, _ = ensembles
        r = np.corrcoef(e1.increments[:, 0], e1.increments[:, 1])[0, 1]
        assert abs(r) <= 4.0 / math.sqrt(e1.n_paths)

    def test_normalized_y_matches_direct(self, law_geom1):
        ens = sample_y_paths(law_geom1, 500, depth_D=40,
                             rng=np.random.default_rng(7), w_depth=12)
        t = ens.normalized_y()
        for n in (0, 1, 5, 10):
            assert t[:, n] == pytest.approx(5.0**n * ens.y_at(n), rel=1e-9)

    def test_sampler_consistency(self, law_geom1, ensembles):
        # series construction against direct weighted resampling of plain W
        e1, _ = ensembles
        direct = sample_y0_size_biased(law_geom1, np.random.default_rng(35),
                                       10_000, w_depth=20, oversample=8)
        res = sps.ks_2samp(e1.y_at(0), direct)
        assert res.pvalue >= 0.01

    def test_size_bias_identity_weighted_ecdf(self, law_geom1, ensembles):
        # the ray-mass law at lag 0 equals the weight-tilted plain-W law
        from gwbound.stats import weighted_ecdf_vs_sample

        e1, _ = ensembles
        w = sample_w(law_geom1, 10_000, np.random.default_rng(44), depth=20)
        res = weighted_ecdf_vs_sample("identity", w, w, e1.y_at(0))
        assert res.passed

    def test_log_moment_stability(self, law_geom1, ensembles):
        # E log(1 v (Y(0) - Y(-l))) is finite and stable under doubling
        e1, _ = ensembles
        for ell in (1, 3):
            gap = e1.y_at(0) - e1.y_at(ell)
            vals = np.log(np.maximum(gap, 1.0))
            half = vals[: vals.size // 2].mean()
            full = vals.mean()
            se = vals.std(ddof=1) / math.sqrt(vals.size // 2)
            assert np.isfinite(full)
            assert abs(half - full) <= 4 * se

    def test_depth_validation(self, law_geom1):
        with pytest.raises(DomainError):
            sample_y_paths(law_geom1, 100, depth_D=0, seed=1)

    def test_tail_flag_off_for_deep_paths(self, ensembles):
        e1, _ = ensembles
        assert e1.tail_flag is False
        assert e1.tail_mean == pytest.approx(1.6 * 5.0**-59 / 4.0, rel=1e-9)


class TestSandwichComponents:
    def test_two_sided_bound_on_true_tails(self, law_geom1):
        # with eps solving (1-eps)^2 a = 1, the increment tail sandwiches
        # the lag-one difference of the ray-mass tail
        rng = np.random.default_rng(71)
        v = sample_rho_y_increment(law_geom1, rng, 20_000, w_depth=20)
        ens = sample_y_paths(law_geom1, 20_000, depth_D=50,
                             rng=np.random.default_rng(72), w_depth=20)
        y0 = ens.y_at(0)
        a = 5.0
        eps = 1.0 - a**-0.5
        grid = np.quantile(y0, np.linspace(0.5, 0.99, 12))

        def tail(s, x):
            s = np.sort(s)
            return 1.0 - np.searchsorted(s, x, side="right") / s.size

        rho_x = tail(v, grid)
        eta_x, eta_ax = tail(y0, grid), tail(y0, a * grid)
        lower = rho_x * (1.0 - eta_ax)
        middle = eta_x - eta_ax
        upper = 2.0 * tail(v, eps * grid)
        n = v.size
        slack = 3.0 * np.sqrt(2.0 / n)  # crude union of binomial errors
        assert np.all(lower <= middle + slack)
        assert np.all(middle <= upper + slack)


class TestRhoYTail:
    def test_decreasing_and_bounded(self, law_geom1):
        t = rho_y_tail(law_geom1, 5000, seed=5, w_depth=12)
        xs = np.linspace(0.0, 10.0, 50)
        vals = np.asarray(t(xs))
        assert np.all(vals <= 1.0) and np.all(vals >= 0.0)
        assert np.all(np.diff(vals) <= 1e-12)

    def test_needs_enough_samples(self, law_geom1):
        with pytest.raises(DomainError):
            rho_y_tail(law_geom1, 100, seed=1)

    def test_bounded_ratio_against_k_powertail(self, law_power3):
        # in the dominated regime the increment tail is two-sided comparable
        # to the integrated offspring tail over the well-sampled range
        t = rho_y_tail(law_power3, 40_000, seed=9, w_depth=10)
        samples = t.samples
        grid = np.quantile(samples[samples > 0], np.linspace(0.8, 0.999, 10))
        res = asymp_equiv_diagnostic(k_function(law_power3), t, grid)
        assert 0.0 < res["inf_ratio"] <= res["sup_ratio"] < math.inf
        assert res["sup_ratio"] / res["inf_ratio"] < 30.0
