"""Shared statistical checks: Kolmogorov-Smirnov variants and error bars.

All pass/fail decisions in the experiment reports flow through these
helpers so thresholds and sample sizes are computed one way, declared up
front, and echoed into every report line.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import special, stats

__all__ = [
    "CheckResult",
    "ks_one_sample",
    "ks_two_sample",
    "weighted_ecdf_vs_sample",
    "correlation_check",
    "mean_vs_target",
    "binomial_proportion_check",
]


@dataclass
class CheckResult:
    name: str
    passed: bool
    statistic: float
    threshold: float
    sample_size: int
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        tag = "PASS" if self.passed else "FAIL"
        return (f"[{tag}] {self.name}: stat={self.statistic:.6g} "
                f"threshold={self.threshold:.6g} n={self.sample_size}")

    def to_jsonable(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "statistic": float(self.statistic),
            "threshold": float(self.threshold),
            "sample_size": int(self.sample_size),
            "detail": {k: (v.item() if isinstance(v, np.generic) else v)
                       for k, v in self.detail.items()},
        }


def ks_one_sample(name: str, samples: np.ndarray, cdf,
                  alpha: float = 0.01, expect_pass: bool = True) -> CheckResult:
    """Two-sided one-sample KS at significance ``alpha``.

    ``expect_pass=False`` turns the check into a negative control: it passes
    when the test rejects.
    """
    samples = np.asarray(samples, dtype=float)
    res = stats.kstest(samples, cdf)
    ok = res.pvalue >= alpha
    return CheckResult(
        name=name,
        passed=ok if expect_pass else not ok,
        statistic=float(res.pvalue),
        threshold=alpha,
        sample_size=samples.size,
        detail={"D": float(res.statistic),
                "direction": "pass" if expect_pass else "must_reject"},
    )


def ks_two_sample(name: str, x: np.ndarray, y: np.ndarray,
                  alpha: float = 0.01) -> CheckResult:
    res = stats.ks_2samp(np.asarray(x, float), np.asarray(y, float))
    return CheckResult(
        name=name,
        passed=bool(res.pvalue >= alpha),
        statistic=float(res.pvalue),
        threshold=alpha,
        sample_size=min(len(x), len(y)),
        detail={"D": float(res.statistic)},
    )


def weighted_ecdf_vs_sample(name: str, base: np.ndarray, weights: np.ndarray,
                            other: np.ndarray, alpha: float = 0.01) -> CheckResult:
    """Sup distance between a weight-tilted ECDF and a plain ECDF.

    The tilted curve ``sum w 1{x <= t} / sum w`` plays the reference CDF;
    the threshold is the asymptotic two-sample Kolmogorov critical value at
    the nominal sample sizes.
    """
    base = np.asarray(base, dtype=float)
    weights = np.asarray(weights, dtype=float)
    other = np.asarray(other, dtype=float)
    order = np.argsort(base)
    bs = base[order]
    cw = np.cumsum(weights[order])
    cw /= cw[-1]
    grid = np.sort(np.concatenate([bs, other]))
    pos = np.searchsorted(bs, grid, side="right")
    f_w = np.where(pos > 0, cw[np.clip(pos - 1, 0, None)], 0.0)
    f_o = np.searchsorted(np.sort(other), grid, side="right") / other.size
    d = float(np.abs(f_w - f_o).max())
    n, m = base.size, other.size
    c_alpha = math.sqrt(-0.5 * math.log(alpha / 2.0))
    crit = c_alpha * math.sqrt((n + m) / (n * m))
    p_approx = float(special.kolmogorov(d / math.sqrt((n + m) / (n * m))))
    return CheckResult(
        name=name,
        passed=d <= crit,
        statistic=d,
        threshold=crit,
        sample_size=min(n, m),
        detail={"approx_pvalue": p_approx, "alpha": alpha},
    )


def correlation_check(name: str, x: np.ndarray, y: np.ndarray,
                      k_se: float = 4.0) -> CheckResult:
    """Sample correlation within ``k_se`` standard errors of zero."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    r = float(np.corrcoef(x, y)[0, 1])
    se = 1.0 / math.sqrt(x.size)
    return CheckResult(
        name=name, passed=abs(r) <= k_se * se, statistic=r,
        threshold=k_se * se, sample_size=x.size,
        detail={"k_se": k_se},
    )


def mean_vs_target(name: str, samples: np.ndarray, target: float,
                   k_se: float = 4.0) -> CheckResult:
    """Sample mean within ``k_se`` standard errors (from the same run)."""
    samples = np.asarray(samples, dtype=float)
    m = float(samples.mean())
    se = float(samples.std(ddof=1) / math.sqrt(samples.size))
    return CheckResult(
        name=name, passed=abs(m - target) <= k_se * se, statistic=m,
        threshold=k_se * se, sample_size=samples.size,
        detail={"target": target, "se": se, "k_se": k_se},
    )


def binomial_proportion_check(name: str, successes: int, n: int,
                              target_p: float, k_se: float = 3.0) -> CheckResult:
    p_hat = successes / n
    se = math.sqrt(max(target_p * (1.0 - target_p), 1e-12) / n)
    return CheckResult(
        name=name, passed=abs(p_hat - target_p) <= k_se * se,
        statistic=p_hat, threshold=k_se * se, sample_size=n,
        detail={"target": target_p, "se": se, "k_se": k_se},
    )
