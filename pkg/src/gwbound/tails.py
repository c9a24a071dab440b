"""Integrated offspring tails, dominated-variation tests and series verdicts.

The integrated tail ``K(x) = integral_x^inf P(N > u) du`` is the offspring-side
certificate for the right tail of the martingale limit. Whether ``K`` has
dominated variation (class ``D``: decreasing, positive, and
``liminf K(2x)/K(x) > 0``) splits the classification into its two main
branches, and convergence of ``sum_n K(g(n))`` decides the verdict inside
the dominated branch.

A finite grid can never certify a liminf at infinity, so numeric
dominated-variation and series verdicts are advisory; analytic certificates
are attached whenever the functional form is known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError, InsufficientGrid
from .offspring import (
    ExplicitFinite,
    GeometricShifted,
    GeometricTail,
    OffspringLaw,
    PowerTail,
)

__all__ = [
    "TailForm",
    "PowerForm",
    "BoundedSupportForm",
    "ExponentialForm",
    "EmpiricalForm",
    "ComposedForm",
    "TailFunction",
    "empirical_tail",
    "KFunction",
    "k_function",
    "k_eval",
    "geometric_grid",
    "dominated_variation_test",
    "DVResult",
    "SeriesResult",
    "series_classifier",
    "PowerDecay",
    "GeometricDecay",
    "SlowDecay",
    "asymp_equiv_diagnostic",
]


# ----------------------------------------------------------------------
# tail functions
# ----------------------------------------------------------------------

class TailForm:
    """Structural knowledge about a decreasing tail, for analytic verdicts."""


@dataclass(frozen=True)
class PowerForm(TailForm):
    """``h(x) ~ coeff * x^-exponent * (log x)^-log_exponent``."""
    coeff: float
    exponent: float
    log_exponent: float = 0.0


@dataclass(frozen=True)
class BoundedSupportForm(TailForm):
    """``h(x) = 0`` for ``x >= bound``."""
    bound: float


@dataclass(frozen=True)
class ExponentialForm(TailForm):
    """``h`` decays at least geometrically; ``h(2x)/h(x) -> 0``."""
    rate: float = math.nan


@dataclass(frozen=True)
class EmpiricalForm(TailForm):
    n_samples: int = 0
    support_max: float = math.nan


@dataclass(frozen=True)
class ComposedForm(TailForm):
    note: str = ""


@dataclass
class TailFunction:
    """A decreasing function on ``[0, inf)`` with optional structural form."""

    eval_fn: Callable[[np.ndarray], np.ndarray]
    form: TailForm = field(default_factory=ComposedForm)
    samples: np.ndarray | None = None  # sorted, for empirical reliability cuts

    def __call__(self, x):
        return self.eval_fn(np.asarray(x, dtype=float))


def empirical_tail(samples: np.ndarray) -> TailFunction:
    """Empirical survival function ``x -> #{samples > x}/n``."""
    s = np.sort(np.asarray(samples, dtype=float))
    n = s.size
    if n < 1:
        raise DomainError("empirical tail needs at least one sample")

    def sf(x):
        return 1.0 - np.searchsorted(s, x, side="right") / n

    return TailFunction(
        sf, EmpiricalForm(n_samples=n, support_max=float(s[-1])), samples=s
    )


# ----------------------------------------------------------------------
# the integrated tail K
# ----------------------------------------------------------------------

def _power_tail_k(law: PowerTail, x: float) -> float:
    """Leading-order analytic continuation of K beyond the pmf table."""
    from .offspring import _power_log_integral

    return (law.tail_coefficient() / law.theta
            * _power_log_integral(float(x), -law.theta, law.log_exponent))


class KFunction(TailFunction):
    """``K(x) = integral_x^inf P(N > u) du`` for an offspring law.

    ``P(N > u)`` is a right-continuous step function, so K is piecewise
    linear between integers and is evaluated exactly from suffix sums of the
    pmf table; power-tail laws get an analytic continuation beyond the table.
    Key identities: ``K(0) = E(N) = a``; for bounded support ``K(x) = 0``
    once ``x >= M``; K is decreasing and convex.
    """

    def __init__(self, law: OffspringLaw):
        self.law = law
        head = law.pmf_head()
        resid = law.tail_mass_beyond_head()
        # S[m] = P(N > m) for m = 0..cap-1
        s = np.concatenate((np.cumsum(head[::-1])[::-1][1:], [0.0])) + resid
        # R[m] = sum_{j >= m} S[j], within the table plus an analytic remainder
        remainder = self._suffix_remainder()
        r = np.concatenate((np.cumsum(s[::-1])[::-1], [0.0])) + remainder
        self._s = s
        self._r = r
        self._cap = head.size
        super().__init__(self._eval_vec, self._k_form())

    def _suffix_remainder(self) -> float:
        law = self.law
        if isinstance(law, PowerTail):
            # integral of the asymptotic survival beyond the table
            cap = law.pmf_head().size
            return _power_tail_k(law, cap - 0.5)
        return 0.0

    def _k_form(self) -> TailForm:
        law = self.law
        if law.max_support_M < math.inf:
            return BoundedSupportForm(bound=float(law.max_support_M))
        if isinstance(law, PowerTail):
            th = law.theta
            return PowerForm(
                coeff=law.tail_coefficient() / (th * (th - 1.0)),
                exponent=th - 1.0,
                log_exponent=law.log_exponent,
            )
        if isinstance(law, (GeometricShifted, GeometricTail)):
            r = (
                (law.a - 1.0) / law.a
                if isinstance(law, GeometricShifted)
                else law.ratio
            )
            return ExponentialForm(rate=-math.log(r))
        if law.radius_S0 < math.inf:
            return ExponentialForm(rate=math.log(law.radius_S0))
        return ComposedForm(note="no analytic tail form certified")

    def _eval_vec(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        if np.any(x < 0):
            raise DomainError("K is defined on x >= 0")
        out = np.empty_like(x)
        inside = x < self._cap - 1
        m = np.floor(x[inside]).astype(int)
        out[inside] = (m + 1 - x[inside]) * self._s[m] + self._r[m + 1]
        if np.any(~inside):
            out[~inside] = self._beyond_table(x[~inside])
        return float(out[0]) if scalar else out

    def _beyond_table(self, x):
        law = self.law
        if isinstance(law, PowerTail):
            return np.array([_power_tail_k(law, xi) for xi in x])
        # bounded support or sub-1e-12 residual geometric tails
        return np.zeros_like(x)


def k_function(law: OffspringLaw) -> KFunction:
    return KFunction(law)


def k_eval(law: OffspringLaw, x: float) -> float:
    """Point evaluation of the integrated tail; ``k_eval(law, 0) == mean_a``."""
    return float(k_function(law)(x))


# ----------------------------------------------------------------------
# dominated variation
# ----------------------------------------------------------------------

def geometric_grid(lo: float, hi: float, n: int = 200) -> np.ndarray:
    if not (0 < lo < hi):
        raise DomainError("grid needs 0 < lo < hi")
    return np.geomspace(lo, hi, n)


@dataclass
class DVResult:
    in_D: bool | None
    liminf_ratio: float
    certificate: str  # "analytic" | "numeric"
    detail: str = ""


def dominated_variation_test(h: TailFunction, grid: np.ndarray | None = None) -> DVResult:
    """Is ``liminf h(2x)/h(x) > 0``?

    Known forms get certified verdicts: a power tail is in ``D`` with limiting
    ratio ``2^-exponent``; bounded support and geometric decay are not in
    ``D``. Empirical or composed forms only ever get a numeric advisory:
    ``in_D`` is set to False when the ratio trend is decisively decaying and
    left None otherwise.
    """
    form = h.form
    if isinstance(form, PowerForm):
        return DVResult(True, 2.0**-form.exponent, "analytic",
                        "power tail: regular variation is in D")
    if isinstance(form, BoundedSupportForm):
        return DVResult(False, 0.0, "analytic",
                        "tail hits zero at finite x, violating positivity")
    if isinstance(form, ExponentialForm):
        return DVResult(False, 0.0, "analytic",
                        "geometric-type decay drives h(2x)/h(x) to 0")

    if grid is None:
        grid = geometric_grid(1.0, 1e5)
    grid = np.asarray(grid, dtype=float)
    if grid[-1] / grid[0] < 1e4:
        raise InsufficientGrid("dominated-variation grid must span >= 4 decades")
    hx = np.asarray(h(grid), dtype=float)
    h2x = np.asarray(h(2.0 * grid), dtype=float)
    pos = hx > 0
    if pos.sum() < max(8, grid.size // 4):
        raise InsufficientGrid(
            "tail underflows to zero over most of the grid; "
            "declare a BoundedSupport form if the support is finite"
        )
    ratios = h2x[pos] / hx[pos]
    lo_dec = ratios[: max(4, ratios.size // 4)]
    hi_dec = ratios[-max(4, ratios.size // 4):]
    min_ratio = float(ratios.min())
    decisively_decaying = hi_dec.max() < 0.05 and hi_dec.max() < 0.2 * max(
        lo_dec.min(), 1e-300
    )
    return DVResult(
        False if decisively_decaying else None,
        min_ratio,
        "numeric",
        "advisory: finite grids cannot certify a liminf at infinity",
    )


# ----------------------------------------------------------------------
# series classification
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class PowerDecay:
    """``term(n) ~ n^-p (log n)^-log_p``."""
    p: float
    log_p: float = 0.0


@dataclass(frozen=True)
class GeometricDecay:
    pass


@dataclass(frozen=True)
class SlowDecay:
    """Terms decaying slower than any power of ``1/n`` (log-type)."""


@dataclass
class SeriesResult:
    verdict: str  # "converges" | "diverges" | "undecided"
    partial_sums: np.ndarray
    rationale: str


def _eval_terms(term, ns: np.ndarray) -> np.ndarray:
    try:
        vals = np.asarray(term(ns), dtype=float)
        if vals.shape == ns.shape:
            return vals
    except (TypeError, ValueError):
        pass
    return np.array([float(term(int(n))) for n in ns])


def series_classifier(term, horizon: int = 100_000, asymp=None) -> SeriesResult:
    """Classify ``sum_n term(n)`` for nonnegative terms.

    With a recognized asymptotic ``asymp`` form the verdict is exact
    (p-series rule with logarithmic refinement). Otherwise partial sums are
    examined decade over decade: strongly shrinking decade increments give
    ``converges``, steady or growing increments give ``diverges``, and the
    honest answer near the boundary is ``undecided``.
    """
    if asymp is not None:
        if isinstance(asymp, PowerDecay):
            conv = asymp.p > 1.0 or (asymp.p == 1.0 and asymp.log_p > 1.0)
            return SeriesResult(
                "converges" if conv else "diverges",
                np.array([]),
                f"p-series rule at p={asymp.p}, log power {asymp.log_p}",
            )
        if isinstance(asymp, GeometricDecay):
            return SeriesResult("converges", np.array([]), "geometric decay")
        if isinstance(asymp, SlowDecay):
            return SeriesResult("diverges", np.array([]),
                                "terms decay slower than 1/n")
        raise DomainError(f"unknown asymptotic form {asymp!r}")

    horizon = int(max(horizon, 1000))
    ns = np.arange(horizon + 1)
    vals = _eval_terms(term, ns)
    if np.any(vals < -1e-15):
        raise DomainError("series terms must be nonnegative")
    vals = np.clip(vals, 0.0, None)
    csum = np.cumsum(vals)
    s_h, s_h10, s_h100 = csum[-1], csum[horizon // 10], csum[horizon // 100]
    g2, g1 = s_h - s_h10, s_h10 - s_h100

    tail_probe = vals[int(horizon * 0.9):]
    if tail_probe.max() == 0.0:
        last_pos = vals[vals > 0]
        if last_pos.size and last_pos[-1] < 1e-12 * vals.max():
            return SeriesResult(
                "converges", csum,
                "terms decayed smoothly below the floating-point floor",
            )
        return SeriesResult(
            "undecided", csum,
            "terms vanished within the horizon; possibly an estimator floor",
        )

    # primary rule: the local power exponent of the terms. The summability
    # boundary sits at exponent 1, and a slope fit over the last decades
    # separates the two sides far more sharply than partial-sum growth does.
    # The margin adapts to fit noise and to curvature of log(term) in log(n)
    # (empirical tails of exponential type drift upward through the window).
    fit = _term_exponent_fit(vals, horizon)
    rho = g2 / g1 if g1 > 0 else math.nan
    if fit is not None:
        p_hat, se, curv_span = fit
        margin = max(0.02, 8.0 * se, curv_span)
        if p_hat >= 1.0 + margin:
            return SeriesResult(
                "converges", csum,
                f"local term exponent {p_hat:.3f} exceeds 1 by > {margin:.3f}",
            )
        if p_hat <= 1.0 - margin:
            return SeriesResult(
                "diverges", csum,
                f"local term exponent {p_hat:.3f} below 1 by > {margin:.3f}",
            )
        if se < 0.01 and curv_span < 0.02 and not math.isnan(rho) and rho >= 0.99:
            return SeriesResult(
                "diverges", csum,
                f"boundary exponent with undiminished decade increments "
                f"(ratio {rho:.4f})",
            )
        return SeriesResult(
            "undecided", csum,
            f"local term exponent {p_hat:.3f} within {margin:.3f} of the "
            "summability boundary",
        )

    if g1 <= 0:
        return SeriesResult("undecided", csum, "no growth signal in the window")
    if rho <= 0.2 and g2 < 0.05 * max(s_h, 1e-300):
        return SeriesResult(
            "converges", csum,
            f"decade increments shrink fast (ratio {rho:.3g}); "
            f"extrapolated tail below 5% of the partial sum",
        )
    if rho >= 0.9:
        return SeriesResult(
            "diverges", csum,
            f"decade increments persist (ratio {rho:.3g} >= 0.9)",
        )
    if g2 < 1e-6 * max(s_h, 1e-300):
        return SeriesResult(
            "undecided", csum,
            "growth below 1e-6 over the last decade but no analytic form",
        )
    return SeriesResult("undecided", csum,
                        f"decade ratio {rho:.3g} in the ambiguous band")


def _term_exponent_fit(vals, horizon):
    """Slope of ``log term`` against ``log n`` over the deep window.

    Returns ``(p_hat, stderr, curvature_span)`` or None when the fit is
    unusable (too few positive points or not enough lever arm).
    """
    n_lo = max(10, int(horizon ** 0.3))
    sel = np.unique(np.geomspace(n_lo, horizon, 120).astype(int))
    v = vals[sel]
    pos = v > 0
    if pos.sum() < 12:
        return None
    ln = np.log(sel[pos].astype(float))
    lv = np.log(v[pos])
    if ln.max() - ln.min() < 1.2 * math.log(10.0):
        return None
    coef, cov = np.polyfit(ln, lv, 1, cov=True)
    p_hat = float(-coef[0])
    se = math.sqrt(max(cov[0][0], 0.0))
    b2 = np.polyfit(ln, lv, 2)[0]
    curv_span = float(abs(2.0 * b2 * (ln.max() - ln.min())))
    return p_hat, se, curv_span


# ----------------------------------------------------------------------
# bounded-ratio diagnostics
# ----------------------------------------------------------------------

def asymp_equiv_diagnostic(h1: TailFunction, h2: TailFunction,
                           grid: np.ndarray) -> dict:
    """sup and inf of ``h2/h1`` over the grid.

    A bounded-ratio check over a fixed range; it witnesses, never proves,
    the two-sided comparability of two tails.
    """
    grid = np.asarray(grid, dtype=float)
    v1 = np.asarray(h1(grid), dtype=float)
    v2 = np.asarray(h2(grid), dtype=float)
    if np.any(v1 <= 0.0):
        raise ZeroDivisionError("h1 vanishes on the grid")
    ratios = v2 / v1
    return {
        "sup_ratio": float(ratios.max()),
        "inf_ratio": float(ratios.min()),
        "n_points": int(grid.size),
    }
