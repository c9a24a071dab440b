"""Offspring distributions and their probability generating functions.

Every quantity downstream (integrated tails, martingale-limit samples, gauge
verdicts, exponential-moment constants) is read off an :class:`OffspringLaw`.
A law bundles the pmf ``{p_n}`` with the analytic metadata that drives the
regime logic:

* ``mean_a``      -- offspring mean ``a = E(N) > 1``
* ``extinction_q``-- first nonnegative root of ``f(s) = s``
* ``radius_S0``   -- ``sup{s > 0 : f(s) < inf}``
* ``moment_theta0``-- ``sup{theta >= 1 : E(N^theta) < inf}``
* ``max_support_M``-- ``sup{n : p_n > 0}``

Exactly one of the finiteness regimes (``M`` finite, ``S0`` finite, ``theta0``
finite) can hold; the ``regime`` property exposes which.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy import integrate, special, stats

from .errors import ConfigError, DomainError, NonConvergence, RangeError

__all__ = [
    "OffspringLaw",
    "ExplicitFinite",
    "GeometricShifted",
    "GeometricTail",
    "PowerTail",
    "CustomLaw",
    "AnalyticMetadata",
    "pgf_eval",
    "pgf_iterate",
    "pgf_inverse_iterate",
    "extinction_prob",
    "tilde_law",
    "analytic_metadata",
    "sierpinski_law",
    "law_from_config",
]

_BISECT_BUDGET = 200
_PMF_TAIL_TOL = 1e-12


def _power_log_integral(x: float, p: float, c: float) -> float:
    """``integral_x^inf y^p (log y)^-c dy`` for ``p < -1`` and ``x > 1``.

    Substituting ``y = x e^u`` turns the integrand into a clean decaying
    exponential, which plain power-form quadrature on an infinite interval
    handles poorly when the log factor is present.
    """
    if p >= -1.0:
        return math.inf
    if c == 0.0:
        return -(x ** (p + 1.0)) / (p + 1.0)
    lx = math.log(x)
    val, _ = integrate.quad(
        lambda u: math.exp((p + 1.0) * u) * (lx + u) ** -c,
        0.0, np.inf, limit=200,
    )
    return x ** (p + 1.0) * val

# regimes: exactly one of M, S0, theta0 finite, or none of them
REGIME_BOUNDED = "bounded_support"
REGIME_EXP = "exponential_boundary"
REGIME_POWER = "power_tail"
REGIME_LIGHT = "light_unbounded"


@dataclass(frozen=True)
class AnalyticMetadata:
    mean_a: float
    extinction_q: float
    radius_S0: float
    moment_theta0: float
    max_support_M: float  # math.inf when unbounded
    gamma: float | None  # log M / log a, defined only for 1 < M < inf
    regime: str


class OffspringLaw:
    """Base class: a supercritical offspring distribution with ``E(N) > 1``.

    Subclasses fill in the pmf, the pgf, and the analytic metadata. The
    standing assumptions (mean above one, support not a single point,
    ``E(N log N)`` finite) are enforced at construction time.
    """

    kind: str = "abstract"

    # ---- pmf / pgf primitives ----------------------------------------

    def pmf_head(self) -> np.ndarray:
        """pmf values ``p_0 .. p_cap`` covering all but ``tail_mass_beyond_head``."""
        raise NotImplementedError

    def tail_mass_beyond_head(self) -> float:
        return 0.0

    def pgf(self, s: float) -> float:
        raise NotImplementedError

    def pgf_finite_at(self, s: float) -> bool:
        return 0.0 <= s < self.radius_S0 or s <= 1.0

    def f_inverse(self, t: float) -> float:
        """Inverse of the pgf on the increasing branch above ``q``."""
        return self._f_inverse_bisect(t)

    # ---- metadata -----------------------------------------------------

    @property
    def mean_a(self) -> float:
        raise NotImplementedError

    @property
    def extinction_q(self) -> float:
        if not hasattr(self, "_q_cache"):
            self._q_cache = extinction_prob(self, tol=1e-14)
        return self._q_cache

    @property
    def radius_S0(self) -> float:
        raise NotImplementedError

    @property
    def moment_theta0(self) -> float:
        raise NotImplementedError

    @property
    def max_support_M(self) -> float:
        raise NotImplementedError

    @property
    def regime(self) -> str:
        if self.max_support_M < math.inf:
            return REGIME_BOUNDED
        if 1.0 < self.radius_S0 < math.inf:
            return REGIME_EXP
        if self.moment_theta0 < math.inf:
            # S0 = 1 here just records the absence of exponential moments
            return REGIME_POWER
        return REGIME_LIGHT

    def moment_at_theta0_is_finite(self) -> bool:
        """Whether ``E(N^theta0) < inf``; meaningful in the power regime only."""
        raise NotImplementedError(
            "moment finiteness at theta0 is only defined for power-tail laws"
        )

    # ---- distribution helpers ------------------------------------------

    def survival(self, m: int) -> float:
        """P(N > m)."""
        head = self.pmf_head()
        if m < 0:
            return 1.0
        if m + 1 >= head.size:
            return self.tail_mass_beyond_head() + 0.0
        return float(head[m + 1 :].sum()) + self.tail_mass_beyond_head()

    def moment(self, r: float) -> float:
        """E(N^r), ``inf`` when the moment diverges."""
        if r >= self.moment_theta0 and not (
            r == self.moment_theta0 and self._moment_boundary_finite()
        ):
            return math.inf
        head = self.pmf_head()
        n = np.arange(head.size, dtype=float)
        val = float(np.sum(np.power(n[1:], r) * head[1:]))
        return val + self._moment_tail_correction(r)

    def _moment_boundary_finite(self) -> bool:
        if self.moment_theta0 == math.inf:
            return True
        return self.moment_at_theta0_is_finite()

    def _moment_tail_correction(self, r: float) -> float:
        return 0.0

    def w_oracle(self):
        """Closed-form law of the martingale limit ``W``, when one is known."""
        return None

    # ---- sampling -------------------------------------------------------

    def sample(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """``size`` iid offspring counts, int64."""
        cdf = self._sampling_cdf()
        u = rng.random(size)
        return np.searchsorted(cdf, u, side="right").astype(np.int64)

    def sum_offspring(self, rng: np.random.Generator, z: np.ndarray) -> np.ndarray:
        """Vectorized sums of ``z[i]`` iid offspring counts.

        This is the replica-parallel fast path used for deep martingale-limit
        sampling; it consumes a different stream layout than per-node draws.
        """
        z = np.asarray(z, dtype=np.int64)
        out = np.zeros_like(z)
        alive = z > 0
        if not np.any(alive):
            return out
        out[alive] = self._sum_offspring_alive(rng, z[alive])
        return out

    def _sum_offspring_alive(self, rng, z):
        # generic fallback: draw every count individually
        total = int(z.sum())
        if total > 200_000_000:
            raise MemoryError(
                f"sum_offspring fallback would draw {total} counts; "
                "reduce depth or replicas"
            )
        draws = self.sample(rng, total)
        offsets = np.concatenate(([0], np.cumsum(z)[:-1]))
        return np.add.reduceat(draws, offsets)

    def _sampling_cdf(self) -> np.ndarray:
        if not hasattr(self, "_cdf_cache"):
            head = self.pmf_head()
            cdf = np.cumsum(head)
            # renormalize away the truncated tail mass (< 1e-12 of total)
            cdf /= cdf[-1]
            self._cdf_cache = cdf
        return self._cdf_cache

    # ---- shared numeric helpers ----------------------------------------

    def _f_inverse_bisect(self, t: float) -> float:
        q = self.extinction_q
        if t < q - 1e-15 or t < 0:
            raise RangeError(f"target {t} below the fixed point q={q}")
        if abs(t - 1.0) < 4e-16:
            return 1.0
        if t <= 1.0:
            lo, hi = q, 1.0
        else:
            lo = 1.0
            if self.radius_S0 < math.inf:
                hi = self.radius_S0
            else:
                hi = 2.0
                while self._pgf_guarded(hi) < t:
                    hi *= 2.0
                    if hi > 1e12:
                        raise RangeError(f"target {t} not attained by the pgf")
        for _ in range(_BISECT_BUDGET):
            mid = 0.5 * (lo + hi)
            if mid <= lo or mid >= hi:
                break
            if self._pgf_guarded(mid) < t:
                lo = mid
            else:
                hi = mid
            if hi - lo <= 1e-16 * max(1.0, abs(lo)):
                break
        return 0.5 * (lo + hi)

    def _pgf_guarded(self, s: float) -> float:
        try:
            v = self.pgf(s)
        except (OverflowError, DomainError):
            return math.inf
        if math.isnan(v):
            return math.inf
        return v

    def _validate_common(self):
        if not self.mean_a > 1.0:
            raise DomainError(f"offspring mean must exceed 1, got {self.mean_a}")
        head = self.pmf_head()
        support = np.flatnonzero(head > 0)
        if support.size + (self.tail_mass_beyond_head() > 0) < 2:
            raise DomainError("offspring support must not be a one-point set")

    # ---- config ---------------------------------------------------------

    def to_config(self) -> dict:
        raise NotImplementedError

    def describe(self) -> str:
        return f"{self.kind} law (a={self.mean_a:.6g})"


class ExplicitFinite(OffspringLaw):
    """Finite-support law given by an explicit pmf vector ``p_0 .. p_M``."""

    kind = "explicit"

    def __init__(self, pmf):
        p = np.asarray(pmf, dtype=float)
        if p.ndim != 1 or p.size < 2:
            raise DomainError("pmf must be a 1-d vector with at least two entries")
        if np.any(p < -1e-15):
            raise DomainError("pmf entries must be nonnegative")
        p = np.clip(p, 0.0, None)
        if abs(p.sum() - 1.0) > 1e-12:
            raise DomainError(f"pmf sums to {p.sum()!r}, not 1 within 1e-12")
        # drop trailing zeros so max_support_M is the true top of the support
        top = int(np.flatnonzero(p > 0)[-1])
        self._p = p[: top + 1].copy()
        self._mean = float(np.dot(np.arange(self._p.size), self._p))
        self._validate_common()

    def pmf_head(self):
        return self._p

    def pgf(self, s: float) -> float:
        if s < 0:
            raise DomainError("pgf evaluated at negative s")
        # Horner, highest coefficient first
        acc = 0.0
        for c in self._p[::-1]:
            acc = acc * s + c
        return acc

    @property
    def mean_a(self):
        return self._mean

    @property
    def radius_S0(self):
        return math.inf

    @property
    def moment_theta0(self):
        return math.inf

    @property
    def max_support_M(self):
        return float(self._p.size - 1)

    def _sum_offspring_alive(self, rng, z):
        counts = rng.multinomial(z, self._p)
        values = np.arange(self._p.size, dtype=np.int64)
        return counts @ values

    def to_config(self):
        return {"kind": "explicit", "pmf": [float(v) for v in self._p]}


class GeometricShifted(OffspringLaw):
    """The closed-form family ``f(s) = s / (a - (a-1) s^k)^(1/k)``.

    Iterates close under composition: ``f_n(s) = s/(a^n - (a^n-1)s^k)^(1/k)``,
    and the martingale limit is Gamma-distributed with shape ``1/k`` and
    scale ``k``. Support is ``{1, 1+k, 1+2k, ...}`` with

        p_{1+km} = a^(-1/k) * (1/k)_m / m! * ((a-1)/a)^m,

    a negative-binomial profile; for ``k = 1`` the pmf is exactly geometric
    on ``{1, 2, ...}`` with success probability ``1/a``.
    """

    kind = "geomshift"

    def __init__(self, a: float, k: int):
        if not a > 1:
            raise DomainError("family parameter a must exceed 1")
        if int(k) != k or k < 1:
            raise DomainError("family parameter k must be a positive integer")
        self.a = float(a)
        self.k = int(k)
        self._validate_common()

    def pmf_head(self):
        if not hasattr(self, "_head_cache"):
            a, k = self.a, self.k
            rho = (a - 1.0) / a
            terms = [a ** (-1.0 / k)]
            while sum(terms) < 1.0 - _PMF_TAIL_TOL and len(terms) < 400_000:
                m = len(terms)
                terms.append(terms[-1] * rho * (1.0 / k + m - 1) / m)
            head = np.zeros(1 + k * (len(terms) - 1) + 1)
            head[1 :: self.k] = terms[: (head.size - 1) // k + 1]
            self._head_cache = head[: 1 + k * (len(terms) - 1) + 1]
            self._tail_mass = max(0.0, 1.0 - float(self._head_cache.sum()))
        return self._head_cache

    def tail_mass_beyond_head(self):
        self.pmf_head()
        return self._tail_mass

    def pgf(self, s: float) -> float:
        return self.pgf_iterate_closed(1, s)

    def pgf_iterate_closed(self, n: int, s: float) -> float:
        """Closed-form ``f_n(s)``; raises OverflowError past the finiteness domain."""
        if s < 0:
            raise DomainError("pgf evaluated at negative s")
        A = self.a**n
        base = A - (A - 1.0) * s**self.k
        if base <= 0.0:
            raise OverflowError(f"f_{n}({s}) diverges (past the radius of finiteness)")
        return s / base ** (1.0 / self.k)

    def pgf_inverse_closed(self, n: int, t: float) -> float:
        """Exact algebraic inverse of ``f_n`` on the positive branch."""
        if t < 0:
            raise RangeError("inverse target must be nonnegative")
        A = self.a**n
        tk = t**self.k
        return (A * tk / (1.0 + (A - 1.0) * tk)) ** (1.0 / self.k)

    def inverse_iterate_gap_at_S0(self, n: int) -> float:
        """``(f_n)^{-1}(S0) - 1`` evaluated in cancellation-free form."""
        # (f_n)^{-1}(S0)^k = a^{n+1}/(a^{n+1}-1); expm1/log1p keep the gap exact
        return math.expm1(-math.log1p(-self.a ** -(n + 1)) / self.k)

    def f_inverse(self, t: float) -> float:
        return self.pgf_inverse_closed(1, t)

    @property
    def mean_a(self):
        return self.a

    @property
    def radius_S0(self):
        return (self.a / (self.a - 1.0)) ** (1.0 / self.k)

    @property
    def moment_theta0(self):
        return math.inf

    @property
    def max_support_M(self):
        return math.inf

    def moment(self, r):
        if r == 2:
            if self.k == 1:
                p = 1.0 / self.a
                return (2.0 - p) / (p * p)
        return super().moment(r)

    def w_oracle(self):
        return stats.gamma(a=1.0 / self.k, scale=float(self.k))

    def sample(self, rng, size):
        if self.k == 1:
            return rng.geometric(1.0 / self.a, size=size).astype(np.int64)
        g = rng.negative_binomial(1.0 / self.k, 1.0 / self.a, size=size)
        return (1 + self.k * g).astype(np.int64)

    def _sum_offspring_alive(self, rng, z):
        g = rng.negative_binomial(z / self.k, 1.0 / self.a)
        return z + self.k * g.astype(np.int64)

    def to_config(self):
        return {"kind": "geomshift", "a": self.a, "k": self.k}


class GeometricTail(OffspringLaw):
    """Geometric pmf started at ``start``: ``p_n = (1-r) r^(n-start)``.

    ``f(s) = (1-r) s^start / (1 - r s)`` with radius ``S0 = 1/r``. The
    Sierpinski-gasket generating function ``s^2/(4-3s)`` is ``start=2``,
    ``ratio=3/4``.
    """

    kind = "geomtail"

    def __init__(self, start: int, ratio: float):
        if int(start) != start or start < 1:
            raise DomainError("start must be an integer >= 1")
        if not 0.0 < ratio < 1.0:
            raise DomainError("ratio must lie in (0, 1)")
        self.start = int(start)
        self.ratio = float(ratio)
        self._validate_common()

    def pmf_head(self):
        if not hasattr(self, "_head_cache"):
            r = self.ratio
            n_top = self.start + max(
                4, int(math.ceil(math.log(_PMF_TAIL_TOL) / math.log(r)))
            )
            n = np.arange(n_top + 1)
            head = np.zeros(n_top + 1)
            head[self.start :] = (1 - r) * r ** (n[self.start :] - self.start)
            self._head_cache = head
            self._tail_mass = max(0.0, 1.0 - float(head.sum()))
        return self._head_cache

    def tail_mass_beyond_head(self):
        self.pmf_head()
        return self._tail_mass

    def survival(self, m):
        if m < self.start:
            return 1.0
        return self.ratio ** (m + 1 - self.start)

    def pgf(self, s: float) -> float:
        if s < 0:
            raise DomainError("pgf evaluated at negative s")
        if s >= self.radius_S0:
            raise OverflowError(f"pgf diverges at s={s} >= S0={self.radius_S0}")
        return (1.0 - self.ratio) * s**self.start / (1.0 - self.ratio * s)

    def f_inverse(self, t: float) -> float:
        r = self.ratio
        if self.start == 1:
            # (1-r)s = t(1-rs)  =>  s = t/(1-r+rt)
            return t / (1.0 - r + r * t)
        if self.start == 2:
            # (1-r)s^2 + trs - t = 0, positive root in rationalized form
            return 2.0 * t / (t * r + math.sqrt(t * t * r * r + 4.0 * (1.0 - r) * t))
        return self._f_inverse_bisect(t)

    @property
    def mean_a(self):
        return self.start + self.ratio / (1.0 - self.ratio)

    @property
    def radius_S0(self):
        return 1.0 / self.ratio

    @property
    def moment_theta0(self):
        return math.inf

    @property
    def max_support_M(self):
        return math.inf

    def sample(self, rng, size):
        g = rng.geometric(1.0 - self.ratio, size=size) - 1
        return (self.start + g).astype(np.int64)

    def _sum_offspring_alive(self, rng, z):
        g = rng.negative_binomial(z, 1.0 - self.ratio)
        return z * self.start + g.astype(np.int64)

    def to_config(self):
        return {"kind": "geomtail", "start": self.start, "ratio": self.ratio}


class PowerTail(OffspringLaw):
    """Law with an explicit head and a power tail.

    Beyond the head, ``p_n = c * n^(-theta-1) * (log n)^(-log_exponent)``.
    The moment boundary is ``theta0 = theta``; ``E(N^theta)`` is finite
    precisely when ``log_exponent > 1``, which is what splits the boundary
    case of the power-gauge dichotomy.

    The pmf table is truncated where the residual tail mass drops below
    ``table_tol``; the residual (default < 1e-10) is reported, and samplers
    renormalize over the table, which is invisible at Monte Carlo scale.
    """

    kind = "powertail"

    def __init__(self, theta: float, head, log_exponent: float = 0.0,
                 table_tol: float = 1e-10):
        if not theta > 1.0:
            raise DomainError("tail exponent theta must exceed 1")
        if log_exponent < 0.0:
            raise DomainError("log_exponent must be nonnegative")
        head = np.asarray(head, dtype=float)
        if head.ndim != 1 or np.any(head < 0):
            raise DomainError("head must be a nonnegative vector")
        hs = float(head.sum())
        if not hs < 1.0:
            raise DomainError("head mass must leave room for the tail")
        self.theta = float(theta)
        self.log_exponent = float(log_exponent)
        self._head_spec = head
        self._n_head = max(int(head.size), 2)
        self._table_tol = float(table_tol)
        self._build_table()
        self._validate_common()

    def _weight(self, n):
        n = np.asarray(n, dtype=float)
        w = n ** (-self.theta - 1.0)
        if self.log_exponent > 0:
            w = w / np.log(n) ** self.log_exponent
        return w

    def _weight_integral(self, x: float) -> float:
        """integral of the tail weight over (x, inf)."""
        return _power_log_integral(x, -self.theta - 1.0, self.log_exponent)

    def _build_table(self):
        tail_total_mass = 1.0 - float(self._head_spec.sum())
        n0 = self._n_head
        # unnormalized tail weight: discrete sum to a pivot + integral remainder
        pivot = max(n0 + 64, 1024)
        n = np.arange(n0, pivot)
        w_head = self._weight(n)
        total_w = float(w_head.sum()) + self._weight_integral(pivot - 0.5)
        self._c = tail_total_mass / total_w
        # extend the table until the residual mass is below table_tol
        cap = pivot
        while self._c * self._weight_integral(cap - 0.5) > self._table_tol:
            cap *= 2
            if cap > 1 << 26:
                break
        n_all = np.arange(self._n_head, cap)
        table = np.zeros(cap)
        table[: self._head_spec.size] = self._head_spec
        table[self._n_head :] = self._c * self._weight(n_all)
        self._table = table
        self._tail_mass = max(0.0, 1.0 - float(table.sum()))
        k = np.arange(cap, dtype=float)
        self._mean = float(np.dot(k, table)) + self._mean_tail_correction(cap)

    def _mean_tail_correction(self, cap):
        return self._c * _power_log_integral(cap - 0.5, -self.theta,
                                             self.log_exponent)

    def pmf_head(self):
        return self._table

    def tail_mass_beyond_head(self):
        return self._tail_mass

    def tail_coefficient(self) -> float:
        """Constant ``c`` in ``p_n ~ c n^(-theta-1) (log n)^(-log_exponent)``."""
        return self._c

    def pgf(self, s: float) -> float:
        if s < 0:
            raise DomainError("pgf evaluated at negative s")
        if s > 1.0:
            raise OverflowError("power-tail pgf diverges for s > 1 (S0 = 1)")
        table = self._table
        n = np.arange(table.size, dtype=float)
        return float(np.sum(table * s**n)) + self._tail_mass * s**table.size

    @property
    def mean_a(self):
        return self._mean

    @property
    def radius_S0(self):
        return 1.0

    @property
    def moment_theta0(self):
        return self.theta

    @property
    def max_support_M(self):
        return math.inf

    def moment_at_theta0_is_finite(self):
        return self.log_exponent > 1.0

    def _moment_tail_correction(self, r):
        # integral remainder of sum n^r p_n beyond the table
        cap = self._table.size
        return self._c * _power_log_integral(cap - 0.5, r - self.theta - 1.0,
                                             self.log_exponent)

    def survival_asymptotic(self, x: float) -> float:
        """Analytic ``P(N > x)`` continuation beyond the table."""
        return self._c * self._weight_integral(float(x))

    def to_config(self):
        return {
            "kind": "powertail",
            "theta": self.theta,
            "head": [float(v) for v in self._head_spec],
            "log_exponent": self.log_exponent,
        }


class CustomLaw(OffspringLaw):
    """A pmf accessor plus certified metadata.

    Tail properties (``S0``, ``theta0``, moment finiteness at the boundary,
    the ``E(N log N)`` standing assumption) cannot be inferred from finitely
    many pmf values, so they are taken on trust from the caller.
    """

    kind = "custom"

    def __init__(self, pmf: Callable[[int], float], *, mean_a: float,
                 radius_S0: float = math.inf, moment_theta0: float = math.inf,
                 max_support_M: float = math.inf,
                 moment_at_theta0_finite: bool | None = None,
                 table_cap: int = 1 << 20):
        self._accessor = pmf
        self._mean = float(mean_a)
        self._S0 = float(radius_S0)
        self._theta0 = float(moment_theta0)
        self._M = max_support_M
        self._boundary_finite = moment_at_theta0_finite
        vals = []
        acc = 0.0
        n = 0
        while acc < 1.0 - _PMF_TAIL_TOL and n < table_cap:
            v = float(pmf(n))
            if v < 0:
                raise DomainError(f"pmf({n}) negative")
            vals.append(v)
            acc += v
            n += 1
            if self._M < math.inf and n > self._M:
                break
        self._table = np.asarray(vals)
        self._tail_mass = max(0.0, 1.0 - acc)
        self._validate_common()

    def pmf_head(self):
        return self._table

    def tail_mass_beyond_head(self):
        return self._tail_mass

    def pgf(self, s: float) -> float:
        if s < 0:
            raise DomainError("pgf evaluated at negative s")
        if s > 1.0 and s >= self._S0:
            raise OverflowError(f"pgf diverges at s={s} >= S0={self._S0}")
        n = np.arange(self._table.size, dtype=float)
        return float(np.sum(self._table * s**n))

    @property
    def mean_a(self):
        return self._mean

    @property
    def radius_S0(self):
        return self._S0

    @property
    def moment_theta0(self):
        return self._theta0

    @property
    def max_support_M(self):
        return self._M

    def moment_at_theta0_is_finite(self):
        if self._boundary_finite is None:
            raise DomainError(
                "custom law lacks a certificate for E(N^theta0) finiteness"
            )
        return self._boundary_finite

    def to_config(self):
        raise ConfigError("custom laws are not expressible in run configs")


# ----------------------------------------------------------------------
# module-level operations
# ----------------------------------------------------------------------

def pgf_eval(law: OffspringLaw, s: float) -> float:
    """``f(s) = sum p_n s^n``; DomainError outside ``[0, S0)``."""
    if s < 0:
        raise DomainError("pgf argument must be nonnegative")
    if s > 1.0 and s >= law.radius_S0:
        raise DomainError(f"s={s} is at or beyond the radius of finiteness")
    return law.pgf(s)


def pgf_iterate(law: OffspringLaw, n: int, s: float) -> float:
    """n-fold composition ``f_n(s)``; OverflowError once an iterate diverges."""
    if n < 0 or int(n) != n:
        raise DomainError("iteration count must be a nonnegative integer")
    if isinstance(law, GeometricShifted):
        return law.pgf_iterate_closed(int(n), s)
    x = float(s)
    for i in range(int(n)):
        if x > 1.0 and x >= law.radius_S0:
            raise OverflowError(
                f"iterate {i} reached {x}, beyond the finiteness radius"
            )
        x = law.pgf(x)
        if not math.isfinite(x):
            raise OverflowError(f"iterate {i + 1} overflowed")
    return x


def pgf_inverse_iterate(law: OffspringLaw, n: int, t: float, tol: float = 1e-12) -> float:
    """``(f_n)^{-1}(t)`` via n-fold inversion of the single-step pgf.

    Conditioning caps the verifiable residual: ``f_n`` stretches by ``a^n``
    near its fixed point, so the round-trip defect grows accordingly and the
    result is exact only to ``a^n * eps`` in the image.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    if n < 1 or int(n) != n:
        raise DomainError("iteration count must be a positive integer")
    if t < law.extinction_q:
        raise RangeError(f"target {t} below the fixed point q")
    if isinstance(law, GeometricShifted):
        return law.pgf_inverse_closed(int(n), t)
    x = float(t)
    for _ in range(int(n)):
        x = law.f_inverse(x)
    return x


def extinction_prob(law: OffspringLaw, tol: float = 1e-12) -> float:
    """First nonnegative root of ``f(s) = s``.

    Zero exactly when ``p_0 = 0``; otherwise bisection between 0 (where
    ``f - id`` is positive) and a point below 1 where convexity makes it
    negative.
    """
    if tol <= 0:
        raise DomainError("tol must be positive")
    p0 = float(law.pmf_head()[0])
    if p0 == 0.0:
        return 0.0
    hi = 0.5
    while law.pgf(hi) - hi >= 0.0:
        hi = 0.5 * (hi + 1.0)
        if 1.0 - hi < 1e-13:
            raise NonConvergence("no sign change located below the fixed point 1")
    lo = 0.0
    for _ in range(_BISECT_BUDGET):
        mid = 0.5 * (lo + hi)
        if law.pgf(mid) - mid > 0.0:
            lo = mid
        else:
            hi = mid
        if hi - lo <= tol:
            break
    else:
        raise NonConvergence("extinction bisection exhausted its budget")
    q = 0.5 * (lo + hi)
    return q


def tilde_law(law: OffspringLaw) -> OffspringLaw:
    """The survival-conditioned law, ``(f(q + (1-q)s) - q)/(1-q)`` at pmf level.

    Identity when ``q = 0``. For positive ``q`` the composed coefficients are
    expanded binomially over the pmf table, which is exact for finite support.
    """
    q = law.extinction_q
    if q == 0.0:
        return law
    head = law.pmf_head()
    if head.size > 20_000:
        raise DomainError(
            "survival conditioning via table expansion needs a table under "
            "20000 entries; this law is too heavy"
        )
    m = head.size - 1
    # tilde_p_j = (1-q)^(j-1) * sum_{n>=j} p_n C(n,j) q^(n-j)   for j >= 1
    out = np.zeros(m + 1)
    for j in range(1, m + 1):
        n = np.arange(j, m + 1)
        terms = head[j:] * special.comb(n, j) * q ** (n - j)
        out[j] = (1.0 - q) ** (j - 1) * float(terms.sum())
    out[0] = 0.0
    out /= out.sum()
    return ExplicitFinite(out)


def analytic_metadata(law: OffspringLaw) -> AnalyticMetadata:
    """All regime-driving constants of a law, plus ``gamma = log M / log a``."""
    M = law.max_support_M
    gamma = None
    if 1 < M < math.inf:
        gamma = math.log(M) / math.log(law.mean_a)
    return AnalyticMetadata(
        mean_a=law.mean_a,
        extinction_q=law.extinction_q,
        radius_S0=law.radius_S0,
        moment_theta0=law.moment_theta0,
        max_support_M=M,
        gamma=gamma,
        regime=law.regime,
    )


def sierpinski_law() -> GeometricTail:
    """The tree behind ``f(s) = s^2/(4 - 3s)``: a=5, S0=4/3."""
    return GeometricTail(start=2, ratio=0.75)


_CONFIG_KEYS = {
    "explicit": {"kind", "pmf"},
    "geomshift": {"kind", "a", "k"},
    "geomtail": {"kind", "start", "ratio"},
    "powertail": {"kind", "theta", "head", "log_exponent"},
    "sierpinski": {"kind"},
}


def law_from_config(cfg: dict) -> OffspringLaw:
    """Build a law from its JSON form; unknown kinds or keys are rejected."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise ConfigError("law config must be an object with a 'kind' key")
    kind = cfg["kind"]
    allowed = _CONFIG_KEYS.get(kind)
    if allowed is None:
        raise ConfigError(f"unknown law kind {kind!r}")
    extra = set(cfg) - allowed
    if extra:
        raise ConfigError(f"unknown keys in law config: {sorted(extra)}")
    try:
        if kind == "explicit":
            return ExplicitFinite(cfg["pmf"])
        if kind == "geomshift":
            return GeometricShifted(float(cfg["a"]), int(cfg["k"]))
        if kind == "geomtail":
            return GeometricTail(int(cfg["start"]), float(cfg["ratio"]))
        if kind == "sierpinski":
            return sierpinski_law()
        return PowerTail(
            float(cfg["theta"]),
            cfg.get("head", [0.0, 0.4]),
            log_exponent=float(cfg.get("log_exponent", 0.0)),
        )
    except KeyError as exc:
        raise ConfigError(f"law config is missing {exc}") from exc
