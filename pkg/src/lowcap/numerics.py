"""Special functions used by the bound calculators.

Everything here works in the log domain where it matters: binomial and
Poisson masses at n of a few thousand underflow ordinary doubles long before
the sums they feed into become negligible.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.special import erfc, erfcinv, gammaln, logsumexp

LN2 = math.log(2.0)
_HALF_LN_PI = 0.5 * math.log(math.pi)
_HALF_LN_2PI = 0.5 * math.log(2.0 * math.pi)
_EXACT_FACTORIAL_MAX = 10
_LOG_SMALL_FACTORIALS = np.array(
    [math.log(math.factorial(s)) for s in range(_EXACT_FACTORIAL_MAX + 1)]
)
TAIL_SIGMAS = 40.0
MAX_ENUMERATED_N = 10 ** 7


class NumericalFailure(ArithmeticError):
    """A root or threshold could not be bracketed."""


class NoSignChange(NumericalFailure):
    """The residual has the same sign at both ends of the bracket."""


# ---------------------------------------------------------------------------
# log-domain values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogDomainValue:
    """A nonnegative quantity stored as its base-2 logarithm.

    The quantity 0 is represented by ``log2_value = -inf``.
    """

    log2_value: float

    @classmethod
    def zero(cls) -> "LogDomainValue":
        return cls(-math.inf)

    @classmethod
    def from_linear(cls, value: float) -> "LogDomainValue":
        if value < 0:
            raise ValueError("LogDomainValue holds nonnegative quantities only")
        return cls(math.log2(value) if value > 0 else -math.inf)

    @property
    def is_zero(self) -> bool:
        return self.log2_value == -math.inf

    def linear(self) -> float:
        return 2.0 ** self.log2_value

    def __add__(self, other: "LogDomainValue") -> "LogDomainValue":
        return LogDomainValue(float(np.logaddexp2(self.log2_value, other.log2_value)))

    def __mul__(self, other: "LogDomainValue") -> "LogDomainValue":
        return LogDomainValue(self.log2_value + other.log2_value)


def log2_sum(log2_terms) -> float:
    """log2 of the sum of ``2**log2_terms``; -inf for an empty or all-zero sum."""
    t = np.asarray(log2_terms, dtype=float)
    if t.size == 0:
        return -math.inf
    return float(logsumexp(t * LN2) / LN2)


# ---------------------------------------------------------------------------
# factorials and Poisson masses
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FactorialBounds:
    s: int
    lower: LogDomainValue
    upper: LogDomainValue


def _theta_lower(s):
    return 1.0 - 11.0 / (8.0 * s) + 79.0 / (112.0 * s * s)


def _theta_upper(s):
    return _theta_lower(s) + 20.0 / (33.0 * s ** 3)


def _ln_ramanujan(s, theta):
    """Natural log of sqrt(pi) (s/e)^s (8s^3+4s^2+s+theta/30)^(1/6)."""
    s = np.asarray(s, dtype=float)
    poly = ((8.0 * s + 4.0) * s + 1.0) * s + theta / 30.0
    return _HALF_LN_PI + s * np.log(s) - s + np.log(poly) / 6.0


def factorial_bounds(s: int) -> FactorialBounds:
    """Two-sided bracket on log2(s!)."""
    s = int(s)
    if s < 0:
        raise ValueError("s must be nonnegative")
    if s <= _EXACT_FACTORIAL_MAX:
        v = LogDomainValue(math.log2(math.factorial(s)))
        return FactorialBounds(s, v, v)
    lo = float(_ln_ramanujan(s, _theta_lower(s))) / LN2
    hi = float(_ln_ramanujan(s, _theta_upper(s))) / LN2
    return FactorialBounds(s, LogDomainValue(lo), LogDomainValue(hi))


def ln_factorial(s, side: str = "lower") -> np.ndarray:
    """Vectorised ln(s!): exact up to 10, Ramanujan bracket side above."""
    s = np.asarray(s, dtype=np.int64)
    out = np.empty(s.shape, dtype=float)
    small = s <= _EXACT_FACTORIAL_MAX
    out[small] = _LOG_SMALL_FACTORIALS[s[small]]
    big = s[~small].astype(float)
    if big.size:
        theta = _theta_lower(big) if side == "lower" else _theta_upper(big)
        out[~small] = _ln_ramanujan(big, theta)
    return out


def poisson_log_pmf(lam: float, s, side: str = "lower") -> np.ndarray:
    """Natural-log Poisson mass, vectorised over ``s``.

    ``side`` picks which factorial bound is used above the exact range; the
    default (the factorial lower bound) is the point estimate used by the
    bound calculators.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    s = np.asarray(s, dtype=np.int64)
    if np.any(s < 0):
        raise ValueError("s must be nonnegative")
    return -lam + s * math.log(lam) - ln_factorial(s, side)


def poisson_pmf(lam: float, s: int, side: str = "lower") -> float:
    return float(np.exp(poisson_log_pmf(lam, s, side)))


def poisson_tail_cap(lam: float) -> int:
    """Largest index kept when summing Poisson tails."""
    return int(math.ceil(lam + TAIL_SIGMAS * math.sqrt(lam)))


def _strict_count(x: float, cap: int) -> int:
    """Number of integers i >= 0 with i < x, clipped to cap + 1."""
    if x <= 0:
        return 0
    return int(min(math.ceil(x), cap + 1))


def poisson_log_cdf_strict(lam: float, x: float, side: str = "lower") -> float:
    """ln Pr{X < x} for X ~ Poisson(lam); -inf when x <= 0."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    cnt = _strict_count(x, poisson_tail_cap(lam))
    if cnt == 0:
        return -math.inf
    return float(logsumexp(poisson_log_pmf(lam, np.arange(cnt), side)))


def poisson_cdf_strict(lam: float, x: float, side: str = "lower") -> float:
    """Pr{X < x}: the term at i == x is excluded for integer x."""
    return math.exp(poisson_log_cdf_strict(lam, x, side))


class PoissonTable:
    """Cached cumulative log masses of one Poisson law.

    Used by the threshold searches, which evaluate the same CDF at many
    points.  ``log_lower(x)`` is ln Pr{X < x} and ``log_upper(x)`` is
    ln Pr{X >= x}, each summed directly so neither suffers cancellation.
    """

    def __init__(self, lam: float, side: str = "lower"):
        if not lam > 0:
            raise ValueError("lambda must be positive")
        self.lam = float(lam)
        self.cap = poisson_tail_cap(lam)
        lp = poisson_log_pmf(lam, np.arange(self.cap + 1), side)
        self._lower = np.logaddexp.accumulate(lp)
        self._upper = np.logaddexp.accumulate(lp[::-1])[::-1]

    def log_lower(self, x: float) -> float:
        cnt = _strict_count(x, self.cap)
        return -math.inf if cnt == 0 else float(self._lower[cnt - 1])

    def log_upper(self, x: float) -> float:
        cnt = _strict_count(x, self.cap)
        return -math.inf if cnt > self.cap else float(self._upper[cnt])


# ---------------------------------------------------------------------------
# Gaussian tail, entropy, binomials
# ---------------------------------------------------------------------------


def q_func(a):
    """Standard normal upper tail Q(a)."""
    r = 0.5 * erfc(np.asarray(a, dtype=float) / math.sqrt(2.0))
    return float(r) if np.ndim(r) == 0 else r


def q_inv(p: float) -> float:
    """Inverse of ``q_func`` on (0, 1), polished by two Newton steps."""
    if not 0.0 < p < 1.0:
        raise ValueError("q_inv requires 0 < p < 1")
    x = math.sqrt(2.0) * float(erfcinv(2.0 * p))
    for _ in range(2):
        dens = math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)
        if dens == 0.0:
            break
        x += (q_func(x) - p) / dens
    return x


def binary_entropy(x: float) -> float:
    if not 0.0 <= x <= 1.0:
        raise ValueError("binary_entropy needs x in [0, 1]")
    if x == 0.0 or x == 1.0:
        return 0.0
    return -x * math.log2(x) - (1.0 - x) * math.log2(1.0 - x)


def _stirling_error(x):
    """ln(x!) - [(x + 1/2) ln x - x + ln sqrt(2 pi)], for x >= 1."""
    x = np.asarray(x, dtype=float)
    small = x <= 15.0
    out = np.empty_like(x)
    xs = x[small]
    out[small] = gammaln(xs + 1.0) - (xs + 0.5) * np.log(xs) + xs - _HALF_LN_2PI
    xb = x[~small]
    x2 = xb * xb
    out[~small] = (1 / 12 - (1 / 360 - (1 / 1260 - 1 / (1680 * x2)) / x2) / x2) / xb
    return out


def log2_binomial(n: int, r):
    """log2 C(n, r); vectorised over ``r``.

    The large terms of ln n! - ln r! - ln (n-r)! are cancelled analytically
    (Stirling form plus error terms), so the absolute error stays near 1e-10
    even for n around 1e6, where plain log-gamma differences lose ~1e-8.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    r_arr = np.asarray(r)
    if np.any(r_arr < 0) or np.any(r_arr > n):
        raise ValueError("need 0 <= r <= n")
    k = np.minimum(r_arr, n - r_arr).astype(float)
    out = np.zeros(k.shape)
    pos = k > 0
    kk = k[pos]
    nf = float(n)
    ln = (0.5 * np.log(nf / (2.0 * math.pi * kk * (nf - kk))) + kk * np.log(nf / kk)
          - (nf - kk) * np.log1p(-kk / nf)
          + _stirling_error(nf) - _stirling_error(kk) - _stirling_error(nf - kk))
    out[pos] = ln / LN2
    return float(out) if np.ndim(out) == 0 else out


def check_enumerable(n: int) -> None:
    """Refuse full-length sums that would not fit in memory."""
    if n > MAX_ENUMERATED_N:
        raise NumericalFailure(f"exact sums are limited to n <= {MAX_ENUMERATED_N}, got {n}")


def log2_binomial_pmf(n: int, p: float) -> np.ndarray:
    """log2 of C(n,r) p^r (1-p)^(n-r) for r = 0..n."""
    check_enumerable(n)
    r = np.arange(n + 1)
    with np.errstate(divide="ignore"):
        return log2_binomial(n, r) + r * np.log2(p) + (n - r) * np.log2(1.0 - p)


# ---------------------------------------------------------------------------
# root finding
# ---------------------------------------------------------------------------


def bisect_root(f: Callable[[float], float], lo: float, hi: float,
                tol: float = 1e-9, max_iter: int = 200) -> float:
    """Root of a monotone function on [lo, hi] by plain bisection."""
    flo, fhi = f(lo), f(hi)
    if flo == 0:
        return lo
    if fhi == 0:
        return hi
    if (flo > 0) == (fhi > 0):
        raise NoSignChange(f"no sign change on [{lo}, {hi}]: f={flo!r}, {fhi!r}")
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def smallest_integer_satisfying(pred: Callable[[int], bool], start: int,
                                lower: int = 1, upper: int = 1 << 40,
                                guard: int = 2) -> tuple[int, bool]:
    """Smallest n >= lower with ``pred(n)`` for a predicate that flips once.

    Brackets by doubling from ``start`` (or halving if ``start`` already
    satisfies the predicate), then bisects on integers.  Returns the
    threshold and a flag telling whether the ``guard`` integers just above
    it also satisfy the predicate.
    """
    start = max(int(start), lower)
    if pred(start):
        hi = start
        lo = hi
        while lo > lower:
            lo = max(lower, lo // 2)
            if not pred(lo):
                break
            hi = lo
        else:
            return hi, all(pred(hi + j) for j in range(1, guard + 1))
    else:
        lo, hi = start, start * 2
        while not pred(hi):
            lo, hi = hi, hi * 2
            if hi > upper:
                raise NumericalFailure("threshold search exceeded the upper limit")
    # invariant: pred(lo) is False, pred(hi) is True
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if pred(mid):
            hi = mid
        else:
            lo = mid
    return hi, all(pred(hi + j) for j in range(1, guard + 1))
