"""Code-size bounds for the binary erasure channel at low capacity.

Two families are provided.  The Poisson-based pair estimates the code size
from the number of unerased symbols, which at low capacity is close to
Poisson with mean kappa = n(1 - eps).  The raw pair evaluates the underlying
random-coding-union and converse error bounds exactly with binomial sums.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .numerics import (
    LN2,
    NoSignChange,
    PoissonTable,
    bisect_root,
    check_enumerable,
    log2_binomial_pmf,
    log2_sum,
    q_inv,
    smallest_integer_satisfying,
)
from .results import ACHIEVABILITY, CONVERSE, BlocklengthInterval, BoundResult

SOLVE_TOL = 1e-6


class PeUnreachable(NoSignChange):
    """No code size in [1, 2^n] meets the target error probability."""


@dataclass(frozen=True)
class BecQuery:
    epsilon: float
    n: int
    pe: float

    def __post_init__(self):
        if not 0.0 < self.epsilon < 1.0:
            raise ValueError("epsilon must lie in (0, 1)")
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")
        if not 0.0 < self.pe < 1.0:
            raise ValueError("pe must lie in (0, 1)")

    @property
    def kappa(self) -> float:
        return self.n * (1.0 - self.epsilon)


@lru_cache(maxsize=64)
def _table(lam: float) -> PoissonTable:
    return PoissonTable(lam)


def _log_cdf(lam, x):
    return _table(float(lam)).log_lower(x)


def _log_sf(lam, x):
    return _table(float(lam)).log_upper(x)


def frak_p1(log2_m: float, kappa: float) -> float:
    """P_kappa(x) + M e^{-kappa/2} (1 - P_{kappa/2}(x)) with x = log2 M."""
    if log2_m < 0:
        raise ValueError("log2_m must be nonnegative")
    head = math.exp(_log_cdf(kappa, log2_m))
    tail = math.exp(log2_m * LN2 - 0.5 * kappa + _log_sf(0.5 * kappa, log2_m))
    return head + tail


def frak_p2(log2_m: float, kappa: float) -> float:
    """P_kappa(x) - (e^kappa / M) P_{2 kappa}(x) with x = log2 M."""
    if log2_m < 0:
        raise ValueError("log2_m must be nonnegative")
    head = math.exp(_log_cdf(kappa, log2_m))
    corr = math.exp(kappa - log2_m * LN2 + _log_cdf(2.0 * kappa, log2_m))
    return head - corr


def alpha_coeff(epsilon: float, kappa: float) -> float:
    if not 0.0 < epsilon < 1.0 or not kappa > 0:
        raise ValueError("need 0 < epsilon < 1 and kappa > 0")
    return (math.sqrt(2.0) / epsilon ** 1.5
            * (1.0 + 2.0 * math.sqrt(3.0 / (epsilon * kappa)))
            * (math.sqrt(math.e) - 1.0) * (1.0 - epsilon))


def achievability_residual(log2_m: float, epsilon: float, kappa: float, pe: float) -> float:
    p1 = frak_p1(log2_m, kappa)
    return p1 + alpha_coeff(epsilon, kappa) * math.sqrt(max(p1, 0.0)) - pe


def converse_residual(log2_m: float, epsilon: float, kappa: float, pe: float) -> float:
    a = alpha_coeff(epsilon, kappa)
    p2 = frak_p2(log2_m, kappa)
    pk = math.exp(_log_cdf(kappa, log2_m))
    return p2 - a * math.sqrt(max(p2, 0.0)) - a * math.sqrt(pk) - pe


def _solve(residual, q: BecQuery, method: str, direction: str) -> BoundResult:
    def f(x):
        return residual(x, q.epsilon, q.kappa, q.pe)

    if f(0.0) > 0:
        raise PeUnreachable(f"pe={q.pe} unreachable at n={q.n}, eps={q.epsilon}")
    root = bisect_root(f, 0.0, float(q.n), tol=SOLVE_TOL)
    return BoundResult(root, direction, method,
                       {"kappa": q.kappa, "tolerance": SOLVE_TOL})


def bec_theorem1_achievable(q: BecQuery) -> BoundResult:
    """log2 M1: the Poisson-based achievability estimate."""
    return _solve(achievability_residual, q, "theorem1", ACHIEVABILITY)


def bec_theorem1_converse(q: BecQuery) -> BoundResult:
    """log2 M2: the Poisson-based converse estimate."""
    return _solve(converse_residual, q, "theorem1", CONVERSE)


# ---------------------------------------------------------------------------
# raw bounds
# ---------------------------------------------------------------------------


def _log2_m_minus_one(log2_m: float) -> float:
    if log2_m <= 0:
        return -math.inf
    # log2(2^x - 1) = x + log2(1 - 2^-x)
    return log2_m + math.log1p(-(2.0 ** -log2_m)) / LN2


def _unerased_log2_pmf(n: int, epsilon: float) -> np.ndarray:
    return log2_binomial_pmf(n, 1.0 - epsilon)


def bec_rcu_raw_pe(n: int, epsilon: float, log2_m: float) -> float:
    """Random-coding-union error bound; M = 1 gives 0."""
    check_enumerable(n)
    lm1 = _log2_m_minus_one(log2_m)
    if lm1 == -math.inf:
        return 0.0
    r = np.arange(n + 1)
    return min(1.0, 2.0 ** log2_sum(_unerased_log2_pmf(n, epsilon) - np.maximum(r - lm1, 0.0)))


def bec_converse_raw_pe(n: int, epsilon: float, log2_m: float) -> float:
    """Converse error bound: sum over r < log2 M of Pr[r unerased] (1 - 2^r / M)."""
    cnt = min(n + 1, max(0, math.ceil(log2_m)))
    if cnt == 0:
        return 0.0
    r = np.arange(cnt)
    lp = _unerased_log2_pmf(n, epsilon)[:cnt]
    with np.errstate(divide="ignore"):
        corr = np.log1p(-np.exp2(r - log2_m)) / LN2
    return 2.0 ** log2_sum(lp + corr)


def _invert_raw(pe_fn, q: BecQuery, method: str, direction: str) -> BoundResult:
    # pe_fn increases with log2 M; the bound is where it crosses q.pe
    root = bisect_root(lambda x: pe_fn(q.n, q.epsilon, x) - q.pe, 0.0, float(q.n), tol=SOLVE_TOL)
    return BoundResult(root, direction, method, {"tolerance": SOLVE_TOL})


def bec_rcu_raw_log2m(q: BecQuery) -> BoundResult:
    return _invert_raw(bec_rcu_raw_pe, q, "raw_rcu", ACHIEVABILITY)


def bec_converse_raw_log2m(q: BecQuery) -> BoundResult:
    return _invert_raw(bec_converse_raw_pe, q, "raw_converse", CONVERSE)


def bec_normal_approx(q: BecQuery) -> BoundResult:
    c = 1.0 - q.epsilon
    v = q.epsilon * (1.0 - q.epsilon)
    val = q.n * c - math.sqrt(q.n * v) * q_inv(q.pe)
    return BoundResult(val, ACHIEVABILITY, "normal_approx",
                       {"terms": "nC - sqrt(nV) Qinv(pe)", "dispersion": v})


# ---------------------------------------------------------------------------
# blocklength thresholds
# ---------------------------------------------------------------------------


def _check_k(k):
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")


def _threshold(pred, k, epsilon, pe):
    _check_k(k)
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")
    if not 0.0 < pe < 1.0:
        raise ValueError("pe must lie in (0, 1)")
    start = max(1, int(k / (1.0 - epsilon)))
    return smallest_integer_satisfying(pred, start)


def theorem1_threshold(k: int, epsilon: float, pe: float, direction: str) -> tuple[int, bool]:
    """Smallest n whose Poisson-based bound reaches k bits.

    Since the residual increases with log2 M, log2 M >= k is equivalent to a
    nonpositive residual at k; unreachable targets count as "not yet".
    """
    residual = achievability_residual if direction == ACHIEVABILITY else converse_residual

    def pred(n):
        kappa = n * (1.0 - epsilon)
        if residual(0.0, epsilon, kappa, pe) > 0:
            return False
        return residual(float(k), epsilon, kappa, pe) <= 0

    return _threshold(pred, k, epsilon, pe)


def raw_threshold(k: int, epsilon: float, pe: float, direction: str) -> tuple[int, bool]:
    """Smallest n at which the raw RCU (or converse) bound drops to pe or below."""
    fn = bec_rcu_raw_pe if direction == ACHIEVABILITY else bec_converse_raw_pe
    return _threshold(lambda n: fn(n, epsilon, float(k)) <= pe, k, epsilon, pe)


def normal_approx_threshold(k: int, epsilon: float, pe: float) -> tuple[int, bool]:
    return _threshold(lambda n: bec_normal_approx(BecQuery(epsilon, n, pe)).log2_m >= k,
                      k, epsilon, pe)


def bec_blocklength_interval(k: int, epsilon: float, pe: float) -> BlocklengthInterval:
    lo, lo_ok = theorem1_threshold(k, epsilon, pe, CONVERSE)
    hi, hi_ok = theorem1_threshold(k, epsilon, pe, ACHIEVABILITY)
    return BlocklengthInterval(lo, hi, {"method": "theorem1", "monotone_guard": lo_ok and hi_ok})
