"""Code-size bounds for the binary symmetric channel at low capacity."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .numerics import (
    LN2,
    NumericalFailure,
    binary_entropy,
    bisect_root,
    check_enumerable,
    log2_binomial,
    log2_binomial_pmf,
    log2_sum,
    q_inv,
    smallest_integer_satisfying,
)
from .results import ACHIEVABILITY, CONVERSE, BoundResult


def _check_delta(delta):
    if not 0.0 < delta < 0.5:
        raise ValueError("delta must lie in (0, 0.5)")


def _check_pe(pe):
    if not 0.0 < pe < 1.0:
        raise ValueError("pe must lie in (0, 1)")


def _check_k(k):
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")


def bsc_capacity(delta: float) -> float:
    return 1.0 - binary_entropy(delta)


def bsc_dispersion(delta: float) -> float:
    return delta * (1.0 - delta) * math.log2((1.0 - delta) / delta) ** 2


@dataclass(frozen=True)
class BscQuery:
    delta: float
    n: int
    pe: float

    def __post_init__(self):
        _check_delta(self.delta)
        _check_pe(self.pe)
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")

    @property
    def capacity(self) -> float:
        return bsc_capacity(self.delta)

    @property
    def kappa(self) -> float:
        return self.n * self.capacity

    @property
    def low_capacity_ratio(self) -> float:
        """kappa^1.5 / n; small values mean the low-capacity expansion is reliable."""
        return self.kappa * math.sqrt(self.kappa) / self.n


def _spread(delta: float) -> float:
    return 2.0 * math.sqrt(2.0 * delta * (1.0 - delta) / LN2)


def theorem2_log2m_real(n: float, delta: float, pe: float) -> float:
    """The low-capacity expansion evaluated at a real blocklength."""
    kappa = n * bsc_capacity(delta)
    return (kappa - _spread(delta) * math.sqrt(kappa) * q_inv(pe)
            + 0.5 * math.log2(kappa) - math.log2(pe))


def bsc_theorem2_log2m(q: BscQuery) -> BoundResult:
    """Single-number prediction of log2 M*, log-log term dropped."""
    return BoundResult(theorem2_log2m_real(q.n, q.delta, q.pe), ACHIEVABILITY,
                       "theorem1-analogue",
                       {"kappa": q.kappa, "dropped": "O(log log kappa)",
                        "low_capacity_ratio": q.low_capacity_ratio})


def bsc_corollary1_blocklength(k: int, delta: float, pe: float) -> int:
    _check_k(k)
    _check_delta(delta)
    _check_pe(pe)
    qi = q_inv(pe)
    c = bsc_capacity(delta)
    v = 4.0 * delta * (1.0 - delta) / LN2
    n = (k + _spread(delta) * qi * math.sqrt(k) + v * qi * qi + math.log2(pe)) / c
    return int(math.ceil(n))


# ---------------------------------------------------------------------------
# raw bounds
# ---------------------------------------------------------------------------


def _log2_m_minus_one(log2_m: float) -> float:
    if log2_m <= 0:
        return -math.inf
    return log2_m + math.log1p(-(2.0 ** -log2_m)) / LN2


def log2_hamming_ball(n: int) -> np.ndarray:
    """log2 S_n^r = log2 sum_{s<=r} C(n,s) 2^-n for r = 0..n."""
    check_enumerable(n)
    lb = log2_binomial(n, np.arange(n + 1)) - n
    return np.logaddexp2.accumulate(lb)


def bsc_rcu_raw_pe(n: int, delta: float, log2_m: float) -> float:
    """Random-coding-union bound sum_r Pr[r flips] min{1, (M-1) S_n^r}."""
    _check_delta(delta)
    lm1 = _log2_m_minus_one(log2_m)
    if lm1 == -math.inf:
        return 0.0
    inner = np.minimum(0.0, lm1 + log2_hamming_ball(n))
    return min(1.0, 2.0 ** log2_sum(log2_binomial_pmf(n, delta) + inner))


def bsc_rcu_raw_log2m(n: int, delta: float, pe: float) -> BoundResult:
    """Largest log2 M whose RCU bound stays at or below pe."""
    _check_delta(delta)
    _check_pe(pe)
    root = bisect_root(lambda x: bsc_rcu_raw_pe(n, delta, x) - pe, 0.0, float(n), tol=1e-6)
    return BoundResult(root, ACHIEVABILITY, "raw_rcu", {"tolerance": 1e-6})


def bsc_metaconverse_log2m(n: int, delta: float, pe: float) -> BoundResult:
    """Hypothesis-testing converse -log2 beta_{1-pe}."""
    _check_delta(delta)
    _check_pe(pe)
    pmf = np.exp2(log2_binomial_pmf(n, delta))
    # alpha_l = sum_{r<l}, beta_l = sum_{r<=l}, both for l = 0..n+1
    alpha = np.concatenate(([0.0], np.cumsum(pmf)))
    alpha[-1] = 1.0
    log_beta = np.concatenate((log2_hamming_ball(n), [0.0]))
    target = 1.0 - pe
    big_l = int(np.searchsorted(alpha, target, side="right")) - 1
    if big_l < 0 or big_l > n:
        raise NumericalFailure("1 - pe outside the alpha range")
    lam = (target - alpha[big_l]) / (alpha[big_l + 1] - alpha[big_l])
    lam = float(min(max(lam, 0.0), 1.0))
    terms = [log_beta[big_l] + (math.log2(1.0 - lam) if lam < 1 else -math.inf),
             log_beta[big_l + 1] + (math.log2(lam) if lam > 0 else -math.inf)]
    val = -log2_sum(terms)
    return BoundResult(val, CONVERSE, "raw_converse", {"L": big_l, "lambda": lam})


def bsc_normal_approx(q: BscQuery) -> BoundResult:
    c, v = q.capacity, bsc_dispersion(q.delta)
    val = q.n * c - math.sqrt(q.n * v) * q_inv(q.pe) + 0.5 * math.log2(q.n)
    return BoundResult(val, ACHIEVABILITY, "normal_approx",
                       {"terms": "nC - sqrt(nV) Qinv(pe) + 0.5 log2 n", "dispersion": v})


# ---------------------------------------------------------------------------
# thresholds
# ---------------------------------------------------------------------------


def _threshold(pred, k, delta, pe):
    _check_k(k)
    _check_delta(delta)
    _check_pe(pe)
    return smallest_integer_satisfying(pred, max(1, int(k / bsc_capacity(delta))))


def theorem2_threshold(k: int, delta: float, pe: float) -> tuple[int, bool]:
    return _threshold(lambda n: theorem2_log2m_real(n, delta, pe) >= k, k, delta, pe)


def theorem2_threshold_real(k: int, delta: float, pe: float) -> float:
    """Real-valued blocklength at which the prediction equals k."""
    n_int, _ = theorem2_threshold(k, delta, pe)
    return brentq(lambda x: theorem2_log2m_real(x, delta, pe) - k, n_int - 1.0, n_int)


def rcu_threshold(k: int, delta: float, pe: float) -> tuple[int, bool]:
    return _threshold(lambda n: bsc_rcu_raw_pe(n, delta, float(k)) <= pe, k, delta, pe)


def metaconverse_threshold(k: int, delta: float, pe: float) -> tuple[int, bool]:
    return _threshold(lambda n: bsc_metaconverse_log2m(n, delta, pe).log2_m >= k, k, delta, pe)


def normal_approx_threshold(k: int, delta: float, pe: float) -> tuple[int, bool]:
    return _threshold(lambda n: bsc_normal_approx(BscQuery(delta, n, pe)).log2_m >= k,
                      k, delta, pe)
