"""How much repetition a low-capacity code can afford.

An r-fold repetition of one bit over BEC(eps) behaves like BEC(eps^r), so a
length-n code built from n/r outer symbols keeps the fraction
(n/r)(1 - eps^r) / (n(1 - eps)) of the total capacity.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

from .numerics import NoSignChange, bisect_root


def _check_eps(epsilon):
    if not 0.0 < epsilon < 1.0:
        raise ValueError("epsilon must lie in (0, 1)")


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")


def _check_beta(beta):
    if not 0.0 < beta < 1.0:
        raise ValueError("beta must lie in (0, 1)")


def bec_repeated_channel(epsilon: float, r: int) -> float:
    if int(r) != r or r < 1:
        raise ValueError("r must be a positive integer")
    return epsilon ** r


def retained_capacity(n: int, epsilon: float, outer_len: float) -> float:
    """Total capacity m (1 - eps^{n/m}) of m repeated blocks."""
    return -outer_len * math.expm1(n / outer_len * math.log(epsilon))


def exact_outer_blocks_bec(n: int, epsilon: float, beta: float) -> float:
    """Real m solving m (1 - eps^{n/m}) = beta n (1 - eps)."""
    _check_n(n)
    _check_eps(epsilon)
    _check_beta(beta)
    target = beta * n * (1.0 - epsilon)

    def resid(m):
        return retained_capacity(n, epsilon, m) - target

    lo = n * 1e-12
    if resid(lo) > 0 or resid(float(n)) < 0:
        raise NoSignChange("retained-capacity equation has no root in (0, n]")
    return bisect_root(resid, lo, float(n), tol=1e-13 * n)


def theorem5_bracket(n: int, epsilon: float, beta: float) -> tuple[float, float]:
    """Closed-form bracket on the outer length n / r_beta."""
    _check_n(n)
    _check_eps(epsilon)
    _check_beta(beta)
    ell = -math.log(epsilon) / (1.0 - epsilon)
    gamma = beta / ell
    upper = n * (1.0 - epsilon) * ell / (2.0 * (1.0 - gamma))
    return upper * gamma * gamma, upper


def bms_repetition_floor(n: int, capacity: float, beta: float) -> float:
    """kappa beta^2 / (2 (1 - beta)), the BMS lower bound on the outer length."""
    if not 0.0 < capacity < 1.0:
        raise ValueError("capacity must lie in (0, 1)")
    _check_beta(beta)
    kappa = n * capacity
    return kappa * beta * beta / (2.0 * (1.0 - beta))


def _largest_pow2_factor(n: int, min_outer: float) -> int:
    """Largest power-of-two r dividing n with n / r >= min_outer."""
    r = 1
    while n % (2 * r) == 0 and n / (2 * r) >= min_outer:
        r *= 2
    return r


def negligible_loss_repetition(n: int, kappa: float) -> int:
    """Largest power-of-two repetition keeping all but O(1) bits of kappa.

    Uses beta = 1 - 1/kappa on a BEC of matching kappa.
    """
    _check_n(n)
    if not 1.0 < kappa < n:
        raise ValueError("need 1 < kappa < n")
    m = exact_outer_blocks_bec(n, 1.0 - kappa / n, 1.0 - 1.0 / kappa)
    return _largest_pow2_factor(n, m)


@dataclass(frozen=True)
class RepetitionPlan:
    n: int
    r: int
    outer_len: int
    beta: float
    beta_achieved: float
    m_exact: float
    bracket: tuple[float, float]

    def __post_init__(self):
        if self.r * self.outer_len != self.n:
            raise ValueError("r * outer_len must equal n")

    def to_dict(self):
        return asdict(self)


def plan_repetition(n: int, epsilon: float, beta: float) -> RepetitionPlan:
    """Power-of-two repetition factor that still retains a beta fraction.

    The outer length is rounded up to n / r for the largest admissible r, so
    the achieved fraction never falls below beta.
    """
    m = exact_outer_blocks_bec(n, epsilon, beta)
    r = _largest_pow2_factor(n, m)
    outer = n // r
    achieved = retained_capacity(n, epsilon, outer) / (n * (1.0 - epsilon))
    return RepetitionPlan(n, r, outer, beta, achieved, m, theorem5_bracket(n, epsilon, beta))
