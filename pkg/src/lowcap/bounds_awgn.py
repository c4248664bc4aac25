"""Low-capacity code-size estimates for the real AWGN channel."""
from __future__ import annotations

import math
from dataclasses import dataclass

from .numerics import LN2, q_inv, smallest_integer_satisfying
from .results import ACHIEVABILITY, CONVERSE, BlocklengthInterval, BoundResult


def _check_eta(eta):
    if not eta > 0:
        raise ValueError("eta must be positive")


def _check_pe(pe):
    if not 0.0 < pe < 1.0:
        raise ValueError("pe must lie in (0, 1)")


def _check_k(k):
    if int(k) != k or k < 1:
        raise ValueError("k must be a positive integer")


@dataclass(frozen=True)
class AwgnQuery:
    eta: float
    n: int
    pe: float

    def __post_init__(self):
        _check_eta(self.eta)
        _check_pe(self.pe)
        if int(self.n) != self.n or self.n < 1:
            raise ValueError("n must be a positive integer")

    @property
    def kappa(self) -> float:
        return 0.5 * self.n * _log2_1p(self.eta)


def _log2_1p(eta: float) -> float:
    return math.log1p(eta) / LN2


def _slope(eta: float) -> float:
    return math.sqrt(eta + 2.0) / ((eta + 1.0) * math.sqrt(LN2))


def _interval_real(n: float, eta: float, pe: float) -> tuple[float, float]:
    kappa = 0.5 * n * _log2_1p(eta)
    base = kappa - _slope(eta) * math.sqrt(kappa) * q_inv(pe)
    return base, base + 0.5 * math.log2(kappa) - math.log2(pe)


def awgn_theorem3_interval(q: AwgnQuery) -> tuple[BoundResult, BoundResult]:
    """(conservative, optimistic) estimates of log2 M*.

    The unknown order-one terms are taken as zero, so the pair brackets the
    estimate only up to those constants.
    """
    lo, hi = _interval_real(q.n, q.eta, q.pe)
    meta = {"kappa": q.kappa, "bracket_excludes_O1": True}
    return (BoundResult(lo, ACHIEVABILITY, "theorem3", dict(meta)),
            BoundResult(hi, CONVERSE, "theorem3", dict(meta)))


def awgn_corollary2_blocklength(k: int, eta: float, pe: float) -> int:
    _check_k(k)
    _check_eta(eta)
    _check_pe(pe)
    n = 2.0 / _log2_1p(eta) * (k + _slope(eta) * q_inv(pe) * math.sqrt(k))
    return int(math.ceil(n))


def theorem3_blocklength_interval(k: int, eta: float, pe: float) -> BlocklengthInterval:
    """Smallest n at which the optimistic / conservative estimate reaches k."""
    _check_k(k)
    _check_eta(eta)
    _check_pe(pe)
    start = max(1, int(2 * k / _log2_1p(eta)))
    lo, ok1 = smallest_integer_satisfying(lambda n: _interval_real(n, eta, pe)[1] >= k, start)
    hi, ok2 = smallest_integer_satisfying(lambda n: _interval_real(n, eta, pe)[0] >= k, start)
    return BlocklengthInterval(lo, hi, {"method": "theorem3", "bracket_excludes_O1": True,
                                        "monotone_guard": ok1 and ok2})


def shannon_limit_ebn0(rate: float) -> float:
    """Minimum Eb/N0 in dB at which rate R is achievable on the real AWGN channel."""
    if not 0.0 < rate < 1.0:
        raise ValueError("rate must lie in (0, 1)")
    ebn0 = math.expm1(2.0 * rate * LN2) / (2.0 * rate)
    return 10.0 * math.log10(ebn0)
