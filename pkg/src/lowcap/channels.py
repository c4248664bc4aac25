"""Binary-input channel models, simulators and capacity.

LLRs follow the convention ln P(y|0) / P(y|1), with BPSK mapping 0 -> +1 and
1 -> -1.  Erasures give LLR 0 and noiseless BEC symbols give +-inf.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import integrate

from .numerics import binary_entropy

_GH_X, _GH_W = np.polynomial.hermite.hermgauss(64)


@dataclass(frozen=True)
class BEC:
    epsilon: float

    def __post_init__(self):
        if not 0.0 <= self.epsilon < 1.0:
            raise ValueError("epsilon must lie in [0, 1)")

    def to_dict(self):
        return {"kind": "BEC", "epsilon": self.epsilon}


@dataclass(frozen=True)
class BSC:
    delta: float

    def __post_init__(self):
        if not 0.0 < self.delta < 0.5:
            raise ValueError("delta must lie in (0, 0.5)")

    @property
    def llr_magnitude(self) -> float:
        return math.log((1.0 - self.delta) / self.delta)

    def to_dict(self):
        return {"kind": "BSC", "delta": self.delta}


@dataclass(frozen=True)
class BIAWGN:
    """Unit-energy BPSK over Gaussian noise of standard deviation sigma."""

    sigma: float

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")

    @classmethod
    def from_ebn0(cls, ebn0_db: float, rate: float) -> "BIAWGN":
        return cls(ebn0_to_sigma(ebn0_db, rate))

    @classmethod
    def from_eta(cls, eta: float) -> "BIAWGN":
        if not eta > 0:
            raise ValueError("eta must be positive")
        return cls(1.0 / math.sqrt(eta))

    @property
    def eta(self) -> float:
        return 1.0 / self.sigma ** 2

    def to_dict(self):
        return {"kind": "BIAWGN", "sigma": self.sigma}


ChannelModel = Union[BEC, BSC, BIAWGN]


def channel_from_dict(d: dict) -> ChannelModel:
    kind = d.get("kind")
    if kind == "BEC":
        return BEC(float(d["epsilon"]))
    if kind == "BSC":
        return BSC(float(d["delta"]))
    if kind == "BIAWGN":
        return BIAWGN(float(d["sigma"]))
    raise ValueError(f"unknown channel kind {kind!r}")


def biawgn_capacity(sigma: float) -> float:
    """Binary-input AWGN capacity.

    64-point Gauss-Hermite quadrature for sigma >= 1 (the low-capacity
    regime); the integrand is too sharp at high SNR, so adaptive quadrature
    is used below that.
    """
    # condition on x = +1: y = 1 + sigma z, LLR = 2y / sigma^2
    if sigma < 1.0:
        def f(z):
            y = 1.0 + sigma * z
            return math.exp(-0.5 * z * z) * np.logaddexp(0.0, -2.0 * y / sigma ** 2)

        lo, hi = -40.0, 40.0
        val = sum(integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-13, limit=200)[0]
                  for a, b in ((lo, -1.0 / sigma), (-1.0 / sigma, hi)))
        return float(1.0 - val / (math.sqrt(2.0 * math.pi) * math.log(2.0)))
    y = 1.0 + sigma * math.sqrt(2.0) * _GH_X
    loss = np.logaddexp(0.0, -2.0 * y / sigma ** 2) / math.log(2.0)
    return float(1.0 - np.dot(_GH_W, loss) / math.sqrt(math.pi))


def shannon_capacity_real(eta: float) -> float:
    """Real-input AWGN capacity 0.5 log2(1 + eta)."""
    return 0.5 * math.log1p(eta) / math.log(2.0)


def capacity(ch: ChannelModel) -> float:
    if isinstance(ch, BEC):
        return 1.0 - ch.epsilon
    if isinstance(ch, BSC):
        return 1.0 - binary_entropy(ch.delta)
    if isinstance(ch, BIAWGN):
        return biawgn_capacity(ch.sigma)
    raise TypeError(f"unsupported channel {ch!r}")


def ebn0_to_sigma(ebn0_db: float, rate: float) -> float:
    if not 0.0 < rate <= 1.0:
        raise ValueError("rate must lie in (0, 1]")
    return 1.0 / math.sqrt(2.0 * rate * 10.0 ** (ebn0_db / 10.0))


def sigma_to_ebn0(sigma: float, rate: float) -> float:
    if not 0.0 < rate <= 1.0:
        raise ValueError("rate must lie in (0, 1]")
    return 10.0 * math.log10(1.0 / (2.0 * rate * sigma * sigma))


@dataclass(frozen=True)
class RngStream:
    """Counter-based random stream keyed by (master_seed, stream_index).

    Every call to ``generator`` restarts the stream, so trial t of a Monte
    Carlo run can be replayed in isolation on any worker.
    """

    master_seed: int
    stream_index: int

    def generator(self) -> np.random.Generator:
        key = np.array([self.master_seed, self.stream_index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key))


def _as_generator(rng) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    if isinstance(rng, np.random.Generator):
        return rng
    raise TypeError("rng must be an RngStream or numpy Generator")


def transmit(ch: ChannelModel, codeword, rng) -> np.ndarray:
    """Send a bit vector through ``ch`` and return channel LLRs."""
    c = np.asarray(codeword, dtype=np.uint8)
    if c.size and c.max() > 1:
        raise ValueError("codeword bits must be 0 or 1")
    gen = _as_generator(rng)
    n = c.shape[-1]
    if isinstance(ch, BEC):
        known = np.where(c == 0, np.inf, -np.inf)
        erased = gen.random(c.shape) < ch.epsilon
        return np.where(erased, 0.0, known)
    if isinstance(ch, BSC):
        y = c ^ (gen.random(c.shape) < ch.delta)
        return ch.llr_magnitude * (1.0 - 2.0 * y)
    if isinstance(ch, BIAWGN):
        x = 1.0 - 2.0 * c
        y = x + ch.sigma * gen.standard_normal(c.shape)
        return (2.0 / ch.sigma ** 2) * y
    raise TypeError(f"unsupported channel {ch!r} (n={n})")


def fold_repetition_llrs(llrs, r: int) -> np.ndarray:
    """Sum the LLRs of r contiguous repeated blocks.

    Halves are added pairwise (first half + second half) repeatedly, which
    is also the order in which a successive-cancellation decoder combines
    them.
    """
    out = np.asarray(llrs, dtype=float)
    n = out.shape[-1]
    if r < 1 or r & (r - 1) or n % r:
        raise ValueError("r must be a power of two dividing the length")
    while r > 1:
        h = out.shape[-1] // 2
        out = out[..., :h] + out[..., h:]
        r //= 2
    return out
