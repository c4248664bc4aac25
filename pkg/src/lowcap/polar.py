"""Low-rate polar codes.

Indexing is natural (no bit reversal): bit j of index i, read MSB first,
selects the minus (0) or plus (1) transform at polarization step j, and the
encoder maps u to x = [T(u_lo) xor T(u_hi), T(u_hi)].  At low capacity the
information set lives entirely in the upper half (or quarter, ...), so the
codeword is a tiling of a shorter polar codeword; ``fast_encode`` and
``fast_decode`` exploit this.

Kernels come from numba when available; set ``LOWCAP_BACKEND=numpy`` to use
the pure-numpy versions instead.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass, field
from typing import Any, NamedTuple

import numpy as np

from .channels import BEC, ChannelModel, capacity, fold_repetition_llrs

SCHEMA_VERSION = 1
DEFAULT_CRC_POLYS = {6: 0b1000011}  # x^6 + x + 1
LLR_CAP = 1e12


def _select_backend():
    want = os.environ.get("LOWCAP_BACKEND", "numba").lower()
    if want == "numba":
        try:
            from . import _polar_numba as mod
            return "numba", mod
        except ImportError:
            pass
    elif want != "numpy":
        raise ValueError(f"LOWCAP_BACKEND must be 'numba' or 'numpy', got {want!r}")
    from . import _polar_numpy as mod
    return "numpy", mod


BACKEND, _kernels = _select_backend()


def get_kernels(name: str | None = None):
    """Kernel module by name ('numba' or 'numpy'); the active one by default."""
    if name is None:
        return _kernels
    if name == "numba":
        from . import _polar_numba as mod
    elif name == "numpy":
        from . import _polar_numpy as mod
    else:
        raise ValueError(name)
    return mod


# ---------------------------------------------------------------------------
# CRC
# ---------------------------------------------------------------------------


def crc_bits(bits, poly: int, length: int) -> np.ndarray:
    """Remainder of bits(x) * x^length modulo poly, MSB first."""
    mask = (1 << length) - 1
    reg = 0
    for b in np.asarray(bits, dtype=np.uint8).tolist():
        fb = ((reg >> (length - 1)) & 1) ^ b
        reg = (reg << 1) & mask
        if fb:
            reg ^= poly & mask
    return np.array([(reg >> (length - 1 - j)) & 1 for j in range(length)], dtype=np.uint8)


# ---------------------------------------------------------------------------
# code description
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolarSpec:
    """A polar code of length 2^m with all-zero frozen bits.

    ``crc_set`` lists the info positions that carry CRC bits; the remaining
    info positions carry the payload in increasing index order.
    """

    m: int
    info_set: tuple[int, ...]
    crc_len: int = 0
    crc_poly: int = 0
    crc_set: tuple[int, ...] = ()
    construction: dict[str, Any] = field(default_factory=dict, compare=False, hash=False)

    def __post_init__(self):
        info = tuple(int(i) for i in self.info_set)
        object.__setattr__(self, "info_set", info)
        object.__setattr__(self, "crc_set", tuple(sorted(int(i) for i in self.crc_set)))
        if self.m < 0:
            raise ValueError("m must be nonnegative")
        if len(info) == 0:
            raise ValueError("info_set must be nonempty")
        if list(info) != sorted(set(info)):
            raise ValueError("info_set must be sorted without repeats")
        if info[0] < 0 or info[-1] >= self.n:
            raise ValueError("info_set indices out of range")
        if len(self.crc_set) != self.crc_len or not set(self.crc_set) <= set(info):
            raise ValueError("crc_set must be crc_len positions inside info_set")
        if self.crc_len >= len(info) and self.crc_len > 0:
            raise ValueError("no room for payload bits")
        if self.crc_len and self.crc_poly >> self.crc_len != 1:
            raise ValueError("crc_poly degree must equal crc_len")

    @property
    def n(self) -> int:
        return 1 << self.m

    @property
    def k_total(self) -> int:
        return len(self.info_set)

    @property
    def k_payload(self) -> int:
        return self.k_total - self.crc_len

    @property
    def payload_positions(self) -> np.ndarray:
        crc = set(self.crc_set)
        return np.array([i for i in self.info_set if i not in crc], dtype=np.int64)

    @property
    def frozen_mask(self) -> np.ndarray:
        f = np.ones(self.n, dtype=np.bool_)
        f[list(self.info_set)] = False
        return f

    def structure(self) -> dict[str, Any]:
        return {"m": self.m, "info_set": list(self.info_set), "crc_len": self.crc_len,
                "crc_poly": self.crc_poly, "crc_set": list(self.crc_set)}

    def digest(self) -> str:
        blob = json.dumps(self.structure(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()

    def to_json(self) -> str:
        doc = {"format": "lowcap.polar_spec", "schema_version": SCHEMA_VERSION,
               **self.structure(), "construction": self.construction}
        return json.dumps(doc, sort_keys=True, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "PolarSpec":
        doc = json.loads(text)
        if doc.get("format") != "lowcap.polar_spec":
            raise ValueError("not a polar spec document")
        if doc.get("schema_version") != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema_version {doc.get('schema_version')!r}")
        return cls(doc["m"], tuple(doc["info_set"]), doc["crc_len"], doc["crc_poly"],
                   tuple(doc["crc_set"]), doc.get("construction", {}))


# ---------------------------------------------------------------------------
# construction
# ---------------------------------------------------------------------------


def bhattacharyya_bec(epsilon: float, index: int, m: int) -> float:
    if not 0 <= index < (1 << m):
        raise ValueError("index out of range")
    z = float(epsilon)
    for j in range(m):
        if (index >> (m - 1 - j)) & 1:
            z = z * z
        else:
            z = 2.0 * z - z * z
    return z


def bhattacharyya_bec_all(epsilon: float, m: int) -> np.ndarray:
    n = 1 << m
    idx = np.arange(n)
    z = np.full(n, float(epsilon))
    for j in range(m):
        plus = ((idx >> (m - 1 - j)) & 1).astype(bool)
        z = np.where(plus, z * z, 2.0 * z - z * z)
    return z


def reliability_order(z: np.ndarray) -> np.ndarray:
    """Indices from most to least reliable; ties go to the lower index."""
    return np.lexsort((np.arange(z.size), z))


def construct(ch: ChannelModel, m: int, k_total: int, crc_len: int = 0,
              crc_poly: int | None = None) -> PolarSpec:
    """Pick the k_total most reliable synthetic channels.

    Channels other than the BEC are replaced by the BEC of equal capacity.
    """
    n = 1 << m
    if not 1 <= k_total <= n:
        raise ValueError("need 1 <= k_total <= 2^m")
    if crc_len:
        if crc_poly is None:
            if crc_len not in DEFAULT_CRC_POLYS:
                raise ValueError(f"no default polynomial for CRC length {crc_len}")
            crc_poly = DEFAULT_CRC_POLYS[crc_len]
    else:
        crc_poly = 0
    eps = ch.epsilon if isinstance(ch, BEC) else 1.0 - capacity(ch)
    z = bhattacharyya_bec_all(eps, m)
    order = reliability_order(z)
    chosen = order[:k_total]
    crc_set = order[k_total - crc_len:k_total] if crc_len else []
    meta = {"channel": ch.to_dict(), "surrogate_epsilon": eps,
            "method": "bec" if isinstance(ch, BEC) else "bec_surrogate_capacity"}
    return PolarSpec(m, tuple(sorted(chosen.tolist())), crc_len, crc_poly,
                     tuple(sorted(np.asarray(crc_set).tolist())), meta)


def min_distance(spec: PolarSpec) -> int:
    return min(1 << bin(i).count("1") for i in spec.info_set)


# ---------------------------------------------------------------------------
# encoding
# ---------------------------------------------------------------------------


def polar_transform(u) -> np.ndarray:
    """u G_n over GF(2), natural order; accepts a trailing axis of length 2^m."""
    u = np.ascontiguousarray(u, dtype=np.uint8)
    if u.ndim == 1 and BACKEND == "numba":
        return _kernels.polar_transform(u)
    from . import _polar_numpy
    return _polar_numpy.polar_transform(u)


def transform_xor_count(m: int) -> int:
    return (1 << m) // 2 * m


def _check_payload(spec, payload):
    p = np.asarray(payload, dtype=np.uint8)
    if p.shape[-1] != spec.k_payload:
        raise ValueError(f"payload must have {spec.k_payload} bits, got {p.shape[-1]}")
    if p.size and p.max() > 1:
        raise ValueError("payload bits must be 0 or 1")
    return p


def place_bits(spec: PolarSpec, payload) -> np.ndarray:
    """The u vector: payload and CRC scattered into info positions."""
    p = _check_payload(spec, payload)
    u = np.zeros(p.shape[:-1] + (spec.n,), dtype=np.uint8)
    u[..., spec.payload_positions] = p
    if spec.crc_len:
        flat = p.reshape(-1, spec.k_payload)
        crc = np.array([crc_bits(row, spec.crc_poly, spec.crc_len) for row in flat])
        u[..., list(spec.crc_set)] = crc.reshape(p.shape[:-1] + (spec.crc_len,))
    return u


def encode(spec: PolarSpec, payload) -> np.ndarray:
    return polar_transform(place_bits(spec, payload))


# ---------------------------------------------------------------------------
# decoding
# ---------------------------------------------------------------------------


class Decoded(NamedTuple):
    payload: np.ndarray
    crc_ok: bool


def saturate_llrs(llrs) -> np.ndarray:
    """Replace +-inf by +-LLR_CAP so the decoder never forms inf - inf."""
    x = np.asarray(llrs, dtype=np.float64)
    return np.nan_to_num(x, nan=0.0, posinf=LLR_CAP, neginf=-LLR_CAP)


def _crc_ok(spec: PolarSpec, u: np.ndarray) -> bool:
    if not spec.crc_len:
        return True
    got = u[list(spec.crc_set)]
    return bool(np.array_equal(crc_bits(u[spec.payload_positions], spec.crc_poly, spec.crc_len), got))


def _check_llrs(spec, llrs):
    x = saturate_llrs(llrs)
    if x.shape != (spec.n,):
        raise ValueError(f"expected {spec.n} LLRs, got shape {x.shape}")
    return x


def sc_decode(spec: PolarSpec, llrs, minsum: bool = False, backend: str | None = None) -> Decoded:
    x = _check_llrs(spec, llrs)
    u = get_kernels(backend).sc_decode(x, spec.frozen_mask, spec.m, minsum)
    return Decoded(u[spec.payload_positions].copy(), _crc_ok(spec, u))


def scl_candidates(spec: PolarSpec, llrs, list_size: int, minsum: bool = False,
                   backend: str | None = None):
    """All surviving (u, metric) pairs, best metric first (ties by slot)."""
    if list_size < 1:
        raise ValueError("list_size must be positive")
    x = _check_llrs(spec, llrs)
    u, pm, alive = get_kernels(backend).scl_decode(x, spec.frozen_mask, spec.m,
                                                   int(list_size), minsum)
    slots = np.flatnonzero(alive)
    slots = slots[np.argsort(pm[slots], kind="stable")]
    return u[slots], pm[slots]


def scl_decode(spec: PolarSpec, llrs, list_size: int, minsum: bool = False,
               backend: str | None = None) -> Decoded:
    """List decoding; the best path passing the CRC wins, else the best path."""
    us, _ = scl_candidates(spec, llrs, list_size, minsum, backend)
    for u in us:
        if _crc_ok(spec, u):
            return Decoded(u[spec.payload_positions].copy(), True)
    return Decoded(us[0][spec.payload_positions].copy(), not spec.crc_len)


# ---------------------------------------------------------------------------
# implicit repetition
# ---------------------------------------------------------------------------


def theorem7_m0(kappa: float) -> float:
    """log2(4 kappa^2): the inner length exponent guaranteed at low capacity."""
    if not kappa > 0:
        raise ValueError("kappa must be positive")
    return 2.0 + 2.0 * math.log2(kappa)


def guaranteed_repetition_exponent(kappa: float, m: int) -> int | None:
    """Leading plus steps guaranteed for every good index; None if vacuous."""
    m0 = theorem7_m0(kappa)
    if m0 >= m:
        return None
    return int(math.ceil(m - m0))


def leading_ones(index: int, m: int) -> int:
    c = 0
    for j in range(m):
        if (index >> (m - 1 - j)) & 1:
            c += 1
        else:
            break
    return c


def implicit_repetition_factor(spec: PolarSpec) -> int:
    s = min(leading_ones(i, spec.m) for i in spec.info_set)
    return 1 << s


def inner_spec(spec: PolarSpec) -> PolarSpec:
    """The shorter code that the full code repeats."""
    factor = implicit_repetition_factor(spec)
    m_in = spec.m - (factor.bit_length() - 1)
    mask = (1 << m_in) - 1
    meta = dict(spec.construction, outer_m=spec.m, repetition=factor)
    return PolarSpec(m_in, tuple(i & mask for i in spec.info_set), spec.crc_len,
                     spec.crc_poly, tuple(i & mask for i in spec.crc_set), meta)


def fast_encode(spec: PolarSpec, payload) -> np.ndarray:
    factor = implicit_repetition_factor(spec)
    if factor == 1:
        return encode(spec, payload)
    x = encode(inner_spec(spec), payload)
    return np.tile(x, (1,) * (x.ndim - 1) + (factor,))


def encode_work(spec: PolarSpec, fast: bool) -> int:
    """XOR and copy operations spent by the direct or fast encoder."""
    if not fast:
        return transform_xor_count(spec.m)
    factor = implicit_repetition_factor(spec)
    if factor == 1:
        return transform_xor_count(spec.m)
    return transform_xor_count(spec.m - (factor.bit_length() - 1)) + spec.n


def fast_decode(spec: PolarSpec, llrs, list_size: int, minsum: bool = False,
                backend: str | None = None) -> Decoded:
    factor = implicit_repetition_factor(spec)
    if factor == 1:
        return scl_decode(spec, llrs, list_size, minsum, backend)
    folded = fold_repetition_llrs(_check_llrs(spec, llrs), factor)
    return scl_decode(inner_spec(spec), folded, list_size, minsum, backend)


@dataclass(frozen=True)
class AuditReport:
    epsilon: float
    m: int
    kappa: float
    m0: float
    required_leading_plus: int | None
    n_good: int
    min_leading_plus: int | None
    counterexamples: tuple[int, ...]

    @property
    def vacuous(self) -> bool:
        return self.required_leading_plus is None


def theorem7_bhattacharyya_audit(epsilon: float, m: int) -> AuditReport:
    """Check that every index with Z < 1/2 starts with enough plus steps.

    The requirement is ceil(m - m0) leading plus steps, i.e. the code is a
    length at most 2^m0 code repeated 2^(m - m0) times; it is vacuous when
    m0 >= m.
    """
    n = 1 << m
    kappa = n * (1.0 - epsilon)
    m0 = theorem7_m0(kappa)
    need = guaranteed_repetition_exponent(kappa, m)
    z = bhattacharyya_bec_all(epsilon, m)
    good = np.flatnonzero(z < 0.5)
    lead = [leading_ones(int(i), m) for i in good]
    bad = () if need is None else tuple(int(i) for i, c in zip(good, lead) if c < need)
    return AuditReport(epsilon, m, kappa, m0, need, int(good.size),
                       min(lead) if lead else None, bad)
