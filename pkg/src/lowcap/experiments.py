"""Monte Carlo frame-error estimation and figure sweeps.

Trial t of a run with master seed s draws everything (payload and noise)
from ``RngStream(s, t)``, and a run stops at the first trial index at which
the stop rule is met.  Results therefore do not depend on how trials are
spread over worker threads.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import os
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Callable, Sequence

import numpy as np
from scipy.stats import binomtest

from . import bounds_bec, bounds_bsc
from .bounds_awgn import shannon_limit_ebn0
from .channels import BEC, BIAWGN, BSC, ChannelModel, RngStream, channel_from_dict, transmit
from .numerics import NumericalFailure
from .polar import (
    BACKEND,
    PolarSpec,
    construct,
    encode,
    fast_decode,
    fast_encode,
    implicit_repetition_factor,
    scl_decode,
)
from .results import ACHIEVABILITY, CONVERSE

log = logging.getLogger(__name__)

CACHE_SCHEMA_VERSION = 1
CSV_HEADER = ["param", "n", "bound_th_ach", "bound_th_conv", "bound_raw_ach",
              "bound_raw_conv", "normal_approx", "polar_n_or_fer", "trials", "errors",
              "ci_lo", "ci_hi", "seed"]

FIG3_M = 13
FIG3_K = 40
FIG3_CRC = 6
FIG3_DESIGN_EBN0_DB = -1.0


# ---------------------------------------------------------------------------
# stop rule and result type
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StopRule:
    """Stop after ``min_errors`` errors or ``max_trials`` trials.

    With ``target`` set the error count is ignored; the run instead stops at
    the first multiple of ``check_every`` trials at which the Wilson interval
    lies entirely on one side of the target (or at ``max_trials``).
    """

    min_errors: int = 100
    max_trials: int = 10 ** 7
    target: float | None = None
    check_every: int = 1000

    def __post_init__(self):
        if self.min_errors < 1:
            raise ValueError("min_errors must be at least 1")
        if self.max_trials < 1:
            raise ValueError("max_trials must be at least 1")
        if self.check_every < 1:
            raise ValueError("check_every must be at least 1")


def wilson_interval(errors: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(int(errors), int(trials)).proportion_ci(confidence_level=level, method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class FerPoint:
    channel: dict[str, Any]
    spec_digest: str
    list_size: int
    trials: int
    errors: int
    fer: float
    ci95: tuple[float, float]
    master_seed: int
    metadata: dict[str, Any] = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict[str, Any]:
        d = asdict(self)
        d["ci95"] = list(self.ci95)
        return d

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> "FerPoint":
        return cls(d["channel"], d["spec_digest"], int(d["list_size"]), int(d["trials"]),
                   int(d["errors"]), float(d["fer"]), tuple(d["ci95"]), int(d["master_seed"]),
                   d.get("metadata", {}))


# ---------------------------------------------------------------------------
# trial runner
# ---------------------------------------------------------------------------


def run_trials(trial: Callable[[RngStream], bool], stop: StopRule, seed: int,
               workers: int = 1, chunk: int = 256) -> tuple[int, int, str]:
    """Run ``trial`` on streams 0, 1, ... until ``stop`` fires.

    Returns (trials, errors, reason).  Chunks of trials may run on several
    threads, but the cut point only depends on the ordered outcomes.
    """
    done = errors = 0

    def run_chunk(start):
        end = min(start + chunk, stop.max_trials)
        return np.fromiter((trial(RngStream(seed, t)) for t in range(start, end)),
                           dtype=bool, count=end - start)

    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        while done < stop.max_trials:
            starts = range(done, min(stop.max_trials, done + chunk * max(workers, 1)), chunk)
            outcomes = list(pool.map(run_chunk, starts)) if pool else [run_chunk(s) for s in starts]
            for flags in outcomes:
                for f in flags:
                    done += 1
                    errors += int(f)
                    if stop.target is None:
                        if errors >= stop.min_errors:
                            return done, errors, "min_errors"
                    elif done % stop.check_every == 0:
                        lo, hi = wilson_interval(errors, done)
                        if hi < stop.target or lo > stop.target:
                            return done, errors, "decided"
        return done, errors, "max_trials"
    finally:
        if pool:
            pool.shutdown()


def make_trial(spec: PolarSpec, ch: ChannelModel, list_size: int, fast: bool = True):
    enc = fast_encode if fast else encode
    dec = fast_decode if fast else scl_decode

    def trial(stream: RngStream) -> bool:
        gen = stream.generator()
        payload = gen.integers(0, 2, spec.k_payload, dtype=np.uint8)
        y = transmit(ch, enc(spec, payload), gen)
        got = dec(spec, y, list_size).payload
        return not np.array_equal(got, payload)

    return trial


def estimate_fer(spec: PolarSpec, ch: ChannelModel, list_size: int,
                 stop: StopRule = StopRule(), seed: int = 0, workers: int = 1,
                 fast: bool = True, cache_dir: str | os.PathLike | None = None) -> FerPoint:
    """Frame error rate of list decoding on ``ch``, with a Wilson interval."""
    key = None
    if cache_dir is not None:
        key = cache_key(spec, ch, list_size, seed, stop)
        hit = cache_get(key, cache_dir)
        if hit is not None:
            return hit
    trials, errors, reason = run_trials(make_trial(spec, ch, list_size, fast), stop, seed, workers)
    point = FerPoint(ch.to_dict(), spec.digest(), list_size, trials, errors, errors / trials,
                     wilson_interval(errors, trials), seed,
                     {"stopped_by": reason, "stop_rule": asdict(stop), "backend": BACKEND,
                      "repetition_factor": implicit_repetition_factor(spec),
                      "n": spec.n, "k_payload": spec.k_payload, "crc_len": spec.crc_len})
    if key is not None:
        cache_put(key, point, cache_dir)
    return point


# ---------------------------------------------------------------------------
# cache
# ---------------------------------------------------------------------------


def cache_key(spec: PolarSpec, ch: ChannelModel, list_size: int, seed: int, stop: StopRule) -> str:
    blob = json.dumps({"v": CACHE_SCHEMA_VERSION, "spec": spec.digest(), "channel": ch.to_dict(),
                       "L": list_size, "seed": seed, "stop": asdict(stop)},
                      sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def default_cache_dir() -> str | None:
    return os.environ.get("LOWCAP_CACHE_DIR") or None


def cache_get(key: str, cache_dir) -> FerPoint | None:
    path = Path(cache_dir) / f"{key}.json"
    if not path.exists():
        return None
    try:
        doc = json.loads(path.read_text())
        if doc.get("schema_version") != CACHE_SCHEMA_VERSION or doc.get("key") != key:
            return None
        return FerPoint.from_dict(doc["point"])
    except (ValueError, KeyError, TypeError) as exc:
        log.warning("ignoring unreadable cache entry %s: %s", path, exc)
        return None


def cache_put(key: str, point: FerPoint, cache_dir) -> Path:
    d = Path(cache_dir)
    d.mkdir(parents=True, exist_ok=True)
    doc = {"schema_version": CACHE_SCHEMA_VERSION, "key": key, "point": point.to_dict()}
    fd, tmp = tempfile.mkstemp(dir=d, suffix=".tmp")
    with os.fdopen(fd, "w") as fh:
        json.dump(doc, fh, sort_keys=True)
    final = d / f"{key}.json"
    os.replace(tmp, final)
    return final


# ---------------------------------------------------------------------------
# polar blocklength search
# ---------------------------------------------------------------------------


def find_min_polar_blocklength(k: int, ch_family, pe_target: float, list_size: int = 16,
                               seed: int = 0, crc_len: int = 6, m_min: int | None = None,
                               m_max: int = 16, stop: StopRule | None = None,
                               workers: int = 1, cache_dir=None) -> tuple[int, FerPoint]:
    """Smallest n = 2^m whose code meets ``pe_target`` with 95% confidence.

    ``ch_family`` is a channel or a callable mapping n to a channel.
    """
    stop = stop or StopRule(target=pe_target)
    if m_min is None:
        m_min = max(1, math.ceil(math.log2(k + crc_len)))
    last = None
    for m in range(m_min, m_max + 1):
        n = 1 << m
        ch = ch_family(n) if callable(ch_family) else ch_family
        spec = construct(ch, m, k + crc_len, crc_len=crc_len)
        last = estimate_fer(spec, ch, list_size, stop, seed, workers, cache_dir=cache_dir)
        if last.ci95[1] < pe_target:
            return n, last
    raise NumericalFailure(f"no polar length up to 2^{m_max} reached pe={pe_target}")


# ---------------------------------------------------------------------------
# sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepConfig:
    figure: int
    grid: Sequence[float]
    k: int = 40
    pe: float = 0.01
    list_size: int = 16
    crc_len: int = 6
    seed: int = 0
    min_errors: int = 100
    max_trials: int = 10 ** 7
    polar: bool = True
    m: int = FIG3_M
    design_ebn0_db: float = FIG3_DESIGN_EBN0_DB
    m_max: int = 15
    workers: int = 1
    output: str | None = None
    cache_dir: str | None = None

    def __post_init__(self):
        if self.figure not in (1, 2, 3):
            raise ValueError("figure must be 1, 2 or 3")
        if len(self.grid) == 0:
            raise ValueError("grid must be nonempty")
        if self.min_errors < 1:
            raise ValueError("min_errors must be at least 1")

    @property
    def stop(self) -> StopRule:
        return StopRule(self.min_errors, self.max_trials)


def row_seed(seed: int, row: int) -> int:
    return int(np.random.SeedSequence([seed, row]).generate_state(1, dtype=np.uint64)[0] >> 1)


def _fmt(x):
    if x is None:
        return ""
    if isinstance(x, float):
        return repr(x)
    return str(x)


def _try(fn, errors, key):
    try:
        return fn()
    except (NumericalFailure, ValueError) as exc:
        errors.setdefault(key, []).append(f"{type(exc).__name__}: {exc}")
        return None


def _bec_row(cfg, i, eps, errors):
    th = lambda d: bounds_bec.theorem1_threshold(cfg.k, eps, cfg.pe, d)[0]
    raw = lambda d: bounds_bec.raw_threshold(cfg.k, eps, cfg.pe, d)[0]
    row = {"param": eps,
           "bound_th_ach": _try(lambda: th(ACHIEVABILITY), errors, i),
           "bound_th_conv": _try(lambda: th(CONVERSE), errors, i),
           "bound_raw_ach": _try(lambda: raw(ACHIEVABILITY), errors, i),
           "bound_raw_conv": _try(lambda: raw(CONVERSE), errors, i),
           "normal_approx": _try(lambda: bounds_bec.normal_approx_threshold(cfg.k, eps, cfg.pe)[0],
                                 errors, i)}
    row["n"] = row["bound_th_conv"]
    return row, _try(lambda: BEC(eps), errors, i)


def _bsc_row(cfg, i, delta, errors):
    row = {"param": delta,
           "bound_th_ach": _try(lambda: bounds_bsc.theorem2_threshold(cfg.k, delta, cfg.pe)[0],
                                errors, i),
           "bound_th_conv": None,
           "bound_raw_ach": _try(lambda: bounds_bsc.rcu_threshold(cfg.k, delta, cfg.pe)[0],
                                 errors, i),
           "bound_raw_conv": _try(lambda: bounds_bsc.metaconverse_threshold(cfg.k, delta, cfg.pe)[0],
                                  errors, i),
           "normal_approx": _try(lambda: bounds_bsc.normal_approx_threshold(cfg.k, delta, cfg.pe)[0],
                                 errors, i)}
    row["n"] = row["bound_raw_conv"]
    return row, _try(lambda: BSC(delta), errors, i)


def fig3_spec(design_ebn0_db: float = FIG3_DESIGN_EBN0_DB, m: int = FIG3_M, k: int = FIG3_K,
              crc_len: int = FIG3_CRC) -> PolarSpec:
    """The (2^m, k) CRC-aided code constructed at the given design Eb/N0."""
    rate = k / (1 << m)
    spec = construct(BIAWGN.from_ebn0(design_ebn0_db, rate), m, k + crc_len, crc_len=crc_len)
    meta = dict(spec.construction, design_ebn0_db=design_ebn0_db)
    return PolarSpec(spec.m, spec.info_set, spec.crc_len, spec.crc_poly, spec.crc_set, meta)


def run_sweep(cfg: SweepConfig) -> dict[str, Any]:
    """Evaluate every grid point; returns rows, normalized rows and a summary."""
    rows, norm_rows, errors, points = [], [], {}, {}
    spec3 = fig3_spec(cfg.design_ebn0_db, cfg.m, cfg.k, cfg.crc_len) if cfg.figure == 3 else None
    for i, p in enumerate(cfg.grid):
        seed = row_seed(cfg.seed, i)
        p = float(p)
        if cfg.figure == 3:
            row = {"param": p, "n": spec3.n}
            ch = BIAWGN.from_ebn0(p, cfg.k / spec3.n)
            if cfg.polar:
                pt = _try(lambda: estimate_fer(spec3, ch, cfg.list_size, cfg.stop, seed,
                                               cfg.workers, cache_dir=cfg.cache_dir), errors, i)
                if pt is not None:
                    points[i] = pt
                    row["polar_n_or_fer"] = pt.fer
        else:
            row, ch = (_bec_row if cfg.figure == 1 else _bsc_row)(cfg, i, p, errors)
            if cfg.polar and ch is not None:
                stop = StopRule(cfg.min_errors, cfg.max_trials, target=cfg.pe)
                res = _try(lambda: find_min_polar_blocklength(
                    cfg.k, ch, cfg.pe, cfg.list_size, seed, cfg.crc_len, m_max=cfg.m_max,
                    stop=stop, workers=cfg.workers, cache_dir=cfg.cache_dir), errors, i)
                if res is not None:
                    row["polar_n_or_fer"] = res[0]
                    points[i] = res[1]
        if i in points:
            pt = points[i]
            row.update(trials=pt.trials, errors=pt.errors, ci_lo=pt.ci95[0], ci_hi=pt.ci95[1])
        row["seed"] = seed
        rows.append(row)
        ref = row.get("n")
        norm = {"param": p}
        for col in CSV_HEADER[2:8]:
            v = row.get(col)
            if cfg.figure != 3 and ref and v is not None:
                norm[col] = v / ref
        norm_rows.append(norm)
    summary = {"figure": cfg.figure, "errors": {str(k): v for k, v in errors.items()}}
    if cfg.figure == 3:
        summary["shannon_limit_db"] = shannon_limit_ebn0(cfg.k / spec3.n)
        summary["design_ebn0_db"] = cfg.design_ebn0_db
        summary["spec_digest"] = spec3.digest()
        summary["repetition_factor"] = implicit_repetition_factor(spec3)
    return {"rows": rows, "normalized": norm_rows, "summary": summary,
            "points": {str(k): v.to_dict() for k, v in points.items()}}


def rows_to_csv(rows: list[dict[str, Any]], header: Sequence[str] = CSV_HEADER) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([_fmt(r.get(c)) for c in header])
    return buf.getvalue()


def figure1_sweep(cfg: SweepConfig) -> str:
    return rows_to_csv(run_sweep(SweepConfig(**{**asdict(cfg), "figure": 1}))["rows"])


def figure2_sweep(cfg: SweepConfig) -> str:
    return rows_to_csv(run_sweep(SweepConfig(**{**asdict(cfg), "figure": 2}))["rows"])


def figure3_sweep(cfg: SweepConfig) -> str:
    return rows_to_csv(run_sweep(SweepConfig(**{**asdict(cfg), "figure": 3}))["rows"])


def design_point_sweep(design_grid: Sequence[float], ebn0_db: float, list_size: int = 16,
                       stop: StopRule = StopRule(), seed: int = 0, m: int = FIG3_M,
                       k: int = FIG3_K, crc_len: int = FIG3_CRC) -> list[dict[str, Any]]:
    """FER at one operating point for codes built at several design points."""
    out = []
    ch = BIAWGN.from_ebn0(ebn0_db, k / (1 << m))
    for d in design_grid:
        spec = fig3_spec(d, m, k, crc_len)
        pt = estimate_fer(spec, ch, list_size, stop, seed)
        out.append({"design_ebn0_db": float(d), "repetition_factor": implicit_repetition_factor(spec),
                    "fer": pt.fer, "ci95": list(pt.ci95), "trials": pt.trials, "errors": pt.errors})
    return out


__all__ = [
    "CSV_HEADER", "FIG3_DESIGN_EBN0_DB", "FerPoint", "StopRule", "SweepConfig",
    "cache_get", "cache_key", "cache_put", "channel_from_dict", "design_point_sweep",
    "estimate_fer", "fig3_spec", "figure1_sweep", "figure2_sweep", "figure3_sweep",
    "find_min_polar_blocklength", "rows_to_csv", "run_sweep", "run_trials", "wilson_interval",
]
