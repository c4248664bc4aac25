"""Command-line front end.

Data goes to stdout (JSON or CSV), logs to stderr.  Exit status is 0 on
success, 2 for usage or domain errors and 3 for numerical failures.
"""
from __future__ import annotations

import argparse
import datetime as _dt
import hashlib
import json
import logging
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, bounds_awgn, bounds_bec, bounds_bsc, repetition
from .channels import BEC, BIAWGN, BSC
from .experiments import (
    CSV_HEADER,
    FIG3_DESIGN_EBN0_DB,
    StopRule,
    SweepConfig,
    default_cache_dir,
    estimate_fer,
    fig3_spec,
    rows_to_csv,
    run_sweep,
)
from .polar import (
    BACKEND,
    PolarSpec,
    construct,
    encode,
    fast_decode,
    fast_encode,
    implicit_repetition_factor,
    min_distance,
    scl_decode,
    theorem7_bhattacharyya_audit,
)
from .results import ACHIEVABILITY, CONVERSE

log = logging.getLogger("lowcap")


class UsageError(ValueError):
    """Bad or missing command-line input."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ---------------------------------------------------------------------------
# helpers
# ---------------------------------------------------------------------------


def _emit(obj: Any, out: str | None = None) -> None:
    text = json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n"
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat()


def write_manifest(out: Path, argv: list[str], config: dict[str, Any], seeds: list[int],
                   started: str, outputs: list[Path], extra: dict[str, Any] | None = None) -> Path:
    """Write ``<out>.manifest.json`` describing how ``outputs`` were made."""
    doc = {"command": argv, "config": config, "version": __version__, "backend": BACKEND,
           "seeds": seeds, "started": started, "finished": _now(),
           "outputs": {p.name: _sha256(p) for p in outputs}}
    if extra:
        doc["extra"] = extra
    path = out.with_name(out.name + ".manifest.json")
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n")
    return path


def read_config(path: str) -> dict[str, str]:
    """Flat ``key = value`` file; '#' starts a comment."""
    cfg = {}
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key=value")
        key, val = (s.strip() for s in line.split("=", 1))
        cfg[key.replace("-", "_")] = val
    return cfg


def _merge(cfg: dict[str, Any], args: argparse.Namespace, keys) -> dict[str, Any]:
    out = dict(cfg)
    for k in keys:
        v = getattr(args, k, None)
        if v is not None:
            out[k] = v
    return out


def _require(cfg: dict[str, Any], keys) -> None:
    for k in keys:
        if k not in cfg:
            raise UsageError(f"missing config key: {k}")


def _grid(v) -> list[float]:
    if isinstance(v, (list, tuple)):
        return [float(x) for x in v]
    return [float(x) for x in str(v).replace(",", " ").split()]


def _bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise UsageError(f"not a boolean: {v!r}")


def _int(v) -> int:
    f = float(v)
    if f != int(f):
        raise UsageError(f"not an integer: {v!r}")
    return int(f)


# ---------------------------------------------------------------------------
# channel selection
# ---------------------------------------------------------------------------


def _add_channel_args(p, required=True):
    g = p.add_mutually_exclusive_group(required=required)
    g.add_argument("--bec", type=float, metavar="EPS", help="BEC erasure probability")
    g.add_argument("--bsc", type=float, metavar="DELTA", help="BSC crossover probability")
    g.add_argument("--awgn-eta", "--eta", dest="eta", type=float, help="AWGN SNR, linear")
    g.add_argument("--awgn-ebn0-db", "--ebn0-db", dest="ebn0_db", type=float,
                   help="Eb/N0 in dB (needs --rate)")
    p.add_argument("--rate", type=float, help="code rate for --ebn0-db")


def _eta_from_args(args) -> float | None:
    if args.eta is not None:
        return args.eta
    if args.ebn0_db is not None:
        if args.rate is None:
            raise UsageError("--ebn0-db needs --rate")
        if not 0 < args.rate < 1:
            raise ValueError("rate must lie in (0, 1)")
        return 2.0 * args.rate * 10.0 ** (args.ebn0_db / 10.0)
    return None


def _channel_model(args):
    if args.bec is not None:
        return BEC(args.bec)
    if args.bsc is not None:
        return BSC(args.bsc)
    if args.eta is not None:
        return BIAWGN.from_eta(args.eta)
    if args.ebn0_db is not None:
        if args.rate is None:
            raise UsageError("--ebn0-db needs --rate")
        return BIAWGN.from_ebn0(args.ebn0_db, args.rate)
    return None


# ---------------------------------------------------------------------------
# bound / blocklength / repetition
# ---------------------------------------------------------------------------


def cmd_bound(args) -> dict[str, Any]:
    methods = ("theorem", "raw", "normal") if args.method == "all" else (args.method,)
    out = []
    eta = _eta_from_args(args)
    if args.bec is not None:
        q = bounds_bec.BecQuery(args.bec, args.n, args.pe)
        chan = {"kind": "BEC", "epsilon": args.bec}
        if "theorem" in methods:
            out += [bounds_bec.bec_theorem1_achievable(q), bounds_bec.bec_theorem1_converse(q)]
        if "raw" in methods:
            out += [bounds_bec.bec_rcu_raw_log2m(q), bounds_bec.bec_converse_raw_log2m(q)]
        if "normal" in methods:
            out.append(bounds_bec.bec_normal_approx(q))
    elif args.bsc is not None:
        q = bounds_bsc.BscQuery(args.bsc, args.n, args.pe)
        chan = {"kind": "BSC", "delta": args.bsc}
        if "theorem" in methods:
            out.append(bounds_bsc.bsc_theorem2_log2m(q))
        if "raw" in methods:
            out += [bounds_bsc.bsc_rcu_raw_log2m(args.n, args.bsc, args.pe),
                    bounds_bsc.bsc_metaconverse_log2m(args.n, args.bsc, args.pe)]
        if "normal" in methods:
            out.append(bounds_bsc.bsc_normal_approx(q))
    else:
        q = bounds_awgn.AwgnQuery(eta, args.n, args.pe)
        chan = {"kind": "AWGN", "eta": eta}
        if args.method in ("raw", "normal"):
            raise UsageError(f"method {args.method!r} is not available for AWGN")
        out += list(bounds_awgn.awgn_theorem3_interval(q))
    return {"channel": chan, "n": args.n, "pe": args.pe, "results": [r.to_dict() for r in out]}


def cmd_blocklength(args) -> dict[str, Any]:
    k, pe = args.k, args.pe
    methods = ("theorem", "raw", "normal") if args.method == "all" else (args.method,)
    res: dict[str, Any] = {"k": k, "pe": pe}
    eta = _eta_from_args(args)
    if args.bec is not None:
        eps = args.bec
        res["channel"] = {"kind": "BEC", "epsilon": eps}
        if "theorem" in methods:
            res["interval"] = bounds_bec.bec_blocklength_interval(k, eps, pe).to_dict()
        if "raw" in methods:
            res["raw"] = {ACHIEVABILITY: bounds_bec.raw_threshold(k, eps, pe, ACHIEVABILITY)[0],
                          CONVERSE: bounds_bec.raw_threshold(k, eps, pe, CONVERSE)[0]}
        if "normal" in methods:
            res["normal_approx"] = bounds_bec.normal_approx_threshold(k, eps, pe)[0]
    elif args.bsc is not None:
        d = args.bsc
        res["channel"] = {"kind": "BSC", "delta": d}
        if "theorem" in methods:
            res["prediction"] = bounds_bsc.theorem2_threshold(k, d, pe)[0]
            res["prediction_real"] = bounds_bsc.theorem2_threshold_real(k, d, pe)
            res["corollary1"] = bounds_bsc.bsc_corollary1_blocklength(k, d, pe)
        if "raw" in methods:
            lo = bounds_bsc.metaconverse_threshold(k, d, pe)[0]
            hi = bounds_bsc.rcu_threshold(k, d, pe)[0]
            res["interval"] = {"n_lower": lo, "n_upper": hi, "metadata": {"method": "raw"}}
        if "normal" in methods:
            res["normal_approx"] = bounds_bsc.normal_approx_threshold(k, d, pe)[0]
    else:
        res["channel"] = {"kind": "AWGN", "eta": eta}
        if args.method in ("raw", "normal"):
            raise UsageError(f"method {args.method!r} is not available for AWGN")
        res["interval"] = bounds_awgn.theorem3_blocklength_interval(k, eta, pe).to_dict()
        res["corollary2"] = bounds_awgn.awgn_corollary2_blocklength(k, eta, pe)
    return res


def cmd_repetition(args) -> dict[str, Any]:
    plan = repetition.plan_repetition(args.n, args.epsilon, args.beta)
    out = plan.to_dict()
    out["epsilon"] = args.epsilon
    out["negligible_loss_r"] = repetition.negligible_loss_repetition(
        args.n, args.n * (1.0 - args.epsilon))
    return out


def cmd_shannon_limit(args) -> dict[str, Any]:
    return {"rate": args.rate, "ebn0_db": bounds_awgn.shannon_limit_ebn0(args.rate)}


# ---------------------------------------------------------------------------
# polar
# ---------------------------------------------------------------------------


def _load_spec(path: str) -> PolarSpec:
    text = sys.stdin.read() if path == "-" else Path(path).read_text()
    return PolarSpec.from_json(text)


def _bits(s: str, name: str) -> np.ndarray:
    s = s.strip()
    if s and set(s) - {"0", "1"}:
        raise ValueError(f"{name} must be a string of 0 and 1")
    return np.frombuffer(s.encode(), dtype=np.uint8) - ord("0")


def _bitstring(a) -> str:
    return "".join(map(str, np.asarray(a, dtype=np.uint8).tolist()))


def cmd_polar(args) -> Any:
    sub = args.polar_cmd
    if sub == "construct":
        if args.fig3:
            spec = fig3_spec(args.design_ebn0_db)
        else:
            if args.m is None or args.k is None:
                raise UsageError("construct needs --m and --k (or --fig3)")
            if args.capacity is not None:
                if not 0 < args.capacity <= 1:
                    raise ValueError("capacity must lie in (0, 1]")
                ch = BEC(1.0 - args.capacity)
            else:
                ch = _channel_model(args)
                if ch is None:
                    raise UsageError("construct needs a channel or --capacity")
            spec = construct(ch, args.m, args.k + args.crc_len, crc_len=args.crc_len)
        text = spec.to_json() + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            sys.stdout.write(text)
        return None
    if sub == "audit":
        r = theorem7_bhattacharyya_audit(args.epsilon, args.m)
        return {"epsilon": r.epsilon, "m": r.m, "kappa": r.kappa, "m0": r.m0,
                "required_leading_plus": r.required_leading_plus, "n_good": r.n_good,
                "min_leading_plus": r.min_leading_plus, "vacuous": r.vacuous,
                "counterexamples": list(r.counterexamples)}
    spec = _load_spec(args.spec)
    if sub == "dmin":
        return {"n": spec.n, "k_total": spec.k_total, "d_min": min_distance(spec)}
    if sub == "repfactor":
        f = implicit_repetition_factor(spec)
        return {"n": spec.n, "factor": f, "inner_n": spec.n // f}
    if sub == "encode":
        payload = _bits(args.payload, "payload")
        x = (fast_encode if args.fast else encode)(spec, payload)
        return {"codeword": _bitstring(x)}
    if sub == "decode":
        src = args.llrs
        llrs = np.load(src) if src.endswith(".npy") else np.loadtxt(src, ndmin=1)
        dec = (fast_decode if args.fast else scl_decode)(spec, llrs, args.list_size)
        return {"payload": _bitstring(dec.payload), "crc_ok": bool(dec.crc_ok)}
    raise UsageError(f"unknown polar command {sub!r}")


# ---------------------------------------------------------------------------
# simulate / sweep
# ---------------------------------------------------------------------------

SIM_KEYS = ("channel", "param", "m", "k", "crc_len", "list_size", "seed", "min_errors",
            "max_trials", "design", "workers", "out")


def _sim_channel(kind: str, param: float, rate: float):
    kind = kind.upper()
    if kind == "BEC":
        return BEC(param)
    if kind == "BSC":
        return BSC(param)
    if kind in ("BIAWGN", "AWGN"):
        return BIAWGN.from_ebn0(param, rate)
    raise ValueError(f"unknown channel {kind!r}; use BEC, BSC or BIAWGN")


def cmd_simulate(args, argv) -> None:
    started = _now()
    cfg = read_config(args.config) if args.config else {}
    cfg = _merge(cfg, args, SIM_KEYS)
    _require(cfg, ("channel", "param", "m", "k"))
    m, k = _int(cfg["m"]), _int(cfg["k"])
    crc_len = _int(cfg.get("crc_len", 6))
    rate = k / (1 << m)
    param = float(cfg["param"])
    ch = _sim_channel(str(cfg["channel"]), param, rate)
    design = float(cfg.get("design", param))
    spec = construct(_sim_channel(str(cfg["channel"]), design, rate), m, k + crc_len,
                     crc_len=crc_len)
    seed = _int(cfg.get("seed", 0))
    stop = StopRule(_int(cfg.get("min_errors", 100)), _int(cfg.get("max_trials", 10 ** 7)))
    pt = estimate_fer(spec, ch, _int(cfg.get("list_size", 16)), stop, seed,
                      workers=_int(cfg.get("workers", 1)), cache_dir=default_cache_dir())
    row = {"param": param, "n": spec.n, "polar_n_or_fer": pt.fer, "trials": pt.trials,
           "errors": pt.errors, "ci_lo": pt.ci95[0], "ci_hi": pt.ci95[1], "seed": seed}
    text = rows_to_csv([row])
    out = cfg.get("out")
    if not out:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.write_text(text)
    write_manifest(path, argv, {k: str(v) for k, v in cfg.items()}, [seed], started, [path],
                   {"spec_digest": spec.digest(), "point": pt.to_dict()})
    log.info("wrote %s", path)


SWEEP_KEYS = ("figure", "grid", "k", "pe", "list_size", "crc_len", "seed", "min_errors",
              "max_trials", "polar", "m", "design_ebn0_db", "m_max", "workers", "out")


def sweep_config(cfg: dict[str, Any]) -> SweepConfig:
    _require(cfg, ("figure", "grid"))
    conv = {"figure": _int, "grid": _grid, "k": _int, "pe": float, "list_size": _int,
            "crc_len": _int, "seed": _int, "min_errors": _int, "max_trials": _int,
            "polar": _bool, "m": _int, "design_ebn0_db": float, "m_max": _int,
            "workers": _int}
    kw = {}
    for key, val in cfg.items():
        if key == "out":
            continue
        if key not in conv:
            raise UsageError(f"unknown config key: {key}")
        kw[key] = conv[key](val)
    return SweepConfig(**kw, cache_dir=default_cache_dir())


def cmd_sweep(args, argv) -> None:
    started = _now()
    cfg = read_config(args.config) if args.config else {}
    if args.no_polar:
        args.polar = False
    cfg = _merge(cfg, args, SWEEP_KEYS)
    sc = sweep_config(cfg)
    res = run_sweep(sc)
    text = rows_to_csv(res["rows"])
    norm = rows_to_csv(res["normalized"], ["param"] + CSV_HEADER[2:8])
    out = cfg.get("out")
    for i, errs in res["summary"]["errors"].items():
        log.warning("row %s: %s", i, "; ".join(errs))
    if not out:
        sys.stdout.write(text)
        return
    path = Path(out)
    path.write_text(text)
    npath = path.with_name(path.stem + ".normalized" + path.suffix)
    npath.write_text(norm)
    write_manifest(path, argv, {k: str(v) for k, v in cfg.items()},
                   [r["seed"] for r in res["rows"]], started, [path, npath],
                   {"summary": res["summary"], "points": res["points"]})
    log.info("wrote %s and %s", path, npath)


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="lowcap", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    b = sub.add_parser("bound", help="bounds on log2 M at fixed n and pe")
    _add_channel_args(b)
    b.add_argument("--n", type=int, required=True)
    b.add_argument("--pe", type=float, required=True)
    b.add_argument("--method", choices=("theorem", "raw", "normal", "all"), default="all")

    bl = sub.add_parser("blocklength", help="blocklength needed for k bits at pe")
    _add_channel_args(bl)
    bl.add_argument("--k", type=int, required=True)
    bl.add_argument("--pe", type=float, required=True)
    bl.add_argument("--method", choices=("theorem", "raw", "normal", "all"), default="theorem")

    r = sub.add_parser("repetition", help="repetition plan for a BEC")
    r.add_argument("--n", type=int, required=True)
    r.add_argument("--epsilon", "--bec", dest="epsilon", type=float, required=True)
    r.add_argument("--beta", type=float, required=True)

    s = sub.add_parser("shannon-limit", help="minimum Eb/N0 in dB at a given rate")
    s.add_argument("--rate", type=float, required=True)

    pol = sub.add_parser("polar", help="polar code tools")
    psub = pol.add_subparsers(dest="polar_cmd", required=True, parser_class=_Parser)
    c = psub.add_parser("construct")
    _add_channel_args(c, required=False)
    c.add_argument("--capacity", type=float, help="BEC of this capacity")
    c.add_argument("--m", type=int)
    c.add_argument("--k", type=int, help="payload bits")
    c.add_argument("--crc-len", type=int, default=0)
    c.add_argument("--fig3", action="store_true", help="the (8192, 40) CRC-6 BIAWGN code")
    c.add_argument("--design-ebn0-db", type=float, default=FIG3_DESIGN_EBN0_DB)
    c.add_argument("--out")
    for name in ("dmin", "repfactor"):
        q = psub.add_parser(name)
        q.add_argument("--spec", default="-", help="spec JSON file, '-' for stdin")
    e = psub.add_parser("encode")
    e.add_argument("--spec", default="-")
    e.add_argument("--payload", required=True, help="bit string")
    e.add_argument("--fast", action="store_true")
    d = psub.add_parser("decode")
    d.add_argument("--spec", required=True)
    d.add_argument("--llrs", required=True, help=".npy or whitespace-separated text")
    d.add_argument("--list", dest="list_size", type=int, default=16)
    d.add_argument("--fast", action="store_true")
    a = psub.add_parser("audit")
    a.add_argument("--epsilon", type=float, required=True)
    a.add_argument("--m", type=int, required=True)

    sim = sub.add_parser("simulate", help="one Monte Carlo FER point")
    sim.add_argument("--config")
    sim.add_argument("--channel", choices=("BEC", "BSC", "BIAWGN"))
    sim.add_argument("--param", type=float, help="epsilon, delta or Eb/N0 dB")
    sim.add_argument("--design", type=float, help="construction parameter, default --param")
    sim.add_argument("--m", type=int)
    sim.add_argument("--k", type=int)
    sim.add_argument("--crc-len", type=int)
    sim.add_argument("--list", dest="list_size", type=int)
    sim.add_argument("--seed", type=int)
    sim.add_argument("--min-errors", type=int)
    sim.add_argument("--max-trials", type=int)
    sim.add_argument("--workers", type=int)
    sim.add_argument("--out")

    sw = sub.add_parser("sweep", help="figure sweep to CSV")
    sw.add_argument("--config")
    sw.add_argument("--figure", type=int, choices=(1, 2, 3))
    sw.add_argument("--grid", help="comma-separated parameter values")
    sw.add_argument("--k", type=int)
    sw.add_argument("--pe", type=float)
    sw.add_argument("--list", dest="list_size", type=int)
    sw.add_argument("--crc-len", type=int)
    sw.add_argument("--seed", type=int)
    sw.add_argument("--min-errors", type=int)
    sw.add_argument("--max-trials", type=int)
    sw.add_argument("--m", type=int)
    sw.add_argument("--m-max", type=int)
    sw.add_argument("--design-ebn0-db", type=float)
    sw.add_argument("--workers", type=int)
    sw.add_argument("--no-polar", action="store_true")
    sw.add_argument("--out")
    sw.set_defaults(polar=None)
    return p


def _fail(code: int, kind: str, exc: BaseException) -> int:
    _emit({"error": {"code": code, "type": kind, "exception": type(exc).__name__,
                     "message": str(exc)}})
    log.error("%s", exc)
    return code


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail(2, "usage", exc)
    logging.basicConfig(stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s",
                        level=logging.DEBUG if args.verbose > 1 else
                        logging.INFO if args.verbose else logging.WARNING)
    try:
        if args.cmd == "simulate":
            cmd_simulate(args, ["lowcap"] + argv)
            return 0
        if args.cmd == "sweep":
            cmd_sweep(args, ["lowcap"] + argv)
            return 0
        handler = {"bound": cmd_bound, "blocklength": cmd_blocklength,
                   "repetition": cmd_repetition, "shannon-limit": cmd_shannon_limit,
                   "polar": cmd_polar}[args.cmd]
        res = handler(args)
        if res is not None:
            _emit(res)
        return 0
    except UsageError as exc:
        return _fail(2, "usage", exc)
    except (ArithmeticError, MemoryError) as exc:
        return _fail(3, "numerical", exc)
    except (ValueError, OSError) as exc:
        return _fail(2, "domain", exc)


if __name__ == "__main__":
    sys.exit(main())
