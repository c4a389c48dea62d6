"""Command-line runner: one JSON config in, one JSON result record out.

    hyperdim <subcommand> [--config cfg.json] [--set key=value ...]
             [--out result.json] [--csv curve.csv] [--workers N]

Every subcommand has a full default config, so ``--config`` is optional.
``--set`` takes dotted keys (``system.params.theta=0.25``) and JSON values.
"""

from __future__ import annotations

import argparse
import copy
import csv
import io
import json
import math
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .circle import ClassificationError, classify_mdim
from .explosion import (
    CertificateError,
    build_embedding,
    build_subset_certificate,
    check_conjugacy,
    embedded_growth,
    find_wandering_interval,
    make_embed_config,
)
from .hyperspace import DEFAULT_NET_CAP, ArcPoint, hyper_net, hyper_net_size
from .parallel import WORKERS_ENV
from .sepspan import (
    CURVE_COLUMNS,
    SCOPES,
    default_targets_spec,
    entropy_fit,
    make_pool,
    max_separated,
    min_spanning,
    mmdim_estimate,
)
from .systems import KINDS, SPACES, make_system

SCHEMA_VERSION = 1

EXIT_OK = 0
EXIT_RUNTIME = 1
EXIT_CONFIG = 2
EXIT_CERTIFICATE = 3


def _sys(kind, **params):
    return {"kind": kind, "params": params}


DEFAULTS = {
    "estimate-entropy": {
        "system": _sys("doubling"),
        "scope": "base",
        "eps": 0.02,
        "k_range": [4, 10],
        "pool": {"kind": "grid", "n": 2000},
        "method": "auto",
        "cap": 2000,
    },
    "estimate-mmdim": {
        "system": _sys("doubling"),
        "scope": "base",
        "eps_grid": [0.2, 0.1, 0.05, 0.025],
        "k_range": [3, 6],
        "pool": {"kind": "grid", "n": 1024},
        "method": "auto",
        "cap": 2000,
    },
    "sep": {
        "system": _sys("doubling"),
        "scope": "base",
        "k": 3,
        "eps": 0.25,
        "pool": {"kind": "grid", "n": 512},
        "method": "exact",
        "cap": 2000,
    },
    "span": {
        "system": _sys("rotation", theta=0.1),
        "scope": "base",
        "k": 3,
        "eps": 0.3,
        "pool": {"kind": "grid", "n": 200},
        "targets": None,
        "method": "exact",
        "cap": 500,
    },
    "certify-lemma": {
        "system": _sys("doubling"),
        "k": 5,
        "eps": 0.2,
        "pool": {"kind": "grid", "n": 200},
        "cap": 12,
        "strict": False,
        "base_selection": "exact",
        "samples": 100000,
    },
    "find-wandering": {
        "system": _sys("interval_square"),
        "horizon": 20,
        "grid": 1000,
        "tol": 1e-9,
    },
    "embed-shift": {
        "system": _sys("north_south", lam=0.5),
        "channels": 1,
        "horizon": 2,
        "gamma": None,
        "gap": 0.2,
        "xi": None,
        "fill": 0.0,
    },
    "check-conjugacy": {
        "system": _sys("north_south", lam=0.5),
        "channels": 1,
        "horizons": [4, 8, 16],
        "gamma": None,
        "gap": 0.2,
        "fill": 0.5,
        "random_symbols": False,
    },
    "embedded-growth": {
        "system": _sys("north_south", lam=0.02, form="mobius"),
        "channels": [1, 2, 3],
        "horizon": 4,
        "gamma": None,
        "gap": 0.2,
        "n_window": 2,
        "eps": 0.05,
        "symbols": 3,
        "fill": 0.5,
        "max_family": 4096,
    },
    "classify-circle": {
        "system": _sys("rotation", theta=1 / 3),
        "iterates": 10000,
        "tol": 1e-9,
        "max_q": 64,
        "horizon": 20,
        "grid": 1000,
        "identity_grid": 10000,
        "tol_density": 0.01,
    },
    "hyper-net-info": {
        "space": "circle",
        "grid": 8,
        "max_card": 3,
        "cap": DEFAULT_NET_CAP,
        "list": False,
    },
}
COMMON = {"seed": 0}
SUBCOMMANDS = tuple(DEFAULTS)

CSV_COLUMNS = {
    "estimate-entropy": ["k", "sep", "log_sep"],
    "estimate-mmdim": CURVE_COLUMNS,
    "check-conjugacy": ["horizon", "residual", "bound"],
    "embedded-growth": ["channels", "n_window", "eps", "symbols", "family_size", "sep", "rate"],
}


class ConfigError(ValueError):
    def __init__(self, problems):
        super().__init__("; ".join(problems))
        self.problems = list(problems)


# --------------------------------------------------------------------------
# config handling


def parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_override(cfg: dict, assignment: str) -> None:
    if "=" not in assignment:
        raise ConfigError([f"--set expects key=value, got {assignment!r}"])
    key, text = assignment.split("=", 1)
    parts = key.strip().split(".")
    node = cfg
    for p in parts[:-1]:
        if not isinstance(node.get(p), dict):
            node[p] = {}
        node = node[p]
    node[parts[-1]] = parse_value(text)


def resolve_config(sub: str, user: dict | None, overrides=()) -> dict:
    cfg = copy.deepcopy(DEFAULTS[sub])
    cfg.update(copy.deepcopy(COMMON))
    user = dict(user or {})
    user.pop("subcommand", None)
    cfg.update(user)
    for o in overrides:
        apply_override(cfg, o)
    validate_config(sub, cfg)
    return cfg


def _is_num(v):
    return isinstance(v, (int, float)) and not isinstance(v, bool) and math.isfinite(v)


def _is_int(v):
    return isinstance(v, int) and not isinstance(v, bool)


def validate_config(sub: str, cfg: dict) -> None:
    """Raise ConfigError listing every violated field."""
    problems = []
    allowed = set(DEFAULTS[sub]) | set(COMMON)
    for key in sorted(set(cfg) - allowed):
        problems.append(f"{key}: unknown field for {sub}")
    if not _is_int(cfg.get("seed")):
        problems.append("seed: must be an integer")

    def num(key, lo=None, hi=None, strict_lo=False, integer=False):
        v = cfg.get(key)
        ok = _is_int(v) if integer else _is_num(v)
        if not ok:
            problems.append(f"{key}: must be {'an integer' if integer else 'a finite number'}")
            return
        if lo is not None and (v <= lo if strict_lo else v < lo):
            problems.append(f"{key}: must be {'>' if strict_lo else '>='} {lo}")
        if hi is not None and v > hi:
            problems.append(f"{key}: must be <= {hi}")

    if "system" in DEFAULTS[sub]:
        s = cfg.get("system")
        if not isinstance(s, dict) or s.get("kind") not in KINDS:
            problems.append(f"system.kind: must be one of {list(KINDS)}")
        elif not isinstance(s.get("params", {}), dict):
            problems.append("system.params: must be an object")
        else:
            try:
                make_system(s["kind"], s.get("params", {}))
            except ValueError as exc:
                problems.append(f"system.params: {exc}")
    if "scope" in cfg and cfg["scope"] not in SCOPES:
        problems.append(f"scope: must be one of {list(SCOPES)}")
    if "pool" in DEFAULTS[sub] and not isinstance(cfg.get("pool"), dict):
        problems.append("pool: must be an object with a 'kind'")
    if "method" in cfg:
        allowed_m = ("auto", "exact", "greedy") if sub.startswith("estimate") else ("exact", "greedy")
        if cfg["method"] not in allowed_m:
            problems.append(f"method: must be one of {list(allowed_m)}")
    if "k_range" in cfg:
        kr = cfg["k_range"]
        if not (isinstance(kr, list) and len(kr) == 2 and all(_is_int(v) for v in kr)):
            problems.append("k_range: must be [k_min, k_max] integers")
        elif kr[0] < 1 or kr[1] - kr[0] < 2:
            problems.append("k_range: needs k_min >= 1 and at least 3 values")
    if "eps_grid" in cfg:
        g = cfg["eps_grid"]
        if not (isinstance(g, list) and len(g) >= 4 and all(_is_num(v) and 0 < v < 1 for v in g)):
            problems.append("eps_grid: needs at least 4 values in (0, 1)")
        elif any(a <= b for a, b in zip(g, g[1:])):
            problems.append("eps_grid: must be strictly decreasing")
    for key in ("eps", "tol", "tol_density"):
        if key in cfg:
            num(key, 0, strict_lo=True)
    for key in ("k", "cap", "samples", "horizon", "grid", "iterates", "max_q", "identity_grid",
                "n_window", "symbols", "max_family", "max_card"):
        if key in cfg:
            num(key, 1, integer=True)
    if "channels" in cfg:
        ch = cfg["channels"]
        chs = ch if isinstance(ch, list) else [ch]
        if not chs or not all(_is_int(c) and c >= 1 for c in chs):
            problems.append("channels: must be a positive integer or a list of them")
    if "horizons" in cfg:
        h = cfg["horizons"]
        if not (isinstance(h, list) and h and all(_is_int(v) and v >= 1 for v in h)):
            problems.append("horizons: must be a nonempty list of integers >= 1")
    if "gap" in cfg:
        num("gap", 0, 1)
    if "fill" in cfg:
        num("fill", 0, 1)
    if "gamma" in cfg and cfg["gamma"] is not None:
        g = cfg["gamma"]
        if not (isinstance(g, list) and len(g) == 2 and all(_is_num(v) for v in g)):
            problems.append("gamma: must be null or [a, b]")
    if "space" in cfg and cfg["space"] not in SPACES:
        problems.append(f"space: must be one of {list(SPACES)}")
    if "base_selection" in cfg and cfg["base_selection"] not in ("exact", "isolated"):
        problems.append("base_selection: must be 'exact' or 'isolated'")
    for key in ("strict", "list", "random_symbols"):
        if key in cfg and not isinstance(cfg[key], bool):
            problems.append(f"{key}: must be true or false")
    if problems:
        raise ConfigError(problems)


# --------------------------------------------------------------------------
# subcommand bodies; each returns (result dict, csv rows or None)


def _system(cfg):
    s = cfg["system"]
    return make_system(s["kind"], s.get("params", {}))


def _k_range(cfg):
    lo, hi = cfg["k_range"]
    return list(range(lo, hi + 1))


def run_estimate_entropy(cfg):
    fit = entropy_fit(
        _system(cfg), cfg["eps"], _k_range(cfg), cfg["pool"], scope=cfg["scope"],
        method=cfg["method"], cap=cfg["cap"],
    )
    rows = [{"k": k, "sep": s, "log_sep": math.log(s)} for k, s in zip(fit.ks, fit.seps)]
    return {"entropy": fit.value, "fit": fit.to_dict(), "pool_spec": cfg["pool"]}, rows


def run_estimate_mmdim(cfg):
    curve = mmdim_estimate(
        _system(cfg), cfg["eps_grid"], _k_range(cfg), cfg["pool"], scope=cfg["scope"],
        method=cfg["method"], cap=cfg["cap"],
    )
    return {"curve": curve.to_dict()}, curve.rows()


def run_sep(cfg):
    sys_ = _system(cfg)
    pool = make_pool(cfg["scope"], sys_.space, cfg["pool"])
    res = max_separated(cfg["scope"], sys_, pool, cfg["k"], cfg["eps"], cfg["method"], cap=cfg["cap"], pool_spec=cfg["pool"])
    return {"separated": res.to_dict()}, None


def run_span(cfg):
    sys_ = _system(cfg)
    pool = make_pool(cfg["scope"], sys_.space, cfg["pool"])
    tspec = cfg["targets"] or default_targets_spec(cfg["scope"], cfg["pool"])
    targets = make_pool(cfg["scope"], sys_.space, tspec)
    res = min_spanning(
        cfg["scope"], sys_, pool, targets, cfg["k"], cfg["eps"], cfg["method"],
        cap=cfg["cap"], pool_spec=cfg["pool"], targets_spec=tspec,
    )
    return {"spanning": res.to_dict()}, None


def run_certify(cfg):
    sys_ = _system(cfg)
    pool = make_pool("base", sys_.space, cfg["pool"])
    cert = build_subset_certificate(
        sys_, cfg["k"], cfg["eps"], pool, cfg["cap"], pool_spec=cfg["pool"], strict=cfg["strict"],
        base_selection=cfg["base_selection"], samples=cfg["samples"], seed=cfg["seed"],
    )
    return {"certificate": cert.to_dict()}, None


def run_find_wandering(cfg):
    w = find_wandering_interval(_system(cfg), cfg["horizon"], cfg["grid"], cfg["tol"])
    return {"wandering": w.to_dict()}, None


def _embed_cfg(cfg, channels, horizon):
    sys_ = _system(cfg)
    gamma = None if cfg["gamma"] is None else ArcPoint.of(*cfg["gamma"], sys_.space)
    return make_embed_config(sys_, channels, horizon, gamma, gap=cfg["gap"])


def run_embed_shift(cfg):
    N, k = cfg["horizon"], cfg["channels"]
    ec = _embed_cfg(cfg, k, N)
    xi = np.full((2 * N + 1, k), cfg["fill"]) if cfg["xi"] is None else np.asarray(cfg["xi"], dtype=float)
    st = build_embedding(ec, xi)
    return {"embed_config": ec.to_dict(), "state": st.to_dict(), "cardinality": len(st.image)}, None


def run_check_conjugacy(cfg):
    rng = np.random.default_rng(cfg["seed"])
    k = cfg["channels"]
    reports = []
    for N in cfg["horizons"]:
        ec = _embed_cfg(cfg, k, N)
        if cfg["random_symbols"]:
            xi = rng.random((2 * N + 1, k))
        else:
            xi = np.full((2 * N + 1, k), cfg["fill"])
        reports.append(check_conjugacy(ec, xi).to_dict())
    return {"reports": reports}, reports


def run_embedded_growth(cfg):
    chs = cfg["channels"] if isinstance(cfg["channels"], list) else [cfg["channels"]]
    reps = []
    for k in chs:
        ec = _embed_cfg(cfg, k, cfg["horizon"])
        r = embedded_growth(
            ec, cfg["n_window"], cfg["eps"], cfg["symbols"], fill=cfg["fill"],
            max_family=cfg["max_family"], seed=cfg["seed"],
        )
        reps.append(r.to_dict())
    rows = [{c: r[c] for c in CSV_COLUMNS["embedded-growth"]} for r in reps]
    return {"reports": reps}, rows


def run_classify(cfg):
    v = classify_mdim(
        _system(cfg), iterates=cfg["iterates"], tol=cfg["tol"], max_q=cfg["max_q"],
        horizon=cfg["horizon"], grid=cfg["grid"], identity_grid=cfg["identity_grid"],
        tol_density=cfg["tol_density"],
    )
    return {"classification": v.to_dict()}, None


def run_hyper_net_info(cfg):
    size = hyper_net_size(cfg["grid"], cfg["max_card"])
    out = {"size": size, "within_cap": size <= cfg["cap"]}
    if cfg["list"]:
        out["sets"] = [s.to_list() for s in hyper_net(cfg["space"], cfg["grid"], cfg["max_card"], cfg["cap"])]
    return out, None


RUNNERS = {
    "estimate-entropy": run_estimate_entropy,
    "estimate-mmdim": run_estimate_mmdim,
    "sep": run_sep,
    "span": run_span,
    "certify-lemma": run_certify,
    "find-wandering": run_find_wandering,
    "embed-shift": run_embed_shift,
    "check-conjugacy": run_check_conjugacy,
    "embedded-growth": run_embedded_growth,
    "classify-circle": run_classify,
    "hyper-net-info": run_hyper_net_info,
}


# --------------------------------------------------------------------------
# serialization


def clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return clean(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    return obj


def dumps(record: dict) -> str:
    return json.dumps(clean(record), sort_keys=True, indent=2) + "\n"


def rows_to_csv(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n", extrasaction="ignore")
    w.writeheader()
    for r in rows:
        w.writerow({k: (repr(float(v)) if isinstance(v, float) else v) for k, v in r.items()})
    return buf.getvalue()


def run(sub: str, cfg: dict) -> tuple:
    """Execute a resolved config; returns (record, csv text or None)."""
    t0 = time.perf_counter()
    result, rows = RUNNERS[sub](cfg)
    record = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "subcommand": sub,
        "config": cfg,
        "seed": cfg["seed"],
        "result": result,
        "wall_time": time.perf_counter() - t0,
    }
    text = None if rows is None else rows_to_csv(rows, CSV_COLUMNS[sub])
    return record, text


def error_record(sub, kind, message, **extra) -> dict:
    err = {"type": kind, "message": message}
    err.update(extra)
    return {"schema_version": SCHEMA_VERSION, "version": __version__, "subcommand": sub, "error": err}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hyperdim", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    subs = ap.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = subs.add_parser(name, help=f"run {name}")
        p.add_argument("--config", type=Path, help="JSON config file")
        p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE")
        p.add_argument("--out", type=Path, help="result JSON path (default: stdout)")
        p.add_argument("--csv", type=Path, help="CSV path for curve-like outputs")
        p.add_argument("--workers", type=int, help=f"worker threads (default ${WORKERS_ENV} or 1)")
        p.add_argument("--print-config", action="store_true", help="print the resolved config and exit")
    return ap


def _emit(text: str, path):
    if path is None:
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    sub = args.subcommand
    if args.workers is not None:
        if args.workers < 1:
            _emit(dumps(error_record(sub, "config", "workers must be >= 1", fields=["workers"])), None)
            return EXIT_CONFIG
        os.environ[WORKERS_ENV] = str(args.workers)
    try:
        user = json.loads(args.config.read_text()) if args.config else {}
        if not isinstance(user, dict):
            raise ConfigError(["config: top level must be a JSON object"])
        cfg = resolve_config(sub, user, args.overrides)
    except ConfigError as exc:
        _emit(dumps(error_record(sub, "config", str(exc), fields=exc.problems)), None)
        return EXIT_CONFIG
    except (OSError, json.JSONDecodeError) as exc:
        _emit(dumps(error_record(sub, "config", f"cannot read config: {exc}")), None)
        return EXIT_CONFIG
    if args.print_config:
        _emit(dumps(cfg), None)
        return EXIT_OK
    try:
        record, csv_text = run(sub, cfg)
    except CertificateError as exc:
        extra = {"certificate": exc.certificate.to_dict()} if exc.certificate else {}
        _emit(dumps(error_record(sub, "certificate", str(exc), **extra)), args.out)
        return EXIT_CERTIFICATE
    except ClassificationError as exc:
        _emit(dumps(error_record(sub, "classification", str(exc), diagnostics=exc.diagnostics)), args.out)
        return EXIT_RUNTIME
    except (ValueError, RuntimeError) as exc:
        _emit(dumps(error_record(sub, type(exc).__name__, str(exc))), args.out)
        return EXIT_RUNTIME
    _emit(dumps(record), args.out)
    if csv_text is not None:
        csv_path = args.csv or (args.out.with_suffix(".csv") if args.out else None)
        if csv_path is not None:
            Path(csv_path).write_text(csv_text)
    return EXIT_OK


if __name__ == "__main__":
    raise SystemExit(main())
