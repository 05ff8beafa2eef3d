"""Command-line entry point.

Subcommands: grow, embed, criterion, phase-scan, validate-bound,
check-assumptions.  Parameters come from an INI-style config file and/or
flags (flags win).  Outputs are deterministic given the config: CSV files
carry a leading "# config: {...}" comment block, JSON files embed the
resolved config under the "config" key, and no data file contains
timestamps.  Exit codes: 0 success, 2 configuration error, 3 numeric or
precision failure.  CMJ_THREADS overrides the worker count.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import configparser
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import criterion as crit
from . import fitness, treegen, weights
from .errors import (ConfigurationError, LambdaDomainError, ModeError,
                     NumericOverflowError, PaftreeError,
                     PrecisionUnreachableError)

_FITNESS_KEYS = {"family", "sigma", "nu", "alpha", "g", "table"}
_WEIGHT_KEYS = {"family", "kappa", "gamma", "c", "table"}
_RUN_KEYS = {"n", "nmin", "nmax", "points", "replicas", "seed", "delta",
             "eps", "c", "L", "tol", "out_dir", "formats", "kind", "example",
             "numeric", "a1", "m", "w", "tail_tol", "panel", "method",
             "sigma_grid", "kappa_grid", "nu_grid", "gamma_grid", "alpha"}


def _resolve_config(args) -> dict:
    """Merge config file sections and CLI flags; flags win."""
    cfg = {"run": {}, "fitness": {}, "weights": {}}
    if args.config:
        parser = configparser.ConfigParser()
        read = parser.read(args.config)
        if not read:
            raise ConfigurationError(f"config file not found: {args.config}")
        allowed = {"run": _RUN_KEYS, "fitness": _FITNESS_KEYS, "weights": _WEIGHT_KEYS}
        for section in parser.sections():
            if section not in allowed:
                raise ConfigurationError(f"unknown config section [{section}]")
            for key, val in parser.items(section):
                if key not in allowed[section]:
                    raise ConfigurationError(
                        f"unknown key {key!r} in section [{section}]")
                cfg[section][key] = val
    flat = vars(args)
    for key in ("fitness", "weights"):
        if flat.get(key) is not None:
            cfg[key]["family"] = flat[key]
    for src, sec in (("sigma", "fitness"), ("nu", "fitness"), ("alpha", "fitness"),
                     ("g", "fitness"), ("fitness_table", "fitness"),
                     ("kappa", "weights"), ("gamma", "weights"),
                     ("wconst", "weights"), ("weights_table", "weights")):
        dest = {"fitness_table": "table", "weights_table": "table", "wconst": "c"}.get(src, src)
        if flat.get(src) is not None:
            cfg[sec][dest] = flat[src]
    for key in _RUN_KEYS:
        argkey = key if key != "c" else "ccoef"
        if flat.get(argkey) is not None:
            cfg["run"][key] = flat[argkey]
    return cfg


def _get(cfg, sec, key, cast, default=None):
    val = cfg[sec].get(key, default)
    if val is None:
        return None
    try:
        if cast is bool and isinstance(val, str):
            return val.lower() in ("1", "true", "yes", "on")
        return cast(val)
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad value for {sec}.{key}: {val!r}") from exc


def _build_fitness(cfg) -> fitness.FitnessSpec:
    fam = cfg["fitness"].get("family")
    if fam is None:
        raise ConfigurationError("no fitness family configured")
    g_id = cfg["fitness"].get("g", "w_plus_1")
    if g_id not in ("w_plus_1", "one"):
        raise ConfigurationError(f"unknown g id {g_id!r}")
    params = {}
    for p, cast in (("sigma", float), ("nu", float), ("alpha", float)):
        v = _get(cfg, "fitness", p, cast)
        if v is not None:
            params[p] = v
    table = None
    if fam == "custom_table":
        path = cfg["fitness"].get("table")
        if path is None:
            raise ConfigurationError("custom_table fitness needs fitness.table")
        table = fitness.load_custom_table(path)
    return fitness.builtin(fam, g_id=g_id, table=table, **params)


def _build_weights(cfg) -> weights.WeightModel:
    fam = cfg["weights"].get("family", "constant")
    if fam == "constant":
        return weights.constant(_get(cfg, "weights", "c", float, 0.0))
    if fam == "weibullish":
        return weights.weibullish(_get(cfg, "weights", "kappa", float, 1.0))
    if fam == "double_exp_log":
        return weights.double_exp_log(_get(cfg, "weights", "gamma", float, 2.0))
    if fam == "double_exp":
        return weights.double_exp(_get(cfg, "weights", "kappa", float, 1.0))
    if fam == "empirical":
        path = cfg["weights"].get("table")
        if path is None:
            raise ConfigurationError("empirical weights need weights.table")
        return weights.load_empirical(path)
    raise ConfigurationError(f"unknown weight family {fam!r}")


def _prepare_out_dir(cfg, force: bool) -> Path:
    out = Path(cfg["run"].get("out_dir", "paftree_out"))
    if out.exists() and any(out.iterdir()) and not force:
        raise ConfigurationError(
            f"output directory {out} is not empty; pass --force to reuse it")
    out.mkdir(parents=True, exist_ok=True)
    return out


def _config_echo(cfg) -> dict:
    # out_dir is excluded so identical runs produce byte-identical artifacts
    # regardless of where they land
    return {sec: {k: str(v) for k, v in sorted(cfg[sec].items())
                  if k != "out_dir"}
            for sec in ("run", "fitness", "weights")}


def _write_json(path: Path, payload: dict, cfg) -> None:
    payload = dict(payload)
    payload["config"] = _config_echo(cfg)
    path.write_text(json.dumps(payload, sort_keys=True, indent=2) + "\n")


def _prepend_config_comment(path: Path, cfg) -> None:
    body = path.read_text()
    header = "# config: " + json.dumps(_config_echo(cfg), sort_keys=True) + "\n"
    path.write_text(header + body)


def _threads() -> int:
    env = os.environ.get("CMJ_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise ConfigurationError(f"bad CMJ_THREADS value {env!r}") from exc
    return os.cpu_count() or 1


def _replica_seed(seed: int, r: int) -> int:
    return seed * (1 << 32) + r


def _grow_one(payload):
    spec, wmodel, n, seed, r, continuous, L = payload
    grow = treegen.grow_continuous if continuous else treegen.grow_discrete
    tree = grow(spec, wmodel, n, _replica_seed(seed, r))
    stats = treegen.collect_stats(tree, L=L)
    return r, tree, stats


def _stats_record(stats: treegen.CondensationStats) -> dict:
    return {
        "max_deg_share": {str(n): v for n, v in stats.max_deg_share},
        "argmax_history": {str(n): v for n, v in stats.argmax_history},
        "persistence_point": stats.persistence_point,
        "height": stats.height,
        "moderate_count": stats.moderate_count,
        "L": stats.L,
    }


def _run_grow(cfg, force: bool, continuous: bool) -> int:
    spec = _build_fitness(cfg)
    wmodel = _build_weights(cfg)
    n = _get(cfg, "run", "n", int, 1000)
    replicas = _get(cfg, "run", "replicas", int, 1)
    seed = _get(cfg, "run", "seed", int, 0)
    L = _get(cfg, "run", "L", int, 2)
    formats = set((_get(cfg, "run", "formats", str, "csv,json")).split(","))
    out = _prepare_out_dir(cfg, force)
    jobs = [(spec, wmodel, n, seed, r, continuous, L) for r in range(replicas)]
    results = {}
    workers = min(_threads(), replicas)
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            for r, tree, stats in pool.map(_grow_one, jobs):
                results[r] = (tree, stats)
    else:
        for job in jobs:
            r, tree, stats = _grow_one(job)
            results[r] = (tree, stats)
    stats_payload = {}
    explosion = {}
    for r in sorted(results):
        tree, stats = results[r]
        if "csv" in formats:
            path = out / f"tree_{r:04d}.csv"
            treegen.dump_tree(tree, path)
            _prepend_config_comment(path, cfg)
        stats_payload[str(r)] = _stats_record(stats)
        if continuous:
            tol = _get(cfg, "run", "tail_tol", float, 0.1)
            lo, hi = treegen.estimate_explosion_time(tree, spec, tol)
            explosion[str(r)] = {"tau_lo": lo, "tau_hi": hi}
    if "json" in formats:
        payload = {"stats": stats_payload, "n": n, "replicas": replicas, "seed": seed}
        if continuous:
            payload["explosion_time"] = explosion
        _write_json(out / "stats.json", payload, cfg)
    return 0


def _run_criterion(cfg, force: bool) -> int:
    kind = cfg["run"].get("kind")
    if kind not in ("star", "path", "assknmu", "iyer", "closedform"):
        raise ConfigurationError(
            "criterion needs kind in {star, path, assknmu, iyer, closedform}")
    out = _prepare_out_dir(cfg, force)
    spec = None
    if kind != "closedform":
        spec = _build_fitness(cfg)
    nmin = _get(cfg, "run", "nmin", int, 100)
    nmax = _get(cfg, "run", "nmax", int, 100000)
    points = _get(cfg, "run", "points", int, 25)
    seed = _get(cfg, "run", "seed", int, 0)
    if kind == "star":
        report = crit.star_series(
            spec, _build_weights(cfg), _get(cfg, "run", "delta", float, 0.05),
            (nmin, nmax), points=points,
            method=_get(cfg, "run", "method", str, "auto"),
            panel=_get(cfg, "run", "panel", int, 4096), seed=seed)
    elif kind == "path":
        report = crit.path_series(
            spec, _build_weights(cfg), c=_get(cfg, "run", "c", float, 1.1),
            w=_get(cfg, "run", "w", float), n_range=(nmin, nmax), points=points,
            method=_get(cfg, "run", "method", str, "auto"),
            panel=_get(cfg, "run", "panel", int, 4096), seed=seed)
    elif kind == "assknmu":
        report = crit.assknmu_ratio(
            spec, _build_weights(cfg), _get(cfg, "run", "delta", float, 0.05),
            _get(cfg, "run", "eps", float, 0.5), (nmin, nmax), points=points)
    elif kind == "iyer":
        report = crit.iyer_condition(spec, (nmin, nmax))
    else:
        example = cfg["run"].get("example")
        if example is None:
            raise ConfigurationError("closedform needs run.example")
        params = {k: float(v) for k, v in cfg["fitness"].items()
                  if k in ("sigma", "nu", "alpha")}
        for k in ("kappa", "gamma"):
            v = _get(cfg, "weights", k, float)
            if v is not None:
                params[k] = v
        report = crit.classify_closed_form(example, params)
    formats = set((_get(cfg, "run", "formats", str, "csv,json")).split(","))
    if "json" in formats:
        _write_json(out / f"criterion_{kind}.json", report.to_dict(), cfg)
    if "csv" in formats:
        path = out / f"criterion_{kind}.csv"
        report.write_csv(path)
        _prepend_config_comment(path, cfg)
    print(f"criterion {kind}: verdict {report.verdict}")
    return 0


def _parse_grid(text: str) -> np.ndarray:
    try:
        start, stop, step = (float(x) for x in text.split(":"))
    except ValueError as exc:
        raise ConfigurationError(f"grid must be start:stop:step, got {text!r}") from exc
    if step <= 0 or stop < start:
        raise ConfigurationError(f"bad grid {text!r}")
    return np.arange(start, stop + step / 2, step)


def _scan_cell(payload):
    example, params, numeric, nmin, nmax, points, seed, delta = payload
    row = dict(params)
    row["example"] = example
    try:
        row["closed_form"] = crit.classify_closed_form(example, params).verdict
    except ConfigurationError as exc:
        row["closed_form"] = "ERROR"
        row["error"] = str(exc)
        return row
    if numeric:
        fit_params = {k: v for k, v in params.items() if k in ("sigma", "nu", "alpha")}
        spec = fitness.builtin(f"case_{example}", **fit_params)
        if example == "ii":
            wmodel = weights.double_exp_log(params["gamma"])
        else:
            wmodel = weights.weibullish(params["kappa"])
        try:
            row["star_series"] = crit.star_series(
                spec, wmodel, delta, (nmin, nmax), points=points, seed=seed).verdict
            row["path_series"] = crit.path_series(
                spec, wmodel, n_range=(nmin, nmax), points=points, seed=seed).verdict
        except PaftreeError as exc:
            row["star_series"] = row.setdefault("star_series", "ERROR")
            row["path_series"] = "ERROR"
            row["error"] = str(exc)
    return row


def _run_phase_scan(cfg, force: bool) -> int:
    example = cfg["run"].get("example")
    if example not in ("i", "ii", "iii", "iv"):
        raise ConfigurationError("phase-scan needs run.example in {i, ii, iii, iv}")
    out = _prepare_out_dir(cfg, force)
    numeric = _get(cfg, "run", "numeric", bool, False)
    nmin = _get(cfg, "run", "nmin", int, 100)
    nmax = _get(cfg, "run", "nmax", int, 10000)
    points = _get(cfg, "run", "points", int, 12)
    seed = _get(cfg, "run", "seed", int, 0)
    delta = _get(cfg, "run", "delta", float, 0.05)
    if example == "ii":
        ax1 = [("nu", v) for v in _parse_grid(cfg["run"].get("nu_grid", "0.2:0.9:0.1"))]
        ax2 = [("gamma", v) for v in _parse_grid(cfg["run"].get("gamma_grid", "1.2:3:0.3"))]
    else:
        ax1 = [("sigma", v) for v in _parse_grid(cfg["run"].get("sigma_grid", "1.2:4:0.4"))]
        ax2 = [("kappa", v) for v in _parse_grid(cfg["run"].get("kappa_grid", "0.2:2:0.3"))]
    alpha = _get(cfg, "run", "alpha", float, 0.8) if example == "iv" else None
    jobs = []
    for k1, v1 in ax1:
        for k2, v2 in ax2:
            params = {k1: float(v1), k2: float(v2)}
            if alpha is not None:
                params["alpha"] = alpha
            jobs.append((example, params, numeric, nmin, nmax, points, seed, delta))
    workers = min(_threads(), len(jobs))
    if workers > 1 and numeric:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(_scan_cell, jobs))
    else:
        rows = [_scan_cell(job) for job in jobs]
    cols = sorted({k for row in rows for k in row})
    path = out / "phase_scan.csv"
    import csv as _csv
    with open(path, "w", newline="") as fh:
        w = _csv.writer(fh)
        w.writerow(cols)
        for row in rows:
            w.writerow([row.get(c, "") for c in cols])
    _prepend_config_comment(path, cfg)
    _write_json(out / "phase_scan.json", {"rows": rows}, cfg)
    return 0


def _run_validate_bound(cfg, force: bool) -> int:
    spec = _build_fitness(cfg)
    wmodel = _build_weights(cfg)
    out = _prepare_out_dir(cfg, force)
    a1_list = [int(x) for x in str(cfg["run"].get("a1", "20,40,80")).split(",")]
    m_list = [int(x) for x in str(cfg["run"].get("m", "1,2")).split(",")]
    replicas = _get(cfg, "run", "replicas", int, 100000)
    delta = _get(cfg, "run", "delta", float, 0.05)
    seed = _get(cfg, "run", "seed", int, 0)
    reports = []
    all_ok = True
    for a1 in a1_list:
        for m in m_list:
            rep = crit.conservative_bound_check(spec, wmodel, a1, m, delta=delta,
                                                replicas=replicas, seed=seed)
            reports.append(rep.to_dict())
            all_ok = all_ok and rep.dominated
            print(f"a1={a1} m={m}: estimate+CI {rep.upper_ci:.4g} "
                  f"{'<=' if rep.dominated else '>'} bound {rep.bound:.4g}")
    _write_json(out / "bound_check.json", {"reports": reports, "all_dominated": all_ok}, cfg)
    return 0 if all_ok else 3


def _run_check_assumptions(cfg, force: bool) -> int:
    spec = _build_fitness(cfg)
    out = _prepare_out_dir(cfg, force)
    nmin = _get(cfg, "run", "nmin", int, 100)
    nmax = _get(cfg, "run", "nmax", int, 1000000)
    report = fitness.check_assumption_s(spec, (nmin, nmax))
    payload = {
        "verdict": report.verdict,
        "n_grid": report.n_grid.tolist(),
        "lower_ratio": report.lower_ratio.tolist(),
        "upper_ratio": report.upper_ratio.tolist(),
        "sandwich_ratio": report.sandwich_ratio.tolist(),
        "certificate": {"beta": spec.growth.beta, "p": spec.growth.p,
                        "C": spec.growth.C, "N": spec.growth.N},
    }
    _write_json(out / "assumptions.json", payload, cfg)
    print(f"growth-assumption sweep: {report.verdict}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="paftree",
                                 description="Preferential attachment trees "
                                             "with fitness: simulation and "
                                             "phase criteria.")
    sub = ap.add_subparsers(dest="command", required=True)
    names = ("grow", "embed", "criterion", "phase-scan", "validate-bound",
             "check-assumptions")
    for name in names:
        p = sub.add_parser(name)
        p.add_argument("--config", help="INI config file; flags override it")
        p.add_argument("--force", action="store_true",
                       help="reuse a non-empty output directory")
        p.add_argument("--out-dir", dest="out_dir")
        p.add_argument("--fitness", help="fitness family (case_i, ..., geometric,"
                                         " uniform_attach, custom_table)")
        p.add_argument("--sigma", type=float)
        p.add_argument("--nu", type=float)
        p.add_argument("--alpha", type=float)
        p.add_argument("--g", choices=("w_plus_1", "one"))
        p.add_argument("--fitness-table", dest="fitness_table")
        p.add_argument("--weights", help="weight family (constant, weibullish,"
                                         " double_exp_log, double_exp, empirical)")
        p.add_argument("--kappa", type=float)
        p.add_argument("--gamma", type=float)
        p.add_argument("--wconst", type=float, help="constant weight value")
        p.add_argument("--weights-table", dest="weights_table")
        p.add_argument("--n", type=int)
        p.add_argument("--nmin", type=int)
        p.add_argument("--nmax", type=int)
        p.add_argument("--points", type=int)
        p.add_argument("--replicas", type=int)
        p.add_argument("--seed", type=int)
        p.add_argument("--delta", type=float)
        p.add_argument("--eps", type=float)
        p.add_argument("--ccoef", type=float, help="path-series coefficient c")
        p.add_argument("--w", type=float)
        p.add_argument("--L", type=int)
        p.add_argument("--tol", type=float)
        p.add_argument("--tail-tol", dest="tail_tol", type=float)
        p.add_argument("--panel", type=int)
        p.add_argument("--method", choices=("auto", "mc", "quad"))
        p.add_argument("--formats")
        p.add_argument("--kind", choices=("star", "path", "assknmu", "iyer",
                                          "closedform"))
        p.add_argument("--example", choices=("i", "ii", "iii", "iv"))
        p.add_argument("--numeric", action="store_const", const="true")
        p.add_argument("--a1")
        p.add_argument("--m")
        p.add_argument("--sigma-grid", dest="sigma_grid")
        p.add_argument("--kappa-grid", dest="kappa_grid")
        p.add_argument("--nu-grid", dest="nu_grid")
        p.add_argument("--gamma-grid", dest="gamma_grid")
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        cfg = _resolve_config(args)
        if args.command == "grow":
            return _run_grow(cfg, args.force, continuous=False)
        if args.command == "embed":
            return _run_grow(cfg, args.force, continuous=True)
        if args.command == "criterion":
            return _run_criterion(cfg, args.force)
        if args.command == "phase-scan":
            return _run_phase_scan(cfg, args.force)
        if args.command == "validate-bound":
            return _run_validate_bound(cfg, args.force)
        if args.command == "check-assumptions":
            return _run_check_assumptions(cfg, args.force)
        raise ConfigurationError(f"unknown command {args.command!r}")
    except ConfigurationError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (PrecisionUnreachableError, NumericOverflowError, LambdaDomainError,
            ModeError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
