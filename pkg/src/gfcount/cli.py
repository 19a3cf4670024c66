"""Command-line front end: ``gfcount {spectrum,map2d,pn,validate} --config FILE``.

Exit codes: 0 success, 1 configuration error, 2 numerical-quality warning
(non-converged scan point, truncated P_n hierarchy, failed validation check).
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import platform
import sys
import time
import warnings

import numpy as np

from . import __version__
from ._jit import backend
from .config import ConfigError, RunConfig, load_config, resolved_dict
from .engine import evolve_factorial_moments, evolve_pn
from .generator import assemble_generators
from .observables import scan_2d, line_shape_scan

log = logging.getLogger("gfcount")

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2
DEFICIT_LIMIT = 1e-3


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def _write_meta(path, cfg: RunConfig, command: str, stats: dict, started: float):
    meta = {
        "command": command,
        "package_version": __version__,
        "backend": backend(),
        "python": platform.python_version(),
        "config": resolved_dict(cfg),
        "tolerances": {k: cfg.numeric[k] for k in ("rtol", "atol", "rate_tol", "q_tol", "dark_threshold")},
        "statistics": stats,
        "elapsed_s": round(time.perf_counter() - started, 3),
    }
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError(type(obj).__name__)


def _stem(cfg: RunConfig, label):
    return cfg.basename if label is None else f"{cfg.basename}_{label}"


def _scan_stats(res):
    stats = dict(res.meta)
    stats.pop("model", None)
    stats.pop("drive", None)
    stats["non_converged"] = int((~res.converged).sum())
    stats["all_dark"] = bool(res.all_dark)
    return stats


def cmd_spectrum(cfg: RunConfig, out_dir: str, threads: int = 1) -> int:
    if cfg.scan is None:
        raise ConfigError("spectrum needs a [scan] section")
    started = time.perf_counter()
    code = EXIT_OK
    for label, model, drive in cfg.series():
        res = line_shape_scan(model, drive, cfg.scan.param, cfg.scan.grid(),
                              cfg.scan_options(), workers=threads)
        stem = os.path.join(out_dir, _stem(cfg, label))
        rows = zip(res.axis1, res.rate, res.intensity, res.q, res.converged, res.dark)
        _write_csv(stem + ".csv",
                   [cfg.scan.column, "intensity_raw", "intensity_norm", "q", "converged", "dark_flag"],
                   rows)
        stats = _scan_stats(res)
        stats["model"] = model.to_dict()
        stats["drive"] = drive.to_dict()
        _write_meta(stem + ".meta", cfg, "spectrum", stats, started)
        if stats["non_converged"]:
            log.warning("%s: %d of %d points did not converge", stem, stats["non_converged"],
                        res.rate.size)
            code = EXIT_NUMERIC
    return code


def cmd_map2d(cfg: RunConfig, out_dir: str, threads: int = 1) -> int:
    if cfg.scan is None or cfg.scan2 is None:
        raise ConfigError("map2d needs [scan] and [scan2] sections")
    started = time.perf_counter()
    code = EXIT_OK
    for label, model, drive in cfg.series():
        res = scan_2d(model, drive, cfg.scan.param, cfg.scan.grid(), cfg.scan2.param,
                      cfg.scan2.grid(), cfg.scan_options(), workers=threads)
        stem = os.path.join(out_dir, _stem(cfg, label))
        rows = []
        for i2, v2 in enumerate(res.axis2):
            for i1, v1 in enumerate(res.axis1):
                rows.append((v1, v2, res.rate[i2, i1], res.intensity[i2, i1], res.q[i2, i1],
                             res.converged[i2, i1], res.dark[i2, i1]))
        _write_csv(stem + ".csv",
                   [cfg.scan.column, cfg.scan2.column, "intensity_raw", "intensity_norm", "q",
                    "converged", "dark_flag"],
                   rows)
        if cfg.output.get("matrix", True):
            header = f"rows: {cfg.scan2.column}, columns: {cfg.scan.column}"
            np.savetxt(stem + "_intensity.txt", res.intensity, fmt="%.12g", header=header)
            np.savetxt(stem + "_q.txt", res.q, fmt="%.12g", header=header)
        stats = _scan_stats(res)
        stats["model"] = model.to_dict()
        stats["drive"] = drive.to_dict()
        _write_meta(stem + ".meta", cfg, "map2d", stats, started)
        if stats["non_converged"]:
            log.warning("%s: %d of %d points did not converge", stem, stats["non_converged"],
                        res.rate.size)
            code = EXIT_NUMERIC
    return code


def cmd_pn(cfg: RunConfig, out_dir: str, threads: int = 1) -> int:
    t_eval = cfg.numeric.get("t_eval_us")
    if t_eval is None:
        raise ConfigError("pn needs [numeric] t_eval_us")
    n_max = int(cfg.numeric["n_max"])
    started = time.perf_counter()
    code = EXIT_OK
    rtol, atol = cfg.numeric["rtol"], cfg.numeric["atol"]
    for label, model, drive in cfg.series():
        gen = assemble_generators(model, drive)
        g0 = model.initial_density()
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            pn = evolve_pn(gen, g0, t_eval, n_max, rtol=rtol, atol=atol)
        mom = evolve_factorial_moments(gen, g0, [t_eval], rtol=rtol, atol=atol)
        n1, n2 = float(mom.N1[-1]), float(mom.N2[-1])
        q = (n2 - n1 * n1) / n1 if n1 > 0 else float("nan")
        probs = pn.probabilities
        last = len(probs) - 1
        while last > 0 and probs[last] == 0.0:
            last -= 1
        rows = [(n, probs[n]) for n in range(last + 1)]
        rows += [("N1", n1), ("N2", n2), ("Q", q), ("deficit", pn.deficit)]
        stem = os.path.join(out_dir, _stem(cfg, label) + "_pn")
        with open(stem + ".csv", "w", newline="", encoding="utf-8") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["n", "P_n"])
            for n, p in rows:
                writer.writerow([n if isinstance(n, str) else str(n), _fmt(p)])
        stats = {"t_eval_us": t_eval, "n_max": n_max, "deficit": pn.deficit, "N1": n1, "N2": n2,
                 "Q": q, **pn.stats}
        _write_meta(stem + ".meta", cfg, "pn", stats, started)
        if pn.deficit > DEFICIT_LIMIT:
            log.warning("%s: truncation deficit %.3g exceeds %g (increase n_max)", stem,
                        pn.deficit, DEFICIT_LIMIT)
            code = EXIT_NUMERIC
    return code


def cmd_validate(cfg: RunConfig, out_dir: str | None = None, threads: int = 1) -> int:
    from .validation import run_validation

    code = EXIT_OK
    for label, model, drive in cfg.series():
        checks = run_validation(model, drive, cfg)
        title = f"validation of {model.kind.value}" + (f" ({label})" if label else "")
        print(title)
        width = max(len(c.name) for c in checks)
        for c in checks:
            print(f"  {'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}")
        if not all(c.passed for c in checks):
            code = EXIT_NUMERIC
    print("all checks passed" if code == EXIT_OK else "some checks FAILED")
    return code


COMMANDS = {
    "spectrum": cmd_spectrum,
    "map2d": cmd_map2d,
    "pn": cmd_pn,
    "validate": cmd_validate,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gfcount",
        description="Photon counting statistics of driven four-level atoms.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, helptext in (
        ("spectrum", "1D absorption line shape and Mandel Q scan"),
        ("map2d", "2D map over two parameters"),
        ("pn", "photon-number distribution P_n at t_eval_us"),
        ("validate", "run the oracle cross-checks for the configured point"),
    ):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--out", default=".", help="output directory (default: .)")
        p.add_argument("--threads", type=int, default=1, help="worker processes for scans")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        os.makedirs(args.out, exist_ok=True)
        return COMMANDS[args.command](cfg, args.out, args.threads)
    except ConfigError as exc:
        print(f"config error in {args.config}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
