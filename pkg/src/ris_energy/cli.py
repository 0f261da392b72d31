"""ris-energy <experiment> --config <path> [--out PATH] [--seed N] [--trials N] [--format csv|json]

Exit status: 0 success, 1 failed verification or non-converged optimizer,
2 invalid configuration, 3 infeasible problem.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import os
import subprocess
import sys
import tempfile
from pathlib import Path

from . import __version__
from .config import EXPERIMENTS, ConfigError, load_config
from .experiments import Table, run_experiment
from .snr import SignalImpossibleError

log = logging.getLogger("ris_energy")


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)  # shortest round-trip repr, full double precision
    return str(v)


def table_to_csv(table: Table) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\r\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {k: _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def table_to_json(table: Table) -> str:
    return json.dumps(_json_safe(table.records()), indent=2) + "\n"


def _atomic_write(path: Path, text: str):
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def describe_version() -> str:
    try:
        out = subprocess.run(
            ["git", "describe", "--always", "--dirty"],
            capture_output=True, text=True, timeout=5, cwd=Path(__file__).parent,
        )
        if out.returncode == 0 and out.stdout.strip():
            return f"{__version__}+{out.stdout.strip()}"
    except (OSError, subprocess.SubprocessError):
        pass
    return __version__


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="ris-energy", description=__doc__.splitlines()[0])
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="YAML config (defaults apply for anything omitted)")
    ap.add_argument("--out", help="output table path (overrides run.out)")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--trials", type=int)
    ap.add_argument("--format", choices=("csv", "json"))
    ap.add_argument("--workers", type=int, help="worker threads")
    ap.add_argument("-q", "--quiet", action="store_true")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO, format="%(message)s")
    try:
        cfg = load_config(args.config)
        cfg.run.experiment = args.experiment
        for name in ("out", "seed", "trials", "format", "workers"):
            value = getattr(args, name)
            if value is not None:
                setattr(cfg.run, name, value)
        if cfg.run.trials < 0:
            raise ConfigError("run.trials", "must be >= 0")
        if cfg.run.workers < 1:
            raise ConfigError("run.workers", "must be >= 1")
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        table = run_experiment(cfg)
    except SignalImpossibleError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3
    except ValueError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 3

    out = Path(cfg.run.out)
    body = table_to_csv(table) if cfg.run.format == "csv" else table_to_json(table)
    sidecar = {
        "experiment": cfg.run.experiment,
        "version": describe_version(),
        "config": cfg.to_dict(),
        "ok": table.ok,
        "meta": table.meta,
    }
    _atomic_write(out, body)
    _atomic_write(out.with_name(out.stem + ".meta.json"), json.dumps(_json_safe(sidecar), indent=2) + "\n")

    if cfg.run.experiment in ("mc-verify", "optimize") and not args.quiet:
        width = max(len(c) for c in table.columns)
        for rec in table.records():
            if cfg.run.experiment == "mc-verify":
                status = "PASS" if rec["passed"] else "FAIL"
                print(f"{status}  {rec['check']:<24} N={rec['N']:<5} {rec['parameter']:<24} z={rec['z']:+.2f}")
            else:
                for k, v in rec.items():
                    print(f"{k:<{width}}  {_fmt(v)}")
    log.info("wrote %s", out)
    if not table.ok:
        if cfg.run.experiment == "optimize":
            print("optimizer did not converge; best iterate reported", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
