"""Command line entry point: ``radialspec <experiment> --config cfg.json``.

Exit codes: 0 success, 1 numerical failure, 2 invalid configuration.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from scipy.linalg import LinAlgError

from .eigensolver import SolverError
from .experiments import DISCLAIMER, EXPERIMENTS, ConfigError, ExperimentConfig, run
from .perturbation import NormalizationError
from .rays import RayError


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="radialspec", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="JSON experiment config")
        p.add_argument("--out", help="output directory (overrides the config)")
        p.add_argument("--threads", type=int, help="worker threads over angular degree")
        p.add_argument("--seed", type=int, help="RNG seed for randomised inputs")
        if name == "lengths":
            p.add_argument("--n-max", type=int, dest="n_chords")
            p.add_argument("--m-max", type=int, dest="m_max")
    return ap


def _error(out, kind, msg, code):
    report = {"error": kind, "message": msg, "exit_code": code}
    print(json.dumps(report), file=sys.stderr)
    if out:
        try:
            Path(out).mkdir(parents=True, exist_ok=True)
            (Path(out) / "error.json").write_text(json.dumps(report, indent=2) + "\n")
        except OSError:
            pass
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    try:
        with open(args.config) as fh:
            raw = json.load(fh)
        raw["experiment"] = args.command
        if args.out:
            raw["output_dir"] = args.out
        if args.threads:
            raw["threads"] = args.threads
        if args.seed is not None:
            raw["seed"] = args.seed
        if getattr(args, "n_chords", None):
            raw.setdefault("lengths", {})["n_max_chords"] = args.n_chords
        if getattr(args, "m_max", None):
            raw.setdefault("lengths", {})["m_max"] = args.m_max
        cfg = ExperimentConfig.from_dict(raw)
        cfg.make_profile()
    except (OSError, json.JSONDecodeError, ConfigError, TypeError) as exc:
        return _error(None, "config", str(exc), 2)
    try:
        summary = run(cfg)
    except ConfigError as exc:
        return _error(cfg.output_dir, "config", str(exc), 2)
    except (SolverError, RayError, NormalizationError, LinAlgError, ValueError,
            FloatingPointError) as exc:
        return _error(cfg.output_dir, "numerical", str(exc), 1)
    print(DISCLAIMER, file=sys.stderr)
    failed = summary.get("failed_links") or []
    for line in summary.get("verdict", []):
        print(line)
    print(f"wrote {cfg.output_dir} (config {summary['config_hash'][:12]})")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
