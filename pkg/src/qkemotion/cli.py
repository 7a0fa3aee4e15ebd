"""Command-line entry point.

Exit codes: 0 success, 1 validation failure, 2 configuration error, 3 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import experiment, kernel
from .errors import ConfigurationError, QKEmotionError

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_CONFIG = 2
EXIT_DATA = 3


def _parse_set(items):
    overrides = {}
    for item in items or ():
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigurationError(f"--set expects KEY=VALUE, got {item!r}")
        try:
            overrides[key] = json.loads(value)
        except ValueError:
            overrides[key] = value
    return overrides


def build_config(args) -> experiment.ExperimentConfig:
    cfg = experiment.load_config(args.config) if args.config else experiment.ExperimentConfig()
    overrides = _parse_set(args.set)
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.participants is not None:
        overrides["n_participants"] = args.participants
    if args.out is not None:
        overrides["output_dir"] = str(args.out)
    return experiment.apply_overrides(cfg, overrides) if overrides else cfg


def _add_common(p):
    p.add_argument("--config", type=Path, help="experiment config (JSON); defaults apply to missing fields")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--participants", type=int, help="cohort size")
    p.add_argument("--out", type=Path, help="output directory")
    p.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config field, e.g. svm.c=10")
    p.add_argument("--jobs", type=int, default=1, help="worker threads; results do not depend on it")


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qkemotion", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="write synthetic per-participant session CSVs")
    _add_common(p)

    p = sub.add_parser("preprocess", help="export features, labels and normalization stats")
    _add_common(p)
    p.add_argument("--sessions", type=Path, help="read session CSVs instead of synthesizing")

    p = sub.add_parser("run", help="run all folds and write the report tables")
    _add_common(p)
    p.add_argument("--sessions", type=Path, help="read session CSVs instead of synthesizing")

    p = sub.add_parser("validate", help="check a kernel dump for symmetry, range and PSD")
    p.add_argument("path", type=Path)

    p = sub.add_parser("report", help="print the tables of a finished run")
    p.add_argument("run_dir", type=Path)

    p = sub.add_parser("config", help="print the resolved experiment config")
    _add_common(p)
    return parser


def _cmd_synth(args):
    cfg = build_config(args)
    digest, paths = experiment.synthesize(cfg, cfg.output_dir)
    print(f"wrote {len(paths)} sessions to {Path(cfg.output_dir) / 'sessions'}")
    print(f"cohort digest: {digest}")
    return EXIT_OK


def _cmd_preprocess(args):
    cfg = build_config(args)
    paths = experiment.preprocess(cfg, cfg.output_dir, args.sessions)
    for key, path in paths.items():
        print(f"{key}: {path}")
    return EXIT_OK


def _cmd_run(args):
    cfg = build_config(args)
    result = experiment.run_experiment(cfg, jobs=args.jobs, sessions_dir=args.sessions)
    print(result.classical_table)
    print(result.quantum_table)
    print(f"report digest: {result.digest()}")
    return EXIT_OK


def _cmd_validate(args):
    report = kernel.validate_gram(kernel.load_gram(args.path))
    print(report.summary())
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _cmd_report(args):
    path = args.run_dir / "report.json"
    if (args.run_dir / "INVALID").exists():
        print(f"warning: {args.run_dir} is marked INVALID", file=sys.stderr)
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
        classical, quantum = experiment.render_tables(doc)
    except (OSError, ValueError, KeyError, TypeError) as exc:
        print(f"error: cannot read report {path}: {exc}", file=sys.stderr)
        return EXIT_DATA
    print(classical)
    print(quantum)
    return EXIT_OK


def _cmd_config(args):
    print(json.dumps(build_config(args).to_dict(), indent=1, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "synth": _cmd_synth,
    "preprocess": _cmd_preprocess,
    "run": _cmd_run,
    "validate": _cmd_validate,
    "report": _cmd_report,
    "config": _cmd_config,
}


def exit_code_for(exc: BaseException) -> int:
    if isinstance(exc, experiment.StageError):
        exc = exc.cause
    if isinstance(exc, ConfigurationError):
        return EXIT_CONFIG
    if isinstance(exc, OSError):
        return EXIT_CONFIG
    return EXIT_DATA


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (QKEmotionError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exit_code_for(exc)


if __name__ == "__main__":
    sys.exit(main())
