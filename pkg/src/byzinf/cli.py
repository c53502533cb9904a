"""Command-line front end: ``byzinf run | validate | list``.

Exit codes: 0 success, 1 invalid config, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import experiments

EXIT_OK, EXIT_INVALID, EXIT_RUNTIME = 0, 1, 2


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="byzinf", description="Byzantine-attack inference experiments.")
    sub = ap.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run an experiment and write its CSV")
    src = run.add_mutually_exclusive_group(required=True)
    src.add_argument("--config", help="JSON experiment config")
    src.add_argument("--experiment", choices=sorted(experiments.EXPERIMENTS), help="run an experiment with its defaults")
    run.add_argument("--seed", type=int, help="override the config seed")
    run.add_argument("--out", help="output CSV path ('-' for stdout); overrides the config")

    val = sub.add_parser("validate", help="check a config without running it")
    val.add_argument("--config", required=True)

    sub.add_parser("list", help="list experiment ids and their targets")
    return ap


def _load(path):
    try:
        return experiments.load_config(path), None
    except experiments.ConfigError as exc:
        return None, exc.diagnostics


def _report(diags):
    for d in diags:
        print(f"error: {d}", file=sys.stderr)


def _cmd_list() -> int:
    for name, exp in experiments.EXPERIMENTS.items():
        print(f"{name}\t{exp.target}\t{exp.description}")
    return EXIT_OK


def _cmd_validate(args) -> int:
    try:
        config, diags = _load(args.config)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if diags is None:
        diags = experiments.validate(config)
    if diags:
        _report(diags)
        return EXIT_INVALID
    print(f"{args.config}: ok")
    return EXIT_OK


def _cmd_run(args) -> int:
    if args.config is not None:
        try:
            config, diags = _load(args.config)
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_RUNTIME
        if diags:
            _report(diags)
            return EXIT_INVALID
    else:
        config = {"schema_version": experiments.SCHEMA_VERSION, "experiment": args.experiment}
    if args.seed is not None:
        config = dict(config, seed=args.seed)
    diags = experiments.validate(config)
    if diags:
        _report(diags)
        return EXIT_INVALID
    out = args.out or config.get("output") or f"{config['experiment']}.csv"
    try:
        table = experiments.run(config)
        if out == "-":
            sys.stdout.write(table.to_csv())
        else:
            table.write(out)
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    except (ValueError, ArithmeticError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    if out != "-":
        meta = table.metadata
        print(f"{meta['experiment']} ({meta['target']}): {len(table.rows)} rows -> {out} [seed {meta['seed']}]")
    return EXIT_OK


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.command == "list":
        return _cmd_list()
    if args.command == "validate":
        return _cmd_validate(args)
    return _cmd_run(args)


if __name__ == "__main__":
    sys.exit(main())
