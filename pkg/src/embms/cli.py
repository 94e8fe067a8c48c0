"""Command line: ``embms run|validate|figures``.

Exit codes: 0 success, 1 validation error (bad config or missing input),
2 runtime error.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .config import ConfigError, effective_config, load_config

EXIT_OK, EXIT_VALIDATION, EXIT_RUNTIME = 0, 1, 2
log = logging.getLogger("embms")


def _load(path):
    try:
        return load_config(path), None
    except FileNotFoundError as e:
        return None, [("--config", str(e))]
    except ConfigError as e:
        return None, e.errors


def _report_errors(errors) -> int:
    for field_path, msg in errors:
        print(f"config error: {field_path}: {msg}", file=sys.stderr)
    return EXIT_VALIDATION


def cmd_validate(args) -> int:
    cfg, errors = _load(args.config)
    if errors:
        return _report_errors(errors)
    print(f"ok: {args.config} ({len(cfg.seeds)} seeds, planners {', '.join(cfg.planners)})")
    return EXIT_OK


def cmd_run(args) -> int:
    cfg, errors = _load(args.config)
    if errors:
        return _report_errors(errors)
    if args.threads < 1:
        return _report_errors([("--threads", "must be >= 1")])
    from .experiment import run_experiment
    from .output import write_bundle

    seeds = [args.seed] if args.seed is not None else None
    try:
        records = run_experiment(cfg, seeds, threads=args.threads)
        echo = effective_config(cfg)
        if seeds is not None:
            echo["seeds"] = seeds
        write_bundle(records, args.out, echo)
    except OSError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    except Exception as e:  # noqa: BLE001 - report and map to the runtime exit code
        log.exception("run failed")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"wrote {len(records)} records to {args.out}")
    return EXIT_OK


def cmd_figures(args) -> int:
    from .output import write_figures

    try:
        names = write_figures(args.out)
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VALIDATION
    except Exception as e:  # noqa: BLE001
        print(f"error: {e}", file=sys.stderr)
        return EXIT_RUNTIME
    print("wrote " + ", ".join(names))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="embms", description="MBSFN area planning experiments")
    sub = p.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run the experiments in a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True)
    run.add_argument("--seed", type=int, default=None, help="run only this seed")
    run.add_argument("--threads", type=int, default=1)
    run.set_defaults(func=cmd_run)
    val = sub.add_parser("validate", help="check a config file without running it")
    val.add_argument("--config", required=True)
    val.set_defaults(func=cmd_validate)
    fig = sub.add_parser("figures", help="aggregate metrics.csv into per-figure CSVs")
    fig.add_argument("--out", required=True)
    fig.set_defaults(func=cmd_figures)
    return p


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
