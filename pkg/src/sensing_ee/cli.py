"""Command-line entry point: ``sensing-ee {solve,sweep,validate-bound}``."""

import argparse
import logging
import os
import sys

from .experiments import ConfigError, ExperimentConfig, known_keys, load_config, run
from .optimizer import write_trace_csv

EXIT_USAGE = 2
EXIT_NOT_CONVERGED = 3

_KIND = {"solve": "solve", "sweep": "sweep", "validate-bound": "validate_bound"}


def _parser():
    parser = argparse.ArgumentParser(
        prog="sensing-ee",
        description="Energy-efficient power adaptation for sensing-based spectrum sharing.",
        epilog="Any config key may also be given as --<key> <value>, e.g. --p_detect 0.9 "
               "or --q_avg_db -8.")
    parser.add_argument("command", choices=sorted(_KIND))
    parser.add_argument("--config", help="flat 'key = value' config file")
    parser.add_argument("--out", help="CSV output path (default: stdout)")
    parser.add_argument("--trace", help="trace CSV path for 'solve' "
                        "(default: <out>.trace.csv when --out is given)")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--samples", type=int, help="number of channel realizations")
    parser.add_argument("--workers", type=int, help="parallel sweep workers")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def _overrides(extra, parser):
    out = {}
    keys = known_keys()
    it = iter(extra)
    for token in it:
        if not token.startswith("--"):
            parser.error(f"unexpected argument {token!r}")
        key, eq, value = token[2:].partition("=")
        key = key.replace("-", "_") if key.replace("-", "_") in keys else key
        if key not in keys:
            parser.error(f"unknown config key {key!r}")
        if not eq:
            value = next(it, None)
            if value is None:
                parser.error(f"--{key} needs a value")
        out[key] = value
    return out


def main(argv=None) -> int:
    parser = _parser()
    args, extra = parser.parse_known_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        mapping = load_config(args.config) if args.config else {}
    except OSError as exc:
        print(f"sensing-ee: cannot read config: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ConfigError as exc:
        print(f"sensing-ee: {exc}", file=sys.stderr)
        return EXIT_USAGE
    mapping.update(_overrides(extra, parser))
    for flag, key in (("seed", "seed"), ("samples", "n_samples"), ("workers", "workers")):
        if getattr(args, flag) is not None:
            mapping[key] = getattr(args, flag)
    mapping["kind"] = _KIND[args.command]

    try:
        cfg = ExperimentConfig.from_mapping(mapping)
    except ConfigError as exc:
        print(f"sensing-ee: {exc}", file=sys.stderr)
        return EXIT_USAGE

    table = run(cfg)
    if args.out:
        table.write(args.out)
    else:
        sys.stdout.write(table.to_csv())

    if cfg["kind"] == "solve":
        trace_path = args.trace
        if trace_path is None and args.out:
            trace_path = os.path.splitext(args.out)[0] + ".trace.csv"
        if trace_path:
            write_trace_csv(table.results[0], trace_path)

    if not table.all_converged:
        print("sensing-ee: solver did not converge (see 'converged' column)", file=sys.stderr)
        return EXIT_NOT_CONVERGED
    return 0


if __name__ == "__main__":
    sys.exit(main())
