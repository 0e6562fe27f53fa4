"""
Command-line interface.

Exit codes: 0 success, 1 usage error, 2 data or validation error,
3 degenerate statistics.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .distributions import ALGORITHM_ID
from .exceptions import DegenerateError, InputError
from .formats import (
    convert_adjacency,
    read_matrices,
    read_quantile_csv,
    read_raw_csv,
    read_vector_csv,
    write_quantile_csv,
)
from .frechet import bootstrap_variance_interval, frechet_summary, stddev_interval, variance_interval
from .ksample import GroupedSample, asymptotic_test, bootstrap_test, permutation_test
from .power import StudyConfig, run_power_study
from .spaces import MatrixKind, ObjectSample

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_DEGENERATE = 0, 1, 2, 3

SPACES = ("wasserstein", "frobenius-laplacian", "frobenius-correlation", "euclidean")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _add_common(p, randomized=True):
    p.add_argument("--space", choices=SPACES, required=True,
                   help="object space of the input files (never guessed)")
    p.add_argument("--grid-size", type=int, default=100, help="quantile grid size for --raw input")
    p.add_argument("--raw", action="store_true",
                   help="Wasserstein rows hold raw observations rather than quantile grids")
    if randomized:
        p.add_argument("--replicates", type=int, default=999)
        p.add_argument("--seed", type=int, default=0)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="frechet-anova", description=__doc__.splitlines()[1])
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    t = sub.add_parser("test", help="k-sample test for equal distributions")
    t.add_argument("inputs", nargs="+", help="one file (or matrix directory) per group, "
                                              "or a single input with --labels")
    _add_common(t)
    t.add_argument("--method", choices=("asymptotic", "permutation", "bootstrap"), default="permutation")
    t.add_argument("--alpha", type=float, default=0.05)
    t.add_argument("--labels", help="'column' to read labels from the first CSV column, "
                                     "or a file with one label per line")
    t.add_argument("--output", help="write the JSON report here")

    c = sub.add_parser("ci", help="confidence intervals for the Fréchet variance and standard deviation")
    c.add_argument("input")
    _add_common(c)
    c.add_argument("--level", type=float, default=0.95)
    c.add_argument("--method", choices=("asymptotic", "bootstrap"), default="asymptotic")
    c.add_argument("--resample-size", type=int, default=None)
    c.add_argument("--output", help="write the intervals as JSON here")

    s = sub.add_parser("simulate", help="run a Monte Carlo power study")
    s.add_argument("--config", required=True)
    s.add_argument("--output", help="CSV path (overrides the config)")
    s.add_argument("--seed", type=int, default=None, help="root seed (overrides the config)")

    v = sub.add_parser("convert", help="raw samples to quantile grids, or adjacency to Laplacians")
    v.add_argument("input")
    v.add_argument("--space", choices=("wasserstein", "frobenius-laplacian"), required=True)
    v.add_argument("--grid-size", type=int, default=100)
    v.add_argument("--output", required=True)
    return parser


def _kind(space):
    return MatrixKind.LAPLACIAN if space == "frobenius-laplacian" else MatrixKind.CORRELATION


def load_sample(path, args, label_column=False):
    """Read one input according to ``--space``; returns ``(sample, labels)``."""
    if args.space == "wasserstein":
        if args.raw:
            return read_raw_csv(path, args.grid_size, label_column)
        return read_quantile_csv(path, label_column)
    if args.space == "euclidean":
        return read_vector_csv(path, label_column)
    if label_column:
        raise UsageError("--labels column needs CSV input; pass a label file for matrices")
    sample, _ = read_matrices(path, _kind(args.space))
    return sample, None


def _grouped(args) -> GroupedSample:
    if len(args.inputs) > 1:
        if args.labels:
            raise UsageError("--labels is only valid with a single input")
        groups = [load_sample(p, args)[0] for p in args.inputs]
        names = [Path(p).stem or str(p) for p in args.inputs]
        if len(set(names)) != len(names):
            names = [str(p) for p in args.inputs]
        return GroupedSample.from_groups(groups, names)
    if not args.labels:
        raise UsageError("a single input needs --labels (or pass one input per group)")
    if args.labels == "column":
        sample, labels = load_sample(args.inputs[0], args, label_column=True)
    else:
        sample, _ = load_sample(args.inputs[0], args)
        lp = Path(args.labels)
        if not lp.is_file():
            raise InputError(f"{lp}: no such label file")
        labels = [line.strip() for line in lp.read_text().splitlines() if line.strip()]
        if len(labels) != len(sample):
            raise InputError(f"{lp}: {len(labels)} labels for {len(sample)} objects")
    return GroupedSample(sample, np.array(labels, dtype=str))


def _cmd_test(args, out) -> int:
    if not 0 < args.alpha < 1:
        raise UsageError("--alpha must lie in (0, 1)")
    data = _grouped(args)
    if args.method == "asymptotic":
        report = asymptotic_test(data, args.alpha)
    elif args.method == "permutation":
        report = permutation_test(data, args.replicates, args.seed, args.alpha)
    else:
        report = bootstrap_test(data, args.replicates, args.seed, args.alpha)
    text = report.to_json()
    if args.output:
        Path(args.output).write_text(text + "\n")
    else:
        print(text, file=out)
    if args.method != "asymptotic":
        print(f"seed={report.seed} algorithm_id={report.algorithm_id}", file=out)
    print(report.verdict(), file=out)
    return EXIT_OK


def _cmd_ci(args, out) -> int:
    if not 0 < args.level < 1:
        raise UsageError("--level must lie in (0, 1)")
    sample, _ = load_sample(args.input, args)
    summary = frechet_summary(sample)
    var_ci = variance_interval(summary, args.level)
    sd_ci = stddev_interval(summary, args.level)
    result = {
        "n": summary.n,
        "variance": summary.variance,
        "sigma_sq": summary.sigma_sq,
        "level": args.level,
        "variance_interval": [var_ci.lower, var_ci.upper],
        "stddev_interval": [sd_ci.lower, sd_ci.upper],
    }
    print(f"n={summary.n} V={summary.variance:.6g} sigma_sq={summary.sigma_sq:.6g}", file=out)
    print(f"{args.level:.0%} variance interval: [{var_ci.lower:.6g}, {var_ci.upper:.6g}]", file=out)
    print(f"{args.level:.0%} std. dev. interval: [{sd_ci.lower:.6g}, {sd_ci.upper:.6g}]", file=out)
    if args.method == "bootstrap":
        boot = bootstrap_variance_interval(sample, args.level, args.replicates, args.resample_size, args.seed)
        result.update(bootstrap_interval=[boot.lower, boot.upper], replicates=boot.replicates,
                      discarded_replicates=boot.discarded, seed=args.seed, algorithm_id=ALGORITHM_ID)
        print(f"{args.level:.0%} bootstrap variance interval: [{boot.lower:.6g}, {boot.upper:.6g}] "
              f"({boot.replicates} replicates, {boot.discarded} discarded)", file=out)
        print(f"seed={args.seed} algorithm_id={ALGORITHM_ID}", file=out)
    if args.output:
        Path(args.output).write_text(json.dumps(result, indent=2) + "\n")
    return EXIT_OK


def _cmd_simulate(args, out) -> int:
    if not Path(args.config).is_file():
        raise InputError(f"{args.config}: no such config file")
    config = StudyConfig.from_json(args.config)
    if args.seed is not None:
        config.seed = args.seed
    output = args.output or config.output
    curve = run_power_study(config, output)
    if not output:
        print(curve.to_csv(), end="", file=out)
    else:
        print(f"wrote {output} and {output}.meta.json", file=out)
    print(f"seed={config.seed} algorithm_id={ALGORITHM_ID}", file=out)
    return EXIT_OK


def _cmd_convert(args, out) -> int:
    if args.space == "wasserstein":
        sample, _ = read_raw_csv(args.input, args.grid_size)
        write_quantile_csv(args.output, sample)
        print(f"wrote {len(sample)} quantile grids to {args.output}", file=out)
    else:
        written = convert_adjacency(args.input, args.output)
        print(f"wrote {len(written)} Laplacian files to {args.output}", file=out)
    return EXIT_OK


COMMANDS = {"test": _cmd_test, "ci": _cmd_ci, "simulate": _cmd_simulate, "convert": _cmd_convert}


def run_cli(argv=None, out=None, err=None) -> int:
    """Run the command line with ``argv`` and return the exit code."""
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(err)
            return EXIT_USAGE
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"usage error: {exc}", file=err)
        return EXIT_USAGE
    except DegenerateError as exc:
        print(f"degenerate statistics: {exc}", file=err)
        return EXIT_DEGENERATE
    except (InputError, OSError) as exc:
        print(f"data error: {exc}", file=err)
        return EXIT_DATA


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
