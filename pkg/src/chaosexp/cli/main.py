"""Command line entry point.

Exit codes: 0 success, 1 a --check assertion failed, 2 configuration error.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from ..errors import ChaosExpError, ConfigError, DivergenceError, RegimeError
from .config import COMMANDS, ExperimentConfig, parse_n_grid

EXIT_OK, EXIT_CHECK_FAILED, EXIT_CONFIG = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise ConfigError(message)


def _int_list(text: str) -> tuple:
    try:
        return tuple(int(v) for v in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma separated integers, got {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="chaosexp", description="Second-order expansions for second-chaos statistics.")
    p.add_argument("command", choices=COMMANDS)
    model = p.add_argument_group("model")
    model.add_argument("--h", type=float, help="Hurst index of a single fGn model")
    model.add_argument("--h1", type=float, help="first Hurst index of a correlated pair")
    model.add_argument("--h2", type=float, help="second Hurst index of a correlated pair")
    model.add_argument("--table", help="CSV covariance table with columns k,rho")
    model.add_argument("--decay-exponent", type=float, help="tail exponent of the table covariance")
    size = p.add_argument_group("size")
    size.add_argument("--n", type=int, help="number of increments")
    size.add_argument("--n-grid", type=parse_n_grid, help="LO..HI (powers of two) or a comma list")
    mc = p.add_argument_group("monte carlo")
    mc.add_argument("--seed", type=int, default=20_160_403)
    mc.add_argument("--replications", type=int, help="default 200000; 2000000 for validate --check")
    mc.add_argument("--workers", type=int, default=1, help="overridden by CHAOSEXP_WORKERS")
    mc.add_argument("--perturb-q", type=int, help="add N^(-(1+beta)/2) He_q(zeta) to each statistic")
    mc.add_argument("--perturb-beta", type=float, default=1.0)
    grid = p.add_argument_group("grid")
    grid.add_argument("--x-min", type=float, default=-3.0)
    grid.add_argument("--x-max", type=float, default=3.0)
    grid.add_argument("--points", type=int, default=601)
    grid.add_argument("--alphas", type=_int_list, default=(0, 1, 2), help="polynomial weights |x|^alpha")
    expansion = p.add_argument_group("explicit expansion")
    expansion.add_argument("--rho", type=float)
    expansion.add_argument("--gamma", type=float)
    out = p.add_argument_group("output")
    out.add_argument("--method", choices=("exact", "mc"), default="exact", help="truth used by rates")
    out.add_argument("--output", "-o", help="output path (the batch file for simulate)")
    out.add_argument("--format", dest="fmt", choices=("json", "csv"), default="json")
    out.add_argument("--check", action="store_true", help="turn assertions into the exit status")
    out.add_argument("--criteria", type=_int_list, help="subset of acceptance criteria for validate --check")
    return p


def parse_config(argv) -> ExperimentConfig:
    ns = build_parser().parse_args(argv)
    return ExperimentConfig(**vars(ns))


def main(argv=None) -> int:
    from .pipelines import run

    try:
        cfg = parse_config(sys.argv[1:] if argv is None else argv)
        report = run(cfg)
    except (ConfigError, RegimeError, DivergenceError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ChaosExpError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CHECK_FAILED
    text = report.to_csv() if cfg.fmt == "csv" else report.to_json()
    if cfg.output and cfg.command != "simulate":
        Path(cfg.output).write_text(text)
    else:
        sys.stdout.write(text + ("" if text.endswith("\n") else "\n"))
    for line in report.lines:
        print(line, file=sys.stderr)
    if report.passed is False:
        return EXIT_CHECK_FAILED
    return EXIT_OK
