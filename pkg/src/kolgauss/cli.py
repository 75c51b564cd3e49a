"""Command-line entry point: ``kolgauss <subcommand> [options]``."""

from __future__ import annotations

import argparse
import sys

from . import harness
from .errors import BankFormatError, ConfigError, DomainError, NumericError

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="kolgauss", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name, text in [("gen-bank", "simulate and save a Gaussian path bank"),
                       ("solve", "sum the iteration series against a bank"),
                       ("reference", "direct Euler-Maruyama Monte Carlo"),
                       ("sweep-sigma", "solve for a decreasing list of sigma on one bank"),
                       ("sweep-x", "differences u(T, x +- shift e_k) - u(T, x)"),
                       ("validate", "run identity, oracle and brute-force checks")]:
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", help="flat key = value file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override one config key (repeatable)")
        p.add_argument("--seed", type=int)
        p.add_argument("--bank", help="bank file path (default bank.kgb)")
        p.add_argument("--out", help="output path prefix (default result)")
        p.add_argument("--strict", action="store_true",
                       help="exit 3 when the series does not converge")
    return parser


def build_config(args) -> harness.RunConfig:
    config = harness.load_config(args.config) if args.config else harness.RunConfig()
    overrides = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        overrides[key.strip()] = value.strip()
    for key in ("seed", "bank", "out"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    config = config.updated(**overrides)
    config.model()
    config.grid()
    return config


def _run(args) -> int:
    if args.command == "validate":
        results = harness_validate()
        for r in results:
            print(r.line())
        return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERIC
    config = build_config(args)
    if args.command == "gen-bank":
        bank = harness.cmd_gen_bank(config)
        print(f"bank {config.bank}: d={bank.d} n_samples={bank.n_samples} "
              f"n_coarse={bank.n_coarse} mode={bank.mode} checksum={bank.checksum():016x}")
        return EXIT_OK
    if args.command == "solve":
        res = harness.cmd_solve(config)
        print(f"u(T) = {res.u_T:.6g} +- {res.u_T_stderr:.2g}  n_final={res.n_final} "
              f"converged={res.converged}")
        return EXIT_NUMERIC if args.strict and not res.converged else EXIT_OK
    if args.command == "reference":
        run = harness.cmd_reference(config)
        print(f"u_ref(T) = {run.u_T:.6g} +- {run.u_T_stderr:.2g}")
        return EXIT_OK
    if args.command == "sweep-sigma":
        sweep = harness.cmd_sweep_sigma(config)
        for s, r, flag in zip(sweep.sigmas, sweep.results, sweep.degraded):
            print(f"sigma={s:g} u(T)={r.u_T:.6g} n_final={r.n_final} degraded={bool(flag)}")
        if args.strict and not all(r.converged for r in sweep.results):
            return EXIT_NUMERIC
        return EXIT_OK
    if args.command == "sweep-x":
        sweep = harness.cmd_sweep_x(config)
        print(f"{sweep.k.size} differences written to {config.out}.csv")
        return EXIT_OK
    raise ConfigError(f"unknown command {args.command!r}")


def harness_validate():
    from .validation import run_validation
    return run_validation()


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _run(args)
    except (ConfigError, BankFormatError, DomainError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
