"""
Command-line runner for ModularFlow.
Parses arguments, resolves configuration, runs one experiment and writes reports.

Exit codes: 0 success, 1 a bound check failed, 2 usage or input error,
3 a polynomial needed more degree than the cap allows.
"""

import argparse
import sys
import time
from pathlib import Path
from typing import List, Optional

from cli import statusbar
from cli.experiments import EXPERIMENTS
from cli.reports import write_reports
from config import ConfigManager, get_config_manager
from modular.errors import ResourceError
from version import __version__

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_USAGE = 2
EXIT_RESOURCE = 3


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", required=True, help="Directory for report.csv and summary.json")
    parser.add_argument("--config", help="Config file; must exist and parse when given")
    parser.add_argument("--seed", type=int, help="Random seed for sampled experiments")
    parser.add_argument("--degree-cap", dest="degree_cap", type=int,
                        help="Largest polynomial degree any builder may produce")


def _accuracy(parser: argparse.ArgumentParser, kappa: bool = True) -> None:
    parser.add_argument("--epsilon", type=float, help="Target accuracy in (0, 1)")
    if kappa:
        parser.add_argument("--kappa", type=float, help="Spectral floor parameter, > 1")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="modularflow",
        description="Desk-scale simulator of modular flow through polynomial transformations.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("approx-log", help="Chebyshev approximation of ln(x) on [1/kappa, 1]")
    _common(p)
    _accuracy(p)
    p.add_argument("--grid", type=int, help="Number of grid points")

    p = sub.add_parser("mh-poly", help="Build and audit the modular Hamiltonian polynomial")
    _common(p)
    _accuracy(p)
    p.add_argument("--grid", type=int, help="Number of grid points")

    p = sub.add_parser("flow", help="Flow an operator by a state's modular unitary")
    _common(p)
    _accuracy(p)
    p.add_argument("--state", required=True, help="Density or pure-state file")
    p.add_argument("--operator", required=True, help="Operator file")
    p.add_argument("--time", type=float, help="Modular time t")
    p.add_argument("--mode", choices=("exact", "polynomial"))
    p.add_argument("--zero-tol", dest="zero_tol", type=float)

    p = sub.add_parser("purified-flow", help="Flow one half of a bipartite pure state")
    _common(p)
    p.add_argument("--state", required=True, help="Pure-state file with two subsystems")
    p.add_argument("--time", type=float, help="Modular time t")
    p.add_argument("--delta", type=float, help="Target trace distance in (0, 1)")

    p = sub.add_parser("entropy", help="Estimate the von Neumann entropy")
    _common(p)
    _accuracy(p, kappa=False)
    p.add_argument("--state", required=True, help="Density or pure-state file")
    p.add_argument("--method", choices=("qpe", "functional"), default="qpe")
    p.add_argument("--delta", type=float, help="Failure probability in (0, 1)")
    p.add_argument("--bits", type=int, help="Phase register bits; exact phases when omitted")
    p.add_argument("--phase-source", dest="phases", choices=("exact", "polynomial"), default="exact")
    p.add_argument("--zero-tol", dest="zero_tol", type=float)

    p = sub.add_parser("correlator", help="Modular correlator W(s, t) over a grid of s")
    _common(p)
    _accuracy(p, kappa=False)
    p.add_argument("--state", required=True, help="Density or pure-state file")
    p.add_argument("--psi-r", dest="psi_r", required=True, help="Operator flowed by rho")
    p.add_argument("--psi-l", dest="psi_l", required=True, help="Operator evolved by the Hamiltonian")
    p.add_argument("--hamiltonian", help="Hamiltonian for psi_l(t); identity evolution when omitted")
    p.add_argument("--s-grid", dest="s_grid", type=float, nargs="+", required=True)
    p.add_argument("--time", type=float, help="Physical time t")
    p.add_argument("--mode", choices=("exact", "polynomial"))
    p.add_argument("--zero-tol", dest="zero_tol", type=float)

    p = sub.add_parser("ccc", help="Entropy of BC under the modular flow of AB")
    _common(p)
    p.add_argument("--state", required=True, help="Tripartite density or pure-state file")
    p.add_argument("--dims", type=int, nargs=3, required=True, metavar=("DA", "DB", "DC"))
    p.add_argument("--t1", type=float, required=True)
    p.add_argument("--t2", type=float, required=True)
    p.add_argument("--zero-tol", dest="zero_tol", type=float)

    p = sub.add_parser("sweep-kappa", help="Query counts over kappa and the fitted slope")
    _common(p)
    _accuracy(p, kappa=False)
    p.add_argument("--kappas", type=float, nargs="+")
    p.add_argument("--time", type=float)
    p.add_argument("--workers", type=int)

    p = sub.add_parser("sweep-time", help="Query counts over t and the fitted slope")
    _common(p)
    _accuracy(p)
    p.add_argument("--times", type=float, nargs="+")
    p.add_argument("--workers", type=int)

    p = sub.add_parser("query-count", help="Polynomial degrees and the closed-form bound")
    _common(p)
    _accuracy(p)
    p.add_argument("--time", type=float)

    return parser


def load_config(path: Optional[str]) -> ConfigManager:
    if path is None:
        return get_config_manager()
    return ConfigManager(path, strict=True)


def run_application(argv: Optional[List[str]] = None) -> int:
    """Run ModularFlow on argv and return the process exit code."""
    statusbar.register(sys.stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code) if e.code is not None else EXIT_OK

    try:
        config = load_config(args.config)
        started = time.perf_counter()
        outcome = EXPERIMENTS[args.command](args, config)
        timing = {"elapsed_seconds": time.perf_counter() - started}
        csv_path, summary_path = write_reports(
            Path(args.out), outcome, config.get_section("report"), timing
        )
    except ResourceError as e:
        statusbar.set_status(str(e), level='error')
        return EXIT_RESOURCE
    except OSError as e:
        # FileNotFoundError included
        name = e.filename if e.filename is not None else ""
        statusbar.set_status(f"Cannot access {name}: {e.strerror or e}", level='error')
        return EXIT_USAGE
    except ValueError as e:
        statusbar.set_status(str(e), level='error')
        return EXIT_USAGE
    except KeyError as e:
        statusbar.set_status(f"Missing config key: {str(e)}", level='error')
        return EXIT_USAGE
    except Exception as e:
        statusbar.set_status(f"Unexpected error: {str(e)}", level='error')
        return EXIT_USAGE

    for message in outcome.diagnostics:
        statusbar.set_status(message, level='warning')
    if not outcome.passed:
        failed = [row.experiment for row in outcome.rows if row.passed is False]
        failed += [name for name, ok in outcome.checks.items() if not ok]
        statusbar.set_status(
            f"{args.command}: check failed ({', '.join(failed[:5])}); reports in {csv_path} and {summary_path}",
            level='error',
        )
        return EXIT_CHECK_FAILED
    statusbar.set_status(f"{args.command}: wrote {csv_path} and {summary_path}", level='success')
    return EXIT_OK
