"""
``ellipsum`` command line.

Every experiment subcommand reads an optional ``key=value`` config file
(``--config``), applies the flags on top, writes its tables and a
``manifest.json`` into ``--out`` and prints a JSON summary on stdout.
Exit status: 0 on success, 2 on invalid input, 3 when a job would exceed
its work budget.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from ellipsum import get_version
from ellipsum.cli.commands import run
from ellipsum.cli.config import RunConfig, load_config
from ellipsum.cli.emit import json_text
from ellipsum.errors import EllipsumError
from ellipsum.lattice.cache_format import CacheStore
from ellipsum.utils.logging import configure_logging, logger

LOG_LEVELS = ("DEBUG", "INFO", "WARNING", "ERROR")

_FORM_HELP = (
    "matrix spec: diag:a1,...,an | full:[[m11,...],...] | qdiag:/qfull: "
    "with p/q entries"
)
_ALPHA_HELP = (
    "shift spec, comma separated: decimals, p/q, sqrt<k>, sqrt<k>-<j>, "
    "phi-1, e-2, pi-3 (empty for the zero center)"
)

_SCHEMAS = {
    "dio": "dio.json: alpha, norm, q_max, kappa_hat, worst_q, worst_dist, "
    "rational_hit, records [, relation]",
    "repsums": "repsums.csv: p, re_r, im_r, abs2_r, R_cum; "
    "repsums.json: p_max, R_cum, volume, bounded_ratio",
    "meansq": "meansq.csv: N, ratio, target; "
    "meansq.json: N, ratio, target, rel_error",
    "count": "count.csv: t, N, F; with --eps also shell.csv: t, eps, S",
    "fdev": "fdev.csv: T, mean_F, est_error; with --K also spectral.csv: "
    "K, T, value, est_error",
    "variance": "variance.json: T, value, target, ratio, est_error, mean, "
    "tail_bound, diag_spectral",
    "shell": "shell.json: T, eps, value, target, ratio, est_error, mean_S "
    "[, diag_spectral]",
    "theta-check": "theta.csv: v, theta_msq, repsum_msq, target",
}

_HELP = {
    "dio": "empirical diophantine type of a shift vector",
    "repsums": "twisted representation numbers r(p) up to --pmax",
    "meansq": "normalized mean square R(N)/N^(n/2) against |E^M|",
    "count": "lattice point counts N(t) and deviations F(t), S(t, eps)",
    "fdev": "averaged deviation <F>_T and the spectral error trend",
    "variance": "<|F|^2>_T against the variance constant",
    "shell": "<|S(., eps)|^2>_T against n |E^M|",
    "theta-check": "theta-sum mean square against R(N)/N^(n/2)",
}


def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(
        add_help=False, argument_default=argparse.SUPPRESS
    )
    common.add_argument("--config", type=Path, help="key=value config file")
    common.add_argument("--out", help="output directory")
    common.add_argument("--cache", help="cache directory")
    common.add_argument("--workers", help="worker threads")
    common.add_argument(
        "--log-level",
        dest="log_level",
        choices=LOG_LEVELS,
        help="logging level (default WARNING)",
    )
    return common


def _form_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--matrix", help=_FORM_HELP)
    p.add_argument("--alpha", help=_ALPHA_HELP)


def _averaging_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--T", help="averaging scales, comma separated")
    p.add_argument("--kernel", help="averaging kernel bump:c0,c1")
    p.add_argument("--rmax", help="enumeration radius (derived if unset)")


def _spectral_options(p: argparse.ArgumentParser) -> None:
    p.add_argument("--K", help="smoothing parameters, comma separated")
    p.add_argument("--zeta", help="truncation exponent in (0, 2]")


def _guard_option(p: argparse.ArgumentParser) -> None:
    p.add_argument(
        "--assume-property-1",
        dest="assume_property_1",
        action="store_const",
        const=True,
        help="allow non-diagonal forms, where the limit is not established",
    )


def build_parser() -> argparse.ArgumentParser:
    """
    Parser with one subparser per command. Options default to "absent" so
    that only the flags actually given override the config file.

    :return: Parser.
    :rtype: argparse.ArgumentParser
    """
    common = _common_options()
    parser = argparse.ArgumentParser(
        prog="ellipsum",
        description="Lattice-point statistics of ellipsoids with "
        "diophantine centers.",
        allow_abbrev=False,
    )
    parser.add_argument(
        "--version", action="version", version=f"%(prog)s {get_version()}"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name: str) -> argparse.ArgumentParser:
        return sub.add_parser(
            name,
            parents=[common],
            help=_HELP[name],
            epilog=f"Outputs: {_SCHEMAS[name]}",
            argument_default=argparse.SUPPRESS,
            allow_abbrev=False,
        )

    p = add("dio")
    p.add_argument("--alpha", help=_ALPHA_HELP)
    p.add_argument("--qmax", help="largest denominator scanned")
    p.add_argument(
        "--coeff-bound",
        dest="coeff_bound",
        help="also search integer relations with |c| <= bound",
    )

    p = add("repsums")
    _form_options(p)
    p.add_argument("--pmax", help="last shell")

    p = add("meansq")
    _form_options(p)
    p.add_argument("--pmax", help="last shell")
    p.add_argument("--checkpoints", help="values of N, comma separated")
    _guard_option(p)

    p = add("count")
    _form_options(p)
    p.add_argument("--t", help="radii, comma separated")
    p.add_argument("--eps", help="shell width for S(t, eps)")
    p.add_argument("--rmax", help="enumeration radius (derived if unset)")

    p = add("fdev")
    _form_options(p)
    _averaging_options(p)
    _spectral_options(p)

    p = add("variance")
    _form_options(p)
    _averaging_options(p)
    _spectral_options(p)
    p.add_argument("--P", help="truncation of the variance series")
    _guard_option(p)

    p = add("shell")
    _form_options(p)
    _averaging_options(p)
    _spectral_options(p)
    p.add_argument("--gamma", help="eps = T^-gamma, gamma in (0, 1)")
    p.add_argument("--eps", help="explicit shell width")
    _guard_option(p)

    p = add("theta-check")
    p.add_argument("--a", help="diagonal weights, comma separated")
    p.add_argument("--alpha", help=_ALPHA_HELP)
    p.add_argument("--v", help="decreasing imaginary parts")
    p.add_argument("--sharpness", help="sharpness of the radial cutoff")

    cache = sub.add_parser(
        "cache",
        help="inspect or clear the cache directory",
        argument_default=argparse.SUPPRESS,
    )
    cache.add_argument("action", choices=("inspect", "clear"))
    cache.add_argument("--cache", help="cache directory")
    cache.add_argument("--log-level", dest="log_level", choices=LOG_LEVELS)
    return parser


def _cache_command(values: Dict[str, Any]) -> int:
    cfg = RunConfig.from_dict({"cache": values.get("cache")})
    store = CacheStore(cfg.cache_dir())
    if values["action"] == "inspect":
        entries: List[dict] = [e.to_dict() for e in store.inspect()]
        sys.stdout.write(json_text(entries))
    else:
        removed = store.clear()
        sys.stdout.write(json_text({"removed": removed}))
    return 0


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the command line.

    :param argv: Arguments without the program name; sys.argv by default.
    :type argv: Optional[Sequence[str]]
    :return: Exit status.
    :rtype: int
    """
    args = build_parser().parse_args(argv)
    values: Dict[str, Any] = vars(args)
    configure_logging(getattr(logging, values.pop("log_level", "WARNING")))
    command = values.pop("command")
    if command == "cache":
        return _cache_command(values)
    config_path = values.pop("config", None)
    try:
        cfg = load_config(config_path, {**values, "command": command})
        outcome = run(cfg, get_version())
    except EllipsumError as exc:
        logger.error(f"{type(exc).__name__}: {exc}")
        return exc.exit_code
    if outcome.summary is not None:
        sys.stdout.write(json_text(outcome.summary))
    return outcome.exit_code


if __name__ == "__main__":
    sys.exit(main())
