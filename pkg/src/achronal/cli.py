"""Command-line entry point: `achronal <subcommand> --config FILE --out DIR`."""
from __future__ import annotations

import argparse
import logging
import os
import sys
from typing import Callable

from . import experiments as ex
from .config import Config, ConfigError, build_fft, build_grid, build_kernel, build_state, load_config
from .report import write_report

log = logging.getLogger("achronal")

EXIT_OK, EXIT_USAGE, EXIT_VERDICT = 0, 1, 2


def _current(cfg: Config, seed: int) -> ex.ExperimentReport:
    s = cfg.section("current-eval")
    return ex.run_current_eval(build_state(cfg), build_kernel(cfg), s["events"], s["n"], s["h"], s["margin_tol"])


def _flux(cfg: Config, seed: int) -> ex.ExperimentReport:
    return ex.run_flux_regions(build_state(cfg), build_kernel(cfg), cfg.region_list("flux"), build_grid(cfg))


def _normalize(cfg: Config, seed: int) -> ex.ExperimentReport:
    s = cfg.section("normalize-check")
    tol = {"epsilon": s["tol_epsilon"], "chi": s["tol_chi"], "boosted": s["tol_boosted"]}
    return ex.run_normalization(
        build_state(cfg), build_kernel(cfg), build_grid(cfg), tol, s["boost_rho"], s["window"],
        build_fft(cfg) if s["fft"] else None, cfg.section("fft")["anchors"], seed,
    )


def _boost(cfg: Config, seed: int) -> ex.ExperimentReport:
    s = cfg.section("boost-limit")
    return ex.run_boost_limit(build_state(cfg), build_kernel(cfg), s["lo"], s["hi"], s["rhos"], build_grid(cfg), s["gap_tol"])


def _mctc(cfg: Config, seed: int) -> ex.ExperimentReport:
    s = cfg.section("mctc-c")
    return ex.run_mctc_c(build_state(cfg), build_kernel(cfg), s["alphas"], build_grid(cfg), s["tol"], s["sum_tol"])


def _aet(cfg: Config, seed: int) -> ex.ExperimentReport:
    s = cfg.section("aet")
    if not s["alpha"] < s["beta"]:
        raise ConfigError("[aet] requires alpha < beta")
    return ex.run_aet(build_state(cfg), build_kernel(cfg), s["alpha"], s["beta"], build_grid(cfg), s["tol"])


def _contraction(cfg: Config, seed: int) -> ex.ExperimentReport:
    s = cfg.section("contraction")
    return ex.run_contraction(
        build_state(cfg), build_kernel(cfg), s["delta"], s["e"], s["rhos"], build_grid(cfg),
        s["threshold"], s["comoving_tol"], s["oracle_margin"],
    )


def _chi(cfg: Config, seed: int) -> ex.ExperimentReport:
    s = cfg.section("chi-compare")
    return ex.run_chi_compare(
        build_state(cfg), build_kernel(cfg), cfg.region_list("chi-compare"), build_grid(cfg),
        build_fft(cfg), cfg.section("fft")["anchors"], seed, s["tol"],
    )


COMMANDS: dict[str, Callable[[Config, int], ex.ExperimentReport]] = {
    "current-eval": _current,
    "flux": _flux,
    "normalize-check": _normalize,
    "boost-limit": _boost,
    "mctc-c": _mctc,
    "aet": _aet,
    "contraction": _contraction,
    "chi-compare": _chi,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="achronal", description="Localization experiments for the massive scalar boson.")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--out", default="results", help="output directory (default: results)")
    p.add_argument("--seed", type=int, default=None, help="anchor placement seed; overrides [fft] seed")
    p.add_argument("--plot", action="store_true", help="also write an SVG line plot when the experiment has a series")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def _apply_thread_cap() -> None:
    cap = os.environ.get("ACHRONAL_NUM_THREADS")
    if cap:
        import numba

        numba.set_num_threads(max(1, min(int(cap), numba.config.NUMBA_NUM_THREADS)))


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        _apply_thread_cap()
        cfg = load_config(args.config)
        seed = cfg.section("fft")["seed"] if args.seed is None else args.seed
        report = COMMANDS[args.command](cfg, seed)
    except (ConfigError, ValueError) as exc:
        print(f"achronal: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    paths = write_report(report, args.out)
    if args.plot and report.plot is not None:
        from .plotting import plot_report

        paths["svg"] = plot_report(report, paths["csv"].with_suffix(".svg"))
    for v in report.verdicts:
        print(f"{'PASS' if v.passed else 'FAIL'}  {v.name}: measured {v.measured:.6g}, tolerance {v.tolerance:.6g}")
    for kind, path in paths.items():
        log.info("wrote %s %s", kind, path)
    return EXIT_OK if report.passed else EXIT_VERDICT


if __name__ == "__main__":
    sys.exit(main())
