"""``rmtfof`` command line.

Subcommands: spectrum, bootstrap, analyze, clean, frontier, experiment,
simulate. Exit status 0 on success, 2 on input errors, 3 on numerical
failures; errors are a single ``error: <kind>: <message>`` line on stderr.
"""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from ._backend import BACKEND
from .cleaning import clean
from .eig_analysis import ipr_spectrum, strategy_contribution
from .errors import InputError, NumericalError
from .market_mode import analyze_market
from .montecarlo import experiment_sweep
from .panel import load_returns, load_strategies, normalize, write_returns, write_strategies
from .portfolio import bootstrap_spectra, covariance, frontier, split_experiment
from .reporting import (
    FRONTIER_HEADER,
    frontier_rows,
    weights_json,
    write_csv,
    write_json,
    write_matrix,
)
from .spectral import correlation, density_table, mp_bounds, spectrum_report
from .synthetic import factor_panel, iid_panel, planted_spec, taxonomy_spec

log = logging.getLogger("rmtfof")


def _common(p: argparse.ArgumentParser, needs_input: bool = True) -> None:
    p.add_argument("--input", required=needs_input, help="returns CSV (period,<fund ids...>)")
    p.add_argument("--strategies", help="strategy CSV (fund_id,strategy)")
    p.add_argument("--out", default=".", help="output directory (created if missing)")
    p.add_argument("--grid-size", type=int, default=50)
    p.add_argument("--split", type=int, default=None, help="length of the first sub-period (default ceil(T/2))")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--num-seeds", type=int, default=100)
    p.add_argument("--bin-width", type=float, default=None)
    p.add_argument("--no-renormalize", action="store_true", help="skip unit-diagonal rescaling after cleaning")
    p.add_argument("--no-clean", action="store_true")
    p.add_argument("--keep-market", action="store_true", help="analyze the raw matrix instead of market residuals")
    p.add_argument("--threads", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rmtfof", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__} ({BACKEND})")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")
    sub.required = True

    _common(sub.add_parser("spectrum", help="correlation spectrum against the noise band"))
    _common(sub.add_parser("bootstrap", help="spectra of the two halves of the sample"))
    _common(sub.add_parser("analyze", help="market-mode removal, strategy contributions, IPR"))
    _common(sub.add_parser("clean", help="eigenvalue-flattened correlation matrix"))
    p = sub.add_parser("frontier", help="efficient frontier of one matrix (long-only by default)")
    _common(p)
    p.add_argument("--allow-short", action="store_true", help="drop the no-short-selling constraint")
    p = sub.add_parser("experiment", help="split-sample predicted vs realized risk")
    _common(p, needs_input=False)
    p = sub.add_parser("simulate", help="write a synthetic panel")
    _common(p, needs_input=False)
    p.add_argument("--kind", choices=("iid", "planted", "taxonomy"), default="taxonomy")
    p.add_argument("--n-funds", type=int, default=49)
    p.add_argument("--n-periods", type=int, default=105)
    p.add_argument("--loading", type=float, default=0.4, help="loaded-group beta for --kind planted")
    p.add_argument("--idio-scale", type=float, default=1.0)
    return parser


def _out(args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _density_csv(path, eigenvalues, bounds, bin_width):
    write_csv(path, ["lambda", "empirical_density", "mp_density"],
              density_table(eigenvalues, bounds, bin_width))


def cmd_spectrum(args) -> None:
    panel = load_returns(args.input)
    rep = spectrum_report(panel)
    out = _out(args)
    write_json(out / "spectrum.json", rep.to_json())
    _density_csv(out / "spectrum_density.csv", rep.decomposition.eigenvalues, rep.bounds, args.bin_width)


def cmd_bootstrap(args) -> None:
    panel = load_returns(args.input)
    first, second = bootstrap_spectra(panel, args.split)
    out = _out(args)
    write_json(out / "bootstrap.json", {"first": first.to_json(), "second": second.to_json()})
    for name, rep in (("first", first), ("second", second)):
        _density_csv(out / f"bootstrap_density_{name}.csv", rep.decomposition.eigenvalues,
                     rep.bounds, args.bin_width)


def cmd_analyze(args) -> None:
    panel = load_returns(args.input)
    smap = load_strategies(args.strategies, panel) if args.strategies else None
    out = _out(args)
    market = analyze_market(panel)
    write_json(out / "market.json", market.to_json())
    if args.keep_market:
        decomp = market.raw_decomposition
        deviating = list(spectrum_report(panel).deviations.deviating_above)
    else:
        decomp = market.residual_decomposition
        deviating = list(market.deviations.deviating_above)

    write_csv(out / "ipr.csv", ["rank", "lambda", "ipr"], ipr_spectrum(decomp).rows())
    # raw eigenvector components of the deviating modes, binned by the plot layer
    header = ["fund_id", "strategy", *(f"u{k + 1}" for k in deviating)]
    rows = []
    for i, fid in enumerate(panel.fund_ids):
        strategy = smap.assignments[fid] if smap else ""
        rows.append([fid, strategy, *(float(decomp.eigenvectors[i, k]) for k in deviating)])
    write_csv(out / "components.csv", header, rows)
    if smap is None:
        log.info("no --strategies given; skipping strategy contributions")
        return
    for k in deviating:
        contrib = strategy_contribution(decomp.eigenvectors[:, k], smap, k)
        write_csv(out / f"contributions_rank{k + 1}.csv", ["strategy", "n_l", "X", "share"], contrib.rows())


def cmd_clean(args) -> None:
    panel = load_returns(args.input)
    c = correlation(normalize(panel))
    cm = clean(c, mp_bounds(panel.q, 1.0), renormalize=not args.no_renormalize)
    out = _out(args)
    write_matrix(out / "cleaned_correlation.csv", c.labels, cm.values)
    write_json(out / "cleaned.json", cm.to_json())


def cmd_frontier(args) -> None:
    panel = load_returns(args.input)
    norm = normalize(panel)
    c = correlation(norm)
    values = c.values
    if not args.no_clean:
        values = clean(c, mp_bounds(panel.q, 1.0), renormalize=not args.no_renormalize).values
    pts = frontier(covariance(values, norm.sigmas), norm.means, args.grid_size,
                   long_only=not args.allow_short, threads=args.threads)
    write_csv(_out(args) / "frontier.csv", FRONTIER_HEADER, frontier_rows(pts))


def cmd_experiment(args) -> None:
    out = _out(args)
    if args.input is None:
        if args.num_seeds < 1:
            raise InputError("--num-seeds must be >= 1")
        seeds = range(args.seed, args.seed + args.num_seeds)
        summary = experiment_sweep(seeds, args.grid_size, not args.no_renormalize, args.threads)
        write_json(out / "experiment_sweep.json", {k: v for k, v in summary.items() if k != "seeds"})
        cols = ["seed", "rp_raw_mean", "rp_cleaned_mean", "rp_cleaned_alt_mean", "n_kept"]
        write_csv(out / "experiment_seeds.csv", cols, ([r[c] for c in cols] for r in summary["seeds"]))
        return
    panel = load_returns(args.input)
    rep = split_experiment(panel, not args.no_clean, args.grid_size, not args.no_renormalize,
                           args.split, args.threads)
    write_json(out / "experiment.json", rep.to_json())
    write_csv(out / "frontier_raw.csv", FRONTIER_HEADER,
              frontier_rows(rep.raw.points, rep.raw.realized_risk))
    if rep.cleaned is not None:
        write_csv(out / "frontier_cleaned.csv", FRONTIER_HEADER,
                  frontier_rows(rep.cleaned.points, rep.cleaned.realized_risk))
    write_csv(out / "frontier_realized.csv", FRONTIER_HEADER,
              ((p.target_return, None, p.risk, weights_json(p.weights.weights))
               for p in rep.realized_frontier))


def cmd_simulate(args) -> None:
    out = _out(args)
    if args.kind == "iid":
        write_returns(iid_panel(args.n_funds, args.n_periods, args.seed), str(out / "returns.csv"))
        return
    if args.kind == "planted":
        spec = planted_spec(args.seed, args.loading, args.idio_scale, args.n_periods)
    else:
        spec = taxonomy_spec(args.seed, args.n_periods, args.idio_scale)
    panel, smap = factor_panel(spec)
    write_returns(panel, str(out / "returns.csv"))
    write_strategies(smap, str(out / "strategies.csv"))


COMMANDS = {
    "spectrum": cmd_spectrum,
    "bootstrap": cmd_bootstrap,
    "analyze": cmd_analyze,
    "clean": cmd_clean,
    "frontier": cmd_frontier,
    "experiment": cmd_experiment,
    "simulate": cmd_simulate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.grid_size < 2:
        parser.error("--grid-size must be >= 2")
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        COMMANDS[args.command](args)
    except (InputError, OSError) as exc:
        print(f"error: input: {_one_line(exc)}", file=sys.stderr)
        return 2
    except (NumericalError, np.linalg.LinAlgError) as exc:
        print(f"error: numerical: {_one_line(exc)}", file=sys.stderr)
        return 3
    return 0


def _one_line(exc: BaseException) -> str:
    return " ".join(str(exc).split()) or type(exc).__name__


if __name__ == "__main__":
    sys.exit(main())
