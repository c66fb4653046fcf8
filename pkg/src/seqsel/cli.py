"""Command-line front end: ``seqsel {analytic,nli-stats,select,air,store-info}``.

Exit codes: 0 success, 2 configuration or input error, 3 selection
starvation, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import csv
import io
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .air import Scenario, run_experiment
from .analytic import DomainError, analytic_curves
from .config import ExperimentConfig, load_config
from .core import ConfigurationError, ShapeError, dbm_to_mw
from .nlistats import (DegenerateError, cdf_rows, cubic_scaling_check, empirical_cdf, gamma_fit_moments,
                       histogram_rows, paired_window_costs, tail_exponent)
from .selection import StarvationError, averaged_select, fast_select
from .store import StoreFormatError, file_checksum, read_store, write_store

__all__ = ["main", "build_parser"]

log = logging.getLogger("seqsel")

EXIT_OK, EXIT_CONFIG, EXIT_STARVATION, EXIT_NUMERIC = 0, 2, 3, 4


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def write_csv(path: Path, cfg: ExperimentConfig, header, rows, extra_comments=()) -> None:
    """CSV with a comment preamble (config hash, seed, version); the body is plain CSV."""
    buf = io.StringIO()
    buf.write(f"# config_sha256={cfg.config_hash}\n")
    buf.write(f"# seed={cfg.seed}\n")
    buf.write(f"# seqsel_version={__version__}\n")
    for line in extra_comments:
        buf.write(f"# {line}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(buf.getvalue())


# -- subcommands ------------------------------------------------------------------

def cmd_analytic(cfg: ExperimentConfig, out: Path, workers: int) -> int:
    a = cfg["analytic"]
    header, rows = analytic_curves(cfg.analytic_grid(), a["a"], a["sigma_w2"], a["n"], a["n_primes"])
    write_csv(out / "analytic.csv", cfg, header, rows)
    return EXIT_OK


def cmd_nli_stats(cfg: ExperimentConfig, out: Path, workers: int) -> int:
    v = cfg["nli"]
    channel = cfg.cost_channel()
    p1 = float(dbm_to_mw(v["power_dbm"])) / cfg.pol_count
    ratio = 10 ** (v["power_step_db"] / 10)
    costs = paired_window_costs(v["burst_length"], v["n"], (p1, p1 * ratio), channel, bursts=v["bursts"],
                                seed=cfg.seed)
    # normalized costs below double round-off of a unit-power signal are zero
    costs = np.where(costs < 1e-24, 0.0, costs)
    dist = empirical_cdf(costs[0])
    write_csv(out / "nli_cdf.csv", cfg, ["cost", "cdf"], cdf_rows(dist))
    write_csv(out / "nli_hist.csv", cfg, ["left", "right", "density"], histogram_rows(costs[0], v["bins"]))
    summary = [("count", dist.count), ("mean_cost", float(np.mean(costs[0])))]
    try:
        fit = gamma_fit_moments(costs[0])
        summary += [("gamma_shape", fit.shape), ("gamma_mean", fit.mean)]
    except (DegenerateError, ValueError) as exc:
        log.warning("gamma fit: %s", exc)
        summary += [("gamma_shape", "degenerate"), ("gamma_mean", "degenerate")]
    try:
        summary.append(("tail_exponent", tail_exponent(dist, (v["tail_lo"], v["tail_hi"]))))
    except ValueError as exc:
        log.warning("tail exponent: %s", exc)
        summary.append(("tail_exponent", "insufficient"))
    try:
        sc = cubic_scaling_check(costs[0] * p1, costs[1] * p1 * ratio, ratio)
        summary += [("median_ratio", sc.median_ratio), ("ratio_iqr", sc.iqr),
                    ("expected_ratio", sc.expected), ("cubic_pass", int(sc.passed))]
    except DegenerateError as exc:
        log.warning("scaling check: %s", exc)
        summary.append(("cubic_pass", "degenerate"))
    summary.append(("n_over_3", v["n"] / 3))
    write_csv(out / "nli_summary.csv", cfg, ["quantity", "value"], summary)
    return EXIT_OK


def cmd_select(cfg: ExperimentConfig, out: Path, workers: int) -> int:
    v = cfg["selection"]
    channel = cfg.cost_channel()
    common = dict(eta_target=v["eta_target"], gamma_lambda=v["gamma_lambda"],
                  target_accepted=v["target_accepted"], seed=cfg.seed, max_bursts=v["max_bursts"])
    power = cfg.selection_power()
    if v["procedure"] == "fast":
        result = fast_select(v["burst_length"], v["n"], power, channel, **common)
    else:
        result = averaged_select(v["burst_length"], v["n"], v["n_guard"], v["n_it"], power, channel, **common)
    if result.n_accepted == 0:
        raise StarvationError("threshold accepted no proposal")
    path = out / "selected.seqs"
    path.parent.mkdir(parents=True, exist_ok=True)
    digest = write_store(path, result.to_store())
    rows = [("n_proposed", result.n_proposed), ("n_accepted", result.n_accepted), ("eta", result.eta),
            ("gamma_lambda", result.gamma_lambda), ("rate_loss", result.rate_loss),
            ("selection_power_mw", power), ("store_sha256", digest)]
    write_csv(out / "select.csv", cfg, ["quantity", "value"], rows)
    return EXIT_OK


def scenario_from_config(cfg: ExperimentConfig) -> Scenario:
    if cfg.scenario == "analytic":
        raise ConfigurationError("the air command needs a transmission scenario, not 'analytic'")
    return Scenario(kind=cfg.scenario, link=cfg.link(), ssfm=cfg.ssfm(), dbp_ssfm=cfg.dbp_ssfm(), wdm=cfg.wdm(),
                    n_symbols=cfg["source"]["n_symbols"], powers_dbm=cfg["sweep"]["powers_dbm"],
                    variants=cfg["sweep"]["variants"], seed=cfg.seed, edge=cfg["source"]["edge"])


AIR_HEADER = ["variant", "power_dBm", "se_bits_s_hz_pol", "gross_air", "rate_loss", "sigma2_opt", "eta", "n",
              "seed", "std_error", "tx_power_dBm", "linear_capacity"]


def cmd_air(cfg: ExperimentConfig, out: Path, workers: int, store_path: str | None = None) -> int:
    scenario = scenario_from_config(cfg)
    store = None
    manifest = "store_sha256=none"
    if store_path is not None:
        store = read_store(store_path)
        manifest = f"store_sha256={file_checksum(store_path)}"
        if store.pol_count != scenario.pol_count:
            raise ConfigurationError(
                f"store has {store.pol_count} polarizations, scenario {scenario.kind} needs {scenario.pol_count}")
    points = run_experiment(scenario, store, workers=workers)
    rows = [(p.variant, p.power_dbm, p.se, p.gross_air, p.rate_loss, p.sigma2, p.eta, p.n, p.seed, p.std_error,
             p.tx_power_dbm, p.linear_capacity) for p in points]
    if any(not math.isfinite(r[2]) for r in rows):
        raise FloatingPointError("non-finite spectral efficiency")
    write_csv(out / "air.csv", cfg, AIR_HEADER, rows, extra_comments=[manifest])
    return EXIT_OK


def cmd_store_info(path: str) -> int:
    store = read_store(path)
    info = {
        "path": path,
        "sha256": file_checksum(path),
        "blocks": len(store.blocks),
        "pol_count": store.pol_count,
        "n": store.n,
        "selection_power_mw": store.selection_power,
        "gamma_lambda": store.gamma_lambda,
        "n_proposed": store.n_proposed,
        "n_accepted": store.n_accepted,
        "eta": store.eta,
        "rate_loss": math.log2(store.n_proposed / store.n_accepted) / store.n,
    }
    for k, v in info.items():
        print(f"{k}={_fmt(v)}")
    return EXIT_OK


# -- entry point --------------------------------------------------------------------

def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def _workers(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError("workers must be >= 1")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="seqsel", description="Sequence-selection experiments for fiber channels.")
    parser.add_argument("--version", action="version", version=f"seqsel {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI configuration file")
    common.add_argument("--seed", type=_seed, help="master seed (overrides experiment.seed)")
    common.add_argument("--out", help="output directory (overrides experiment.out)")
    common.add_argument("--workers", type=_workers, default=1, help="worker processes")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("analytic", parents=[common], help="AIR curves of the block-memoryless model")
    sub.add_parser("nli-stats", parents=[common], help="distribution of the NLI window cost")
    sub.add_parser("select", parents=[common], help="run sequence selection and write a SEQS store")
    air = sub.add_parser("air", parents=[common], help="SE sweep over launch power")
    air.add_argument("--store", help="SEQS store for the selection variants")
    info = sub.add_parser("store-info", help="print the header of a SEQS store")
    info.add_argument("path")
    return parser


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "store-info":
            return cmd_store_info(args.path)
        cfg = load_config(args.config)
        if args.seed is not None:
            cfg = cfg.with_seed(args.seed)
        out = Path(args.out if args.out is not None else cfg["experiment"]["out"])
        handlers = {"analytic": cmd_analytic, "nli-stats": cmd_nli_stats, "select": cmd_select}
        if args.command == "air":
            return cmd_air(cfg, out, args.workers, args.store)
        return handlers[args.command](cfg, out, args.workers)
    except StarvationError as exc:
        log.error("starvation: %s", exc)
        return EXIT_STARVATION
    except (FloatingPointError, DomainError, OverflowError) as exc:
        log.error("numeric failure: %s", exc)
        return EXIT_NUMERIC
    except (ConfigurationError, ShapeError, StoreFormatError, OSError) as exc:
        log.error("configuration error: %s", exc)
        return EXIT_CONFIG


def main(argv=None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
