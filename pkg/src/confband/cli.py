"""Command line entry point: band, coverage, limits and lemma1 subcommands."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional, Sequence

from confband.band import BandConstructionError
from confband.densities import DensityError
from confband.experiments import (
    ConfigError,
    DataError,
    ExperimentConfig,
    band_once,
    lemma1_report,
    read_observations,
    run_coverage,
    run_limits,
    write_csv,
    write_json,
)
from confband.plotting import plot_band, plot_coverage, plot_limits, plot_variance
from confband.rng import rep_generator


class CliError(Exception):
    """Carries a machine-readable error and the exit status."""

    def __init__(self, kind: str, message: str, status: int = 2, **extra) -> None:
        super().__init__(message)
        self.payload = {"error": kind, "message": message, **extra}
        self.status = status


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:  # argparse would print usage text and exit 2
        raise CliError("usage", message)


def _out_dir(path: str) -> Path:
    out = Path(path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise CliError("io", f"cannot create output directory {path!r}: {exc.strerror}") from None
    return out


def cmd_band(args: argparse.Namespace) -> None:
    cfg = ExperimentConfig.load(args.config)
    data = read_observations(args.data)
    band, grid = band_once(cfg, data, rep_generator(cfg.seed, 0))
    out = _out_dir(args.out)
    write_csv(out / "band.csv", ["y", "center", "lower", "upper"], zip(band.grid, band.center, band.lower, band.upper))
    meta = band.metadata()
    meta.update({"seed": cfg.seed, "n": int(len(data)), "j_min": grid.j_min, "j_max": grid.j_max, "config": cfg.to_dict()})
    write_json(out / "band.json", meta)
    plot_band(band, out / "band.png")


def cmd_coverage(args: argparse.Namespace) -> None:
    cfg = ExperimentConfig.load(args.config)
    report = run_coverage(cfg)
    out = _out_dir(args.out)
    summary = report.summary()
    write_json(out / "coverage.json", summary)
    write_csv(
        out / "coverage_reps.csv",
        ["rep", "status", "j_hat", "sup_halfwidth", "error"],
        ((o.rep, o.status, "" if o.j_hat is None else o.j_hat, o.sup_halfwidth, o.error) for o in report.outcomes),
    )
    plot_coverage(report.j_hat_histogram(), report.sup_halfwidths(), report.coverage, out / "coverage.png")


def cmd_limits(args: argparse.Namespace) -> None:
    report = run_limits(args.family, args.j, args.reps, args.seed, args.variant, args.method)
    out = _out_dir(args.out)
    write_csv(out / "limits.csv", ["normalized_sup"], ([float(v)] for v in report.draws))
    write_json(out / "limits.json", report.as_dict())
    plot_limits(report, out / "limits.png")


def cmd_lemma1(args: argparse.Namespace) -> None:
    info, t, closed, direct = lemma1_report(args.r)
    out = _out_dir(args.out)
    write_json(out / "lemma1.json", info)
    write_csv(out / "lemma1.csv", ["t", "sigma_sq_closed", "sigma_sq_direct"], zip(t, closed, direct))
    plot_variance(t, closed, direct, args.r, out / "lemma1.png")
    print(json.dumps(info, indent=2, sort_keys=True))


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="confband", description="Adaptive Gumbel-calibrated confidence bands for densities.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress and warnings to stderr")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    b = sub.add_parser("band", help="confidence band for an observed sample")
    b.add_argument("--config", required=True)
    b.add_argument("--data", required=True)
    b.add_argument("--out", required=True)
    b.set_defaults(func=cmd_band)

    c = sub.add_parser("coverage", help="Monte Carlo coverage study")
    c.add_argument("--config", required=True)
    c.add_argument("--out", required=True)
    c.set_defaults(func=cmd_coverage)

    lim = sub.add_parser("limits", help="Gumbel limit check for the sup of the limit process")
    lim.add_argument("--family", required=True)
    lim.add_argument("--j", type=int, required=True)
    lim.add_argument("--reps", type=int, required=True)
    lim.add_argument("--seed", type=int, required=True)
    lim.add_argument("--out", required=True)
    lim.add_argument("--variant", default="printed", choices=("printed", "consistent"))
    lim.add_argument("--method", default="exact", choices=("exact", "grid"))
    lim.set_defaults(func=cmd_limits)

    lem = sub.add_parser("lemma1", help="variance profile of a spline scaling function")
    lem.add_argument("--r", type=int, required=True)
    lem.add_argument("--out", required=True)
    lem.set_defaults(func=cmd_lemma1)
    return p


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        logging.basicConfig(level=logging.INFO if args.verbose else logging.ERROR, format="%(levelname)s %(name)s: %(message)s")
        args.func(args)
    except CliError as exc:
        print(json.dumps(exc.payload, sort_keys=True), file=sys.stderr)
        return exc.status
    except DataError as exc:
        payload = {"error": "data", "message": str(exc)}
        if exc.line is not None:
            payload["line"] = exc.line
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
        return 3
    except (ConfigError, DensityError) as exc:
        print(json.dumps({"error": "config", "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 4
    except BandConstructionError as exc:
        print(json.dumps({"error": "band", "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 5
    except (ValueError, TypeError) as exc:
        print(json.dumps({"error": "invalid", "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 6
    except OSError as exc:
        print(json.dumps({"error": "io", "message": str(exc)}, sort_keys=True), file=sys.stderr)
        return 7
    return 0


if __name__ == "__main__":
    sys.exit(main())
