"""Experiment configuration, data ingestion and the coverage, band, limits and variance runs."""

from __future__ import annotations

import csv
import json
import math
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np
from numpy.typing import NDArray

from confband.band import (
    EPS_FLOOR,
    M_PRIME_DEFAULT,
    BandConstructionError,
    BandResult,
    LepskiConfig,
    check_coverage,
    construct_band,
)
from confband.constants import lemma1_summary, sigma_sq
from confband.densities import DensityError, DensitySpec, density_from_config
from confband.estimator import ResolutionGrid, SampleSplit, resolution_grid, split_sample, undersmooth_level
from confband.gaussian_sim import LimitTestReport, gumbel_ks_test
from confband.rng import check_seed, rep_generator
from confband.splines import KernelSpec

MIN_OBSERVATIONS = 100
DATA_HEADER = "x"
KERNEL_NAMES = ("haar", "bl2", "bl3", "bl4", "biweight", "triweight")


class ConfigError(ValueError):
    """Invalid or incomplete experiment configuration."""


class DataError(ValueError):
    """Unreadable observation file; ``line`` is 1-based when known."""

    def __init__(self, message: str, line: Optional[int] = None) -> None:
        super().__init__(message)
        self.line = line


@dataclass(frozen=True)
class ExperimentConfig:
    """One JSON document describing a run. Every default is echoed into the output metadata."""

    seed: int
    kernel: str = "bl2"
    n: Optional[int] = None
    alpha: float = 0.10
    density: dict = field(default_factory=lambda: {"kind": "normal"})
    reps: int = 1
    interval: tuple[float, float] = (0.0, 1.0)
    M_prime: float = M_PRIME_DEFAULT
    c_min: float = 1.0
    c_max: float = 1.0
    eps_floor: float = EPS_FLOOR

    def __post_init__(self) -> None:
        try:
            check_seed(self.seed)
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from None
        if self.kernel not in KERNEL_NAMES:
            raise ConfigError(f"kernel must be one of {list(KERNEL_NAMES)}, got {self.kernel!r}")
        if self.n is not None and (not isinstance(self.n, int) or self.n < MIN_OBSERVATIONS):
            raise ConfigError(f"n must be an integer >= {MIN_OBSERVATIONS}, got {self.n!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not isinstance(self.reps, int) or self.reps < 1:
            raise ConfigError(f"reps must be a positive integer, got {self.reps!r}")
        a, b = self.interval
        if not (math.isfinite(a) and math.isfinite(b) and a < b):
            raise ConfigError(f"interval must be finite with a < b, got {list(self.interval)}")
        for name in ("M_prime", "c_min", "c_max", "eps_floor"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ConfigError(f"{name} must be a positive number, got {v!r}")

    @classmethod
    def from_dict(cls, raw: dict[str, Any]) -> "ExperimentConfig":
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        known = set(cls.__dataclass_fields__)
        unknown = sorted(set(raw) - known)
        if unknown:
            raise ConfigError(f"unknown config fields: {unknown}")
        if "seed" not in raw:
            raise ConfigError("config field 'seed' is mandatory")
        args = dict(raw)
        if "interval" in args:
            iv = args["interval"]
            if not (isinstance(iv, (list, tuple)) and len(iv) == 2):
                raise ConfigError(f"interval must be a two-element list, got {iv!r}")
            args["interval"] = (float(iv[0]), float(iv[1]))
        return cls(**args)

    @classmethod
    def load(cls, path: str | Path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {str(path)!r}: {exc.strerror}") from None
        try:
            raw = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config {str(path)!r} is not valid JSON: {exc.msg} at line {exc.lineno}") from None
        return cls.from_dict(raw)

    def to_dict(self) -> dict[str, Any]:
        out = asdict(self)
        out["interval"] = list(self.interval)
        return out

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec.from_name(self.kernel)

    def lepski(self) -> LepskiConfig:
        return LepskiConfig(M_prime=float(self.M_prime))

    def density_spec(self, n: int) -> DensitySpec:
        """Density with its class checked against the band interval."""
        grid = resolution_grid(n - n // 2, self.kernel_spec().r, self.c_min, self.c_max)
        try:
            dens = density_from_config(self.density, L_max=grid.j_max + undersmooth_level(n) + 2)
            dens.validate()
        except DensityError as exc:
            raise ConfigError(f"density: {exc}") from None
        a, b = self.interval
        if not dens.F[0] < a < b < dens.F[1]:
            raise ConfigError(f"density class interval F = {list(dens.F)} must strictly contain the band interval {[a, b]}")
        return dens


def read_observations(path: str | Path) -> NDArray[np.float64]:
    """Newline-delimited reals, or a single-column CSV whose optional first line is the header ``x``."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise DataError(f"cannot read data file {str(path)!r}: {exc.strerror}") from None
    except UnicodeDecodeError:
        raise DataError(f"data file {str(path)!r} is not text") from None
    values = []
    for lineno, raw in enumerate(lines, start=1):
        text = raw.strip()
        if not text:
            continue
        if lineno == 1 and text.strip('"').lower() == DATA_HEADER:
            continue
        if "," in text:
            raise DataError(f"line {lineno}: expected a single column, got {text!r}", lineno)
        try:
            v = float(text)
        except ValueError:
            raise DataError(f"line {lineno}: not a real number: {text!r}", lineno) from None
        if not math.isfinite(v):
            raise DataError(f"line {lineno}: non-finite value {text!r}", lineno)
        values.append(v)
    if len(values) < MIN_OBSERVATIONS:
        raise DataError(f"need at least {MIN_OBSERVATIONS} observations, got {len(values)}")
    return np.asarray(values)


def band_once(
    cfg: ExperimentConfig, data: NDArray[np.float64], rng: np.random.Generator
) -> tuple[BandResult, ResolutionGrid]:
    spec = cfg.kernel_spec()
    split = split_sample(data, rng)
    grid = resolution_grid(split.n2, spec.r, cfg.c_min, cfg.c_max)
    band = construct_band(spec, split, grid, cfg.lepski(), cfg.alpha, cfg.interval, cfg.eps_floor)
    return band, grid


@dataclass
class RepOutcome:
    rep: int
    status: str  # covered | missed | error
    j_hat: Optional[int] = None
    sup_halfwidth: float = float("nan")
    error: str = ""


@dataclass
class CoverageReport:
    config: dict
    grid: ResolutionGrid
    u_n: int
    outcomes: list[RepOutcome]
    runtime_s: float = 0.0

    @property
    def n_covered(self) -> int:
        return sum(o.status == "covered" for o in self.outcomes)

    @property
    def n_missed(self) -> int:
        return sum(o.status == "missed" for o in self.outcomes)

    @property
    def n_errors(self) -> int:
        return sum(o.status == "error" for o in self.outcomes)

    @property
    def coverage(self) -> float:
        """Covered fraction among reps that produced a band; errored reps are excluded."""
        valid = self.n_covered + self.n_missed
        return self.n_covered / valid if valid else float("nan")

    def sup_halfwidths(self) -> NDArray[np.float64]:
        return np.array([o.sup_halfwidth for o in self.outcomes if o.status != "error"])

    def j_hat_histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(o.j_hat for o in self.outcomes if o.j_hat is not None).items()))

    def summary(self) -> dict:
        hw = self.sup_halfwidths()
        return {
            "coverage": self.coverage,
            "covered": self.n_covered,
            "missed": self.n_missed,
            "errors": self.n_errors,
            "reps": len(self.outcomes),
            "mean_sup_halfwidth": float(np.mean(hw)) if hw.size else None,
            "median_sup_halfwidth": float(np.median(hw)) if hw.size else None,
            "max_sup_halfwidth": float(np.max(hw)) if hw.size else None,
            "j_hat_histogram": {str(k): v for k, v in self.j_hat_histogram().items()},
            "j_min": self.grid.j_min,
            "j_max": self.grid.j_max,
            "u_n": self.u_n,
            "seed": self.config["seed"],
            "rep_streams": "philox key = (rep << 64) | seed, rep = 0 .. reps - 1",
            "config": self.config,
        }


def run_rep(cfg: ExperimentConfig, dens: DensitySpec, rep: int) -> RepOutcome:
    """One independent repetition, drawn from its own stream (seed, rep)."""
    rng = rep_generator(cfg.seed, rep)
    data = dens.sample(cfg.n, rng)
    try:
        band, _ = band_once(cfg, data, rng)
    except BandConstructionError as exc:
        return RepOutcome(rep, "error", error=str(exc))
    covered = check_coverage(band, dens)
    return RepOutcome(rep, "covered" if covered else "missed", band.j_hat, float(np.max(band.halfwidth)))


def run_coverage(cfg: ExperimentConfig, reps: Optional[range] = None) -> CoverageReport:
    if cfg.n is None:
        raise ConfigError("coverage runs need n")
    started = time.perf_counter()
    dens = cfg.density_spec(cfg.n)
    if dens.pdf is None:
        raise ConfigError("coverage runs need a density with an exact evaluator")
    grid = resolution_grid(cfg.n - cfg.n // 2, cfg.kernel_spec().r, cfg.c_min, cfg.c_max)
    indices = range(cfg.reps) if reps is None else reps
    outcomes = sorted((run_rep(cfg, dens, i) for i in indices), key=lambda o: o.rep)
    return CoverageReport(cfg.to_dict(), grid, undersmooth_level(cfg.n), outcomes, time.perf_counter() - started)


def lemma1_report(r: int, points: int = 1000) -> tuple[dict, NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Variance summary plus sigma^2 on a period grid, closed form and direct sum."""
    if r not in (2, 3, 4):
        raise ConfigError(f"r must be 2, 3 or 4, got {r}")
    spec = KernelSpec.battle_lemarie(r)
    prof = lemma1_summary(r, spec.coeffs)
    t = np.arange(points) / points
    closed = sigma_sq(spec, t, "closed")
    direct = sigma_sq(spec, t, "direct")
    info = prof.as_dict()
    info["max_abs_closed_minus_direct"] = float(np.max(np.abs(closed - direct)))
    info["grid_argmax"] = float(t[np.argmax(direct)])
    info["grid_points"] = points
    return info, t, closed, direct


def run_limits(
    family: str, j: int, reps: int, seed: int, variant: str = "printed", method: str = "exact"
) -> LimitTestReport:
    if family not in KERNEL_NAMES:
        raise ConfigError(f"family must be one of {list(KERNEL_NAMES)}, got {family!r}")
    if j < 2:
        raise ConfigError(f"j must be >= 2, got {j}")
    if reps < 1:
        raise ConfigError(f"reps must be >= 1, got {reps}")
    if variant not in ("printed", "consistent"):
        raise ConfigError(f"variant must be 'printed' or 'consistent', got {variant!r}")
    if method not in ("exact", "grid"):
        raise ConfigError(f"method must be 'exact' or 'grid', got {method!r}")
    check_seed(seed)
    return gumbel_ks_test(KernelSpec.from_name(family), j, reps, seed, variant=variant, method=method)


# output writers: fixed float formatting and key order so reruns are byte-identical


def fmt(x: float) -> str:
    return repr(float(x))


def write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=True) + "\n")


def write_csv(path: Path, header: list[str], rows) -> None:
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) if isinstance(v, (float, np.floating)) else v for v in row])
