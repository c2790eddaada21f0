"""PNG figures for the CLI reports, rendered off-screen with reproducible bytes."""

from __future__ import annotations

from pathlib import Path
from typing import Optional

import numpy as np
from matplotlib.backends.backend_agg import FigureCanvasAgg
from matplotlib.figure import Figure
from numpy.typing import NDArray

from confband.band import BandResult
from confband.gaussian_sim import LimitTestReport

# no Software/date chunks, so identical figures give identical files
PNG_METADATA = {"Software": None}
DPI = 100


def _figure(width: float = 7.0, height: float = 4.0) -> Figure:
    fig = Figure(figsize=(width, height), dpi=DPI)
    FigureCanvasAgg(fig)
    return fig


def _save(fig: Figure, path: Path) -> None:
    fig.tight_layout()
    fig.savefig(path, format="png", dpi=DPI, metadata=PNG_METADATA)


def plot_band(band: BandResult, path: Path, truth: Optional[NDArray[np.float64]] = None) -> None:
    fig = _figure()
    ax = fig.add_subplot()
    ax.fill_between(band.grid, band.lower, band.upper, color="tab:blue", alpha=0.25, linewidth=0, label="band")
    ax.plot(band.grid, band.center, color="tab:blue", linewidth=1.0, label=f"center, level {band.level}")
    if truth is not None:
        ax.plot(band.grid, truth, color="black", linewidth=1.0, linestyle="--", label="true density")
    ax.set_xlabel("y")
    ax.set_ylabel("density")
    ax.set_title(f"{band.constants.family}: {100 * (1 - band.alpha):.0f}% band, j_hat = {band.j_hat}, u_n = {band.u_n}")
    ax.legend(loc="best", fontsize="small")
    _save(fig, path)


def plot_limits(report: LimitTestReport, path: Path) -> None:
    fig = _figure()
    ax = fig.add_subplot()
    draws = report.draws
    lo, hi = min(-3.0, float(draws.min())), max(8.0, float(draws.max()))
    ax.hist(draws, bins=80, range=(lo, hi), density=True, color="tab:gray", alpha=0.6, label="A(j)(sup - B(j))")
    x = np.linspace(lo, hi, 600)
    ax.plot(x, np.exp(-x - np.exp(-x)), color="tab:red", linewidth=1.2, label="Gumbel density")
    ax.set_xlabel("normalized sup")
    ax.set_title(f"{report.family}, j = {report.j}, {report.reps} reps, KS = {report.ks_stat:.4f}")
    ax.legend(loc="best", fontsize="small")
    _save(fig, path)


def plot_variance(t: NDArray[np.float64], closed: NDArray[np.float64], direct: NDArray[np.float64], r: int, path: Path) -> None:
    fig = _figure()
    ax = fig.add_subplot()
    ax.plot(t, direct, color="tab:blue", linewidth=1.5, label="direct sum")
    ax.plot(t, closed, color="tab:orange", linewidth=1.0, linestyle="--", label="closed form")
    ax.set_xlabel("t (one period)")
    ax.set_ylabel("sigma^2(t)")
    ax.set_title(f"variance profile, r = {r}")
    ax.legend(loc="best", fontsize="small")
    _save(fig, path)


def plot_coverage(j_hist: dict[int, int], halfwidths: NDArray[np.float64], coverage: float, path: Path) -> None:
    fig = _figure(9.0, 3.8)
    left, right = fig.subplots(1, 2)
    levels = sorted(j_hist)
    left.bar([str(j) for j in levels], [j_hist[j] for j in levels], color="tab:blue")
    left.set_xlabel("selected level j_hat")
    left.set_ylabel("reps")
    if halfwidths.size:
        right.hist(halfwidths, bins=30, color="tab:gray")
    right.set_xlabel("sup halfwidth")
    right.set_title(f"empirical coverage {coverage:.3f}")
    _save(fig, path)
