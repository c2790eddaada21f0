"""Linear wavelet and convolution density estimators f_n(y, j) and their resolution grid."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray

from confband.splines import KernelSpec

log = logging.getLogger(__name__)

MIN_GRID_GAP = 3


@dataclass(frozen=True)
class SampleSplit:
    """Disjoint subsamples: S_1 centres the band, S_2 selects the resolution."""

    s1: NDArray[np.float64]
    s2: NDArray[np.float64]

    def __post_init__(self) -> None:
        if len(self.s1) == 0 or len(self.s2) == 0:
            raise ValueError("both subsamples must be nonempty")
        ratio = len(self.s1) / len(self.s2)
        if not 0.5 <= ratio <= 2.0:
            raise ValueError(f"subsample size ratio n1/n2 = {ratio:.3f} outside [1/2, 2]")

    @property
    def n1(self) -> int:
        return len(self.s1)

    @property
    def n2(self) -> int:
        return len(self.s2)

    @property
    def n(self) -> int:
        return self.n1 + self.n2


def split_sample(data: ArrayLike, rng: np.random.Generator) -> SampleSplit:
    """Shuffle, then interleave: even positions go to S_1, odd to S_2."""
    x = np.asarray(data, dtype=float)
    shuffled = x[rng.permutation(len(x))]
    return SampleSplit(s1=shuffled[0::2], s2=shuffled[1::2])


@dataclass(frozen=True)
class ResolutionGrid:
    j_min: int
    j_max: int

    def __post_init__(self) -> None:
        if not 0 < self.j_min <= self.j_max:
            raise ValueError(f"invalid resolution grid [{self.j_min}, {self.j_max}]")

    @property
    def levels(self) -> list[int]:
        return list(range(self.j_min, self.j_max + 1))

    def __contains__(self, j: int) -> bool:
        return self.j_min <= j <= self.j_max

    def __len__(self) -> int:
        return self.j_max - self.j_min + 1


def resolution_grid(
    n2: int, r: int, c_min: float = 1.0, c_max: float = 1.0, min_gap: int = MIN_GRID_GAP
) -> ResolutionGrid:
    """Grid J = [j_min, j_max] with 2^j_min ~ (n2/log n2)^(1/(2r+1)) and 2^j_max ~ n2/(log n2)^4.

    At desk-scale n2 the upper formula falls below the lower one, so j_max
    is raised to j_min + min_gap (with a warning).
    """
    if n2 < 16:
        raise ValueError(f"n2 = {n2} is too small for a resolution grid (need n2 >= 16)")
    if c_min <= 0 or c_max <= 0:
        raise ValueError("grid proportionality constants must be positive")
    ln = math.log(n2)
    j_min = max(1, round(math.log2(c_min * (n2 / ln) ** (1.0 / (2 * r + 1)))))
    j_max = round(math.log2(c_max * n2 / ln**4))
    if j_max < j_min + min_gap:
        log.warning("j_max = %d from the formula is below j_min + %d; clamping to %d", j_max, min_gap, j_min + min_gap)
        j_max = j_min + min_gap
    return ResolutionGrid(j_min, j_max)


def undersmooth_level(n: int) -> int:
    """u_n with 2^u_n ~ (log n)^2."""
    if n < 3:
        raise ValueError("undersmoothing needs n >= 3")
    return max(1, round(2.0 * math.log2(math.log(n))))


def evaluation_grid(a: float, b: float, finest_level: int) -> NDArray[np.float64]:
    """Uniform grid on [a, b] with spacing 2^-(finest_level + 3), aligned to the dyadic lattice."""
    step = 2.0 ** -(finest_level + 3)
    start = math.ceil(a / step)
    stop = math.floor(b / step)
    return np.arange(start, stop + 1) * step


@dataclass(frozen=True)
class CurveEstimate:
    grid: NDArray[np.float64]
    values: NDArray[np.float64]
    j: float
    subsample: str = ""

    def sup(self) -> float:
        return float(np.max(np.abs(self.values)))


def linear_estimate(
    spec: KernelSpec, data: ArrayLike, j: float, grid: ArrayLike, subsample: str = ""
) -> CurveEstimate:
    """f_n(y, j) = 2^j / n * sum_m K(2^j y, 2^j X_m) evaluated on `grid`."""
    x = np.asarray(data, dtype=float)
    y = np.asarray(grid, dtype=float)
    if x.size == 0:
        raise ValueError("data must be nonempty")
    if y.size == 0:
        raise ValueError("grid must be nonempty")
    if spec.is_wavelet:
        values = _wavelet_estimate(spec, x, j, y)
    else:
        values = _convolution_estimate(spec, x, j, y)
    return CurveEstimate(grid=y, values=values, j=j, subsample=subsample)


def empirical_coefficients(spec: KernelSpec, data: NDArray[np.float64], j: float) -> tuple[int, NDArray[np.float64]]:
    """alpha_k = (1/n) sum_m phi(2^j X_m - k), returned as (k_first, values).

    Only the cells of phi that actually contain a point are visited, so the
    cost is n times the support width of phi.
    """
    phi = spec.scaling
    s_lo, s_hi = phi.support
    u = data * 2.0**j
    cell = np.floor(u)
    t = u - cell
    base = cell.astype(np.int64)
    vals = phi.cell_values(t)  # vals[m, q] = phi(s_lo + q + t_m) = phi(u_m - k) with k = base_m - s_lo - q
    q = np.arange(s_hi - s_lo)
    k = base[:, None] - s_lo - q[None, :]
    k_first = int(k.min())
    sums = np.bincount((k - k_first).ravel(), weights=vals.ravel())
    return k_first, sums / len(data)


def _wavelet_estimate(spec: KernelSpec, x: NDArray[np.float64], j: float, y: NDArray[np.float64]) -> NDArray[np.float64]:
    k_first, alpha = empirical_coefficients(spec, x, j)
    return _expand(spec, k_first, alpha, j, y)


def _expand(spec: KernelSpec, k_first: int, alpha: NDArray[np.float64], j: float, y: NDArray[np.float64]) -> NDArray[np.float64]:
    """2^j sum_k alpha_k phi(2^j y - k)."""
    phi = spec.scaling
    s_lo, s_hi = phi.support
    u = y * 2.0**j
    cell = np.floor(u)
    vals = phi.cell_values(u - cell)
    q = np.arange(s_hi - s_lo)
    idx = cell.astype(np.int64)[:, None] - s_lo - q[None, :] - k_first
    ok = (idx >= 0) & (idx < len(alpha))
    coef = np.where(ok, alpha[np.clip(idx, 0, len(alpha) - 1)], 0.0)
    return 2.0**j * np.sum(coef * vals, axis=1)


def _convolution_estimate(
    spec: KernelSpec, x: NDArray[np.float64], j: float, y: NDArray[np.float64], chunk: int = 512
) -> NDArray[np.float64]:
    kern = spec.conv
    h = 2.0**-j
    xs = np.sort(x)
    out = np.empty(len(y))
    reach = kern.radius * h
    for start in range(0, len(y), chunk):
        block = y[start : start + chunk]
        lo = np.searchsorted(xs, block.min() - reach, side="left")
        hi = np.searchsorted(xs, block.max() + reach, side="right")
        window = xs[lo:hi]
        if window.size == 0:
            out[start : start + chunk] = 0.0
            continue
        out[start : start + chunk] = kern.func((block[:, None] - window[None, :]) / h).sum(axis=1)
    return out / (len(x) * h)


def projection(
    spec: KernelSpec, density: Callable[[NDArray[np.float64]], NDArray[np.float64]], j: float, y: ArrayLike,
    support: tuple[float, float] = (-12.0, 12.0), nodes: int = 12,
) -> NDArray[np.float64]:
    """K_j(f)(y) = int K_j(y, x) f(x) dx, the mean of f_n(y, j).

    Integrals are Gauss-Legendre on every cell of the kernel's piecewise
    polynomial structure, so for smooth f the quadrature error is far below
    the bias being measured.
    """
    y = np.asarray(y, dtype=float)
    g, w = np.polynomial.legendre.leggauss(nodes)
    g = 0.5 * (g + 1.0)
    w = 0.5 * w
    h = 2.0**-j
    if spec.is_wavelet:
        phi = spec.scaling
        s_lo, s_hi = phi.support
        cells = np.arange(math.floor(support[0] / h), math.ceil(support[1] / h))
        u = (cells[:, None] + g[None, :]).ravel()
        weights = np.tile(w, len(cells)) * h
        fx = density(u * h)
        # alpha_k = int phi(2^j x - k) f(x) dx for every k that meets the quadrature range
        k_lo = int(cells[0]) - s_hi
        k_hi = int(cells[-1]) - s_lo
        ks = np.arange(k_lo, k_hi + 1)
        alpha = np.zeros(len(ks))
        for q in range(s_lo, s_hi):
            # cell index of phi is q, so k = floor(u) - q
            kk = np.floor(u).astype(np.int64) - q - k_lo
            np.add.at(alpha, kk, phi(u - (kk + k_lo)) * fx * weights)
        return _expand(spec, k_lo, alpha, j, y)
    kern = spec.conv
    out = np.zeros(len(y))
    for a, b in ((-kern.radius, 0.0), (0.0, kern.radius)):
        nodes_v = a + (b - a) * g
        wts = (b - a) * w
        out += np.sum(kern.func(nodes_v)[None, :] * density(y[:, None] - h * nodes_v[None, :]) * wts[None, :], axis=1)
    return out
