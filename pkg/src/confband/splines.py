"""B-splines, Battle-Lemarie scaling functions and projection kernels.

Every scaling function used here (Haar included) is a piecewise polynomial
on the integer cells, so it is stored as a table of per-cell polynomial
coefficients. That table is what the estimators and the Gaussian process
simulations consume.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Literal, Optional

import numpy as np
from numpy.polynomial import polynomial as P
from numpy.typing import ArrayLike, NDArray

FFT_POINTS = 2**14
DEFAULT_TOL = 1e-12


def bspline_eval(r: int, x: ArrayLike) -> NDArray[np.float64] | float:
    """Cardinal B-spline N_r, the r-fold convolution of 1_[0,1).

    Evaluated with the Cox-de Boor recursion
    N_r(x) = (x N_{r-1}(x) + (r - x) N_{r-1}(x - 1)) / (r - 1).
    """
    if r < 1:
        raise ValueError(f"B-spline order must be >= 1, got {r}")
    x_arr = np.asarray(x, dtype=float)
    out = _bspline_rec(r, x_arr)
    return float(out) if out.ndim == 0 else out


def _bspline_rec(r: int, x: NDArray[np.float64]) -> NDArray[np.float64]:
    if r == 1:
        return ((x >= 0.0) & (x < 1.0)).astype(float)
    return (x * _bspline_rec(r - 1, x) + (r - x) * _bspline_rec(r - 1, x - 1.0)) / (r - 1)


@lru_cache(maxsize=None)
def bspline_cells(r: int) -> NDArray[np.float64]:
    """Polynomial pieces of N_r: row i holds ascending coefficients of t -> N_r(i + t), t in [0, 1)."""
    if r == 1:
        return np.ones((1, 1))
    prev = bspline_cells(r - 1)
    rows = []
    for i in range(r):
        left = prev[i] if i < r - 1 else np.zeros(1)
        right = prev[i - 1] if i >= 1 else np.zeros(1)
        # x = i + t; (x N_{r-1}(x) + (r - x) N_{r-1}(x - 1)) / (r - 1)
        term = P.polyadd(P.polymul([i, 1.0], left), P.polymul([r - i, -1.0], right))
        piece = np.zeros(r)
        piece[: len(term)] = term[:r]
        rows.append(piece / (r - 1))
    table = np.array(rows)
    table.setflags(write=False)
    return table


@dataclass(frozen=True, eq=False)
class CoefficientSeq:
    """Expansion coefficients a_k, lo <= k <= hi, of a scaling function in shifted B-splines."""

    lo: int
    hi: int
    values: NDArray[np.float64]
    decay_rate: float

    def __post_init__(self) -> None:
        if len(self.values) != self.hi - self.lo + 1:
            raise ValueError("coefficient count does not match index bounds")

    @property
    def indices(self) -> NDArray[np.int64]:
        return np.arange(self.lo, self.hi + 1)

    def __getitem__(self, k: int) -> float:
        if self.lo <= k <= self.hi:
            return float(self.values[k - self.lo])
        return 0.0

    def padded(self, pad: int) -> NDArray[np.float64]:
        """Values with `pad` zeros on each side (index lo - pad first)."""
        return np.concatenate([np.zeros(pad), self.values, np.zeros(pad)])

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["k", "a_k"])
            for k, a in zip(self.indices, self.values):
                writer.writerow([int(k), repr(float(a))])


def _fit_decay(values: NDArray[np.float64], lo: int) -> float:
    ks = np.abs(np.arange(lo, lo + len(values)))
    mags = np.abs(values)
    keep = (mags > 0) & (ks > 0)
    if keep.sum() < 2:
        return 0.0
    slope, _ = np.polyfit(ks[keep], np.log(mags[keep]), 1)
    return float(math.exp(slope))


@lru_cache(maxsize=None)
def bl_coefficients(r: int, tol: float = DEFAULT_TOL) -> CoefficientSeq:
    """Coefficients of the orthonormalised B-spline (Battle-Lemarie) scaling function.

    The Fourier transform of the scaling function is
    N_r^(xi) / sqrt(Pi(xi)) with Pi(xi) = sum_k |N_r^(xi + 2 pi k)|^2
    = sum_m N_{2r}(r + m) e^{-i m xi}, so the a_k are the Fourier
    coefficients of Pi^{-1/2}, obtained here by sampling on a 2^14 grid.
    The sequence is symmetric about k = 0 and sums to one.
    """
    if r == 1:
        raise ValueError("r = 1 is the Haar case and needs no orthonormalisation coefficients")
    if r not in (2, 3, 4):
        raise ValueError(f"Battle-Lemarie order must be in {{2, 3, 4}}, got {r}")
    if tol <= 0:
        raise ValueError("tol must be positive")
    m = np.arange(-(r - 1), r)
    autocorr = bspline_eval(2 * r, r + m)
    xi = 2.0 * np.pi * np.arange(FFT_POINTS) / FFT_POINTS
    pi_xi = np.real(np.exp(-1j * np.outer(xi, m)) @ autocorr)
    full = np.real(np.fft.ifft(1.0 / np.sqrt(pi_xi)))
    half = FFT_POINTS // 2
    centred = np.concatenate([full[-half:], full[:half]])  # index -half .. half-1
    big = np.nonzero(np.abs(centred) >= tol)[0]
    reach = int(max(abs(big[0] - half), abs(big[-1] - half)))
    values = centred[half - reach : half + reach + 1].copy()
    values.setflags(write=False)
    return CoefficientSeq(lo=-reach, hi=reach, values=values, decay_rate=_fit_decay(values, -reach))


@dataclass(frozen=True, eq=False)
class ScalingFunction:
    """Piecewise polynomial phi(x) = sum_k a_k N_r(x - k).

    ``cells[q]`` holds ascending coefficients in t of phi(first_cell + q + t).
    """

    r: int
    first_cell: int
    cells: NDArray[np.float64]

    @classmethod
    def from_coefficients(cls, coeffs: CoefficientSeq, r: int) -> "ScalingFunction":
        base = bspline_cells(r)
        ncells = len(coeffs.values) + r - 1
        cells = np.zeros((ncells, r))
        # cell m = lo + q collects a_{m - i} * N_r piece i
        for q in range(ncells):
            for i in range(r):
                idx = q - i
                if 0 <= idx < len(coeffs.values):
                    cells[q] += coeffs.values[idx] * base[i]
        cells.setflags(write=False)
        return cls(r=r, first_cell=coeffs.lo, cells=cells)

    @property
    def support(self) -> tuple[int, int]:
        return self.first_cell, self.first_cell + len(self.cells)

    def __call__(self, x: ArrayLike) -> NDArray[np.float64] | float:
        x_arr = np.asarray(x, dtype=float)
        cell = np.floor(x_arr)
        q = cell.astype(np.int64) - self.first_cell
        inside = (q >= 0) & (q < len(self.cells))
        pieces = self.cells[np.clip(q, 0, len(self.cells) - 1)]
        t = x_arr - cell
        out = pieces[..., -1]
        for p in range(self.r - 2, -1, -1):
            out = out * t + pieces[..., p]
        out = np.where(inside, out, 0.0)
        return float(out) if out.ndim == 0 else out

    def cell_values(self, t: NDArray[np.float64]) -> NDArray[np.float64]:
        """Matrix V[m, q] = phi(first_cell + q + t[m]) for t in [0, 1)."""
        powers = np.vander(t, self.r, increasing=True)
        return powers @ self.cells.T

    def derivative_cells(self) -> NDArray[np.float64]:
        if self.r == 1:
            return np.zeros((len(self.cells), 1))
        return self.cells[:, 1:] * np.arange(1, self.r)


def scaling_eval(coeffs: CoefficientSeq, r: int, x: ArrayLike) -> NDArray[np.float64] | float:
    """phi_r(x) = sum_k a_k N_r(x - k), truncated to the stored coefficients."""
    return _scaling_for(coeffs, r)(x)


@lru_cache(maxsize=32)
def _scaling_for(coeffs: CoefficientSeq, r: int) -> ScalingFunction:
    return ScalingFunction.from_coefficients(coeffs, r)


@dataclass(frozen=True)
class ConvolutionKernel:
    """Univariate kernel K(u) supported in [-radius, radius].

    ``derivative`` is the declared analytic K'; kernels without one cannot
    be used where the Gumbel norming constants need the curvature of the
    covariance.
    """

    name: str
    func: Callable[[NDArray[np.float64]], NDArray[np.float64]]
    radius: float
    order: int
    derivative: Optional[Callable[[NDArray[np.float64]], NDArray[np.float64]]] = None


def _biweight(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 15.0 / 16.0 * (1.0 - u**2) ** 2, 0.0)


def _biweight_d(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, -15.0 / 4.0 * u * (1.0 - u**2), 0.0)


def _triweight(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, 35.0 / 32.0 * (1.0 - u**2) ** 3, 0.0)


def _triweight_d(u):
    u = np.asarray(u, dtype=float)
    return np.where(np.abs(u) <= 1.0, -105.0 / 16.0 * u * (1.0 - u**2) ** 2, 0.0)


BIWEIGHT = ConvolutionKernel("biweight", _biweight, 1.0, 2, _biweight_d)
TRIWEIGHT = ConvolutionKernel("triweight", _triweight, 1.0, 2, _triweight_d)
CONVOLUTION_KERNELS = {k.name: k for k in (BIWEIGHT, TRIWEIGHT)}

Family = Literal["haar", "battle_lemarie", "convolution"]


@dataclass(frozen=True)
class KernelSpec:
    """One of the three kernel families: Haar, Battle-Lemarie(r), convolution."""

    family: Family
    r: int
    coeffs: Optional[CoefficientSeq] = None
    conv: Optional[ConvolutionKernel] = None
    scaling: Optional[ScalingFunction] = field(default=None, compare=False, repr=False)

    @classmethod
    def haar(cls) -> "KernelSpec":
        coeffs = CoefficientSeq(lo=0, hi=0, values=np.ones(1), decay_rate=0.0)
        return cls("haar", 1, coeffs, None, ScalingFunction.from_coefficients(coeffs, 1))

    @classmethod
    def battle_lemarie(cls, r: int, tol: float = DEFAULT_TOL) -> "KernelSpec":
        coeffs = bl_coefficients(r, tol)
        return cls("battle_lemarie", r, coeffs, None, _scaling_for(coeffs, r))

    @classmethod
    def convolution(cls, kernel: ConvolutionKernel | str = "biweight") -> "KernelSpec":
        if isinstance(kernel, str):
            try:
                kernel = CONVOLUTION_KERNELS[kernel]
            except KeyError:
                raise ValueError(f"unknown convolution kernel {kernel!r}") from None
        return cls("convolution", kernel.order, None, kernel, None)

    @classmethod
    def from_name(cls, name: str) -> "KernelSpec":
        """Parse short names: haar, bl2, bl3, bl4, biweight, triweight."""
        key = name.lower()
        if key == "haar":
            return cls.haar()
        if key in ("bl2", "bl3", "bl4"):
            return cls.battle_lemarie(int(key[2]))
        if key in CONVOLUTION_KERNELS:
            return cls.convolution(key)
        raise ValueError(f"unknown kernel family {name!r}")

    @property
    def name(self) -> str:
        if self.family == "haar":
            return "haar"
        if self.family == "battle_lemarie":
            return f"bl{self.r}"
        return self.conv.name

    @property
    def is_wavelet(self) -> bool:
        return self.family != "convolution"


def kernel_eval(spec: KernelSpec, x: ArrayLike, y: ArrayLike) -> NDArray[np.float64] | float:
    """Bivariate kernel K(x, y); broadcasts over x and y."""
    xa, ya = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    if spec.family == "haar":
        out = (np.floor(xa) == np.floor(ya)).astype(float)
    elif spec.family == "convolution":
        out = spec.conv.func(xa - ya)
    else:
        phi = spec.scaling
        s_lo, s_hi = phi.support
        base = np.floor(xa)
        out = np.zeros(xa.shape)
        # only k with x - k in the support of phi contribute
        for q in range(s_lo, s_hi):
            k = base - q
            out = out + phi(xa - k) * phi(ya - k)
    return float(out) if out.ndim == 0 else out
