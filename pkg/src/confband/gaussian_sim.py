"""Limit Gaussian processes Y(t) = sum_k phi(t - k) g_k and their Gumbel extremes."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Literal, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, signal, stats

from confband.constants import NormingConstants, c_of_K, norming
from confband.rng import rep_generator
from confband.splines import KernelSpec

log = logging.getLogger(__name__)

# grid points per unit cell for the coarse pass of the grid search
COARSE_STEP = 2.0**-8
REFINE_CELLS = 5
REFINE_ITERS = 60
# white-noise step as a fraction of the kernel's support width
WHITE_NOISE_FRACTION = 2.0**-6

SupMethod = Literal["exact", "grid"]


def field_pad(spec: KernelSpec) -> int:
    """Number of extra g_k on each side of [0, 2^j].

    The scaling function is already cut where its coefficients fall below
    the tolerance fixed by their geometric decay, so covering its support
    loses nothing further. Haar needs a single extra index.
    """
    if spec.family == "convolution":
        raise ValueError("convolution processes are driven by white noise, not a coefficient sequence")
    s_lo, s_hi = spec.scaling.support
    return max(abs(s_lo), abs(s_hi))


@dataclass(frozen=True, eq=False)
class GaussianFieldSample:
    """One path of Y on [0, 2^j] given its driving normals g_k, k = -pad .. 2^j + pad."""

    family: KernelSpec
    j: int
    g: NDArray[np.float64]
    pad: int

    def __post_init__(self) -> None:
        if self.j < 1:
            raise ValueError(f"j must be >= 1, got {self.j}")
        if len(self.g) != 2**self.j + 2 * self.pad + 1:
            raise ValueError(f"expected {2**self.j + 2 * self.pad + 1} driving normals, got {len(self.g)}")

    @classmethod
    def draw(cls, spec: KernelSpec, j: int, rng: np.random.Generator) -> "GaussianFieldSample":
        pad = field_pad(spec)
        return cls(spec, j, rng.standard_normal(2**j + 2 * pad + 1), pad)

    @classmethod
    def from_normals(cls, spec: KernelSpec, j: int, g: ArrayLike) -> "GaussianFieldSample":
        return cls(spec, j, np.asarray(g, dtype=float), field_pad(spec))

    def cell_polynomials(self) -> NDArray[np.float64]:
        """Ascending coefficients of Y(l + tau), tau in [0, 1], for l = 0 .. 2^j.

        Row l = 2^j is only meaningful at tau = 0 (the right endpoint).
        """
        phi = self.family.scaling
        s_lo, s_hi = phi.support
        ncells, deg = phi.cells.shape
        m0 = self.pad - s_hi + 1
        npts = 2**self.j + 1
        out = np.empty((npts, deg))
        for p in range(deg):
            full = signal.oaconvolve(self.g, phi.cells[:, p], mode="valid") if ncells > 1 else self.g * phi.cells[0, p]
            out[:, p] = full[m0 : m0 + npts]
        return out

    def __call__(self, t: ArrayLike) -> NDArray[np.float64]:
        """Y(t) by direct summation over the translates that meet t."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        phi = self.family.scaling
        s_lo, s_hi = phi.support
        cell = np.floor(t).astype(np.int64)
        vals = phi.cell_values(t - cell)
        q = np.arange(s_hi - s_lo)
        k = cell[:, None] - s_lo - q[None, :]
        idx = k + self.pad
        if np.any(idx < 0) or np.any(idx >= len(self.g)):
            raise ValueError(f"t outside [0, 2^{self.j}]")
        return np.sum(vals * self.g[idx], axis=1)

    def sup(self, method: SupMethod = "exact", grid_step: float = COARSE_STEP) -> float:
        """sup over [0, 2^j] of |Y|, unnormalised."""
        coefs = self.cell_polynomials()
        ends = np.abs(coefs[:, 0])
        if coefs.shape[1] <= 2:
            # piecewise constant or linear: extremes sit on the integer lattice
            return float(ends.max())
        inner = coefs[:-1]
        if method == "exact":
            return float(max(ends.max(), _poly_abs_max(inner).max()))
        if method == "grid":
            return float(max(ends.max(), _grid_sup(inner, grid_step)))
        raise ValueError(f"unknown sup method {method!r}")


def _horner(coefs: NDArray[np.float64], tau: NDArray[np.float64]) -> NDArray[np.float64]:
    out = np.zeros(np.broadcast_shapes(coefs.shape[:-1], tau.shape))
    for p in range(coefs.shape[-1] - 1, -1, -1):
        out = out * tau + coefs[..., p]
    return out


def _poly_abs_max(coefs: NDArray[np.float64]) -> NDArray[np.float64]:
    """max over tau in [0, 1] of |sum_p c_p tau^p| per row, degree <= 3."""
    deg = coefs.shape[1] - 1
    cands = [np.zeros(len(coefs)), np.ones(len(coefs))]
    if deg == 2:
        with np.errstate(divide="ignore", invalid="ignore"):
            cands.append(-coefs[:, 1] / (2.0 * coefs[:, 2]))
    elif deg == 3:
        # derivative 3 c3 tau^2 + 2 c2 tau + c1
        a, b, c = 3.0 * coefs[:, 3], 2.0 * coefs[:, 2], coefs[:, 1]
        disc = np.sqrt(np.maximum(b * b - 4.0 * a * c, 0.0))
        with np.errstate(divide="ignore", invalid="ignore"):
            # numerically stable pair of roots
            qq = -0.5 * (b + np.copysign(disc, b))
            cands.append(qq / a)
            cands.append(c / qq)
    elif deg > 3:
        raise ValueError("closed-form cell maxima are implemented for degree <= 3")
    best = np.zeros(len(coefs))
    for tau in cands:
        tau = np.where(np.isfinite(tau), np.clip(tau, 0.0, 1.0), 0.0)
        best = np.maximum(best, np.abs(_horner(coefs, tau)))
    return best


def _grid_sup(coefs: NDArray[np.float64], step: float) -> float:
    """Coarse grid per cell, then golden-section refinement in the best cells."""
    if not 0 < step <= 0.5:
        raise ValueError(f"grid step must lie in (0, 1/2], got {step}")
    m = int(round(1.0 / step))
    tau = np.arange(m + 1) / m
    vals = np.abs(_horner(coefs[:, None, :], tau[None, :]))
    per_cell = vals.max(axis=1)
    top = np.argsort(per_cell)[-REFINE_CELLS:]
    at = vals[top].argmax(axis=1)
    lo = np.clip(tau[at] - step, 0.0, 1.0)
    hi = np.clip(tau[at] + step, 0.0, 1.0)
    c = coefs[top]
    ratio = (math.sqrt(5.0) - 1.0) / 2.0
    for _ in range(REFINE_ITERS):
        x1 = hi - ratio * (hi - lo)
        x2 = lo + ratio * (hi - lo)
        left = np.abs(_horner(c, x1)) >= np.abs(_horner(c, x2))
        hi = np.where(left, x2, hi)
        lo = np.where(left, lo, x1)
    refined = np.abs(_horner(c, 0.5 * (lo + hi)))
    return float(max(per_cell.max(), refined.max()))


def white_noise_step(spec: KernelSpec) -> float:
    return WHITE_NOISE_FRACTION * 2.0 * spec.conv.radius


def _convolution_path_sup(spec: KernelSpec, j: int, rng: np.random.Generator) -> float:
    """sup over [0, 2^j] of |int K(t - s) dW(s)| with W discretised at step delta."""
    kern = spec.conv
    delta = white_noise_step(spec)
    half = int(round(kern.radius / delta))
    # dW on cells [i delta, (i + 1) delta], kernel sampled at cell midpoints
    taps = kern.func((np.arange(-half, half) + 0.5) * delta) * math.sqrt(delta)
    npts = int(round(2**j / delta)) + 1
    noise = rng.standard_normal(npts + 2 * half - 1)
    path = signal.oaconvolve(noise, taps, mode="valid")
    return float(np.max(np.abs(path[:npts])))


def simulate_sup(
    spec: KernelSpec, j: int, rng: np.random.Generator, method: SupMethod = "exact", grid_step: float = COARSE_STEP
) -> float:
    """sup_{t in [0, 2^j]} |Y(t)| / c(K) for one fresh path.

    Haar and BL(2) are exact lattice maxima. BL(3) and BL(4) default to the
    exact per-cell polynomial maximum; ``method="grid"`` uses a grid of the
    given step with local refinement instead.
    """
    if j < 1:
        raise ValueError(f"j must be >= 1, got {j}")
    if spec.family == "convolution":
        return _convolution_path_sup(spec, j, rng) / c_of_K(spec)
    path = GaussianFieldSample.draw(spec, j, rng)
    return path.sup(method, grid_step) / c_of_K(spec)


def sample_at(spec: KernelSpec, t: float, size: int, rng: np.random.Generator) -> NDArray[np.float64]:
    """``size`` independent draws of Y(t) = sum_k phi(t - k) g_k at one point t."""
    phi = spec.scaling
    s_lo, s_hi = phi.support
    k = math.floor(t) - s_lo - np.arange(s_hi - s_lo)
    w = phi(t - k)
    return rng.standard_normal((size, len(w))) @ w


def covariance_eval(spec: KernelSpec, s: float, t: float) -> float:
    """r(s, t) = E Y(s) Y(t) = sum_k phi(s - k) phi(t - k).

    The sum runs over exactly those k whose translate meets both points, so
    shifting (s, t) by an integer shifts the index set and leaves the value
    unchanged. For convolution kernels this is int K(s - u) K(t - u) du.
    """
    if spec.family == "convolution":
        kern = spec.conv
        v = abs(t - s)
        if v >= 2.0 * kern.radius:
            return 0.0
        val, _ = integrate.quad(
            lambda u: float(kern.func(u) * kern.func(u + v)), -kern.radius, kern.radius - v, epsabs=1e-14, epsrel=1e-13
        )
        return val
    phi = spec.scaling
    s_lo, s_hi = phi.support
    k_lo = math.floor(max(s, t)) - s_hi + 1
    k_hi = math.floor(min(s, t)) - s_lo
    if k_hi < k_lo:
        return 0.0
    k = np.arange(k_lo, k_hi + 1)
    return float(np.sum(phi(s - k) * phi(t - k)))


def lattice_correlation(spec: KernelSpec, m: int) -> float:
    """r(m) / r(0) for the integer-lattice sequence Y(0), Y(1), ..."""
    return covariance_eval(spec, 0.0, float(m)) / covariance_eval(spec, 0.0, 0.0)


@dataclass
class LimitTestReport:
    family: str
    j: int
    reps: int
    ks_stat: float
    draws: NDArray[np.float64]
    constants: NormingConstants
    seed: Optional[int] = None
    method: str = "exact"
    extra: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.reps < 1:
            raise ValueError("reps must be >= 1")

    def as_dict(self) -> dict:
        return {
            "family": self.family,
            "j": self.j,
            "reps": self.reps,
            "ks_stat": self.ks_stat,
            "seed": self.seed,
            "method": self.method,
            "mean_normalized": float(np.mean(self.draws)),
            "constants": self.constants.as_dict(),
            **self.extra,
        }


def normalize_sups(sups: ArrayLike, consts: NormingConstants, shift: float = 0.0) -> NDArray[np.float64]:
    """A (sup - (B + shift))."""
    return consts.A_l * (np.asarray(sups, dtype=float) - (consts.B_l + shift))


def gumbel_discrepancy(draws: ArrayLike) -> float:
    """Kolmogorov distance between the empirical CDF and exp(-exp(-x))."""
    draws = np.sort(np.asarray(draws, dtype=float))
    return float(stats.kstest(draws, stats.gumbel_r.cdf).statistic)


def simulate_sups(
    spec: KernelSpec, j: int, reps: int, seed: int, method: SupMethod = "exact", grid_step: float = COARSE_STEP
) -> NDArray[np.float64]:
    """Normalised sups for reps independent paths, rep i drawn from stream (seed, i)."""
    return np.array([simulate_sup(spec, j, rep_generator(seed, i), method, grid_step) for i in range(reps)])


def gumbel_ks_test(
    spec: KernelSpec,
    j: int,
    reps: int,
    rng: int | np.random.Generator,
    variant: Literal["printed", "consistent"] = "printed",
    method: SupMethod = "exact",
) -> LimitTestReport:
    """KS distance of A(j)(sup - B(j)) to the standard Gumbel law.

    An integer ``rng`` is a seed: rep i then uses its own counter-derived
    stream, so the result does not depend on rep order. A Generator is
    consumed sequentially.
    """
    if reps < 1:
        raise ValueError(f"reps must be >= 1, got {reps}")
    if reps < 100:
        log.warning("reps = %d is below 100; the KS distance is very noisy", reps)
    if isinstance(rng, np.random.Generator):
        sups = np.array([simulate_sup(spec, j, rng, method) for _ in range(reps)])
        seed = None
    else:
        seed = int(rng)
        sups = simulate_sups(spec, j, reps, seed, method)
    consts = norming(spec, j, variant=variant)
    draws = np.sort(normalize_sups(sups, consts))
    return LimitTestReport(spec.name, j, reps, gumbel_discrepancy(draws), draws, consts, seed, method)
