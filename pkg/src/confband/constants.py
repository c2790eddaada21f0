"""Variance profiles of the wavelet Gaussian processes and Gumbel norming constants."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

from confband.splines import CoefficientSeq, KernelSpec

LOG2 = math.log(2.0)


@dataclass(frozen=True)
class VarianceProfile:
    """Summary of sigma_r^2(t) = sum_k phi_r^2(t - k) for a Battle-Lemarie kernel.

    ``M`` is set for r = 3; ``A_quartic`` and ``C`` for r = 4.
    """

    r: int
    sigma_max_sq: float
    argmax_offsets: tuple[float, ...]
    level_sum: float
    M: Optional[float] = None
    A_quartic: Optional[float] = None
    C: Optional[float] = None
    D: Optional[float] = None

    def as_dict(self) -> dict:
        return {
            "r": self.r,
            "sigma_max_sq": self.sigma_max_sq,
            "argmax_offsets": list(self.argmax_offsets),
            "M": self.M,
            "A": self.A_quartic,
            "C": self.C,
            "D": self.D,
        }


@dataclass(frozen=True)
class NormingConstants:
    """A(l), B(l) and c(K) calibrating the Gumbel limit at resolution l."""

    A_l: float
    B_l: float
    c_K: float
    level_l: int
    family: str

    def as_dict(self) -> dict:
        return {"A": self.A_l, "B": self.B_l, "c_K": self.c_K, "l": self.level_l, "family": self.family}


def _diffs(coeffs: CoefficientSeq) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Padded coefficients and first differences d_k = a_k - a_{k-1} over the whole support."""
    a = coeffs.padded(4)
    return a, np.diff(a, prepend=0.0)


def _lag(x: NDArray[np.float64], s: int) -> NDArray[np.float64]:
    """x shifted so that entry k holds x_{k-s} (zeros enter from the left)."""
    if s == 0:
        return x
    return np.concatenate([np.zeros(s), x[:-s]])


def lemma1_summary(r: int, coeffs: CoefficientSeq) -> VarianceProfile:
    """Closed-form variance maxima and curvature constants for r = 2, 3, 4."""
    a, d = _diffs(coeffs)
    if r == 2:
        level = float(np.sum(a**2))
        return VarianceProfile(2, level, (0.0,), level)
    if r == 3:
        M = float(np.sum(d**2) - np.sum(d * _lag(d, 1)))
        level = 0.25 * float(np.sum((a + _lag(a, 1)) ** 2))
        D = float(np.sum((a - _lag(a, 2)) ** 2)) / M
        return VarianceProfile(3, M / 32.0 + level, (0.5,), level, M=M, D=D)
    if r == 4:
        dd = d - _lag(d, 1)
        A = float(np.sum((dd - _lag(dd, 1)) ** 2))
        C = 3.0 * float(np.sum(dd**2))
        level = float(np.sum((_lag(a, 1) + 4.0 * a + np.concatenate([a[1:], [0.0]])) ** 2)) / 36.0
        D = 9.0 * float(np.sum((a - _lag(a, 2)) ** 2)) / C
        return VarianceProfile(4, level, (0.0,), level, A_quartic=A, C=C, D=D)
    raise ValueError(f"closed-form variance profile needs r in {{2, 3, 4}}, got {r}")


def sigma_sq(
    spec: KernelSpec, t: ArrayLike, mode: Literal["direct", "closed"] = "direct"
) -> NDArray[np.float64] | float:
    """Variance sigma^2(t) = sum_k phi^2(t - k) of the limiting Gaussian process.

    ``direct`` sums squared translates of phi; ``closed`` evaluates the
    piecewise polynomial forms, which hold for t modulo 1.
    """
    t_arr = np.asarray(t, dtype=float)
    if spec.family == "convolution":
        raise ValueError("sigma_sq is defined for wavelet projection kernels only")
    if mode == "direct":
        phi = spec.scaling
        s_lo, s_hi = phi.support
        frac = t_arr - np.floor(t_arr)
        # phi(frac + q) for every cell q: the translates seen at t
        vals = phi.cell_values(np.atleast_1d(frac))
        out = np.sum(vals**2, axis=1)
    elif mode == "closed":
        if spec.family != "battle_lemarie":
            raise ValueError("closed-form variance requires a Battle-Lemarie kernel with r in {2, 3, 4}")
        out = _closed_variance(spec, np.atleast_1d(t_arr - np.floor(t_arr)))
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return float(out[0]) if t_arr.ndim == 0 else out.reshape(t_arr.shape)


def _closed_variance(spec: KernelSpec, t: NDArray[np.float64]) -> NDArray[np.float64]:
    prof = lemma1_summary(spec.r, spec.coeffs)
    if spec.r == 2:
        _, d = _diffs(spec.coeffs)
        return float(np.sum(d**2)) * t * (t - 1.0) + prof.level_sum
    if spec.r == 3:
        return 0.5 * prof.M * t**2 * (t - 1.0) ** 2 + prof.level_sum
    return t**2 * (1.0 - t) ** 2 * (t * (t - 1.0) * prof.A_quartic - prof.C) / 36.0 + prof.level_sum


def convolution_l2(spec: KernelSpec) -> float:
    k = spec.conv
    val, _ = integrate.quad(lambda u: float(k.func(u)) ** 2, -k.radius, k.radius, epsabs=1e-14, epsrel=1e-13)
    return math.sqrt(val)


def convolution_curvature(spec: KernelSpec) -> float:
    """C = -1/2 int K K'' = 1/2 int (K')^2, using the declared analytic derivative."""
    k = spec.conv
    if k.derivative is None:
        raise ValueError(f"convolution kernel {k.name!r} declares no derivative; C is undefined")
    val, _ = integrate.quad(
        lambda u: float(k.derivative(u)) ** 2, -k.radius, k.radius, epsabs=1e-14, epsrel=1e-13
    )
    return 0.5 * val


def c_of_K(spec: KernelSpec) -> float:
    """c(K) = sqrt(sup_x int K^2(x, y) dy)."""
    if spec.family == "haar":
        return 1.0
    if spec.family == "convolution":
        return convolution_l2(spec)
    return math.sqrt(lemma1_summary(spec.r, spec.coeffs).sigma_max_sq)


def A_of_l(l: float) -> float:
    return math.sqrt(2.0 * LOG2 * l)


def norming(
    spec: KernelSpec, l: int, variant: Literal["printed", "consistent"] = "printed"
) -> NormingConstants:
    """Gumbel norming constants at resolution level l.

    Haar and piecewise linear Battle-Lemarie share
    B = A - (log l + log(pi log 2)) / (2A). Convolution kernels use
    B = A + (log sqrt(2 C~) - log pi) / A with C~ = C / ||K||_2^2.
    Smooth Battle-Lemarie (r = 3, 4) use
    B = A - (log l + log(pi log 2) - log sqrt(1 + D_r)) / A as printed;
    ``variant="consistent"`` instead divides log l + log(pi log 2) -
    log(1 + D_r) by 2A, which is what solving the tail equation of the
    cyclostationary limit gives.
    """
    if l < 2:
        raise ValueError(f"resolution level must be >= 2, got {l}")
    A = A_of_l(l)
    cK = c_of_K(spec)
    if spec.family == "haar" or (spec.family == "battle_lemarie" and spec.r == 2):
        B = A - (math.log(l) + math.log(math.pi * LOG2)) / (2.0 * A)
    elif spec.family == "convolution":
        c_tilde = convolution_curvature(spec) / cK**2
        B = A + (math.log(math.sqrt(2.0 * c_tilde)) - math.log(math.pi)) / A
    else:
        D = lemma1_summary(spec.r, spec.coeffs).D
        if variant == "printed":
            B = A - (math.log(l) + math.log(math.pi * LOG2) - math.log(math.sqrt(1.0 + D))) / A
        elif variant == "consistent":
            B = A - (math.log(l) + math.log(math.pi * LOG2) - math.log(1.0 + D)) / (2.0 * A)
        else:
            raise ValueError(f"unknown variant {variant!r}")
    return NormingConstants(A_l=A, B_l=B, c_K=cK, level_l=int(l), family=spec.name)
