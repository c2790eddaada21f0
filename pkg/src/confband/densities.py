"""Test densities: Gaussian mixtures and Haar-modified densities with a guaranteed bias lower bound."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate, stats

Array = NDArray[np.float64]

CLASS_GRID_POINTS = 4001
MASS_TOL = 1e-6


class DensityError(ValueError):
    """A density specification is invalid or violates its declared class."""


@dataclass(frozen=True, eq=False)
class DensitySpec:
    """A density with exact evaluator, sampler and its class parameters.

    ``delta`` and ``F`` declare f >= delta on F. ``holder_t`` is the declared
    smoothness, ``None`` meaning smoother than any kernel in use.
    """

    kind: str
    params: dict[str, Any]
    pdf: Optional[Callable[[Array], Array]]
    cdf: Optional[Callable[[Array], Array]]
    sampler: Callable[[int, np.random.Generator], Array]
    delta: float
    F: tuple[float, float]
    holder_t: Optional[float] = None
    support: tuple[float, float] = (-math.inf, math.inf)
    breakpoints: tuple[float, ...] = field(default=())

    def __call__(self, y: ArrayLike) -> Array:
        if self.pdf is None:
            raise DensityError(f"{self.kind} density has no exact evaluator")
        return self.pdf(np.asarray(y, dtype=float))

    def sample(self, n: int, rng: np.random.Generator) -> Array:
        if n < 1:
            raise ValueError(f"sample size must be positive, got {n}")
        return self.sampler(n, rng)

    def total_mass(self) -> float:
        """Quadrature of f: adaptive on the tails, Gauss-Legendre between breakpoints."""
        if self.pdf is None:
            raise DensityError(f"{self.kind} density has no exact evaluator")
        lo, hi = self.support
        inner = sorted(p for p in self.breakpoints if lo < p < hi)
        a = inner[0] if inner else (0.0 if math.isinf(lo) else lo)
        b = inner[-1] if inner else a
        f = lambda x: float(self.pdf(np.array([x]))[0])
        total = integrate.quad(f, lo, a, epsabs=1e-14, epsrel=1e-13, limit=400)[0] if a > lo else 0.0
        total += integrate.quad(f, b, hi, epsabs=1e-14, epsrel=1e-13, limit=400)[0] if hi > b else 0.0
        for left, right in zip(inner[:-1], inner[1:]):
            total += gauss_legendre(self.pdf, left, right)
        return total

    def class_margin(self, points: int = CLASS_GRID_POINTS) -> float:
        """min over a grid on F of f - delta (negative means the class is violated)."""
        grid = np.linspace(self.F[0], self.F[1], points)
        grid = np.union1d(grid, [p for p in self.breakpoints if self.F[0] <= p <= self.F[1]])
        return float(np.min(self(grid)) - self.delta)

    def validate(self) -> None:
        if self.pdf is None:
            return
        mass = self.total_mass()
        if abs(mass - 1.0) > MASS_TOL:
            raise DensityError(f"{self.kind} density integrates to {mass:.10f}, not 1")
        margin = self.class_margin()
        if margin < -1e-12:
            raise DensityError(f"{self.kind} density drops below delta = {self.delta:.6g} on F = {list(self.F)} by {-margin:.3g}")

    def describe(self) -> dict:
        out = {"kind": self.kind, "delta": self.delta, "F": list(self.F), "holder_t": self.holder_t}
        out.update({k: v for k, v in self.params.items() if k != "base"})
        if "base" in self.params:
            out["base"] = self.params["base"].describe()
        return out


def gaussian_mixture(
    weights: ArrayLike,
    means: ArrayLike,
    sds: ArrayLike,
    F: tuple[float, float] = (-0.5, 1.5),
    delta: Optional[float] = None,
) -> DensitySpec:
    """Finite normal mixture. ``delta`` defaults to the minimum of f on a grid over F."""
    w = np.asarray(weights, dtype=float)
    mu = np.asarray(means, dtype=float)
    sd = np.asarray(sds, dtype=float)
    if not (w.ndim == mu.ndim == sd.ndim == 1 and len(w) == len(mu) == len(sd) and len(w) > 0):
        raise DensityError("weights, means and sds must be nonempty lists of equal length")
    if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-12:
        raise DensityError(f"mixture weights must be positive and sum to 1, got {w.tolist()}")
    if np.any(sd <= 0):
        raise DensityError("mixture standard deviations must be positive")
    if not F[0] < F[1]:
        raise DensityError(f"F must be a nondegenerate interval, got {list(F)}")

    def pdf(y: Array) -> Array:
        y = np.asarray(y, dtype=float)
        return np.sum(w * stats.norm.pdf((y[..., None] - mu) / sd) / sd, axis=-1)

    def cdf(y: Array) -> Array:
        y = np.asarray(y, dtype=float)
        return np.sum(w * stats.norm.cdf((y[..., None] - mu) / sd), axis=-1)

    def sampler(n: int, rng: np.random.Generator) -> Array:
        comp = rng.choice(len(w), size=n, p=w) if len(w) > 1 else np.zeros(n, dtype=np.int64)
        return mu[comp] + sd[comp] * rng.standard_normal(n)

    if delta is None:
        delta = float(np.min(pdf(np.linspace(F[0], F[1], CLASS_GRID_POINTS))))
    params = {"weights": w.tolist(), "means": mu.tolist(), "sds": sd.tolist()}
    return DensitySpec("gaussian_mixture", params, pdf, cdf, sampler, float(delta), (float(F[0]), float(F[1])))


def standard_normal(F: tuple[float, float] = (-0.5, 1.5)) -> DensitySpec:
    return gaussian_mixture([1.0], [0.0], [1.0], F=F)


def gauss_legendre(f: Callable[[Array], Array], a: float, b: float, nodes: int = 24) -> float:
    """Fixed-order Gauss-Legendre rule, exact up to rounding for smooth f on short intervals."""
    x, w = np.polynomial.legendre.leggauss(nodes)
    half = 0.5 * (b - a)
    return float(half * np.sum(w * f(a + half * (x + 1.0))))


def haar_detail(pdf: Callable[[Array], Array], l: int, k: int) -> float:
    """beta_lk = int f psi_lk for the Haar wavelet psi = 1[0,1/2) - 1[1/2,1).

    Each half-cell is integrated separately; differencing CDF values instead
    would lose most digits to cancellation at fine levels.
    """
    a, m, b = (k / 2.0**l, (k + 0.5) / 2.0**l, (k + 1) / 2.0**l)
    return 2.0 ** (l / 2.0) * (gauss_legendre(pdf, a, m) - gauss_legendre(pdf, m, b))


def perturbation_bound(t: float, l0: int) -> float:
    """2 ||psi||_inf sum_{l >= l0} 2^(-l t) with ||psi||_inf = 1 for Haar."""
    return 2.0 * 2.0 ** (-l0 * t) / (1.0 - 2.0**-t)


def build_condition3_density(
    base: DensitySpec, t: float, k0: int, l0: int, L_max: int, eps: float = 0.5
) -> DensitySpec:
    """Raise the Haar details of ``base`` at position k0 to at least 2^(-l(t+1/2)) for l0 <= l <= L_max.

    Each detail beta_{l k0} whose magnitude is below the threshold is
    replaced by the threshold itself; all other coefficients are kept, so the
    result integrates to one. The change is confined to
    [k0 2^-l0, (k0 + 1) 2^-l0], which must lie inside [0, 1] and inside F.
    """
    if base.pdf is None or base.cdf is None:
        raise DensityError("base density needs an exact evaluator and CDF")
    if not t > 0:
        raise DensityError(f"t must be positive, got {t}")
    if not 0 < eps < 1:
        raise DensityError(f"eps must lie in (0, 1), got {eps}")
    if l0 < 0 or L_max < l0:
        raise DensityError(f"need 0 <= l0 <= L_max, got l0 = {l0}, L_max = {L_max}")
    lo, hi = k0 / 2.0**l0, (k0 + 1) / 2.0**l0
    if k0 < 0 or hi > 1.0:
        raise DensityError(f"modification interval [{lo:.6g}, {hi:.6g}] is not inside [0, 1]; increase l0 or change k0")
    if lo < base.F[0] or hi > base.F[1]:
        raise DensityError(f"modification interval [{lo:.6g}, {hi:.6g}] is not inside F = {list(base.F)}")
    bound = perturbation_bound(t, l0)
    if bound > eps * base.delta:
        raise DensityError(
            f"l0 = {l0} too small: perturbation bound {bound:.6g} exceeds eps * delta = {eps * base.delta:.6g}, "
            f"so g >= delta (1 - eps) on F is not guaranteed"
        )

    # (level, original detail, added amount) for every modified level
    mods: list[tuple[int, float, float]] = []
    for l in range(l0, L_max + 1):
        beta = haar_detail(base.pdf, l, k0)
        thr = 2.0 ** (-l * (t + 0.5))
        if abs(beta) < thr:
            mods.append((l, beta, thr - beta))
    levels = np.array([m[0] for m in mods], dtype=float)
    adds = np.array([m[2] for m in mods])

    def bump(y: Array) -> Array:
        """sum_l add_l psi_{l k0}(y)."""
        y = np.asarray(y, dtype=float)
        if not mods:
            return np.zeros(y.shape)
        u = y[..., None] * 2.0**levels - k0
        psi = np.where((u >= 0) & (u < 0.5), 1.0, 0.0) - np.where((u >= 0.5) & (u < 1.0), 1.0, 0.0)
        return np.sum(adds * 2.0 ** (levels / 2.0) * psi, axis=-1)

    def bump_cdf(y: Array) -> Array:
        """int_{-inf}^y of bump: a tent per level, zero outside its cell."""
        y = np.asarray(y, dtype=float)
        if not mods:
            return np.zeros(y.shape)
        u = y[..., None] * 2.0**levels - k0
        tent = np.where((u > 0) & (u < 1.0), 0.5 - np.abs(u - 0.5), 0.0)
        return np.sum(adds * 2.0 ** (-levels / 2.0) * tent, axis=-1)

    def pdf(y: Array) -> Array:
        return base.pdf(y) + bump(y)

    def cdf(y: Array) -> Array:
        return base.cdf(y) + bump_cdf(y)

    # g / f <= 1 + bound / delta on the modified cell, and g = f elsewhere
    envelope = 1.0 + bound / base.delta

    def sampler(n: int, rng: np.random.Generator) -> Array:
        out = np.empty(0)
        while len(out) < n:
            need = n - len(out)
            batch = max(64, int(need * envelope * 1.1))
            x = base.sampler(batch, rng)
            u = rng.random(batch)
            keep = u * envelope * base.pdf(x) <= pdf(x)
            out = np.concatenate([out, x[keep]])
        return out[:n]

    breaks = sorted({*base.breakpoints, lo, hi, *((k0 + np.array([[0.0], [0.5], [1.0]])) / 2.0**levels).ravel().tolist()})
    params = {
        "base": base,
        "t": float(t),
        "k0": int(k0),
        "l0": int(l0),
        "L_max": int(L_max),
        "eps": float(eps),
        "perturbation_bound": bound,
        "modified_levels": [int(m[0]) for m in mods],
    }
    return DensitySpec(
        "condition3_haar",
        params,
        pdf,
        cdf,
        sampler,
        delta=base.delta * (1.0 - eps),
        F=base.F,
        holder_t=float(t),
        support=base.support,
        breakpoints=tuple(breaks),
    )


def density_from_config(cfg: dict, L_max: Optional[int] = None) -> DensitySpec:
    """Build a density from its JSON description.

    Recognised kinds: ``normal`` (standard normal), ``gaussian_mixture`` and
    ``condition3_haar`` (which wraps a ``base`` description).
    """
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise DensityError("density config must be an object with a 'kind' field")
    kind = cfg["kind"]
    F = tuple(cfg.get("F", (-0.5, 1.5)))
    if kind == "normal":
        mean, sd = float(cfg.get("mean", 0.0)), float(cfg.get("sd", 1.0))
        return gaussian_mixture([1.0], [mean], [sd], F=F, delta=cfg.get("delta"))
    if kind == "gaussian_mixture":
        try:
            return gaussian_mixture(cfg["weights"], cfg["means"], cfg["sds"], F=F, delta=cfg.get("delta"))
        except KeyError as exc:
            raise DensityError(f"gaussian_mixture density is missing field {exc.args[0]!r}") from None
    if kind == "condition3_haar":
        base = density_from_config(cfg.get("base", {"kind": "normal"}))
        top = cfg.get("L_max", L_max)
        if top is None:
            raise DensityError("condition3_haar density needs L_max")
        try:
            return build_condition3_density(base, float(cfg["t"]), int(cfg["k0"]), int(cfg["l0"]), int(top), float(cfg.get("eps", 0.5)))
        except KeyError as exc:
            raise DensityError(f"condition3_haar density is missing field {exc.args[0]!r}") from None
    raise DensityError(f"unknown density kind {kind!r}")
