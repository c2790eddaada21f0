"""Adaptive, honest confidence bands for densities with Gumbel-calibrated widths."""

from confband.band import (
    BandConstructionError,
    BandResult,
    LepskiConfig,
    check_coverage,
    construct_band,
    gumbel_quantile,
    lepski_select,
)
from confband.constants import c_of_K, lemma1_summary, norming, sigma_sq
from confband.densities import DensitySpec, build_condition3_density, gaussian_mixture, standard_normal
from confband.estimator import (
    ResolutionGrid,
    SampleSplit,
    linear_estimate,
    resolution_grid,
    split_sample,
    undersmooth_level,
)
from confband.experiments import ExperimentConfig, band_once, read_observations, run_coverage
from confband.gaussian_sim import covariance_eval, gumbel_ks_test, simulate_sup
from confband.rng import rep_generator
from confband.splines import KernelSpec, bl_coefficients, bspline_eval, kernel_eval, scaling_eval

__all__ = [
    "BandConstructionError",
    "BandResult",
    "DensitySpec",
    "ExperimentConfig",
    "KernelSpec",
    "LepskiConfig",
    "ResolutionGrid",
    "SampleSplit",
    "bl_coefficients",
    "bspline_eval",
    "build_condition3_density",
    "band_once",
    "c_of_K",
    "check_coverage",
    "construct_band",
    "covariance_eval",
    "gaussian_mixture",
    "gumbel_ks_test",
    "gumbel_quantile",
    "kernel_eval",
    "lemma1_summary",
    "lepski_select",
    "linear_estimate",
    "norming",
    "read_observations",
    "rep_generator",
    "resolution_grid",
    "run_coverage",
    "scaling_eval",
    "sigma_sq",
    "simulate_sup",
    "split_sample",
    "standard_normal",
    "undersmooth_level",
]
