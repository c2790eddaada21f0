import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from confband.constants import c_of_K, norming, sigma_sq
from confband.gaussian_sim import (
    GaussianFieldSample,
    LimitTestReport,
    covariance_eval,
    field_pad,
    gumbel_discrepancy,
    gumbel_ks_test,
    lattice_correlation,
    normalize_sups,
    sample_at,
    simulate_sup,
    simulate_sups,
)
from confband.rng import rep_generator
from confband.splines import KernelSpec


def test_haar_single_spike(haar):
    j = 4
    pad = field_pad(haar)
    g = np.zeros(2**j + 2 * pad + 1)
    g[pad + 3] = 2.0
    path = GaussianFieldSample(haar, j, g, pad)
    assert path.sup() == 2.0
    assert path(np.array([3.5]))[0] == 2.0


def test_haar_sup_is_max_of_lattice_normals(haar):
    rng = np.random.default_rng(0)
    path = GaussianFieldSample.draw(haar, 6, rng)
    inside = path.g[path.pad : path.pad + 2**6 + 1]
    assert path.sup() == np.max(np.abs(inside))


@pytest.mark.parametrize("seed", range(5))
def test_bl2_sup_attained_on_integers(bl2, seed):
    path = GaussianFieldSample.draw(bl2, 5, np.random.default_rng(seed))
    fine = np.max(np.abs(path(np.linspace(0, 32, 32 * 64 + 1))))
    lattice = np.max(np.abs(path(np.arange(33.0))))
    assert path.sup() == pytest.approx(lattice, abs=1e-14)
    assert fine <= lattice + 1e-14


@pytest.mark.parametrize("name", ["bl3", "bl4"])
def test_exact_sup_dominates_fine_grid(name):
    spec = KernelSpec.from_name(name)
    for seed in range(5):
        path = GaussianFieldSample.draw(spec, 4, np.random.default_rng(seed))
        fine = np.max(np.abs(path(np.linspace(0, 16, 16 * 2000 + 1))))
        assert fine <= path.sup() + 1e-12
        assert path.sup() - fine < 1e-6


def test_bl3_grid_refinement_converges(bl3):
    gaps = []
    for seed in range(50):
        path = GaussianFieldSample.draw(bl3, 6, rep_generator(9, seed))
        gaps.append(abs(path.sup("grid", 2.0**-10) - path.sup("grid", 2.0**-12)))
    assert max(gaps) < 1e-3


def test_cell_polynomials_agree_with_direct_sum(bl4):
    path = GaussianFieldSample.draw(bl4, 5, np.random.default_rng(2))
    coefs = path.cell_polynomials()
    t = np.array([0.0, 0.3, 5.75, 31.999, 32.0])
    cell = np.minimum(np.floor(t).astype(int), 2**5)
    via_cells = [np.polynomial.polynomial.polyval(tt - c, coefs[c]) for tt, c in zip(t, cell)]
    assert np.allclose(via_cells, path(t), atol=1e-13)


def test_path_rejects_wrong_length(bl2):
    with pytest.raises(ValueError):
        GaussianFieldSample(bl2, 3, np.zeros(5), field_pad(bl2))
    with pytest.raises(ValueError):
        GaussianFieldSample.draw(bl2, 0, np.random.default_rng(0))


def test_unknown_sup_method(bl3):
    with pytest.raises(ValueError):
        GaussianFieldSample.draw(bl3, 3, np.random.default_rng(0)).sup("bisect")


@pytest.mark.parametrize("name", ["haar", "bl2", "bl3", "bl4"])
@pytest.mark.parametrize("t", [0.0, 0.25, 0.5])
def test_covariance_diagonal_is_variance(name, t):
    spec = KernelSpec.from_name(name)
    assert covariance_eval(spec, t, t) == pytest.approx(sigma_sq(spec, t), abs=1e-14)


@settings(max_examples=60, deadline=None)
@given(st.sampled_from(["haar", "bl2", "bl3", "bl4"]), st.integers(-20 * 2**12, 20 * 2**12), st.integers(-6 * 2**12, 6 * 2**12))
def test_cyclostationarity(name, s_num, v_num):
    # dyadic arguments keep every integer shift exact in floating point
    spec = KernelSpec.from_name(name)
    s, v = s_num / 2**12, v_num / 2**12
    assert abs(covariance_eval(spec, s, s + v) - covariance_eval(spec, s + 1, s + 1 + v)) < 1e-12


def test_bl2_lattice_is_stationary(bl2):
    rng = np.random.default_rng(4)
    for _ in range(20):
        s, m = int(rng.integers(-50, 50)), int(rng.integers(0, 12))
        assert covariance_eval(bl2, s, s + m) == pytest.approx(covariance_eval(bl2, 0, m), abs=1e-15)


def test_bl2_lattice_correlation_berman(bl2):
    a = bl2.coeffs.values
    for m in (1, 2, 5):
        ref = np.sum(a[:-m] * a[m:]) / np.sum(a**2)
        assert lattice_correlation(bl2, m) == pytest.approx(ref, abs=1e-14)
    assert abs(lattice_correlation(bl2, 40)) * math.log(40) < 0.01


def test_convolution_covariance(biweight):
    assert covariance_eval(biweight, 0.0, 0.0) == pytest.approx(5 / 7, abs=1e-12)
    assert covariance_eval(biweight, 0.0, 2.5) == 0.0
    assert covariance_eval(biweight, 0.1, 0.6) == pytest.approx(covariance_eval(biweight, 3.1, 3.6), abs=1e-14)


@pytest.mark.parametrize("name,t", [("bl2", 0.0), ("bl3", 0.5), ("bl4", 0.3), ("haar", 0.7)])
def test_variance_consistency(name, t):
    spec = KernelSpec.from_name(name)
    draws = sample_at(spec, t, 100_000, np.random.default_rng(13))
    var = sigma_sq(spec, t)
    se = var * math.sqrt(2 / len(draws))
    assert abs(np.var(draws) - var) < 3 * se


def test_normalized_shift_is_exact(bl2):
    sups = simulate_sups(bl2, 6, 200, 3)
    consts = norming(bl2, 6)
    base = normalize_sups(sups, consts)
    for delta in (-0.3, 0.1, 1.0):
        shifted = normalize_sups(sups, consts, shift=delta)
        assert np.mean(shifted) - np.mean(base) == pytest.approx(-consts.A_l * delta, abs=1e-12)


def test_per_rep_streams_are_order_free(bl2):
    forward = simulate_sups(bl2, 5, 30, 77)
    backward = [simulate_sup(bl2, 5, rep_generator(77, i)) for i in reversed(range(30))]
    assert np.array_equal(forward, backward[::-1])


def test_simulated_sup_normalised_by_c(bl2):
    rng_a, rng_b = rep_generator(1, 0), rep_generator(1, 0)
    raw = GaussianFieldSample.draw(bl2, 5, rng_a).sup()
    assert simulate_sup(bl2, 5, rng_b) == pytest.approx(raw / c_of_K(bl2), rel=1e-15)


def test_convolution_sup_reasonable(biweight):
    sups = [simulate_sup(biweight, 6, rep_generator(2, i)) for i in range(30)]
    # the stationary unit-variance process on [0, 64] has sup well above 1 and below 6
    assert 1.5 < np.mean(sups) < 5.0


def test_ks_degenerate_single_rep(haar):
    rep = gumbel_ks_test(haar, 4, 1, 5)
    assert 0.0 <= rep.ks_stat <= 1.0 and rep.reps == 1


def test_ks_generator_and_seed_paths(haar):
    a = gumbel_ks_test(haar, 6, 150, np.random.default_rng(1))
    b = gumbel_ks_test(haar, 6, 150, 1)
    assert a.seed is None and b.seed == 1
    assert 0 < a.ks_stat < 0.2 and 0 < b.ks_stat < 0.2
    assert np.all(np.diff(b.draws) >= 0)


def test_ks_rejects_zero_reps(haar):
    with pytest.raises(ValueError):
        gumbel_ks_test(haar, 4, 0, 1)
    with pytest.raises(ValueError):
        LimitTestReport("haar", 4, 0, 0.0, np.zeros(0), norming(KernelSpec.haar(), 4))


def test_gumbel_discrepancy_of_exact_quantiles():
    u = (np.arange(10_000) + 0.5) / 10_000
    x = -np.log(-np.log(u))
    assert gumbel_discrepancy(x) == pytest.approx(0.5 / 10_000, abs=1e-9)


def test_printed_smooth_constants_misplace_the_limit(bl3):
    # the printed B for r = 3 puts the normalised mean near 2, the consistent one near Euler's gamma
    printed = gumbel_ks_test(bl3, 10, 400, 21)
    consistent = gumbel_ks_test(bl3, 10, 400, 21, variant="consistent")
    assert np.mean(printed.draws) > 1.5
    assert abs(np.mean(consistent.draws) - 0.5772) < 0.25
    assert consistent.ks_stat < printed.ks_stat
