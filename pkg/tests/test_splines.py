import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import BSpline

from confband.splines import (
    KernelSpec,
    bl_coefficients,
    bspline_cells,
    bspline_eval,
    kernel_eval,
    scaling_eval,
)


def scipy_bspline(r, x):
    return BSpline.basis_element(np.arange(r + 1), extrapolate=False)(x)


def gram_inverse_sqrt_row(r, size=241):
    """Central row of G^{-1/2}, G_mn = int N_r(x - m) N_r(x - n) dx, by dense eigendecomposition."""
    x, w = np.polynomial.legendre.leggauss(2 * r)
    nodes = (np.arange(r)[:, None] + 0.5 * (x + 1)).ravel()
    weights = np.tile(0.5 * w, r)
    vals = np.nan_to_num(scipy_bspline(r, nodes))
    lags = np.arange(-(r - 1), r)
    auto = {m: float(np.sum(weights * vals * np.nan_to_num(scipy_bspline(r, nodes - m)))) for m in lags}
    idx = np.arange(size)
    diff = idx[:, None] - idx[None, :]
    G = np.vectorize(lambda d: auto.get(d, 0.0))(diff)
    evals, evecs = np.linalg.eigh(G)
    half = evecs @ np.diag(evals**-0.5) @ evecs.T
    c = size // 2
    return half[c], c


@pytest.mark.parametrize("r,x,expected", [(2, 1.0, 1.0), (2, 0.5, 0.5), (3, 1.5, 0.75), (4, 2.0, 2.0 / 3.0), (3, 3.0, 0.0), (1, 0.0, 1.0), (1, 1.0, 0.0)])
def test_bspline_known_values(r, x, expected):
    assert bspline_eval(r, x) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize("r", [1, 2, 3, 4, 5])
def test_bspline_matches_scipy(r):
    # off the knots: scipy closes the last interval of a basis element on the right
    x = np.linspace(-0.5, r + 0.5, 1000) + 1e-7
    ref = np.nan_to_num(scipy_bspline(r, x))
    assert np.max(np.abs(bspline_eval(r, x) - ref)) < 1e-13


@pytest.mark.parametrize("r", [1, 2, 3, 4])
def test_cell_table_reproduces_bspline(r):
    t = np.linspace(0, 1, 101, endpoint=False)
    table = bspline_cells(r)
    for i in range(r):
        assert np.allclose(np.polynomial.polynomial.polyval(t, table[i]), bspline_eval(r, i + t), atol=1e-14)


def test_bspline_rejects_order_zero():
    with pytest.raises(ValueError):
        bspline_eval(0, 0.5)


@settings(max_examples=60, deadline=None)
@given(st.integers(1, 5), st.integers(-50, 50), st.floats(0, 1, exclude_max=True))
def test_bspline_partition_of_unity(r, cell, frac):
    # integer plus fraction keeps every shift x - k exact
    x = cell + frac
    k = np.arange(np.floor(x) - r - 1, np.floor(x) + 2)
    assert abs(np.sum(bspline_eval(r, x - k)) - 1.0) < 1e-12


@pytest.mark.parametrize("r", [2, 3, 4])
def test_coefficients_match_gram_orthonormalisation(r):
    row, c = gram_inverse_sqrt_row(r)
    a = bl_coefficients(r)
    for k in range(-20, 21):
        assert abs(a[k] - row[c + k]) < 1e-9, k


@pytest.mark.parametrize("r,rate", [(2, 0.268), (3, 0.43), (4, 0.535)])
def test_coefficients_symmetric_and_geometric(r, rate):
    a = bl_coefficients(r)
    assert a.lo == -a.hi
    assert np.allclose(a.values, a.values[::-1], atol=1e-15)
    # exact sum is 1; coefficients below 1e-12 were cut, so the tail costs a few 1e-12
    assert np.sum(a.values) == pytest.approx(1.0, abs=1e-10)
    # the fitted ratio is the reciprocal of the root of the B-spline symbol nearest the unit circle
    assert a.decay_rate == pytest.approx(rate, abs=0.04)


@pytest.mark.parametrize("r", [1, 5, 0])
def test_coefficients_reject_unsupported_orders(r):
    with pytest.raises(ValueError):
        bl_coefficients(r)


@pytest.mark.parametrize("r", [2, 3, 4])
def test_scaling_function_matches_bspline_series(r):
    a = bl_coefficients(r)
    x = np.linspace(-8, 8, 777)
    series = sum(a[k] * bspline_eval(r, x - k) for k in range(a.lo, a.hi + 1))
    assert np.max(np.abs(scaling_eval(a, r, x) - series)) < 1e-13


@pytest.mark.parametrize("r", [2, 3, 4])
def test_scaling_function_orthonormal(r):
    spec = KernelSpec.battle_lemarie(r)
    phi = spec.scaling
    lo, hi = phi.support
    x, w = np.polynomial.legendre.leggauss(8)
    nodes = (np.arange(lo, hi)[:, None] + 0.5 * (x + 1)).ravel()
    weights = np.tile(0.5 * w, hi - lo)
    for k in range(-3, 4):
        assert abs(np.sum(weights * phi(nodes) * phi(nodes - k)) - (k == 0)) < 1e-9


def test_scaling_function_zero_off_support(bl3):
    lo, hi = bl3.scaling.support
    assert bl3.scaling(np.array([lo - 0.5, hi + 0.5])).tolist() == [0.0, 0.0]
    assert isinstance(bl3.scaling(0.3), float)


def test_kernel_names_round_trip():
    for name in ("haar", "bl2", "bl3", "bl4", "biweight", "triweight"):
        assert KernelSpec.from_name(name).name == name
    with pytest.raises(ValueError):
        KernelSpec.from_name("daubechies")


def test_haar_kernel_is_same_cell_indicator(haar):
    assert kernel_eval(haar, 0.2, 0.9) == 1.0
    assert kernel_eval(haar, 0.2, 1.0) == 0.0
    assert kernel_eval(haar, -0.5, -0.1) == 1.0


def test_convolution_kernel_is_translation(biweight):
    assert kernel_eval(biweight, 0.3, 0.3) == pytest.approx(15 / 16)
    assert kernel_eval(biweight, 0.0, 1.0) == 0.0


@pytest.mark.parametrize("name", ["bl2", "bl3", "bl4"])
def test_projection_kernel_matches_basis_sum(name):
    spec = KernelSpec.from_name(name)
    rng = np.random.default_rng(3)
    x, y = rng.uniform(-3, 3, 40), rng.uniform(-3, 3, 40)
    ks = np.arange(-60, 61)
    ref = np.sum(spec.scaling(x[:, None] - ks) * spec.scaling(y[:, None] - ks), axis=1)
    assert np.max(np.abs(kernel_eval(spec, x, y) - ref)) < 1e-13


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["bl2", "bl3", "bl4"]), st.floats(-20, 20), st.floats(-3, 3))
def test_projection_kernel_symmetric_and_shift_invariant(name, x, d):
    spec = KernelSpec.from_name(name)
    assert kernel_eval(spec, x, x + d) == pytest.approx(kernel_eval(spec, x + d, x), abs=1e-13)
    assert kernel_eval(spec, x + 1, x + 1 + d) == pytest.approx(kernel_eval(spec, x, x + d), abs=1e-12)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(["bl2", "bl3", "bl4"]), st.floats(-30, 30))
def test_projection_kernel_reproduces_constants(name, x):
    # int K(x, y) dy = sum_k phi(x - k) int phi = 1
    spec = KernelSpec.from_name(name)
    ks = np.arange(np.floor(x) - 50, np.floor(x) + 51)
    assert np.sum(spec.scaling(x - ks)) == pytest.approx(1.0, abs=1e-10)
