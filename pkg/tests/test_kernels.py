"""Memory kernels, closed-form pair rates, and their quadrature cross-check."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.integrate import quad

import mwemit.kernels as kernels
from mwemit.errors import QuadratureError
from mwemit.kernels import (
    ComplexSeries,
    collective_kernel_fn,
    kernel_collective,
    kernel_full,
    kernel_ideal,
    kernel_pair,
    level_shift,
    rate_markov,
    rate_pair,
    rate_pair_numeric,
)
from mwemit.lattice import lattice_for
from mwemit.params import ModelParams, derive

P_ABOVE = ModelParams(detuning=0.16, trap=200.0, spacing=5.0)
P_BELOW = ModelParams(detuning=-0.16, trap=200.0, spacing=5.0)


def test_full_kernel_at_zero():
    p = ModelParams()
    t = np.array([0.0])
    assert kernel_full(p, t)[0] == pytest.approx(p.rabi**2, rel=1e-14)


def test_pair_kernel_reduces_to_full_at_zero_separation():
    t = np.linspace(0.0, 2.0, 41)
    full = kernel_full(P_ABOVE, t)
    pair = kernel_pair(P_ABOVE, np.zeros(3), t)
    np.testing.assert_allclose(pair, full, rtol=1e-13)


def test_ideal_kernel_long_time_limit():
    # the finite-trap kernel approaches the ideal one for omega0 t >> 1
    p = ModelParams()
    d = derive(p)
    t = np.array([1e4 / p.trap])
    ideal = kernel_ideal(d.alpha_kernel, p.detuning, t)[0]
    rel = abs(kernel_full(p, t)[0] - ideal) / abs(ideal)
    assert rel < 2e-4


def test_ideal_kernel_rejects_nonpositive_time():
    with pytest.raises(ValueError):
        kernel_ideal(1.0, 0.5, np.array([0.0, 1.0]))


def test_level_shift_is_zero_detuning_kernel_integral():
    # S0 = i * int_0^inf G(t)|_{Delta=0} dt, evaluated numerically
    p = ModelParams()

    def g(t, part):
        v = kernel_full(p, np.asarray([t]))[0]
        return v.real if part == "re" else v.imag

    re, _ = quad(g, 0.0, np.inf, args=("re",), limit=800)
    im, _ = quad(g, 0.0, np.inf, args=("im",), limit=800)
    integral = re + 1j * im
    s0 = level_shift(p)
    assert s0 == pytest.approx((1j * integral).real, rel=1e-6)
    assert abs((1j * integral).imag) < 1e-8
    assert s0 == pytest.approx(2.0 * p.rabi**2 / p.trap, rel=1e-14)


def test_markov_rate_frozen():
    d = derive(P_ABOVE)
    assert rate_markov(P_ABOVE) == pytest.approx(d.alpha * math.sqrt(0.16), rel=1e-14)
    with pytest.raises(ValueError, match="Delta > 0"):
        rate_markov(P_BELOW)
    with pytest.raises(ValueError, match="Delta > 0"):
        rate_markov(ModelParams())


def test_pair_rate_above_band_closed_form():
    # Gamma0 * (sin(x) - i cos(x)) / x with x = k0 |r|
    d = derive(P_ABOVE)
    for n_cells in (1, 2, 5):
        r = np.array([n_cells * P_ABOVE.spacing, 0.0, 0.0])
        x = d.k0 * np.linalg.norm(r)
        expected = d.gamma0 * (np.sin(x) - 1j * np.cos(x)) / x
        got = rate_pair(P_ABOVE, r)
        assert got.value == pytest.approx(expected, rel=1e-13)
        assert got.method == "closed_form"


def test_pair_rate_below_band_closed_form():
    d = derive(P_BELOW)
    r = np.array([0.0, 10.0, 0.0])
    x = d.k0 * 10.0
    expected = -1j * d.gamma0_abs * np.exp(-x) / x
    got = rate_pair(P_BELOW, r)
    assert got.value == pytest.approx(expected, rel=1e-13)
    assert got.value.real == 0.0


def test_pair_rate_below_band_frozen():
    got = rate_pair(P_BELOW, np.array([5.0, 0.0, 0.0]))
    assert got.value == pytest.approx(-3.392352475160882e-05j, rel=1e-12)


def test_pair_rate_laser_phase():
    k_l = (0.3, 0.0, 0.0)
    p = ModelParams(detuning=0.16, trap=200.0, spacing=5.0, laser_k=k_l)
    r = np.array([5.0, 0.0, 0.0])
    base = rate_pair(P_ABOVE, r).value
    assert rate_pair(p, r).value == pytest.approx(base * np.exp(-1.5j), rel=1e-13)


def test_pair_rate_rejects_degenerate_input():
    with pytest.raises(ValueError, match="Delta = 0"):
        rate_pair(ModelParams(trap=200.0, spacing=5.0), np.array([5.0, 0.0, 0.0]))
    with pytest.raises(ValueError, match=r"\|r\| > 0"):
        rate_pair(P_ABOVE, np.zeros(3))


@pytest.mark.parametrize("p", [P_ABOVE, P_BELOW], ids=["above", "below"])
@pytest.mark.parametrize("n_cells", [1, 3, 8])
def test_pair_rate_quadrature_agrees(p, n_cells):
    r = np.array([n_cells * p.spacing, 0.0, 0.0])
    closed = rate_pair(p, r)
    numeric = rate_pair_numeric(p, r)
    assert numeric.method == "quadrature"
    # the reported bound is an estimate, give it 2x headroom
    tol = max(2.0 * numeric.error_bound, 2e-3 * abs(closed.value))
    assert abs(numeric.value - closed.value) <= tol


def test_pair_rate_quadrature_below_band_is_imaginary():
    numeric = rate_pair_numeric(P_BELOW, np.array([5.0, 0.0, 0.0]))
    assert numeric.value.real == 0.0


def test_pair_rate_quadrature_error_bound_enforced():
    with pytest.raises(QuadratureError) as exc_info:
        rate_pair_numeric(P_ABOVE, np.array([5.0, 0.0, 0.0]), tol=1e-16)
    assert exc_info.value.error_bound is not None
    assert exc_info.value.error_bound > 0.0


def test_collective_kernel_matches_pair_sum():
    p = ModelParams(
        detuning=0.16, trap=200.0, spacing=5.0, dim=2, shape=(3, 2), laser_k=(0.1, -0.2, 0.0)
    )
    lat = lattice_for(p)
    fn = collective_kernel_fn(p, lat)
    t = np.linspace(0.01, 3.0, 17)
    expected = np.zeros_like(t, dtype=complex)
    for disp in lat.displacements_from(0):
        expected += kernel_pair(p, disp, t)
    np.testing.assert_allclose(fn(t), expected, rtol=1e-13)
    # self term is present: at t = 0 every pair term is damped except r = 0
    assert abs(fn(np.array([0.0]))[0]) >= abs(kernel_full(p, np.array([0.0]))[0]) * 0.5


def test_collective_kernel_chunking_equivalent(monkeypatch):
    p = ModelParams(detuning=0.16, trap=200.0, spacing=5.0, shape=(4,))
    lat = lattice_for(p)
    t = np.linspace(0.01, 2.0, 9)
    whole = collective_kernel_fn(p, lat)(t)
    monkeypatch.setattr(kernels, "_CHUNK_ENTRIES", 5)
    chunked = collective_kernel_fn(p, lat)(t)
    # different chunk sizes take different BLAS paths: ulp-level agreement only
    np.testing.assert_allclose(chunked, whole, rtol=1e-13)
    # reruns at a fixed chunk size are bit-identical
    np.testing.assert_array_equal(collective_kernel_fn(p, lat)(t), chunked)


def test_kernel_collective_series():
    p = ModelParams(detuning=0.16, trap=200.0, spacing=5.0, shape=(3,))
    lat = lattice_for(p)
    t = np.linspace(0.0, 1.0, 11)
    series = kernel_collective(p, lat, t)
    assert isinstance(series, ComplexSeries)
    assert series.t0 == 0.0
    assert series.dt == pytest.approx(0.1, rel=1e-12)
    np.testing.assert_allclose(series.times, t, atol=1e-15)
    np.testing.assert_allclose(series.values, collective_kernel_fn(p, lat)(t), rtol=1e-13)
    with pytest.raises(ValueError):
        kernel_collective(p, lat, np.array([0.0, 0.1, 0.3]))  # non-uniform
    with pytest.raises(ValueError):
        kernel_collective(p, lat, np.array([0.5]))  # too short


def test_complex_series_validation():
    with pytest.raises(ValueError):
        ComplexSeries(0.0, -0.1, np.zeros(3, dtype=complex))
    with pytest.raises(ValueError):
        ComplexSeries(0.0, 0.1, np.zeros(0, dtype=complex))
    s = ComplexSeries(1.0, 0.5, np.zeros(3, dtype=complex))
    np.testing.assert_allclose(s.times, [1.0, 1.5, 2.0])


@given(
    sep=st.floats(0.5, 50.0),
    t=st.floats(0.01, 20.0),
    detuning=st.floats(-2.0, 2.0),
)
@settings(max_examples=80, deadline=None)
def test_pair_kernel_bounded_by_onsite(sep, t, detuning):
    # propagation to finite separation can only lose amplitude
    p = ModelParams(detuning=detuning, trap=200.0, spacing=5.0)
    ts = np.array([t])
    pair = kernel_pair(p, np.array([sep, 0.0, 0.0]), ts)[0]
    full = kernel_full(p, ts)[0]
    assert abs(pair) <= abs(full) * (1.0 + 1e-12)
