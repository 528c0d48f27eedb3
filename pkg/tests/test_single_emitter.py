"""Resolvent poles, branch-cut integral, Volterra marching, bound state."""

import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from mwemit.kernels import kernel_ideal
from mwemit.params import ModelParams, derive
from mwemit.single_emitter import (
    amplitude_analytic,
    amplitude_volterra,
    bound_state_params,
    bound_state_profile,
    branch_integral,
    classify_single_regime,
    laplace_roots,
    solve_volterra,
    steady_population,
    volterra_plateau,
)

# alpha = 1, detuning = -8: r1 = (-1 + sqrt(33))/2, real_pole regime
R1_MINUS8 = (-1.0 + math.sqrt(33.0)) / 2.0
C1_MINUS8 = 2.0 * R1_MINUS8 / math.sqrt(33.0)


class TestLaplaceRoots:
    def test_real_pole_frozen(self):
        sol = laplace_roots(1.0, -8.0)
        assert sol.regime == "real_pole"
        assert sol.r1 == pytest.approx(R1_MINUS8, rel=1e-14)
        assert sol.r1.imag == 0.0
        assert sol.c1 == pytest.approx(C1_MINUS8, rel=1e-14)
        assert sol.c1 == pytest.approx(0.8259223440443022, rel=1e-12)
        assert sol.plateau == pytest.approx(0.6821477183916347, rel=1e-12)
        assert sol.pole_amplitude_rate == 0.0

    def test_complex_pole_frozen(self):
        sol = laplace_roots(1.0, 8.0)
        assert sol.regime == "complex_pole"
        assert sol.r1 == pytest.approx(-0.5 - 2.7838821814150108j, rel=1e-14)
        assert sol.c1 == pytest.approx(1.0 - 0.1796053020267749j, rel=1e-12)
        assert sol.pole_amplitude_rate == pytest.approx(math.sqrt(7.75), rel=1e-13)
        assert sol.plateau == 0.0

    @pytest.mark.parametrize("detuning", [0.0, 0.2, 0.5])
    def test_no_pole_window(self, detuning):
        # 0 <= Delta <= alpha^2/2 leaves no pole on the physical sheet
        sol = laplace_roots(1.0, detuning)
        assert sol.regime == "no_pole"
        assert sol.c1 == 0.0
        assert sol.plateau == 0.0

    def test_rejects_nonpositive_alpha(self):
        with pytest.raises(ValueError):
            laplace_roots(0.0, 1.0)
        with pytest.raises(ValueError):
            laplace_roots(-1.0, 1.0)

    @given(alpha=st.floats(0.05, 20.0), detuning=st.floats(-50.0, 50.0))
    @settings(max_examples=150, deadline=None)
    def test_vieta_and_regimes(self, alpha, detuning):
        ratio = detuning / alpha**2
        assume(abs(ratio) > 1e-6)
        assume(abs(ratio - 0.5) > 1e-6)
        sol = laplace_roots(alpha, detuning)
        assert sol.r1 + sol.r2 == pytest.approx(-alpha, rel=1e-10)
        assert sol.r1 * sol.r2 == pytest.approx(detuning, rel=1e-9, abs=1e-12)
        if detuning < 0:
            assert sol.regime == "real_pole"
            assert sol.r1.imag == 0.0 and sol.r1.real > 0
            assert sol.plateau == pytest.approx(abs(sol.c1) ** 2, rel=1e-12)
        elif ratio < 0.5:
            assert sol.regime == "no_pole"
        else:
            assert sol.regime == "complex_pole"
            # physical sheet: Re(e^{i pi/4} r) > 0
            assert (np.exp(1j * np.pi / 4) * sol.r1).real > 0

    @given(alpha=st.floats(0.1, 10.0), ratio=st.floats(-10.0, 10.0))
    @settings(max_examples=80, deadline=None)
    def test_scale_covariance(self, alpha, ratio):
        assume(abs(ratio) > 1e-6 and abs(ratio - 0.5) > 1e-6)
        base = laplace_roots(1.0, ratio)
        scaled = laplace_roots(alpha, ratio * alpha**2)
        assert scaled.regime == base.regime
        assert scaled.r1 == pytest.approx(alpha * base.r1, rel=1e-10, abs=1e-12)
        assert scaled.c1 == pytest.approx(base.c1, rel=1e-10, abs=1e-12)


class TestBranchIntegral:
    @pytest.mark.parametrize("detuning", [-8.0, -1.0, 0.2, 8.0])
    def test_completeness_at_t_zero(self, detuning):
        # pole residue plus cut contribution reconstruct A(0) = 1
        sol = laplace_roots(1.0, detuning)
        cut = branch_integral(1.0, detuning, 0.0)
        assert sol.c1 + cut == pytest.approx(1.0, abs=2e-7)

    def test_frozen_values(self):
        assert branch_integral(1.0, -8.0, 0.0) == pytest.approx(
            0.174077655955698, rel=1e-6
        )
        assert branch_integral(1.0, 8.0, 0.0) == pytest.approx(
            0.179605302026775j, rel=1e-6, abs=1e-9
        )

    def test_rejects_negative_time(self):
        with pytest.raises(ValueError):
            branch_integral(1.0, -8.0, -0.1)

    def test_late_time_power_law(self):
        # cut term decays as t^(-3/2)
        i1 = branch_integral(1.0, -1.0, 200.0)
        i2 = branch_integral(1.0, -1.0, 400.0)
        assert abs(i1) / abs(i2) == pytest.approx(2.0**1.5, rel=0.05)


class TestSolveVolterra:
    def test_constant_kernel_cosine(self):
        # A'' + c A = 0 with A(0)=1, A'(0)=0: A(t) = cos(sqrt(c) t)
        c = 4.0
        dt = 0.01
        t_max = 3.0
        res = solve_volterra(lambda t: np.full_like(t, c, dtype=complex), t_max, dt)
        t = res.series.times
        exact = np.cos(2.0 * t)
        err = np.max(np.abs(res.series.values - exact))
        assert err < 3e-4
        assert res.richardson_ratio == pytest.approx(4.0, abs=1.0)
        assert 0.5 * err <= res.error_estimate <= 2.0 * err

    def test_pure_phase_rotation(self):
        # zero kernel, linear term only: A(t) = e^{-2 i t}
        res = solve_volterra(lambda t: np.zeros_like(t, dtype=complex), 2.0, 0.005, linear=-2.0j)
        exact = np.exp(-2.0j * res.series.times)
        assert np.max(np.abs(np.abs(res.series.values) - 1.0)) < 5e-4
        assert np.max(np.abs(res.series.values - exact)) < 1e-3

    def test_warns_on_growth(self):
        with pytest.warns(UserWarning, match="exceeds 1.02"):
            solve_volterra(lambda t: np.full_like(t, -1.0, dtype=complex), 3.0, 0.01)

    def test_rejects_bad_grid(self):
        with pytest.raises(ValueError):
            solve_volterra(lambda t: np.zeros_like(t, dtype=complex), 0.0, 0.01)
        with pytest.raises(ValueError):
            solve_volterra(lambda t: np.zeros_like(t, dtype=complex), 1.0, -0.1)


class TestAmplitude:
    def test_analytic_matches_volterra_ideal_kernel(self):
        # finite but stiff trap: omega0/Omega = 100 at Delta = -alpha^2
        p0 = ModelParams(rabi=1.0, trap=100.0)
        d = derive(p0)
        detuning = -d.alpha**2
        p = ModelParams(rabi=1.0, trap=100.0, detuning=detuning)
        res = amplitude_volterra(p, t_max=10.0 / d.alpha**2, dt=0.01 / d.alpha**2)
        t = res.series.times
        exact = amplitude_analytic(d.alpha, detuning, t[1:]).values
        dev = np.max(np.abs(np.abs(res.series.values[1:]) ** 2 - np.abs(exact) ** 2))
        assert dev < 5e-3

    def test_analytic_t0(self):
        a0 = amplitude_analytic(1.0, -8.0, np.array([0.0, 1.0])).values[0]
        assert a0 == pytest.approx(1.0, abs=2e-7)


class TestPlateau:
    def _params(self, ratio: float) -> ModelParams:
        a2 = derive(ModelParams(rabi=1.0, trap=50.0)).alpha ** 2
        return ModelParams(rabi=1.0, trap=50.0, detuning=ratio * a2)

    def test_matches_pole_residue(self):
        p = self._params(-8.0)
        a2 = derive(p).alpha ** 2
        got = volterra_plateau(p, t_max=50.0 / a2, dt=0.008 / a2)
        # finite trap shifts the ideal 0.68215 down by ~4e-3 at omega0 = 50 Omega
        assert got == pytest.approx(0.6821477183916347, abs=1e-2)
        assert got == pytest.approx(0.67845740791448, abs=1e-3)

    def test_rejects_other_regimes(self):
        with pytest.raises(ValueError, match="real_pole"):
            volterra_plateau(self._params(8.0))
        with pytest.raises(ValueError, match="real_pole"):
            volterra_plateau(self._params(0.2))

    def test_steady_population(self):
        assert steady_population(1.0, -3.0) == pytest.approx(0.5222228806978478, rel=1e-12)
        assert steady_population(1.0, 8.0) == 0.0
        assert steady_population(1.0, 0.3) == 0.0


class TestBoundState:
    P = ModelParams(rabi=1.0, trap=100.0, detuning=-8.0, mass=0.5)

    def test_frozen_profile_params(self):
        sol = laplace_roots(1.0, -8.0)
        bs = bound_state_params(self.P, sol)
        assert bs.k0e == pytest.approx(1j * math.sqrt(16.0 - R1_MINUS8), rel=1e-12, abs=1e-12)
        assert bs.k0e.imag == pytest.approx(3.691574010734579, rel=1e-12)
        assert bs.localization_length == pytest.approx(0.2708871600818893, rel=1e-12)
        assert bs.time_decay_rate == 0.0
        assert bs.amplitude_prefactor > 0.0

    def test_decaying_bound_component(self):
        # complex_pole regime: the pole amplitude decays in time
        sol = laplace_roots(1.0, 8.0)
        bs = bound_state_params(self.P, sol)
        assert bs.time_decay_rate == pytest.approx(math.sqrt(7.75), rel=1e-12)

    def test_rejects_no_pole(self):
        with pytest.raises(ValueError, match="no pole"):
            bound_state_params(self.P, laplace_roots(1.0, 0.2))

    def test_profile_shape(self):
        sol = laplace_roots(1.0, -8.0)
        bs = bound_state_params(self.P, sol)
        r = np.linspace(0.05, 2.0, 40)
        dens = np.array([bound_state_profile(self.P, sol, ri, t=0.0) for ri in r])
        assert np.all(dens > 0)
        assert np.all(np.diff(dens) < 0)
        # strip the 1/r^2 and exponential factors: what remains is constant
        flat = dens * r**2 * np.exp(bs.k0e.imag * r)
        np.testing.assert_allclose(flat, flat[0], rtol=1e-12)
        with pytest.raises(ValueError):
            bound_state_profile(self.P, sol, 0.0, t=0.0)

    def test_profile_decays_in_time(self):
        sol = laplace_roots(1.0, 8.0)
        d0 = bound_state_profile(self.P, sol, 1.0, t=0.0)
        d1 = bound_state_profile(self.P, sol, 1.0, t=0.5)
        rate = bound_state_params(self.P, sol).time_decay_rate
        assert d1 == pytest.approx(d0 * math.exp(-rate * 0.5), rel=1e-12)


class TestRegimeLabels:
    def test_thresholds(self):
        assert classify_single_regime(1.0, -0.05) == "bound"
        assert classify_single_regime(1.0, 26.0) == "markovian"
        assert classify_single_regime(1.0, 0.4) == "strong_nonmarkov"
        assert classify_single_regime(1.0, 5.0) == "quasi_markov"
        with pytest.raises(ValueError):
            classify_single_regime(0.0, 5.0)


def test_kernel_ideal_is_volterra_kernel_limit():
    # consistency of the scaling used throughout: alpha = 2 sqrt(pi) alpha_k
    p = ModelParams(rabi=1.0, trap=100.0)
    d = derive(p)
    assert d.alpha == pytest.approx(2.0 * math.sqrt(math.pi) * d.alpha_kernel, rel=1e-14)
    t = np.array([3.7])
    val = kernel_ideal(d.alpha_kernel, 0.0, t)[0]
    assert val == pytest.approx(-d.alpha_kernel * np.exp(1j * np.pi / 4) * 3.7**-1.5, rel=1e-14)
