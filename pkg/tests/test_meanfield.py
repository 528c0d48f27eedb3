"""Driven condensate polarization dynamics."""

import dataclasses

import numpy as np
import pytest

from mwemit.kernels import collective_kernel_fn, level_shift
from mwemit.lattice import lattice_for
from mwemit.meanfield import (
    MAX_HISTORY_STEPS,
    MeanFieldTrajectory,
    bloch_invariant,
    polarization_summary,
    solve_meanfield,
)
from mwemit.params import ModelParams, derive
from mwemit.single_emitter import solve_volterra


def small_setup(m: int = 8):
    base = ModelParams()
    p = dataclasses.replace(base, spacing=10.0 * derive(base).x0, shape=(m,))
    return p, lattice_for(p)


def test_zero_seed_is_exact_fixed_point():
    p, lat = small_setup()
    traj = solve_meanfield(p, lat, y0=0.0, z0=1.0, t_max=5.0, dt=0.05)
    assert np.all(traj.y == 0.0)
    assert np.all(traj.z == 1.0)


def test_global_phase_covariance():
    # multiplying the seed by a phase rotates y and leaves z unchanged
    p, lat = small_setup()
    phase = np.exp(0.7j)
    t1 = solve_meanfield(p, lat, y0=1e-3, z0=0.5, t_max=40.0, dt=0.25)
    t2 = solve_meanfield(p, lat, y0=1e-3 * phase, z0=0.5, t_max=40.0, dt=0.25)
    np.testing.assert_allclose(t2.y, t1.y * phase, rtol=1e-12)
    np.testing.assert_allclose(t2.z, t1.z, atol=1e-12)


def test_bloch_invariant_drift():
    p, lat = small_setup()
    traj = solve_meanfield(p, lat, y0=0.3, z0=0.5, t_max=50.0, dt=0.05)
    inv = bloch_invariant(traj)
    assert np.max(np.abs(inv - inv[0])) < 1e-6


def test_linearized_limit_is_single_amplitude_equation():
    # near z = -1 the polarization obeys the memory equation with the
    # row-summed kernel; compare against the independent Volterra solver
    p, lat = small_setup()
    y0 = 1e-3
    traj = solve_meanfield(p, lat, y0=y0, z0=-1.0, t_max=30.0, dt=0.05)
    kernel = collective_kernel_fn(p, lat)
    ref = solve_volterra(kernel, 30.0, 0.05, linear=-1j * level_shift(p))
    assert len(ref.series.values) == len(traj.y)
    dev = np.max(np.abs(traj.y - y0 * ref.series.values)) / y0
    assert dev < 1e-3


def test_validation_errors():
    p, lat = small_setup(4)
    with pytest.raises(ValueError, match=r"\|y0\| <= 1"):
        solve_meanfield(p, lat, y0=1.5, z0=0.0, t_max=1.0, dt=0.1)
    with pytest.raises(ValueError, match=r"\|y0\| <= 1"):
        solve_meanfield(p, lat, y0=0.0, z0=-2.0, t_max=1.0, dt=0.1)
    with pytest.raises(ValueError, match="positive"):
        solve_meanfield(p, lat, y0=0.1, z0=0.0, t_max=-1.0, dt=0.1)
    with pytest.raises(ValueError, match="positive"):
        solve_meanfield(p, lat, y0=0.1, z0=0.0, t_max=1.0, dt=0.0)
    with pytest.raises(ValueError, match="steps"):
        solve_meanfield(p, lat, y0=0.1, z0=0.0, t_max=float(MAX_HISTORY_STEPS), dt=0.5)


def _synthetic(y, z, t=None):
    n = len(y)
    if t is None:
        t = np.linspace(0.0, 10.0, n)
    return MeanFieldTrajectory(times=t, y=np.asarray(y, complex), z=np.asarray(z, float))


def test_summary_of_steady_trajectory():
    y = np.full(50, 0.2 + 0.1j)
    z = np.full(50, -0.3)
    s = polarization_summary(_synthetic(y, z))
    assert s.converged
    assert s.y_st == pytest.approx(0.2 + 0.1j, rel=1e-12)
    assert s.z_st == pytest.approx(-0.3, rel=1e-12)


def test_summary_of_drifting_trajectory():
    t = np.linspace(0.0, 10.0, 200)
    y = 0.1 * np.exp(0.3 * t) * (1.0 + 0j)
    z = 1.0 - 0.15 * t
    s = polarization_summary(_synthetic(y, z, t))
    assert not s.converged


def test_summary_preserves_phase_of_rotating_tail():
    t = np.linspace(0.0, 10.0, 400)
    y = 0.25 * np.exp(-0.4j * t)
    z = np.full_like(t, 0.1)
    s = polarization_summary(_synthetic(y, z, t))
    assert abs(s.y_st) == pytest.approx(0.25, rel=1e-9)
    assert np.angle(s.y_st) == pytest.approx(np.angle(y[-1]), abs=1e-9)


def test_summary_rejects_short_trajectory():
    with pytest.raises(ValueError, match="too short"):
        polarization_summary(_synthetic(np.zeros(5), np.zeros(5)))
