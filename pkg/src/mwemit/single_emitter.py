"""Decay of a single trapped emitter coupled to the untrapped band.

Two independent routes to the amplitude A(t) with A(0) = 1:

* `amplitude_analytic`: Laplace inversion of the ideal-band resolvent
  1/(s + alpha e^{i pi/4} sqrt(s - i Delta)). Poles sit at
  s = i (r^2 + Delta) for roots of r^2 + alpha r + Delta = 0 that lie
  on the physical sheet (Re e^{i pi/4} r > 0); the cut along
  s = i Delta - x contributes `branch_integral`.
* `solve_volterra`: direct product-trapezoidal integration of
  dA/dt = linear * A - int_0^t G(t - tau) A(tau) dtau for any finite
  kernel. Kernel moments are integrated exactly per cell
  (see `memory`), so dt only needs to resolve A, not the kernel's
  initial layer.

The two must agree in |A|^2 wherever both apply; that cross-check is
the main guard against sign mistakes in either route.

Rate units: alpha has dimension time^{-1/2}, so 1/alpha^2 is the
natural timescale and detunings are quoted as Delta/alpha^2.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import ConvergenceError, QuadratureError
from .kernels import ComplexSeries, kernel_full, level_shift
from .memory import history_convolution, implicit_coefficient, kernel_cell_moments
from .params import ModelParams, derive

__all__ = [
    "LaplaceSolution",
    "BoundStateProfile",
    "VolterraResult",
    "laplace_roots",
    "branch_integral",
    "amplitude_analytic",
    "solve_volterra",
    "amplitude_volterra",
    "volterra_plateau",
    "steady_population",
    "bound_state_params",
    "bound_state_profile",
    "classify_single_regime",
    "MARKOVIAN_THRESHOLD",
    "STRONG_NONMARKOV_THRESHOLD",
]

# Regime boundaries in units of alpha^2. Above 25 the pole rate
# alpha sqrt(Delta - alpha^2/4) is within 0.5% of the Markov rate
# alpha sqrt(Delta); below 1/2 no pole exists at all.
MARKOVIAN_THRESHOLD = 25.0
STRONG_NONMARKOV_THRESHOLD = 0.5


@dataclass(frozen=True)
class LaplaceSolution:
    """Pole data of the single-emitter resolvent.

    regime is one of 'no_pole' (0 <= Delta <= alpha^2/2),
    'real_pole' (Delta < 0, undamped trapped fraction) or
    'complex_pole' (Delta > alpha^2/2, damped oscillation). r1 is the
    physical-sheet root when one exists, else the principal root.
    """

    alpha: float
    detuning: float
    regime: str
    r1: complex
    r2: complex
    c1: complex
    plateau: float
    pole_amplitude_rate: float


@dataclass(frozen=True)
class BoundStateProfile:
    """Spatial data of the bound component (real_pole regime).

    localization_length is 1/Im k0e; the radial density is
    (amplitude_prefactor / r)^2 e^{-r / localization_length}.
    """

    k0e: complex
    localization_length: float
    amplitude_prefactor: float
    time_decay_rate: float


@dataclass(frozen=True)
class VolterraResult:
    """Volterra solution plus its built-in step diagnostics.

    error_estimate bounds max_t |A - exact| by Richardson comparison
    with a grid twice as coarse. richardson_ratio is ~4 for smooth
    kernels; kernels with an initial layer show ~2 once phase error
    dominates. Ratios below 1.5 abort the run (None: grid too short to
    form the ratio).
    """

    series: ComplexSeries
    error_estimate: float
    richardson_ratio: float | None


def _physical(r: complex) -> bool:
    return (np.exp(1j * np.pi / 4) * r).real > 0


def laplace_roots(alpha: float, detuning: float) -> LaplaceSolution:
    """Classify the resolvent poles for coupling alpha and detuning Delta.

    Roots of r^2 + alpha r + Delta = 0 are kept only if the mapped root
    e^{i pi/4} r has positive real part (physical sheet). c1 is the
    pole residue 2 r1 / (r1 - r2), zero when no pole survives.
    """
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    root = np.sqrt(complex(alpha * alpha - 4.0 * detuning))
    r_plus = (-alpha + root) / 2.0
    r_minus = (-alpha - root) / 2.0
    physical = [r for r in (r_plus, r_minus) if _physical(r)]
    if len(physical) > 1:  # pragma: no cover - excluded by root sum -alpha < 0
        raise RuntimeError("both roots physical; broken sheet criterion")
    if physical:
        r1 = physical[0]
        r2 = r_plus if r1 is r_minus else r_minus
        c1 = 2.0 * r1 / (r1 - r2)
        if detuning < 0:
            regime, plateau, rate = "real_pole", float(abs(c1) ** 2), 0.0
        else:
            regime, plateau = "complex_pole", 0.0
            rate = alpha * np.sqrt(detuning - alpha * alpha / 4.0)
    else:
        regime, r1, r2, c1, plateau, rate = "no_pole", r_plus, r_minus, 0.0j, 0.0, 0.0
    return LaplaceSolution(
        alpha=alpha,
        detuning=detuning,
        regime=regime,
        r1=complex(r1),
        r2=complex(r2),
        c1=complex(c1),
        plateau=plateau,
        pole_amplitude_rate=float(rate),
    )


def _quad_complex(f, a, b, **kw):
    re, re_err = quad(lambda u: f(u).real, a, b, **kw)
    im, im_err = quad(lambda u: f(u).imag, a, b, **kw)
    return re + 1j * im, re_err + im_err


def branch_integral(alpha: float, detuning: float, t: float) -> complex:
    """Cut contribution to A(t): prefactor times
    int_0^inf dx sqrt(x) e^{(-x + i Delta) t} / ((-x + i Delta)^2 + i alpha^2 x).

    For small t the substitution x = u^2 removes the sqrt endpoint; for
    t >= 1 the substitution x = u/t keeps the e^{-x t} weight on an O(1)
    scale. Relative tolerance 1e-8, else QuadratureError.
    """
    if t < 0:
        raise ValueError("t must be >= 0")
    asq = alpha * alpha

    def denom(x):
        return (-x + 1j * detuning) ** 2 + 1j * asq * x

    if t < 1.0:

        def integrand(u):
            x = u * u
            return 2.0 * u * u * np.exp((-x + 1j * detuning) * t) / denom(x)

        value, err = _quad_complex(integrand, 0.0, np.inf, limit=400, epsabs=1e-13, epsrel=1e-9)
        # Breakpoints are not allowed on infinite intervals; when the
        # single pass struggles, split at the root/coupling scales.
        if err > 1e-8 * max(abs(value), 1e-12):
            hi = 10.0 * max(np.sqrt(abs(detuning)), alpha, 1.0)
            pts = [v for v in (np.sqrt(abs(detuning)), alpha) if 0.0 < v < hi]
            v1, e1 = _quad_complex(integrand, 0.0, hi, limit=400, points=sorted(set(pts)) or None, epsabs=1e-13, epsrel=1e-9)
            v2, e2 = _quad_complex(integrand, hi, np.inf, limit=400, epsabs=1e-13, epsrel=1e-9)
            value, err = v1 + v2, e1 + e2
    else:
        scale = np.exp(1j * detuning * t) / t**1.5

        def integrand(u):
            return np.sqrt(u) * np.exp(-u) / denom(u / t)

        pts = [v for v in (abs(detuning) * t, asq * t) if 0.0 < v < 50.0]
        hi = 50.0
        v1, e1 = _quad_complex(integrand, 0.0, hi, limit=400, points=sorted(set(pts)) or None, epsabs=1e-13, epsrel=1e-9)
        v2, e2 = _quad_complex(integrand, hi, np.inf, limit=200, epsabs=1e-13, epsrel=1e-9)
        value, err = scale * (v1 + v2), abs(scale) * (e1 + e2)

    value *= alpha * np.exp(1j * np.pi / 4) / np.pi
    err *= alpha / np.pi
    if err > 1e-8 * max(abs(value), 1e-10):
        raise QuadratureError(
            f"branch integral at t={t:g} converged only to {err:.2e}", error_bound=err
        )
    return complex(value)


def amplitude_analytic(alpha: float, detuning: float, grid: np.ndarray) -> ComplexSeries:
    """Ideal-band amplitude A(t) on a uniform grid: pole term plus cut term."""
    grid = np.asarray(grid, dtype=float)
    if len(grid) < 2:
        raise ValueError("grid needs at least two points")
    dt = float(grid[1] - grid[0])
    if not np.allclose(np.diff(grid), dt):
        raise ValueError("grid must be uniform")
    sol = laplace_roots(alpha, detuning)
    pole = sol.c1 * np.exp(1j * (sol.r1**2 + detuning) * grid)
    cut = np.array([branch_integral(alpha, detuning, t) for t in grid])
    return ComplexSeries(t0=float(grid[0]), dt=dt, values=pole + cut)


def _march(m0: np.ndarray, m1: np.ndarray, dt: float, n: int, linear: complex) -> np.ndarray:
    """Product-trapezoidal march over n steps; moments per memory module."""
    A = np.empty(n + 1, dtype=complex)
    F = np.empty(n + 1, dtype=complex)
    A[0] = 1.0
    F[0] = linear * A[0]
    # Kernel mass inside the first cell makes the trapezoidal F(0) term
    # wrong across the initial layer; a Born step using the exact cell
    # moments keeps second order from the start.
    A[1] = 1.0 + linear * dt - (dt * m0[0] - m1[0])
    c_new = implicit_coefficient(m0, m1, dt)
    F[1] = linear * A[1] - (history_convolution(A, m0, m1, dt, 0) + A[1] * c_new)
    for k in range(1, n):
        conv = history_convolution(A, m0, m1, dt, k)
        A[k + 1] = (A[k] + dt / 2.0 * (F[k] - conv)) / (1.0 + dt / 2.0 * (c_new - linear))
        F[k + 1] = linear * A[k + 1] - (conv + A[k + 1] * c_new)
    return A


def solve_volterra(
    kernel, t_max: float, dt: float, linear: complex = 0.0j
) -> VolterraResult:
    """Integrate dA/dt = linear A - (G * A)(t) on [0, t_max], A(0) = 1.

    kernel must be finite on [0, t_max] (vectorized over t). The grid is
    dt rounded so the step count is a multiple of 4; companion runs at
    2 dt and 4 dt give the Richardson error estimate and order check.
    Raises ConvergenceError when the coarse/fine error ratio is
    inconsistent with second order.
    """
    if dt <= 0 or t_max <= 0:
        raise ValueError("t_max and dt must be positive")
    n = max(4, 4 * int(np.ceil(t_max / dt / 4.0)))
    h = t_max / n
    m0, m1 = kernel_cell_moments(kernel, n, h)
    A = _march(m0, m1, h, n, linear)

    ratio: float | None = None
    estimate = 0.0
    if n >= 16:
        m0_2, m1_2 = kernel_cell_moments(kernel, n // 2, 2 * h)
        A2 = _march(m0_2, m1_2, 2 * h, n // 2, linear)
        m0_4, m1_4 = kernel_cell_moments(kernel, n // 4, 4 * h)
        A4 = _march(m0_4, m1_4, 4 * h, n // 4, linear)
        e12 = float(np.max(np.abs(A[::2] - A2)))
        e24 = float(np.max(np.abs(A2[::2] - A4)))
        estimate = e12 / 3.0
        if e12 > 1e-14:
            ratio = e24 / e12
            if e12 > 1e-6 and ratio < 1.5:
                raise ConvergenceError(
                    f"refinement ratio {ratio:.2f} (expected ~4); dt={dt:g} is not "
                    "in the second-order regime"
                )
    if np.max(np.abs(A)) > 1.02:
        warnings.warn(
            f"max|A| = {np.max(np.abs(A)):.3f} exceeds 1.02; step likely too coarse",
            stacklevel=2,
        )
    series = ComplexSeries(t0=0.0, dt=h, values=A)
    return VolterraResult(series=series, error_estimate=estimate, richardson_ratio=ratio)


def amplitude_volterra(p: ModelParams, t_max: float, dt: float | None = None) -> VolterraResult:
    """Finite-trap amplitude: kernel_full plus the dressed-level counter-term.

    Detunings in p are quoted from the shifted trapped level, so the
    equation of motion carries linear = -i * level_shift(p). Default
    dt = 0.005/alpha^2; the kernel's initial layer is handled by the
    per-cell moments, not by dt.
    """
    d = derive(p)
    if dt is None:
        dt = 0.005 / d.alpha**2
    return solve_volterra(
        lambda t: kernel_full(p, t), t_max, dt, linear=-1j * level_shift(p)
    )


def volterra_plateau(p: ModelParams, t_max: float | None = None, dt: float | None = None) -> float:
    """Finite-trap steady population, extrapolated to dt -> 0.

    Runs to t_max (default 100/alpha^2), averages |A|^2 over the final
    pole/cut beat period 2 pi / r1^2, and Richardson-combines runs at
    dt and dt/2. Requires the real_pole regime (Delta < 0).
    """
    d = derive(p)
    sol = laplace_roots(d.alpha, p.detuning)
    if sol.regime != "real_pole":
        raise ValueError("plateau extraction needs the real_pole regime (Delta < 0)")
    alpha_sq = d.alpha**2
    if t_max is None:
        t_max = 100.0 / alpha_sq
    if dt is None:
        dt = 0.004 / alpha_sq
    beat = 2.0 * np.pi / sol.r1.real**2

    def tail_mean(step: float) -> float:
        res = amplitude_volterra(p, t_max, step)
        t = res.series.times
        pop = np.abs(res.series.values) ** 2
        keep = t >= t_max - beat
        return float(pop[keep].mean())

    p_full = tail_mean(dt)
    p_half = tail_mean(dt / 2.0)
    return p_half + (p_half - p_full) / 3.0


def steady_population(alpha: float, detuning: float) -> float:
    """Trapped population as t -> infinity: |c1|^2 below the band, else 0."""
    return laplace_roots(alpha, detuning).plateau


def bound_state_params(p: ModelParams, solution: LaplaceSolution) -> BoundStateProfile:
    """Spatial parameters of the bound component; rejects no_pole."""
    if solution.regime == "no_pole":
        raise ValueError("no pole, no bound component")
    d = derive(p)
    k0e = complex(np.sqrt(complex(2.0 * p.mass * (solution.detuning - solution.r1**2))))
    ell = 1.0 / k0e.imag if k0e.imag > 0 else np.inf
    pref = abs(solution.c1) * p.rabi * p.mass * d.x0**3 / (2.0 * np.pi)
    return BoundStateProfile(
        k0e=k0e,
        localization_length=float(ell),
        amplitude_prefactor=float(pref),
        time_decay_rate=float((solution.r1**2).imag),
    )


def bound_state_profile(p: ModelParams, solution: LaplaceSolution, r: float, t: float = 0.0) -> float:
    """Radiated-particle density of the bound component at radius r, time t."""
    if r <= 0:
        raise ValueError("r must be positive")
    prof = bound_state_params(p, solution)
    return float(
        (prof.amplitude_prefactor / r) ** 2
        * np.exp(-prof.k0e.imag * r)
        * np.exp(-prof.time_decay_rate * t)
    )


def classify_single_regime(alpha: float, detuning: float) -> str:
    """Coarse dynamical regime by Delta/alpha^2; thresholds are module constants."""
    if alpha <= 0:
        raise ValueError("alpha must be positive")
    ratio = detuning / alpha**2
    if detuning < 0:
        return "bound"
    if ratio > MARKOVIAN_THRESHOLD:
        return "markovian"
    if ratio <= STRONG_NONMARKOV_THRESHOLD:
        return "strong_nonmarkov"
    return "quasi_markov"
