"""Product-integration weights for memory convolutions.

The kernels here have a boundary layer of width 1/omega0 followed by a
slow t^(-3/2) tail, and useful step sizes sit far above the layer.
Sampling the kernel on the step grid would miss the layer entirely, so
each cell's kernel moments are integrated exactly (adaptive quadrature
on the first cell, fixed-order Gauss elsewhere) and only the smooth
unknown is interpolated linearly within cells. The resulting scheme is
second order in the step size.

With moments m0[i] = int_cell G and m1[i] = int_cell (u - t_i) G du,
the convolution at t_{k+1} of G against a piecewise-linear A is

    (1/h) * [ sum_{j=0..k}   A_j     * m1[k-j]
            + sum_{j=0..k}   A_{j+1} * (h*m0[k-j] - m1[k-j]) ].

``history_convolution`` returns everything except the A_{k+1} term;
its coefficient is ``implicit_coefficient``.
"""

from __future__ import annotations

from typing import Callable

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.integrate import quad

KernelFn = Callable[[np.ndarray], np.ndarray]

_GAUSS_ORDER = 12


def kernel_cell_moments(
    kernel: KernelFn, n_cells: int, dt: float
) -> tuple[np.ndarray, np.ndarray]:
    """Zeroth and first moments of the kernel over each grid cell.

    The first cell contains the boundary layer and uses adaptive
    quadrature on real and imaginary parts separately; later cells see
    a smooth kernel and use fixed Gauss-Legendre nodes, vectorized over
    all cells at once.
    """
    if n_cells < 1 or dt <= 0:
        raise ValueError("need n_cells >= 1 and dt > 0")
    m0 = np.zeros(n_cells, dtype=complex)
    m1 = np.zeros(n_cells, dtype=complex)

    def _quad_c(f, a, b):
        re = quad(lambda u: f(np.asarray([u]))[0].real, a, b, limit=400)[0]
        im = quad(lambda u: f(np.asarray([u]))[0].imag, a, b, limit=400)[0]
        return re + 1j * im

    m0[0] = _quad_c(kernel, 0.0, dt)
    m1[0] = _quad_c(lambda u: u * kernel(u), 0.0, dt)
    if n_cells > 1:
        xg, wg = leggauss(_GAUSS_ORDER)
        offsets = (xg + 1.0) * dt / 2.0
        left = np.arange(1, n_cells) * dt
        nodes = left[:, None] + offsets[None, :]
        vals = kernel(nodes.ravel()).reshape(nodes.shape)
        m0[1:] = vals @ wg * (dt / 2.0)
        m1[1:] = vals @ (wg * offsets) * (dt / 2.0)
    return m0, m1


def implicit_coefficient(m0: np.ndarray, m1: np.ndarray, dt: float) -> complex:
    """Coefficient of the newest sample in the cell-0 contribution."""
    return m0[0] - m1[0] / dt


def history_convolution(
    values: np.ndarray, m0: np.ndarray, m1: np.ndarray, dt: float, k: int
) -> complex:
    """Convolution at t_{k+1} excluding the (unknown) values[k+1] term.

    ``values[: k + 1]`` must be filled.
    """
    conv = np.dot(values[: k + 1], m1[k::-1])
    if k >= 1:
        conv += np.dot(values[1 : k + 1], dt * m0[k:0:-1] - m1[k:0:-1])
    return conv / dt
