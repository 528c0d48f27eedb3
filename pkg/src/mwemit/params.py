"""Physical inputs and the scales derived from them.

Conventions (hbar = 1 throughout):

* ``rabi`` (Omega): two-photon coupling between the trapped internal
  state and the untrapped one; the natural frequency unit.
* ``trap`` (omega0): on-site trap frequency. The theory assumes
  Omega << omega0 (single-band regime).
* ``detuning`` (Delta): drive offset from the internal transition,
  measured from the dressed trapped level (see kernels.level_shift).
  Delta > 0 addresses the free-particle band, Delta < 0 the gap.
* ``mass`` (m), ``spacing`` (d0), ``laser_k`` (k_L): atomic mass,
  lattice constant, and drive wavevector.

Derived scales:

=============  =====================  =========================================
field          definition             meaning
=============  =====================  =========================================
x0             (2 m omega0)^(-1/2)    ground-state size of one site
alpha_kernel   Omega^2/omega0^(3/2)   long-time kernel prefactor
alpha          2 sqrt(pi) alpha_k     resolvent normalization
gamma0         alpha sqrt(Delta)      amplitude decay rate, Delta > 0 only
gamma0_abs     alpha sqrt(|Delta|)    rate scale valid for either sign
k0             sqrt(2 m |Delta|)      emitted-wave number
xi             1/(k0 d0)              interaction range in lattice units
chi            M^(1/3) xi^2           optical-depth analogue
=============  =====================  =========================================

gamma0 is an amplitude rate: |A(t)| ~ exp(-gamma0 t) deep in the
Markovian regime, so populations decay at 2*gamma0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field


@dataclass(frozen=True)
class ModelParams:
    """Validated physical inputs for one model instance."""

    rabi: float = 1.0
    trap: float = 50.0
    detuning: float = 0.0
    mass: float = 0.5
    spacing: float = 1.0
    laser_k: tuple[float, float, float] = (0.0, 0.0, 0.0)
    dim: int = 1
    shape: tuple[int, ...] = (1,)

    def __post_init__(self):
        if self.rabi <= 0 or self.trap <= 0 or self.mass <= 0 or self.spacing <= 0:
            raise ValueError("rabi, trap, mass and spacing must be positive")
        if self.dim not in (1, 2, 3):
            raise ValueError(f"dim must be 1, 2 or 3, got {self.dim}")
        if len(self.shape) != self.dim:
            raise ValueError(f"shape {self.shape} does not match dim {self.dim}")
        if any(n < 1 for n in self.shape):
            raise ValueError("shape entries must be >= 1")
        if len(self.laser_k) != 3:
            raise ValueError("laser_k must be a 3-vector")
        if self.rabi / self.trap > 0.1:
            warnings.warn(
                f"rabi/trap = {self.rabi / self.trap:.3g} > 0.1: outside the "
                "weak-coupling regime the single-band reservoir model assumes",
                stacklevel=2,
            )

    @property
    def n_sites(self) -> int:
        return math.prod(self.shape)


@dataclass(frozen=True)
class DerivedParams:
    """Secondary scales; fields that need Delta != 0 may be None."""

    x0: float
    alpha_kernel: float
    alpha: float
    gamma0_abs: float
    gamma0: float | None = None  # amplitude rate, only above the band
    k0: float = 0.0
    xi: float | None = None      # undefined at Delta = 0 (k0 = 0)
    chi: float | None = None
    warnings: tuple[str, ...] = field(default=())


def derive(p: ModelParams) -> DerivedParams:
    """Compute all derived scales from validated inputs. Pure."""
    x0 = (2.0 * p.mass * p.trap) ** -0.5
    alpha_kernel = p.rabi**2 / p.trap**1.5
    alpha = 2.0 * math.sqrt(math.pi) * alpha_kernel
    gamma0_abs = alpha * math.sqrt(abs(p.detuning))
    gamma0 = alpha * math.sqrt(p.detuning) if p.detuning > 0 else None
    k0 = math.sqrt(2.0 * p.mass * abs(p.detuning))
    notes: list[str] = []
    if p.detuning == 0:
        xi = chi = None
        notes.append("xi and chi undefined at Delta = 0 (k0 = 0)")
    else:
        xi = 1.0 / (k0 * p.spacing)
        chi = p.n_sites ** (1.0 / 3.0) * xi**2
    return DerivedParams(
        x0=x0,
        alpha_kernel=alpha_kernel,
        alpha=alpha,
        gamma0_abs=gamma0_abs,
        gamma0=gamma0,
        k0=k0,
        xi=xi,
        chi=chi,
        warnings=tuple(notes),
    )
