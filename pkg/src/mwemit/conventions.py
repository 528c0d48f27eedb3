"""Sign and normalization conventions, pinned in one place.

Every choice below is forced by requiring that closed forms, quadrature
oracles, and the independent solvers agree with each other; docs/derivations.md
works through the algebra. The CSV provenance header embeds a hash of
this text so data files record which conventions produced them.
"""

from __future__ import annotations

import hashlib

CONVENTIONS = """\
mwemit conventions, v1

1. Reservoir kernel: G(t) = Omega^2 e^{i Delta t} (1 + i omega0 t)^{-3/2},
   the Gaussian k-integral of the site-continuum couplings. Long times:
   G -> -alpha_k e^{i(Delta t + pi/4)} t^{-3/2}, alpha_k = Omega^2/omega0^{3/2}.
2. Displaced sites: multiply by e^{-r^2/(4 X0^2 (1 + i omega0 t))} e^{-i k_L . r};
   the exponent is negative real at t = 0 (Gaussian overlap of two sites).
3. Amplitude equation: dA/dt = -int_0^t G(t-s) A(s) ds. Resolvent
   normalization alpha = 2 sqrt(pi) alpha_k; amplitude rate
   Gamma0 = alpha sqrt(Delta) above the band; populations decay at 2 Gamma0.
4. Dressed detuning: the integrated kernel weight at Delta = 0 equals
   -2i Omega^2/omega0, a downward shift of the trapped level. Detunings are
   quoted from the shifted level; finite-trap propagation carries the exact
   counter-term -i(2 Omega^2/omega0) A.
5. Pair rates (time integral of the displaced kernel), n = r/d0 > 0:
   Delta > 0: Gamma_n = Gamma0 xi/n (sin(n/xi) - i cos(n/xi)) e^{-i k_L . r}
   Delta < 0: Gamma_n = -i |Gamma0| xi/n e^{-n/xi} e^{-i k_L . r}
   Diagonal: Gamma0 (Delta > 0) or 0 (Delta < 0); the divergent on-site
   shift is absorbed into Delta per item 4.
6. Spin-spin coupling below the band: J_ij = -|Gamma0| xi e^{-n/xi}/n <= 0
   (attractive Yukawa), i.e. J = i conj(Gamma) under item 5's rate sign.
7. Collective kernel: G_coll(t) = sum over all separations from a reference
   site (minimum image when periodic), self term included.
8. Mean-field equations: dy/dt = z(t) Q(t) - i(2 Omega^2/omega0) y(t),
   dz/dt = -4 Re[conj(y(t)) Q(t)], Q(t) = int_0^t G_coll(t-s) y(s) ds.
   These conserve |y|^2 + z^2/4 exactly and reduce, for z near -1, to the
   single-emitter resolvent with kernel G_coll.
9. Emission rate: R(t) = -(1/2) sum_j dz_j/dt, computed from the analytic
   right-hand side; R(0) = 2 M Gamma0 for the fully inverted array.
"""


def conventions_hash() -> str:
    """Stable short hash of the convention text for provenance headers."""
    return hashlib.sha256(CONVENTIONS.encode()).hexdigest()[:16]
