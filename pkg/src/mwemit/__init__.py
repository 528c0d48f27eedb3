"""Matter-wave emission from lattice-trapped atoms.

Atoms pinned in an optical lattice and weakly coupled to the untrapped
free-particle continuum behave like emitters in a structured reservoir:
above the band edge they decay, below it they form localized bound
states, and arrays of them develop dipolar couplings, collective decay,
and a mean-field polarization instability.

Subpackage map:

* :mod:`mwemit.params` -- physical inputs and derived scales
* :mod:`mwemit.kernels` -- reservoir correlation functions and pair rates
* :mod:`mwemit.single_emitter` -- one-atom decay (Laplace and Volterra routes)
* :mod:`mwemit.lattice` -- lattices, rate/coupling matrices, single-excitation dynamics
* :mod:`mwemit.semiclassical` -- many-atom emission rate under semiclassical decoupling
* :mod:`mwemit.meanfield` -- non-Markovian mean-field polarization
* :mod:`mwemit.cli` -- reproducible named scenarios with CSV/JSON output

Units: hbar = 1; the Rabi coupling Omega sets the frequency scale and
the lattice spacing d0 the length scale unless stated otherwise.
"""

__version__ = "0.1.0"
