"""Simulation and analysis of a levitated nanoparticle coupled to a nanophotonic cavity.

The package is organized along the measurement chain: ``quantities``
(scalar physics), ``fields`` (optical potentials and cavity mode),
``dynamics`` (trap linearization and Langevin integration), ``readout``
(cavity phase and homodyne noise), ``spectral`` and ``calibration``
(turning records into calibrated couplings), and ``protocols`` (maps,
sweeps, site loading and model fitting). ``cli`` drives it all from a TOML
config.
"""
__version__ = "0.1.0"
