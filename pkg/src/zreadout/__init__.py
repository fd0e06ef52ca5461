"""Longitudinal transmon readout toolkit.

Joint transmon-resonator spectra, photon-resolved ionization thresholds,
exact dispersive structure, stochastic readout fidelity, and the classical
driven-pendulum comparison.
"""

__version__ = "0.1.0"
