"""Spectral methods for quantum many-body systems at desk scale.

Subpackages cover seed-deterministic random-matrix sampling, spin-chain
assembly, the isotropic-entanglement slider, free-probability convolutions
for disordered Hamiltonians, Motzkin/Dyck combinatorics, frustration-free
spectra, and MPS imaginary-time ground-state search.
"""

__version__ = "0.1.0"
