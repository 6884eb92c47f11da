"""Stabilizer entropy and CHSH violation for two qubits.

Submodules: ``qcore`` (linear algebra), ``resources`` (stabilizer entropy,
entanglement, non-local/local magic), ``chsh`` (operators, state families,
theorem checks), ``ensembles`` (Haar and Clifford sampling/enumeration),
``twirling`` (isospectral twirling statistics), ``stats`` (Haar outcome
statistics and binned estimators) and ``cli``.
"""
__version__ = "0.1.0"

from ._backend import BACKEND, available_backends
from .errors import ResourceInconsistency, VerificationError

__all__ = ["BACKEND", "available_backends", "ResourceInconsistency", "VerificationError", "__version__"]
