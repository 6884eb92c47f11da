"""Stabilizer entropy, entanglement measures and non-local/local magic.

Everything is returned in nats unless a ``base`` is passed; ``base=2`` gives
bits.  Round-off negatives down to -1e-10 are clamped to zero, anything more
negative is an error.
"""
import math
from dataclasses import dataclass

import numpy as np

from . import qcore
from ._backend import kernels
from .errors import ResourceInconsistency

CLAMP_TOL = 1e-10
LOCAL_MAGIC_FAULT = 1e-6


def _in_base(value, base):
    if base is None or base == math.e:
        return value
    if base <= 0 or base == 1:
        raise ValueError(f"invalid logarithm base {base}")
    return value / math.log(base)


def _clamp(value, what):
    if value < -CLAMP_TOL:
        raise ResourceInconsistency(f"{what} = {value:.3e} is negative beyond round-off")
    return max(value, 0.0)


def _m2_from_paulis(coeffs, d=4):
    return -math.log(float(np.sum(np.asarray(coeffs) ** 4)) / d)


def stabilizer_entropy_pure(psi, base=None):
    """2-stabilizer entropy ``-log(sum_P <P>^4 / 4)`` of a pure state."""
    psi = qcore.as_state(psi)
    return _in_base(_clamp(_m2_from_paulis(qcore.pauli_vector(psi)), "M2"), base)


def stabilizer_entropy_mixed(rho, base=None):
    """Mixed-state extension ``M2(rho) - S2(rho)``.

    ``M2(rho)`` is the same fourth-power Pauli sum with the state replaced by
    ``rho`` and ``S2 = -log Tr rho^2``.
    """
    rho = qcore.as_density(rho)
    value = _m2_from_paulis(qcore.pauli_vector(rho)) - renyi2_entropy(rho)
    return _in_base(_clamp(value, "M2 - S2"), base)


def renyi2_entropy(rho, base=None):
    rho = np.asarray(rho, dtype=complex)
    return _in_base(-math.log(float(np.einsum("ij,ji->", rho, rho).real)), base)


def _support_is_free(coeffs, tol):
    support = [p for p in range(16) if abs(coeffs[p]) > tol]
    if any(abs(abs(coeffs[p]) - 1.0) > tol for p in support):
        return False
    mats = qcore.PAULIS
    for i, p in enumerate(support):
        for q in support[i + 1:]:
            if not np.allclose(mats[p] @ mats[q], mats[q] @ mats[p]):
                return False
            prod = mats[p] @ mats[q]
            # closed under multiplication up to phase
            overlaps = np.abs(np.einsum("kij,ji->k", mats, prod)) / 4.0
            if not any(overlaps[r] > 1 - tol for r in support):
                return False
    return True


def is_free_state(rho, tol=1e-9):
    """True iff ``rho = (1/4) sum_{P in G} phi_P P`` over an Abelian Pauli subgroup.

    Accepts a density matrix or a pure state vector.
    """
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim == 1:
        rho = qcore.projector(qcore.as_state(rho))
    rho = qcore.as_density(rho)
    return _support_is_free(qcore.pauli_vector(rho), tol)


def _spectrum(rho):
    rho = np.asarray(rho, dtype=complex)
    if rho.shape == (2, 2):
        return np.array(qcore.eigvalsh_2x2(rho))
    return np.linalg.eigvalsh(rho)


def _entropy_of(probs):
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * np.log(p)))


def von_neumann_entropy(rho, base=None):
    """``-sum lam log lam`` over the spectrum of ``rho`` (0 log 0 = 0)."""
    return _in_base(_clamp(_entropy_of(_spectrum(rho)), "S1"), base)


def entanglement_entropy(psi, base=None):
    """Von Neumann entropy of the reduced state of qubit A."""
    return _in_base(_clamp(_entropy_of(qcore.schmidt_spectrum(psi)), "S1"), base)


def capacity_from_spectrum(p_max, p_min):
    """``p q ln^2(q/p)`` for a two-level spectrum {p, q}; zero for flat or pure."""
    if p_min <= 0 or p_max <= 0:
        return 0.0
    return float(p_max * p_min * math.log(p_min / p_max) ** 2)


def entanglement_capacity(psi):
    """Capacity of entanglement (variance of ``-ln rho_A``) in nats squared."""
    psi = qcore.as_state(psi)
    return capacity_from_spectrum(*qcore.schmidt_spectrum(psi))


def nonlocal_magic_from_spectrum(lam_max):
    """Closed form ``-log((7 + cos 8t)/8)`` with ``cos^2 t = lam_max``.

    Evaluated through ``cos 2t = 2 lam_max - 1`` and Chebyshev doubling, so no
    trigonometric calls; works elementwise on arrays.
    """
    c2 = 2.0 * np.asarray(lam_max, dtype=float) - 1.0
    c4 = 2.0 * c2 * c2 - 1.0
    c8 = 2.0 * c4 * c4 - 1.0
    value = -np.log((7.0 + c8) / 8.0)
    if np.ndim(value):
        return np.maximum(value, 0.0) + 0.0
    return float(value) if value > 0 else 0.0


def nonlocal_magic(psi, base=None):
    """Non-local magic of a pure state: minimum M2 over local unitaries."""
    psi = qcore.as_state(psi)
    lam_max, _ = qcore.schmidt_spectrum(psi)
    return _in_base(nonlocal_magic_from_spectrum(lam_max), base)


def local_magic(psi, base=None):
    """``M2 - M_NL``; raises ``ResourceInconsistency`` below -1e-6."""
    diff = stabilizer_entropy_pure(psi) - nonlocal_magic(psi)
    if diff < -LOCAL_MAGIC_FAULT:
        raise ResourceInconsistency(f"local magic {diff:.3e} < 0")
    return _in_base(max(diff, 0.0), base)


def nonstabilizing_power(u, base=None):
    """Mean stabilizer entropy of ``u|s>`` over the 60 two-qubit stabilizer states."""
    from .ensembles import enumerate_stabilizer_states

    u = qcore.as_unitary(u)
    out = enumerate_stabilizer_states() @ u.T
    m2 = kernels.state_features(out)[:, 1]
    return _in_base(max(float(np.mean(m2)), 0.0), base)


def nonlocal_magic_variational(psi, local_unitaries):
    """Minimum M2 over the supplied local unitaries ``U_A (x) U_B`` (test oracle)."""
    psi = qcore.as_state(psi)
    states = np.asarray(local_unitaries) @ psi
    return float(np.min(kernels.state_features(states)[:, 1]))


@dataclass(frozen=True)
class ResourceReport:
    m2: float
    s1: float
    s2: float
    c_e: float
    m_nl: float
    m_loc: float


def resource_report(psi, base=None):
    """All resource quantities of a pure state; entropies in ``base``."""
    psi = qcore.as_state(psi)
    rho_a = qcore.reduced_state(psi)
    m2 = stabilizer_entropy_pure(psi)
    m_nl = nonlocal_magic(psi)
    return ResourceReport(
        m2=_in_base(m2, base),
        s1=entanglement_entropy(psi, base),
        s2=_in_base(_clamp(renyi2_entropy(rho_a), "S2"), base),
        c_e=entanglement_capacity(psi),
        m_nl=_in_base(m_nl, base),
        m_loc=local_magic(psi, base),
    )


def batch_resources(psi):
    """Per-state columns for a batch of pure states, all in nats.

    Returns a dict of arrays: ``b0`` (CHSH value of B0), ``m2``, ``s1``,
    ``m_nl``, ``m_loc``, ``c_e``.
    """
    feats = kernels.state_features(psi)
    lam_max, lam_min = feats[:, 2], np.clip(feats[:, 3], 0.0, None)
    with np.errstate(divide="ignore", invalid="ignore"):
        s1 = -(lam_max * np.log(lam_max) + np.where(lam_min > 0, lam_min * np.log(lam_min), 0.0))
        ratio = np.where(lam_min > 0, np.log(np.where(lam_min > 0, lam_min, 1.0) / lam_max), 0.0)
    m_nl = nonlocal_magic_from_spectrum(lam_max)
    m2 = feats[:, 1]
    m_loc = m2 - m_nl
    if np.min(m_loc, initial=0.0) < -LOCAL_MAGIC_FAULT:
        raise ResourceInconsistency("local magic negative in batch")
    return {
        "b0": feats[:, 0],
        "m2": m2,
        "s1": np.maximum(s1, 0.0),
        "m_nl": m_nl,
        "m_loc": np.maximum(m_loc, 0.0),
        "c_e": lam_max * lam_min * ratio**2,
    }
