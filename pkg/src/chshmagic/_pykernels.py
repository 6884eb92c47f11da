"""Pure numpy implementations of the batch kernels.

Each function mirrors one in ``_ckernels.pyx`` with the same signature and
output layout.  These are the reference path: vectorized, but they build
large temporaries, which the compiled loops avoid.
"""
import numpy as np

_I = np.eye(2, dtype=complex)
_X = np.array([[0, 1], [1, 0]], dtype=complex)
_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_Z = np.array([[1, 0], [0, -1]], dtype=complex)
_PAULI_MATS = np.array([np.kron(a, b) for a in (_I, _X, _Y, _Z) for b in (_I, _X, _Y, _Z)])

# B0 = XX + XZ - ZX + ZZ in the 16-string index 4*a + b.
_B0_WEIGHTS = np.zeros(16)
_B0_WEIGHTS[[5, 7, 13, 15]] = [1.0, 1.0, -1.0, 1.0]

BACKEND = "python"


def pauli_expectations(psi):
    """Return ``<psi|P|psi>`` for all 16 two-qubit Pauli strings, shape (N, 16)."""
    psi = np.ascontiguousarray(psi, dtype=complex)
    return np.einsum("ni,pij,nj->np", psi.conj(), _PAULI_MATS, psi).real


def state_features(psi):
    """Per-state ``[b0, m2, lam_max, lam_min]`` with m2 in nats.

    ``lam_max``/``lam_min`` are the eigenvalues of the reduced state of qubit A.
    """
    psi = np.ascontiguousarray(psi, dtype=complex)
    exps = pauli_expectations(psi)
    out = np.empty((psi.shape[0], 4))
    out[:, 0] = exps @ _B0_WEIGHTS
    out[:, 1] = -np.log(np.sum(exps**4, axis=1) / 4.0)
    det = np.abs(psi[:, 0] * psi[:, 3] - psi[:, 1] * psi[:, 2]) ** 2
    tr = np.sum(np.abs(psi) ** 2, axis=1)
    disc = np.sqrt(np.maximum(tr * tr - 4.0 * det, 0.0))
    lam_max = 0.5 * (tr + disc)
    out[:, 2] = lam_max
    out[:, 3] = np.where(lam_max > 0, det / np.where(lam_max > 0, lam_max, 1.0), 0.0)
    return out


def orthonormalize(z):
    """Orthonormalize the columns of each matrix in a (N, d, d) stack.

    Equivalent to the Q factor of a QR decomposition whose R has a positive
    real diagonal.
    """
    z = np.asarray(z, dtype=complex)
    q, r = np.linalg.qr(z)
    diag = np.diagonal(r, axis1=-2, axis2=-1)
    return q * (diag / np.abs(diag))[..., None, :]


def twirled_states(core, g, side):
    """Return ``G^dag core G |00>`` for every element of a stack of group draws.

    side 0: ``g`` is (N, 4, 4) and G = g.  side 1: G = g (x) I.  side 2: G = I (x) g.
    """
    core = np.asarray(core, dtype=complex)
    g = np.asarray(g, dtype=complex)
    n = g.shape[0]
    if side == 0:
        v = g[:, :, 0]
        w = v @ core.T
        return np.einsum("nji,nj->ni", g.conj(), w)
    v = np.zeros((n, 4), dtype=complex)
    if side == 1:
        v[:, 0] = g[:, 0, 0]
        v[:, 2] = g[:, 1, 0]
        w = (v @ core.T).reshape(n, 2, 2)
        return np.einsum("nja,njb->nab", g.conj(), w).reshape(n, 4)
    if side == 2:
        v[:, 0] = g[:, 0, 0]
        v[:, 1] = g[:, 1, 0]
        w = (v @ core.T).reshape(n, 2, 2)
        return np.einsum("njb,naj->nab", g.conj(), w).reshape(n, 4)
    raise ValueError(f"side must be 0, 1 or 2, got {side}")
