"""Dense linear algebra for one and two qubits.

States are plain numpy arrays: a pure state is a length-4 complex vector in the
basis |00>, |01>, |10>, |11> with qubit A as the left tensor factor, a density
matrix is a 4x4 (or 2x2 reduced) complex array.  Pauli strings are two-letter
labels such as ``"XZ"``, indexed ``4 * a + b`` over ``"IXYZ"``.
"""
import numpy as np

from ._backend import kernels

#: tolerance for validating user-supplied objects
INPUT_TOL = 1e-9
#: tolerance for objects produced internally
INTERNAL_TOL = 1e-12

PAULI_LABELS = "IXYZ"

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
S = np.diag([1, 1j]).astype(complex)
T = np.diag([1, np.exp(1j * np.pi / 4)]).astype(complex)
SINGLE_PAULIS = (I2, X, Y, Z)

I4 = np.eye(4, dtype=complex)
CX = np.array([[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex)
SWAP = np.array([[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex)
#: CNOT with control on qubit B and target on qubit A
CX_B = SWAP @ CX @ SWAP

PAULI_STRINGS = tuple(a + b for a in PAULI_LABELS for b in PAULI_LABELS)
PAULIS = np.array([np.kron(a, b) for a in SINGLE_PAULIS for b in SINGLE_PAULIS])

KET_00 = np.array([1, 0, 0, 0], dtype=complex)
PHI_PLUS = np.array([1, 0, 0, 1], dtype=complex) / np.sqrt(2)


def ry(theta):
    """Single-qubit rotation ``exp(-i theta Y / 2)``."""
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -s], [s, c]], dtype=complex)


def pauli_index(labels):
    """Index ``4 * a + b`` of a two-qubit Pauli string label."""
    labels = "".join(labels).upper()
    if len(labels) != 2 or any(ch not in PAULI_LABELS for ch in labels):
        raise ValueError(f"invalid Pauli string {labels!r}")
    return 4 * PAULI_LABELS.index(labels[0]) + PAULI_LABELS.index(labels[1])


def pauli_matrix(labels):
    """Tensor product of the two single-qubit Paulis named by ``labels``.

    >>> np.allclose(pauli_matrix("ZZ"), np.diag([1, -1, -1, 1]))
    True
    """
    return PAULIS[pauli_index(labels)].copy()


def local(u_a, u_b):
    """``u_a (x) u_b``."""
    return np.kron(np.asarray(u_a, dtype=complex), np.asarray(u_b, dtype=complex))


def is_hermitian(m, tol=INPUT_TOL):
    m = np.asarray(m)
    return m.shape[0] == m.shape[1] and np.max(np.abs(m - m.conj().T)) <= tol


def is_unitary(u, tol=INPUT_TOL):
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.max(
        np.abs(u @ u.conj().T - np.eye(u.shape[0]))
    ) <= tol


def as_state(psi, tol=INPUT_TOL):
    """Validate a normalized two-qubit state vector and return it as complex."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    if psi.shape != (4,):
        raise ValueError(f"expected 4 amplitudes, got shape {psi.shape}")
    if abs(np.vdot(psi, psi).real - 1.0) > tol:
        raise ValueError("state vector is not normalized")
    return psi


def as_density(rho, tol=INPUT_TOL):
    """Validate a density matrix (Hermitian, unit trace, PSD)."""
    rho = np.asarray(rho, dtype=complex)
    if rho.ndim != 2 or rho.shape[0] != rho.shape[1] or rho.shape[0] not in (2, 4):
        raise ValueError(f"expected a 2x2 or 4x4 matrix, got shape {rho.shape}")
    if not is_hermitian(rho, tol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValueError("density matrix does not have unit trace")
    if np.min(np.linalg.eigvalsh(rho)) < -tol:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def as_unitary(u, tol=INPUT_TOL):
    u = np.asarray(u, dtype=complex)
    if u.shape not in ((2, 2), (4, 4)) or not is_unitary(u, tol):
        raise ValueError("expected a 2x2 or 4x4 unitary")
    return u


def projector(psi):
    psi = np.asarray(psi, dtype=complex)
    return np.outer(psi, psi.conj())


def _keep_index(keep):
    if keep in (0, "A", "a"):
        return 0
    if keep in (1, "B", "b"):
        return 1
    raise ValueError(f"keep must be 'A'/0 or 'B'/1, got {keep!r}")


def partial_trace(rho, keep="A"):
    """Reduced state of one qubit from a 4x4 density matrix."""
    rho = np.asarray(rho, dtype=complex).reshape(2, 2, 2, 2)
    if _keep_index(keep) == 0:
        return np.einsum("ajbj->ab", rho)
    return np.einsum("jajb->ab", rho)


def reduced_state(psi, keep="A"):
    """Reduced state of one qubit of a pure state, without forming ``psi psi^dag``."""
    m = np.asarray(psi, dtype=complex).reshape(2, 2)
    if _keep_index(keep) == 0:
        return m @ m.conj().T
    return m.T @ m.conj()


def eigvalsh_2x2(m):
    """Eigenvalues of a 2x2 Hermitian matrix in descending order.

    Uses the trace/determinant quadratic; the smaller root is formed as
    det / larger to avoid cancellation.
    """
    m = np.asarray(m)
    tr = (m[0, 0] + m[1, 1]).real
    det = (m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]).real
    disc = np.sqrt(max(tr * tr - 4.0 * det, 0.0))
    big = 0.5 * (tr + disc) if tr >= 0 else 0.5 * (tr - disc)
    small = det / big if big != 0 else 0.5 * (tr - disc)
    return (big, small) if big >= small else (small, big)


def schmidt_spectrum(psi):
    """Entanglement spectrum ``(lam_max, lam_min)`` of a two-qubit pure state."""
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    det = abs(psi[0] * psi[3] - psi[1] * psi[2]) ** 2
    tr = float(np.vdot(psi, psi).real)
    lam = 0.5 * (tr + np.sqrt(max(tr * tr - 4.0 * det, 0.0)))
    return lam, (det / lam if lam > 0 else 0.0)


def schmidt_angle(psi):
    """Angle ``t`` in [0, pi/4] with entanglement spectrum {cos^2 t, sin^2 t}."""
    lam_max, lam_min = schmidt_spectrum(psi)
    return float(np.arctan2(np.sqrt(max(lam_min, 0.0)), np.sqrt(lam_max)))


def expectation(obs, psi):
    """``<psi|obs|psi>`` for a Hermitian observable; returns a float."""
    obs = np.asarray(obs, dtype=complex)
    if not is_hermitian(obs, INPUT_TOL):
        raise ValueError("observable is not Hermitian")
    psi = np.asarray(psi, dtype=complex).reshape(-1)
    return float(np.vdot(psi, obs @ psi).real)


def pauli_vector(state):
    """The 16 Pauli coefficients ``Tr(state P)`` of a pure state or density matrix."""
    state = np.asarray(state, dtype=complex)
    if state.ndim == 1:
        return kernels.pauli_expectations(state[None, :])[0]
    return np.einsum("pij,ji->p", PAULIS, state).real
