import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chshmagic import qcore
from chshmagic.ensembles import haar_states, haar_unitaries, worker_rng

seeds = st.integers(0, 2**32 - 1)


def test_pauli_indexing():
    assert qcore.pauli_index("II") == 0
    assert qcore.pauli_index("XZ") == 7
    assert qcore.pauli_index("zy") == 14
    assert np.allclose(qcore.pauli_matrix("XZ"), np.kron(qcore.X, qcore.Z))
    with pytest.raises(ValueError):
        qcore.pauli_index("XQ")
    with pytest.raises(ValueError):
        qcore.pauli_index("XYZ")


def test_paulis_orthogonal():
    gram = np.einsum("pij,qji->pq", qcore.PAULIS, qcore.PAULIS)
    assert np.allclose(gram, 4 * np.eye(16))


def test_gates():
    assert np.allclose(qcore.CX @ qcore.KET_00, qcore.KET_00)
    assert np.allclose(qcore.CX @ qcore.local(qcore.H, qcore.I2) @ qcore.KET_00, qcore.PHI_PLUS)
    hh = qcore.local(qcore.H, qcore.H)
    assert np.allclose(qcore.CX_B, hh @ qcore.CX @ hh)
    assert np.allclose(qcore.ry(np.pi) @ np.array([1, 0]), [0, 1])


def test_validation():
    with pytest.raises(ValueError):
        qcore.as_state([1, 1, 0, 0])
    with pytest.raises(ValueError):
        qcore.as_state([1, 0, 0])
    with pytest.raises(ValueError):
        qcore.as_density(np.diag([1.5, -0.5, 0, 0]))
    with pytest.raises(ValueError):
        qcore.as_density(np.array([[0.5, 0.1], [0.2, 0.5]]))
    with pytest.raises(ValueError):
        qcore.as_unitary(np.ones((4, 4)))
    with pytest.raises(ValueError):
        qcore.expectation(np.array([[0, 1], [0, 0]]), [1, 0])
    with pytest.raises(ValueError):
        qcore.partial_trace(np.eye(4) / 4, keep="C")


def test_schmidt_examples():
    assert qcore.schmidt_spectrum(qcore.KET_00) == (1.0, 0.0)
    lam = qcore.schmidt_spectrum(qcore.PHI_PLUS)
    assert np.allclose(lam, (0.5, 0.5))
    assert np.isclose(qcore.schmidt_angle(qcore.PHI_PLUS), np.pi / 4)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_reduced_states_agree(seed):
    psi = haar_states(1, worker_rng(seed))[0]
    rho = qcore.projector(psi)
    for keep in ("A", "B"):
        assert np.allclose(qcore.reduced_state(psi, keep), qcore.partial_trace(rho, keep))
    lam = np.sort(np.linalg.eigvalsh(qcore.reduced_state(psi)))[::-1]
    assert np.allclose(qcore.schmidt_spectrum(psi), lam, atol=1e-12)
    assert np.allclose(qcore.eigvalsh_2x2(qcore.reduced_state(psi, "B")), lam, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_pauli_vector_reconstructs_state(seed):
    psi = haar_states(1, worker_rng(seed))[0]
    coeffs = qcore.pauli_vector(psi)
    assert np.allclose(coeffs, qcore.pauli_vector(qcore.projector(psi)))
    assert np.isclose(coeffs[0], 1.0)
    assert np.isclose(np.sum(coeffs**2), 4.0)
    assert np.allclose(np.einsum("p,pij->ij", coeffs, qcore.PAULIS) / 4, qcore.projector(psi))


@settings(max_examples=25, deadline=None)
@given(seeds)
def test_local_unitaries_keep_spectrum(seed):
    rng = worker_rng(seed)
    psi = haar_states(1, rng)[0]
    u = haar_unitaries(2, 2, rng)
    phi = qcore.local(u[0], u[1]) @ psi
    assert np.allclose(qcore.schmidt_spectrum(psi), qcore.schmidt_spectrum(phi), atol=1e-12)
