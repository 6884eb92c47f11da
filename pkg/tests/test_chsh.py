import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chshmagic import chsh, qcore, resources
from chshmagic.ensembles import enumerate_stabilizer_states, haar_states, haar_unitaries, local_clifford_pairs, worker_rng
from chshmagic.errors import VerificationError

seeds = st.integers(0, 2**32 - 1)


def test_b0_operator():
    want = (qcore.pauli_matrix("XX") + qcore.pauli_matrix("XZ") - qcore.pauli_matrix("ZX")
            + qcore.pauli_matrix("ZZ"))
    assert np.allclose(chsh.B0.matrix(), want)
    assert chsh.B0.symmetric and not chsh.B0.mirrored and not chsh.B0.degenerate
    assert str(chsh.B0) == "XZZX"
    with pytest.raises(ValueError):
        chsh.ChshSpec("X", "I", "Z", "X")


def test_family_counts():
    fam = chsh.chsh_family()
    assert len(fam) == 81
    assert sum(not s.degenerate for s in fam) == 36
    assert len(chsh.symmetric_specs()) == 9
    assert chsh.family_weights().shape == (81, 16)


def test_nondegenerate_spectrum():
    for s in chsh.chsh_family():
        ev = np.linalg.eigvalsh(s.matrix())
        if s.degenerate:
            assert np.max(np.abs(ev)) <= 2 + 1e-12
        else:
            assert np.allclose(ev, [-chsh.TSIRELSON, 0, 0, chsh.TSIRELSON], atol=1e-12)


def test_family_closed_under_local_cliffords():
    weights = chsh.family_weights()
    keys = {tuple(np.round(s * w, 9) + 0.0) for w in weights for s in (1, -1)}
    nondeg = [s for s in chsh.chsh_family() if not s.degenerate]
    for g in local_clifford_pairs()[::5]:
        for s in nondeg:
            m = g.conj().T @ s.matrix() @ g
            w = np.einsum("pij,ji->p", qcore.PAULIS, m).real / 4
            assert tuple(np.round(w, 9) + 0.0) in keys


def test_stabilizer_values_on_lattice():
    values = np.abs(chsh.chsh_values(enumerate_stabilizer_states()))
    assert values.max() <= 2 + 1e-12
    assert np.allclose(values, np.round(values), atol=1e-12)


def test_verify_reports():
    rep = chsh.verify_theorem1(n_mixtures=1000)
    assert rep.passed and rep.max_abs_b <= 2 + 1e-12
    rep2 = chsh.verify_theorem2(n_samples=2000, rng=worker_rng(1))
    assert rep2.passed and rep2.max_abs_b <= 2 + 1e-9
    # the literal pa == pb, pa' == pb' class does violate on symmetric states
    assert rep2.details["mirrored_specs_max"] > 2.5
    rep3 = chsh.verify_theorem3(theta_grid=19, n_haar=2000, rng=worker_rng(2))
    assert rep3.passed


def test_mirrored_spec_counterexample():
    a = 3 * math.pi / 8
    psi = (math.cos(a) * np.array([1, 0, 0, -1]) + math.sin(a) * np.array([0, 1, 1, 0])) / math.sqrt(2)
    assert np.allclose(qcore.SWAP @ psi, psi)
    assert math.isclose(chsh.chsh_expectation(chsh.ChshSpec("X", "Z", "X", "Z"), psi), chsh.TSIRELSON,
                        abs_tol=1e-12)
    assert abs(chsh.chsh_expectation(chsh.B0, psi)) <= 2


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_symmetric_states_respect_local_bound(seed):
    u = chsh.random_symmetric_unitaries(1, worker_rng(seed))[0]
    assert qcore.is_unitary(u, 1e-10)
    assert np.allclose(qcore.SWAP @ u @ qcore.SWAP, u, atol=1e-10)
    psi = u @ qcore.KET_00
    for s in chsh.symmetric_specs():
        assert abs(chsh.chsh_expectation(s, psi)) <= 2 + 1e-9


def test_horodecki_examples():
    assert math.isclose(chsh.horodecki_max(qcore.PHI_PLUS), chsh.TSIRELSON, abs_tol=1e-12)
    assert math.isclose(chsh.horodecki_max(qcore.KET_00), 2.0, abs_tol=1e-12)
    t = 0.3
    psi = np.array([math.cos(t), 0, 0, math.sin(t)])
    assert math.isclose(chsh.horodecki_max(psi), 2 * math.sqrt(1 + math.sin(2 * t) ** 2), abs_tol=1e-12)


@settings(max_examples=30, deadline=None)
@given(seeds)
def test_horodecki_dominates_family(seed):
    psi = haar_states(1, worker_rng(seed))[0]
    best = chsh.horodecki_max(psi)
    assert np.abs(chsh.chsh_values(psi[None])).max() <= best + 1e-10
    assert best <= chsh.TSIRELSON + 1e-12


def test_w_theta_and_state_family():
    assert np.allclose(chsh.w_theta(0) @ qcore.KET_00, qcore.PHI_PLUS)
    for t in np.linspace(0, 2 * math.pi, 13):
        assert qcore.is_unitary(chsh.w_theta(t))
        # a local rotation of a Bell state stays maximally entangled
        assert np.allclose(qcore.schmidt_spectrum(chsh.w_theta(t) @ qcore.KET_00), (0.5, 0.5))
        lam = qcore.schmidt_spectrum(chsh.r_theta_state(t))
        assert np.allclose(sorted(lam), sorted((math.cos(t) ** 2, math.sin(t) ** 2)))


def test_rho_family_limits():
    cf1 = chsh.rho_family_closed_forms(1.0)
    assert cf1.s1 == 0.0 and cf1.c_e == 0.0 and cf1.m_nl == 0.0
    cf0 = chsh.rho_family_closed_forms(0.0)
    assert cf0.b0 > 2
    for r in (0.0, 0.37, 1.0):
        assert math.isclose(np.linalg.norm(chsh.rho_family_state(r, 0.4, 1.1)), 1.0)


@settings(max_examples=20, deadline=None)
@given(st.floats(0, math.pi), seeds)
def test_tsirelson_gap_nonnegative(theta, seed):
    rng = worker_rng(seed)
    u = haar_unitaries(200, 2, rng)
    gap = chsh.tsirelson_gap(theta, u[:100], u[100:])
    assert gap.shape == (100,)
    assert gap.min() >= -1e-9
    single = chsh.tsirelson_gap(theta, u[0], u[100])
    assert math.isclose(single, gap[0], abs_tol=1e-12)


def test_tsirelson_gap_uses_nonlocal_magic():
    theta = 0.7
    u = np.eye(2)
    r = chsh.r_theta_state(theta)
    want = chsh.TSIRELSON - resources.nonlocal_magic(r) / 2 - abs(chsh.chsh_expectation(chsh.B0, r))
    assert math.isclose(chsh.tsirelson_gap(theta, u, u), want, abs_tol=1e-12)


def test_b0_eigenbasis():
    v = chsh.B0_EIGENBASIS
    assert np.allclose(v.conj().T @ v, np.eye(4), atol=1e-12)
    assert np.allclose(v.conj().T @ chsh.B0.matrix() @ v, np.diag(chsh.B0_EIGENVALUES), atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(seeds)
def test_hurwitz_criterion_matches_direct(seed):
    psi = haar_states(1, worker_rng(seed))[0]
    c = chsh.hurwitz_coords(psi)
    b = chsh.chsh_expectation(chsh.B0, psi)
    margin = chsh.hurwitz_violation_margin(c.theta2, c.theta3)
    assert math.isclose(chsh.TSIRELSON * margin, abs(b), abs_tol=1e-10)
    assert chsh.hurwitz_violates(c) == (abs(b) > 2)


def test_hurwitz_batched():
    psi = haar_states(500, worker_rng(4))
    t2, t3 = chsh.hurwitz_angles(psi)
    b = chsh.chsh_values(psi, [chsh.B0])[:, 0]
    assert np.allclose(chsh.TSIRELSON * chsh.hurwitz_violation_margin(t2, t3), np.abs(b), atol=1e-10)


def test_theorem_failure_raises(monkeypatch):
    monkeypatch.setattr(chsh, "LOCAL_BOUND", 1.5)
    with pytest.raises(VerificationError):
        chsh.verify_theorem1(n_mixtures=10)
