import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from chshmagic import chsh, qcore, twirling
from chshmagic.ensembles import (
    EnsembleSpec, GroupTag, group_table, haar_unitaries, sample_group, worker_rng,
)

seeds = st.integers(0, 2**32 - 1)


def _b(core, g):
    psi = g.conj().T @ core @ g @ qcore.KET_00
    return chsh.chsh_expectation(chsh.B0, psi)


def test_form_factors_identity_and_cx():
    f = twirling.form_factors(np.eye(4))
    assert (f.c2, f.c2_tilde, f.c3, f.c4) == (16.0, 16.0, 64.0, 256.0)
    f = twirling.form_factors(qcore.CX)
    assert math.isclose(f.c2, 4.0) and math.isclose(f.c2_tilde, 16.0)
    # identity core: b = <00|B0|00> = 1 for every element
    assert math.isclose(twirling.haar_mean_b(np.eye(4)), 1.0)
    assert math.isclose(twirling.haar_var_b(np.eye(4)), 0.0, abs_tol=1e-12)
    assert math.isclose(twirling.clifford_var_b(np.eye(4)), 0.0, abs_tol=1e-12)


def test_swap_and_second_moment():
    t = twirling.swap_operator(2)
    a, b = np.array([1, 2]), np.array([3, 5])
    assert np.allclose(t @ np.kron(a, b), np.kron(b, a))
    d = 4
    big = twirling.swap_operator(d)
    assert np.allclose(twirling.second_moment_twirl(np.eye(d * d)), np.eye(d * d))
    assert np.allclose(twirling.second_moment_twirl(big), big)
    rng = worker_rng(3)
    o = rng.standard_normal((16, 16))
    avg = twirling.second_moment_twirl(o)
    assert math.isclose(np.trace(avg).real, np.trace(o))
    # commutes with U (x) U
    u = haar_unitaries(1, 4, rng)[0]
    uu = np.kron(u, u)
    assert np.allclose(uu @ avg @ uu.conj().T, avg)


def test_second_moment_matches_monte_carlo():
    rng = worker_rng(8)
    o = np.kron(chsh.B0.matrix(), qcore.pauli_matrix("ZX"))
    u = haar_unitaries(20000, 4, rng)
    uu = np.einsum("nij,nkl->nikjl", u, u).reshape(-1, 16, 16)
    mc = np.einsum("nij,jk,nlk->nil", uu, o, uu.conj()).mean(axis=0)
    assert np.max(np.abs(mc - twirling.second_moment_twirl(o))) < 0.1


def test_haar_mean_equals_clifford_mean():
    rng = worker_rng(21)
    table = group_table("C_full")
    for core in haar_unitaries(20, 4, rng):
        b = twirling.b_values(core, "C_full", table)
        assert math.isclose(b.mean(), twirling.haar_mean_b(core), abs_tol=1e-10)
        assert math.isclose(np.mean(b * b), twirling.clifford_second_moment(core), abs_tol=1e-9)


def test_fourth_moment_trace_matches_variance():
    core = twirling.core_unitary("w:0.9")
    mean = twirling.haar_mean_b(core)
    assert math.isclose(twirling.fourth_moment_trace(core) - mean**2, twirling.haar_var_b(core), abs_tol=1e-12)


@pytest.mark.parametrize("name", ["cx", "cxh", "w:pi/5"])
def test_haar_variance_matches_monte_carlo(name):
    core = twirling.core_unitary(name)
    st_ = twirling.ensemble_stats(EnsembleSpec(core, GroupTag("U_full"), 200_000, seed=4))
    assert abs(st_.mean - twirling.haar_mean_b(core)) <= 5 * st_.mean_stderr
    assert abs(st_.variance - twirling.haar_var_b(core)) <= 5 * st_.variance_stderr


def test_uncorrected_clifford_variance_differs():
    core = twirling.core_unitary("cx")
    enum = np.var(twirling.b_values(core, "C_full", group_table("C_full")))
    assert math.isclose(twirling.clifford_var_b(core), enum, abs_tol=1e-10)
    assert abs(twirling.clifford_var_b(core, uncorrected=True) - enum) > 0.01


@pytest.mark.parametrize("side", [1, 2])
def test_single_qubit_quadrature(side):
    core = twirling.core_unitary("w:0.4")
    mean, sq = twirling.single_qubit_haar_moments(core, side)
    kind = "U_A" if side == 1 else "U_B"
    b = twirling.b_values(core, kind, sample_group(kind, 300_000, worker_rng(6)))
    se = b.std() / math.sqrt(len(b))
    assert abs(b.mean() - mean) < 5 * se
    assert abs(np.mean(b * b) - sq) < 5 * np.std(b * b) / math.sqrt(len(b))
    # the 24-element Clifford average agrees on the mean: single-qubit Cliffords form a 2-design
    cliff = twirling.b_values(core, "C_A" if side == 1 else "C_B", group_table("C_A"))
    assert math.isclose(cliff.mean(), mean, abs_tol=1e-10)


def test_b_values_match_dense():
    core = twirling.core_unitary("cxh")
    draws = sample_group("U_full", 5, worker_rng(1))
    got = twirling.b_values(core, "U_full", draws)
    assert np.allclose(got, [_b(core, g) for g in draws])


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(1, 400), st.integers(1, 400))
def test_moments_merge_matches_direct(seed, na, nb):
    rng = worker_rng(seed)
    b = rng.uniform(-2.8, 2.8, na + nb)
    merged = twirling.Moments.of(b[:na]).merge(twirling.Moments.of(b[na:]))
    direct = twirling.Moments.of(b)
    assert merged.n == direct.n and merged.viol == direct.viol
    for attr in ("mean", "m2", "m3", "m4"):
        assert math.isclose(getattr(merged, attr), getattr(direct, attr), rel_tol=1e-9, abs_tol=1e-9)


def test_moments_empty_and_order():
    m = twirling.Moments.of([1.0, 2.5, -2.1])
    assert twirling.Moments().merge(m) == m and m.merge(twirling.Moments()) == m
    assert m.viol == 2
    assert math.isnan(twirling.Moments().variance)


def test_ensemble_stats_workers_deterministic():
    spec = EnsembleSpec(twirling.core_unitary("cxh"), GroupTag("U_A"), 5000, seed=3)
    a = twirling.ensemble_stats(spec, chunk=777)
    b = twirling.ensemble_stats(spec, chunk=777)
    assert a == b
    two = twirling.ensemble_stats(spec, workers=2, chunk=777)
    assert two.n == 5000 and abs(two.mean - a.mean) < 6 * a.mean_stderr
    with pytest.raises(TypeError):
        twirling.ensemble_stats("not a spec")


def test_exact_enumeration_stats():
    st_ = twirling.ensemble_stats(EnsembleSpec(twirling.core_unitary("w:pi/4"), GroupTag("C_B")))
    assert st_.method == "exact_enumeration" and st_.n == 24
    assert math.isclose(st_.p_viol, 4 / 24)
    assert st_.p_viol_stderr == 0.0


def test_exchange_ab_mirrors_single_qubit_moments():
    core = twirling.core_unitary("w:0.8")
    other = twirling.exchange_ab(core)
    assert np.allclose(twirling.exchange_ab(other), core)
    a = twirling.single_qubit_haar_moments(core, 1)
    b = twirling.single_qubit_haar_moments(other, 2)
    assert np.allclose(a, b, atol=1e-12)
    ca = np.sort(twirling.b_values(core, "C_A", group_table("C_A")))
    cb = np.sort(twirling.b_values(other, "C_B", group_table("C_B")))
    assert np.allclose(ca, cb, atol=1e-12)
    assert np.allclose(twirling.core_unitary("wtilde:0.8"), other)


def test_parse_angle():
    assert twirling.parse_angle("pi/4") == math.pi / 4
    assert twirling.parse_angle("-3pi/8") == -3 * math.pi / 8
    assert twirling.parse_angle("2*pi") == 2 * math.pi
    assert twirling.parse_angle("0.25") == 0.25
    assert twirling.parse_angle(0.5) == 0.5
    with pytest.raises(ValueError):
        twirling.parse_angle("tau/2")


def test_core_unitary_names():
    assert np.allclose(twirling.core_unitary("cx"), qcore.CX)
    assert np.allclose(twirling.core_unitary("w:0"), twirling.core_unitary("cxh"))
    assert np.allclose(twirling.core_unitary("W:pi/3"), chsh.w_theta(math.pi / 3))
    with pytest.raises(ValueError):
        twirling.core_unitary("toffoli")


def test_decimal_matching_rule():
    assert twirling.decimal_matches_fraction(100 / 24, 4.2)
    assert twirling.decimal_matches_fraction(100 / 24, 4.1)
    assert not twirling.decimal_matches_fraction(100 / 24, 4.0)
    assert twirling.decimal_matches_fraction(0.0, 0)


def test_table1_report_rows():
    rows = {r.quantity: r for r in twirling.table1_report(("cx",))}
    assert len(rows) == 9
    for q in ("mean_U", "var_U", "mean_UA", "var_UA", "var_CA", "mean_UB", "var_UB", "var_CB"):
        assert rows[q].passed, rows[q]
    enum = np.var(twirling.b_values(qcore.CX, "C_full", group_table("C_full")))
    assert math.isclose(rows["var_C"].value, enum, abs_tol=1e-10)
