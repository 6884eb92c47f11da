import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy import integrate

from chshmagic import chsh, stats
from chshmagic.ensembles import haar_states, worker_rng


def test_pdf_examples():
    assert math.isclose(stats.pdf_b0_haar(0.0), 3 * math.sqrt(2) / 8)
    assert math.isclose(stats.pdf_b0_haar(stats.B_MAX), 0.0, abs_tol=1e-15)
    assert stats.pdf_b0_haar(3.0) == 0.0
    assert math.isclose(stats.pdf_b0_haar(-1.3), stats.pdf_b0_haar(1.3))
    total, _ = integrate.quad(stats.pdf_b0_haar, -stats.B_MAX, stats.B_MAX)
    assert math.isclose(total, 1.0, abs_tol=1e-12)
    assert np.all(stats.pdf_b0_haar(np.linspace(-3, 3, 101)) >= 0)


def test_cdf_and_pviol():
    assert stats.cdf_abs_b0_haar(0.0) == 0.0
    assert math.isclose(stats.cdf_abs_b0_haar(stats.B_MAX), 1.0, abs_tol=1e-12)
    assert math.isclose(1 - stats.cdf_abs_b0_haar(2.0), stats.pviol_exact(), abs_tol=1e-14)
    assert math.isclose(stats.pviol_exact(), 0.0251262, abs_tol=1e-7)


def test_haar_samples_fit_density():
    psi = haar_states(200_000, worker_rng(17))
    b = chsh.chsh_values(psi, [chsh.B0])[:, 0]
    _, p = stats.abs_b_gof(b)
    assert p > 1e-4
    # the fit rejects a clearly wrong distribution
    _, p_bad = stats.abs_b_gof(worker_rng(1).uniform(0, stats.B_MAX, 200_000))
    assert p_bad < 1e-6


def test_chebyshev():
    assert stats.chebyshev_bound(0.2, 0.79, 2.0) == pytest.approx(0.79 / 1.8**2)
    assert stats.chebyshev_bound(0.0, 10.0, 2.0) == 1.0
    with pytest.raises(ValueError):
        stats.chebyshev_bound(0.0, -1.0, 2.0)
    with pytest.raises(ValueError):
        stats.chebyshev_bound(2.5, 1.0, 2.0)


def test_violation_stderr():
    assert stats.violation_stderr(0.5, 100) == 0.05
    assert math.isnan(stats.violation_stderr(0.5, 0))


def test_conditional_simple():
    b = np.array([2.5, 1.0, -2.2, 0.0])
    y = np.array([0.1, 0.1, 0.9, 0.9])
    res = stats.conditional_violation(b, y, bins=2, y_range=(0, 1))
    assert np.array_equal(res.counts, [2, 2])
    assert np.array_equal(res.violations, [1, 1])
    assert np.allclose(res.p_viol, [0.5, 0.5])
    assert np.allclose(res.marginal, [0.5, 0.5])
    assert np.allclose(res.centers, [0.25, 0.75])


def test_empty_bins_are_nan():
    res = stats.conditional_violation(np.array([2.5]), np.array([0.1]), bins=4, y_range=(0, 1))
    assert np.isnan(res.p_viol[1:]).all() and np.isnan(res.stderr[1:]).all()
    assert res.p_viol[0] == 1.0


def test_out_of_range_is_clamped():
    acc = stats.ConditionalAccumulator(3, (0, 1)).update([0, 0, 3], [-1.0, 2.0, 0.5])
    assert acc.counts.tolist() == [1, 1, 1]


def test_accumulator_validation():
    with pytest.raises(ValueError):
        stats.ConditionalAccumulator(1)
    with pytest.raises(ValueError):
        stats.ConditionalAccumulator(5, (1, 1))
    with pytest.raises(ValueError):
        stats.ConditionalAccumulator(5).merge(stats.ConditionalAccumulator(6))
    with pytest.raises(ValueError):
        stats.conditional_violation(iter([]), None)


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 5))
def test_conditional_partition_and_order_invariant(seed, parts):
    rng = worker_rng(seed)
    b = rng.uniform(-2.8, 2.8, 1000)
    y = rng.uniform(0, 1, 1000)
    whole = stats.conditional_violation(b, y, bins=10, y_range=(0, 1))
    perm = rng.permutation(1000)
    shuffled = stats.conditional_violation(b[perm], y[perm], bins=10, y_range=(0, 1))
    cuts = np.array_split(np.arange(1000), parts)
    streamed = stats.conditional_violation(((b[c], y[c]) for c in cuts), None, bins=10, y_range=(0, 1))
    merged = stats.ConditionalAccumulator(10, (0, 1))
    for c in cuts:
        merged = merged.merge(stats.ConditionalAccumulator(10, (0, 1)).update(b[c], y[c]))
    for other in (shuffled, streamed, merged.result()):
        assert np.array_equal(whole.counts, other.counts)
        assert np.array_equal(whole.violations, other.violations)


def test_joint_histogram_marginals():
    rng = worker_rng(2)
    b = rng.uniform(-2.8, 2.8, 5000)
    y = rng.uniform(0, 1, 5000)
    h = stats.joint_histogram(b, y, bins_b=20, bins_y=8)
    assert h.counts.sum() == 5000
    want_b, _ = np.histogram(np.abs(b), bins=h.b_edges)
    want_y, _ = np.histogram(y, bins=h.y_edges)
    assert np.array_equal(h.b_marginal, want_b)
    assert np.array_equal(h.y_marginal, want_y)
    for j in range(8):
        sel = (y >= h.y_edges[j]) & (y < h.y_edges[j + 1])
        assert h.column_max_b[j] == np.abs(b[sel]).max()
    edges = h.column_max_bin()
    assert np.all(edges >= h.column_max_b - 1e-12)
    assert np.all(edges - (h.b_edges[1] - h.b_edges[0]) <= h.column_max_b + 1e-12)


def test_joint_histogram_merge():
    rng = worker_rng(3)
    b, y = rng.uniform(-2.8, 2.8, 1000), rng.uniform(0, 1, 1000)
    whole = stats.joint_histogram(b, y, 10, 5)
    merged = stats.joint_histogram(b[:300], y[:300], 10, 5).merge(stats.joint_histogram(b[300:], y[300:], 10, 5))
    assert np.array_equal(whole.counts, merged.counts)
    assert np.array_equal(whole.column_max_b, merged.column_max_b)
    with pytest.raises(ValueError):
        whole.merge(stats.joint_histogram(b, y, 10, 6))
    empty = stats.JointHistogram(4, 3)
    assert np.isnan(empty.column_max_bin()).all()
