import math

import numpy as np
import pytest

from chshmagic import experiments, stats
from chshmagic.errors import VerificationError


def _same_scan(a, b):
    for k in a.conditionals:
        assert np.array_equal(a.conditionals[k].counts, b.conditionals[k].counts)
        assert np.array_equal(a.conditionals[k].violations, b.conditionals[k].violations)
    for k in a.joint:
        assert np.array_equal(a.joint[k].counts, b.joint[k].counts)
        assert np.array_equal(a.joint[k].column_max_b, b.joint[k].column_max_b)
    assert np.array_equal(a.geometry_viol, b.geometry_viol)
    assert a.moments.n == b.moments.n and a.moments.viol == b.moments.viol


def test_scan_deterministic():
    a = experiments.haar_scan(3000, seed=2, chunk=512)
    b = experiments.haar_scan(3000, seed=2, chunk=512)
    _same_scan(a, b)
    assert a.moments.mean == b.moments.mean
    c = experiments.haar_scan(3000, seed=3, chunk=512)
    assert c.moments.mean != a.moments.mean


def test_scan_workers_match_manual_merge():
    par = experiments.haar_scan(2000, seed=4, workers=2)
    parts = [experiments._scan_worker((experiments.ScanConfig(), 1000, 4, w, 4096)) for w in (0, 1)]
    _same_scan(par, parts[0].merge(parts[1]))


def test_scan_invariants():
    scan = experiments.haar_scan(20000, seed=1)
    assert scan.hurwitz_disagree == 0
    assert scan.min_gap_margin >= -1e-9
    n = scan.moments.n
    for acc in scan.conditionals.values():
        assert acc.counts.sum() == n
        assert acc.violations.sum() == scan.moments.viol
    assert scan.geometry.counts.sum() == n
    p = scan.moments.viol / n
    assert abs(p - stats.pviol_exact()) < 5 * stats.violation_stderr(stats.pviol_exact(), n)


def test_column_max_check():
    h = stats.JointHistogram(10, 4, (0, 1))
    h.update([2.5, 2.0, 1.0, 0.5], [0.1, 0.3, 0.6, 0.9])
    assert experiments.column_max_nonincreasing(h)
    h.update([2.8], [0.9])
    assert not experiments.column_max_nonincreasing(h)


def test_fig3_closed_forms_ok():
    res = experiments.fig3(21)
    assert res.ok and res.meta["closed_form_max_deviation"] < 1e-9


def test_require():
    assert experiments.require(experiments.Result({}, {}, True)).ok
    with pytest.raises(VerificationError):
        experiments.require(experiments.Result({}, {}, False))
