"""Haar statistics of the B0 outcome and binned violation estimators.

The accumulators here are mergeable count grids: fill one per worker or per
chunk, combine with ``merge`` and the totals do not depend on the partition.
"""
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats as _sps

SQRT2 = math.sqrt(2.0)
B_MAX = 2.0 * SQRT2
DEFAULT_BINS = 50
DEFAULT_JOINT_BINS = (200, 50)
#: fine grid for local magic near the origin
FINE_MLOC_BINS = 20
FINE_MLOC_RANGE = (0.0, 0.05)


def pdf_b0_haar(x):
    """Density of ``b = <psi|B0|psi>`` for Haar-random two-qubit states.

    ``(3/64)(8 sqrt2 + |x|(sqrt2 |x| - 8))`` on ``|x| <= 2 sqrt2``, zero outside.
    """
    x = np.asarray(x, dtype=float)
    a = np.abs(x)
    val = np.where(a <= B_MAX, 3.0 / 64.0 * (8.0 * SQRT2 + a * (SQRT2 * a - 8.0)), 0.0)
    return val if val.ndim else float(val)


def cdf_abs_b0_haar(x):
    """CDF of ``|b|`` for Haar-random states, ``2 int_0^x pdf``."""
    a = np.clip(np.asarray(x, dtype=float), 0.0, B_MAX)
    val = 3.0 / 32.0 * (8.0 * SQRT2 * a - 4.0 * a * a + SQRT2 * a**3 / 3.0)
    return val if val.ndim else float(val)


def pviol_exact():
    """Haar probability of ``|b| > 2``, ``(10 - 7 sqrt2)/4``."""
    return (10.0 - 7.0 * SQRT2) / 4.0


def chebyshev_bound(mean, variance, threshold):
    """``min(1, var / (threshold - |mean|)^2)`` bound on ``P(|b - mean| >= ...)``."""
    if variance < 0:
        raise ValueError("variance must be non-negative")
    gap = threshold - abs(mean)
    if gap <= 0:
        raise ValueError("threshold must exceed |mean|")
    return min(1.0, variance / gap**2)


def abs_b_gof(b, bins=DEFAULT_BINS):
    """Chi-square goodness of fit of ``|b|`` samples against the folded Haar density.

    Returns ``(statistic, p_value)``.
    """
    edges = np.linspace(0.0, B_MAX, int(bins) + 1)
    observed, _ = np.histogram(np.abs(b), bins=edges)
    expected = np.diff(cdf_abs_b0_haar(edges)) * observed.sum()
    expected *= observed.sum() / expected.sum()
    res = _sps.chisquare(observed, expected)
    return float(res.statistic), float(res.pvalue)


def violation_stderr(p, n):
    return math.sqrt(p * (1.0 - p) / n) if n else float("nan")


# ---------------------------------------------------------------- conditional probabilities

@dataclass
class BinnedConditional:
    """Per-bin violation frequency ``P(|b| > 2 | y in bin)``.

    Empty bins carry NaN in ``p_viol`` and ``stderr``.
    """

    bin_edges: np.ndarray
    p_viol: np.ndarray
    stderr: np.ndarray
    counts: np.ndarray
    violations: np.ndarray

    @property
    def marginal(self):
        """``P_Y`` per bin (normalized counts)."""
        total = self.counts.sum()
        return self.counts / total if total else np.zeros_like(self.counts, dtype=float)

    @property
    def centers(self):
        return 0.5 * (self.bin_edges[1:] + self.bin_edges[:-1])


class ConditionalAccumulator:
    """Streaming counts for ``conditional_violation``.

    Samples with ``y`` outside the range are clamped into the first/last bin,
    so the counts always add up to the number of samples seen.
    """

    def __init__(self, bins=DEFAULT_BINS, y_range=(0.0, 1.0)):
        if int(bins) < 2:
            raise ValueError("need at least 2 bins")
        lo, hi = map(float, y_range)
        if not hi > lo:
            raise ValueError("empty y_range")
        self.edges = np.linspace(lo, hi, int(bins) + 1)
        self.counts = np.zeros(int(bins), dtype=np.int64)
        self.violations = np.zeros(int(bins), dtype=np.int64)

    def _index(self, y):
        nb = len(self.counts)
        lo, hi = self.edges[0], self.edges[-1]
        idx = np.floor((np.asarray(y, dtype=float) - lo) / (hi - lo) * nb).astype(np.int64)
        return np.clip(idx, 0, nb - 1)

    def update(self, b, y):
        idx = self._index(y)
        viol = np.abs(np.asarray(b, dtype=float)) > 2.0
        self.counts += np.bincount(idx, minlength=len(self.counts))
        self.violations += np.bincount(idx[viol], minlength=len(self.counts))
        return self

    def merge(self, other):
        if not np.array_equal(self.edges, other.edges):
            raise ValueError("cannot merge accumulators with different bins")
        out = ConditionalAccumulator(len(self.counts), (self.edges[0], self.edges[-1]))
        out.counts = self.counts + other.counts
        out.violations = self.violations + other.violations
        return out

    def result(self):
        n = self.counts.astype(float)
        with np.errstate(invalid="ignore", divide="ignore"):
            p = np.where(n > 0, self.violations / n, np.nan)
            err = np.where(n > 0, np.sqrt(p * (1.0 - p) / n), np.nan)
        return BinnedConditional(self.edges.copy(), p, err, self.counts.copy(), self.violations.copy())


def conditional_violation(b, y, bins=DEFAULT_BINS, y_range=None):
    """Binned ``P(|b| > 2 | Y)`` with binomial standard errors.

    ``b`` and ``y`` are equal-length arrays, or ``b`` is an iterable of
    ``(b_chunk, y_chunk)`` pairs when ``y`` is None.
    """
    if y is None:
        if y_range is None:
            raise ValueError("streaming input needs an explicit y_range")
        acc = ConditionalAccumulator(bins, y_range)
        for b_chunk, y_chunk in b:
            acc.update(b_chunk, y_chunk)
        return acc.result()
    y = np.asarray(y, dtype=float)
    if y_range is None:
        y_range = (float(y.min()), float(y.max()) if y.max() > y.min() else float(y.min()) + 1.0)
    return ConditionalAccumulator(bins, y_range).update(b, y).result()


# ---------------------------------------------------------------- joint histogram

class JointHistogram:
    """Counts of ``(|b|, y)`` over ``[0, 2 sqrt2] x y_range``.

    Also tracks the exact maximum of ``|b|`` per ``y`` column.
    """

    def __init__(self, bins_b=DEFAULT_JOINT_BINS[0], bins_y=DEFAULT_JOINT_BINS[1], y_range=(0.0, 1.0)):
        if int(bins_b) < 2 or int(bins_y) < 2:
            raise ValueError("need at least 2 bins per axis")
        self.b_edges = np.linspace(0.0, B_MAX, int(bins_b) + 1)
        self.y_edges = np.linspace(float(y_range[0]), float(y_range[1]), int(bins_y) + 1)
        self.counts = np.zeros((int(bins_b), int(bins_y)), dtype=np.int64)
        self.column_max_b = np.full(int(bins_y), -np.inf)

    @staticmethod
    def _index(v, edges):
        n = len(edges) - 1
        idx = np.floor((np.asarray(v, dtype=float) - edges[0]) / (edges[-1] - edges[0]) * n)
        return np.clip(idx.astype(np.int64), 0, n - 1)

    def update(self, b, y):
        a = np.abs(np.asarray(b, dtype=float))
        ib = self._index(a, self.b_edges)
        iy = self._index(y, self.y_edges)
        nb, ny = self.counts.shape
        self.counts += np.bincount(ib * ny + iy, minlength=nb * ny).reshape(nb, ny)
        np.maximum.at(self.column_max_b, iy, a)
        return self

    def merge(self, other):
        if not (np.array_equal(self.b_edges, other.b_edges) and np.array_equal(self.y_edges, other.y_edges)):
            raise ValueError("cannot merge histograms with different bins")
        out = JointHistogram(len(self.b_edges) - 1, len(self.y_edges) - 1, (self.y_edges[0], self.y_edges[-1]))
        out.counts = self.counts + other.counts
        out.column_max_b = np.maximum(self.column_max_b, other.column_max_b)
        return out

    @property
    def b_marginal(self):
        return self.counts.sum(axis=1)

    @property
    def y_marginal(self):
        return self.counts.sum(axis=0)

    def column_max_bin(self):
        """Upper edge of the highest occupied ``|b|`` bin in each ``y`` column (NaN if empty)."""
        occupied = self.counts > 0
        out = np.full(self.counts.shape[1], np.nan)
        for j in range(self.counts.shape[1]):
            rows = np.flatnonzero(occupied[:, j])
            if rows.size:
                out[j] = self.b_edges[rows[-1] + 1]
        return out


def joint_histogram(b, y, bins_b=DEFAULT_JOINT_BINS[0], bins_y=DEFAULT_JOINT_BINS[1], y_range=(0.0, 1.0)):
    return JointHistogram(bins_b, bins_y, y_range).update(b, y)
