"""Data behind each figure and table, as plain column tables.

Every function returns a ``Result``: named tables plus metadata and a flag
saying whether all embedded checks passed.  Rendering lives in ``cli``.
"""
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from . import chsh, resources, stats, twirling
from .ensembles import (
    CLIFFORD_ORDER, N_STABILIZER_STATES, enumerate_clifford, enumerate_stabilizer_states,
    haar_states, haar_unitaries, serialize_table, split_counts, worker_rng,
)
from .errors import VerificationError

LN2 = math.log(2.0)
CHUNK = 2**16

#: resource axes for conditionals, ranges in nats (C_E in nats squared)
RESOURCE_RANGES = {
    "s1": (0.0, LN2),
    "m2": (0.0, math.log(16.0 / 7.0)),
    "m_nl": (0.0, math.log(4.0 / 3.0)),
    "m_loc": (0.0, math.log(16.0 / 7.0)),
    "c_e": (0.0, 0.45),
}
_ENTROPIC = ("s1", "m2", "m_nl", "m_loc")
#: (|b| bins, M_NL bins) for the monotone column-maximum check
SHAPE_CHECK_BINS = (50, 20)


@dataclass
class Table:
    columns: list
    rows: list


@dataclass
class Result:
    tables: dict
    meta: dict = field(default_factory=dict)
    ok: bool = True


def _scale(base):
    return 1.0 if base in (None, "e", math.e) else 1.0 / math.log(float(base))


def _ranges(base):
    s = _scale(base)
    return {k: (lo * s, hi * s) if k in _ENTROPIC else (lo, hi) for k, (lo, hi) in RESOURCE_RANGES.items()}


# ---------------------------------------------------------------- Haar scan

@dataclass
class ScanConfig:
    bins: int = stats.DEFAULT_BINS
    joint_bins: tuple = stats.DEFAULT_JOINT_BINS
    geometry_bins: int = 50
    base: object = None


class HaarScan:
    """All per-state accumulators filled in one pass over Haar-random states."""

    def __init__(self, cfg):
        self.cfg = cfg
        ranges = _ranges(cfg.base)
        self.conditionals = {k: stats.ConditionalAccumulator(cfg.bins, r) for k, r in ranges.items()}
        fine = tuple(v * _scale(cfg.base) for v in stats.FINE_MLOC_RANGE)
        self.fine_mloc = stats.ConditionalAccumulator(stats.FINE_MLOC_BINS, fine)
        self.joint = {
            k: stats.JointHistogram(cfg.joint_bins[0], cfg.joint_bins[1], ranges[k]) for k in ("m_nl", "m_loc")
        }
        # column maxima are extreme values; a coarse grid keeps their sampling noise below one bin
        self.joint["m_nl_coarse"] = stats.JointHistogram(*SHAPE_CHECK_BINS, ranges["m_nl"])
        g = cfg.geometry_bins
        self.geometry = stats.JointHistogram(g, g, (0.0, math.pi / 2))
        self.geometry_viol = np.zeros((g, g), dtype=np.int64)
        self.moments = twirling.Moments()
        self.hurwitz_disagree = 0
        self.min_gap_margin = math.inf

    def update(self, psi):
        r = resources.batch_resources(psi)
        b = r["b0"]
        s = _scale(self.cfg.base)
        for k, acc in self.conditionals.items():
            acc.update(b, r[k] * s if k in _ENTROPIC else r[k])
        m_loc = r["m_loc"] * s
        near = m_loc <= self.fine_mloc.edges[-1]
        self.fine_mloc.update(b[near], m_loc[near])
        for k, h in self.joint.items():
            h.update(b, r[k.replace("_coarse", "")] * s)
        t2, t3 = chsh.hurwitz_angles(psi)
        i2 = stats.JointHistogram._index(t2, self.geometry.y_edges)
        i3 = stats.JointHistogram._index(t3, self.geometry.y_edges)
        g = self.geometry.counts.shape[0]
        self.geometry.counts += np.bincount(i2 * g + i3, minlength=g * g).reshape(g, g)
        viol = np.abs(b) > 2.0
        self.geometry_viol += np.bincount(i2[viol] * g + i3[viol], minlength=g * g).reshape(g, g)
        hv = chsh.hurwitz_violation_margin(t2, t3) > 1.0 / math.sqrt(2.0)
        boundary = np.abs(np.abs(b) - 2.0) < 1e-9
        self.hurwitz_disagree += int(np.count_nonzero((hv != viol) & ~boundary))
        self.moments = self.moments.merge(twirling.Moments.of(b))
        best = chsh.horodecki_max(psi)
        margin = chsh.TSIRELSON - 0.5 * r["m_nl"] - best
        self.min_gap_margin = min(self.min_gap_margin, float(margin.min()))
        return self

    def merge(self, other):
        out = HaarScan(self.cfg)
        out.conditionals = {k: a.merge(other.conditionals[k]) for k, a in self.conditionals.items()}
        out.fine_mloc = self.fine_mloc.merge(other.fine_mloc)
        out.joint = {k: h.merge(other.joint[k]) for k, h in self.joint.items()}
        out.geometry = self.geometry.merge(other.geometry)
        out.geometry_viol = self.geometry_viol + other.geometry_viol
        out.moments = self.moments.merge(other.moments)
        out.hurwitz_disagree = self.hurwitz_disagree + other.hurwitz_disagree
        out.min_gap_margin = min(self.min_gap_margin, other.min_gap_margin)
        return out


def _scan_worker(args):
    cfg, n, seed, worker, chunk = args
    rng = worker_rng(seed, worker)
    scan = HaarScan(cfg)
    done = 0
    while done < n:
        k = min(chunk, n - done)
        scan.update(haar_states(k, rng))
        done += k
    return scan


def haar_scan(n, seed=0, workers=1, cfg=None, chunk=CHUNK):
    """Fill a ``HaarScan`` from ``n`` states split over per-worker streams."""
    cfg = ScanConfig() if cfg is None else cfg
    jobs = [(cfg, c, seed, w, chunk) for w, c in enumerate(split_counts(n, workers))]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_scan_worker, jobs))
    else:
        parts = [_scan_worker(j) for j in jobs]
    total = HaarScan(cfg)
    for p in parts:
        total = total.merge(p)
    return total


def _conditional_rows(name, res):
    rows = []
    py = res.marginal
    for i in range(len(res.counts)):
        p = None if np.isnan(res.p_viol[i]) else float(res.p_viol[i])
        e = None if np.isnan(res.stderr[i]) else float(res.stderr[i])
        rows.append([name, float(res.bin_edges[i]), float(res.bin_edges[i + 1]), int(res.counts[i]),
                     int(res.violations[i]), p, e, float(py[i])])
    return rows


_COND_COLUMNS = ["resource", "bin_lo", "bin_hi", "count", "violations", "p_viol", "stderr", "p_y"]


def _joint_rows(h):
    rows = []
    nb, ny = h.counts.shape
    for i in range(nb):
        for j in range(ny):
            rows.append([float(h.b_edges[i]), float(h.b_edges[i + 1]), float(h.y_edges[j]),
                         float(h.y_edges[j + 1]), int(h.counts[i, j])])
    return rows


def _column_rows(h):
    rows = []
    for j, n in enumerate(h.y_marginal):
        m = float(h.column_max_b[j]) if n else None
        rows.append([float(h.y_edges[j]), float(h.y_edges[j + 1]), int(n), m])
    return rows


def column_max_nonincreasing(h, slack_bins=1):
    """Column maxima of |b| never rise by more than ``slack_bins`` b-bins along y."""
    width = h.b_edges[1] - h.b_edges[0]
    occupied = h.y_marginal > 0
    cmax = h.column_max_b[occupied]
    running = np.minimum.accumulate(cmax)
    return bool(np.all(cmax <= running + slack_bins * width + 1e-12))


# ---------------------------------------------------------------- experiments

def fig1(grid=361, base=None):
    """B0 value, state SE and non-stabilizing power along W(theta)|00>."""
    s = _scale(base)
    rows = []
    worst = 0.0
    for t in np.linspace(0.0, 2.0 * math.pi, int(grid)):
        u = chsh.w_theta(t)
        psi = u[:, 0]
        b = chsh.chsh_expectation(chsh.B0, psi)
        m2 = resources.stabilizer_entropy_pure(psi)
        power = resources.nonstabilizing_power(u)
        closed = -math.log((7.0 + math.cos(4 * t)) / 8.0)
        worst = max(worst, abs(m2 - closed), abs(power - 0.8 * closed))
        rows.append([float(t), b, m2 * s, power * s])
    ok = worst < 1e-10
    return Result({"fig1": Table(["theta", "b", "m2_state", "m2_power"], rows)},
                  {"closed_form_max_deviation": worst}, ok)


def fig2(grid=200, samples=10**4, seed=0):
    """Distribution of 2 sqrt2 - M_NL/2 - |<B0>| over random local frames of |r(theta)>."""
    rng = worker_rng(seed, 0)
    u_a = haar_unitaries(samples, 2, rng)
    u_b = haar_unitaries(samples, 2, rng)
    rows = []
    overall = math.inf
    for t in np.linspace(0.0, math.pi, int(grid)):
        f = chsh.tsirelson_gap(t, u_a, u_b)
        lam = max(math.cos(t) ** 2, math.sin(t) ** 2)
        overall = min(overall, float(f.min()))
        rows.append([float(t), resources.nonlocal_magic_from_spectrum(lam), float(f.min()),
                     float(f.mean()), float(f.max())])
    ok = overall >= -1e-9
    return Result({"fig2": Table(["theta", "m_nl", "f_min", "f_mean", "f_max"], rows)},
                  {"f_min_overall": overall}, ok)


def fig3(grid=101, base=2):
    """Entropy, capacity, non-local magic and B0 value along the rho(r) family."""
    theta, phi = math.pi / 4, math.pi / 3
    rows = []
    worst = 0.0
    for r in np.linspace(0.0, 1.0, int(grid)):
        psi = chsh.rho_family_state(float(r), theta, phi)
        num = (resources.entanglement_entropy(psi, 2), resources.entanglement_capacity(psi),
               resources.nonlocal_magic(psi), chsh.chsh_expectation(chsh.B0, psi))
        closed = chsh.rho_family_closed_forms(float(r))
        worst = max(worst, max(abs(a - b) for a, b in zip(num, closed)))
        rows.append([float(r), *num, *closed])
    ok = worst < 1e-9
    cols = ["r", "s1_bits", "c_e", "m_nl", "b0", "s1_closed", "c_e_closed", "m_nl_closed", "b0_closed"]
    return Result({"fig3": Table(cols, rows)}, {"closed_form_max_deviation": worst}, ok)


def fig4(samples=10**6, seed=0, workers=1, bins=stats.DEFAULT_BINS, base=None):
    """Conditional violation probabilities and the |b| x M_NL density."""
    scan = haar_scan(samples, seed, workers, ScanConfig(bins=bins, base=base))
    rows = []
    for k in ("s1", "m_nl", "m_loc", "m2", "c_e"):
        rows.extend(_conditional_rows(k, scan.conditionals[k].result()))
    h = scan.joint["m_nl"]
    ok = column_max_nonincreasing(scan.joint["m_nl_coarse"])
    return Result(
        {
            "conditional": Table(_COND_COLUMNS, rows),
            "joint_b_m_nl": Table(["b_lo", "b_hi", "y_lo", "y_hi", "count"], _joint_rows(h)),
            "column_max_m_nl": Table(["y_lo", "y_hi", "count", "max_abs_b"], _column_rows(scan.joint["m_nl_coarse"])),
        },
        {"stderr": "binomial sqrt(p(1-p)/n)", "p_viol": scan.moments.viol / scan.moments.n,
         "column_max_nonincreasing": ok},
        ok,
    )


def fig6(samples=10**6, seed=0, workers=1, base=None):
    """Fine binning of P(viol | M_LOC) near zero and the |b| x M_LOC density."""
    scan = haar_scan(samples, seed, workers, ScanConfig(base=base))
    fine = scan.fine_mloc.result()
    h = scan.joint["m_loc"]
    return Result(
        {
            "conditional_fine_m_loc": Table(_COND_COLUMNS, _conditional_rows("m_loc", fine)),
            "joint_b_m_loc": Table(["b_lo", "b_hi", "y_lo", "y_hi", "count"], _joint_rows(h)),
        },
        {"stderr": "binomial sqrt(p(1-p)/n)"},
    )


def geometry(samples=10**6, seed=0, workers=1, bins=50):
    """Density of Haar states and of violating states over the (theta2, theta3) plane."""
    scan = haar_scan(samples, seed, workers, ScanConfig(geometry_bins=bins))
    g = scan.geometry
    rows = []
    e = g.y_edges
    for i in range(len(e) - 1):
        for j in range(len(e) - 1):
            t2, t3 = 0.5 * (e[i] + e[i + 1]), 0.5 * (e[j] + e[j + 1])
            pred = chsh.hurwitz_violation_margin(t2, t3) > 1.0 / math.sqrt(2.0)
            rows.append([float(t2), float(t3), int(g.counts[i, j]), int(scan.geometry_viol[i, j]), int(pred)])
    ok = scan.hurwitz_disagree == 0
    return Result({"geometry": Table(["theta2", "theta3", "count", "violating", "predicted"], rows)},
                  {"hurwitz_disagreements": scan.hurwitz_disagree}, ok)


def exact(samples=10**6, seed=0, workers=1):
    """Closed-form Haar statistics and a Monte Carlo cross-check."""
    p = stats.pviol_exact()
    quad = lambda f: integrate.quad(f, -stats.B_MAX, stats.B_MAX, points=[0.0], epsabs=1e-13, epsrel=1e-13)[0]
    norm = quad(stats.pdf_b0_haar)
    mean = quad(lambda x: x * stats.pdf_b0_haar(x))
    var = quad(lambda x: x * x * stats.pdf_b0_haar(x))
    tail = 2.0 * integrate.quad(stats.pdf_b0_haar, 2.0, stats.B_MAX, epsabs=1e-14, epsrel=1e-14)[0]
    cheb = stats.chebyshev_bound(0.0, 0.8, 2.0)
    scan = haar_scan(samples, seed, workers, ScanConfig(bins=2, joint_bins=(2, 2), geometry_bins=2))
    m = scan.moments
    p_mc = m.viol / m.n
    se = stats.violation_stderr(p, m.n)
    rows = [
        ["pviol", p, tail, abs(p - tail) < 1e-12],
        ["variance", 0.8, var, abs(var - 0.8) < 1e-10],
        ["mean", 0.0, mean, abs(mean) < 1e-10],
        ["normalization", 1.0, norm, abs(norm - 1.0) < 1e-10],
        ["chebyshev", cheb, 0.2, abs(cheb - 0.2) < 1e-15],
        ["pviol_mc", p, p_mc, abs(p_mc - p) <= 5.0 * se],
        ["variance_mc", 0.8, m.variance, abs(m.variance - 0.8) <= 5.0 * math.sqrt(max(m.m4 / m.n - m.variance**2, 0) / m.n)],
    ]
    ok = all(r[3] for r in rows)
    return Result({"exact": Table(["quantity", "closed_form", "check", "passed"], rows)},
                  {"pviol_mc_stderr": se}, ok)


def verify(seed=0, samples=10**4):
    """Theorem checks; each row reports the largest |b| seen."""
    rows = []
    ok = True
    checks = (
        lambda: chsh.verify_theorem1(samples, worker_rng(seed, 0), raise_on_failure=False),
        lambda: chsh.verify_theorem2(samples, worker_rng(seed, 1), raise_on_failure=False),
        lambda: chsh.verify_theorem3(181, 10 * samples, worker_rng(seed, 2), raise_on_failure=False),
    )
    for check in checks:
        rep = check()
        ok &= rep.passed
        rows.append([rep.name, rep.max_abs_b, rep.checked, rep.passed])
    return Result({"verify": Table(["theorem", "max_abs_b", "checked", "passed"], rows)}, {}, ok)


def table1(cores=None):
    report = twirling.table1_report() if cores is None else twirling.table1_report(cores)
    rows = [list(r) for r in report]
    return Result({"table1": Table(list(twirling.TableRow._fields), rows)}, {},
                  all(r[-1] for r in rows))


def table2(samples=10**6, seed=0, workers=1, cores=None, groups=None):
    cols = list(twirling.TABLE2_COLUMNS) if groups is None else list(groups)
    idx = [twirling.TABLE2_COLUMNS.index(c) for c in cols]
    out = []
    for row in twirling.table2_report(samples, seed, workers, cores):
        for i in idx:
            out.append([row.core, twirling.TABLE2_COLUMNS[i], row.p_viol[i], row.stderr[i],
                        float(row.reference[i]), row.passed[i]])
        out.append([row.core, "M2_bits", row.m2_bits, 0.0, row.reference_m2, row.m2_passed])
    ok = all(r[-1] for r in out)
    return Result({"table2": Table(["core", "column", "value", "stderr", "reference", "passed"], out)},
                  {"units": "percent; M2 in bits"}, ok)


def enumerate_groups(cache_dir=None):
    """Group orders and a digest of the serialized tables (regenerated twice)."""
    import hashlib

    from . import ensembles

    rows = []
    ok = True
    for q in (1, 2):
        table = enumerate_clifford(q, cache_dir)
        fresh = ensembles._build_clifford(q)
        d1 = hashlib.sha256(serialize_table(table, q)).hexdigest()
        d2 = hashlib.sha256(serialize_table(fresh, q)).hexdigest()
        good = len(table) == CLIFFORD_ORDER[q] and d1 == d2
        ok &= good
        rows.append([f"clifford{q}", len(table), CLIFFORD_ORDER[q], d1, good])
    states = enumerate_stabilizer_states()
    good = len(states) == N_STABILIZER_STATES
    ok &= good
    digest = hashlib.sha256(np.ascontiguousarray(states, dtype="<c16").tobytes()).hexdigest()
    rows.append(["stabilizer_states", len(states), N_STABILIZER_STATES, digest, good])
    return Result({"enumerate": Table(["table", "size", "expected", "sha256", "passed"], rows)}, {}, ok)


def require(result):
    """Raise ``VerificationError`` if an experiment's embedded checks failed."""
    if not result.ok:
        raise VerificationError("experiment checks failed")
    return result


__all__ = [
    "Result", "Table", "HaarScan", "ScanConfig", "haar_scan", "fig1", "fig2", "fig3", "fig4", "fig6",
    "geometry", "exact", "verify", "table1", "table2", "enumerate_groups", "column_max_nonincreasing",
]
