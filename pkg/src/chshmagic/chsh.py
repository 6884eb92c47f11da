"""Resource-free CHSH operators, state families, theorem checks and geometry.

A CHSH operator built from Pauli measurements is

    B = P_A (x) (P_B + P_B') + P_A' (x) (P_B - P_B'),   P in {X, Y, Z}.

The reference operator ``B0 = XX + XZ - ZX + ZZ`` is the member with
``P_A = X, P_A' = Z, P_B = Z, P_B' = X``.
"""
import itertools
import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from . import qcore, resources
from ._backend import kernels
from .errors import VerificationError

SQRT2 = math.sqrt(2.0)
TSIRELSON = 2.0 * SQRT2
LOCAL_BOUND = 2.0


@dataclass(frozen=True)
class ChshSpec:
    pa: str
    pa_prime: str
    pb: str
    pb_prime: str

    def __post_init__(self):
        for label in (self.pa, self.pa_prime, self.pb, self.pb_prime):
            if label not in ("X", "Y", "Z"):
                raise ValueError(f"CHSH measurement must be X, Y or Z, got {label!r}")

    @property
    def labels(self):
        return (self.pa, self.pa_prime, self.pb, self.pb_prime)

    @property
    def degenerate(self):
        return self.pa == self.pa_prime or self.pb == self.pb_prime

    @property
    def symmetric(self):
        """Same measurement pair on both sides, arranged like B0.

        Then ``B = P (x) P + P' (x) P' + (P (x) P' - P' (x) P)`` and the bracket
        vanishes on SWAP-symmetric states.
        """
        return self.pa == self.pb_prime and self.pa_prime == self.pb

    @property
    def mirrored(self):
        """``pa == pb`` and ``pa' == pb'``; symmetric under SWAP but not bounded on symmetric states."""
        return self.pa == self.pb and self.pa_prime == self.pb_prime

    def weights(self):
        """Coefficients of B on the 16 Pauli strings."""
        w = np.zeros(16)
        for coeff, a, b in (
            (1.0, self.pa, self.pb), (1.0, self.pa, self.pb_prime),
            (1.0, self.pa_prime, self.pb), (-1.0, self.pa_prime, self.pb_prime),
        ):
            w[qcore.pauli_index(a + b)] += coeff
        return w

    def matrix(self):
        return np.einsum("p,pij->ij", self.weights(), qcore.PAULIS)

    def __str__(self):
        return "".join(self.labels)


B0 = ChshSpec("X", "Z", "Z", "X")


def chsh_family():
    """All 81 label combinations; exactly 36 are non-degenerate."""
    return [ChshSpec(*labels) for labels in itertools.product("XYZ", repeat=4)]


def family_weights(specs=None):
    """(n_specs, 16) matrix mapping Pauli expectations to CHSH values."""
    specs = chsh_family() if specs is None else specs
    return np.array([s.weights() for s in specs])


def chsh_expectation(spec, psi):
    """``<psi|B|psi>`` for a CHSH spec."""
    psi = qcore.as_state(psi)
    return float(qcore.pauli_vector(psi) @ spec.weights())


def chsh_values(states, specs=None):
    """CHSH values for a batch of states, shape (n_states, n_specs)."""
    exps = kernels.pauli_expectations(np.asarray(states, dtype=complex))
    return exps @ family_weights(specs).T


# ---------------------------------------------------------------- state families

def w_theta(theta):
    """``(R_y(theta) (x) I) CX (H (x) I)``; maps |00> to the rotated Bell state."""
    return qcore.local(qcore.ry(theta), qcore.I2) @ qcore.CX @ qcore.local(qcore.H, qcore.I2)


def r_theta_state(theta):
    """``cos(theta)|00> + sin(theta)|11>``."""
    return np.array([math.cos(theta), 0.0, 0.0, math.sin(theta)], dtype=complex)


def rho_family_state(r, theta, phi):
    """Purification of ``rho_A = (I + r n.sigma)/2`` with Bloch direction (theta, phi).

    The |01> and |11> amplitudes carry ``sqrt((1 - r)/2)`` so that the vector is
    normalized for every ``r`` in [0, 1].
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError("r must lie in [0, 1]")
    plus, minus = math.sqrt((1 + r) / 2), math.sqrt((1 - r) / 2)
    c, s = math.cos(theta / 2), math.sin(theta / 2)
    return np.array([
        plus * c,
        -minus * np.exp(-1j * phi) * s,
        plus * np.exp(1j * phi) * s,
        minus * c,
    ])


class RhoClosedForms(NamedTuple):
    s1: float  # bits
    c_e: float
    m_nl: float
    b0: float


def rho_family_closed_forms(r):
    """Closed forms at theta = pi/4, phi = pi/3: (S1 in bits, C_E, M_NL, <B0>).

    The r = 1 endpoint is the analytic limit (S1 = C_E = 0).
    """
    if not 0.0 <= r <= 1.0:
        raise ValueError("r must lie in [0, 1]")
    one_minus = 1.0 - r * r
    if r == 1.0:
        s1, c_e = 0.0, 0.0
    else:
        s1 = 0.5 * math.log2(4.0 / one_minus) - 2.0 * r * math.atanh(r) / math.log(4.0)
        c_e = -((r * r - 1.0) * math.log(2.0 / (r + 1.0) - 1.0) ** 2) / 4.0
    m_nl = -math.log(1.0 - r * r + r**4) + 0.0
    b0 = 3.0 / 8.0 * (2.0 * math.sqrt(one_minus) + math.sqrt(2.0 - 2.0 * r * r) + 2.0 * SQRT2)
    return RhoClosedForms(s1, c_e, m_nl, b0)


# ---------------------------------------------------------------- optimal settings

def correlation_matrix(psi):
    """``T_ij = <sigma_i (x) sigma_j>`` for i, j in X, Y, Z; batched over leading axis."""
    exps = kernels.pauli_expectations(np.atleast_2d(np.asarray(psi, dtype=complex)))
    t = exps.reshape(-1, 4, 4)[:, 1:, 1:]
    return t if np.ndim(psi) == 2 else t[0]


def horodecki_max(psi):
    """Maximum CHSH value over all local measurement settings, ``2 sqrt(mu1 + mu2)``."""
    t = correlation_matrix(psi)
    mu = np.linalg.eigvalsh(np.swapaxes(t, -1, -2) @ t)
    top = np.clip(mu[..., 1] + mu[..., 2], 0.0, None)
    out = 2.0 * np.sqrt(top)
    return out if np.ndim(out) else float(out)


def tsirelson_gap(theta, u_a, u_b):
    """``2 sqrt2 - M_NL(theta)/2 - |<B0>|`` on ``(U_A (x) U_B)|r(theta)>``.

    ``u_a``/``u_b`` may be single 2x2 unitaries or stacks of them; M_NL in nats.
    """
    u_a = np.asarray(u_a, dtype=complex)
    u_b = np.asarray(u_b, dtype=complex)
    single = u_a.ndim == 2
    if single:
        u_a, u_b = u_a[None], u_b[None]
    r = r_theta_state(theta)
    m = r.reshape(2, 2)
    states = np.einsum("nai,ij,nbj->nab", u_a, m, u_b).reshape(-1, 4)
    b = kernels.state_features(states)[:, 0]
    m_nl = resources.nonlocal_magic_from_spectrum(max(math.cos(theta) ** 2, math.sin(theta) ** 2))
    gap = TSIRELSON - 0.5 * m_nl - np.abs(b)
    return float(gap[0]) if single else gap


# ---------------------------------------------------------------- theorem checks

@dataclass
class TheoremReport:
    name: str
    max_abs_b: float
    checked: int
    passed: bool
    details: dict


def _fail_if(condition, message):
    if condition:
        raise VerificationError(message)


def verify_theorem1(n_mixtures=10**4, rng=None, raise_on_failure=True):
    """No stabilizer state, pure or mixed, violates any resource-free CHSH operator."""
    from .ensembles import enumerate_stabilizer_states

    rng = np.random.default_rng(0) if rng is None else rng
    values = chsh_values(enumerate_stabilizer_states())  # (60, 81)
    abs_values = np.abs(values)
    pure_max = float(abs_values.max())
    off_lattice = float(np.max(np.abs(abs_values - np.round(abs_values))))
    lattice_ok = off_lattice < 1e-12 and set(np.unique(np.round(abs_values))) <= {0.0, 1.0, 2.0}
    weights = rng.dirichlet(np.full(values.shape[0], 0.1), size=int(n_mixtures))
    mixed_max = float(np.abs(weights @ values).max()) if n_mixtures else 0.0
    passed = pure_max <= LOCAL_BOUND + 1e-9 and mixed_max <= LOCAL_BOUND + 1e-9 and lattice_ok
    report = TheoremReport(
        "theorem1", max(pure_max, mixed_max), values.size + int(n_mixtures) * values.shape[1], passed,
        {"pure_max": pure_max, "mixed_max": mixed_max, "lattice_residual": off_lattice},
    )
    if raise_on_failure:
        _fail_if(not passed, f"stabilizer states violate CHSH: {report.details}")
    return report


def symmetric_hermitian_basis():
    """Basis of the 10-dimensional space of Hermitian operators commuting with SWAP."""
    basis = []
    single = qcore.SINGLE_PAULIS
    for i in range(4):
        basis.append(np.kron(single[i], single[i]))
        for j in range(i + 1, 4):
            basis.append(np.kron(single[i], single[j]) + np.kron(single[j], single[i]))
    return np.array(basis)


def random_symmetric_unitaries(n, rng):
    """``exp(-i H)`` with ``H`` a standard-normal combination of the symmetric basis."""
    basis = symmetric_hermitian_basis()
    coeffs = rng.standard_normal((int(n), len(basis)))
    h = np.einsum("nk,kij->nij", coeffs, basis)
    evals, evecs = np.linalg.eigh(h)
    return np.einsum("nij,nj,nkj->nik", evecs, np.exp(-1j * evals), evecs.conj())


def symmetric_specs():
    return [s for s in chsh_family() if s.symmetric]


def verify_theorem2(n_samples=10**4, rng=None, raise_on_failure=True):
    """SWAP-symmetric preparations never violate symmetric CHSH operators."""
    rng = np.random.default_rng(0) if rng is None else rng
    u = random_symmetric_unitaries(n_samples, rng)
    asym = float(np.max(np.abs(u @ qcore.SWAP - qcore.SWAP @ u)))
    values = chsh_values(u[:, :, 0], symmetric_specs())
    max_abs = float(np.abs(values).max())
    mirrored = [s for s in chsh_family() if s.mirrored and not s.degenerate]
    mirrored_max = float(np.abs(chsh_values(u[:, :, 0], mirrored)).max())
    passed = max_abs <= LOCAL_BOUND + 1e-9
    report = TheoremReport(
        "theorem2", max_abs, values.size, passed,
        {"n_unitaries": int(n_samples), "max_swap_commutator": asym,
         "mirrored_specs_max": mirrored_max},
    )
    if raise_on_failure:
        _fail_if(not passed, f"symmetric unitary violates a symmetric CHSH operator: {max_abs}")
    return report


def verify_theorem3(theta_grid=181, n_haar=10**5, rng=None, raise_on_failure=True):
    """States without local magic never violate; non-local magic rules out Tsirelson.

    Exhaustive part: every local Clifford pair applied to ``|r(theta)>`` on an
    evenly spaced grid over [0, pi], for all 81 specs.  Sampled part: Haar states
    with ``M_NL > 0.01`` stay below ``2 sqrt2 - M_NL/2`` (and hence below 2 sqrt2).
    """
    from .ensembles import haar_states, local_clifford_pairs

    rng = np.random.default_rng(0) if rng is None else rng
    pairs = local_clifford_pairs()
    weights = family_weights().T
    grid_max = 0.0
    for theta in np.linspace(0.0, math.pi, int(theta_grid)):
        states = pairs @ r_theta_state(theta)
        exps = kernels.pauli_expectations(states)
        grid_max = max(grid_max, float(np.abs(exps @ weights).max()))

    psi = haar_states(n_haar, rng)
    lam = kernels.state_features(psi)[:, 2]
    m_nl = resources.nonlocal_magic_from_spectrum(lam)
    best = horodecki_max(psi)
    mask = m_nl > 0.01
    tsirelson_excess = float(np.max(best[mask] - (TSIRELSON - 1e-6), initial=-np.inf))
    bound_excess = float(np.max(best - (TSIRELSON - 0.5 * m_nl) - 1e-6, initial=-np.inf))
    passed = grid_max <= LOCAL_BOUND + 1e-12 and tsirelson_excess < 0 and bound_excess <= 0
    report = TheoremReport(
        "theorem3", grid_max, int(theta_grid) * len(pairs) * 81, passed,
        {"haar_states": int(n_haar), "haar_with_nl_magic": int(mask.sum()),
         "tsirelson_excess": tsirelson_excess, "nl_bound_excess": bound_excess},
    )
    if raise_on_failure:
        _fail_if(not passed, f"local Clifford W(theta) check failed: {report}")
    return report


# ---------------------------------------------------------------- geometry

class HurwitzCoords(NamedTuple):
    theta2: float
    theta3: float


def _b0_eigenbasis():
    evals, evecs = np.linalg.eigh(B0.matrix())
    lo, hi = evecs[:, np.argmin(evals)], evecs[:, np.argmax(evals)]
    kernel_proj = qcore.I4 - np.outer(lo, lo.conj()) - np.outer(hi, hi.conj())
    kernel = []
    for k in range(4):
        v = kernel_proj[:, k].copy()
        for u in kernel:
            v -= np.vdot(u, v) * u
        n = np.linalg.norm(v)
        if n > 1e-8:
            kernel.append(v / n)
        if len(kernel) == 2:
            break
    return np.column_stack([lo, hi] + kernel)


#: columns: eigenvectors of B0 for -2 sqrt2, +2 sqrt2, 0, 0
B0_EIGENBASIS = _b0_eigenbasis()
B0_EIGENVALUES = np.array([-TSIRELSON, TSIRELSON, 0.0, 0.0])


def hurwitz_angles(psi):
    """Batched (theta2, theta3) for states of shape (..., 4)."""
    amps = np.abs(np.asarray(psi, dtype=complex) @ B0_EIGENBASIS.conj())
    theta3 = np.arccos(np.clip(amps[..., 0], 0.0, 1.0))
    s3 = np.sin(theta3)
    safe = np.where(s3 < 1e-12, 1.0, s3)
    theta2 = np.where(s3 < 1e-12, 0.0, np.arccos(np.clip(amps[..., 1] / safe, 0.0, 1.0)))
    return theta2, theta3


def hurwitz_coords(psi):
    """Hurwitz angles of ``psi`` in the B0 eigenbasis (only theta2, theta3 matter)."""
    theta2, theta3 = hurwitz_angles(qcore.as_state(psi))
    return HurwitzCoords(float(theta2), float(theta3))


def hurwitz_violation_margin(theta2, theta3):
    return np.abs(np.cos(theta3) ** 2 - np.sin(theta3) ** 2 * np.cos(theta2) ** 2)


def hurwitz_violates(c):
    """Strict violation test ``|cos^2 t3 - sin^2 t3 cos^2 t2| > 1/sqrt2``."""
    return bool(hurwitz_violation_margin(c.theta2, c.theta3) > 1.0 / SQRT2)
