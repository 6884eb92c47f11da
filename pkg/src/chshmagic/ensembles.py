"""Haar sampling, Clifford/stabilizer enumeration and twirled ensembles.

Finite groups are enumerated once per process by breadth-first closure over
their generators and kept as read-only arrays.  Monte Carlo draws come from
per-worker streams derived deterministically from ``(seed, worker_id)``.
"""
import functools
import os
import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import qcore
from ._backend import kernels
from .errors import VerificationError

CACHE_ENV = "CHSHMAGIC_CACHE_DIR"
CACHE_MAGIC = b"CHSHCLIF"
CACHE_VERSION = 1
_HEADER = struct.Struct("<8sIIII")

CLIFFORD_ORDER = {1: 24, 2: 11520}
N_STABILIZER_STATES = 60

#: draw kinds; the last two are the tensor-product alternatives for the symmetric Clifford twirl
GROUP_KINDS = ("U_full", "U_A", "U_B", "C_full", "C_A", "C_B", "C_local", "C_diag")
_SIDE = {
    "U_full": 0, "U_A": 1, "U_B": 2,
    "C_full": 0, "C_A": 1, "C_B": 2, "C_local": 0, "C_diag": 0,
}


# ---------------------------------------------------------------- random streams

def worker_rng(seed, worker=0):
    """Independent generator for one worker, a pure function of (seed, worker)."""
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(int(worker),)))


def split_counts(n, workers):
    """Deterministic partition of ``n`` samples over ``workers`` streams."""
    base, extra = divmod(int(n), int(workers))
    return [base + (1 if w < extra else 0) for w in range(int(workers))]


# ---------------------------------------------------------------- Haar measure

def haar_unitaries(n, dim, rng):
    """``n`` Haar-random ``dim x dim`` unitaries, shape (n, dim, dim).

    Ginibre matrix -> orthonormalized columns, with the phases of the
    triangular factor's diagonal removed.
    """
    shape = (int(n), dim, dim)
    z = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / np.sqrt(2)
    return kernels.orthonormalize(z)


def haar_unitary(dim, rng):
    if dim not in (2, 4):
        raise ValueError("dim must be 2 or 4")
    return haar_unitaries(1, dim, rng)[0]


def haar_states(n, rng):
    """``n`` Haar-random two-qubit pure states, shape (n, 4)."""
    z = rng.standard_normal((int(n), 4)) + 1j * rng.standard_normal((int(n), 4))
    return z / np.linalg.norm(z, axis=1, keepdims=True)


def haar_state(rng):
    return haar_states(1, rng)[0]


# ---------------------------------------------------------------- enumeration

def canonical_phase(m, tol=1e-8):
    """Rotate ``m`` so its first nonzero entry in column-major order is real positive."""
    m = np.asarray(m, dtype=complex)
    flat = m.T.reshape(-1) if m.ndim == 2 else m.reshape(-1)
    k = np.flatnonzero(np.abs(flat) > tol)[0]
    return m * (abs(flat[k]) / flat[k])


def _phase_key(m):
    return (np.round(m.view(np.float64), 10) + 0.0).tobytes()


def _closure(generators, dim):
    start = np.eye(dim, dtype=complex)
    found = {_phase_key(start): start}
    order = [start]
    frontier = [start]
    while frontier:
        nxt = []
        for m in frontier:
            for g in generators:
                c = canonical_phase(g @ m)
                key = _phase_key(c)
                if key not in found:
                    found[key] = c
                    order.append(c)
                    nxt.append(c)
        frontier = nxt
    return np.array(order)


def _generators(qubits):
    if qubits == 1:
        return [qcore.H, qcore.S]
    return [
        qcore.local(qcore.H, qcore.I2), qcore.local(qcore.I2, qcore.H),
        qcore.local(qcore.S, qcore.I2), qcore.local(qcore.I2, qcore.S),
        qcore.CX, qcore.CX_B,
    ]


def _cache_path(qubits, cache_dir=None):
    root = cache_dir if cache_dir is not None else os.environ.get(CACHE_ENV)
    if not root:
        return None
    return Path(root) / f"clifford{qubits}_v{CACHE_VERSION}.bin"


def serialize_table(table, qubits):
    """Versioned binary form: header then row-major (re, im) float64 pairs."""
    table = np.ascontiguousarray(table, dtype="<c16")
    n, dim, _ = table.shape
    return _HEADER.pack(CACHE_MAGIC, CACHE_VERSION, qubits, n, dim) + table.tobytes()


def deserialize_table(blob):
    magic, version, qubits, n, dim = _HEADER.unpack_from(blob)
    if magic != CACHE_MAGIC or version != CACHE_VERSION:
        raise ValueError("not a chshmagic Clifford table (bad magic or version)")
    expected = _HEADER.size + n * dim * dim * 16
    if len(blob) != expected:
        raise ValueError(f"truncated Clifford table: {len(blob)} bytes, expected {expected}")
    data = np.frombuffer(blob, dtype="<c16", offset=_HEADER.size).reshape(n, dim, dim)
    return qubits, data.astype(complex)


def _build_clifford(qubits):
    if qubits not in CLIFFORD_ORDER:
        raise ValueError("only 1- and 2-qubit Clifford groups are supported")
    table = _closure(_generators(qubits), 2**qubits)
    if len(table) != CLIFFORD_ORDER[qubits]:
        raise VerificationError(
            f"{qubits}-qubit Clifford closure has {len(table)} elements, "
            f"expected {CLIFFORD_ORDER[qubits]}"
        )
    return table


@functools.lru_cache(maxsize=None)
def _clifford_cached(qubits, cache_dir):
    path = _cache_path(qubits, cache_dir)
    if path is not None and path.exists():
        try:
            q, table = deserialize_table(path.read_bytes())
            if q == qubits and len(table) == CLIFFORD_ORDER[qubits]:
                table.setflags(write=False)
                return table
        except (ValueError, struct.error):
            pass
    table = _build_clifford(qubits)
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_bytes(serialize_table(table, qubits))
    table.setflags(write=False)
    return table


def enumerate_clifford(qubits, cache_dir=None):
    """Clifford group modulo global phase as an (N, d, d) read-only array.

    Sizes are 24 (one qubit) and 11520 (two qubits).  When a cache directory
    is given, or set through ``CHSHMAGIC_CACHE_DIR``, the two-qubit table is
    read from / written to a binary file there.
    """
    if cache_dir is None:
        cache_dir = os.environ.get(CACHE_ENV) or None
    return _clifford_cached(int(qubits), None if cache_dir is None else str(cache_dir))


@functools.lru_cache(maxsize=None)
def enumerate_stabilizer_states():
    """The 60 two-qubit pure stabilizer states, orbit of |00> modulo phase.

    The orbit is closed under the Clifford generators directly on state
    vectors, which reaches the same set as applying all 11520 elements.
    """
    start = qcore.KET_00.copy()
    found = {_phase_key(start): start}
    frontier = [start]
    gens = _generators(2)
    while frontier:
        nxt = []
        for v in frontier:
            for g in gens:
                w = canonical_phase(g @ v)
                key = _phase_key(w)
                if key not in found:
                    found[key] = w
                    nxt.append(w)
        frontier = nxt
    states = np.array(list(found.values()))
    if len(states) != N_STABILIZER_STATES:
        raise VerificationError(f"found {len(states)} stabilizer states, expected 60")
    m2 = kernels.state_features(states)[:, 1]
    if np.max(np.abs(m2)) > 1e-12:
        raise VerificationError("an enumerated stabilizer state has nonzero stabilizer entropy")
    states.setflags(write=False)
    return states


@functools.lru_cache(maxsize=None)
def local_clifford_pairs():
    """All 576 products ``C_A (x) C_B`` of single-qubit Cliffords."""
    c1 = enumerate_clifford(1)
    table = np.einsum("aij,bkl->abikjl", c1, c1).reshape(len(c1) ** 2, 4, 4)
    table.setflags(write=False)
    return table


@functools.lru_cache(maxsize=None)
def diagonal_cliffords():
    """The 24 products ``C (x) C`` with the same Clifford on both qubits."""
    table = np.array([np.kron(c, c) for c in enumerate_clifford(1)])
    table.setflags(write=False)
    return table


# ---------------------------------------------------------------- ensembles

@dataclass(frozen=True)
class GroupTag:
    """Which group twirls the core, and whether it is enumerated or sampled."""

    kind: str
    method: str = ""

    def __post_init__(self):
        if self.kind not in GROUP_KINDS:
            raise ValueError(f"unknown group kind {self.kind!r}")
        method = self.method or ("exact_enumeration" if self.is_finite else "monte_carlo")
        if method not in ("exact_enumeration", "monte_carlo"):
            raise ValueError(f"unknown method {method!r}")
        if method == "exact_enumeration" and not self.is_finite:
            raise ValueError(f"{self.kind} cannot be enumerated exactly")
        object.__setattr__(self, "method", method)

    @property
    def is_finite(self):
        return self.kind.startswith("C_")

    @property
    def side(self):
        """0: full 4x4 action, 1: qubit A only, 2: qubit B only."""
        return _SIDE[self.kind]


def group_table(kind):
    """Elements of a finite group in the layout expected by ``twirled_states``."""
    if kind == "C_full":
        return enumerate_clifford(2)
    if kind in ("C_A", "C_B"):
        return enumerate_clifford(1)
    if kind == "C_local":
        return local_clifford_pairs()
    if kind == "C_diag":
        return diagonal_cliffords()
    raise ValueError(f"{kind} is not a finite group")


def group_size(kind):
    return len(group_table(kind))


def sample_group(kind, n, rng):
    """``n`` uniform draws from the group (Haar for U_*, uniform index for C_*)."""
    if kind == "U_full":
        return haar_unitaries(n, 4, rng)
    if kind in ("U_A", "U_B"):
        return haar_unitaries(n, 2, rng)
    table = group_table(kind)
    return table[rng.integers(0, len(table), size=int(n))]


def embed(g, side):
    g = np.asarray(g, dtype=complex)
    if side == 1:
        return np.kron(g, qcore.I2)
    if side == 2:
        return np.kron(qcore.I2, g)
    return g


@dataclass(frozen=True)
class EnsembleSpec:
    """Isospectral ensemble ``{g^dag U_c g : g in group}``."""

    core: np.ndarray = field(repr=False)
    group: GroupTag
    n_samples: int = 10**6
    seed: int = 0

    def __post_init__(self):
        core = qcore.as_unitary(self.core)
        if core.shape != (4, 4):
            raise ValueError("core must be a 4x4 unitary")
        if isinstance(self.group, str):
            object.__setattr__(self, "group", GroupTag(self.group))
        object.__setattr__(self, "core", core)
        if self.n_samples < 1:
            raise ValueError("n_samples must be positive")


def draw_ensemble_element(spec, index=None, rng=None):
    """One ensemble element ``g^dag U_c g`` as a 4x4 matrix.

    Exact-enumeration specs take an element ``index``; Monte Carlo specs take a
    generator ``rng``.
    """
    tag = spec.group
    if tag.method == "exact_enumeration":
        table = group_table(tag.kind)
        if index is None or not 0 <= index < len(table):
            raise IndexError(f"index {index} out of range for {tag.kind} ({len(table)} elements)")
        g = table[index]
    else:
        if rng is None:
            raise ValueError("Monte Carlo ensembles need an rng")
        g = sample_group(tag.kind, 1, rng)[0]
    g = embed(g, tag.side)
    return g.conj().T @ spec.core @ g


def twirled_states(core, kind, draws):
    """States ``g^dag U_c g |00>`` for a stack of draws of group ``kind``."""
    return kernels.twirled_states(np.asarray(core, dtype=complex), draws, _SIDE[kind])
