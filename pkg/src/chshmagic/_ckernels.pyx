# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled batch kernels.

Same signatures and output layouts as ``chshmagic._pykernels``.  Every loop
works one state (or one 4x4 matrix) at a time in registers, so no (N, 16, 4)
temporaries are built.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport log, sqrt

cnp.import_array()

BACKEND = "cython"

# Single-qubit Pauli action (sigma psi)[r] = phase[s][r] * psi[r ^ flip[s]],
# for s in I, X, Y, Z.
cdef int _FLIP[4]
cdef double complex _PH[4][2]
_FLIP[:] = [0, 1, 1, 0]
_PH[0][0] = 1; _PH[0][1] = 1
_PH[1][0] = 1; _PH[1][1] = 1
_PH[2][0] = -1j; _PH[2][1] = 1j
_PH[3][0] = 1; _PH[3][1] = -1


cdef inline void _expectations(const double complex[::1] psi, double* out) noexcept nogil:
    cdef int a, b, p, r, src
    cdef double complex acc
    for a in range(4):
        for b in range(4):
            p = 4 * a + b
            acc = 0
            for r in range(4):
                src = (((r >> 1) ^ _FLIP[a]) << 1) | ((r & 1) ^ _FLIP[b])
                acc = acc + psi[r].conjugate() * _PH[a][r >> 1] * _PH[b][r & 1] * psi[src]
            out[p] = acc.real


def pauli_expectations(psi):
    """Return ``<psi|P|psi>`` for all 16 two-qubit Pauli strings, shape (N, 16)."""
    cdef const double complex[:, ::1] v = np.ascontiguousarray(psi, dtype=np.complex128)
    cdef Py_ssize_t n = v.shape[0], i
    out = np.empty((n, 16), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            _expectations(v[i], &o[i, 0])
    return out


def state_features(psi):
    """Per-state ``[b0, m2, lam_max, lam_min]`` with m2 in nats."""
    cdef const double complex[:, ::1] v = np.ascontiguousarray(psi, dtype=np.complex128)
    cdef Py_ssize_t n = v.shape[0], i
    cdef int p
    cdef double e[16]
    cdef double s4, tr, det, disc, lam
    cdef double complex d
    out = np.empty((n, 4), dtype=np.float64)
    cdef double[:, ::1] o = out
    with nogil:
        for i in range(n):
            _expectations(v[i], e)
            o[i, 0] = e[5] + e[7] - e[13] + e[15]
            s4 = 0.0
            for p in range(16):
                s4 = s4 + e[p] * e[p] * e[p] * e[p]
            o[i, 1] = -log(s4 / 4.0)
            d = v[i, 0] * v[i, 3] - v[i, 1] * v[i, 2]
            det = d.real * d.real + d.imag * d.imag
            tr = 0.0
            for p in range(4):
                tr = tr + v[i, p].real * v[i, p].real + v[i, p].imag * v[i, p].imag
            disc = tr * tr - 4.0 * det
            if disc < 0.0:
                disc = 0.0
            lam = 0.5 * (tr + sqrt(disc))
            o[i, 2] = lam
            o[i, 3] = det / lam if lam > 0.0 else 0.0
    return out


def orthonormalize(z):
    """Gram-Schmidt (with one reorthogonalization pass) on each column set.

    Equivalent to the Q factor of a QR decomposition with positive real R
    diagonal.
    """
    src = np.asarray(z, dtype=np.complex128)
    out = np.array(src, dtype=np.complex128, order="C", copy=True)
    cdef double complex[:, :, ::1] q = out
    cdef Py_ssize_t n = q.shape[0], d = q.shape[1], i, j, k, r, sweep
    cdef double complex proj
    cdef double nrm
    with nogil:
        for i in range(n):
            for k in range(d):
                for sweep in range(2):
                    for j in range(k):
                        proj = 0
                        for r in range(d):
                            proj = proj + q[i, r, j].conjugate() * q[i, r, k]
                        for r in range(d):
                            q[i, r, k] = q[i, r, k] - proj * q[i, r, j]
                nrm = 0.0
                for r in range(d):
                    nrm = nrm + q[i, r, k].real * q[i, r, k].real + q[i, r, k].imag * q[i, r, k].imag
                nrm = sqrt(nrm)
                for r in range(d):
                    q[i, r, k] = q[i, r, k] / nrm
    return out


def twirled_states(core, g, int side):
    """Return ``G^dag core G |00>`` for every element of a stack of group draws.

    side 0: ``g`` is (N, 4, 4) and G = g.  side 1: G = g (x) I.  side 2: G = I (x) g.
    """
    if side not in (0, 1, 2):
        raise ValueError(f"side must be 0, 1 or 2, got {side}")
    cdef const double complex[:, ::1] u = np.ascontiguousarray(core, dtype=np.complex128)
    cdef const double complex[:, :, ::1] gg = np.ascontiguousarray(g, dtype=np.complex128)
    cdef Py_ssize_t n = gg.shape[0], i, r, c, a, b, j
    cdef double complex v[4]
    cdef double complex w[4]
    cdef double complex acc
    out = np.empty((n, 4), dtype=np.complex128)
    cdef double complex[:, ::1] o = out
    with nogil:
        for i in range(n):
            for r in range(4):
                v[r] = 0
            if side == 0:
                for r in range(4):
                    v[r] = gg[i, r, 0]
            elif side == 1:
                v[0] = gg[i, 0, 0]
                v[2] = gg[i, 1, 0]
            else:
                v[0] = gg[i, 0, 0]
                v[1] = gg[i, 1, 0]
            for r in range(4):
                acc = 0
                for c in range(4):
                    acc = acc + u[r, c] * v[c]
                w[r] = acc
            if side == 0:
                for r in range(4):
                    acc = 0
                    for c in range(4):
                        acc = acc + gg[i, c, r].conjugate() * w[c]
                    o[i, r] = acc
            elif side == 1:
                for a in range(2):
                    for b in range(2):
                        acc = 0
                        for j in range(2):
                            acc = acc + gg[i, j, a].conjugate() * w[2 * j + b]
                        o[i, 2 * a + b] = acc
            else:
                for a in range(2):
                    for b in range(2):
                        acc = 0
                        for j in range(2):
                            acc = acc + gg[i, j, b].conjugate() * w[2 * a + j]
                        o[i, 2 * a + b] = acc
    return out
