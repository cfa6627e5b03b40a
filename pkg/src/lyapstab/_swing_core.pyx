# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled swing-equation kernel.

Same contract as :mod:`lyapstab._swing_numpy` but with the whole RK4 loop in
C; the per-step cost is what dominates long clearing-time sweeps.
"""

import numpy as np

from libc.math cimport cos, sin, isfinite


cdef void _accel(double[::1] delta, double[::1] omega,
                 double[::1] minv, double[::1] damp,
                 double[::1] pm, double[::1] emf,
                 double[:, ::1] G, double[:, ::1] B,
                 double[::1] out) noexcept nogil:
    cdef Py_ssize_t n = delta.shape[0]
    cdef Py_ssize_t i, j
    cdef double pe, dij
    for i in range(n):
        if minv[i] == 0.0:
            out[i] = 0.0
            continue
        pe = 0.0
        for j in range(n):
            dij = delta[i] - delta[j]
            pe += emf[j] * (G[i, j] * cos(dij) + B[i, j] * sin(dij))
        pe *= emf[i]
        out[i] = (pm[i] - pe - damp[i] * omega[i]) * minv[i]


def rk4_swing(double[::1] delta, double[::1] omega,
              double[::1] minv, double[::1] damp,
              double[::1] pm, double[::1] emf,
              double[:, ::1] G, double[:, ::1] B,
              double h, Py_ssize_t n_blocks, Py_ssize_t substeps,
              double[:, ::1] out_delta, double[:, ::1] out_omega):
    """Fixed-step RK4 over ``n_blocks * substeps`` steps, recording per block.

    See the NumPy twin for the full contract.
    """
    cdef Py_ssize_t n = delta.shape[0]
    cdef double half = 0.5 * h
    cdef double sixth = h / 6.0
    cdef Py_ssize_t block, step, i
    cdef Py_ssize_t bad = -1
    cdef bint ok

    scratch = np.empty((8, n), dtype=np.float64)
    cdef double[:, ::1] sc = scratch
    cdef double[::1] dtmp = sc[0]
    cdef double[::1] k1w = sc[1]
    cdef double[::1] w2 = sc[2]
    cdef double[::1] k2w = sc[3]
    cdef double[::1] w3 = sc[4]
    cdef double[::1] k3w = sc[5]
    cdef double[::1] w4 = sc[6]
    cdef double[::1] k4w = sc[7]

    with nogil:
        for block in range(n_blocks):
            for step in range(substeps):
                _accel(delta, omega, minv, damp, pm, emf, G, B, k1w)
                for i in range(n):
                    dtmp[i] = delta[i] + half * omega[i]
                    w2[i] = omega[i] + half * k1w[i]
                _accel(dtmp, w2, minv, damp, pm, emf, G, B, k2w)
                for i in range(n):
                    dtmp[i] = delta[i] + half * w2[i]
                    w3[i] = omega[i] + half * k2w[i]
                _accel(dtmp, w3, minv, damp, pm, emf, G, B, k3w)
                for i in range(n):
                    dtmp[i] = delta[i] + h * w3[i]
                    w4[i] = omega[i] + h * k3w[i]
                _accel(dtmp, w4, minv, damp, pm, emf, G, B, k4w)
                for i in range(n):
                    delta[i] += sixth * (omega[i] + 2.0 * w2[i] + 2.0 * w3[i] + w4[i])
                    omega[i] += sixth * (k1w[i] + 2.0 * k2w[i] + 2.0 * k3w[i] + k4w[i])
            ok = True
            for i in range(n):
                out_delta[block, i] = delta[i]
                out_omega[block, i] = omega[i]
                if not (isfinite(delta[i]) and isfinite(omega[i])):
                    ok = False
            if not ok:
                bad = block
                break
    return bad
