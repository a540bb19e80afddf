# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled batched fingertip FK; hot kernel behind workspace sampling."""

import numpy as np

cimport numpy as cnp
from libc.math cimport cos, sin

cnp.import_array()


def batch_tip_positions(rot0, trans0, axes, is_rev, tip_trans, q):
    """Same contract as dexkin._fk_np.batch_tip_positions."""
    cdef double[:, :, ::1] r0 = np.ascontiguousarray(rot0, dtype=np.float64)
    cdef double[:, ::1] t0 = np.ascontiguousarray(trans0, dtype=np.float64)
    cdef double[:, ::1] ax = np.ascontiguousarray(axes, dtype=np.float64)
    cdef unsigned char[::1] rev = np.ascontiguousarray(is_rev, dtype=np.uint8)
    cdef double[::1] tip = np.ascontiguousarray(tip_trans, dtype=np.float64)
    cdef double[:, ::1] qq = np.ascontiguousarray(q, dtype=np.float64)

    cdef Py_ssize_t n_samples = qq.shape[0]
    cdef Py_ssize_t n_joints = r0.shape[0]
    out_arr = np.empty((n_samples, 3), dtype=np.float64)
    cdef double[:, ::1] out = out_arr

    cdef double r[3][3]
    cdef double tmp[3][3]
    cdef double jr[3][3]
    cdef double p[3]
    cdef double kx, ky, kz, c, s, v, angle
    cdef Py_ssize_t n, j, k, i, a, b

    with nogil:
        for n in range(n_samples):
            for i in range(3):
                p[i] = 0.0
                for a in range(3):
                    r[i][a] = 1.0 if i == a else 0.0
            k = 0
            for j in range(n_joints):
                # p += r @ t0[j]; r = r @ r0[j]
                for i in range(3):
                    p[i] += r[i][0] * t0[j, 0] + r[i][1] * t0[j, 1] + r[i][2] * t0[j, 2]
                for i in range(3):
                    for a in range(3):
                        tmp[i][a] = (
                            r[i][0] * r0[j, 0, a] + r[i][1] * r0[j, 1, a] + r[i][2] * r0[j, 2, a]
                        )
                for i in range(3):
                    for a in range(3):
                        r[i][a] = tmp[i][a]
                if rev[j]:
                    angle = qq[n, k]
                    k += 1
                    kx = ax[j, 0]
                    ky = ax[j, 1]
                    kz = ax[j, 2]
                    c = cos(angle)
                    s = sin(angle)
                    v = 1.0 - c
                    # Rodrigues rotation about (kx, ky, kz)
                    jr[0][0] = c + kx * kx * v
                    jr[0][1] = kx * ky * v - kz * s
                    jr[0][2] = kx * kz * v + ky * s
                    jr[1][0] = ky * kx * v + kz * s
                    jr[1][1] = c + ky * ky * v
                    jr[1][2] = ky * kz * v - kx * s
                    jr[2][0] = kz * kx * v - ky * s
                    jr[2][1] = kz * ky * v + kx * s
                    jr[2][2] = c + kz * kz * v
                    for i in range(3):
                        for a in range(3):
                            tmp[i][a] = (
                                r[i][0] * jr[0][a] + r[i][1] * jr[1][a] + r[i][2] * jr[2][a]
                            )
                    for i in range(3):
                        for a in range(3):
                            r[i][a] = tmp[i][a]
            for i in range(3):
                out[n, i] = p[i] + r[i][0] * tip[0] + r[i][1] * tip[1] + r[i][2] * tip[2]
    return out_arr
