# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled per-face kernels. Same contracts as ``_pycore``."""

import numpy as np
cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()


def triangle_layout(pos):
    cdef const double[:, :, ::1] p = np.ascontiguousarray(pos, dtype=np.float64)
    cdef Py_ssize_t F = p.shape[0], d = p.shape[2], f, i
    layout_arr = np.zeros((F, 3, 2))
    area_arr = np.empty(F)
    cdef double[:, :, ::1] lay = layout_arr
    cdef double[::1] area = area_arr
    cdef double a, b, c, e1, e2, l1, x2
    with nogil:
        for f in range(F):
            a = 0.0
            b = 0.0
            c = 0.0
            for i in range(d):
                e1 = p[f, 1, i] - p[f, 0, i]
                e2 = p[f, 2, i] - p[f, 0, i]
                a = a + e1 * e1
                b = b + e2 * e2
                c = c + e1 * e2
            l1 = sqrt(a)
            x2 = c / l1
            b = b - x2 * x2
            if b < 0.0:
                b = 0.0
            lay[f, 1, 0] = l1
            lay[f, 2, 0] = x2
            lay[f, 2, 1] = sqrt(b)
            area[f] = 0.5 * l1 * lay[f, 2, 1]
    return layout_arr, area_arr


def cotan_weights(layout):
    cdef const double[:, :, ::1] lay = np.ascontiguousarray(layout, dtype=np.float64)
    cdef Py_ssize_t F = lay.shape[0], f, k, kn, kp
    out_arr = np.empty((F, 3))
    cdef double[:, ::1] out = out_arr
    cdef double ux, uy, vx, vy
    with nogil:
        for f in range(F):
            for k in range(3):
                kn = (k + 1) % 3
                kp = (k + 2) % 3
                ux = lay[f, kn, 0] - lay[f, k, 0]
                uy = lay[f, kn, 1] - lay[f, k, 1]
                vx = lay[f, kp, 0] - lay[f, k, 0]
                vy = lay[f, kp, 1] - lay[f, k, 1]
                out[f, k] = (ux * vx + uy * vy) / (ux * vy - uy * vx)
    return out_arr


def edge_lstsq(layout, rhs):
    cdef const double[:, :, ::1] lay = np.ascontiguousarray(layout, dtype=np.float64)
    cdef const double[:, :, ::1] r = np.ascontiguousarray(rhs, dtype=np.float64)
    cdef Py_ssize_t F = lay.shape[0], M = r.shape[2], f, k, kn, m
    out_arr = np.empty((F, 2, M))
    cdef double[:, :, ::1] out = out_arr
    cdef double ex[3]
    cdef double ey[3]
    cdef double a00, a01, a11, det, b0, b1
    with nogil:
        for f in range(F):
            a00 = 0.0
            a01 = 0.0
            a11 = 0.0
            for k in range(3):
                kn = (k + 1) % 3
                ex[k] = lay[f, kn, 0] - lay[f, k, 0]
                ey[k] = lay[f, kn, 1] - lay[f, k, 1]
                a00 = a00 + ex[k] * ex[k]
                a01 = a01 + ex[k] * ey[k]
                a11 = a11 + ey[k] * ey[k]
            det = a00 * a11 - a01 * a01
            for m in range(M):
                b0 = 0.0
                b1 = 0.0
                for k in range(3):
                    b0 = b0 + ex[k] * r[f, k, m]
                    b1 = b1 + ey[k] * r[f, k, m]
                out[f, 0, m] = (a11 * b0 - a01 * b1) / det
                out[f, 1, m] = (a00 * b1 - a01 * b0) / det
    return out_arr


def vertex_scatter(faces, values, Py_ssize_t num_vertices):
    cdef const long long[:, ::1] fc = np.ascontiguousarray(faces, dtype=np.int64)
    vals = np.ascontiguousarray(values, dtype=np.float64)
    cdef Py_ssize_t F = fc.shape[0]
    cdef const double[:, ::1] v = vals.reshape(F * 3, -1)
    cdef Py_ssize_t M = v.shape[1], f, k, m, row
    out_arr = np.zeros((num_vertices, M))
    cdef double[:, ::1] out = out_arr
    with nogil:
        for f in range(F):
            for k in range(3):
                row = fc[f, k]
                for m in range(M):
                    out[row, m] = out[row, m] + v[3 * f + k, m]
    return out_arr
