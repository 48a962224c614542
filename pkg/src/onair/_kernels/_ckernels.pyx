# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled gather/scatter loops for spatiotemporal patches.

Index conventions match ``_pykernels``: patch vector index
``k = a + nx*(b + ny*c)`` and patch index ``l = ix + Sx*(iy + Sy*it)``.
"""
import numpy as np
cimport numpy as cnp

cnp.import_array()

ctypedef cnp.int64_t idx_t


def extract(double complex[:, :, ::1] x, idx_t[::1] sx, idx_t[::1] sy,
            idx_t[::1] st, Py_ssize_t nx, Py_ssize_t ny, Py_ssize_t nt):
    cdef Py_ssize_t Sx = sx.shape[0], Sy = sy.shape[0], St = st.shape[0]
    cdef Py_ssize_t n = nx * ny * nt, M = Sx * Sy * St
    out = np.empty((n, M), dtype=np.complex128)
    cdef double complex[:, ::1] P = out
    cdef Py_ssize_t a, b, c, ix, iy, it, k, l
    with nogil:
        for c in range(nt):
            for b in range(ny):
                for a in range(nx):
                    k = a + nx * (b + ny * c)
                    l = 0
                    for it in range(St):
                        for iy in range(Sy):
                            for ix in range(Sx):
                                P[k, l] = x[sx[ix] + a, sy[iy] + b, st[it] + c]
                                l += 1
    return out


def aggregate(double complex[:, ::1] P, idx_t[::1] sx, idx_t[::1] sy,
              idx_t[::1] st, Py_ssize_t nx, Py_ssize_t ny, Py_ssize_t nt,
              Py_ssize_t Nx, Py_ssize_t Ny, Py_ssize_t T):
    cdef Py_ssize_t Sx = sx.shape[0], Sy = sy.shape[0], St = st.shape[0]
    out = np.zeros((Nx, Ny, T), dtype=np.complex128)
    cdef double complex[:, :, ::1] X = out
    cdef Py_ssize_t a, b, c, ix, iy, it, k, l
    with nogil:
        for c in range(nt):
            for b in range(ny):
                for a in range(nx):
                    k = a + nx * (b + ny * c)
                    l = 0
                    for it in range(St):
                        for iy in range(Sy):
                            for ix in range(Sx):
                                X[sx[ix] + a, sy[iy] + b, st[it] + c] += P[k, l]
                                l += 1
    return out


def coverage(idx_t[::1] sx, idx_t[::1] sy, idx_t[::1] st, Py_ssize_t nx,
             Py_ssize_t ny, Py_ssize_t nt, Py_ssize_t Nx, Py_ssize_t Ny,
             Py_ssize_t T):
    # separable: per-axis counts, then an outer product
    cx_arr, cy_arr, ct_arr = np.zeros(Nx), np.zeros(Ny), np.zeros(T)
    cdef double[::1] cx = cx_arr, cy = cy_arr, ct = ct_arr
    cdef Py_ssize_t i, a
    with nogil:
        for i in range(sx.shape[0]):
            for a in range(nx):
                cx[sx[i] + a] += 1.0
        for i in range(sy.shape[0]):
            for a in range(ny):
                cy[sy[i] + a] += 1.0
        for i in range(st.shape[0]):
            for a in range(nt):
                ct[st[i] + a] += 1.0
    out = np.empty((Nx, Ny, T), dtype=np.float64)
    cdef double[:, :, ::1] W = out
    cdef Py_ssize_t x, y, t
    with nogil:
        for x in range(Nx):
            for y in range(Ny):
                for t in range(T):
                    W[x, y, t] = cx[x] * cy[y] * ct[t]
    return out
