"""Pure-numpy versions of the patch gather/scatter kernels.

Each loop runs over the ``n`` in-patch offsets and moves all ``M`` patches
at once. For a fixed offset the target voxels are distinct, so plain fancy
assignment (no ``np.add.at``) is exact.
"""
import numpy as np


def extract(x, sx, sy, st, nx, ny, nt):
    M = len(sx) * len(sy) * len(st)
    out = np.empty((nx * ny * nt, M), dtype=np.complex128)
    k = 0
    for c in range(nt):
        for b in range(ny):
            for a in range(nx):
                block = x[np.ix_(sx + a, sy + b, st + c)]
                out[k] = block.transpose(2, 1, 0).ravel()
                k += 1
    return out


def aggregate(P, sx, sy, st, nx, ny, nt, Nx, Ny, T):
    shape = (len(st), len(sy), len(sx))
    out = np.zeros((Nx, Ny, T), dtype=np.complex128)
    k = 0
    for c in range(nt):
        for b in range(ny):
            for a in range(nx):
                out[np.ix_(sx + a, sy + b, st + c)] += P[k].reshape(shape).transpose(2, 1, 0)
                k += 1
    return out


def coverage(sx, sy, st, nx, ny, nt, Nx, Ny, T):
    cx = np.zeros(Nx)
    cy = np.zeros(Ny)
    ct = np.zeros(T)
    for s in sx:
        cx[s:s + nx] += 1
    for s in sy:
        cy[s:s + ny] += 1
    for s in st:
        ct[s:s + nt] += 1
    # the patch grid is a Cartesian product, so coverage factorizes per axis
    return cx[:, None, None] * cy[None, :, None] * ct[None, None, :]
