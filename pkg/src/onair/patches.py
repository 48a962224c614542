"""Spatiotemporal patch extraction and its adjoint.

Frames are stored as arrays of shape ``(N_x, N_y, T)``. A patch of size
``(n_x, n_y, n_t)`` is vectorized with x fastest, then y, then t, so that
``vec.reshape(n_x * n_y, n_t, order="F")`` is its space-time matrix.
Patches are enumerated on a stride grid per axis, x fastest, then y, then t.
The last start along each axis is clamped to touch the boundary so every
voxel is covered at least once.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _kernels


@dataclass(frozen=True)
class PatchConfig:
    """Patch geometry.

    Parameters
    ----------
    patch_dims : (n_x, n_y, n_t)
        Patch extent in voxels.
    spatial_stride : int or (int, int)
        Stride in pixels along x and y.
    temporal_stride : int
        Stride in frames along t.

    Strides may not exceed the patch extent on their axis, so every voxel
    is covered.
    """

    patch_dims: tuple[int, int, int]
    spatial_stride: int | tuple[int, int] = 1
    temporal_stride: int = 1

    def __post_init__(self):
        dims = tuple(int(d) for d in self.patch_dims)
        if len(dims) != 3 or min(dims) < 1:
            raise ValueError(f"patch_dims must be three positive ints, got {self.patch_dims}")
        ss = self.spatial_stride
        ss = (int(ss), int(ss)) if np.isscalar(ss) else tuple(int(v) for v in ss)
        if len(ss) != 2 or min(ss) < 1 or self.temporal_stride < 1:
            raise ValueError("strides must be >= 1")
        # a stride longer than the patch would leave voxels uncovered
        for axis, size, stride in zip("xyt", dims, (*ss, self.temporal_stride)):
            if stride > size:
                raise ValueError(f"stride {stride} along {axis} exceeds the patch extent {size}")
        object.__setattr__(self, "patch_dims", dims)
        object.__setattr__(self, "spatial_stride", ss[0] if ss[0] == ss[1] else ss)

    @property
    def strides(self) -> tuple[int, int, int]:
        ss = self.spatial_stride
        sx, sy = (ss, ss) if isinstance(ss, int) else ss
        return sx, sy, int(self.temporal_stride)

    @property
    def n(self) -> int:
        nx, ny, nt = self.patch_dims
        return nx * ny * nt

    @property
    def reshape_dims(self) -> tuple[int, int]:
        nx, ny, nt = self.patch_dims
        return nx * ny, nt

    def starts(self, dims) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Patch start indices along each axis for a minibatch of shape ``dims``."""
        if len(dims) != 3:
            raise ValueError(f"expected 3-D minibatch dims, got {dims}")
        return tuple(
            axis_starts(N, p, s) for N, p, s in zip(dims, self.patch_dims, self.strides)
        )

    def num_patches(self, dims) -> int:
        sx, sy, st = self.starts(dims)
        return len(sx) * len(sy) * len(st)


def axis_starts(length: int, size: int, stride: int) -> np.ndarray:
    """Start indices ``0, stride, 2*stride, ...`` with a clamped final start."""
    if size > length:
        raise ValueError(f"patch size {size} exceeds extent {length}")
    last = length - size
    starts = list(range(0, last + 1, stride))
    if starts[-1] != last:
        starts.append(last)
    return np.asarray(starts, dtype=np.int64)


def extract_patches(x: np.ndarray, cfg: PatchConfig) -> np.ndarray:
    """Return the ``(n, M)`` matrix whose columns are the vectorized patches of ``x``."""
    x = np.asarray(x)
    if x.ndim != 3:
        raise ValueError(f"expected a 3-D minibatch, got shape {x.shape}")
    sx, sy, st = cfg.starts(x.shape)
    x = np.ascontiguousarray(x, dtype=np.complex128)
    return _kernels.extract(x, sx, sy, st, *cfg.patch_dims)


def aggregate_patches(P: np.ndarray, cfg: PatchConfig, out_dims) -> tuple[np.ndarray, np.ndarray]:
    """Adjoint of :func:`extract_patches`.

    Returns ``(sum_l P_l^T p_l, coverage)`` where ``coverage`` holds the
    diagonal of ``sum_l P_l^T P_l``.
    """
    out_dims = tuple(int(d) for d in out_dims)
    sx, sy, st = cfg.starts(out_dims)
    M = len(sx) * len(sy) * len(st)
    P = np.asarray(P)
    if P.shape != (cfg.n, M):
        raise ValueError(f"patch matrix shape {P.shape} does not match grid ({cfg.n}, {M})")
    P = np.ascontiguousarray(P, dtype=np.complex128)
    total = _kernels.aggregate(P, sx, sy, st, *cfg.patch_dims, *out_dims)
    return total, patch_coverage(cfg, out_dims)


def patch_coverage(cfg: PatchConfig, out_dims) -> np.ndarray:
    """Number of patches covering each voxel."""
    out_dims = tuple(int(d) for d in out_dims)
    sx, sy, st = cfg.starts(out_dims)
    return _kernels.coverage(sx, sy, st, *cfg.patch_dims, *out_dims)


def reshape_atom(d: np.ndarray, reshape_dims) -> np.ndarray:
    """Space-time matrix of an atom (columns indexed by t)."""
    return np.reshape(d, reshape_dims, order="F")


def unreshape_atom(R: np.ndarray) -> np.ndarray:
    return np.reshape(R, -1, order="F")
