"""First estimates for frames entering the stream."""
from __future__ import annotations

import logging

import numpy as np

from .sensing import FOURIER, PIXEL, SensingOperator

log = logging.getLogger(__name__)

SPATIAL = "spatial"
HOLD = "hold"


def fill_bilinear(values: np.ndarray, known: np.ndarray) -> np.ndarray:
    """Fill unknown pixels in waves growing out from the known ones.

    A pixel is filled once it touches a known pixel. Its value is the mean
    of the linear interpolants along each axis whose two neighbours are both
    known; with no such pair, the mean of its known neighbours. Linear and
    bilinear images are reproduced exactly wherever a pair exists.
    """
    out = np.where(known, values, 0).astype(np.complex128)
    known = np.array(known, dtype=bool)
    Nx, Ny = known.shape
    while not known.all():
        if not known.any():
            return np.zeros_like(out)
        pair_sum = np.zeros_like(out)
        pair_cnt = np.zeros(known.shape)
        nb_sum = np.zeros_like(out)
        nb_cnt = np.zeros(known.shape)
        for axis, size in ((0, Nx), (1, Ny)):
            lo_v, lo_k = _shift(out, known, axis, +1)
            hi_v, hi_k = _shift(out, known, axis, -1)
            both = lo_k & hi_k
            pair_sum += np.where(both, 0.5 * (lo_v + hi_v), 0)
            pair_cnt += both
            nb_sum += np.where(lo_k, lo_v, 0) + np.where(hi_k, hi_v, 0)
            nb_cnt += lo_k.astype(float) + hi_k
        frontier = ~known & (nb_cnt > 0)
        paired = frontier & (pair_cnt > 0)
        single = frontier & ~paired
        out[paired] = pair_sum[paired] / pair_cnt[paired]
        out[single] = nb_sum[single] / nb_cnt[single]
        known |= frontier
    return out


def _shift(v, k, axis, step):
    """Neighbour values/known-flags at ``index - step`` along ``axis``."""
    sv = np.zeros_like(v)
    sk = np.zeros_like(k)
    src = [slice(None)] * 2
    dst = [slice(None)] * 2
    if step > 0:
        src[axis], dst[axis] = slice(None, -step), slice(step, None)
    else:
        src[axis], dst[axis] = slice(-step, None), slice(None, step)
    sv[tuple(dst)] = v[tuple(src)]
    sk[tuple(dst)] = k[tuple(src)]
    return sv, sk


def init_new_frames(op: SensingOperator, y, kind: str | None = None, previous=None) -> np.ndarray:
    """Initial estimates for the frames measured by ``op``.

    ``spatial`` fills unsampled pixels of each frame with :func:`fill_bilinear`.
    ``hold`` copies unsampled k-space entries from the transform of the
    nearest older frame: ``previous`` for the first frame, then the frame
    just initialized. Without ``previous`` the first frame is zero-filled.
    """
    if kind is None:
        kind = SPATIAL if op.kind == PIXEL else HOLD
    if (kind == SPATIAL) != (op.kind == PIXEL):
        raise ValueError(f"initializer {kind!r} does not match sensing kind {op.kind!r}")
    data = op.zero_filled(y)
    masks = op.masks
    frames = np.empty(op.shape, dtype=np.complex128)
    ref = None if previous is None else np.asarray(previous)
    for f in range(op.num_frames):
        m = masks[:, :, f]
        if kind == SPATIAL:
            if not m.any():
                log.warning("frame %d has no samples; initialized to zero", f)
            frames[:, :, f] = fill_bilinear(data[:, :, f], m)
            continue
        k = data[:, :, f]
        if ref is not None:
            k = np.where(m, k, np.fft.fft2(ref, norm="ortho"))
        elif not m.any():
            log.warning("frame %d has no samples and no prior frame; initialized to zero", f)
        frames[:, :, f] = np.fft.ifft2(k, norm="ortho")
        ref = frames[:, :, f]
    return frames


__all__ = ["SPATIAL", "HOLD", "FOURIER", "fill_bilinear", "init_new_frames"]
