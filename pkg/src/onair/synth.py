"""Synthetic test data: planted dictionary videos and ellipse phantoms."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .patches import PatchConfig, aggregate_patches, unreshape_atom


@dataclass
class PlantedData:
    frames: np.ndarray      # noisy
    clean: np.ndarray
    dictionary: np.ndarray
    codes: np.ndarray       # Z, shape (m, M)


def random_dictionary(rng, n: int, m: int, *, reshape_dims=None, rank=None,
                      unitary=False, complex_valued=False) -> np.ndarray:
    """Unit-norm random atoms, optionally rank-limited after reshaping or unitary."""
    def gauss(*shape):
        g = rng.standard_normal(shape)
        return g + 1j * rng.standard_normal(shape) if complex_valued else g

    if unitary:
        if m != n:
            raise ValueError("a unitary dictionary must be square")
        q, r = np.linalg.qr(gauss(n, n))
        return (q * (np.diag(r) / np.abs(np.diag(r)))).astype(np.complex128)
    D = np.empty((n, m), dtype=np.complex128)
    for i in range(m):
        if rank is None:
            d = gauss(n)
        else:
            n1, n2 = reshape_dims
            d = unreshape_atom(gauss(n1, rank) @ gauss(rank, n2))
        D[:, i] = d / np.linalg.norm(d)
    return D


def synth_planted(patch: PatchConfig, m: int, num_frames: int, frame_dims, sparsity: int,
                  snr_db: float, seed: int, *, rank=None, unitary=False, complex_valued=False,
                  dictionary=None) -> PlantedData:
    """Frames whose patches (on ``patch``'s grid) are ``sparsity``-sparse in a random dictionary.

    Code magnitudes are uniform in [1, 2] with random sign (or phase). The
    frames are the coverage-normalized aggregate of the synthesized patches;
    with a non-overlapping grid every patch is exactly ``D z``.
    Complex Gaussian noise is added at ``snr_db`` (``inf`` for none), so
    ``frames`` is complex even when ``clean`` is real.
    """
    n = patch.n
    if not 1 <= sparsity <= m:
        raise ValueError(f"sparsity must be in [1, m={m}], got {sparsity}")
    rng = np.random.default_rng(seed)
    if dictionary is None:
        D = random_dictionary(rng, n, m, reshape_dims=patch.reshape_dims, rank=rank,
                              unitary=unitary, complex_valued=complex_valued)
    else:
        D = np.asarray(dictionary, dtype=np.complex128)
    dims = (*frame_dims, num_frames)
    M = patch.num_patches(dims)
    Z = np.zeros((m, M), dtype=np.complex128)
    for l in range(M):
        idx = rng.choice(m, size=sparsity, replace=False)
        mag = rng.uniform(1.0, 2.0, sparsity)
        if complex_valued:
            phase = np.exp(2j * np.pi * rng.uniform(size=sparsity))
        else:
            phase = rng.choice([-1.0, 1.0], size=sparsity)
        Z[idx, l] = mag * phase
    total, cov = aggregate_patches(D @ Z, patch, dims)
    clean = total / cov
    if not complex_valued:
        clean = clean.real
    frames = clean + _noise(rng, clean, snr_db)
    return PlantedData(frames=frames, clean=clean, dictionary=D, codes=Z)


def _noise(rng, x, snr_db):
    if math.isinf(snr_db):
        return np.zeros(x.shape, dtype=np.complex128)
    sigma = noise_std_for_snr(x, snr_db) / math.sqrt(2)
    return sigma * (rng.standard_normal(x.shape) + 1j * rng.standard_normal(x.shape))


def noise_std_for_snr(x, snr_db: float) -> float:
    """Per-sample noise standard deviation giving ``snr_db`` relative to ``x``."""
    return float(math.sqrt(np.mean(np.abs(x) ** 2) / 10 ** (snr_db / 10)))


# (center_x, center_y, semi_x, semi_y, intensity) in units of the frame size
_ELLIPSES = (
    (0.50, 0.50, 0.36, 0.42, 0.30),
    (0.40, 0.45, 0.10, 0.16, 0.80),
    (0.62, 0.55, 0.12, 0.08, 1.00),
    (0.55, 0.30, 0.05, 0.05, 0.60),
)


def _render(Nx, Ny, shift_x=0.0, scale=1.0):
    xx, yy = np.meshgrid(np.arange(Nx), np.arange(Ny), indexing="ij")
    img = np.zeros((Nx, Ny))
    for cx, cy, ax, ay, val in _ELLIPSES:
        inside = ((xx - cx * Nx - shift_x) / (ax * Nx)) ** 2 + ((yy - cy * Ny) / (ay * Ny)) ** 2 <= 1
        img[inside] = val * scale
    return img


def synth_phantom(frame_dims, num_frames: int, motion: str = "translate", rate: float | None = None) -> np.ndarray:
    """Piecewise-constant ellipse phantom in [0, 1].

    ``translate`` shifts the whole scene by ``rate`` (default 1) pixel per
    frame along x; ``intensity-ramp`` scales intensities by
    ``0.5 * (1 + rate * k)`` (default ``rate = 1 / (num_frames - 1)``), so
    mean intensity is linear in the frame index; ``none`` is static.
    """
    Nx, Ny = frame_dims
    out = np.empty((Nx, Ny, num_frames))
    for k in range(num_frames):
        if motion == "none":
            out[..., k] = _render(Nx, Ny)
        elif motion == "translate":
            out[..., k] = _render(Nx, Ny, shift_x=(1.0 if rate is None else rate) * k)
        elif motion == "intensity-ramp":
            r = (1.0 / max(num_frames - 1, 1)) if rate is None else rate
            out[..., k] = _render(Nx, Ny, scale=0.5 * (1 + r * k))
        else:
            raise ValueError(f"unknown motion {motion!r}")
    return np.clip(out, 0.0, 1.0)


__all__ = ["PlantedData", "random_dictionary", "synth_planted", "synth_phantom", "noise_std_for_snr"]
