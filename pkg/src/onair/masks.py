"""Seeded sampling-mask generators.

All generators return boolean arrays of shape ``(N_x, N_y, T)``. Fourier
masks (``cartesian`` and ``radial``) are returned in unshifted FFT order so
they can be handed straight to a ``fourier`` :class:`SensingOperator`;
the geometry is built in centered coordinates and ``ifftshift``-ed.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

UNIFORM = "uniform"
CARTESIAN = "cartesian"
RADIAL = "radial"
PATTERNS = (UNIFORM, CARTESIAN, RADIAL)


@dataclass(frozen=True)
class MaskSpec:
    """Sampling pattern description.

    ``keep_fraction`` drives ``uniform``; ``acceleration`` drives
    ``cartesian`` (rows kept ~ N_y / acceleration) and ``radial``
    (``ceil(max(N_x, N_y) / acceleration)`` lines unless ``num_lines`` is set).
    """

    pattern: str = UNIFORM
    keep_fraction: float = 0.5
    acceleration: float = 1.0
    seed: int = 0
    per_frame: bool = True
    num_lines: int | None = None

    def __post_init__(self):
        if self.pattern not in PATTERNS:
            raise ValueError(f"unknown mask pattern {self.pattern!r}; expected one of {PATTERNS}")
        if not 0 < self.keep_fraction <= 1:
            raise ValueError(f"keep_fraction must be in (0, 1], got {self.keep_fraction}")
        if self.acceleration < 1:
            raise ValueError(f"acceleration must be >= 1, got {self.acceleration}")
        if self.num_lines is not None and self.num_lines < 1:
            raise ValueError("num_lines must be >= 1")


def gen_mask(spec: MaskSpec, frame_dims, num_frames: int) -> np.ndarray:
    Nx, Ny = (int(d) for d in frame_dims)
    if num_frames < 1:
        raise ValueError("num_frames must be >= 1")
    rng = np.random.default_rng(spec.seed)
    frames = []
    for t in range(num_frames):
        if t > 0 and not spec.per_frame:
            frames.append(frames[0])
            continue
        if spec.pattern == UNIFORM:
            frames.append(_uniform(rng, Nx, Ny, spec.keep_fraction))
        elif spec.pattern == CARTESIAN:
            frames.append(np.fft.ifftshift(_cartesian(rng, Nx, Ny, spec.acceleration)))
        else:
            L = spec.num_lines or math.ceil(max(Nx, Ny) / spec.acceleration)
            offset = rng.uniform(0.0, math.pi / L)
            frames.append(np.fft.ifftshift(radial_lines(Nx, Ny, L, offset)))
    return np.stack(frames, axis=-1)


def _uniform(rng, Nx, Ny, keep_fraction):
    N = Nx * Ny
    count = int(math.floor(keep_fraction * N + 1e-9))
    mask = np.zeros(N, dtype=bool)
    mask[rng.choice(N, size=count, replace=False)] = True
    return mask.reshape(Nx, Ny)


def cartesian_density(Ny: int) -> np.ndarray:
    """Unnormalized row weights ``exp(-(k_y - c)^2 / (2 sigma^2))``, ``sigma = N_y / 6``."""
    ky = np.arange(Ny) - Ny // 2
    sigma = Ny / 6.0
    return np.exp(-(ky**2) / (2 * sigma**2))


def _cartesian(rng, Nx, Ny, acceleration):
    rows = max(1, int(round(Ny / acceleration)))
    center = Ny // 2
    chosen = [center]
    if rows > 1:
        w = cartesian_density(Ny)
        w[center] = 0.0
        p = w / w.sum()
        chosen.extend(rng.choice(Ny, size=rows - 1, replace=False, p=p).tolist())
    mask = np.zeros((Nx, Ny), dtype=bool)
    mask[:, chosen] = True
    return mask


def radial_lines(Nx: int, Ny: int, num_lines: int, offset: float) -> np.ndarray:
    """Centered mask of ``num_lines`` diameters at angles ``offset + k*pi/num_lines``.

    Each diameter joins the integer endpoints ``c -/+ round(R*u)`` with
    ``R = max(N_x, N_y)``; each is rasterized with Bresenham's algorithm
    from the first endpoint, and out-of-range pixels are dropped.
    """
    mask = np.zeros((Nx, Ny), dtype=bool)
    cx, cy = Nx // 2, Ny // 2
    R = max(Nx, Ny)
    for k in range(num_lines):
        theta = offset + k * math.pi / num_lines
        ex = int(round(R * math.cos(theta)))
        ey = int(round(R * math.sin(theta)))
        xs, ys = _raster_segment(cx - ex, cy - ey, cx + ex, cy + ey)
        keep = (xs >= 0) & (xs < Nx) & (ys >= 0) & (ys < Ny)
        mask[xs[keep], ys[keep]] = True
    mask[cx, cy] = True
    return mask


def _raster_segment(x0, y0, x1, y1):
    """Pixels of the Bresenham line from ``(x0, y0)`` to ``(x1, y1)``.

    Closed form: the minor coordinate is the nearest integer to the exact
    line, with ties resolved away from the start point.
    """
    dx, dy = x1 - x0, y1 - y0
    steps = max(abs(dx), abs(dy))
    if steps == 0:
        return np.array([x0]), np.array([y0])
    i = np.arange(steps + 1)

    def along(delta):
        return int(np.sign(delta)) * ((2 * i * abs(delta) + steps) // (2 * steps))
    return x0 + along(dx), y0 + along(dy)
