"""Per-minibatch linear measurement operators.

Two kinds are supported:

``pixel``
    Keeps the sampled voxels of each frame (inpainting).
``fourier``
    Orthonormal 2-D DFT of each frame followed by k-space selection.
    Masks are stored in unshifted FFT order (DC at index ``[0, 0]``).

Measurement vectors are ordered frame-major, then x, then y.
Both kinds are a selection applied to a unitary map, so ``||A||_2^2`` is
exactly 1 (0 for an empty mask).
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PIXEL = "pixel"
FOURIER = "fourier"
KINDS = (PIXEL, FOURIER)


@dataclass(frozen=True)
class SensingOperator:
    kind: str
    masks: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown sensing kind {self.kind!r}; expected one of {KINDS}")
        masks = np.asarray(self.masks, dtype=bool)
        if masks.ndim != 3:
            raise ValueError(f"masks must have shape (N_x, N_y, T), got {masks.shape}")
        masks.setflags(write=False)
        object.__setattr__(self, "masks", masks)
        # frame-major selection order
        object.__setattr__(self, "_sel", np.ascontiguousarray(masks.transpose(2, 0, 1)))

    @property
    def frame_dims(self) -> tuple[int, int]:
        return self.masks.shape[:2]

    @property
    def num_frames(self) -> int:
        return self.masks.shape[2]

    @property
    def shape(self) -> tuple[int, int, int]:
        return self.masks.shape

    @property
    def num_measurements(self) -> int:
        return int(self.masks.sum())

    def window(self, start: int, end: int) -> "SensingOperator":
        """Operator restricted to frames ``[start, end)``."""
        return SensingOperator(self.kind, self.masks[:, :, start:end])

    def apply(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x)
        if x.shape != self.shape:
            raise ValueError(f"input shape {x.shape} does not match operator shape {self.shape}")
        if self.kind == FOURIER:
            x = np.fft.fft2(x, axes=(0, 1), norm="ortho")
        return x.transpose(2, 0, 1)[self._sel].astype(np.complex128)

    def adjoint(self, y: np.ndarray) -> np.ndarray:
        y = np.asarray(y)
        if y.shape != (self.num_measurements,):
            raise ValueError(
                f"measurement length {y.shape} does not match mask cardinality {self.num_measurements}"
            )
        x = self.zero_filled(y)
        if self.kind == FOURIER:
            x = np.fft.ifft2(x, axes=(0, 1), norm="ortho")
        return x

    def normal(self, x: np.ndarray) -> np.ndarray:
        """``A^H A x`` without forming the measurement vector."""
        if self.kind == PIXEL:
            return np.where(self.masks, x, 0)
        k = np.fft.fft2(x, axes=(0, 1), norm="ortho")
        return np.fft.ifft2(np.where(self.masks, k, 0), axes=(0, 1), norm="ortho")

    def gram_diagonal(self) -> np.ndarray:
        """Diagonal of ``A^H A``; only defined for pixel sampling."""
        if self.kind != PIXEL:
            raise ValueError("A^H A is not diagonal for Fourier sensing")
        return self.masks.astype(np.float64)

    def op_norm_sq(self) -> float:
        return 1.0 if self.masks.any() else 0.0

    def zero_filled(self, y: np.ndarray) -> np.ndarray:
        """Scatter measurements into a data-domain array (pixels or k-space)."""
        full = np.zeros((self.num_frames,) + self.frame_dims, dtype=np.complex128)
        full[self._sel] = y
        return np.ascontiguousarray(full.transpose(1, 2, 0))

    def select(self, data: np.ndarray) -> np.ndarray:
        """Measurement vector from a zero-filled data-domain array."""
        return np.asarray(data).transpose(2, 0, 1)[self._sel].astype(np.complex128)


def op_norm_sq(op: SensingOperator) -> float:
    return op.op_norm_sq()
