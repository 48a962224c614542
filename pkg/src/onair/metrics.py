"""Reconstruction quality metrics."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

VIDEO = "video"
PER_FRAME = "per_frame"


def _check(x_hat, x_ref):
    x_hat = np.asarray(x_hat)
    x_ref = np.asarray(x_ref)
    if x_hat.shape != x_ref.shape:
        raise ValueError(f"shape mismatch: {x_hat.shape} vs {x_ref.shape}")
    return x_hat, x_ref


def _psnr(err, ref):
    rmse = np.sqrt(np.mean(np.abs(err) ** 2))
    if rmse == 0:
        return np.inf
    return float(20 * np.log10(np.max(np.abs(ref)) / rmse))


def psnr(x_hat, x_ref, mode: str = VIDEO):
    """Peak signal-to-noise ratio in dB.

    The peak is ``max |x_ref|`` over the whole video (``mode="video"``) or
    over each frame (``mode="per_frame"``, frames along the last axis).
    An exact reconstruction gives ``inf``.
    """
    x_hat, x_ref = _check(x_hat, x_ref)
    if not np.any(x_ref):
        raise ValueError("reference is identically zero")
    err = x_hat - x_ref
    if mode == VIDEO:
        return _psnr(err, x_ref)
    if mode == PER_FRAME:
        return [_psnr(err[..., k], x_ref[..., k]) for k in range(x_ref.shape[-1])]
    raise ValueError(f"unknown PSNR mode {mode!r}")


def nrmse(x_hat, x_ref) -> float:
    """``100 * ||x_hat - x_ref|| / ||x_ref||``."""
    x_hat, x_ref = _check(x_hat, x_ref)
    den = np.linalg.norm(x_ref.ravel())
    if den == 0:
        raise ValueError("reference is identically zero")
    return float(100 * np.linalg.norm((x_hat - x_ref).ravel()) / den)


@dataclass
class MetricReport:
    psnr_3d: float
    nrmse_percent: float
    psnr_per_frame: list = field(default_factory=list)

    @property
    def num_frames(self) -> int:
        return len(self.psnr_per_frame)

    @classmethod
    def compute(cls, x_hat, x_ref) -> "MetricReport":
        return cls(
            psnr_3d=psnr(x_hat, x_ref),
            nrmse_percent=nrmse(x_hat, x_ref),
            psnr_per_frame=psnr(x_hat, x_ref, PER_FRAME),
        )
