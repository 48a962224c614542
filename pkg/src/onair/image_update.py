"""Frame update with the dictionary and codes held fixed.

Minimizes ``||A x - y||^2 + lam_s * sum_l ||P_l x - D z_l||^2`` over the
minibatch ``x``. Pixel sampling makes the normal matrix diagonal and the
problem is solved in closed form; Fourier sampling uses proximal gradient
steps whose prox is again a diagonal solve.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalDegeneracyError
from .patches import PatchConfig, aggregate_patches, extract_patches
from .sensing import PIXEL, SensingOperator

DIRECT = "direct"
PROXGRAD = "proxgrad"


@dataclass(frozen=True)
class ImageUpdateParams:
    lam_s: float
    n_iter: int = 10
    tau: float | None = None
    mode: str = PROXGRAD

    def step(self, op: SensingOperator) -> float:
        norm = op.op_norm_sq()
        tau = self.tau
        if tau is None:
            return 1.0 / norm if norm > 0 else 1.0
        if tau <= 0 or (norm > 0 and tau > 1.0 / norm):
            raise ValueError(f"step size {tau} violates 0 < tau <= 1/||A||^2 = {1.0 / norm if norm else np.inf}")
        return tau


def _patch_target(D, Z, cfg: PatchConfig, dims):
    """``sum_l P_l^T D z_l`` and the coverage diagonal."""
    return aggregate_patches(D @ Z, cfg, dims)


def image_update_direct(op: SensingOperator, y, D, Z, cfg: PatchConfig, lam_s: float) -> np.ndarray:
    """Solve the normal equation exactly when ``A^H A`` is diagonal."""
    if lam_s < 0:
        raise ValueError("lam_s must be non-negative")
    gram = op.gram_diagonal()
    rhs = op.adjoint(y)
    if lam_s > 0:
        target, cov = _patch_target(D, Z, cfg, op.shape)
        rhs = rhs + lam_s * target
        diag = gram + lam_s * cov
    else:
        diag = gram
    if np.any(diag == 0):
        raise NumericalDegeneracyError(
            f"normal matrix has {int(np.sum(diag == 0))} zero diagonal entries"
        )
    return rhs / diag


def prox_patch_lsq(v, D, Z, cfg: PatchConfig, weight: float) -> np.ndarray:
    """``argmin_z 0.5 ||v - z||^2 + weight * sum_l ||P_l z - D z_l||^2``."""
    v = np.asarray(v, dtype=np.complex128)
    if weight == 0:
        return v.copy()
    target, cov = _patch_target(D, Z, cfg, v.shape)
    return (v + 2 * weight * target) / (1 + 2 * weight * cov)


def image_update_proxgrad(op: SensingOperator, y, D, Z, cfg: PatchConfig,
                          params: ImageUpdateParams, x_init) -> np.ndarray:
    """Proximal gradient on ``0.5 ||A x - y||^2 + (lam_s / 2) sum_l ||P_l x - D z_l||^2``.

    This is half the frame objective, so the minimizer is the same and any
    ``tau <= 1 / ||A||^2`` decreases it monotonically.
    """
    tau = params.step(op)
    x = np.array(x_init, dtype=np.complex128)
    if params.n_iter == 0:
        return x
    Aty = op.adjoint(y)
    lam = params.lam_s
    if lam > 0:
        target, cov = _patch_target(D, Z, cfg, x.shape)
        num_shift = tau * lam * target
        denom = 1 + tau * lam * cov
    for _ in range(params.n_iter):
        v = x - tau * (op.normal(x) - Aty)
        x = (v + num_shift) / denom if lam > 0 else v
    return x


def image_update(op: SensingOperator, y, D, Z, cfg: PatchConfig,
                 params: ImageUpdateParams, x_init) -> np.ndarray:
    if params.mode == DIRECT:
        if op.kind != PIXEL:
            raise ValueError("direct image update requires pixel sampling")
        return image_update_direct(op, y, D, Z, cfg, params.lam_s)
    return image_update_proxgrad(op, y, D, Z, cfg, params, x_init)


def objective_xstep(op: SensingOperator, y, x, D, Z, cfg: PatchConfig, lam_s: float) -> float:
    r = op.apply(x) - y
    val = float(np.real(np.vdot(r, r)))
    if lam_s:
        E = extract_patches(x, cfg) - D @ Z
        val += lam_s * float(np.real(np.vdot(E, E)))
    return val


__all__ = [
    "DIRECT",
    "PROXGRAD",
    "ImageUpdateParams",
    "image_update",
    "image_update_direct",
    "image_update_proxgrad",
    "objective_xstep",
    "prox_patch_lsq",
]
