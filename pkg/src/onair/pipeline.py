"""Streaming reconstruction over sliding temporal windows.

For each window the dictionary, the codes and the frames are warm started
from the previous window, then the dictionary learning step and the image
update step alternate ``K`` times. The rho-weighted accumulators are
committed once per window, and each frame's estimates from all windows that
contain it are merged with an exponentially rho-weighted average.
"""
from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import dictlearn as dl
from .dct import build_dct_dictionary
from .image_update import DIRECT, PROXGRAD, ImageUpdateParams, image_update
from .initializers import init_new_frames
from .patches import PatchConfig, extract_patches
from .sensing import PIXEL, SensingOperator
from .windows import sliding_windows

log = logging.getLogger(__name__)

FD = "fd"
LD = "ld"
UD = "ud"
DCT = "dct"
FIXED = "fixed"
BATCH = "batch"
VARIANTS = (FD, LD, UD, DCT, FIXED, BATCH)


@dataclass(frozen=True)
class OnairConfig:
    """Parameters of one reconstruction run.

    ``variant`` selects the model: ``fd`` (full-rank atoms), ``ld``
    (rank-``rank`` atoms), ``ud`` (unitary dictionary), ``dct``/``fixed``
    (no atom updates), ``batch`` (``ld``/``fd`` on one window holding every
    frame). ``image_mode`` is ``"auto"``, ``"direct"`` or ``"proxgrad"``.
    """

    variant: str = FD
    lam_s: float = 1.0
    lam_z: float = 0.1
    rho: float = 0.9
    L: float = dl.DEFAULT_L
    rank: int | None = None
    window_len: int = 5
    window_stride: int = 1
    patch: PatchConfig = field(default_factory=lambda: PatchConfig((8, 8, 5), 2, 1))
    K: int = 7
    K_hat: int = 1
    K_tilde: int = 10
    K_first: int = 50
    presolve: int = 0
    passes: int = 1
    tau: float | None = None
    image_mode: str = "auto"
    seed: int = 0

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}; expected one of {VARIANTS}")
        if self.lam_s < 0 or self.lam_z < 0:
            raise ValueError("lam_s and lam_z must be >= 0")
        if not 0 < self.rho <= 1:
            raise ValueError(f"rho must be in (0, 1], got {self.rho}")
        if self.L <= self.lam_z:
            raise ValueError(f"L ({self.L}) must exceed lam_z ({self.lam_z})")
        if self.K < 1 or self.K_first < 1:
            raise ValueError("K and K_first must be >= 1")
        if self.K_hat < 0 or self.K_tilde < 0 or self.presolve < 0:
            raise ValueError("K_hat, K_tilde and presolve must be >= 0")
        if self.passes < 1:
            raise ValueError("passes must be >= 1")
        if self.variant == LD and (self.rank is None or self.rank < 1):
            raise ValueError("variant 'ld' needs rank >= 1")
        if self.patch.patch_dims[2] > self.window_len:
            raise ValueError("temporal patch extent exceeds the window length")
        if not 1 <= self.window_stride <= self.window_len:
            raise ValueError("window_stride must be in [1, window_len]")
        if self.image_mode not in ("auto", DIRECT, PROXGRAD):
            raise ValueError(f"unknown image_mode {self.image_mode!r}")

    @property
    def unitary(self) -> bool:
        return self.variant == UD

    @property
    def learns_atoms(self) -> bool:
        return self.variant not in (DCT, FIXED)

    def atom_rank(self) -> int:
        full = min(self.patch.reshape_dims)
        if self.variant in (LD, BATCH) and self.rank is not None:
            return min(self.rank, full)
        return full

    def constraint(self) -> str:
        if self.variant == UD:
            return dl.UNITARY
        return dl.LOWRANK if self.atom_rank() < min(self.patch.reshape_dims) else dl.FULL

    def image_params(self, op: SensingOperator) -> ImageUpdateParams:
        mode = self.image_mode
        if mode == "auto":
            mode = DIRECT if op.kind == PIXEL else PROXGRAD
        return ImageUpdateParams(self.lam_s, self.K_tilde, self.tau, mode)


class MeasurementStream:
    """In-memory measurement source.

    ``data`` is the zero-filled data-domain array (pixels or k-space) of
    shape ``(N_x, N_y, T)``; only entries under ``op.masks`` are used.
    """

    def __init__(self, op: SensingOperator, data):
        data = np.asarray(data)
        if data.shape != op.shape:
            raise ValueError(f"data shape {data.shape} does not match masks {op.shape}")
        self.op = op
        self.data = data

    @classmethod
    def from_measurements(cls, op: SensingOperator, y) -> "MeasurementStream":
        return cls(op, op.zero_filled(y))

    @classmethod
    def simulate(cls, frames, op: SensingOperator, noise_std: float = 0.0, seed: int = 0):
        """Measure ``frames`` with ``op`` and add complex Gaussian noise of std ``noise_std``."""
        y = op.apply(frames)
        if noise_std > 0:
            rng = np.random.default_rng(seed)
            y = y + noise_std / np.sqrt(2) * (
                rng.standard_normal(y.shape) + 1j * rng.standard_normal(y.shape)
            )
        return cls.from_measurements(op, y)

    @property
    def num_frames(self) -> int:
        return self.op.num_frames

    @property
    def kind(self) -> str:
        return self.op.kind

    @property
    def frame_dims(self) -> tuple[int, int]:
        return self.op.frame_dims

    def window(self, start: int, end: int):
        op = self.op.window(start, end)
        return op, op.select(self.data[:, :, start:end])


class FrameMerger:
    """Running rho-weighted average of per-window frame estimates.

    Only frames of the active window are held; finalized frames are handed
    back to the caller and dropped.
    """

    def __init__(self, rho: float):
        self.rho = rho
        self.num = {}
        self.weight = {}
        self._frozen = None

    def __contains__(self, f):
        return f in self.num

    def add(self, f: int, estimate) -> None:
        if f in self.num:
            self.num[f] = self.rho * self.num[f] + estimate
            self.weight[f] = self.rho * self.weight[f] + 1.0
        else:
            self.num[f] = np.array(estimate, dtype=np.complex128)
            self.weight[f] = 1.0

    def get(self, f: int) -> np.ndarray:
        return self.num[f] / self.weight[f]

    def latest_frame(self):
        """Merged estimate of the highest-index frame seen so far, or ``None``."""
        if self.num:
            f = max(self.num)
            if self._frozen is None or f > self._frozen[0]:
                return self.get(f)
        return None if self._frozen is None else self._frozen[1]

    def pop(self, f: int) -> np.ndarray:
        est = self.get(f)
        del self.num[f], self.weight[f]
        if self._frozen is None or f > self._frozen[0]:
            self._frozen = (f, est)
        return est

    @property
    def nbytes(self) -> int:
        frozen = self._frozen[1].nbytes if self._frozen is not None else 0
        return sum(v.nbytes for v in self.num.values()) + frozen


def rho_weighted_merge(merger: FrameMerger, start: int, x_hat) -> FrameMerger:
    """Fold the window estimate ``x_hat`` (frames ``start, start+1, ...``) into ``merger``."""
    for k in range(x_hat.shape[2]):
        merger.add(start + k, x_hat[:, :, k])
    return merger


@dataclass
class ReconState:
    D: np.ndarray
    acc: dl.Accumulators
    merger: FrameMerger
    C: np.ndarray | None = None
    window_index: int = 0

    @property
    def nbytes(self) -> int:
        codes = self.C.nbytes if self.C is not None else 0
        return self.D.nbytes + codes + self.acc.nbytes + self.merger.nbytes


@dataclass
class WindowDiagnostics:
    window_index: int
    start: int
    end: int
    objective_pre: float
    objective_post: float
    code_sparsity: float
    wall_ms: float
    pass_index: int = 0
    state_bytes: int = 0
    trace: list = field(default_factory=list, repr=False)


@dataclass
class StreamResult:
    frames: np.ndarray
    dictionary: dl.Dictionary
    diagnostics: list


def objective_instant(op: SensingOperator, y, x, D, Z, cfg: PatchConfig, lam_s: float, lam_z: float) -> float:
    """``||y - A x||^2 + lam_s (sum_l ||P_l x - D z_l||^2 + lam_z^2 ||Z||_0)``."""
    r = y - op.apply(x)
    val = float(np.real(np.vdot(r, r)))
    if lam_s:
        E = extract_patches(x, cfg) - D @ Z
        val += lam_s * (float(np.real(np.vdot(E, E))) + lam_z**2 * np.count_nonzero(Z))
    return val


def objective_online(state: ReconState, op, y, x, D, C, config: OnairConfig) -> float:
    """Instantaneous objective plus the rho-weighted committed history at dictionary ``D``."""
    hist = state.acc.rho * state.acc.fidelity if state.acc.count else 0.0
    hist += config.lam_s * dl.history_objective(D, state.acc, config.lam_z)
    return hist + objective_instant(op, y, x, D, C.conj().T, config.patch, config.lam_s, config.lam_z)


def initial_state(config: OnairConfig, dictionary=None) -> ReconState:
    D = build_dct_dictionary(*config.patch.patch_dims) if dictionary is None else np.array(dictionary, dtype=np.complex128)
    if D.shape[0] != config.patch.n:
        raise ValueError(f"dictionary has {D.shape[0]} rows, patches have {config.patch.n} entries")
    if config.unitary:
        dl.check_unitary(D)
    return ReconState(D=D, acc=dl.Accumulators.zeros(D.shape[0], D.shape[1], config.rho),
                      merger=FrameMerger(config.rho))


def warm_start(state: ReconState, window, op: SensingOperator, y, initializer=None):
    """Initial ``(x0, D0, C0)`` for the window ``(start, end)``.

    Frames already estimated take their merged value. New frames come from
    ``initializer(op_new, y_new, first_new, previous)`` where ``first_new``
    is the stream index of the first new frame and ``previous`` the latest
    estimated frame; the default is :func:`init_new_frames`.
    """
    start, end = window
    x0 = np.empty(op.shape, dtype=np.complex128)
    new = [f for f in range(start, end) if f not in state.merger]
    for f in range(start, end):
        if f in state.merger:
            x0[:, :, f - start] = state.merger.get(f)
    if new:
        a, b = new[0] - start, new[-1] - start + 1
        # new frames are always a contiguous tail of the window
        sub = op.window(a, b)
        ysub = sub.select(op.zero_filled(y)[:, :, a:b])
        init = initializer or _default_initializer
        x0[:, :, a:b] = init(sub, ysub, new[0], state.merger.latest_frame())
    return x0, state.D.copy(), None if state.C is None else state.C.copy()


def _default_initializer(op, y, first_new, previous):
    return init_new_frames(op, y, previous=previous)


def _prior_initializer(prior):
    def init(op, y, first_new, previous):
        return prior[:, :, first_new:first_new + op.num_frames]
    return init


def _codes_or_zero(C, M, m):
    if C is None or C.shape != (M, m):
        return np.zeros((M, m), dtype=np.complex128)
    return np.array(C, dtype=np.complex128)


def _dictionary_step(state, P, D, C, config: OnairConfig):
    if config.unitary:
        for _ in range(config.K_hat):
            C = dl.sparse_code_unitary(D, P, config.lam_z).conj().T
            D = dl.update_dict_unitary(state.acc, P, C, D)
        return D, C
    return dl.dl_pass_p1(
        D, C, P, state.acc, config.lam_z, config.L,
        rank=config.atom_rank(), reshape_dims=config.patch.reshape_dims,
        n_iter=config.K_hat, update_atoms=config.learns_atoms,
    )


def process_minibatch(state: ReconState, y, op: SensingOperator, config: OnairConfig, x0, D0=None, C0=None,
                      monitor: bool = False):
    """Alternate the dictionary learning and image update steps on one window.

    Returns ``(x_hat, D_hat, C_hat, trace)``; ``trace`` lists
    ``(stage, online objective, instantaneous objective)`` after each step
    when ``monitor`` is set. The accumulators in ``state`` are committed
    here with the final patches and codes.
    """
    cfg = config.patch
    first = state.window_index == 0
    D = state.D.copy() if D0 is None else np.array(D0, dtype=np.complex128)
    x = np.array(x0, dtype=np.complex128)
    C = _codes_or_zero(C0, cfg.num_patches(op.shape), D.shape[1])
    params = config.image_params(op)
    trace = []

    def record(stage):
        if monitor:
            Z = C.conj().T
            trace.append((stage, objective_online(state, op, y, x, D, C, config),
                          objective_instant(op, y, x, D, Z, cfg, config.lam_s, config.lam_z)))

    record("init")
    if config.presolve and not first and not config.unitary:
        C = dl.sparse_code_pass(D, C, extract_patches(x, cfg), config.lam_z, config.L, config.presolve)
        record("presolve")
    for _ in range(config.K_first if first else config.K):
        P = extract_patches(x, cfg)
        D, C = _dictionary_step(state, P, D, C, config)
        record("dictionary")
        x = image_update(op, y, D, C.conj().T, cfg, params, x)
        record("image")

    r = y - op.apply(x)
    state.acc = dl.update_accumulators(state.acc, extract_patches(x, cfg), C, np.real(np.vdot(r, r)))
    state.D = D
    state.C = C
    state.window_index += 1
    return x, D, C, trace


def _run_pass(source, config: OnairConfig, state: ReconState, out, prior=None, pass_index=0,
              monitor=False):
    plan = sliding_windows(source.num_frames, config.window_len, config.window_stride)
    last_use = plan.last_use()
    diagnostics = []
    initializer = None if prior is None else _prior_initializer(prior)
    for w, (start, end) in enumerate(plan):
        tic = time.perf_counter()
        try:
            op, y = source.window(start, end)
        except OSError as exc:
            raise OSError(f"window {w}: {exc}") from exc
        x0, D0, C0 = warm_start(state, (start, end), op, y, initializer)
        C0 = _codes_or_zero(C0, config.patch.num_patches(op.shape), D0.shape[1])
        obj_pre = objective_instant(op, y, x0, D0, C0.conj().T, config.patch, config.lam_s, config.lam_z)
        x_hat, D, C, trace = process_minibatch(state, y, op, config, x0, D0, C0, monitor=monitor)
        obj_post = objective_instant(op, y, x_hat, D, C.conj().T, config.patch, config.lam_s, config.lam_z)
        rho_weighted_merge(state.merger, start, x_hat)
        bytes_now = state.nbytes
        for f in range(start, end):
            if last_use[f] == w:
                out[:, :, f] = state.merger.pop(f)
        diagnostics.append(WindowDiagnostics(
            window_index=w, start=start, end=end, objective_pre=obj_pre, objective_post=obj_post,
            code_sparsity=float(np.count_nonzero(C)) / C.size,
            wall_ms=1000 * (time.perf_counter() - tic), pass_index=pass_index,
            state_bytes=bytes_now, trace=trace,
        ))
        log.debug("pass %d window %d [%d, %d): objective %.6g -> %.6g", pass_index, w, start, end,
                  obj_pre, obj_post)
    return diagnostics


def reconstruct_stream(source, config: OnairConfig, dictionary=None, monitor: bool = False) -> StreamResult:
    """Run the online reconstruction over every window of ``source``.

    ``dictionary`` overrides the initial 3-D DCT dictionary (e.g. an oracle
    dictionary for the fixed variant). Later passes restart the stream from
    the previous pass's frames and final dictionary.
    """
    shape = (*source.frame_dims, source.num_frames)
    D_init = dictionary
    prior = None
    diagnostics = []
    for p in range(config.passes):
        state = initial_state(config, D_init)
        out = np.empty(shape, dtype=np.complex128)
        diagnostics += _run_pass(source, config, state, out, prior, p, monitor)
        prior, D_init = out, state.D
    dictionary = dl.Dictionary(state.D, config.constraint(), config.atom_rank(), config.patch.reshape_dims)
    return StreamResult(frames=out, dictionary=dictionary, diagnostics=diagnostics)


def batch_reconstruct(source, config: OnairConfig, iterations: int | None = None,
                      dictionary=None, monitor: bool = False) -> StreamResult:
    """All frames in a single window, ``iterations`` (default ``K_first``) alternations."""
    T = source.num_frames
    cfg = replace(config, window_len=T, window_stride=T, passes=1,
                  K_first=iterations if iterations is not None else config.K_first)
    return reconstruct_stream(source, cfg, dictionary=dictionary, monitor=monitor)
