"""Dictionary learning steps for the low-rank-atom and unitary models.

Notation follows the usual synthesis model ``P ~= D Z`` with the codes
stored transposed, ``C = Z^H`` of shape ``(M, m)``. Column ``i`` of ``C``
holds the coefficients of atom ``i`` across all ``M`` patches of the
current minibatch.

Past minibatches enter only through :class:`Accumulators`, the
rho-weighted sums ``Q = sum rho^(t-j) P^j C^j`` and
``G = sum rho^(t-j) (C^j)^H C^j`` plus a few scalars used to evaluate the
history part of the objective.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp

from .patches import reshape_atom, unreshape_atom

FULL = "full"
LOWRANK = "lowrank"
UNITARY = "unitary"
CONSTRAINTS = (FULL, LOWRANK, UNITARY)

DEFAULT_L = 1e20


@dataclass
class Dictionary:
    """Atoms plus the constraint they are kept in.

    ``rank`` is only meaningful for ``lowrank``; ``full`` is the same set
    with ``rank = min(reshape_dims)``.
    """

    atoms: np.ndarray
    constraint: str = FULL
    rank: int | None = None
    reshape_dims: tuple[int, int] | None = None

    def __post_init__(self):
        if self.constraint not in CONSTRAINTS:
            raise ValueError(f"unknown constraint {self.constraint!r}")
        self.atoms = np.asarray(self.atoms, dtype=np.complex128)
        n, m = self.atoms.shape
        if self.reshape_dims is None:
            self.reshape_dims = (n, 1)
        self.reshape_dims = tuple(int(v) for v in self.reshape_dims)
        if self.reshape_dims[0] * self.reshape_dims[1] != n:
            raise ValueError(f"reshape_dims {self.reshape_dims} do not multiply to n={n}")
        if self.constraint == UNITARY and n != m:
            raise ValueError("a unitary dictionary must be square")
        if self.constraint == LOWRANK and (self.rank is None or self.rank < 1):
            raise ValueError("lowrank constraint needs rank >= 1")

    @property
    def effective_rank(self) -> int:
        full = min(self.reshape_dims)
        if self.constraint == LOWRANK:
            return min(self.rank, full)
        return full

    def atom_norm_error(self) -> float:
        return float(np.max(np.abs(np.linalg.norm(self.atoms, axis=0) - 1.0)))

    def rank_excess(self) -> float:
        """Largest ``sigma_{r+1}(R(d_i))`` over atoms (0 when r is full)."""
        r = self.effective_rank
        if r >= min(self.reshape_dims):
            return 0.0
        worst = 0.0
        for d in self.atoms.T:
            s = np.linalg.svd(reshape_atom(d, self.reshape_dims), compute_uv=False)
            worst = max(worst, float(s[r]))
        return worst

    def unitarity_error(self) -> float:
        D = self.atoms
        return float(np.linalg.norm(D.conj().T @ D - np.eye(D.shape[1])))


@dataclass
class Accumulators:
    """Constant-size summary of all committed minibatches.

    ``patch_energy``, ``l0`` and ``fidelity`` are rho-weighted sums of
    ``||P^j||_F^2``, ``||Z^j||_0`` and ``||y^j - A^j x^j||^2``; they only
    feed objective monitoring.
    """

    Q: np.ndarray
    G: np.ndarray
    rho: float
    patch_energy: float = 0.0
    l0: float = 0.0
    fidelity: float = 0.0
    count: int = 0

    @classmethod
    def zeros(cls, n: int, m: int, rho: float) -> "Accumulators":
        if not 0 < rho <= 1:
            raise ValueError(f"rho must be in (0, 1], got {rho}")
        return cls(np.zeros((n, m), np.complex128), np.zeros((m, m), np.complex128), rho)

    @property
    def nbytes(self) -> int:
        return self.Q.nbytes + self.G.nbytes


def hard_threshold(v, lam: float) -> np.ndarray:
    """Zero every entry with magnitude strictly below ``lam``."""
    v = np.asarray(v)
    if lam < 0:
        raise ValueError("threshold must be non-negative")
    return np.where(np.abs(v) >= lam, v, 0)


def _clip_phase(b: np.ndarray, lam: float, L: float) -> np.ndarray:
    mag = np.abs(b)
    keep = mag >= lam
    out = np.zeros_like(b)
    big = keep & (mag > L)
    out[keep] = b[keep]
    out[big] = b[big] * (L / mag[big])
    return out


def residual_correlation(i: int, D: np.ndarray, C: np.ndarray, P: np.ndarray) -> np.ndarray:
    """``(E_i)^H d_i`` with ``E_i = P - sum_{k != i} d_k c_k^H``, without forming ``E_i``."""
    d = D[:, i]
    Dd = D.conj().T @ d
    return P.conj().T @ d - C @ Dd + C[:, i] * Dd[i]


def sparse_code_atom(i, D, C, P, lam_z: float, L: float = DEFAULT_L) -> np.ndarray:
    """Exact minimizer over column ``i`` of ``C`` with the other columns fixed.

    Minimizes ``||E_i - d_i c^H||_F^2 + lam_z^2 ||c||_0`` subject to
    ``||c||_inf <= L`` for a unit-norm atom ``d_i``.
    """
    if L <= lam_z:
        raise ValueError(f"L ({L}) must exceed lam_z ({lam_z})")
    b = residual_correlation(i, D, C, P)
    return _clip_phase(b, lam_z, L)


def truncated_svd(M: np.ndarray, r: int):
    """Leading ``r`` singular triplets ``(U_r, s_r, V_r)`` with ``M ~= U_r diag(s_r) V_r^H``.

    Each left singular vector is rotated so that its largest-magnitude
    entry (lowest index on ties) is real and positive; the right vector
    absorbs the conjugate phase.
    """
    if r < 1:
        raise ValueError("rank must be >= 1")
    U, s, Vh = np.linalg.svd(np.asarray(M, dtype=np.complex128), full_matrices=False)
    r = min(r, len(s))
    U = U[:, :r].copy()
    V = Vh[:r].conj().T.copy()
    for k in range(r):
        j = int(np.argmax(np.abs(U[:, k])))
        a = abs(U[j, k])
        if a > 0:
            ph = U[j, k] / a
            U[:, k] *= np.conj(ph)
            V[:, k] *= np.conj(ph)
            U[j, k] = a
    return U, s[:r].copy(), V


def fallback_atom(n: int) -> np.ndarray:
    """Unit-norm, rank-1 atom used when an atom has no coefficients."""
    d = np.zeros(n, dtype=np.complex128)
    d[0] = 1.0
    return d


def project_atom(v: np.ndarray, r: int, reshape_dims) -> np.ndarray | None:
    """Unit-norm, rank-``r`` (after reshaping) vector best aligned with ``v``.

    Returns ``None`` when ``v`` is zero.
    """
    if r >= min(reshape_dims):
        nv = np.linalg.norm(v)
        return v / nv if nv > 0 else None
    U, s, V = truncated_svd(reshape_atom(v, reshape_dims), r)
    ns = np.linalg.norm(s)
    if ns == 0:
        return None
    return unreshape_atom((U * (s / ns)) @ V.conj().T)


def atom_target(i, D, C, P, acc: Accumulators) -> tuple[np.ndarray, float]:
    """``E~_i c~_i`` over the weighted history, plus ``||c~_i||^2``.

    The history enters through ``rho * Q[:, i]`` and ``rho * G[:, i]``; the
    current minibatch contributes with its latest codes.
    """
    c = C[:, i]
    q = acc.rho * acc.Q[:, i] + P @ c
    g = acc.rho * acc.G[:, i] + C.conj().T @ c
    return q - D @ g + D[:, i] * g[i], float(g[i].real)


def update_atom(i, D, C, P, acc: Accumulators, r: int, reshape_dims) -> np.ndarray:
    v, weight = atom_target(i, D, C, P, acc)
    d = project_atom(v, r, reshape_dims) if weight > 0 else None
    return fallback_atom(D.shape[0]) if d is None else d


def dl_pass_p1(D, C, P, acc: Accumulators, lam_z: float, L: float = DEFAULT_L, *,
               rank: int, reshape_dims, n_iter: int = 1, update_atoms: bool = True):
    """Block coordinate descent over (code column, atom) pairs.

    For each atom in order, the code column is updated first and then the
    atom. ``update_atoms=False`` gives the fixed-dictionary variant.
    Returns new ``(D, C)``; the inputs are not modified.
    """
    D = np.array(D, dtype=np.complex128)
    C = np.array(C, dtype=np.complex128)
    P = np.asarray(P)
    for _ in range(n_iter):
        for i in range(D.shape[1]):
            C[:, i] = sparse_code_atom(i, D, C, P, lam_z, L)
            if update_atoms:
                D[:, i] = update_atom(i, D, C, P, acc, rank, reshape_dims)
    return D, C


def sparse_code_pass(D, C, P, lam_z: float, L: float = DEFAULT_L, n_iter: int = 1):
    """Code-only sweeps of :func:`dl_pass_p1`."""
    C = np.array(C, dtype=np.complex128)
    for _ in range(n_iter):
        for i in range(D.shape[1]):
            C[:, i] = sparse_code_atom(i, D, C, P, lam_z, L)
    return C


def history_objective(D, acc: Accumulators, lam_z: float) -> float:
    """``rho * sum_j rho^(t-1-j) (||P^j - D (C^j)^H||^2 + lam_z^2 ||C^j||_0)`` from the accumulators."""
    if acc.count == 0:
        return 0.0
    DhD = D.conj().T @ D
    fit = (acc.patch_energy
           - 2 * np.real(np.vdot(acc.Q, D))
           + np.real(np.vdot(acc.G, DhD)))
    return acc.rho * (max(fit, 0.0) + lam_z**2 * acc.l0)


def dstep_objective(D, C, P, acc: Accumulators, lam_z: float) -> float:
    """Objective minimized by the dictionary learning step at fixed frames."""
    R = P - D @ C.conj().T
    current = np.real(np.vdot(R, R)) + lam_z**2 * np.count_nonzero(C)
    return history_objective(D, acc, lam_z) + float(current)


def check_unitary(D, tol: float = 1e-8) -> None:
    D = np.asarray(D)
    if D.shape[0] != D.shape[1]:
        raise ValueError("dictionary is not square")
    err = np.linalg.norm(D.conj().T @ D - np.eye(D.shape[1]))
    if err > tol:
        raise ValueError(f"dictionary is not unitary (||D^H D - I||_F = {err:.3g})")


def sparse_code_unitary(D, P, lam_z: float) -> np.ndarray:
    """``Z = H_lam(D^H P)``; the exact code update for a unitary ``D``."""
    check_unitary(D)
    return hard_threshold(np.asarray(D).conj().T @ P, lam_z)


def update_dict_unitary(acc: Accumulators, P, C, D_prev=None) -> np.ndarray:
    """Orthogonal Procrustes update ``D = U V^H`` of ``rho Q + P C``.

    If that product is exactly zero every unitary matrix is optimal and
    ``D_prev`` (identity when absent) is returned.
    """
    B = acc.rho * acc.Q + P @ C
    if not np.any(B):
        return np.eye(B.shape[0], dtype=np.complex128) if D_prev is None else np.array(D_prev)
    U, _, Vh = np.linalg.svd(B)
    return U @ Vh


def update_accumulators(acc: Accumulators, P, C, fidelity: float = 0.0) -> Accumulators:
    """Commit one minibatch: ``Q <- rho Q + P C``, ``G <- rho G + C^H C``."""
    rho = acc.rho
    Cs = sp.csc_array(np.asarray(C))
    PC = (Cs.T @ np.asarray(P).T).T
    CC = (Cs.conj().T @ Cs).toarray()
    CC = 0.5 * (CC + CC.conj().T)
    P = np.asarray(P)
    return replace(
        acc,
        Q=rho * acc.Q + PC,
        G=rho * acc.G + CC,
        patch_energy=rho * acc.patch_energy + float(np.real(np.vdot(P, P))),
        l0=rho * acc.l0 + Cs.count_nonzero(),
        fidelity=rho * acc.fidelity + float(fidelity),
        count=acc.count + 1,
    )
