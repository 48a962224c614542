"""Separable 3-D DCT dictionary."""
import numpy as np
from scipy.fft import dct


def dct_matrix(n: int) -> np.ndarray:
    """Orthonormal type-II DCT matrix; row ``k`` is the k-th basis vector."""
    return dct(np.eye(n), type=2, norm="ortho", axis=0)


def build_dct_dictionary(n_x: int, n_y: int, n_t: int) -> np.ndarray:
    """Square dictionary whose atoms are 3-D DCT basis patches.

    The atom order follows the patch vectorization (x fastest), so the
    forward 3-D DCT of a patch vector ``v`` is ``D.conj().T @ v``.
    """
    if min(n_x, n_y, n_t) < 1:
        raise ValueError("DCT dimensions must be >= 1")
    T = np.kron(dct_matrix(n_t), np.kron(dct_matrix(n_y), dct_matrix(n_x)))
    return T.conj().T.astype(np.complex128)
