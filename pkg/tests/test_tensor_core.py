import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onair import PatchConfig, aggregate_patches, build_dct_dictionary, extract_patches, sliding_windows
from onair.dct import dct_matrix
from onair.patches import axis_starts, patch_coverage, reshape_atom, unreshape_atom

from conftest import crandn
from oracles import coverage_by_indicators, gather_patches

# coverage of a 5x5 frame by 2x2 patches at stride 2 (starts 0, 2, 3), from indicator accumulation
COVERAGE_5X5 = [
    [1, 1, 1, 2, 1],
    [1, 1, 1, 2, 1],
    [1, 1, 1, 2, 1],
    [2, 2, 2, 4, 2],
    [1, 1, 1, 2, 1],
]


def test_constant_image_all_ones(backend):
    P = extract_patches(np.ones((4, 4, 1)), PatchConfig((2, 2, 1), 2, 1))
    assert P.shape == (4, 4)
    np.testing.assert_array_equal(P, np.ones((4, 4)))


def test_single_patch_is_whole_minibatch(backend, rng):
    x = crandn(rng, 8, 8, 5)
    P = extract_patches(x, PatchConfig((8, 8, 5), 2, 1))
    assert P.shape == (320, 1)
    np.testing.assert_array_equal(P[:, 0], x.reshape(-1, order="F"))


def test_clamped_grid_matches_gather(backend, rng):
    x = crandn(rng, 5, 5, 1)
    cfg = PatchConfig((2, 2, 1), 2, 1)
    np.testing.assert_array_equal(axis_starts(5, 2, 2), [0, 2, 3])
    P = extract_patches(x, cfg)
    assert P.shape == (4, 9)
    np.testing.assert_array_equal(P, gather_patches(x, (2, 2, 1), (2, 2, 1)))


def test_aggregate_ones_nonoverlapping(backend):
    cfg = PatchConfig((2, 2, 1), 2, 1)
    total, cov = aggregate_patches(np.ones((4, 4)), cfg, (4, 4, 1))
    np.testing.assert_array_equal(total, np.ones((4, 4, 1)))
    np.testing.assert_array_equal(cov, np.ones((4, 4, 1)))


def test_coverage_clamped_grid(backend):
    cfg = PatchConfig((2, 2, 1), 2, 1)
    cov = patch_coverage(cfg, (5, 5, 1))
    np.testing.assert_array_equal(cov[:, :, 0], COVERAGE_5X5)
    np.testing.assert_array_equal(cov, coverage_by_indicators((5, 5, 1), (2, 2, 1), (2, 2, 1)))


@pytest.mark.parametrize("dims,patch,strides", [
    ((6, 5, 4), (3, 2, 2), (2, 2, 1)),
    ((7, 7, 5), (4, 3, 5), (3, 1, 1)),
    ((9, 6, 6), (4, 5, 3), (4, 5, 2)),
])
def test_adjoint_pair(backend, rng, dims, patch, strides):
    cfg = PatchConfig(patch, strides[:2], strides[2])
    x = crandn(rng, *dims)
    P = crandn(rng, cfg.n, cfg.num_patches(dims))
    lhs = np.vdot(extract_patches(x, cfg), P)
    rhs = np.vdot(x, aggregate_patches(P, cfg, dims)[0])
    assert abs(lhs - rhs) <= 1e-12 * abs(lhs)


@settings(max_examples=60, deadline=None)
@given(
    dims=st.tuples(st.integers(1, 9), st.integers(1, 9), st.integers(1, 6)),
    frac=st.tuples(st.floats(0.01, 1), st.floats(0.01, 1), st.floats(0.01, 1)),
    strides=st.tuples(st.integers(1, 4), st.integers(1, 4), st.integers(1, 3)),
)
def test_coverage_positive_and_gather_property(dims, frac, strides):
    patch = tuple(max(1, int(f * d)) for f, d in zip(frac, dims))
    strides = tuple(min(s, p) for s, p in zip(strides, patch))
    cfg = PatchConfig(patch, strides[:2], strides[2])
    cov = patch_coverage(cfg, dims)
    assert (cov >= 1).all()
    x = np.arange(np.prod(dims), dtype=float).reshape(dims)
    P = extract_patches(x, cfg)
    np.testing.assert_array_equal(P, gather_patches(x, patch, cfg.strides))
    # coverage is the diagonal of sum P_l^T P_l
    np.testing.assert_array_equal(aggregate_patches(np.ones_like(P), cfg, dims)[0].real, cov)


def test_extract_deterministic(backend, rng):
    x = crandn(rng, 10, 9, 5)
    cfg = PatchConfig((4, 4, 3), 2, 1)
    a = extract_patches(x, cfg)
    b = extract_patches(x, cfg)
    assert a.tobytes() == b.tobytes()


def test_backends_bit_identical(rng):
    from onair import _kernels
    if _kernels.compiled is None:
        pytest.skip("compiled kernels not built")
    x = crandn(rng, 17, 13, 7)
    cfg = PatchConfig((5, 4, 3), (2, 3), 2)
    s = cfg.starts(x.shape)
    Pp = _kernels.python.extract(x, *s, *cfg.patch_dims)
    Pc = _kernels.compiled.extract(x, *s, *cfg.patch_dims)
    assert Pp.tobytes() == Pc.tobytes()
    ap = _kernels.python.aggregate(Pp, *s, *cfg.patch_dims, *x.shape)
    ac = _kernels.compiled.aggregate(Pp, *s, *cfg.patch_dims, *x.shape)
    np.testing.assert_allclose(ap, ac, rtol=1e-14, atol=1e-14)
    np.testing.assert_array_equal(_kernels.python.coverage(*s, *cfg.patch_dims, *x.shape),
                                  _kernels.compiled.coverage(*s, *cfg.patch_dims, *x.shape))


def test_errors():
    cfg = PatchConfig((3, 3, 2), 1, 1)
    with pytest.raises(ValueError):
        extract_patches(np.zeros((2, 5, 2)), cfg)
    with pytest.raises(ValueError):
        aggregate_patches(np.zeros((18, 5)), cfg, (4, 4, 2))
    with pytest.raises(ValueError):
        PatchConfig((3, 3, 2), 0, 1)
    with pytest.raises(ValueError):
        PatchConfig((3, 0, 2))
    with pytest.raises(ValueError, match="exceeds the patch extent"):
        PatchConfig((3, 3, 2), 4, 1)


def test_reshape_atom_column_by_t():
    d = np.arange(12)
    R = reshape_atom(d, (4, 3))
    np.testing.assert_array_equal(R[:, 1], [4, 5, 6, 7])
    np.testing.assert_array_equal(unreshape_atom(R), d)


def test_dct_trivial_dims():
    np.testing.assert_allclose(build_dct_dictionary(1, 1, 1), [[1.0]])
    D = build_dct_dictionary(2, 1, 1)
    s = 1 / np.sqrt(2)
    np.testing.assert_allclose(np.abs(D), [[s, s], [s, s]], atol=1e-15)
    np.testing.assert_allclose(D[:, 0], [s, s], atol=1e-15)
    np.testing.assert_allclose(D[:, 1] * np.sign(D[0, 1]), [s, -s], atol=1e-15)


def test_dct_320_unitary():
    D = build_dct_dictionary(8, 8, 5)
    assert D.shape == (320, 320)
    assert np.linalg.norm(D.conj().T @ D - np.eye(320)) <= 1e-10


@pytest.mark.parametrize("dims", [(1, 2, 3), (4, 4, 5), (8, 8, 8), (3, 7, 2)])
def test_dct_unitary_and_separable(dims):
    D = build_dct_dictionary(*dims)
    n = int(np.prod(dims))
    assert np.linalg.norm(D.conj().T @ D - np.eye(n)) <= 1e-10
    # D^H v is the separable 3-D DCT of the patch
    from scipy.fft import dctn
    v = np.random.default_rng(0).standard_normal(n)
    ref = dctn(v.reshape(dims, order="F"), type=2, norm="ortho").reshape(-1, order="F")
    np.testing.assert_allclose(D.conj().T @ v, ref, atol=1e-12)


def test_dct_matrix_rows_orthonormal():
    C = dct_matrix(5)
    np.testing.assert_allclose(C @ C.T, np.eye(5), atol=1e-14)
    np.testing.assert_allclose(C[0], np.full(5, 1 / np.sqrt(5)))


def test_sliding_windows_examples():
    assert list(sliding_windows(10, 5, 5)) == [(0, 5), (5, 10)]
    assert len(sliding_windows(150, 5, 1)) == 146
    assert list(sliding_windows(7, 5, 2)) == [(0, 5), (2, 7)]
    with pytest.raises(ValueError):
        sliding_windows(4, 5, 1)


@settings(max_examples=100, deadline=None)
@given(T=st.integers(1, 40), L=st.integers(1, 40), s=st.integers(1, 10))
def test_sliding_windows_cover(T, L, s):
    if L > T:
        return
    if s > L:
        with pytest.raises(ValueError):
            sliding_windows(T, L, s)
        return
    plan = sliding_windows(T, L, s)
    starts = [a for a, _ in plan]
    assert starts[0] == 0 and starts == sorted(starts)
    assert plan.windows[-1][1] == T
    assert all(b - a == L for a, b in plan)
    covered = set()
    for a, b in plan:
        covered.update(range(a, b))
    assert covered == set(range(T))
    last = plan.last_use()
    assert all(plan.windows[last[f]][0] <= f < plan.windows[last[f]][1] for f in range(T))
