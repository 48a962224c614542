import numpy as np
import pytest

from onair import _kernels

BACKENDS = ["python"] + (["cython"] if _kernels.compiled is not None else [])


@pytest.fixture(params=BACKENDS)
def backend(request, monkeypatch):
    """Run a test once per available patch-kernel backend."""
    mod = _kernels.python if request.param == "python" else _kernels.compiled
    for name in ("extract", "aggregate", "coverage"):
        monkeypatch.setattr(_kernels, name, getattr(mod, name))
    return request.param


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def crandn(rng, *shape):
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)


def planted_stream(patch, m, num_frames, frame_dims, sparsity, seed, frac=0.5, snr_db=30.0, **kw):
    """Planted-dictionary video measured through a uniform pixel mask."""
    from onair import MaskSpec, MeasurementStream, SensingOperator, gen_mask
    from onair.synth import synth_planted
    data = synth_planted(patch, m, num_frames, frame_dims, sparsity, snr_db, seed, **kw)
    masks = gen_mask(MaskSpec("uniform", frac, seed=seed), frame_dims, num_frames)
    return data, MeasurementStream(SensingOperator("pixel", masks), data.frames * masks)
