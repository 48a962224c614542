"""Backend selection for the patch gather/scatter kernels.

The Cython extension is used when it was built; otherwise the numpy
fallback is imported. Set ``ONAIR_PURE_PYTHON=1`` to force the fallback.
"""
import os

from . import _pykernels as python

BACKEND = "python"
if os.environ.get("ONAIR_PURE_PYTHON") != "1":
    try:
        from . import _ckernels as compiled
    except ImportError:
        compiled = None
    else:
        BACKEND = "cython"
else:
    compiled = None

_active = compiled if compiled is not None else python

extract = _active.extract
aggregate = _active.aggregate
coverage = _active.coverage

__all__ = ["BACKEND", "python", "compiled", "extract", "aggregate", "coverage"]
