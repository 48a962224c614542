"""Time the compiled patch kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--size 64 64 20] [--patch 8 8 5] [--stride 2 2 1]

Both backends are checked for agreement before timing.
"""
import argparse
import timeit

import numpy as np

from onair import _kernels
from onair.patches import PatchConfig


def _cases(x, cfg):
    sx, sy, st = cfg.starts(x.shape)
    dims = cfg.patch_dims
    P = _kernels.python.extract(x, sx, sy, st, *dims)
    return {
        "extract": lambda k: k.extract(x, sx, sy, st, *dims),
        "aggregate": lambda k: k.aggregate(P, sx, sy, st, *dims, *x.shape),
        "coverage": lambda k: k.coverage(sx, sy, st, *dims, *x.shape),
    }, P.shape


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--size", type=int, nargs=3, default=[64, 64, 20])
    ap.add_argument("--patch", type=int, nargs=3, default=[8, 8, 5])
    ap.add_argument("--stride", type=int, nargs=3, default=[2, 2, 1])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    if _kernels.compiled is None:
        raise SystemExit("compiled kernels are not built; run `pip install -e . --no-build-isolation`")

    rng = np.random.default_rng(0)
    shape = tuple(args.size)
    x = rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
    cfg = PatchConfig(tuple(args.patch), tuple(args.stride[:2]), args.stride[2])
    cases, pshape = _cases(x, cfg)
    print(f"volume {shape}, patches {tuple(args.patch)}, patch matrix {pshape}")
    print(f"{'kernel':<10} {'python ms':>10} {'cython ms':>10} {'speedup':>8}")
    for name, run in cases.items():
        ref, fast = run(_kernels.python), run(_kernels.compiled)
        if not np.allclose(ref, fast, rtol=0, atol=1e-12):
            raise SystemExit(f"{name}: backends disagree")
        tp = min(timeit.repeat(lambda: run(_kernels.python), number=1, repeat=args.repeat))
        tc = min(timeit.repeat(lambda: run(_kernels.compiled), number=1, repeat=args.repeat))
        print(f"{name:<10} {1e3 * tp:>10.2f} {1e3 * tc:>10.2f} {tp / tc:>7.1f}x")


if __name__ == "__main__":
    main()
