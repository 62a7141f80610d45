"""Time the compiled convolution kernels against the numpy fallback.

    python3 benchmarks/bench_kernels.py [--repeat 5]
"""
import argparse
import timeit

import numpy as np

from maxleak import _kernels_py, kernels
from maxleak.group import FiniteAbelianGroup

try:
    from maxleak import _ckernels
except ImportError:
    _ckernels = None


def cases():
    rng = np.random.default_rng(0)
    for spec in ("14", "2,2,2,2", "256", "2,2,2,2,2,2,2,2"):
        g = FiniteAbelianGroup.parse(spec)
        M = g.order
        a, b = rng.dirichlet(np.ones(M)), rng.dirichlet(np.ones(M))
        yield f"convolve {spec}", lambda mod, a=a, b=b, g=g: mod.group_convolve(a, b, g.add_table)
        n = 4096 if M <= 16 else 512
        A, B = rng.random((n, M)), rng.random((n, M))
        yield f"batch n={n} {spec}", lambda mod, A=A, B=B, g=g: mod.batch_group_convolve(A, B, g.sub_table)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    print(f"active backend: {kernels.BACKEND}")
    print(f"{'case':32s} {'python [ms]':>12s} {'cython [ms]':>12s} {'speedup':>8s}")
    for name, fn in cases():
        t_py = min(timeit.repeat(lambda: fn(_kernels_py), number=1, repeat=args.repeat)) * 1e3
        if _ckernels is None:
            print(f"{name:32s} {t_py:12.3f} {'n/a':>12s}")
            continue
        t_c = min(timeit.repeat(lambda: fn(_ckernels), number=1, repeat=args.repeat)) * 1e3
        assert np.allclose(fn(_kernels_py), fn(_ckernels), rtol=1e-12, atol=1e-15)
        print(f"{name:32s} {t_py:12.3f} {t_c:12.3f} {t_py / t_c:8.1f}")


if __name__ == "__main__":
    main()
