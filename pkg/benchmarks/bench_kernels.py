"""Time the compiled kernels against their numpy twins.

Run with ``python3 benchmarks/bench_kernels.py``. Prints one line per
kernel: best-of-5 wall time for each backend and the speedup.
"""
import timeit

import numpy as np

from bmgeom import convex2d as c2
from bmgeom import kernels


def cases():
    rng = np.random.default_rng(0)
    P = c2.make_polygon(rng.normal(size=(200, 2)))
    P = c2.translate(P, -c2.centroid(P))
    Q = c2.disc(256)
    th = 2 * np.pi * np.arange(512) / 512
    pts = rng.normal(size=(100_000, 2))
    S = np.array([[1.1, 0.2], [0.2, (1 + 0.04) / 1.1]])
    return {
        "hausdorff_sweep (512 angles)": lambda m: kernels.hausdorff_sweep(P.support, Q.support, th, m),
        "ratio_sweep (512 angles)": lambda m: kernels.ratio_sweep(P.support, Q.support, th, m),
        "gauge_many (1e5 points)": lambda m: kernels.gauge_many(P.gauge_data, pts, m),
        "disc_ratio (x1000)": lambda m: [kernels.disc_ratio(P.support, (0.01, 0.0), (0.0, 0.0), S, m)
                                         for _ in range(1000)],
        "nesting_ratio (x1000)": lambda m: [kernels.nesting_ratio(P.support, Q.support, S, (0.01, 0.0),
                                                                  (0.0, 0.0), m)
                                            for _ in range(1000)],
    }


def main():
    py = kernels.backend_module("python")
    try:
        cy = kernels.backend_module("cython")
    except ImportError:
        cy = None
    print(f"{'kernel':32s} {'python [s]':>11s} {'cython [s]':>11s} {'speedup':>8s}")
    for name, fn in cases().items():
        tp = min(timeit.repeat(lambda: fn(py), number=1, repeat=5))
        if cy is None:
            print(f"{name:32s} {tp:11.4f} {'n/a':>11s}")
            continue
        tc = min(timeit.repeat(lambda: fn(cy), number=1, repeat=5))
        print(f"{name:32s} {tp:11.4f} {tc:11.4f} {tp / tc:8.1f}")


if __name__ == "__main__":
    main()
