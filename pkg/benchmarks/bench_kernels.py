"""Time the numba walk kernels against their numpy counterparts.

    python benchmarks/bench_kernels.py [--walkers 2048] [--chunk 1024] [--repeat 5]

Both versions consume the same pre-drawn randomness; the script checks
that their outputs agree before reporting timings.
"""

import argparse
import time

import numpy as np

from subjump import build_graph, kernels
from subjump._accel import njit


def best_of(fn, make_args, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        args = make_args()
        t0 = time.perf_counter()
        fn(*args)
        best = min(best, time.perf_counter() - t0)
        out = args
    return best, out


def cases(walkers, chunk, rng):
    dirs = rng.integers(0, 4, size=(walkers, chunk))
    yield "lattice Z^2", "lattice_advance", lambda: (np.zeros((walkers, 2), dtype=np.int64), np.zeros(walkers, dtype=np.int64), dirs, 64)

    disp = rng.integers(-5, 6, size=(walkers, chunk // 16, 2))
    yield "jump walk Z^2", "jump_walk_advance", lambda: (np.zeros((walkers, 2), dtype=np.int64), np.zeros(walkers, dtype=np.int64), disp, 64)

    g = build_graph({"kind": "sierpinski", "level": 8})
    c = g.default_center()
    dc = g.coords - g.coords[c]
    d2 = dc[:, 0] ** 2 + dc[:, 0] * dc[:, 1] + dc[:, 1] ** 2
    u = rng.random((walkers, chunk))
    yield "gasket level 8", "graph_advance", lambda: (np.full(walkers, c, dtype=np.int64), np.zeros(walkers, dtype=np.int64), u, g.nbr, g.deg, d2, 32 * 32)


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--walkers", type=int, default=2048)
    parser.add_argument("--chunk", type=int, default=1024)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()
    rng = np.random.default_rng(0)
    print(f"{'kernel':<16}{'numba [ms]':>12}{'numpy [ms]':>12}{'speedup':>10}")
    for label, name, make in cases(args.walkers, args.chunk, rng):
        jit = njit(getattr(kernels, f"{name}_loop"))
        jit(*make())  # compile outside the timing
        t_jit, out_jit = best_of(jit, make, args.repeat)
        t_np, out_np = best_of(getattr(kernels, f"{name}_numpy"), make, args.repeat)
        for a, b in zip(out_jit, out_np):
            assert np.array_equal(a, b), f"{label}: backends disagree"
        print(f"{label:<16}{1e3 * t_jit:>12.2f}{1e3 * t_np:>12.2f}{t_np / t_jit:>9.1f}x")


if __name__ == "__main__":
    main()
