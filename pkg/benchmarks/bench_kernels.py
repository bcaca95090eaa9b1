"""Time the compiled and pure-Python kernel sets on the same inputs.

    python benchmarks/bench_kernels.py [--repeat N]

Each row reports the best of N runs after one warm-up call (which also
triggers numba compilation), and checks that both sets agree.
"""

import argparse
import time

import numpy as np

from resonant_tangency import _kernels
from resonant_tangency.asymptotics import seed_point
from resonant_tangency.map_core import ModelParams


def best_of(fn, repeat):
    fn()
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return min(times)


def cases(params):
    prm = params.packed
    v = np.array([1.0, 0.0, 0.0, 0.0])
    rng = np.random.default_rng(0)
    xs = rng.uniform(0.0, 1.2, 20000)
    ys = rng.uniform(0.0, 1.2, 20000)
    sx, sy = seed_point(20, params)
    return {
        "iterate k=20 x1000": lambda ks: [ks.iterate(sx, sy, 21, prm, v, 1e3) for _ in range(1000)],
        "newton k=20 x200": lambda ks: [ks.newton(sx, sy, 21, prm, 1e-12, 50, 10, 1e3) for _ in range(200)],
        "map_many n=20000": lambda ks: ks.map_many(xs, ys, prm),
        "trajectory n=5000": lambda ks: ks.trajectory(0.0, 0.5, 5000, prm),
    }


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()
    if _kernels.NB is None:
        print("numba is not installed; nothing to compare")
        return
    params = ModelParams()
    print(f"{'kernel':<22}{'python [s]':>12}{'numba [s]':>12}{'speed-up':>10}  agree")
    for name, run in cases(params).items():
        t_py = best_of(lambda: run(_kernels.PY), args.repeat)
        t_nb = best_of(lambda: run(_kernels.NB), args.repeat)
        a, b = run(_kernels.PY), run(_kernels.NB)
        if isinstance(a, list):
            a, b = a[-1], b[-1]
        agree = np.allclose(np.asarray(a, dtype=float), np.asarray(b, dtype=float), rtol=1e-12, atol=1e-14)
        print(f"{name:<22}{t_py:>12.4g}{t_nb:>12.4g}{t_py / t_nb:>10.1f}  {agree}")


if __name__ == "__main__":
    main()
