"""Compare the numba and numpy kernels on study-sized problems.

    python benchmarks/bench_kernels.py [--repeat 20]

Prints median wall time per call for each backend and checks the outputs agree.
"""
import argparse
import statistics
import sys
import time

import numpy as np

from pnbounds import _kernels
from pnbounds.nuisance import NEWTON_MAX_HALVINGS, NEWTON_MAX_ITER, NEWTON_TOL
from pnbounds.simulation import dgp_sample


def _time(fn, args, repeat):
    fn(*args)  # warm-up (triggers JIT compilation)
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn(*args)
        times.append(time.perf_counter() - t0)
    return statistics.median(times), out


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    args = parser.parse_args(argv)
    if not hasattr(_kernels, "logistic_newton_numba"):
        print("numba is not installed; nothing to compare", file=sys.stderr)
        return 1

    print(f"{'kernel':<28}{'n':>7}{'numpy ms':>11}{'numba ms':>11}{'speedup':>9}")
    for n in (400, 1600, 8000):
        data = dgp_sample(n, 0.0, n)
        x = data.x.astype(float)
        design = np.column_stack([np.ones(n), x, data.v, x[:, None] * data.v])
        newton_args = (design, data.y.astype(float), np.zeros(design.shape[1]), 0.0,
                       NEWTON_TOL, NEWTON_MAX_ITER, NEWTON_MAX_HALVINGS, True)
        t_np, r_np = _time(_kernels.logistic_newton_numpy, newton_args, args.repeat)
        t_nb, r_nb = _time(_kernels.logistic_newton_numba, newton_args, args.repeat)
        assert np.allclose(r_np[0], r_nb[0], atol=1e-9), "logistic backends disagree"
        print(f"{'logistic_newton':<28}{n:>7}{1e3 * t_np:>11.3f}{1e3 * t_nb:>11.3f}{t_np / t_nb:>9.1f}")

        arm = data.x == 1
        knn_args = (np.ascontiguousarray(data.v[arm]), data.y[arm].astype(float), data.v, max(1, int(n**0.7 / 2)))
        t_np, r_np = _time(_kernels.knn_mean_numpy, knn_args, max(3, args.repeat // 4))
        t_nb, r_nb = _time(_kernels.knn_mean_numba, knn_args, max(3, args.repeat // 4))
        assert np.array_equal(r_np, r_nb), "knn backends disagree"
        print(f"{'knn_mean':<28}{n:>7}{1e3 * t_np:>11.3f}{1e3 * t_nb:>11.3f}{t_np / t_nb:>9.1f}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
