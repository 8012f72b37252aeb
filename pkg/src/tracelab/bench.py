"""Timing comparison of the kernel backends.

Run as ``python -m tracelab.bench [--sizes 50,100,200] [--repeat 3]``.
Each backend gets a warmup call before timing so numba compilation cost
does not pollute the numbers; reported times are the best of ``repeat``.
"""

import argparse
import time

import numpy as np

from . import kernels
from .linalg import JACOBI_OFF_FACTOR


def _seeded_symmetric(n, seed=0):
    rng = np.random.default_rng(seed)
    m = rng.standard_normal((n, n))
    return 0.5 * (m + m.T)


def _time_once(fn):
    start = time.perf_counter()
    fn()
    return time.perf_counter() - start


def _bench_jacobi(impl, base, repeat):
    n = base.shape[0]
    stop = JACOBI_OFF_FACTOR * np.sqrt((base * base).sum())

    def call():
        a = base.copy()
        v = np.eye(n)
        impl["jacobi"](a, v, stop, stop / n, 60)

    call()  # warmup / JIT
    return min(_time_once(call) for _ in range(repeat))


def _bench_cholesky(impl, base, repeat):
    n = base.shape[0]
    spd = base @ base.T + n * np.eye(n)
    rhs = np.linspace(-1.0, 1.0, n)[:, None]

    def call():
        low, bad = impl["cholesky"](spd.copy(), 0.0)
        impl["solve_lower_t"](low, impl["solve_lower"](low, rhs.copy()))

    call()
    return min(_time_once(call) for _ in range(repeat))


def run_bench(sizes, repeat):
    backends = kernels.available_backends()
    rows = []
    for kernel, bench in (("jacobi", _bench_jacobi), ("cholesky", _bench_cholesky)):
        for n in sizes:
            base = _seeded_symmetric(n)
            times = {name: bench(kernels.get_impl(name), base, repeat) for name in backends}
            rows.append((kernel, n, times))
    return rows


def format_table(rows):
    backends = sorted(rows[0][2]) if rows else []
    header = f"{'kernel':<10}{'n':>6}" + "".join(f"{b + ' [s]':>14}" for b in backends)
    if len(backends) == 2:
        header += f"{'speedup':>10}"
    lines = [header]
    for kernel, n, times in rows:
        line = f"{kernel:<10}{n:>6}" + "".join(f"{times[b]:>14.6f}" for b in backends)
        if len(backends) == 2:
            slow, fast = times["numpy"], times["numba"]
            line += f"{slow / fast:>10.2f}"
        lines.append(line)
    return "\n".join(lines)


def main(argv=None):
    parser = argparse.ArgumentParser(prog="tracelab.bench")
    parser.add_argument("--sizes", default="50,100,200",
                        help="comma-separated matrix sizes")
    parser.add_argument("--repeat", type=int, default=3, help="timing repetitions")
    args = parser.parse_args(argv)
    sizes = [int(s) for s in args.sizes.split(",")]
    print(f"backends: {', '.join(kernels.available_backends())}")
    print(format_table(run_bench(sizes, args.repeat)))
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
