"""Compare the compiled and pure-Python flow kernels.

Run with ``python3 benchmarks/bench_kernels.py [--periods N] [--repeat R]``.
Prints wall time per forcing period for each mode and the speed-up, and
checks that both backends return the same end state.
"""
import argparse
import time

import numpy as np

from twistcar.kernels import available_backends, get_flow
from twistcar.model import TABLE1, nondimensionalize

MODES = {"state": (0, 3), "pose": (1, 6), "stm": (2, 12)}


def _y0(n):
    y = np.zeros(n)
    y[:3] = (0.3, -0.2, 0.01)
    if n == 12:
        y[3:] = np.eye(3).ravel()
    return y


def run(backend, mode, dp, periods, repeat):
    flow = get_flow(backend)
    m, n = MODES[mode]
    t1 = periods * dp.period
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = flow(_y0(n), 0.0, t1, dp.as_tuple(), 1e-10, 1e-12, 0.0, 0.0, 10 ** 7, m, False)
        best = min(best, time.perf_counter() - t0)
    return best / periods, out[2]


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--periods", type=int, default=20)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args(argv)
    dp = nondimensionalize(TABLE1, 1.72)
    backends = available_backends()
    print(f"backends: {', '.join(backends)}")
    print(f"{'mode':6s} " + " ".join(f"{b + ' [ms/period]':>22s}" for b in backends) + "  speed-up")
    for mode in MODES:
        res = {b: run(b, mode, dp, args.periods, args.repeat) for b in backends}
        line = f"{mode:6s} " + " ".join(f"{1e3 * res[b][0]:22.4f}" for b in backends)
        if len(backends) == 2:
            (ta, ya), (tb, yb) = res["cython"], res["python"]
            line += f"  {tb / ta:8.1f}x  (max |dy| = {np.max(np.abs(ya - yb)):.1e})"
        print(line)


if __name__ == "__main__":
    main()
