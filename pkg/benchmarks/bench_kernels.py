"""Time one backward sweep with the numba kernel against the numpy kernel.

    python3 benchmarks/bench_kernels.py --grid 161 --timesteps 200
"""

import argparse
import time

import numpy as np

from stratahjb import build_grid, builtin
from stratahjb.solver import CONTINUOUS, LSC, build_operator, terminal_entries


def bench(name: str, mode: str, nodes: int, steps: int, repeat: int) -> None:
    P = builtin(name)
    grid = build_grid(P.strat, (-2.0, 2.0), nodes, steps, horizon=P.horizon)
    t0 = time.perf_counter()
    op = build_operator(P, grid, mode)
    build = time.perf_counter() - t0
    term = terminal_entries(P, op)
    op.run(term, backend="numba")  # compile
    timings = {}
    results = {}
    for backend in ("numba", "numpy"):
        best = np.inf
        for _ in range(repeat):
            t0 = time.perf_counter()
            results[backend] = op.run(term, backend=backend)
            best = min(best, time.perf_counter() - t0)
        timings[backend] = best
    same = np.array_equal(results["numba"], results["numpy"])
    print(f"{name:<13} {mode:<10} nodes={grid.n_nodes:<7} candidates={op.stats['candidates']:<8} "
          f"build={build:.2f}s numba={timings['numba']:.3f}s numpy={timings['numpy']:.3f}s "
          f"speedup={timings['numpy'] / timings['numba']:.1f}x identical={same}")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--grid", type=int, default=161)
    ap.add_argument("--timesteps", type=int, default=200)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    bench("exampleE", CONTINUOUS, args.grid, args.timesteps, args.repeat)
    bench("exampleE", LSC, args.grid, args.timesteps, args.repeat)
    bench("exampleF", LSC, 4 * args.grid, args.timesteps, args.repeat)


if __name__ == "__main__":
    main()
