"""Replay throughput of the monitor backends on case-study traces.

    python3 benchmarks/bench_kernel.py --points 2000 --repeat 5
"""

import argparse
import time

from agmon import kernel
from agmon.case_study import D1, Implementation, apply_deviation, generate_conforming, load_case_study, run_calculator
from agmon.monitor import run_trace


def best_of(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--points", type=int, default=2000)
    p.add_argument("--repeat", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    mon = load_case_study().monitors[Implementation.SCANF]
    traces = {
        "conforming": run_calculator(Implementation.SCANF, generate_conforming(args.points, args.seed)).observed,
        "D1 (alarm stream)": run_calculator(
            Implementation.SCANF, apply_deviation(generate_conforming(args.points, args.seed), D1, args.seed)).observed,
    }
    backends = ["reference", *sorted(kernel.BACKENDS)]
    print(f"{'trace':<18} {'events':>7} " + " ".join(f"{b:>12}" for b in backends) + "   speedup native/python")
    for name, t in traces.items():
        times = {b: best_of(lambda b=b: run_trace(mon, t, backend=b), args.repeat) for b in backends}
        reports = {b: run_trace(mon, t, backend=b) for b in backends}
        assert len({r for r in reports.values()}) == 1, "backends disagree"
        cells = " ".join(f"{len(t) / times[b] / 1e6:>9.2f}M/s" for b in backends)
        ratio = times["python"] / times["native"] if "native" in times else float("nan")
        print(f"{name:<18} {len(t):>7} {cells}   {ratio:.1f}x")


if __name__ == "__main__":
    main()
