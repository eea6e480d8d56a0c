"""Compare the numba kernels with their numpy fallbacks.

    python3 benchmarks/bench_kernels.py --sizes 8 10 12 --steps 50
"""
import argparse

from ldaqc.bench import format_rows, run_benchmark


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--sizes", type=int, nargs="+", default=[8, 10, 12])
    ap.add_argument("--steps", type=int, default=50, help="split steps per propagate call")
    ap.add_argument("--repeats", type=int, default=3)
    args = ap.parse_args()
    print(format_rows(run_benchmark(args.sizes, args.steps, args.repeats)))


if __name__ == "__main__":
    main()
