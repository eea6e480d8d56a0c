"""Wall-clock comparison of the numba and numpy kernel paths."""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import _kernels as K


@dataclass
class BenchRow:
    kernel: str
    n: int
    numpy_s: float
    numba_s: float | None

    @property
    def speedup(self) -> float | None:
        return None if self.numba_s is None else self.numpy_s / self.numba_s


def _best(fn, repeats: int) -> float:
    best = float("inf")
    for _ in range(repeats):
        t = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t)
    return best


def _propagate_args(n: int, steps: int, rng: np.random.Generator):
    psi = rng.normal(size=1 << n) + 1j * rng.normal(size=1 << n)
    psi /= np.linalg.norm(psi)
    stage = np.tile(np.arange(6) % 3, steps).astype(np.int64)
    m = stage.shape[0]
    v_phases = np.exp(-1j * rng.random((3, 1 << n)))
    return psi, rng.random(n), v_phases, stage, rng.random(m + 1) * 0.01, rng.normal(size=m), rng.random(m) * 0.01


def run_benchmark(sizes=(8, 10, 12), steps: int = 50, repeats: int = 3, seed: int = 0) -> list[BenchRow]:
    """Best-of-``repeats`` timings; numba functions are warmed up first."""
    rng = np.random.default_rng(seed)
    rows = []
    for n in sizes:
        adj = np.array([(1 << (v + 1) if v + 1 < n else 0) | (1 << (v - 1) if v else 0) for v in range(n)], dtype=np.int64)
        args = _propagate_args(n, steps, rng)
        cases = [
            ("independent_table", lambda f: f(adj, n), K.independent_table_numpy, K.independent_table_numba),
            ("propagate", lambda f: f(args[0].copy(), n, *args[1:]), K.propagate_numpy, K.propagate_numba),
        ]
        for name, call, f_np, f_nb in cases:
            t_np = _best(lambda: call(f_np), repeats)
            t_nb = None
            if K.HAVE_NUMBA:
                call(f_nb)  # compile
                t_nb = _best(lambda: call(f_nb), repeats)
            rows.append(BenchRow(name, n, t_np, t_nb))
    return rows


def format_rows(rows: list[BenchRow]) -> str:
    lines = [f"{'kernel':<18} {'N':>3} {'numpy [s]':>11} {'numba [s]':>11} {'speedup':>8}"]
    for r in rows:
        nb = f"{r.numba_s:11.5f}" if r.numba_s is not None else f"{'n/a':>11}"
        sp = f"{r.speedup:8.1f}" if r.speedup is not None else f"{'n/a':>8}"
        lines.append(f"{r.kernel:<18} {r.n:>3} {r.numpy_s:11.5f} {nb} {sp}")
    return "\n".join(lines)
