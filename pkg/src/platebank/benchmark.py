"""Benchmark the compiled rollout kernel against the pure-Python fallback.

Both backends must produce bit-identical result rows; the benchmark verifies
that before reporting throughput.  Run via `platebank benchmark` or
`python -m platebank.benchmark`.
"""

from __future__ import annotations

import sys
import time

import numpy as np

from .engine import available_backends, run_batch_rows
from .fileio import load_scenario
from .policies import WeeklySSPolicy, yupr_policy


def run_benchmark(scenario: str = "uclh-returns", rollouts: int = 20,
                  workers: int = 1, seed: int = 20170101) -> list[str]:
    cfg = load_scenario(scenario)
    policy = WeeklySSPolicy((25,) * 7, (40,) * 7)
    issuing = yupr_policy(0.7, 0.8)
    horizon, warmup = 465, 100

    lines = ["backend,rollouts,seconds,ms_per_rollout"]
    rows_by_backend = {}
    timings = {}
    for backend in available_backends():
        n = rollouts if backend == "cython" else max(2, rollouts // 10)
        t0 = time.perf_counter()
        rows = run_batch_rows(cfg, policy, issuing, horizon, warmup, range(n),
                              seed, workers=workers, backend=backend)
        elapsed = time.perf_counter() - t0
        rows_by_backend[backend] = rows
        timings[backend] = elapsed / n
        lines.append(f"{backend},{n},{elapsed:.4f},{elapsed / n * 1e3:.3f}")

    if len(rows_by_backend) == 2:
        n_common = min(len(r) for r in rows_by_backend.values())
        identical = np.array_equal(rows_by_backend["cython"][:n_common],
                                   rows_by_backend["python"][:n_common])
        if not identical:
            raise RuntimeError("backend results differ; kernels are out of sync")
        speedup = timings["python"] / timings["cython"]
        lines.append(f"# backends bit-identical over {n_common} rollouts; "
                     f"compiled speedup {speedup:.0f}x")
    else:
        lines.append("# compiled kernel unavailable; benchmarked pure Python only")
    return lines


if __name__ == "__main__":
    for line in run_benchmark():
        print(line)
    sys.exit(0)
