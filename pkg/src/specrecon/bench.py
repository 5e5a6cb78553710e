"""Wall-clock benchmark harness for per-sample reconstruction time."""

from __future__ import annotations

import os
import platform
import time
from dataclasses import asdict, dataclass

import numpy as np
from threadpoolctl import threadpool_limits

from .errors import BadConfig


def hardware_descriptor() -> str:
    uname = platform.uname()
    cpu = platform.processor() or uname.machine
    return (f"{uname.system} {uname.release} {uname.machine}; cpu={cpu}; cores={os.cpu_count()}; "
            f"python={platform.python_version()}; numpy={np.__version__}")


@dataclass
class BenchResult:
    method: str
    n_samples: int
    repeats: int
    warmup: int
    mean_ms: float
    std_ms: float
    per_repeat_ms: list
    threads: int
    hardware: str

    def to_dict(self) -> dict:
        return asdict(self)


def benchmark(method, dataset, repeats: int = 5, warmup: int = 1, name: str | None = None,
              threads: int = 1) -> BenchResult:
    """Time ``method(y)`` over every row of ``dataset``.

    Each repeat runs the whole dataset once and records the mean time per
    sample; the result is the mean and sample standard deviation of those
    per-sample times over ``repeats``.  ``warmup`` full passes run first and
    are discarded.  BLAS pools are pinned to ``threads`` while timing.
    """
    if repeats < 3:
        raise BadConfig(f"repeats must be >= 3, got {repeats}")
    if warmup < 0:
        raise BadConfig("warmup must be >= 0")
    rows = list(np.atleast_2d(np.asarray(dataset, dtype=np.float64)))
    if not rows:
        raise BadConfig("benchmark dataset is empty")
    per = []
    with threadpool_limits(limits=threads):
        for _ in range(warmup):
            for y in rows:
                method(y)
        for _ in range(repeats):
            t0 = time.perf_counter_ns()
            for y in rows:
                method(y)
            per.append((time.perf_counter_ns() - t0) / 1e6 / len(rows))
    per = np.asarray(per)
    return BenchResult(name or getattr(method, "__name__", "method"), len(rows), repeats, warmup,
                       float(per.mean()), float(per.std(ddof=1)), per.tolist(), threads,
                       hardware_descriptor())
