"""Monte-Carlo l1 benchmarks: sample, fit, evaluate, average."""
from __future__ import annotations

import csv
import io
import time
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from typing import Iterable, Sequence

import numpy as np

from .distributions import MixtureSpec, get_spec, l1_error, sample
from .merge import SurfConfig, surf
from .samples import is_power_of_two, sort_samples

CSV_FIELDS = ("spec", "degree", "n", "trials", "mean_l1", "std_l1")


@dataclass(frozen=True)
class BenchRow:
    spec: str
    degree: int
    n: int
    trials: int
    mean_l1: float
    std_l1: float
    wall_seconds: float = 0.0

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not is_power_of_two(self.n):
            raise ValueError(f"n must be a power of two, got {self.n}")


def trial_seed(seed: int, spec_name: str, n: int, trial: int) -> list[int]:
    """Seed material for one trial; samples are shared across degrees."""
    return [seed, zlib.crc32(spec_name.encode()), n, trial]


def run_trial(spec: MixtureSpec, n: int, cfg: SurfConfig, seed) -> tuple[float, float]:
    started = time.perf_counter()
    x = sample(spec, n - 1, seed=seed)
    est = surf(sort_samples(x, n), cfg)
    err = l1_error(est, spec)
    return err, time.perf_counter() - started


def _task(args):
    spec, n, cfg, seed = args
    return run_trial(spec, n, cfg, seed)


def run_bench(specs: Sequence[str | MixtureSpec], degrees: Iterable[int], ns: Iterable[int], trials: int,
              seed: int = 0, base: SurfConfig | None = None, jobs: int = 1) -> list[BenchRow]:
    """One BenchRow per (spec, degree, n), sorted in that order."""
    base = base or SurfConfig()
    resolved = [s if isinstance(s, MixtureSpec) else get_spec(s) for s in specs]
    for spec in resolved:
        if not spec.name:
            raise ValueError("benchmark specs need a name")
    keys = sorted({(spec.name, d, n) for spec in resolved for d in degrees for n in ns})
    by_name = {spec.name: spec for spec in resolved}
    for _, _, n in keys:
        if not is_power_of_two(n) or n < 8:
            raise ValueError(f"n must be a power of two >= 8, got {n}")
    tasks = []
    for name, d, n in keys:
        cfg = replace(base, degree=d, jobs=1)
        for t in range(trials):
            tasks.append((by_name[name], n, cfg, trial_seed(seed, name, n, t)))
    if jobs > 1:
        with ProcessPoolExecutor(jobs) as pool:
            results = list(pool.map(_task, tasks, chunksize=1))
    else:
        results = [_task(t) for t in tasks]
    rows = []
    for k, (name, d, n) in enumerate(keys):
        chunk = results[k * trials:(k + 1) * trials]
        errs = np.array([r[0] for r in chunk])
        rows.append(BenchRow(name, d, n, trials, float(errs.mean()), float(errs.std()),
                             float(sum(r[1] for r in chunk))))
    return rows


def rows_to_csv(rows: Sequence[BenchRow], timing: bool = False) -> str:
    fields = CSV_FIELDS + (("wall_seconds",) if timing else ())
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for row in rows:
        values = asdict(row)
        writer.writerow([repr(values[f]) if isinstance(values[f], float) else values[f] for f in fields])
    return buf.getvalue()
