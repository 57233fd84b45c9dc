"""Timing sweep comparing k-MS against the k-Means baseline."""

from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import statistics
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from ..baseline import KMeansConfig, lloyd_kmeans
from ..errors import InvalidInputError
from ..kms import Engine, KmsConfig, kms_cluster
from ..morphology import BoundaryMode
from .io import resolve_se
from .synth import generate_random_instances

log = logging.getLogger(__name__)

ALGORITHMS = ("kms", "kmeans")
ENGINES = ("sequential", "parallel")


@dataclass
class BenchSpec:
    sizes: list[tuple[int, int]]
    # One instance count per entry of ``sizes``.
    instances: list[int]
    ks: list[int]
    repetitions: int = 3
    rng_seed: int = 0
    # "algorithm/engine" pairs, e.g. "kms/sequential".
    runs: list[str] = field(default_factory=lambda: ["kms/sequential", "kmeans/parallel"])
    se: str = "b1"
    boundary: str = "clamp"
    kmeans_threshold: float = 1e-12
    kmeans_max_iterations: int = 500

    def __post_init__(self):
        self.sizes = [(int(w), int(h)) for w, h in self.sizes]
        self.instances = [int(n) for n in self.instances]
        self.ks = [int(k) for k in self.ks]
        if not self.sizes:
            raise InvalidInputError("bench spec needs at least one grid size")
        if len(self.instances) != len(self.sizes):
            raise InvalidInputError("bench spec needs one instance count per grid size")
        for (w, h), n in zip(self.sizes, self.instances):
            if w < 1 or h < 1:
                raise InvalidInputError(f"grid size must be positive, got {w}x{h}")
            if not 1 <= n <= w * h:
                raise InvalidInputError(f"L={n} does not fit a {w}x{h} grid")
        if not self.ks or min(self.ks) < 1:
            raise InvalidInputError("bench spec needs k values >= 1")
        if self.repetitions < 1:
            raise InvalidInputError("repetitions must be >= 1")
        if self.repetitions < 3:
            log.warning("fewer than 3 repetitions: medians are not robust timings")
        for run in self.runs:
            self.split_run(run)
        BoundaryMode.parse(self.boundary)
        resolve_se(self.se)

    @staticmethod
    def split_run(run: str) -> tuple[str, str]:
        algorithm, _, engine = run.partition("/")
        engine = Engine.parse(engine or "sequential").value
        if algorithm not in ALGORITHMS:
            raise InvalidInputError(f"unknown algorithm {algorithm!r} in run {run!r}")
        return algorithm, engine

    @classmethod
    def from_dict(cls, d: dict) -> "BenchSpec":
        names = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - names
        if unknown:
            raise InvalidInputError(f"unknown bench spec fields: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, path) -> "BenchSpec":
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise InvalidInputError(f"{path}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise InvalidInputError(f"{path}: bench spec must be a JSON object")
        return cls.from_dict(data)


@dataclass(frozen=True)
class RunRecord:
    algorithm: str
    engine: str
    width: int
    height: int
    L: int
    k: int
    repetition: int
    wall_time_s: float
    cluster_count: int
    converged: bool


RECORD_FIELDS = tuple(f.name for f in dataclasses.fields(RunRecord))


def _timed(fn: Callable[[], tuple[int, bool]]) -> tuple[float, int, bool]:
    start = time.perf_counter()
    try:
        count, converged = fn()
    except InvalidInputError as exc:
        log.warning("run failed: %s", exc)
        count, converged = -1, False
    elapsed = time.perf_counter() - start
    # perf_counter is monotonic but may tick coarsely; keep times strictly positive.
    return max(elapsed, 1e-9), count, converged


def _runner(algorithm: str, engine: str, spec: BenchSpec, grid, points, k: int):
    if algorithm == "kms":
        cfg = KmsConfig(k=k, se=resolve_se(spec.se), boundary=spec.boundary, engine=engine)

        def run():
            res = kms_cluster(grid, cfg)
            return res.cluster_count, res.converged
    else:
        cfg = KMeansConfig(
            k=k,
            threshold=spec.kmeans_threshold,
            max_iterations=spec.kmeans_max_iterations,
            rng_seed=spec.rng_seed,
            parallel=engine == "parallel",
        )

        def run():
            res = lloyd_kmeans(points, cfg)
            return int(np.unique(res.assignments).size), res.converged
    return run


def _warm_up(spec: BenchSpec) -> None:
    # Trigger JIT compilation outside the timed region.
    grid = generate_random_instances(8, 8, 20, 0)
    points = _grid_points(grid)
    for run in spec.runs:
        algorithm, engine = spec.split_run(run)
        _runner(algorithm, engine, spec, grid, points, 2)()


def _grid_points(grid) -> np.ndarray:
    rows, cols = np.nonzero(grid.cells)
    return np.column_stack([cols, rows]).astype(np.float64)


def bench_run(
    spec: BenchSpec, progress: Optional[Callable[[RunRecord], None]] = None
) -> list[RunRecord]:
    """Time every (size, k, run) cell, one record per repetition.

    Grids are generated before timing starts, so only the clustering call is
    measured. Cells run serially.
    """
    _warm_up(spec)
    records: list[RunRecord] = []
    for (w, h), n in zip(spec.sizes, spec.instances):
        grid = generate_random_instances(w, h, n, spec.rng_seed)
        points = _grid_points(grid)
        for k in spec.ks:
            for run in spec.runs:
                algorithm, engine = spec.split_run(run)
                fn = _runner(algorithm, engine, spec, grid, points, k)
                for rep in range(spec.repetitions):
                    elapsed, count, converged = _timed(fn)
                    rec = RunRecord(algorithm, engine, w, h, n, k, rep, elapsed, count, converged)
                    records.append(rec)
                    if progress is not None:
                        progress(rec)
    return records


def median_times(records: list[RunRecord]) -> dict[tuple, float]:
    """Median wall time keyed by ``(algorithm, engine, width, height, L, k)``."""
    groups: dict[tuple, list[float]] = {}
    for r in records:
        key = (r.algorithm, r.engine, r.width, r.height, r.L, r.k)
        groups.setdefault(key, []).append(r.wall_time_s)
    return {key: statistics.median(ts) for key, ts in groups.items()}


def _cell(v):
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    return v


def write_records_csv(path, records: list[RunRecord]) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(RECORD_FIELDS)
        for r in records:
            writer.writerow([_cell(v) for v in dataclasses.astuple(r)])


def read_records_csv(path) -> list[RunRecord]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        if tuple(reader.fieldnames or ()) != RECORD_FIELDS:
            raise InvalidInputError(f"{path}: unexpected header {reader.fieldnames}")
        out = []
        for row in reader:
            out.append(RunRecord(
                algorithm=row["algorithm"],
                engine=row["engine"],
                width=int(row["width"]),
                height=int(row["height"]),
                L=int(row["L"]),
                k=int(row["k"]),
                repetition=int(row["repetition"]),
                wall_time_s=float(row["wall_time_s"]),
                cluster_count=int(row["cluster_count"]),
                converged=row["converged"] == "true",
            ))
    return out


def default_instances(width: int, height: int, density: float) -> int:
    return max(1, math.floor(width * height * density + 0.5))
