"""k-Morphological Sets clustering.

Labels spread by masked max-dilation. Whenever a pass leaves the grid
unchanged the structuring element grows by one step; as soon as a pass
merges anything the scale drops back to 1. The loop stops on the first
unchanged pass that sees at most ``k`` distinct labels.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass, field
from typing import Optional, Union

import numba
import numpy as np

from . import _kernels
from .errors import InvalidInputError
from .grid import BACKGROUND, BinaryGrid, LabelGrid, seed_labels
from .morphology import B1, BoundaryMode, StructuringElement, foreground_coords

log = logging.getLogger(__name__)


class Engine(str, enum.Enum):
    SEQUENTIAL = "sequential"
    PARALLEL = "parallel"

    @classmethod
    def parse(cls, value: Union[str, "Engine"]) -> "Engine":
        aliases = {"seq": cls.SEQUENTIAL, "par": cls.PARALLEL}
        if isinstance(value, str) and value in aliases:
            return aliases[value]
        try:
            return cls(value)
        except ValueError:
            raise InvalidInputError(f"unknown engine {value!r}") from None


class Closure(str, enum.Enum):
    """How a merge is followed up at unit scale.

    SWEEP repeats full unit-scale passes until one is idempotent. WORKLIST
    reaches that same fixed point by pushing label increases from the cells
    that changed, then runs the single idempotent pass that does the counting.
    Final grids and scale schedules are identical; only pass counts differ.
    """

    WORKLIST = "worklist"
    SWEEP = "sweep"


@dataclass
class KmsConfig:
    k: int
    se: StructuringElement = B1
    boundary: BoundaryMode = BoundaryMode.CLAMP
    # None means max(width, height) of the grid being clustered.
    delta_max: Optional[int] = None
    engine: Engine = Engine.SEQUENTIAL
    # Band count for the parallel engine; defaults to numba's thread count.
    workers: Optional[int] = None
    closure: Closure = Closure.WORKLIST

    def __post_init__(self):
        self.boundary = BoundaryMode.parse(self.boundary)
        self.engine = Engine.parse(self.engine)
        try:
            self.closure = Closure(self.closure)
        except ValueError:
            raise InvalidInputError(f"unknown closure mode {self.closure!r}") from None
        if self.k < 1:
            raise InvalidInputError(f"k must be >= 1, got {self.k}")
        if self.delta_max is not None and self.delta_max < 1:
            raise InvalidInputError(f"delta_max must be >= 1, got {self.delta_max}")
        if self.workers is not None and self.workers < 1:
            raise InvalidInputError(f"workers must be >= 1, got {self.workers}")
        self.se.validate_for_kms()


class BoundedLabelSet:
    """Up to ``capacity`` distinct labels, remembering whether more were offered."""

    def __init__(self, capacity: int):
        if capacity < 1:
            raise InvalidInputError(f"capacity must be >= 1, got {capacity}")
        self.capacity = capacity
        self._labels: dict[int, None] = {}
        self.overflowed = False

    def offer(self, label: int) -> bool:
        label = int(label)
        if label == BACKGROUND:
            raise InvalidInputError("the background sentinel is not a cluster label")
        if label in self._labels:
            return self.overflowed
        if len(self._labels) < self.capacity:
            self._labels[label] = None
        else:
            self.overflowed = True
        return self.overflowed

    @property
    def labels(self) -> tuple[int, ...]:
        return tuple(self._labels)

    def __len__(self) -> int:
        return len(self._labels)

    def __contains__(self, label) -> bool:
        return int(label) in self._labels


def offer_label(s: BoundedLabelSet, label: int) -> bool:
    return s.offer(label)


@dataclass
class KmsResult:
    labels: LabelGrid
    cluster_labels: tuple[int, ...]
    cluster_count: int
    converged: bool
    passes: int
    delta_history: list[int] = field(default_factory=list)
    # Set when the run stopped because the scale would have passed delta_max.
    delta_exceeded: Optional[int] = None

    @property
    def max_delta(self) -> int:
        return max(self.delta_history)


def intrinsic_max_clusters(
    t: BinaryGrid, se: StructuringElement = B1, mode: BoundaryMode = BoundaryMode.CLAMP
) -> int:
    """Number of foreground components when ``p`` and ``p + b`` are linked for every b."""
    mode = BoundaryMode.parse(mode)
    dys, dxs = se.arrays()
    _, count = _kernels.component_roots(t.cells, dys, dxs, mode is BoundaryMode.WRAP)
    return int(count)


def kms_cluster(t: BinaryGrid, config: KmsConfig) -> KmsResult:
    """Cluster the foreground of ``t`` into at most ``config.k`` label sets.

    If the scale would grow past ``delta_max`` before the label count drops to
    ``k``, the run stops with ``converged=False`` and the current census.
    """
    nfg = t.foreground_count
    if nfg == 0:
        raise InvalidInputError("cannot cluster a grid with no foreground cells")
    config.se.validate_for_kms()
    delta_max = config.delta_max or max(t.spec.width, t.spec.height)
    g = seed_labels(t)
    # More distinct labels than foreground cells is impossible, so a smaller
    # array never reports a spurious overflow.
    cap = min(config.k, nfg)
    if config.engine is Engine.SEQUENTIAL:
        result = _run_sequential(g, t, config, cap, delta_max)
    else:
        result = _run_parallel(g, t, config, cap, delta_max)
    log.debug(
        "k-MS k=%d engine=%s: %d clusters, converged=%s, %d passes",
        config.k, config.engine.value, result.cluster_count, result.converged, result.passes,
    )
    return result


def _finish(g, history, stored, delta_exceeded) -> KmsResult:
    if stored is None:
        labels = tuple(int(v) for v in g.labels())
    else:
        labels = tuple(sorted(int(v) for v in stored))
    return KmsResult(
        labels=g,
        cluster_labels=labels,
        cluster_count=len(labels),
        converged=stored is not None,
        passes=len(history),
        delta_history=history,
        delta_exceeded=delta_exceeded,
    )


def _run_sequential(g: LabelGrid, t: BinaryGrid, config: KmsConfig, cap: int, delta_max: int):
    h, w = t.spec.shape
    fidx, fy, fx = foreground_coords(t)
    dys, dxs = config.se.arrays()
    wrap = config.boundary is BoundaryMode.WRAP
    worklist = config.closure is Closure.WORKLIST
    flat = g.cells.reshape(-1)
    seen = np.full(h * w, -1, dtype=np.int64)
    karray = np.empty(cap, dtype=g.cells.dtype)
    changed = np.empty(fidx.shape[0], dtype=np.int64)
    queue = np.empty(fidx.shape[0], dtype=np.int64)
    queued = np.zeros(h * w, dtype=np.bool_)
    counts = np.zeros(h * w, dtype=np.int64)
    ndistinct = np.array([_kernels.label_counts(flat, fidx, counts)], dtype=np.int64)
    history: list[int] = []
    delta = 1
    while True:
        idempotent, overflowed, n, nchanged = _kernels.kms_pass(
            flat, fidx, fy, fx, h, w, dys, dxs, delta, wrap,
            seen, len(history), karray, cap, changed, counts, ndistinct,
        )
        history.append(delta)
        if idempotent and not overflowed:
            return _finish(g, history, karray[:n], None)
        if idempotent:
            delta += 1
        else:
            delta = 1
            if worklist:
                _kernels.unit_closure(
                    flat, h, w, dys, dxs, wrap, queue, queued, changed, nchanged, counts, ndistinct
                )
                delta = _after_closure(history, int(ndistinct[0]) > cap)
                if delta == 0:
                    return _finish(g, history, g.labels(), None)
        if delta > delta_max:
            return _finish(g, history, None, delta)


def _after_closure(history: list[int], overflowed: bool) -> int:
    """Account for the unit-scale pass that follows a closure without running it.

    The grid is already a unit-scale fixed point, so that pass is idempotent
    and only its census matters. Returns the next scale, or 0 when the census
    fits and the run is finished.
    """
    history.append(1)
    return 2 if overflowed else 0


def _band_bounds(height: int, workers: int) -> np.ndarray:
    nbands = max(1, min(workers, height))
    return np.linspace(0, height, nbands + 1).round().astype(np.int64)


def _run_parallel(g: LabelGrid, t: BinaryGrid, config: KmsConfig, cap: int, delta_max: int):
    h, w = t.spec.shape
    fidx, fy, fx = foreground_coords(t)
    dys, dxs = config.se.arrays()
    wrap = config.boundary is BoundaryMode.WRAP
    worklist = config.closure is Closure.WORKLIST
    mask = t.cells.reshape(-1)
    bounds = _band_bounds(h, config.workers or numba.get_num_threads())
    nbands = bounds.shape[0] - 1
    band_changed = np.zeros(nbands, dtype=np.bool_)
    band_overflowed = np.zeros(nbands, dtype=np.bool_)
    band_stored = np.zeros(nbands, dtype=np.int64)
    band_karray = np.empty((nbands, cap), dtype=g.cells.dtype)
    queue = np.empty(fidx.shape[0], dtype=np.int64)
    queued = np.zeros(h * w, dtype=np.bool_)
    counts = np.zeros(h * w, dtype=np.int64)
    ndistinct = np.zeros(1, dtype=np.int64)
    seen = np.full(h * w, -1, dtype=np.int64)

    src = g.cells.reshape(-1).copy()
    dst = src.copy()
    history: list[int] = []
    delta = 1
    while True:
        history.append(delta)
        _kernels.band_pass(
            src, dst, mask, h, w, bounds, dys, dxs, delta, wrap,
            band_changed, band_overflowed, band_stored, band_karray, cap,
        )
        if not band_changed.any():
            merged = BoundedLabelSet(cap)
            overflowed = bool(band_overflowed.any())
            for b in range(nbands):
                if overflowed:
                    break
                for label in band_karray[b, : band_stored[b]]:
                    if merged.offer(label):
                        overflowed = True
                        break
            if not overflowed:
                g.cells[...] = src.reshape(h, w)
                return _finish(g, history, merged.labels, None)
            delta += 1
        else:
            if delta == 1:
                # Unit-scale passes reach the same fixed point in any sweep
                # order, so the double-buffered result is kept as is.
                src, dst = dst, src
                before = dst
            else:
                # A merging pass at a larger scale is order-sensitive: redo it
                # with raster-order semantics so both engines follow the same
                # trajectory.
                before = src.copy()
                if not wrap or h % delta == 0:
                    _kernels.rowclass_inplace_pass(src, mask, h, w, dys, dxs, delta, wrap)
                else:
                    _kernels.inplace_sweep(src, fidx, fy, fx, h, w, dys, dxs, delta, wrap)
            delta = 1
            if worklist:
                starts = np.flatnonzero(src != before)
                # Counts are unused here; the census below is taken directly.
                _kernels.unit_closure(
                    src, h, w, dys, dxs, wrap, queue, queued, starts, starts.shape[0],
                    counts, ndistinct,
                )
                overflowed = _kernels.distinct_exceeds(src, fidx, seen, len(history), cap)
                delta = _after_closure(history, overflowed)
                if delta == 0:
                    g.cells[...] = src.reshape(h, w)
                    return _finish(g, history, g.labels(), None)
        if delta > delta_max:
            g.cells[...] = src.reshape(h, w)
            return _finish(g, history, None, delta)
