"""Points, occupancy grids and label grids.

A real-valued 2D dataset is discretized onto an integer lattice: each point
``(j, i)`` lands in cell ``(round(gamma * (i - min_i)), round(gamma * (j - min_j)))``
and the resulting boolean matrix doubles as the mask for label propagation.
Every occupied cell is then seeded with its own flat index ``row * width + col``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple

import numpy as np

from .errors import InvalidInputError

#: Background sentinel. Negative, so it never collides with a flat cell index
#: and always loses a max() against a real label.
BACKGROUND = -1


class Point2(NamedTuple):
    j: float  # horizontal attribute
    i: float  # vertical attribute


@dataclass(frozen=True)
class PointSet:
    """Ordered instances, stored as an ``(L, 2)`` float array of ``(j, i)`` rows."""

    coords: np.ndarray

    def __post_init__(self):
        coords = np.asarray(self.coords, dtype=np.float64)
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise InvalidInputError(f"expected an (L, 2) array, got shape {coords.shape}")
        if not np.all(np.isfinite(coords)):
            raise InvalidInputError("point coordinates must be finite")
        coords = coords.copy()
        coords.flags.writeable = False
        object.__setattr__(self, "coords", coords)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> "PointSet":
        rows = [tuple(map(float, p)) for p in pairs]
        return cls(np.array(rows, dtype=np.float64).reshape(-1, 2))

    def __len__(self) -> int:
        return self.coords.shape[0]

    def __iter__(self) -> Iterator[Point2]:
        for j, i in self.coords:
            yield Point2(float(j), float(i))


@dataclass(frozen=True)
class GridSpec:
    width: int
    height: int
    gamma: float = 1.0
    min_i: float = 0.0
    min_j: float = 0.0

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise InvalidInputError(f"grid must be at least 1x1, got {self.height}x{self.width}")
        if not (self.gamma > 0 and np.isfinite(self.gamma)):
            raise InvalidInputError(f"gamma must be a positive finite number, got {self.gamma}")

    @property
    def shape(self) -> tuple[int, int]:
        return (self.height, self.width)

    @property
    def size(self) -> int:
        return self.width * self.height

    def to_dict(self) -> dict:
        return {
            "width": self.width,
            "height": self.height,
            "gamma": self.gamma,
            "min_i": self.min_i,
            "min_j": self.min_j,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GridSpec":
        return cls(
            width=int(d["width"]),
            height=int(d["height"]),
            gamma=float(d.get("gamma", 1.0)),
            min_i=float(d.get("min_i", 0.0)),
            min_j=float(d.get("min_j", 0.0)),
        )


@dataclass(frozen=True)
class BinaryGrid:
    """Occupancy matrix; ``cells[row, col]`` is True where an instance sits."""

    spec: GridSpec
    cells: np.ndarray

    def __post_init__(self):
        cells = np.asarray(self.cells, dtype=bool)
        if cells.shape != self.spec.shape:
            raise InvalidInputError(
                f"cells shape {cells.shape} does not match spec {self.spec.shape}"
            )
        cells = cells.copy()
        cells.flags.writeable = False
        object.__setattr__(self, "cells", cells)

    @classmethod
    def from_array(cls, cells) -> "BinaryGrid":
        cells = np.asarray(cells, dtype=bool)
        if cells.ndim != 2:
            raise InvalidInputError(f"expected a 2D array, got {cells.ndim}D")
        h, w = cells.shape
        return cls(GridSpec(width=w, height=h), cells)

    @property
    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.cells))


def label_dtype(spec: GridSpec) -> np.dtype:
    """Smallest signed integer type (>= 32 bits) that holds every flat index."""
    return np.dtype(np.int32) if spec.size <= np.iinfo(np.int32).max else np.dtype(np.int64)


@dataclass
class LabelGrid:
    """Per-cell cluster labels; background cells hold ``BACKGROUND``.

    Unlike the other grid types this one is mutable: morphology passes and
    noise removal rewrite ``cells`` in place.
    """

    spec: GridSpec
    cells: np.ndarray

    def __post_init__(self):
        if self.cells.shape != self.spec.shape:
            raise InvalidInputError(
                f"cells shape {self.cells.shape} does not match spec {self.spec.shape}"
            )
        if self.cells.dtype.kind != "i":
            raise InvalidInputError(f"labels must be signed integers, got {self.cells.dtype}")

    def copy(self) -> "LabelGrid":
        return LabelGrid(self.spec, self.cells.copy())

    def labels(self) -> np.ndarray:
        """Sorted distinct non-background labels."""
        vals = np.unique(self.cells)
        return vals[vals != BACKGROUND]

    def foreground(self) -> np.ndarray:
        return self.cells != BACKGROUND


def _round_half_away(x: np.ndarray) -> np.ndarray:
    return np.sign(x) * np.floor(np.abs(x) + 0.5)


def discretize(points: PointSet, gamma: float) -> tuple[BinaryGrid, GridSpec]:
    """Map real-valued points onto the tightest grid that contains them all."""
    if len(points) == 0:
        raise InvalidInputError("cannot discretize an empty point set")
    if not (gamma > 0 and np.isfinite(gamma)):
        raise InvalidInputError(f"gamma must be positive, got {gamma}")
    j = points.coords[:, 0]
    i = points.coords[:, 1]
    min_j = float(j.min())
    min_i = float(i.min())
    cols = _round_half_away(gamma * (j - min_j)).astype(np.int64)
    rows = _round_half_away(gamma * (i - min_i)).astype(np.int64)
    spec = GridSpec(
        width=int(cols.max()) + 1,
        height=int(rows.max()) + 1,
        gamma=float(gamma),
        min_i=min_i,
        min_j=min_j,
    )
    cells = np.zeros(spec.shape, dtype=bool)
    cells[rows, cols] = True
    return BinaryGrid(spec, cells), spec


def point_cells(points: PointSet, spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Row and column of every point under ``spec``'s discretization."""
    rows = _round_half_away(spec.gamma * (points.coords[:, 1] - spec.min_i)).astype(np.int64)
    cols = _round_half_away(spec.gamma * (points.coords[:, 0] - spec.min_j)).astype(np.int64)
    return rows, cols


def pad_grid(t: BinaryGrid, pad: int) -> BinaryGrid:
    """Surround ``t`` with ``pad`` empty cells on every side.

    The spec's minima are shifted so that ``cell_to_point`` keeps mapping
    cells back to the same real coordinates.
    """
    if pad < 0:
        raise InvalidInputError(f"pad must be non-negative, got {pad}")
    if pad == 0:
        return t
    s = t.spec
    spec = GridSpec(
        width=s.width + 2 * pad,
        height=s.height + 2 * pad,
        gamma=s.gamma,
        min_i=s.min_i - pad / s.gamma,
        min_j=s.min_j - pad / s.gamma,
    )
    return BinaryGrid(spec, np.pad(t.cells, pad, constant_values=False))


def seed_labels(t: BinaryGrid) -> LabelGrid:
    """Give every occupied cell its flat index and everything else ``BACKGROUND``."""
    spec = t.spec
    dtype = label_dtype(spec)
    index = np.arange(spec.size, dtype=dtype).reshape(spec.shape)
    cells = np.where(t.cells, index, dtype.type(BACKGROUND)).astype(dtype)
    return LabelGrid(spec, cells)


def grid_from_image(pixels, threshold: int = 128) -> BinaryGrid:
    """Treat pixels darker than ``threshold`` as instances."""
    arr = np.asarray(pixels)
    if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
        raise InvalidInputError(f"expected a non-empty 2D grey image, got shape {arr.shape}")
    if not 0 <= threshold <= 255:
        raise InvalidInputError(f"threshold must be in [0, 255], got {threshold}")
    return BinaryGrid.from_array(arr < threshold)


def cell_to_point(row: int, col: int, spec: GridSpec) -> Point2:
    if not (0 <= row < spec.height and 0 <= col < spec.width):
        raise InvalidInputError(
            f"cell ({row}, {col}) outside {spec.height}x{spec.width} grid"
        )
    return Point2(col / spec.gamma + spec.min_j, row / spec.gamma + spec.min_i)
