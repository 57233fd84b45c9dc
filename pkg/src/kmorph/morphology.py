"""Structuring elements, binary/grey dilation and masked label reconstruction."""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Union

import numpy as np

from . import _kernels
from .errors import InvalidInputError
from .grid import BACKGROUND, BinaryGrid, LabelGrid


class BoundaryMode(str, enum.Enum):
    """How probes that leave the grid are handled.

    CLAMP drops them; WRAP folds each axis modulo the grid size (toroidal).
    """

    CLAMP = "clamp"
    WRAP = "wrap"

    @classmethod
    def parse(cls, value: Union[str, "BoundaryMode"]) -> "BoundaryMode":
        try:
            return cls(value)
        except ValueError:
            raise InvalidInputError(f"unknown boundary mode {value!r}") from None


@dataclass(frozen=True)
class StructuringElement:
    """A set of ``(dy, dx)`` offsets, each carrying a grey value ``v(b)``."""

    offsets: tuple[tuple[int, int], ...]
    values: tuple[int, ...]

    def __post_init__(self):
        offsets = tuple((int(dy), int(dx)) for dy, dx in self.offsets)
        if not offsets:
            raise InvalidInputError("structuring element needs at least one offset")
        if len(set(offsets)) != len(offsets):
            raise InvalidInputError("structuring element offsets must be distinct")
        values = tuple(int(v) for v in self.values)
        if len(values) != len(offsets):
            raise InvalidInputError(
                f"{len(offsets)} offsets but {len(values)} values"
            )
        object.__setattr__(self, "offsets", offsets)
        object.__setattr__(self, "values", values)

    @classmethod
    def flat(cls, offsets: Iterable[tuple[int, int]]) -> "StructuringElement":
        offsets = tuple(offsets)
        return cls(offsets, (0,) * len(offsets))

    @property
    def contains_origin(self) -> bool:
        return (0, 0) in self.offsets

    def has_all_directions(self) -> bool:
        dys = [dy for dy, _ in self.offsets]
        dxs = [dx for _, dx in self.offsets]
        return min(dys) < 0 < max(dys) and min(dxs) < 0 < max(dxs)

    def is_symmetric(self) -> bool:
        s = set(self.offsets)
        return all((-dy, -dx) in s for dy, dx in s)

    def validate_for_kms(self) -> None:
        if not self.contains_origin:
            raise InvalidInputError("k-MS structuring element must contain the origin")
        if not self.has_all_directions():
            raise InvalidInputError(
                "k-MS structuring element must reach up, down, left and right"
            )
        if any(self.values):
            raise InvalidInputError("k-MS structuring element values must all be 0")

    def arrays(self) -> tuple[np.ndarray, np.ndarray]:
        """Offsets as contiguous ``(dys, dxs)`` int64 arrays."""
        arr = np.array(self.offsets, dtype=np.int64).reshape(-1, 2)
        return np.ascontiguousarray(arr[:, 0]), np.ascontiguousarray(arr[:, 1])


#: 3x3 square including the centre.
B1 = StructuringElement.flat(
    [(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0), (-1, -1), (1, -1), (-1, 1), (1, 1)]
)

#: Cross plus far diagonals at distance 10.
B2 = StructuringElement.flat(
    [(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0), (-10, -10), (10, -10), (-10, 10), (10, 10)]
)

#: Centre plus the 4-neighbourhood.
CROSS = StructuringElement.flat([(0, 0), (0, 1), (0, -1), (1, 0), (-1, 0)])


@dataclass(frozen=True)
class PassOutcome:
    changed: bool


def scale_se(b: StructuringElement, delta: int) -> StructuringElement:
    if delta < 1:
        raise InvalidInputError(f"scale factor must be >= 1, got {delta}")
    return StructuringElement(
        tuple((delta * dy, delta * dx) for dy, dx in b.offsets), b.values
    )


def _shift_clamp(a: np.ndarray, dy: int, dx: int, fill) -> np.ndarray:
    """``out[..., y, x] = a[..., y - dy, x - dx]``, ``fill`` where that leaves the grid."""
    h, w = a.shape[-2:]
    out = np.full_like(a, fill)
    if abs(dy) >= h or abs(dx) >= w:
        return out
    ys_dst = slice(max(dy, 0), h + min(dy, 0))
    ys_src = slice(max(-dy, 0), h + min(-dy, 0))
    xs_dst = slice(max(dx, 0), w + min(dx, 0))
    xs_src = slice(max(-dx, 0), w + min(-dx, 0))
    out[..., ys_dst, xs_dst] = a[..., ys_src, xs_src]
    return out


def binary_dilate(a, b: StructuringElement, mode: BoundaryMode = BoundaryMode.CLAMP):
    """Union of the translates of ``a`` by every offset of ``b``.

    ``a`` may be a :class:`BinaryGrid` or a boolean array; arrays may carry
    leading batch dimensions, dilation acts on the last two axes.
    """
    mode = BoundaryMode.parse(mode)
    cells = a.cells if isinstance(a, BinaryGrid) else np.asarray(a, dtype=bool)
    if cells.ndim < 2:
        raise InvalidInputError("binary_dilate needs at least a 2D array")
    out = np.zeros_like(cells, dtype=bool)
    for dy, dx in b.offsets:
        if mode is BoundaryMode.WRAP:
            out |= np.roll(cells, (dy, dx), axis=(-2, -1))
        else:
            out |= _shift_clamp(cells, dy, dx, False)
    if isinstance(a, BinaryGrid):
        return BinaryGrid(a.spec, out)
    return out


#: Value given to grey-dilated cells that no offset could probe.
EMPTY_SUP = np.iinfo(np.int64).min


def gray_dilate(a, b: StructuringElement, mode: BoundaryMode = BoundaryMode.CLAMP) -> np.ndarray:
    """``out[c] = max over b of a[c - b] + v(b)``, as int64.

    Under clamp, translates that fall outside the grid do not contribute; a
    cell with no contributor at all gets :data:`EMPTY_SUP`.
    """
    mode = BoundaryMode.parse(mode)
    arr = np.asarray(a).astype(np.int64)
    if arr.ndim != 2:
        raise InvalidInputError(f"gray_dilate expects a 2D array, got {arr.ndim}D")
    out = np.full(arr.shape, EMPTY_SUP, dtype=np.int64)
    ones = np.ones(arr.shape, dtype=bool)
    for (dy, dx), v in zip(b.offsets, b.values):
        if mode is BoundaryMode.WRAP:
            np.maximum(out, np.roll(arr, (dy, dx), axis=(0, 1)) + v, out=out)
        else:
            shifted = _shift_clamp(arr, dy, dx, 0)
            valid = _shift_clamp(ones, dy, dx, False)
            np.maximum(out, np.where(valid, shifted + v, EMPTY_SUP), out=out)
    return out


def _check_pair(g: LabelGrid, t: BinaryGrid) -> None:
    if g.spec != t.spec:
        raise InvalidInputError("label grid and mask have different grid specs")
    if not np.array_equal(g.cells != BACKGROUND, t.cells):
        raise InvalidInputError("label grid background does not match the mask")
    if not g.cells.flags.c_contiguous:
        g.cells = np.ascontiguousarray(g.cells)


def foreground_coords(t: BinaryGrid) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Flat index, row and column of every foreground cell, in raster order."""
    fidx = np.flatnonzero(t.cells).astype(np.int64)
    fy, fx = np.divmod(fidx, t.spec.width)
    return fidx, fy, fx


def masked_label_dilate_pass(
    g: LabelGrid,
    t: BinaryGrid,
    b: StructuringElement,
    delta: int = 1,
    mode: BoundaryMode = BoundaryMode.CLAMP,
    *,
    synchronous: bool = False,
) -> PassOutcome:
    """One sweep in which every foreground cell takes the largest label it probes.

    Probes land at ``p + delta * b``; background cells are neither written nor
    read into the max. The default sweep is in place in raster order; with
    ``synchronous=True`` all reads see the labels from before the sweep.
    """
    _check_pair(g, t)
    return _pass(g, t, b, delta, mode, synchronous, foreground_coords(t))


def _pass(g, t, b, delta, mode, synchronous, coords) -> PassOutcome:
    if delta < 1:
        raise InvalidInputError(f"delta must be >= 1, got {delta}")
    mode = BoundaryMode.parse(mode)
    fidx, fy, fx = coords
    dys, dxs = b.arrays()
    h, w = t.spec.shape
    wrap = mode is BoundaryMode.WRAP
    flat = g.cells.reshape(-1)
    if synchronous:
        changed = _kernels.sync_sweep(
            flat.copy(), flat, fidx, fy, fx, h, w, dys, dxs, delta, wrap
        )
    else:
        changed = _kernels.inplace_sweep(flat, fidx, fy, fx, h, w, dys, dxs, delta, wrap)
    return PassOutcome(bool(changed))


def reconstruct(
    g: LabelGrid,
    t: BinaryGrid,
    b: StructuringElement,
    delta: int = 1,
    mode: BoundaryMode = BoundaryMode.CLAMP,
    *,
    synchronous: bool = False,
) -> int:
    """Repeat masked dilation passes until one changes nothing.

    Returns the number of passes run, including the final idempotent one.
    """
    _check_pair(g, t)
    coords = foreground_coords(t)
    passes = 0
    while True:
        passes += 1
        if not _pass(g, t, b, delta, mode, synchronous, coords).changed:
            return passes
