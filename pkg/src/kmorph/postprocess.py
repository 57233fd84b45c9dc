"""Cluster census, noise removal, relabeling and colour rendering."""

from __future__ import annotations

import colorsys
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .grid import BACKGROUND, LabelGrid

#: Integer approximation of the golden angle. It is coprime with 360, so the
#: first 360 clusters all get different hues.
HUE_STEP_DEGREES = 137


@dataclass(frozen=True)
class ClusterCensus:
    entries: dict[int, int]
    total_foreground: int

    def __len__(self) -> int:
        return len(self.entries)


def census(g: LabelGrid) -> ClusterCensus:
    fg = g.cells[g.cells != BACKGROUND]
    labels, counts = np.unique(fg, return_counts=True)
    return ClusterCensus(
        entries={int(lab): int(c) for lab, c in zip(labels, counts)},
        total_foreground=int(fg.size),
    )


def remove_small_clusters(g: LabelGrid, tau: int) -> set[int]:
    """Erase every cluster with ``tau`` or fewer cells; returns the erased labels."""
    if tau < 0:
        raise InvalidInputError(f"tau must be non-negative, got {tau}")
    sizes = census(g).entries
    erased = {lab for lab, size in sizes.items() if size <= tau}
    if erased:
        doomed = np.isin(g.cells, np.fromiter(erased, dtype=g.cells.dtype))
        g.cells[doomed] = BACKGROUND
    return erased


def compact_relabel(g: LabelGrid) -> dict[int, int]:
    """Renumber labels to ``0..c-1`` in ascending order of the old label."""
    labels = g.labels()
    mapping = {int(old): new for new, old in enumerate(labels)}
    fg = g.cells != BACKGROUND
    g.cells[fg] = np.searchsorted(labels, g.cells[fg])
    return mapping


def palette(n: int) -> np.ndarray:
    """``n`` RGB colours at full saturation and value, hue stepped by 137 degrees.

    Hues repeat after 360 entries.
    """
    out = np.empty((n, 3), dtype=np.uint8)
    for i in range(n):
        hue = (i * HUE_STEP_DEGREES) % 360
        r, g, b = colorsys.hsv_to_rgb(hue / 360.0, 1.0, 1.0)
        out[i] = (round(r * 255), round(g * 255), round(b * 255))
    return out


def render_colormap(g: LabelGrid) -> np.ndarray:
    """White background, one palette colour per cluster in ascending label order."""
    h, w = g.spec.shape
    img = np.full((h, w, 3), 255, dtype=np.uint8)
    fg = g.cells != BACKGROUND
    if fg.any():
        labels = g.labels()
        colours = palette(labels.size)
        img[fg] = colours[np.searchsorted(labels, g.cells[fg])]
    return img
