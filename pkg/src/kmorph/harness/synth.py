"""Seeded synthetic datasets for tests and benchmarks."""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError
from ..grid import BinaryGrid, GridSpec

#: Instance density of the 512x512 benchmark grid (36529 / 512**2).
DEFAULT_DENSITY = 36529 / 512**2


def generate_random_instances(width: int, height: int, L: int, rng_seed: int) -> BinaryGrid:
    """Set exactly ``L`` distinct cells, drawn uniformly without replacement."""
    if width < 1 or height < 1:
        raise InvalidInputError(f"grid size must be positive, got {width}x{height}")
    capacity = width * height
    if not 0 <= L <= capacity:
        raise InvalidInputError(f"L={L} does not fit a {width}x{height} grid")
    rng = np.random.default_rng(rng_seed)
    cells = np.zeros(capacity, dtype=bool)
    cells[rng.choice(capacity, size=L, replace=False)] = True
    return BinaryGrid(GridSpec(width=width, height=height), cells.reshape(height, width))


def random_density_grid(width: int, height: int, density: float, rng_seed: int) -> BinaryGrid:
    """Bernoulli grid: each cell is set independently with probability ``density``."""
    if not 0.0 <= density <= 1.0:
        raise InvalidInputError(f"density must be in [0, 1], got {density}")
    rng = np.random.default_rng(rng_seed)
    return BinaryGrid.from_array(rng.random((height, width)) < density)


def blob_image(
    n_components: int,
    blob: int = 6,
    gap: int = 2,
    rng_seed: int = 0,
    walk_steps: int = 40,
) -> BinaryGrid:
    """A grid holding exactly ``n_components`` irregular blobs.

    Each blob is a random walk confined to a ``blob x blob`` tile; walks take
    king moves, so a blob is one component under the 3x3 neighbourhood.
    Tiles are separated by ``gap >= 1`` empty rows and columns, which keeps
    blobs apart under that same neighbourhood.
    """
    if n_components < 1 or blob < 1 or gap < 1:
        raise InvalidInputError("n_components, blob and gap must all be >= 1")
    rng = np.random.default_rng(rng_seed)
    per_row = int(np.ceil(np.sqrt(n_components)))
    rows = int(np.ceil(n_components / per_row))
    pitch = blob + gap
    cells = np.zeros((rows * pitch + gap, per_row * pitch + gap), dtype=bool)
    moves = np.array([(dy, dx) for dy in (-1, 0, 1) for dx in (-1, 0, 1)])
    for c in range(n_components):
        oy = gap + (c // per_row) * pitch
        ox = gap + (c % per_row) * pitch
        y, x = rng.integers(0, blob, size=2)
        cells[oy + y, ox + x] = True
        for dy, dx in moves[rng.integers(0, len(moves), size=walk_steps)]:
            y = min(max(y + dy, 0), blob - 1)
            x = min(max(x + dx, 0), blob - 1)
            cells[oy + y, ox + x] = True
    return BinaryGrid.from_array(cells)
