"""File formats: points/label CSV, 16-bit label PGM with JSON sidecar, PNG, SE text."""

from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Union

import numpy as np
from PIL import Image

from ..errors import InvalidInputError
from ..grid import BACKGROUND, GridSpec, LabelGrid, PointSet, label_dtype
from ..morphology import B1, B2, CROSS, StructuringElement

PathLike = Union[str, Path]

BUILTIN_SES = {"b1": B1, "b2": B2, "cross": CROSS}


def read_points_csv(path: PathLike) -> PointSet:
    """Read an ``x,y`` CSV, one instance per row."""
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or [h.strip().lower() for h in header[:2]] != ["x", "y"]:
            raise InvalidInputError(f"{path}: expected header 'x,y', got {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row or not "".join(row).strip():
                continue
            try:
                rows.append((float(row[0]), float(row[1])))
            except (ValueError, IndexError):
                raise InvalidInputError(f"{path}:{lineno}: bad row {row!r}") from None
    if not rows:
        raise InvalidInputError(f"{path}: no instances")
    return PointSet.from_pairs(rows)


def write_points_csv(path: PathLike, points: PointSet) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x", "y"])
        for j, i in points.coords:
            writer.writerow([repr(float(j)), repr(float(i))])


def write_label_csv(path: PathLike, coords: np.ndarray, clusters: np.ndarray) -> None:
    """Write ``x,y,cluster`` rows; ``coords`` is ``(N, 2)`` in ``(x, y)`` order."""
    with open(path, "w", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["x", "y", "cluster"])
        for (x, y), c in zip(coords, clusters):
            writer.writerow([repr(float(x)), repr(float(y)), int(c)])


def read_label_csv(path: PathLike) -> tuple[np.ndarray, np.ndarray]:
    with open(path, newline="") as f:
        reader = csv.DictReader(f)
        rows = [(float(r["x"]), float(r["y"]), int(r["cluster"])) for r in reader]
    arr = np.array(rows, dtype=np.float64).reshape(-1, 3)
    return arr[:, :2], arr[:, 2].astype(np.int64)


def sidecar_path(path: PathLike) -> Path:
    path = Path(path)
    return path.with_name(path.name + ".json")


def write_label_pgm(path: PathLike, g: LabelGrid) -> None:
    """Store ``g`` as a 16-bit P5 PGM plus ``<path>.json``.

    Pixels hold the compacted cluster index + 1 (0 is background). The sidecar
    keeps the grid spec and the original label of every compacted index, so
    reading it back restores the grid exactly.
    """
    labels = g.labels()
    if labels.size > 65535:
        raise InvalidInputError(
            f"{labels.size} clusters do not fit a 16-bit label image"
        )
    h, w = g.spec.shape
    pix = np.zeros((h, w), dtype=">u2")
    fg = g.cells != BACKGROUND
    pix[fg] = np.searchsorted(labels, g.cells[fg]) + 1
    with open(path, "wb") as f:
        f.write(b"P5\n%d %d\n65535\n" % (w, h))
        f.write(pix.tobytes())
    meta = {"spec": g.spec.to_dict(), "labels": [int(v) for v in labels]}
    sidecar_path(path).write_text(json.dumps(meta, indent=2))


def _pgm_tokens(data: bytes, count: int) -> tuple[list[int], int]:
    tokens: list[int] = []
    pos = 2
    while len(tokens) < count:
        while pos < len(data) and data[pos:pos + 1].isspace():
            pos += 1
        if data[pos:pos + 1] == b"#":
            while pos < len(data) and data[pos:pos + 1] not in (b"\n", b"\r"):
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos:pos + 1].isspace():
            pos += 1
        try:
            tokens.append(int(data[start:pos]))
        except ValueError:
            raise InvalidInputError("malformed PGM header") from None
    return tokens, pos + 1


def read_pgm(path: PathLike) -> np.ndarray:
    """Decode a binary (P5) PGM of 8 or 16 bits per sample."""
    data = Path(path).read_bytes()
    if data[:2] != b"P5":
        raise InvalidInputError(f"{path}: not a binary PGM (P5) file")
    (w, h, maxval), offset = _pgm_tokens(data, 3)
    if w < 1 or h < 1 or not 0 < maxval < 65536:
        raise InvalidInputError(f"{path}: bad PGM header {w}x{h} maxval {maxval}")
    dtype = np.dtype("u1") if maxval < 256 else np.dtype(">u2")
    need = w * h * dtype.itemsize
    body = data[offset:offset + need]
    if len(body) != need:
        raise InvalidInputError(f"{path}: truncated PGM data")
    return np.frombuffer(body, dtype=dtype).reshape(h, w).astype(np.int64)


def read_label_pgm(path: PathLike) -> LabelGrid:
    pix = read_pgm(path)
    side = sidecar_path(path)
    if side.exists():
        meta = json.loads(side.read_text())
        spec = GridSpec.from_dict(meta["spec"])
        original = np.asarray(meta.get("labels", []), dtype=np.int64)
    else:
        h, w = pix.shape
        spec = GridSpec(width=w, height=h)
        original = np.empty(0, dtype=np.int64)
    if pix.shape != spec.shape:
        raise InvalidInputError(f"{path}: image is {pix.shape}, sidecar says {spec.shape}")
    dtype = label_dtype(spec)
    cells = np.full(spec.shape, BACKGROUND, dtype=dtype)
    fg = pix > 0
    if original.size:
        if pix.max() > original.size:
            raise InvalidInputError(f"{path}: label index exceeds sidecar label table")
        cells[fg] = original[pix[fg] - 1]
    else:
        cells[fg] = pix[fg] - 1
    return LabelGrid(spec, cells)


def read_gray_image(path: PathLike) -> np.ndarray:
    """Load any image Pillow understands as 8-bit grey values."""
    try:
        with Image.open(path) as im:
            return np.asarray(im.convert("L"), dtype=np.uint8)
    except (OSError, ValueError) as exc:
        raise InvalidInputError(f"{path}: cannot read image ({exc})") from None


def write_png(path: PathLike, rgb: np.ndarray) -> None:
    Image.fromarray(np.ascontiguousarray(rgb, dtype=np.uint8), mode="RGB").save(path, format="PNG")


def read_png_rgb(path: PathLike) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"), dtype=np.uint8)


def load_se(path: PathLike) -> StructuringElement:
    """Parse ``dy dx value`` triples, one per line; ``#`` starts a comment."""
    offsets, values = [], []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) != 3:
            raise InvalidInputError(f"{path}:{lineno}: expected 'dy dx value', got {raw!r}")
        try:
            dy, dx, v = (int(p) for p in parts)
        except ValueError:
            raise InvalidInputError(f"{path}:{lineno}: non-integer entry in {raw!r}") from None
        offsets.append((dy, dx))
        values.append(v)
    return StructuringElement(tuple(offsets), tuple(values))


def resolve_se(name: str) -> StructuringElement:
    """A built-in name (``b1``, ``b2``, ``cross``) or a path to an SE file."""
    key = name.lower()
    if key in BUILTIN_SES:
        return BUILTIN_SES[key]
    if not Path(name).exists():
        raise InvalidInputError(f"unknown structuring element {name!r}")
    return load_se(name)
