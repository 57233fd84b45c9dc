"""Command-line entry point: ``kmorph <subcommand> ...``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
import time
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ..baseline import KMeansConfig, lloyd_kmeans
from ..errors import InvalidInputError
from ..grid import (
    BACKGROUND,
    BinaryGrid,
    LabelGrid,
    PointSet,
    cell_to_point,
    discretize,
    grid_from_image,
    pad_grid,
    point_cells,
)
from ..kms import Engine, KmsConfig, intrinsic_max_clusters, kms_cluster
from ..morphology import BoundaryMode
from ..postprocess import remove_small_clusters, render_colormap
from . import io
from .bench import BenchSpec, bench_run, median_times, write_records_csv

log = logging.getLogger("kmorph")


def _load_input(args) -> tuple[BinaryGrid, Optional[PointSet]]:
    """Occupancy grid for ``args.input`` plus the points when it is a CSV."""
    path = Path(args.input)
    if path.suffix.lower() == ".csv":
        points = io.read_points_csv(path)
        t, _ = discretize(points, args.gamma)
    else:
        points = None
        t = grid_from_image(io.read_gray_image(path), threshold=args.threshold)
    return pad_grid(t, args.pad), points


def _compact_index(g: LabelGrid, labels: np.ndarray) -> np.ndarray:
    return np.searchsorted(g.labels(), labels)


def _write_label_csv(path, g: LabelGrid, points: Optional[PointSet]) -> None:
    if points is not None:
        # One row per input instance, in the instance's own coordinates.
        rows, cols = point_cells(points, g.spec)
        clusters = _compact_index(g, g.cells[rows, cols])
        io.write_label_csv(path, points.coords, clusters)
        return
    rows, cols = np.nonzero(g.cells != BACKGROUND)
    coords = np.array([cell_to_point(r, c, g.spec) for r, c in zip(rows, cols)]).reshape(-1, 2)
    io.write_label_csv(path, coords, _compact_index(g, g.cells[rows, cols]))


def _emit_json(payload: dict, path: Optional[str]) -> None:
    text = json.dumps(payload, indent=2)
    if path:
        Path(path).write_text(text + "\n")
    else:
        print(text)


def cmd_cluster(args) -> int:
    t, points = _load_input(args)
    config = KmsConfig(
        k=args.k,
        se=io.resolve_se(args.se),
        boundary=args.boundary,
        delta_max=args.delta_max,
        engine=args.engine,
        closure=args.closure,
    )
    start = time.perf_counter()
    result = kms_cluster(t, config)
    elapsed = time.perf_counter() - start
    g = result.labels
    if args.labels_csv:
        _write_label_csv(args.labels_csv, g, points)
    if args.labels_pgm:
        io.write_label_pgm(args.labels_pgm, g)
    if args.png:
        io.write_png(args.png, render_colormap(g))
    _emit_json(
        {
            "cluster_count": result.cluster_count,
            "converged": result.converged,
            "passes": result.passes,
            "delta_max_reached": result.max_delta,
            "wall_time_s": elapsed,
            "k": args.k,
            "gamma": args.gamma,
            "boundary": config.boundary.value,
            "engine": config.engine.value,
            "se": args.se,
            "width": t.spec.width,
            "height": t.spec.height,
            "foreground": t.foreground_count,
        },
        args.stats,
    )
    return 0


def cmd_denoise(args) -> int:
    g = io.read_label_pgm(args.input)
    before = len(g.labels())
    erased = remove_small_clusters(g, args.tau)
    io.write_label_pgm(args.output, g)
    if args.png:
        io.write_png(args.png, render_colormap(g))
    _emit_json(
        {"tau": args.tau, "clusters_before": before, "erased": len(erased),
         "cluster_count": before - len(erased)},
        args.stats,
    )
    return 0


def cmd_kmeans(args) -> int:
    points = io.read_points_csv(args.input)
    config = KMeansConfig(
        k=args.k,
        threshold=args.threshold,
        max_iterations=args.max_iterations,
        rng_seed=args.seed,
        parallel=Engine.parse(args.engine) is Engine.PARALLEL,
    )
    start = time.perf_counter()
    result = lloyd_kmeans(points, config)
    elapsed = time.perf_counter() - start
    if args.labels_csv:
        io.write_label_csv(args.labels_csv, points.coords, result.assignments)
    _emit_json(
        {
            "k": args.k,
            "error": result.error,
            "iterations": result.iterations,
            "converged": result.converged,
            "wall_time_s": elapsed,
            "cluster_count": int(np.unique(result.assignments).size),
        },
        args.stats,
    )
    return 0


def cmd_bench(args) -> int:
    spec = BenchSpec.from_json(args.spec)

    def report(rec):
        log.info("%s/%s %dx%d L=%d k=%d rep=%d: %.4f s, %d clusters",
                 rec.algorithm, rec.engine, rec.width, rec.height, rec.L, rec.k,
                 rec.repetition, rec.wall_time_s, rec.cluster_count)

    records = bench_run(spec, progress=report)
    write_records_csv(args.output, records)
    for key, median in sorted(median_times(records).items()):
        algorithm, engine, w, h, n, k = key
        print(f"{algorithm}/{engine} {w}x{h} L={n} k={k}: median {median:.4f} s")
    return 0


def cmd_render(args) -> int:
    g = io.read_label_pgm(args.input)
    io.write_png(args.output, render_colormap(g))
    return 0


def cmd_components(args) -> int:
    t, _ = _load_input(args)
    n = intrinsic_max_clusters(t, io.resolve_se(args.se), args.boundary)
    _emit_json({"intrinsic_max_clusters": n, "foreground": t.foreground_count}, None)
    return 0


def _add_input_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("input", help="points CSV (x,y) or grey image (PGM/PNG)")
    p.add_argument("--se", default="b1", help="b1, b2, cross or a 'dy dx value' file (default b1)")
    p.add_argument("--boundary", choices=[m.value for m in BoundaryMode], default="clamp")
    p.add_argument("--gamma", type=float, default=1.0, help="CSV discretization scale")
    p.add_argument("--pad", type=int, default=0, help="empty border cells on each side")
    p.add_argument("--threshold", type=int, default=128,
                   help="image pixels darker than this are instances")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kmorph", description="k-MS clustering, noise removal, k-Means baseline and benchmarks."
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cluster", help="run k-MS on a points CSV or image")
    _add_input_flags(p)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--delta-max", type=int, default=None)
    p.add_argument("--engine", choices=["seq", "par"], default="seq")
    p.add_argument("--closure", choices=["worklist", "sweep"], default="worklist")
    p.add_argument("--labels-csv", help="write x,y,cluster rows here")
    p.add_argument("--labels-pgm", help="write a 16-bit label PGM (+ .json sidecar)")
    p.add_argument("--png", help="write a colour rendering")
    p.add_argument("--stats", help="write stats JSON here instead of stdout")
    p.set_defaults(func=cmd_cluster)

    p = sub.add_parser("denoise", help="erase clusters of at most tau cells")
    p.add_argument("input", help="label PGM")
    p.add_argument("--tau", type=int, required=True)
    p.add_argument("-o", "--output", required=True, help="label PGM to write")
    p.add_argument("--png")
    p.add_argument("--stats")
    p.set_defaults(func=cmd_denoise)

    p = sub.add_parser("kmeans", help="run the k-Means baseline on a points CSV")
    p.add_argument("input")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--threshold", type=float, default=1e-12)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-iterations", type=int, default=500)
    p.add_argument("--engine", choices=["seq", "par"], default="seq")
    p.add_argument("--labels-csv")
    p.add_argument("--stats")
    p.set_defaults(func=cmd_kmeans)

    p = sub.add_parser("bench", help="timing sweep from a JSON spec")
    p.add_argument("--spec", required=True)
    p.add_argument("-o", "--output", required=True, help="records CSV")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("render", help="label PGM to PNG")
    p.add_argument("input")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("components", help="report the largest cluster count reachable")
    _add_input_flags(p)
    p.set_defaults(func=cmd_components)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (InvalidInputError, OSError, KeyError, json.JSONDecodeError) as exc:
        print(f"kmorph {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
