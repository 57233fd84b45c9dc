"""CLI, file formats, synthetic data and the timing benchmark."""

from .bench import BenchSpec, RunRecord, bench_run, median_times, read_records_csv, write_records_csv
from .synth import blob_image, generate_random_instances, random_density_grid

__all__ = [
    "BenchSpec",
    "RunRecord",
    "bench_run",
    "blob_image",
    "generate_random_instances",
    "median_times",
    "random_density_grid",
    "read_records_csv",
    "write_records_csv",
]
