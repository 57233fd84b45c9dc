"""Lloyd k-Means, used as the quality and timing reference for k-MS.

Iteration stops once the fraction of instances that switched cluster drops
below ``threshold`` (or no instance switched at all).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Union

import numpy as np
from numba import njit, prange

from .errors import InvalidInputError
from .grid import PointSet


@dataclass(frozen=True)
class KMeansConfig:
    k: int
    threshold: float = 1e-12
    max_iterations: int = 500
    rng_seed: int = 0
    parallel: bool = False

    def __post_init__(self):
        if self.k < 1:
            raise InvalidInputError(f"k must be >= 1, got {self.k}")
        if not 0 <= self.threshold < 1:
            raise InvalidInputError(f"threshold must be in [0, 1), got {self.threshold}")
        if self.max_iterations < 1:
            raise InvalidInputError("max_iterations must be >= 1")


@dataclass
class KMeansResult:
    centroids: np.ndarray
    assignments: np.ndarray
    error: float
    iterations: int
    # Clustering error after each iteration's centroid update.
    error_trace: list[float] = field(default_factory=list)
    converged: bool = True


def _as_array(points: Union[PointSet, np.ndarray]) -> np.ndarray:
    if isinstance(points, PointSet):
        return points.coords
    arr = np.asarray(points, dtype=np.float64)
    if arr.ndim != 2:
        raise InvalidInputError(f"expected an (L, d) array, got shape {arr.shape}")
    return arr


def clustering_error(points, centroids, assignments) -> float:
    """Sum of squared Euclidean distances from each point to its centroid."""
    x = _as_array(points)
    c = np.asarray(centroids, dtype=np.float64)
    a = np.asarray(assignments)
    if a.shape[0] != x.shape[0]:
        raise InvalidInputError(f"{x.shape[0]} points but {a.shape[0]} assignments")
    if a.size and (a.min() < 0 or a.max() >= c.shape[0]):
        raise InvalidInputError("assignment refers to a missing centroid")
    diff = x - c[a]
    return float(np.sum(diff * diff))


@njit(cache=True, inline="always")
def _nearest(x, c, i):
    best = 0
    best_d = np.inf
    for m in range(c.shape[0]):
        d = 0.0
        for t in range(x.shape[1]):
            e = x[i, t] - c[m, t]
            d += e * e
        if d < best_d:
            best_d = d
            best = m
    return best, best_d


@njit(cache=True)
def _assign_seq(x, c, out, dist):
    for i in range(x.shape[0]):
        out[i], dist[i] = _nearest(x, c, i)


@njit(cache=True, parallel=True)
def _assign_par(x, c, out, dist):
    for i in prange(x.shape[0]):
        out[i], dist[i] = _nearest(x, c, i)


def _update(x: np.ndarray, assign: np.ndarray, k: int, centroids: np.ndarray) -> np.ndarray:
    # bincount sums in index order, so the reduction is the same however the
    # assignment step was scheduled.
    counts = np.bincount(assign, minlength=k)
    new = centroids.copy()
    nonempty = counts > 0
    for t in range(x.shape[1]):
        sums = np.bincount(assign, weights=x[:, t], minlength=k)
        new[nonempty, t] = sums[nonempty] / counts[nonempty]
    return new


def _repair_empty(x, assign, dist, centroids, k) -> None:
    """Give each memberless centroid the point lying farthest from its own centroid."""
    counts = np.bincount(assign, minlength=k)
    for m in np.flatnonzero(counts == 0):
        donors = counts[assign] > 1
        if not donors.any():
            break
        i = int(np.argmax(np.where(donors, dist, -1.0)))
        counts[assign[i]] -= 1
        counts[m] += 1
        assign[i] = m
        dist[i] = 0.0
        centroids[m] = x[i]


def lloyd_kmeans(points, config: KMeansConfig) -> KMeansResult:
    x = np.ascontiguousarray(_as_array(points))
    n = x.shape[0]
    k = config.k
    if k > n:
        raise InvalidInputError(f"k={k} exceeds the number of instances ({n})")
    rng = np.random.default_rng(config.rng_seed)
    centroids = x[rng.choice(n, size=k, replace=False)].copy()
    assign_fn = _assign_par if config.parallel else _assign_seq

    assign = np.full(n, -1, dtype=np.int64)
    new_assign = np.empty(n, dtype=np.int64)
    dist = np.empty(n, dtype=np.float64)
    trace: list[float] = []
    converged = False
    iterations = 0
    while iterations < config.max_iterations:
        iterations += 1
        assign_fn(x, centroids, new_assign, dist)
        _repair_empty(x, new_assign, dist, centroids, k)
        changed = int(np.count_nonzero(new_assign != assign))
        assign, new_assign = new_assign, assign
        centroids = _update(x, assign, k, centroids)
        trace.append(clustering_error(x, centroids, assign))
        if changed == 0 or changed / n < config.threshold:
            converged = True
            break
    return KMeansResult(
        centroids=centroids,
        assignments=assign.copy(),
        error=trace[-1],
        iterations=iterations,
        error_trace=trace,
        converged=converged,
    )
