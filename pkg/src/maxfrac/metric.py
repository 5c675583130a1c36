"""Points, point clouds and the Euclidean / Hausdorff-Pompeiu metrics.

Clouds are stored as ``(n, d)`` float arrays. Deduplication keeps the
first-inserted representative of every group of points closer than the
dedup tolerance, so the order of a cloud is deterministic.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .errors import DimensionError, EmptyInputError

DEDUP_TOL = 1e-12

# entries per brute-force distance block
_ENTRIES = 1 << 21


def worker_count() -> int:
    """Worker cap from ``MAXFRAC_THREADS`` (default 1)."""
    try:
        return max(1, int(os.environ.get("MAXFRAC_THREADS", "1")))
    except ValueError:
        return 1


def as_points(points, dim: int | None = None) -> np.ndarray:
    """Coerce ``points`` to a finite ``(n, d)`` float array."""
    arr = np.asarray(points, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1, 1)
    elif arr.ndim == 1:
        # a flat list is read as n one-dimensional points unless dim says otherwise
        arr = arr.reshape(1, -1) if dim is not None and dim > 1 else arr.reshape(-1, 1)
    if arr.ndim != 2:
        raise DimensionError(f"expected a (n, d) array, got shape {arr.shape}")
    if dim is not None and arr.shape[0] and arr.shape[1] != dim:
        raise DimensionError(f"expected dimension {dim}, got {arr.shape[1]}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("point coordinates must be finite")
    return arr


def distance(a, b) -> float:
    """Euclidean distance between two points of equal dimension."""
    a = np.atleast_1d(np.asarray(a, dtype=float))
    b = np.atleast_1d(np.asarray(b, dtype=float))
    if a.shape != b.shape:
        raise DimensionError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return float(np.sqrt(np.sum((a - b) ** 2)))


def pairwise(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Dense ``(len(a), len(b))`` Euclidean distance matrix."""
    diff = a[:, None, :] - b[None, :, :]
    return np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))


def dedup_map(points: np.ndarray, tol: float = DEDUP_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Greedy first-inserted deduplication.

    Returns ``(keep, owner)``: ``keep`` are the indices of retained points in
    insertion order and ``owner[i]`` is the position in ``keep`` of the
    representative that absorbed point ``i``.
    """
    n = len(points)
    if n == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    # exact duplicates first: cheap and covers the bulk of coalescing
    _, first, inverse = np.unique(points, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.reshape(-1)
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    uniq_idx = first[order]
    uniq_owner = np.arange(len(uniq_idx))
    if tol > 0 and len(uniq_idx) > 1:
        pairs = cKDTree(points[uniq_idx]).query_pairs(tol, output_type="ndarray")
        if len(pairs):
            pairs = np.sort(pairs, axis=1)
            pairs = pairs[np.lexsort((pairs[:, 1], pairs[:, 0]))]
            removed = np.zeros(len(uniq_idx), dtype=bool)
            for i, j in pairs.tolist():
                if removed[i] or removed[j]:
                    continue
                removed[j] = True
                uniq_owner[j] = i
            kept = np.flatnonzero(~removed)
            compact = np.full(len(uniq_idx), -1, dtype=np.int64)
            compact[kept] = np.arange(len(kept))
            uniq_owner = compact[uniq_owner]
            uniq_idx = uniq_idx[kept]
    owner = uniq_owner[rank[inverse]]
    return uniq_idx.astype(np.int64), owner.astype(np.int64)


@dataclass(frozen=True)
class PointCloud:
    """Nonempty finite set of points in R^d, deduplicated at ``tol``."""

    points: np.ndarray
    tol: float = field(default=DEDUP_TOL, compare=False)

    def __post_init__(self):
        pts = as_points(self.points)
        if len(pts) == 0:
            raise EmptyInputError("a point cloud must be nonempty")
        keep, _ = dedup_map(pts, self.tol)
        pts = np.ascontiguousarray(pts[keep])
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    def union(self, other: "PointCloud") -> "PointCloud":
        _check_dims(self, other)
        return PointCloud(np.vstack([self.points, other.points]), self.tol)

    def to_list(self) -> list[list[float]]:
        return self.points.tolist()


def _check_dims(a: PointCloud, b: PointCloud):
    if a.dim != b.dim:
        raise DimensionError(f"dimension mismatch: {a.dim} vs {b.dim}")


def _cloud_array(x) -> np.ndarray:
    if isinstance(x, PointCloud):
        return x.points
    arr = as_points(x)
    if len(arr) == 0:
        raise EmptyInputError("empty point cloud")
    return arr


def directed_hausdorff(a, b) -> float:
    """``sup_{x in a} inf_{y in b} d(x, y)`` by brute force."""
    A, B = _cloud_array(a), _cloud_array(b)
    if A.shape[1] != B.shape[1]:
        raise DimensionError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    rows = max(1, _ENTRIES // len(B))
    blocks = [A[i:i + rows] for i in range(0, len(A), rows)]

    def block_max(block):
        return float(pairwise(block, B).min(axis=1).max())

    workers = worker_count()
    if workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(block_max, blocks))
    else:
        parts = [block_max(blk) for blk in blocks]
    return max(parts)


def hausdorff(a, b) -> float:
    """Hausdorff-Pompeiu distance between two finite clouds."""
    return max(directed_hausdorff(a, b), directed_hausdorff(b, a))


def diameter(a) -> float:
    """Largest pairwise distance; 0 for a singleton."""
    A = _cloud_array(a)
    if A.shape[1] == 1:
        return float(A.max() - A.min())
    rows = max(1, _ENTRIES // len(A))
    return max(float(pairwise(A[i:i + rows], A).max()) for i in range(0, len(A), rows))
