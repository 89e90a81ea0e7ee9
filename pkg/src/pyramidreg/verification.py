"""Geometric verification of candidate transforms against the dense target cloud."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np
from scipy.spatial import cKDTree

from .errors import InputError, RegistrationFailedError
from .geometry import RigidMotion, apply
from .ingestion import DenseCloud

TRUNCATED = "truncated"
TRIMMED = "trimmed"
EUCLIDEAN = "euclidean"
SCORE_VARIANTS = (TRUNCATED, TRIMMED, EUCLIDEAN)


@dataclass(frozen=True)
class ScoreParams:
    mu: float = 0.1
    score_variant: str = TRUNCATED
    downsample_voxel: float = 0.0

    def __post_init__(self):
        if self.score_variant not in SCORE_VARIANTS:
            raise ValueError(f"unknown score variant {self.score_variant!r}")
        if self.score_variant != EUCLIDEAN and not self.mu > 0:
            raise ValueError("mu must be positive for truncated and trimmed scores")
        if self.downsample_voxel < 0:
            raise ValueError("downsample_voxel must be non-negative")


class NeighborIndex:
    """Exact nearest-neighbor queries over a fixed point set."""

    def __init__(self, cloud):
        pts = cloud.points if isinstance(cloud, DenseCloud) else np.asarray(cloud, dtype=float)
        if len(pts) == 0:
            raise InputError("cannot index an empty cloud")
        self.points = pts
        self._tree = cKDTree(pts)

    def __len__(self):
        return len(self.points)

    def query(self, points) -> Tuple[np.ndarray, np.ndarray]:
        """Return ``(distances, indices)`` of the nearest indexed point for each query."""
        d, i = self._tree.query(np.asarray(points, dtype=float), k=1)
        return d, i


def voxel_downsample(points: np.ndarray, voxel: float) -> np.ndarray:
    """Keep, per occupied voxel, the input point nearest to that voxel's centroid."""
    if voxel <= 0 or len(points) == 0:
        return points
    keys = np.floor(points / voxel).astype(np.int64)
    _, inv, counts = np.unique(keys, axis=0, return_inverse=True, return_counts=True)
    inv = inv.reshape(-1)
    sums = np.zeros((len(counts), 3))
    np.add.at(sums, inv, points)
    centroids = sums / counts[:, None]
    dist = np.linalg.norm(points - centroids[inv], axis=1)
    # Sort by (voxel, distance, original index) and take the first of each voxel.
    order = np.lexsort((np.arange(len(points)), dist, inv))
    first = np.ones(len(order), dtype=bool)
    first[1:] = inv[order][1:] != inv[order][:-1]
    keep = np.sort(order[first])
    return points[keep]


def rho(d: np.ndarray, params: ScoreParams) -> np.ndarray:
    if params.score_variant == TRUNCATED:
        return np.minimum(d, params.mu)
    if params.score_variant == TRIMMED:
        return np.where(d < params.mu, d, 0.0)
    return d


def score(T: RigidMotion, src, index: NeighborIndex, params: ScoreParams = ScoreParams()) -> float:
    """Sum of per-point robust distances from ``T * src`` to the indexed target."""
    pts = src.points if isinstance(src, DenseCloud) else np.asarray(src, dtype=float)
    pts = voxel_downsample(pts, params.downsample_voxel)
    if len(pts) == 0:
        raise InputError("source cloud is empty")
    d, _ = index.query(apply(T, pts))
    return float(np.sum(rho(d, params)))


def select_best(candidates: Sequence[Optional[RigidMotion]], src, index: NeighborIndex,
                params: ScoreParams = ScoreParams()) -> Tuple[RigidMotion, List[float]]:
    """Score every candidate and return the minimum-score transform.

    ``None`` entries are failed candidates and score ``inf``. Ties go to the
    earliest entry.
    """
    pts = src.points if isinstance(src, DenseCloud) else np.asarray(src, dtype=float)
    pts = voxel_downsample(pts, params.downsample_voxel)
    if len(pts) == 0:
        raise InputError("source cloud is empty")
    flat = ScoreParams(params.mu, params.score_variant, 0.0)
    scores = []
    for T in candidates:
        scores.append(math.inf if T is None else score(T, pts, index, flat))
    finite = [i for i, s in enumerate(scores) if math.isfinite(s)]
    if not finite:
        raise RegistrationFailedError("every candidate transform failed")
    best = min(finite, key=lambda i: (scores[i], i))
    return candidates[best], scores
