"""Point cloud readers and semantic landmark extraction."""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass
from itertools import product
from typing import Iterable, Optional, Union

import numpy as np

from .errors import InputError, ParseError
from .geometry import RigidMotion, apply


@dataclass(frozen=True, eq=False)
class DenseCloud:
    points: np.ndarray

    def __post_init__(self):
        P = _as_points(self.points)
        object.__setattr__(self, "points", P)

    def __len__(self):
        return len(self.points)

    def transformed(self, T: RigidMotion) -> "DenseCloud":
        return DenseCloud(apply(T, self.points))


@dataclass(frozen=True, eq=False)
class LabeledCloud:
    points: np.ndarray
    labels: np.ndarray

    def __post_init__(self):
        P = _as_points(self.points)
        L = np.asarray(self.labels, dtype=np.int64).reshape(-1)
        if len(L) != len(P):
            raise InputError(f"{len(L)} labels for {len(P)} points")
        if np.any(L < 0):
            raise InputError("labels must be unsigned")
        L.setflags(write=False)
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "labels", L)

    def __len__(self):
        return len(self.points)

    def dense(self) -> DenseCloud:
        return DenseCloud(self.points)


@dataclass(frozen=True, eq=False)
class LandmarkSet:
    """Sparse semantic landmarks: one point and one class id per entry."""

    points: np.ndarray
    class_ids: np.ndarray

    def __post_init__(self):
        P = _as_points(self.points)
        C = np.asarray(self.class_ids, dtype=np.int64).reshape(-1)
        if len(C) != len(P):
            raise InputError(f"{len(C)} class ids for {len(P)} landmarks")
        C.setflags(write=False)
        object.__setattr__(self, "points", P)
        object.__setattr__(self, "class_ids", C)

    def __len__(self):
        return len(self.points)

    @classmethod
    def empty(cls) -> "LandmarkSet":
        return cls(np.zeros((0, 3)), np.zeros(0, dtype=np.int64))

    @classmethod
    def from_labeled(cls, cloud: LabeledCloud, classes: Optional[Iterable[int]] = None) -> "LandmarkSet":
        """Use labeled points directly as landmarks, skipping clustering."""
        mask = np.ones(len(cloud), dtype=bool)
        if classes is not None:
            mask = np.isin(cloud.labels, sorted(set(classes)))
        return cls(cloud.points[mask], cloud.labels[mask])

    def transformed(self, T: RigidMotion) -> "LandmarkSet":
        return LandmarkSet(apply(T, self.points), self.class_ids)


def _as_points(points) -> np.ndarray:
    P = np.array(points, dtype=float)
    if P.size == 0:
        P = P.reshape(0, 3)
    if P.ndim != 2 or P.shape[1] != 3:
        raise InputError(f"points must have shape (N, 3), got {P.shape}")
    if not np.all(np.isfinite(P)):
        raise InputError("points contain NaN or Inf")
    P.setflags(write=False)
    return P


def read_xyz(path) -> Union[DenseCloud, LabeledCloud]:
    """Read whitespace-separated ``x y z`` or ``x y z label`` lines.

    Blank lines and lines starting with ``#`` are skipped. All data lines
    must have the same number of columns.
    """
    rows = []
    labels = []
    ncols = None
    try:
        fh = open(path, "r")
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    with fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split()
            if len(parts) not in (3, 4):
                raise ParseError(f"expected 3 or 4 columns, got {len(parts)}", path, lineno)
            if ncols is None:
                ncols = len(parts)
            elif len(parts) != ncols:
                raise ParseError(f"expected {ncols} columns, got {len(parts)}", path, lineno)
            try:
                xyz = [float(v) for v in parts[:3]]
            except ValueError:
                raise ParseError(f"invalid coordinate in {line!r}", path, lineno) from None
            if not all(np.isfinite(xyz)):
                raise ParseError("non-finite coordinate", path, lineno)
            rows.append(xyz)
            if ncols == 4:
                try:
                    lab = int(parts[3])
                except ValueError:
                    raise ParseError(f"invalid label {parts[3]!r}", path, lineno) from None
                if lab < 0:
                    raise ParseError(f"negative label {lab}", path, lineno)
                labels.append(lab)
    if not rows:
        raise ParseError("empty file", path)
    if ncols == 4:
        return LabeledCloud(np.array(rows), np.array(labels))
    return DenseCloud(np.array(rows))


def read_kitti_bin(bin_path, label_path=None) -> Union[DenseCloud, LabeledCloud]:
    """Read a KITTI velodyne scan (float32 x, y, z, intensity per point).

    When ``label_path`` is given, the lower 16 bits of each little-endian
    uint32 are the semantic class; the upper 16 bits (instance id) are dropped.
    """
    size = _file_size(bin_path)
    if size == 0:
        raise ParseError("empty file", bin_path)
    if size % 16:
        raise ParseError(f"truncated scan: {size} bytes is not a multiple of 16", bin_path)
    scan = np.fromfile(bin_path, dtype="<f4").reshape(-1, 4)
    xyz = scan[:, :3].astype(float)
    if not np.all(np.isfinite(xyz)):
        raise ParseError("scan contains NaN or Inf", bin_path)
    if label_path is None:
        return DenseCloud(xyz)
    return LabeledCloud(xyz, read_kitti_labels(label_path, len(xyz), bin_path))


def read_kitti_labels(label_path, n_points: int, bin_path=None) -> np.ndarray:
    """Semantic classes (lower 16 bits of each little-endian uint32)."""
    lsize = _file_size(label_path)
    if lsize % 4:
        raise ParseError(f"truncated label file: {lsize} bytes is not a multiple of 4", label_path)
    if lsize // 4 != n_points:
        scan = f" in {bin_path}" if bin_path is not None else ""
        raise ParseError(f"size mismatch: {lsize // 4} labels for {n_points} points{scan}", label_path)
    raw = np.fromfile(label_path, dtype="<u4")
    return (raw & 0xFFFF).astype(np.int64)


def read_labels(path, n_points: int) -> np.ndarray:
    """Per-point labels from a KITTI ``.label`` file or whitespace-separated integers."""
    if str(path).endswith(".label"):
        return read_kitti_labels(path, n_points)
    try:
        with open(path) as fh:
            vals = [int(tok) for tok in fh.read().split()]
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    except ValueError as exc:
        raise ParseError(str(exc), path) from None
    if len(vals) != n_points or any(v < 0 for v in vals):
        raise ParseError(f"expected {n_points} unsigned labels, got {len(vals)} values", path)
    return np.asarray(vals, dtype=np.int64)


def _file_size(path) -> int:
    try:
        return os.path.getsize(path)
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc


_NEIGHBORS = [d for d in product((-1, 0, 1), repeat=3) if d != (0, 0, 0)]


def _voxel_components(points: np.ndarray, voxel: float):
    """Group points into 26-connected components of occupied voxels.

    Returns a list of index arrays, ordered by the smallest point index in
    each component.
    """
    keys = np.floor(points / voxel).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    inverse = inverse.reshape(-1)
    lookup = {tuple(k): i for i, k in enumerate(uniq.tolist())}
    comp = np.full(len(uniq), -1, dtype=np.int64)
    ncomp = 0
    for start in range(len(uniq)):
        if comp[start] >= 0:
            continue
        comp[start] = ncomp
        queue = deque([start])
        while queue:
            v = queue.popleft()
            kx, ky, kz = uniq[v]
            for dx, dy, dz in _NEIGHBORS:
                u = lookup.get((kx + dx, ky + dy, kz + dz))
                if u is not None and comp[u] < 0:
                    comp[u] = ncomp
                    queue.append(u)
        ncomp += 1
    point_comp = comp[inverse]
    groups = [np.flatnonzero(point_comp == c) for c in range(ncomp)]
    groups.sort(key=lambda g: g[0])
    return groups


def extract_landmarks(cloud: LabeledCloud, classes, voxel: float = 0.5, min_points: int = 10) -> LandmarkSet:
    """Cluster each configured class and return one centroid per cluster."""
    if voxel <= 0:
        raise ValueError("voxel must be positive")
    if min_points < 1:
        raise ValueError("min_points must be at least 1")
    pts, cls = [], []
    for c in sorted(set(int(c) for c in classes)):
        idx = np.flatnonzero(cloud.labels == c)
        if len(idx) == 0:
            continue
        sub = cloud.points[idx]
        for group in _voxel_components(sub, voxel):
            if len(group) >= min_points:
                pts.append(sub[group].mean(axis=0))
                cls.append(c)
    if not pts:
        return LandmarkSet.empty()
    return LandmarkSet(np.array(pts), np.array(cls))
