"""Putative correspondences and pairwise rigid-invariant measurements (TRIMs)."""

from __future__ import annotations

import enum
from typing import List, NamedTuple, Sequence

import numpy as np

from .errors import UndefinedTrimError
from .ingestion import LandmarkSet


class TrimMode(str, enum.Enum):
    DIFFERENCE = "difference"
    RATIO = "ratio"


class Correspondence(NamedTuple):
    src_idx: int
    tgt_idx: int
    class_id: int


def all_to_all(src: LandmarkSet, tgt: LandmarkSet) -> List[Correspondence]:
    """Every same-class (source, target) pair, ordered by (class, src, tgt)."""
    out = []
    for c in np.unique(src.class_ids):
        si = np.flatnonzero(src.class_ids == c)
        ti = np.flatnonzero(tgt.class_ids == c)
        for i in si:
            for j in ti:
                out.append(Correspondence(int(i), int(j), int(c)))
    return out


def corr_arrays(corrs: Sequence[Correspondence]):
    """Split a correspondence list into (src_idx, tgt_idx) integer arrays."""
    if len(corrs) == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0, dtype=np.int64)
    arr = np.asarray([(c.src_idx, c.tgt_idx) for c in corrs], dtype=np.int64)
    return arr[:, 0], arr[:, 1]


def _trim_value(d_src, d_tgt, mode: TrimMode):
    mode = TrimMode(mode)
    if mode is TrimMode.DIFFERENCE:
        return np.abs(d_src - d_tgt)
    if np.any(d_tgt <= 0):
        raise UndefinedTrimError("ratio TRIM is undefined for coincident target landmarks")
    return np.abs(d_src / d_tgt - 1.0)


def trim(c1: Correspondence, c2: Correspondence, src: LandmarkSet, tgt: LandmarkSet, mode=TrimMode.DIFFERENCE) -> float:
    """Compare the source distance of two correspondences to their target distance.

    Difference mode returns ``|d_src - d_tgt|``; ratio mode returns
    ``|d_src / d_tgt - 1|``. Smaller is more consistent in both.
    """
    if c1 == c2:
        raise ValueError("TRIM needs two distinct correspondences")
    d_src = np.linalg.norm(src.points[c1.src_idx] - src.points[c2.src_idx])
    d_tgt = np.linalg.norm(tgt.points[c1.tgt_idx] - tgt.points[c2.tgt_idx])
    return float(_trim_value(d_src, d_tgt, mode))


def consistency(c1, c2, src, tgt, mode, eps: float) -> int:
    if c1.src_idx == c2.src_idx or c1.tgt_idx == c2.tgt_idx:
        return 0
    return int(trim(c1, c2, src, tgt, mode) < eps)


def trim_matrix(corrs: Sequence[Correspondence], src: LandmarkSet, tgt: LandmarkSet, mode=TrimMode.DIFFERENCE):
    """All pairwise TRIMs at once.

    Returns ``(trims, exclusive)`` where ``exclusive[i, j]`` marks pairs that
    share a source or target landmark (including the diagonal). TRIM entries
    for exclusive pairs are set to ``inf``.
    """
    si, ti = corr_arrays(corrs)
    ps = src.points[si]
    qt = tgt.points[ti]
    d_src = np.linalg.norm(ps[:, None, :] - ps[None, :, :], axis=-1)
    d_tgt = np.linalg.norm(qt[:, None, :] - qt[None, :, :], axis=-1)
    exclusive = (si[:, None] == si[None, :]) | (ti[:, None] == ti[None, :])
    trims = np.full(d_src.shape, np.inf)
    ok = ~exclusive
    trims[ok] = _trim_value(d_src[ok], d_tgt[ok], mode)
    return trims, exclusive
