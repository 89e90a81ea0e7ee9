"""Consistency graphs: one affinity matrix per threshold, stacked into a pyramid."""

from __future__ import annotations

from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .correspondence import Correspondence, TrimMode, trim_matrix
from .ingestion import LandmarkSet

BINARY = "binary"
GAUSSIAN = "gaussian"

# Dense storage; beyond this the O(n^2) matrices stop being cheap.
SOFT_SIZE_LIMIT = 5000


@dataclass(frozen=True)
class Weighting:
    """``kind`` is ``binary`` or ``gaussian``; ``sigma=None`` means eps / 3."""

    kind: str = BINARY
    sigma: Optional[float] = None

    def __post_init__(self):
        if self.kind not in (BINARY, GAUSSIAN):
            raise ValueError(f"unknown weighting {self.kind!r}")
        if self.sigma is not None and self.sigma <= 0:
            raise ValueError("sigma must be positive")


@dataclass(frozen=True, eq=False)
class AffinityMatrix:
    W: np.ndarray
    eps: float

    @property
    def n(self) -> int:
        return self.W.shape[0]

    def nnz(self) -> int:
        return int(np.count_nonzero(self.W))

    def dump(self) -> str:
        """Upper-triangle nonzeros as ``i j w`` lines."""
        iu, ju = np.nonzero(np.triu(self.W, k=1))
        return "".join(f"{i} {j} {self.W[i, j]:.12g}\n" for i, j in zip(iu, ju))


@dataclass(frozen=True, eq=False)
class PyramidGraph:
    layers: List[AffinityMatrix]
    correspondences: List[Correspondence]

    @property
    def thresholds(self) -> List[float]:
        return [layer.eps for layer in self.layers]

    def __len__(self):
        return len(self.layers)


def _affinity_from_trims(trims, exclusive, eps, weighting: Weighting):
    consistent = trims < eps
    if weighting.kind == BINARY:
        W = consistent.astype(float)
    else:
        sigma = weighting.sigma if weighting.sigma is not None else eps / 3.0
        W = np.where(consistent, np.exp(-np.square(np.where(consistent, trims, 0.0)) / (2.0 * sigma**2)), 0.0)
    W[exclusive] = 0.0
    np.fill_diagonal(W, 1.0)
    # Trims are computed symmetrically already; this guards against round-off.
    W = np.maximum(W, W.T)
    W.setflags(write=False)
    return W


def build_affinity(corrs, src: LandmarkSet, tgt: LandmarkSet, mode=TrimMode.DIFFERENCE, eps: float = 0.1,
                   weighting: Weighting = Weighting()) -> AffinityMatrix:
    if len(corrs) < 1:
        raise ValueError("need at least one correspondence")
    trims, exclusive = trim_matrix(corrs, src, tgt, mode)
    return AffinityMatrix(_affinity_from_trims(trims, exclusive, eps, weighting), float(eps))


def check_thresholds(thresholds: Sequence[float]) -> List[float]:
    th = [float(e) for e in thresholds]
    if not th:
        raise ValueError("thresholds must be non-empty")
    if any(not np.isfinite(e) or e <= 0 for e in th):
        raise ValueError("thresholds must be positive and finite")
    if any(b <= a for a, b in zip(th, th[1:])):
        raise ValueError("thresholds must be strictly increasing")
    return th


def build_pyramid(corrs, src: LandmarkSet, tgt: LandmarkSet, mode=TrimMode.DIFFERENCE,
                  thresholds: Sequence[float] = (0.1,), weighting: Weighting = Weighting()) -> PyramidGraph:
    """One affinity layer per threshold, sparsest first. TRIMs are computed once."""
    th = check_thresholds(thresholds)
    if len(corrs) < 1:
        raise ValueError("need at least one correspondence")
    trims, exclusive = trim_matrix(corrs, src, tgt, mode)
    layers = [AffinityMatrix(_affinity_from_trims(trims, exclusive, e, weighting), e) for e in th]
    return PyramidGraph(layers, list(corrs))
