"""End-to-end registration: landmarks to correspondences to pyramid to verified pose."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np

from .clique import CliqueSolution, cascaded_solve
from .config import PipelineConfig
from .correspondence import Correspondence, all_to_all
from .errors import InputError, NoCorrespondencesError, RegistrationFailedError
from .geometry import RigidMotion, format_matrix
from .graph import PyramidGraph, build_pyramid
from .ingestion import (
    DenseCloud,
    LabeledCloud,
    LandmarkSet,
    extract_landmarks,
    read_kitti_bin,
    read_labels,
    read_xyz,
)
from .pose import Candidate, solve_candidates
from .verification import NeighborIndex, select_best


@dataclass
class LayerRecord:
    eps: float
    clique_size: int
    transform: Optional[RigidMotion]
    score: float
    error: Optional[str] = None
    shared_with: Optional[int] = None


@dataclass
class RegistrationResult:
    selected: RigidMotion
    selected_layer: int
    layers: List[LayerRecord]
    timings_ms: Dict[str, float]
    n_correspondences: int
    candidates: List[Candidate] = field(default_factory=list)
    cliques: List[CliqueSolution] = field(default_factory=list)

    @property
    def scores(self) -> List[float]:
        return [rec.score for rec in self.layers]


@dataclass
class CandidateSet:
    """Everything up to (not including) geometric verification."""

    correspondences: List[Correspondence]
    pyramid: PyramidGraph
    cliques: List[CliqueSolution]
    candidates: List[Candidate]
    timings_ms: Dict[str, float]


def generate_candidates(src: LandmarkSet, tgt: LandmarkSet, cfg: PipelineConfig) -> CandidateSet:
    if len(src) == 0 or len(tgt) == 0:
        raise InputError("landmark sets must be non-empty")
    t0 = time.perf_counter()
    corrs = all_to_all(src, tgt)
    if not corrs:
        raise NoCorrespondencesError("no same-class landmark pairs between source and target")
    pyramid = build_pyramid(corrs, src, tgt, cfg.trim_mode, cfg.thresholds, cfg.weighting)
    t1 = time.perf_counter()
    cliques = cascaded_solve(pyramid, cfg.solver, seed=cfg.seed)
    t2 = time.perf_counter()
    candidates = solve_candidates(
        cliques, corrs, src, tgt, cfg.gnc, cfg.dof,
        truncations=[cfg.truncation(e) for e in cfg.thresholds],
        thresholds=cfg.thresholds,
    )
    t3 = time.perf_counter()
    timings = {"graph": (t1 - t0) * 1e3, "clique": (t2 - t1) * 1e3, "gnc": (t3 - t2) * 1e3}
    return CandidateSet(corrs, pyramid, cliques, candidates, timings)


def verify_candidates(cset: CandidateSet, src_cloud: DenseCloud, index: NeighborIndex, cfg: PipelineConfig,
                      score_params=None) -> RegistrationResult:
    score_params = score_params or cfg.score
    t0 = time.perf_counter()
    transforms = [c.transform for c in cset.candidates]
    records = []
    try:
        best, scores = select_best(transforms, src_cloud, index, score_params)
    except RegistrationFailedError as exc:
        for c, sol in zip(cset.candidates, cset.cliques):
            records.append(LayerRecord(c.eps, sol.size, None, math.inf, c.error or sol.error, c.shared_with))
        raise RegistrationFailedError(str(exc), records) from None
    verify_ms = (time.perf_counter() - t0) * 1e3
    for c, sol, s in zip(cset.candidates, cset.cliques, scores):
        records.append(LayerRecord(c.eps, sol.size, c.transform, s, c.error or sol.error, c.shared_with))
    finite = [i for i, s in enumerate(scores) if math.isfinite(s)]
    layer = min(finite, key=lambda i: (scores[i], i))
    timings = dict(cset.timings_ms)
    timings["verify"] = verify_ms
    return RegistrationResult(best, layer, records, timings, len(cset.correspondences),
                              cset.candidates, cset.cliques)


def register(src: Tuple[LandmarkSet, DenseCloud], tgt: Tuple[LandmarkSet, DenseCloud],
             cfg: PipelineConfig = PipelineConfig()) -> RegistrationResult:
    """Estimate the motion taking the source scan into the target frame."""
    src_lm, src_cloud = src
    tgt_lm, tgt_cloud = tgt
    if len(src_cloud) == 0 or len(tgt_cloud) == 0:
        raise InputError("dense clouds must be non-empty")
    cset = generate_candidates(src_lm, tgt_lm, cfg)
    t0 = time.perf_counter()
    index = NeighborIndex(tgt_cloud)
    build_ms = (time.perf_counter() - t0) * 1e3
    result = verify_candidates(cset, src_cloud, index, cfg)
    result.timings_ms["verify"] += build_ms
    return result


@dataclass(frozen=True)
class CloudSource:
    """Where to read one side of a registration.

    ``path`` is an ASCII XYZ[+label] file or a KITTI ``.bin`` scan;
    ``labels`` a per-point label file; ``landmarks`` an XYZ+label file used
    directly as landmarks, bypassing clustering.
    """

    path: str
    labels: Optional[str] = None
    landmarks: Optional[str] = None


def load_side(source: CloudSource, cfg: PipelineConfig) -> Tuple[LandmarkSet, DenseCloud]:
    path = str(source.path)
    cloud = read_kitti_bin(path) if path.endswith(".bin") else read_xyz(path)
    if source.labels:
        cloud = LabeledCloud(cloud.points, read_labels(source.labels, len(cloud)))
    dense = cloud.dense() if isinstance(cloud, LabeledCloud) else cloud
    if source.landmarks:
        lm_cloud = read_xyz(source.landmarks)
        if not isinstance(lm_cloud, LabeledCloud):
            raise InputError(f"{source.landmarks}: landmark file needs a label column")
        landmarks = LandmarkSet.from_labeled(lm_cloud, cfg.classes)
    else:
        if not isinstance(cloud, LabeledCloud):
            raise InputError(f"{path}: no labels available for landmark clustering "
                             "(supply a label column or a label file)")
        landmarks = extract_landmarks(cloud, cfg.classes, cfg.cluster_voxel, cfg.cluster_min_points)
    if len(landmarks) == 0:
        raise InputError(f"{source.landmarks or path}: no landmarks of classes {list(cfg.classes)}")
    return landmarks, dense


def register_files(src: CloudSource, tgt: CloudSource, cfg: PipelineConfig = PipelineConfig()) -> RegistrationResult:
    return register(load_side(src, cfg), load_side(tgt, cfg), cfg)


def _num(v: float) -> str:
    return "inf" if math.isinf(v) else f"{v:.12g}"


def format_report(result: RegistrationResult, include_timings: bool = False) -> str:
    """Text report: 4x4 transform, per-layer table, and optionally timings.

    Timings vary from run to run, so they are off by default to keep
    reports byte-identical across repeated invocations.
    """
    lines = ["transform:"]
    lines.append(format_matrix(result.selected).rstrip("\n"))
    lines.append(f"selected_layer: {result.selected_layer}")
    lines.append(f"correspondences: {result.n_correspondences}")
    lines.append("layers:")
    lines.append("layer eps clique_size score status")
    for i, rec in enumerate(result.layers):
        lines.append(f"{i} {rec.eps:g} {rec.clique_size} {_num(rec.score)} {_status(rec)}")
    if include_timings:
        t = result.timings_ms
        lines.append("timing_ms: " + " ".join(f"{k}={t[k]:.3f}" for k in ("graph", "clique", "gnc", "verify")))
    return "\n".join(lines) + "\n"


def _status(rec: LayerRecord) -> str:
    if rec.transform is None:
        return "failed: " + (rec.error or "unknown")
    if rec.shared_with is not None:
        return f"ok (same clique as layer {rec.shared_with})"
    return "ok"


def format_failure(records: List[LayerRecord]) -> str:
    lines = ["registration failed", "layer eps clique_size status"]
    for i, rec in enumerate(records):
        lines.append(f"{i} {rec.eps:g} {rec.clique_size} {_status(rec)}")
    return "\n".join(lines) + "\n"
