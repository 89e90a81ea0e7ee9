"""Synthetic registration benchmarks with known ground truth.

Scenes are random landmark layouts observed twice: the target sees every
landmark, the source sees only an overlapping subset (moved by the inverse
ground-truth motion and perturbed) plus spurious landmarks from the part of
the world the target never saw. Spurious landmarks come in small rigid
groups copied from the target under a wrong motion, so they form consistent
but false cliques.

Table columns
-------------
``run_suite`` rows: ``scene, config, trials, success_pct, oracle_pct,
graph_ms, clique_ms, gnc_ms, verify_ms``. ``oracle_pct`` counts a trial as
solved when any candidate meets the criteria.

``ablate_score_variants`` rows: ``variant, mu, trials, success_pct``.

``threshold_ablation`` rows add ``clique_x`` and ``gnc_x``: mean solver
time relative to the first row.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .clique import SolverParams, cascaded_solve, random_start, solve_layer
from .config import PipelineConfig
from .correspondence import TrimMode, all_to_all
from .errors import RegistrationError
from .geometry import SE2, SE3, RigidMotion, apply, compose, inverse, pose_error, rot_axis_angle, rot_z
from .graph import build_pyramid
from .ingestion import DenseCloud, LandmarkSet
from .pipeline import generate_candidates, verify_candidates
from .verification import NeighborIndex, ScoreParams


@dataclass(frozen=True)
class SceneSpec:
    landmarks_per_class: Tuple[Tuple[int, int], ...] = ((10, 16), (50, 14))
    points_per_landmark: int = 40
    blob_sigma: float = 0.4
    landmark_noise: float = 0.05
    overlap_fraction: float = 1.0
    spurious_fraction: float = 0.0
    structured_spurious: bool = True
    spurious_group_size: int = 3
    trans_range: Tuple[float, float] = (10.0, 15.0)
    rot_range_deg: Tuple[float, float] = (0.0, 30.0)
    extent: float = 80.0
    height: float = 4.0
    dof: str = SE3
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "landmarks_per_class",
                           tuple((int(c), int(n)) for c, n in dict(self.landmarks_per_class).items()))
        if not 0 < self.overlap_fraction <= 1:
            raise ValueError("overlap_fraction must lie in (0, 1]")
        if self.spurious_fraction < 0:
            raise ValueError("spurious_fraction must be non-negative")
        if self.extent <= 0 or self.height < 0 or self.blob_sigma < 0 or self.landmark_noise < 0:
            raise ValueError("extents and noise levels must be non-negative")
        lo, hi = self.trans_range
        rlo, rhi = self.rot_range_deg
        if not (0 <= lo <= hi and 0 <= rlo <= rhi <= 180):
            raise ValueError("invalid transform magnitude ranges")
        if self.points_per_landmark < 1 or self.spurious_group_size < 1:
            raise ValueError("counts must be positive")

    @property
    def n_landmarks(self) -> int:
        return sum(n for _, n in self.landmarks_per_class)


@dataclass(frozen=True)
class SuccessCriteria:
    max_trans: float = 2.0
    max_rot: float = 5.0

    def __post_init__(self):
        if self.max_trans <= 0 or self.max_rot <= 0:
            raise ValueError("criteria must be positive")

    def ok(self, est: Optional[RigidMotion], gt: RigidMotion) -> bool:
        if est is None:
            return False
        te, re = pose_error(est, gt)
        return te < self.max_trans and re < self.max_rot


OUTDOOR_CRITERIA = SuccessCriteria(2.0, 5.0)
INDOOR_CRITERIA = SuccessCriteria(1.0, 3.0)


@dataclass
class Instance:
    src_landmarks: LandmarkSet
    src_cloud: DenseCloud
    tgt_landmarks: LandmarkSet
    tgt_cloud: DenseCloud
    T_gt: RigidMotion
    shared: np.ndarray

    @property
    def src(self):
        return self.src_landmarks, self.src_cloud

    @property
    def tgt(self):
        return self.tgt_landmarks, self.tgt_cloud


def sample_motion(rng: np.random.Generator, spec: SceneSpec) -> RigidMotion:
    ang = np.radians(rng.uniform(*spec.rot_range_deg))
    dist = rng.uniform(*spec.trans_range)
    if spec.dof == SE2:
        heading = rng.uniform(0, 2 * np.pi)
        sign = rng.choice([-1.0, 1.0])
        return RigidMotion(rot_z(sign * ang), dist * np.array([np.cos(heading), np.sin(heading), 0.0]), SE2)
    axis = rng.normal(size=3)
    direction = rng.normal(size=3)
    direction /= np.linalg.norm(direction)
    return RigidMotion(rot_axis_angle(axis, ang), dist * direction, SE3)


def _uniform_points(rng, n, spec):
    xy = rng.uniform(-spec.extent / 2, spec.extent / 2, size=(n, 2))
    z = rng.uniform(0, spec.height, size=(n, 1)) if spec.dof == SE3 else np.zeros((n, 1))
    return np.hstack([xy, z])


def _blobs(rng, centers, spec):
    if len(centers) == 0:
        return np.zeros((0, 3))
    k = spec.points_per_landmark
    pts = np.repeat(centers, k, axis=0) + rng.normal(scale=spec.blob_sigma, size=(len(centers) * k, 3))
    if spec.dof == SE2:
        pts[:, 2] = 0.0
    return pts


def _noise(rng, n, spec):
    e = rng.normal(scale=spec.landmark_noise, size=(n, 3))
    if spec.dof == SE2:
        e[:, 2] = 0.0
    return e


def generate_instance(spec: SceneSpec) -> Instance:
    """Build one source/target pair; fully determined by ``spec.seed``."""
    rng = np.random.default_rng(spec.seed)
    T_gt = sample_motion(rng, spec)
    classes = np.concatenate([np.full(n, c, dtype=np.int64) for c, n in spec.landmarks_per_class])
    n = len(classes)
    tgt_pts = _uniform_points(rng, n, spec)

    n_shared = int(math.floor(spec.overlap_fraction * n + 1e-9))
    shared = np.sort(rng.choice(n, size=n_shared, replace=False))
    T_inv = inverse(T_gt)
    true_src = apply(T_inv, tgt_pts[shared])

    n_spur = int(math.floor(spec.spurious_fraction * n + 1e-9))
    spur_true, spur_cls = [], []
    remaining = n_spur
    while remaining > 0:
        g = min(spec.spurious_group_size, remaining) if spec.structured_spurious else remaining
        if spec.structured_spurious:
            # A rigid copy of a few target landmarks under a wrong motion.
            members = rng.choice(n, size=g, replace=False)
            wrong = sample_motion(rng, replace(spec, trans_range=(0.0, spec.extent / 2), rot_range_deg=(0.0, 180.0)))
            spur_true.append(apply(compose(wrong, T_inv), tgt_pts[members]))
            spur_cls.append(classes[members])
        else:
            spur_true.append(apply(T_inv, _uniform_points(rng, g, spec)))
            spur_cls.append(rng.choice(classes, size=g))
        remaining -= g
    spur_true = np.vstack(spur_true) if spur_true else np.zeros((0, 3))
    spur_cls = np.concatenate(spur_cls) if spur_cls else np.zeros(0, dtype=np.int64)

    src_true = np.vstack([true_src, spur_true])
    src_cls = np.concatenate([classes[shared], spur_cls])
    src_lm = src_true + _noise(rng, len(src_true), spec)
    tgt_lm = tgt_pts + _noise(rng, n, spec)
    src_cloud = DenseCloud(_blobs(rng, src_true, spec))
    tgt_cloud = DenseCloud(_blobs(rng, tgt_pts, spec))
    return Instance(LandmarkSet(src_lm, src_cls), src_cloud, LandmarkSet(tgt_lm, classes), tgt_cloud, T_gt, shared)


def trial_seed(base: int, index: int) -> int:
    return int(np.random.SeedSequence([int(base), int(index)]).generate_state(1, dtype=np.uint64)[0])


@dataclass
class TrialResult:
    success: bool
    oracle_success: bool
    trans_err: float
    rot_err: float
    selected_layer: int
    layer_success: List[bool]
    clique_sizes: List[int]
    timings_ms: Dict[str, float] = field(default_factory=dict)
    error: Optional[str] = None


def run_trial(inst: Instance, cfg: PipelineConfig, criteria: SuccessCriteria,
              score_params: Optional[ScoreParams] = None) -> TrialResult:
    try:
        cset = generate_candidates(inst.src_landmarks, inst.tgt_landmarks, cfg)
    except RegistrationError as exc:
        return TrialResult(False, False, math.inf, math.inf, -1, [], [], {}, str(exc))
    layer_ok = [criteria.ok(c.transform, inst.T_gt) for c in cset.candidates]
    sizes = [s.size for s in cset.cliques]
    try:
        res = verify_candidates(cset, inst.src_cloud, NeighborIndex(inst.tgt_cloud), cfg, score_params)
    except RegistrationError as exc:
        return TrialResult(False, any(layer_ok), math.inf, math.inf, -1, layer_ok, sizes, cset.timings_ms, str(exc))
    te, re = pose_error(res.selected, inst.T_gt)
    ok = criteria.ok(res.selected, inst.T_gt)
    return TrialResult(ok, any(layer_ok), te, re, res.selected_layer, layer_ok, sizes, res.timings_ms)


class Table:
    def __init__(self, columns: Sequence[str]):
        self.columns = list(columns)
        self.rows: List[List] = []

    def add(self, *values):
        if len(values) != len(self.columns):
            raise ValueError("row width does not match the column count")
        self.rows.append(list(values))

    def column(self, name: str) -> list:
        i = self.columns.index(name)
        return [r[i] for r in self.rows]

    @staticmethod
    def _cell(v) -> str:
        if isinstance(v, float):
            return f"{v:.2f}"
        return str(v)

    def to_ascii(self) -> str:
        cells = [self.columns] + [[self._cell(v) for v in r] for r in self.rows]
        widths = [max(len(row[i]) for row in cells) for i in range(len(self.columns))]
        lines = []
        for k, row in enumerate(cells):
            lines.append("  ".join(c.rjust(w) if k else c.ljust(w) for c, w in zip(row, widths)).rstrip())
            if k == 0:
                lines.append("  ".join("-" * w for w in widths))
        return "\n".join(lines) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.columns)
        for r in self.rows:
            w.writerow([self._cell(v) for v in r])
        return buf.getvalue()


def _map(fn, args, jobs: int):
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            return list(ex.map(fn, args))
    return [fn(a) for a in args]


def _suite_cell(args):
    spec, cfgs, criteria, score_list = args
    inst = generate_instance(spec)
    return [run_trial(inst, cfg, criteria, sp) for cfg, sp in zip(cfgs, score_list)]


def run_trials(spec: SceneSpec, cfgs: Sequence[PipelineConfig], criteria: SuccessCriteria, trials: int,
               score_params: Optional[Sequence[Optional[ScoreParams]]] = None, jobs: int = 1) -> List[List[TrialResult]]:
    """Run every config on the same ``trials`` instances. Returns results[cfg][trial]."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    score_list = list(score_params) if score_params is not None else [None] * len(cfgs)
    args = [(replace(spec, seed=trial_seed(spec.seed, t)), list(cfgs), criteria, score_list) for t in range(trials)]
    per_trial = _map(_suite_cell, args, jobs)
    return [[per_trial[t][c] for t in range(trials)] for c in range(len(cfgs))]


def _pct(flags) -> float:
    flags = list(flags)
    return 100.0 * sum(flags) / len(flags) if flags else 0.0


def _mean_ms(results: List[TrialResult], key: str) -> float:
    vals = [r.timings_ms[key] for r in results if key in r.timings_ms]
    return float(np.mean(vals)) if vals else 0.0


SUITE_COLUMNS = ["scene", "config", "trials", "success_pct", "oracle_pct",
                 "graph_ms", "clique_ms", "gnc_ms", "verify_ms"]


def run_suite(specs: Sequence[Tuple[str, SceneSpec]], cfgs: Sequence[Tuple[str, PipelineConfig]],
              criteria: SuccessCriteria = OUTDOOR_CRITERIA, trials: int = 20, jobs: int = 1,
              include_timings: bool = True) -> Table:
    """Success rates per (scene, config) cell over shared instances."""
    cols = SUITE_COLUMNS if include_timings else SUITE_COLUMNS[:5]
    table = Table(cols)
    for sname, spec in specs:
        results = run_trials(spec, [c for _, c in cfgs], criteria, trials, jobs=jobs)
        for (cname, _), res in zip(cfgs, results):
            row = [sname, cname, trials, _pct(r.success for r in res), _pct(r.oracle_success for r in res)]
            if include_timings:
                row += [_mean_ms(res, k) for k in ("graph", "clique", "gnc", "verify")]
            table.add(*row)
    return table


def variant_label(sp: ScoreParams) -> str:
    short = {"truncated": "Tu", "trimmed": "Ti", "euclidean": "Eu"}[sp.score_variant]
    return short if sp.score_variant == "euclidean" else f"{short}-{sp.mu:g}"


def ablate_score_variants(spec: SceneSpec, variants: Sequence[ScoreParams], trials: int,
                          cfg: Optional[PipelineConfig] = None, criteria: SuccessCriteria = OUTDOOR_CRITERIA) -> Table:
    """Paired comparison of verification scores: identical candidates per trial."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    cfg = cfg or PipelineConfig()
    hits = np.zeros((len(variants), trials), dtype=bool)
    for t in range(trials):
        inst = generate_instance(replace(spec, seed=trial_seed(spec.seed, t)))
        try:
            cset = generate_candidates(inst.src_landmarks, inst.tgt_landmarks, cfg)
        except RegistrationError:
            continue
        index = NeighborIndex(inst.tgt_cloud)
        for v, sp in enumerate(variants):
            try:
                res = verify_candidates(cset, inst.src_cloud, index, cfg, sp)
            except RegistrationError:
                continue
            hits[v, t] = criteria.ok(res.selected, inst.T_gt)
    table = Table(["variant", "mu", "trials", "success_pct"])
    for v, sp in enumerate(variants):
        table.add(variant_label(sp), sp.mu if sp.score_variant != "euclidean" else float("nan"), trials,
                  _pct(hits[v]))
    return table


def threshold_sets(thresholds: Sequence[float]) -> List[Tuple[float, ...]]:
    """Singletons interleaved with growing prefixes, in the order [e1], [e2], [e1,e2], [e3], [e1..e3], ..."""
    th = list(thresholds)
    out = [(th[0],)]
    for k in range(1, len(th)):
        out.append((th[k],))
        out.append(tuple(th[: k + 1]))
    return out


def threshold_ablation(spec: SceneSpec, thresholds: Sequence[float], trials: int,
                       cfg: Optional[PipelineConfig] = None, criteria: SuccessCriteria = OUTDOOR_CRITERIA,
                       jobs: int = 1) -> Table:
    cfg = cfg or PipelineConfig()
    sets = threshold_sets(thresholds)
    cfgs = [replace(cfg, thresholds=s) for s in sets]
    results = run_trials(spec, cfgs, criteria, trials, jobs=jobs)
    table = Table(["thresholds", "trials", "success_pct", "oracle_pct", "clique_ms", "gnc_ms", "clique_x", "gnc_x"])
    base_c = base_g = None
    for s, res in zip(sets, results):
        cm, gm = _mean_ms(res, "clique"), _mean_ms(res, "gnc")
        if base_c is None:
            base_c, base_g = cm or 1.0, gm or 1.0
        label = "[" + ", ".join(f"{e:g}" for e in s) + "]"
        table.add(label, trials, _pct(r.success for r in res), _pct(r.oracle_success for r in res),
                  cm, gm, cm / base_c, gm / base_g)
    return table


@dataclass
class WarmStartReport:
    cascaded_s: float
    cold_first_s: float
    cold_each_s: float
    cascaded_iters: int
    cold_iters: int
    instances: int
    layers: int

    @property
    def ratio_vs_first(self) -> float:
        return self.cascaded_s / self.cold_first_s

    @property
    def ratio_vs_mean_layer(self) -> float:
        return self.cascaded_s / (self.cold_each_s / self.layers)


def warm_start_economy(instances: int = 50, n_src: int = 20, n_tgt: int = 25,
                       thresholds: Sequence[float] = (0.01, 0.02, 0.04, 0.08, 0.16),
                       params: Optional[SolverParams] = None, seed: int = 0,
                       spec: Optional[SceneSpec] = None, cold_all_layers: bool = True) -> WarmStartReport:
    """Time the cascade against independent cold solves on the same layers.

    Each instance has a single landmark class, so all-to-all matching yields
    ``n_src * n_tgt`` correspondences. With ``cold_all_layers=False`` only the
    first (sparsest) layer is solved cold, and ``cold_each_s`` covers that layer alone.
    """
    params = params or SolverParams()
    spec = spec or SceneSpec(landmarks_per_class=((1, n_tgt),), overlap_fraction=min(1.0, 0.6 * n_src / n_tgt),
                             spurious_fraction=0.0, points_per_landmark=1)
    casc = cold_first = cold_each = 0.0
    casc_it = cold_it = 0
    for k in range(instances):
        s = replace(spec, seed=trial_seed(seed, k))
        n_shared = int(math.floor(s.overlap_fraction * s.n_landmarks + 1e-9))
        s = replace(s, spurious_fraction=(n_src - n_shared) / s.n_landmarks)
        inst = generate_instance(s)
        corrs = all_to_all(inst.src_landmarks, inst.tgt_landmarks)
        pyr = build_pyramid(corrs, inst.src_landmarks, inst.tgt_landmarks, TrimMode.RATIO, thresholds)
        sols = cascaded_solve(pyr, params, seed=k)
        casc += sum(x.seconds for x in sols)
        casc_it += sum(x.inner_iters for x in sols)
        rng = np.random.default_rng(k)
        for i, layer in enumerate(pyr.layers if cold_all_layers else pyr.layers[:1]):
            x0 = random_start(layer.n, rng)
            sol = solve_layer(layer.W, x0, params)
            cold_each += sol.seconds
            cold_it += sol.inner_iters
            if i == 0:
                cold_first += sol.seconds
    layers = len(thresholds) if cold_all_layers else 1
    return WarmStartReport(casc, cold_first, cold_each, casc_it, cold_it, instances, layers)
