"""Pipeline configuration and its ``key = value`` text format.

Every field of :class:`PipelineConfig` is addressable by a flat key; nested
parameter groups use a dotted prefix (``solver.``, ``gnc.``, ``score.``).
Example::

    preset = outdoor
    trim_mode = ratio
    thresholds = 0.01, 0.02, 0.04, 0.08
    score.mu = 1.0
    solver.max_inner_iters = 300

``preset`` is applied first regardless of its position in the file.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Dict, Mapping, Optional, Tuple

from .clique import SolverParams
from .correspondence import TrimMode
from .errors import InputError, ParseError
from .geometry import DOFS, SE2, SE3
from .graph import Weighting, check_thresholds
from .pose import GncParams
from .verification import ScoreParams

# SemanticKITTI class ids for car, truck and building.
KITTI_CLASSES = (10, 18, 50)
OUTDOOR_THRESHOLDS = (0.01, 0.02, 0.04, 0.08)
INDOOR_THRESHOLDS = (0.05, 0.1, 0.15, 0.2, 0.25)


@dataclass(frozen=True)
class PipelineConfig:
    trim_mode: TrimMode = TrimMode.RATIO
    thresholds: Tuple[float, ...] = OUTDOOR_THRESHOLDS
    weighting: Weighting = Weighting()
    solver: SolverParams = field(default_factory=SolverParams)
    gnc: GncParams = field(default_factory=GncParams)
    # GNC truncation in meters for ratio mode, where thresholds are unitless.
    ratio_truncation: float = 0.6
    score: ScoreParams = ScoreParams(mu=1.0, downsample_voxel=0.3)
    dof: str = SE3
    classes: Tuple[int, ...] = KITTI_CLASSES
    cluster_voxel: float = 0.5
    cluster_min_points: int = 10
    seed: int = 0

    def __post_init__(self):
        object.__setattr__(self, "trim_mode", TrimMode(self.trim_mode))
        object.__setattr__(self, "thresholds", tuple(check_thresholds(self.thresholds)))
        object.__setattr__(self, "classes", tuple(int(c) for c in self.classes))
        if self.dof not in DOFS:
            raise ValueError(f"dof must be one of {DOFS}")
        if self.ratio_truncation <= 0:
            raise ValueError("ratio_truncation must be positive")
        if self.cluster_voxel <= 0 or self.cluster_min_points < 1:
            raise ValueError("invalid clustering parameters")
        if not 0 <= int(self.seed) < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")

    @classmethod
    def outdoor(cls, **kw) -> "PipelineConfig":
        return cls(**kw)

    @classmethod
    def indoor(cls, **kw) -> "PipelineConfig":
        base = dict(
            trim_mode=TrimMode.DIFFERENCE,
            thresholds=INDOOR_THRESHOLDS,
            score=ScoreParams(mu=0.1, downsample_voxel=0.0),
            dof=SE2,
            classes=(1,),
            cluster_voxel=0.2,
            cluster_min_points=3,
        )
        base.update(kw)
        return cls(**base)

    def truncation(self, eps: float) -> float:
        """GNC truncation ``c`` for a layer built at threshold ``eps``."""
        if self.gnc.c is not None:
            return self.gnc.c
        if self.trim_mode is TrimMode.DIFFERENCE:
            return eps
        return self.ratio_truncation


def _floats(v: str):
    return tuple(float(x) for x in v.replace(",", " ").split())


def _ints(v: str):
    return tuple(int(x) for x in v.replace(",", " ").split())


def _bool(v: str) -> bool:
    s = v.strip().lower()
    if s in ("1", "true", "yes", "on"):
        return True
    if s in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _opt_float(v: str):
    return None if v.strip().lower() in ("none", "") else float(v)


_TOP = {
    "trim_mode": str.strip,
    "thresholds": _floats,
    "dof": lambda v: v.strip().upper(),
    "ratio_truncation": float,
    "classes": _ints,
    "cluster_voxel": float,
    "cluster_min_points": int,
    "seed": int,
}
_GROUPS = {
    "solver": {f.name: f.type for f in dataclasses.fields(SolverParams)},
    "gnc": {f.name: f.type for f in dataclasses.fields(GncParams)},
}
_SCORE_KEYS = {"mu": float, "variant": str.strip, "downsample_voxel": float}
_WEIGHT_KEYS = {"weighting", "gaussian_sigma"}

KNOWN_KEYS = (
    ["preset"]
    + sorted(_TOP)
    + sorted(_WEIGHT_KEYS)
    + [f"solver.{k}" for k in _GROUPS["solver"]]
    + [f"gnc.{k}" for k in _GROUPS["gnc"]]
    + [f"score.{k}" for k in _SCORE_KEYS]
)


def _convert_group(kind: str, value: str):
    kind = str(kind)
    if "bool" in kind:
        return _bool(value)
    if "Optional" in kind:
        return _opt_float(value)
    if "int" in kind:
        return int(value)
    return float(value)


def parse_config_text(text: str, source: str = "<config>") -> Dict[str, str]:
    entries: Dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ParseError("expected 'key = value'", source, lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in KNOWN_KEYS:
            raise ParseError(f"unknown key {key!r}", source, lineno)
        entries[key] = value
    return entries


def build_config(entries: Mapping[str, str], base: Optional[PipelineConfig] = None) -> PipelineConfig:
    """Apply string-valued overrides on top of ``base`` (or a preset)."""
    entries = dict(entries)
    preset = entries.pop("preset", None)
    if preset is not None:
        if preset not in ("outdoor", "indoor"):
            raise InputError(f"unknown preset {preset!r}")
        base = PipelineConfig.indoor() if preset == "indoor" else PipelineConfig.outdoor()
    cfg = base or PipelineConfig()
    top, groups = {}, {"solver": {}, "gnc": {}, "score": {}}
    weighting = {}
    try:
        for key, value in entries.items():
            if key in _TOP:
                top[key] = _TOP[key](value)
            elif key in _WEIGHT_KEYS:
                weighting[key] = value
            else:
                group, name = key.split(".", 1)
                if group == "score":
                    groups["score"][name] = _SCORE_KEYS[name](value)
                else:
                    groups[group][name] = _convert_group(_GROUPS[group][name], value)
        if groups["solver"]:
            top["solver"] = dataclasses.replace(cfg.solver, **groups["solver"])
        if groups["gnc"]:
            top["gnc"] = dataclasses.replace(cfg.gnc, **groups["gnc"])
        if groups["score"]:
            sc = groups["score"]
            top["score"] = ScoreParams(
                mu=sc.get("mu", cfg.score.mu),
                score_variant=sc.get("variant", cfg.score.score_variant),
                downsample_voxel=sc.get("downsample_voxel", cfg.score.downsample_voxel),
            )
        if weighting:
            kind = weighting.get("weighting", cfg.weighting.kind).strip()
            sigma = weighting.get("gaussian_sigma")
            top["weighting"] = Weighting(kind, _opt_float(sigma) if sigma is not None else cfg.weighting.sigma)
        return dataclasses.replace(cfg, **top)
    except (ValueError, TypeError, KeyError) as exc:
        raise InputError(f"invalid configuration: {exc}") from exc


def load_config(path, overrides: Optional[Mapping[str, str]] = None) -> PipelineConfig:
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise InputError(f"{path}: {exc.strerror or exc}") from exc
    entries = parse_config_text(text, str(path))
    entries.update(overrides or {})
    return build_config(entries)


def format_config(cfg: PipelineConfig) -> str:
    """Serialize every field in the same ``key = value`` format."""
    lines = [
        f"trim_mode = {cfg.trim_mode.value}",
        "thresholds = " + ", ".join(f"{e:g}" for e in cfg.thresholds),
        f"weighting = {cfg.weighting.kind}",
        f"gaussian_sigma = {cfg.weighting.sigma if cfg.weighting.sigma is not None else 'none'}",
        f"dof = {cfg.dof}",
        "classes = " + ", ".join(str(c) for c in cfg.classes),
        f"cluster_voxel = {cfg.cluster_voxel:g}",
        f"cluster_min_points = {cfg.cluster_min_points}",
        f"ratio_truncation = {cfg.ratio_truncation:g}",
        f"seed = {cfg.seed}",
    ]
    for f in dataclasses.fields(SolverParams):
        lines.append(f"solver.{f.name} = {getattr(cfg.solver, f.name)}")
    for f in dataclasses.fields(GncParams):
        v = getattr(cfg.gnc, f.name)
        lines.append(f"gnc.{f.name} = {'none' if v is None else v}")
    lines.append(f"score.mu = {cfg.score.mu:g}")
    lines.append(f"score.variant = {cfg.score.score_variant}")
    lines.append(f"score.downsample_voxel = {cfg.score.downsample_voxel:g}")
    return "\n".join(lines) + "\n"

