"""Robust rigid pose estimation from clique-selected landmark pairs."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import List, Optional, Sequence

import numpy as np

from .errors import (
    DegenerateConfigurationError,
    EstimationFailedError,
    InsufficientPairsError,
    RegistrationError,
)
from .geometry import SE2, SE3, RigidMotion, apply, rot_z

MIN_PAIRS = {SE3: 3, SE2: 2}

_RANK_TOL = 1e-9


@dataclass
class GncParams:
    """``c`` is the truncation distance in meters; ``None`` lets the caller pick it."""

    c: Optional[float] = None
    mu_update_factor: float = 1.4
    max_iterations: int = 100
    weight_tolerance: float = 1e-6

    def __post_init__(self):
        if self.c is not None and self.c <= 0:
            raise ValueError("truncation c must be positive")
        if self.mu_update_factor <= 1:
            raise ValueError("mu_update_factor must exceed 1")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be positive")


@dataclass
class GncResult:
    transform: RigidMotion
    weights: np.ndarray
    inliers: np.ndarray
    iterations: int


def _check_pairs(p, q, w):
    p = np.asarray(p, dtype=float).reshape(-1, 3)
    q = np.asarray(q, dtype=float).reshape(-1, 3)
    if p.shape != q.shape:
        raise ValueError("source and target pair arrays differ in shape")
    w = np.ones(len(p)) if w is None else np.asarray(w, dtype=float).reshape(-1)
    if len(w) != len(p):
        raise ValueError("one weight per pair required")
    if np.any(w < 0) or np.any(w > 1):
        raise ValueError("weights must lie in [0, 1]")
    return p, q, w


def weighted_closed_form(p, q, w=None, dof: str = SE3) -> RigidMotion:
    """Weighted least-squares rigid alignment of ``p`` onto ``q`` (SVD, reflection-corrected)."""
    p, q, w = _check_pairs(p, q, w)
    active = w > 0
    if active.sum() < MIN_PAIRS[dof]:
        raise InsufficientPairsError(f"{dof} needs {MIN_PAIRS[dof]} weighted pairs, got {int(active.sum())}")
    p, q, w = p[active], q[active], w[active]
    wn = w / w.sum()
    pc = wn @ p
    qc = wn @ q
    P = p - pc
    Q = q - qc
    if dof == SE2:
        H = (P[:, :2] * wn[:, None]).T @ Q[:, :2]
        U, S, Vt = np.linalg.svd(H)
        scale = max(np.abs(P[:, :2]).max(), np.abs(Q[:, :2]).max(), 1.0)
        if S[0] <= _RANK_TOL * scale**2:
            raise DegenerateConfigurationError("all planar pairs coincide")
        D = np.diag([1.0, np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0])
        R2 = Vt.T @ D @ U.T
        R = rot_z(np.arctan2(R2[1, 0], R2[0, 0]))
        t = qc - R @ pc
        t[2] = 0.0
        return RigidMotion(R, t, SE2)
    H = (P * wn[:, None]).T @ Q
    U, S, Vt = np.linalg.svd(H)
    if S[0] <= 0 or S[1] <= _RANK_TOL * S[0]:
        raise DegenerateConfigurationError("pairs are collinear; rotation is not determined")
    D = np.diag([1.0, 1.0, np.sign(np.linalg.det(Vt.T @ U.T)) or 1.0])
    R = Vt.T @ D @ U.T
    # Re-orthonormalize to wash out round-off before the invariant checks.
    u, _, vt = np.linalg.svd(R)
    R = u @ vt
    t = qc - R @ pc
    return RigidMotion(R, t, SE3)


def residuals(T: RigidMotion, p, q) -> np.ndarray:
    return np.linalg.norm(np.asarray(q) - apply(T, p), axis=1)


def tls_weights(r: np.ndarray, mu: float, c: float) -> np.ndarray:
    """GNC weight update for the truncated least squares cost at surrogate level ``mu``."""
    r2 = np.square(r)
    c2 = c * c
    w = np.empty_like(r2)
    lo = r2 <= (mu / (mu + 1.0)) * c2
    hi = r2 >= ((mu + 1.0) / mu) * c2
    mid = ~(lo | hi)
    w[lo] = 1.0
    w[hi] = 0.0
    w[mid] = c * np.sqrt(mu * (mu + 1.0)) / r[mid] - mu
    return np.clip(w, 0.0, 1.0)


def gnc_tls_solve(p, q, params: GncParams = None, dof: str = SE3, c: Optional[float] = None) -> GncResult:
    """Graduated non-convexity over ``sum min(||q - R p - t||, c)``.

    Starts from the unweighted least-squares fit, then alternates a weight
    update with a weighted closed-form solve while the surrogate parameter
    ``mu`` grows geometrically. Stops once the weights are binary and stable.
    """
    params = params or GncParams()
    c = c if c is not None else params.c
    if c is None or c <= 0:
        raise ValueError("a positive truncation c is required")
    p, q, _ = _check_pairs(p, q, None)
    w = np.ones(len(p))
    T = weighted_closed_form(p, q, w, dof)
    r = residuals(T, p, q)
    rmax2 = float(np.max(np.square(r)))
    if 2.0 * rmax2 <= c * c:
        # Every residual is already inside the quadratic region.
        return GncResult(T, w, w >= 0.5, 0)
    mu = c * c / (2.0 * rmax2 - c * c)
    it = 0
    for it in range(1, params.max_iterations + 1):
        w_new = tls_weights(r, mu, c)
        if not w_new.any():
            raise EstimationFailedError("all GNC weights collapsed to zero")
        try:
            T = weighted_closed_form(p, q, w_new, dof)
        except DegenerateConfigurationError as exc:
            raise EstimationFailedError(f"GNC lost support: {exc}") from exc
        r = residuals(T, p, q)
        dw = float(np.max(np.abs(w_new - w)))
        w = w_new
        binary = bool(np.all((w <= params.weight_tolerance) | (w >= 1.0 - params.weight_tolerance)))
        if dw < params.weight_tolerance and binary:
            break
        mu *= params.mu_update_factor
    return GncResult(T, w, w >= 0.5, it)


@dataclass
class Candidate:
    """One pyramid layer's pose hypothesis. ``transform`` is None on failure."""

    layer: int
    eps: float
    clique: List[int]
    transform: Optional[RigidMotion] = None
    error: Optional[str] = None
    inliers: Optional[np.ndarray] = None
    shared_with: Optional[int] = None
    seconds: float = 0.0

    @property
    def failed(self) -> bool:
        return self.transform is None


def solve_candidates(cliques, corrs, src, tgt, params: GncParams = None, dof: str = SE3,
                     truncations: Optional[Sequence[float]] = None,
                     thresholds: Optional[Sequence[float]] = None) -> List[Candidate]:
    """Run GNC once per distinct clique and return one candidate per layer.

    ``truncations`` gives the per-layer ``c`` when ``params.c`` is unset.
    Layers whose clique repeats an earlier one reuse that transform.
    """
    params = params or GncParams()
    k = len(cliques)
    thresholds = list(thresholds) if thresholds is not None else [float("nan")] * k
    out: List[Candidate] = []
    seen = {}
    for i, sol in enumerate(cliques):
        members = list(sol.clique)
        cand = Candidate(layer=i, eps=thresholds[i], clique=members)
        key = tuple(sorted(members))
        if key in seen:
            first = out[seen[key]]
            cand.transform, cand.error, cand.inliers = first.transform, first.error, first.inliers
            cand.shared_with = first.layer
            out.append(cand)
            continue
        if len(members) < MIN_PAIRS[dof]:
            cand.error = f"clique of size {len(members)} is below the {dof} minimum of {MIN_PAIRS[dof]}"
            out.append(cand)
            continue
        seen[key] = i
        c = params.c if params.c is not None else (truncations[i] if truncations is not None else None)
        p = src.points[[corrs[m].src_idx for m in members]]
        q = tgt.points[[corrs[m].tgt_idx for m in members]]
        t0 = time.perf_counter()
        try:
            res = gnc_tls_solve(p, q, params, dof, c=c)
            cand.transform, cand.inliers = res.transform, res.inliers
        except RegistrationError as exc:
            cand.error = str(exc)
        cand.seconds = time.perf_counter() - t0
        out.append(cand)
    return out
