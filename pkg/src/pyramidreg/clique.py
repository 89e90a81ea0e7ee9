"""Densest-clique solver on consistency graphs.

Each layer solves the relaxation

    maximize  x^T W_d x   subject to  x >= 0, ||x|| <= 1

where ``W_d`` equals ``W`` on nonzero entries and ``-d`` where ``W`` is zero.
Projected gradient ascent runs to convergence at fixed ``d``; ``d`` then grows
until no zero-affinity pair is jointly supported. Layers of a pyramid are
solved in order, each warm-started from the previous solution.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import List, Optional

import numpy as np

from .errors import EmptyCliqueError
from .graph import AffinityMatrix, PyramidGraph


@dataclass
class SolverParams:
    max_outer_iters: int = 200
    max_inner_iters: int = 200
    x_tolerance: float = 1e-8
    # Pairs (i, j) with W(i, j) == 0 and x_i * x_j above this are violations.
    violation_tolerance: float = 1e-6
    # Relative margin added on top of the smallest repelling penalty.
    d_margin: float = 0.1
    # Carry the final penalty of layer i into layer i + 1 of a cascade.
    carry_penalty: bool = True
    min_step: float = 1e-12

    def __post_init__(self):
        for name in ("max_outer_iters", "max_inner_iters"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        for name in ("x_tolerance", "violation_tolerance", "d_margin", "min_step"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")


@dataclass
class AscentResult:
    x: np.ndarray
    W_d: np.ndarray
    d: float
    converged: bool
    inner_iters: int
    outer_iters: int


@dataclass
class CliqueSolution:
    x: np.ndarray
    clique: List[int]
    density: float
    converged: bool = True
    inner_iters: int = 0
    outer_iters: int = 0
    seconds: float = 0.0
    d: float = 0.0
    error: Optional[str] = None

    @property
    def size(self) -> int:
        return len(self.clique)

    @property
    def failed(self) -> bool:
        return not self.clique


def _project(x: np.ndarray) -> np.ndarray:
    # Clamp, then normalize onto the unit sphere. The ball maximizer lies on
    # the sphere (the optimum is at least 1 > 0), and staying there keeps a
    # negative objective from dragging iterates toward the origin.
    y = np.maximum(x, 0.0)
    nrm2 = y @ y
    if nrm2 > 0.0:
        y /= np.sqrt(nrm2)
    return y


def _max_violation(x, C) -> float:
    if not C.any():
        return 0.0
    return float(np.max(np.where(C, np.outer(x, x), 0.0)))


def projected_gradient_ascent(W, x0, params: SolverParams = None, d0: float = 0.0) -> AscentResult:
    """Maximize ``x^T W_d x`` over the nonnegative unit ball with a penalty homotopy.

    At each fixed ``d`` the ascent uses a backtracking step (halving from 1)
    and accepts only strict increases of the objective, so the objective is
    non-decreasing within a penalty level. When converged with a violated
    zero-affinity pair, ``d`` is raised to the smallest value at which some
    supported vertex with a conflicting neighbor stops being pulled up, plus
    a relative margin.
    """
    params = params or SolverParams()
    W = np.asarray(W.W if isinstance(W, AffinityMatrix) else W, dtype=float)
    n = W.shape[0]
    x = np.asarray(x0, dtype=float).copy()
    if x.shape != (n,):
        raise ValueError(f"x0 must have shape ({n},)")
    if np.any(x < 0) or np.linalg.norm(x) <= 0:
        raise ValueError("x0 must be nonnegative and nonzero")
    x = _project(x)
    C = W == 0
    Cf = C.astype(float)
    any_zero = bool(C.any())
    d = float(d0)
    inner_total = 0
    converged = False
    outer = 0
    for outer in range(1, params.max_outer_iters + 1):
        W_d = W - d * Cf
        Wx = W_d @ x
        F = x @ Wx
        moved = False
        for _ in range(params.max_inner_iters):
            g = 2.0 * Wx
            alpha = 1.0
            accepted = False
            while alpha >= params.min_step:
                xn = _project(x + alpha * g)
                Wxn = W_d @ xn
                Fn = xn @ Wxn
                if Fn > F and xn.any():
                    accepted = True
                    break
                alpha *= 0.5
            if not accepted:
                break
            inner_total += 1
            moved = True
            diff = xn - x
            x, Wx, F = xn, Wxn, Fn
            if diff @ diff < params.x_tolerance**2:
                break
        if not any_zero or _max_violation(x, C) <= params.violation_tolerance:
            converged = True
            break
        Wx = W @ x
        Cx = Cf @ x
        # (W_d x)_k = Wx_k - d * Cx_k turns non-positive once d >= Wx_k / Cx_k;
        # pick the supported vertex that gives way first.
        sup = np.flatnonzero((x > 0) & (Cx > 0))
        ratio = Wx[sup] / Cx[sup]
        if not moved and d > 0:
            # Symmetric saddle: the sphere gradient vanishes and no penalty
            # level can break the tie, so drop the weakest vertex outright.
            x[sup[np.argmin(ratio)]] = 0.0
            x /= np.sqrt(x @ x)
            continue
        d_need = float(np.min(ratio))
        d = max(d_need * (1.0 + params.d_margin), d * (1.0 + params.d_margin), params.x_tolerance)
    return AscentResult(x, W_d, d, converged, inner_total, outer)


def _is_clique(W, idx) -> bool:
    if len(idx) < 2:
        return True
    sub = W[np.ix_(idx, idx)]
    return bool(np.all(sub > 0))


def _is_binary(W) -> bool:
    return bool(np.all((W == 0) | (W == 1)))


def round_clique(x, W_d, W) -> CliqueSolution:
    """Pick the ``round(x^T W_d x)`` largest entries of ``x``, then repair.

    Ties prefer lower indices. If the chosen set is not pairwise connected
    in ``W``, the member with the smallest ``x`` (the higher index on ties)
    is dropped until it is.
    """
    W = np.asarray(W.W if isinstance(W, AffinityMatrix) else W, dtype=float)
    x = np.asarray(x, dtype=float)
    F = float(x @ W_d @ x)
    omega = int(np.floor(F + 0.5))
    if omega < 1:
        raise EmptyCliqueError(f"rounded clique size {omega} < 1 (objective {F:.6g})")
    order = np.lexsort((np.arange(len(x)), -x))
    chosen = list(order[: min(omega, len(x))])
    while not _is_clique(W, chosen):
        # chosen is ordered by decreasing x then increasing index; drop the tail.
        chosen.pop()
    clique = sorted(int(i) for i in chosen)
    if _is_binary(W):
        density = float(len(clique))
    else:
        density = F
    return CliqueSolution(x=x, clique=clique, density=density)


def solve_layer(W, x0, params: SolverParams = None, d0: float = 0.0) -> CliqueSolution:
    params = params or SolverParams()
    t0 = time.perf_counter()
    res = projected_gradient_ascent(W, x0, params, d0)
    sol = round_clique(res.x, res.W_d, W)
    sol.converged = res.converged
    sol.inner_iters = res.inner_iters
    sol.outer_iters = res.outer_iters
    sol.d = res.d
    sol.seconds = time.perf_counter() - t0
    return sol


def random_start(n: int, rng: np.random.Generator) -> np.ndarray:
    # 1 - U[0, 1) lies in (0, 1], so every entry is strictly positive.
    return 1.0 - rng.random(n)


def cascaded_solve(pyramid: PyramidGraph, params: SolverParams = None, seed: int = 0) -> List[CliqueSolution]:
    """Solve every layer sparse to dense, reusing each solution as the next start."""
    params = params or SolverParams()
    rng = np.random.default_rng(seed)
    solutions = []
    x_prev = None
    d_prev = 0.0
    for layer in pyramid.layers:
        n = layer.n
        x0 = random_start(n, rng) if x_prev is None else x_prev
        d0 = d_prev if (x_prev is not None and params.carry_penalty) else 0.0
        t0 = time.perf_counter()
        try:
            sol = solve_layer(layer.W, x0, params, d0)
        except EmptyCliqueError as exc:
            sol = CliqueSolution(x=np.zeros(n), clique=[], density=0.0, converged=False,
                                 seconds=time.perf_counter() - t0, error=str(exc))
        solutions.append(sol)
        if sol.failed:
            x_prev, d_prev = None, 0.0
        else:
            x_prev, d_prev = sol.x, sol.d
    return solutions
