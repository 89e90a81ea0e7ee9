import numpy as np
import pytest

from pyramidreg.clique import (
    SolverParams, cascaded_solve, projected_gradient_ascent, random_start, round_clique, solve_layer,
)
from pyramidreg.correspondence import TrimMode, all_to_all
from pyramidreg.errors import EmptyCliqueError
from pyramidreg.graph import AffinityMatrix, PyramidGraph, build_pyramid
from pyramidreg.ingestion import LandmarkSet

from oracles import is_clique, max_clique_size, random_graph


def test_complete_graph_uniform_optimum():
    W = np.ones((3, 3))
    res = projected_gradient_ascent(W, np.array([0.2, 0.5, 0.9]))
    assert np.allclose(res.x, np.ones(3) / np.sqrt(3), atol=1e-6)
    assert res.x @ res.W_d @ res.x == pytest.approx(3.0, abs=1e-9)


def test_edgeless_graph_picks_one_vertex():
    W = np.eye(2)
    res = projected_gradient_ascent(W, np.array([0.8, 0.6]))
    sol = round_clique(res.x, res.W_d, W)
    assert sol.clique == [0]
    assert res.x @ res.W_d @ res.x == pytest.approx(1.0, abs=1e-6)


def test_pendant_vertex_dropped():
    W = np.zeros((5, 5))
    W[:4, :4] = 1
    W[0, 4] = W[4, 0] = 1
    W[4, 4] = 1
    sol = solve_layer(W, np.ones(5))
    assert sol.clique == [0, 1, 2, 3]
    assert set(np.flatnonzero(sol.x > 1e-6)) == {0, 1, 2, 3}


def test_round_two_triangles():
    W = np.zeros((6, 6))
    W[:3, :3] = 1
    W[3:, 3:] = 1
    x = np.r_[np.ones(3), np.zeros(3)] / np.sqrt(3)
    sol = round_clique(x, W, W)
    assert sol.clique == [0, 1, 2] and sol.size == 3


def test_round_repairs_to_valid_clique():
    W = np.eye(3)
    W[0, 1] = W[1, 0] = 0.0
    x = np.array([0.9, 0.3, 0.3])
    sol = round_clique(x, W, W)
    assert sol.clique == [0]


def test_round_empty_raises():
    W = np.eye(2)
    with pytest.raises(EmptyCliqueError):
        round_clique(np.array([0.1, 0.1]), W, W)


def test_objective_monotone_at_fixed_penalty(rng):
    W = random_graph(rng, 12, 0.5)
    params = SolverParams(max_outer_iters=1)
    x = random_start(12, rng)
    prev = -np.inf
    for k in range(1, 30):
        res = projected_gradient_ascent(W, x, SolverParams(max_outer_iters=1, max_inner_iters=k))
        F = res.x @ res.W_d @ res.x
        assert F >= prev - 1e-12
        prev = F


def test_solution_feasible_and_valid(rng):
    for _ in range(30):
        n = int(rng.integers(5, 16))
        W = random_graph(rng, n, rng.uniform(0.2, 0.6))
        sol = solve_layer(W, random_start(n, rng))
        assert np.all(sol.x >= 0) and np.linalg.norm(sol.x) <= 1 + 1e-9
        assert is_clique(W, sol.clique)
        zero = W == 0
        assert np.max(np.outer(sol.x, sol.x)[zero], initial=0.0) <= 1e-6


def test_oracle_agreement_sample(rng):
    hits = 0
    for _ in range(40):
        n = int(rng.integers(5, 13))
        W = random_graph(rng, n, rng.uniform(0.2, 0.6))
        hits += solve_layer(W, random_start(n, rng)).size == max_clique_size(W)
    assert hits >= 36


def _pyramid(Ws):
    return PyramidGraph([AffinityMatrix(W, 0.1 * (i + 1)) for i, W in enumerate(Ws)], [])


def test_single_layer_cascade_matches_direct(rng):
    W = random_graph(rng, 10, 0.5)
    sols = cascaded_solve(_pyramid([W]), seed=7)
    x0 = random_start(10, np.random.default_rng(7))
    direct = solve_layer(W, x0)
    assert sols[0].clique == direct.clique
    assert np.allclose(sols[0].x, direct.x)


def test_identical_layers_warm_start_cheaper(rng):
    W = random_graph(rng, 12, 0.5)
    sols = cascaded_solve(_pyramid([W, W]), seed=3)
    assert sols[0].clique == sols[1].clique
    assert sols[1].inner_iters <= sols[0].inner_iters


def test_nested_layers_give_nested_cliques(rng):
    nested = 0
    trials = 20
    for t in range(trials):
        P = rng.uniform(-20, 20, size=(8, 3))
        src = LandmarkSet(P, np.ones(8, dtype=int))
        tgt = LandmarkSet(P[:5] + rng.normal(scale=0.05, size=(5, 3)), np.ones(5, dtype=int))
        corrs = all_to_all(src, tgt)
        pyr = build_pyramid(corrs, src, tgt, TrimMode.DIFFERENCE, [0.3, 0.6])
        sols = cascaded_solve(pyr, seed=t)
        assert all(is_clique(l.W, s.clique) for l, s in zip(pyr.layers, sols))
        nested += set(sols[0].clique) <= set(sols[1].clique)
    assert nested >= 0.9 * trials


def test_params_validation():
    with pytest.raises(ValueError):
        SolverParams(max_outer_iters=0)
    with pytest.raises(ValueError):
        projected_gradient_ascent(np.eye(2), np.array([-1.0, 1.0]))
