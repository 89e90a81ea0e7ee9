"""Brute-force reference implementations used by the tests."""

from itertools import combinations

import numpy as np


def max_clique_size(W) -> int:
    """Exact maximum clique size by exhaustive subset search (n <= ~16)."""
    W = np.asarray(W)
    n = len(W)
    adj = [0] * n
    for i in range(n):
        for j in range(n):
            if i != j and W[i, j] > 0:
                adj[i] |= 1 << j
    best = 0
    for mask in range(1, 1 << n):
        size = bin(mask).count("1")
        if size <= best:
            continue
        m, ok = mask, True
        while m:
            i = (m & -m).bit_length() - 1
            m &= m - 1
            if (mask & ~(1 << i)) & ~adj[i]:
                ok = False
                break
        if ok:
            best = size
    return best


def is_clique(W, idx) -> bool:
    return all(W[i, j] > 0 for i, j in combinations(idx, 2))


def random_graph(rng, n, density):
    U = rng.random((n, n)) < density
    W = np.triu(U, 1)
    W = (W | W.T).astype(float)
    np.fill_diagonal(W, 1.0)
    return W
