"""Independent brute-force reference implementations used only by the tests.

None of these share code paths with the library: they work from plain edge
lists and adjacency matrices.
"""

from __future__ import annotations

import itertools
import math
import random
from collections import deque

import numpy as np


def random_edge_list(n, p, rng):
    return [(i, j) for i, j in itertools.combinations(range(n), 2) if rng.random() < p]


def adjacency(n, edges, weights=None):
    A = np.zeros((n, n))
    for idx, (i, j) in enumerate(edges):
        w = 1.0 if weights is None else weights[idx]
        A[i, j] += w
        A[j, i] += w
    return A


def modularity_pairwise(A, labels, gamma=1.0):
    """(1/2L) * sum over same-community ordered pairs of (A_ij - gamma k_i k_j / 2L)."""
    k = A.sum(axis=1)
    two_L = A.sum()
    total = 0.0
    n = len(labels)
    for i in range(n):
        for j in range(n):
            if labels[i] == labels[j]:
                total += A[i, j] - gamma * k[i] * k[j] / two_L
    return total / two_L


def set_partitions(items):
    """All set partitions as label lists (restricted growth strings)."""
    n = len(items)
    if n == 0:
        yield []
        return

    def rec(prefix, m):
        if len(prefix) == n:
            yield list(prefix)
            return
        for c in range(m + 1):
            prefix.append(c)
            yield from rec(prefix, max(m, c + 1))
            prefix.pop()

    yield from rec([0], 1)


def clustering_triangles(n, edges):
    """Local clustering by enumerating every neighbour pair explicitly."""
    adj = [set() for _ in range(n)]
    for i, j in edges:
        adj[i].add(j)
        adj[j].add(i)
    out = []
    for i in range(n):
        nb = sorted(adj[i])
        k = len(nb)
        if k < 2:
            out.append(0.0)
            continue
        links = sum(1 for a, b in itertools.combinations(nb, 2) if b in adj[a])
        out.append(links / math.comb(k, 2))
    return out


def assortativity_pearson(n, edges):
    deg = [0] * n
    for i, j in edges:
        deg[i] += 1
        deg[j] += 1
    xs, ys = [], []
    for i, j in edges:
        xs += [deg[i] - 1, deg[j] - 1]
        ys += [deg[j] - 1, deg[i] - 1]
    x, y = np.array(xs, float), np.array(ys, float)
    xm, ym = x - x.mean(), y - y.mean()
    den = math.sqrt((xm * xm).sum() * (ym * ym).sum())
    return None if den == 0 else float((xm * ym).sum() / den)


def all_pairs_bfs(n, edges):
    adj = [[] for _ in range(n)]
    for i, j in edges:
        adj[i].append(j)
        adj[j].append(i)
    dist = {}
    for s in range(n):
        d = {s: 0}
        q = deque([s])
        while q:
            u = q.popleft()
            for v in adj[u]:
                if v not in d:
                    d[v] = d[u] + 1
                    q.append(v)
        dist[s] = d
    return dist


def lcc_path_stats(n, edges):
    dist = all_pairs_bfs(n, edges)
    comps = {}
    for s in range(n):
        comps.setdefault(frozenset(dist[s]), s)
    best = max(comps, key=lambda c: (len(c), -min(c)))
    nodes = sorted(best)
    pairs = [(a, b) for a in nodes for b in nodes if a != b]
    if not pairs:
        return 0, 0.0
    ds = [dist[a][b] for a, b in pairs]
    return max(ds), sum(ds) / len(ds)


def rng(seed):
    return random.Random(seed)
