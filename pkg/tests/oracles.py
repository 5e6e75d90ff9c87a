"""Independent brute-force references used by the tests."""

import math

import numpy as np


def pairwise_edges(points, r):
    """Set of pairs (i, j), i < j, with |p_i - p_j| < r, by direct double loop."""
    out = set()
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if math.dist(points[i], points[j]) < r:
                out.add((i, j))
    return out


def adjacency(n, edges):
    adj = {v: set() for v in range(n)}
    for u, v in edges:
        adj[u].add(v)
        adj[v].add(u)
    return adj


def floyd_warshall(n, edges, weights=None):
    D = np.full((n, n), math.inf)
    np.fill_diagonal(D, 0.0)
    for e, (u, v) in enumerate(edges):
        w = 1.0 if weights is None else weights[e]
        D[u, v] = min(D[u, v], w)
        D[v, u] = min(D[v, u], w)
    for k in range(n):
        D = np.minimum(D, D[:, [k]] + D[[k], :])
    return D


def all_path_times(n, edges, weights, source):
    """Minimum total weight over every self-avoiding path from source (exhaustive)."""
    wmap = {}
    for (u, v), w in zip(edges, weights):
        wmap[(u, v)] = wmap[(v, u)] = w
    adj = adjacency(n, edges)
    best = [math.inf] * n
    best[source] = 0.0

    def walk(v, visited, t):
        for u in adj[v]:
            if u not in visited:
                tt = t + wmap[(v, u)]
                best[u] = min(best[u], tt)
                walk(u, visited | {u}, tt)

    walk(source, {source}, 0.0)
    return np.array(best)


def count_paths(n, edges, source, length):
    """Number of self-avoiding paths with ``length`` edges from source."""
    adj = adjacency(n, edges)

    def walk(v, visited, left):
        if left == 0:
            return 1
        return sum(walk(u, visited | {u}, left - 1) for u in adj[v] if u not in visited)

    return walk(source, {source}, length)


def nearest_by_scan(points, candidates, x):
    """Closest candidate to x; exact ties go to the lexicographically smallest point."""
    best = None
    for c in candidates:
        key = (float(np.sum((points[c] - x) ** 2)), tuple(points[c]))
        if best is None or key < best[0]:
            best = (key, c)
    return best[1]


def components_by_bfs(n, edges):
    adj = adjacency(n, edges)
    label = [-1] * n
    comp = 0
    for s in range(n):
        if label[s] >= 0:
            continue
        stack = [s]
        label[s] = comp
        while stack:
            v = stack.pop()
            for u in adj[v]:
                if label[u] < 0:
                    label[u] = comp
                    stack.append(u)
        comp += 1
    return label


def same_partition(a, b):
    pairs = {}
    for x, y in zip(a, b):
        if pairs.setdefault(x, y) != y:
            return False
    return len(set(pairs.values())) == len(pairs)


def disk_fraction_in_square(x0, x1, y0, y1, n=2000):
    """Area of [x0,x1]x[y0,y1] inside the unit disk by fine midpoint quadrature."""
    xs = np.linspace(x0, x1, n + 1)
    mid = (xs[:-1] + xs[1:]) / 2
    top = np.clip(np.sqrt(np.clip(1 - mid**2, 0, None)), y0, y1)
    bot = np.clip(-np.sqrt(np.clip(1 - mid**2, 0, None)), y0, y1)
    return float(np.sum(top - bot) * (x1 - x0) / n)
