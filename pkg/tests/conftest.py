import random

from ftdo.graph import Graph


def complete_graph(n):
    return Graph(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def complete_edges(n, offset=0):
    return [(i + offset, j + offset) for i in range(n) for j in range(i + 1, n)]


def random_graph(n, p, seed):
    rng = random.Random(seed)
    edges = [
        (i, j) for i in range(n) for j in range(i + 1, n) if rng.random() < p
    ]
    return Graph(n, edges)


def random_deletions(g, f, seed):
    rng = random.Random(seed)
    return frozenset(rng.sample(sorted(g.edge_ids), min(f, g.m)))
