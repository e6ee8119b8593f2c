"""Shared graph builders for the test suite."""

from __future__ import annotations

import numpy as np

from netpos import Graph


def er_graph(n: int, p: float, seed: int) -> Graph:
    """Erdos-Renyi G(n, p) graph, deterministic per seed."""
    rng = np.random.default_rng(seed)
    edges = [(i, j) for i in range(n) for j in range(i + 1, n)
             if rng.random() < p]
    return Graph.from_edges(n, edges)


def path_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, i + 1) for i in range(n - 1)])


def star_graph(leaves: int) -> Graph:
    """Center is vertex 0."""
    return Graph.from_edges(leaves + 1, [(0, i + 1) for i in range(leaves)])


def complete_graph(n: int) -> Graph:
    return Graph.from_edges(n, [(i, j) for i in range(n) for j in range(i + 1, n)])


def pa_snapshots(n1: int, n2: int, seed: int, m_links: int = 2) -> tuple[Graph, Graph]:
    """Two nested snapshots of a preferential-attachment growth process."""
    rng = np.random.default_rng(seed)
    edges = [(0, 1)]
    targets = [0, 1, 0, 1]
    for v in range(2, n2):
        chosen: set[int] = set()
        while len(chosen) < min(m_links, v):
            chosen.add(targets[rng.integers(len(targets))])
        for t in chosen:
            edges.append((t, v))
            targets.extend((t, v))
    early = [(u, w) for u, w in edges if u < n1 and w < n1]
    return Graph.from_edges(n1, early), Graph.from_edges(n2, edges)
