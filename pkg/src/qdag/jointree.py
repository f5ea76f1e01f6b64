"""Secondary structure for clustering: moral graph, min-fill triangulation,
join tree, and placement of CPTs and evidence indicators on clusters."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .network import BeliefNetwork


@dataclass(frozen=True)
class MoralGraph:
    vertices: tuple[str, ...]
    edges: frozenset[frozenset[str]]

    def adjacency(self) -> dict[str, set[str]]:
        adj: dict[str, set[str]] = {v: set() for v in self.vertices}
        for e in self.edges:
            a, b = tuple(e)
            adj[a].add(b)
            adj[b].add(a)
        return adj


@dataclass(frozen=True)
class Triangulation:
    order: tuple[str, ...]
    graph: MoralGraph
    cliques: tuple[tuple[str, ...], ...]
    fill: tuple[tuple[str, str], ...] = ()


@dataclass(frozen=True)
class ClusterTree:
    """Clusters (variable tuples in declaration order) joined by tree edges.

    ``assignment`` maps each variable to the cluster holding its CPT and
    ``attachment`` each evidence variable to the cluster holding its
    indicator nodes.  Both are empty until :func:`assign_cpts` runs.
    """

    clusters: tuple[tuple[str, ...], ...]
    edges: tuple[tuple[int, int], ...]
    assignment: Mapping[str, int] = field(default_factory=dict)
    attachment: Mapping[str, int] = field(default_factory=dict)

    def separator(self, i: int, j: int) -> tuple[str, ...]:
        other = set(self.clusters[j])
        return tuple(v for v in self.clusters[i] if v in other)

    def neighbors(self, i: int) -> list[int]:
        out = []
        for a, b in self.edges:
            if a == i:
                out.append(b)
            elif b == i:
                out.append(a)
        return sorted(out)

    def path(self, i: int, j: int) -> list[int]:
        """Clusters on the tree path from ``i`` to ``j`` inclusive."""
        prev = {i: -1}
        stack = [i]
        while stack:
            k = stack.pop()
            for n in self.neighbors(k):
                if n not in prev:
                    prev[n] = k
                    stack.append(n)
        if j not in prev:
            raise ValueError(f"clusters {i} and {j} are not connected")
        out = [j]
        while out[-1] != i:
            out.append(prev[out[-1]])
        return out[::-1]

    def home(self, var: str) -> int:
        """Lowest-indexed cluster containing ``var``."""
        for i, c in enumerate(self.clusters):
            if var in c:
                return i
        raise KeyError(var)


def moralize(bn: BeliefNetwork) -> MoralGraph:
    edges = set()
    for p, c in bn.edges:
        edges.add(frozenset((p, c)))
    for v in bn.names:
        for a, b in itertools.combinations(bn.parents(v), 2):
            edges.add(frozenset((a, b)))
    return MoralGraph(bn.names, frozenset(e for e in edges if len(e) == 2))


def _fill_in(adj: Mapping[str, set[str]], v: str) -> list[tuple[str, str]]:
    nbrs = sorted(adj[v])
    return [(a, b) for a, b in itertools.combinations(nbrs, 2) if b not in adj[a]]


def triangulate(g: MoralGraph) -> Triangulation:
    """Greedy min-fill elimination; ties go to the earliest vertex in ``g``.

    Returns the elimination order, the chordal supergraph, and its maximal
    cliques in the order they are first produced by elimination.
    """
    rank = {v: k for k, v in enumerate(g.vertices)}
    work = g.adjacency()
    chordal = {e for e in g.edges}
    order: list[str] = []
    fill: list[tuple[str, str]] = []
    candidates: list[frozenset[str]] = []
    while work:
        v = min(work, key=lambda u: (len(_fill_in(work, u)), rank[u]))
        for a, b in _fill_in(work, v):
            work[a].add(b)
            work[b].add(a)
            chordal.add(frozenset((a, b)))
            fill.append((a, b))
        candidates.append(frozenset(work[v] | {v}))
        for n in work[v]:
            work[n].discard(v)
        del work[v]
        order.append(v)
    cliques = []
    for k, c in enumerate(candidates):
        if any(c < d for d in candidates) or c in candidates[:k]:
            continue
        cliques.append(tuple(sorted(c, key=rank.__getitem__)))
    return Triangulation(tuple(order), MoralGraph(g.vertices, frozenset(chordal)),
                         tuple(cliques), tuple(fill))


def build_join_tree(cliques: Sequence[Sequence[str]]) -> ClusterTree:
    """Maximum-weight spanning tree over the clique graph (weight = separator
    size), Kruskal with ties broken by the smaller clique index pair.

    Zero-weight edges are included so disconnected networks still yield one
    tree; their separators are empty.
    """
    clusters = tuple(tuple(c) for c in cliques)
    pairs = []
    for i, j in itertools.combinations(range(len(clusters)), 2):
        w = len(set(clusters[i]) & set(clusters[j]))
        pairs.append((-w, i, j))
    pairs.sort()
    root = list(range(len(clusters)))

    def find(x):
        while root[x] != x:
            root[x] = root[root[x]]
            x = root[x]
        return x

    edges = []
    for _, i, j in pairs:
        a, b = find(i), find(j)
        if a != b:
            root[b] = a
            edges.append((i, j))
    return ClusterTree(clusters, tuple(edges))


def assign_cpts(tree: ClusterTree, bn: BeliefNetwork,
                evidence_vars: Iterable[str] = ()) -> ClusterTree:
    """Put each CPT and each evidence indicator in the lowest-indexed cluster
    that covers it."""
    assignment = {}
    for v in bn.names:
        fam = set(bn.family(v))
        for i, c in enumerate(tree.clusters):
            if fam <= set(c):
                assignment[v] = i
                break
        else:
            raise ValueError(f"no cluster covers the family of {v}")
    attachment = {v: tree.home(v) for v in bn.names if v in set(evidence_vars)}
    return ClusterTree(tree.clusters, tree.edges, assignment, attachment)


def join_tree(bn: BeliefNetwork, evidence_vars: Iterable[str] = ()) -> ClusterTree:
    """moralize -> triangulate -> build_join_tree -> assign_cpts."""
    tri = triangulate(moralize(bn))
    return assign_cpts(build_join_tree(tri.cliques), bn, evidence_vars)


def has_running_intersection(tree: ClusterTree) -> bool:
    variables = {v for c in tree.clusters for v in c}
    for v in variables:
        holders = [i for i, c in enumerate(tree.clusters) if v in c]
        for i, j in itertools.combinations(holders, 2):
            if any(v not in tree.clusters[k] for k in tree.path(i, j)):
                return False
    return True
