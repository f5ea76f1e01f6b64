"""Ordinary numeric join-tree clustering with operation counters.

Runs the same tree and message schedule as the symbolic compiler but on
floats, counting every binary multiplication and addition.  Used to check
that a compiled Q-DAG never has more operation nodes than the numeric run
performs operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

from .compiler import Schedule, _assignments
from .jointree import ClusterTree
from .network import BeliefNetwork


@dataclass
class OpCounter:
    mul: int = 0
    add: int = 0

    def product(self, xs: Sequence[float]) -> float:
        if not xs:
            return 1.0
        acc = xs[0]
        for x in xs[1:]:
            acc *= x
            self.mul += 1
        return acc

    def total(self, xs: Sequence[float]) -> float:
        if not xs:
            return 0.0
        acc = xs[0]
        for x in xs[1:]:
            acc += x
            self.add += 1
        return acc


@dataclass
class NumericClustering:
    bn: BeliefNetwork
    tree: ClusterTree
    evidence: Mapping[str, str] = field(default_factory=dict)
    ops: OpCounter = field(default_factory=OpCounter)

    def __post_init__(self):
        self.cards = {v.name: v.card for v in self.bn.variables}
        self.psi: list[list[float]] = []
        self.messages: dict[tuple[int, int], list[float]] = {}
        self.posteriors: dict[int, list[float]] = {}

    def _index(self, scope, a) -> int:
        pos = 0
        for v in scope:
            pos = pos * self.cards[v] + a[v]
        return pos

    def _scope_iter(self, scope):
        return _assignments(scope, [self.cards[v] for v in scope])

    def _lam(self, v: str, k: int) -> float:
        if v not in self.evidence:
            return 1.0
        return 1.0 if self.bn.domain(v)[k] == self.evidence[v] else 0.0

    def init_potentials(self) -> None:
        bn, tree = self.bn, self.tree
        self.psi = []
        for i, scope in enumerate(tree.clusters):
            owned = [v for v in bn.names if tree.assignment.get(v) == i]
            attached = [v for v in bn.names if tree.attachment.get(v) == i]
            table = []
            for a in self._scope_iter(scope):
                xs = []
                for v in owned:
                    cpt = bn.cpts[v]
                    row = 0
                    for p in cpt.parents:
                        row = row * self.cards[p] + a[p]
                    xs.append(cpt.rows[row][a[v]])
                xs += [self._lam(v, a[v]) for v in attached]
                table.append(self.ops.product(xs))
            self.psi.append(table)

    def _product(self, i, a, skip) -> float:
        xs = [self.psi[i][self._index(self.tree.clusters[i], a)]]
        for k in self.tree.neighbors(i):
            if k != skip:
                xs.append(self.messages[(k, i)][self._index(self.tree.separator(k, i), a)])
        return self.ops.product(xs)

    def compute_message(self, i: int, j: int) -> list[float]:
        sep = self.tree.separator(i, j)
        groups: list[list[float]] = [[] for _ in range(math.prod(self.cards[v] for v in sep))]
        for a in self._scope_iter(self.tree.clusters[i]):
            groups[self._index(sep, a)].append(self._product(i, a, j))
        self.messages[(i, j)] = msg = [self.ops.total(g) for g in groups]
        return msg

    def compute_posterior(self, i: int) -> list[float]:
        if i not in self.posteriors:
            self.posteriors[i] = [self._product(i, a, None)
                                  for a in self._scope_iter(self.tree.clusters[i])]
        return self.posteriors[i]

    def query(self, X: str) -> dict[str, float]:
        i = self.tree.home(X)
        post = self.compute_posterior(i)
        groups: list[list[float]] = [[] for _ in range(self.cards[X])]
        for a, p in zip(self._scope_iter(self.tree.clusters[i]), post):
            groups[a[X]].append(p)
        return {x: self.ops.total(g) for x, g in zip(self.bn.domain(X), groups)}

    def run(self, schedule: Schedule, queries: Sequence[str]) -> dict[tuple[str, str], float]:
        self.init_potentials()
        for i, j in schedule.messages:
            self.compute_message(i, j)
        out = {}
        for X in queries:
            for x, p in self.query(X).items():
                out[(X, x)] = p
        return out
