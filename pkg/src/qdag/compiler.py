"""Compile a belief network into a Q-DAG by running join-tree clustering
with node constructors in place of arithmetic.

Potentials map cluster instantiations to node ids.  Every CPT entry becomes a
number node and every evidence indicator an evidence-specific node, so the
messages and posteriors come out as expressions parameterized by evidence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .core import Add, Esn, Mul, Num, QDag
from .jointree import ClusterTree, join_tree
from .network import BeliefNetwork, NetworkError, check


class CompileError(ValueError):
    pass


@dataclass
class SymbolicPotential:
    """One node id per instantiation of ``scope``, leftmost variable slowest."""

    scope: tuple[str, ...]
    cards: tuple[int, ...]
    table: list[int]

    def __post_init__(self):
        if len(self.table) != math.prod(self.cards):
            raise ValueError("table length does not match the scope")

    def strides(self) -> list[int]:
        out = [1] * len(self.cards)
        for k in range(len(self.cards) - 2, -1, -1):
            out[k] = out[k + 1] * self.cards[k + 1]
        return out

    def index(self, assignment: dict[str, int]) -> int:
        """Table position for value indices given by ``assignment`` (a superset is fine)."""
        pos = 0
        for v, c in zip(self.scope, self.cards):
            pos = pos * c + assignment[v]
        return pos

    def __getitem__(self, assignment: dict[str, int]) -> int:
        return self.table[self.index(assignment)]


def _assignments(scope: Sequence[str], cards: Sequence[int]):
    """Yield dicts of value indices in table order."""
    counter = [0] * len(scope)
    total = math.prod(cards)
    for _ in range(total):
        yield dict(zip(scope, counter))
        for k in range(len(counter) - 1, -1, -1):
            counter[k] += 1
            if counter[k] < cards[k]:
                break
            counter[k] = 0


@dataclass(frozen=True)
class Schedule:
    """Message order for one collect-then-distribute pass rooted at ``root``."""

    root: int
    messages: tuple[tuple[int, int], ...]

    @classmethod
    def two_phase(cls, tree: ClusterTree, root: int = 0) -> "Schedule":
        if not tree.clusters:
            return cls(root, ())
        parent = {root: None}
        preorder = [root]
        stack = [root]
        while stack:
            i = stack.pop()
            for n in reversed(tree.neighbors(i)):
                if n not in parent:
                    parent[n] = i
                    preorder.append(n)
                    stack.append(n)
        collect = [(i, parent[i]) for i in reversed(preorder) if parent[i] is not None]
        distribute = [(parent[i], i) for i in preorder if parent[i] is not None]
        return cls(root, tuple(collect + distribute))


@dataclass
class CompilationRequest:
    network: BeliefNetwork
    evidence_vars: Sequence[str]
    query_vars: Sequence[str]
    fold_constants: bool = True
    reduce: bool = True

    def validate(self) -> None:
        names = set(self.network.names)
        for kind, vs in (("evidence", self.evidence_vars), ("query", self.query_vars)):
            for v in vs:
                if v not in names:
                    raise CompileError(f"{kind} variable {v!r} is not in the network")


class SymbolicClustering:
    """Clustering over a join tree, producing nodes in ``qdag``.

    Cluster entries are addressed by flat table position; projections of a
    cluster onto a sub-scope (a CPT family, a separator) are precomputed as
    position maps.
    """

    def __init__(self, bn: BeliefNetwork, tree: ClusterTree, qdag: QDag):
        self.bn = bn
        self.tree = tree
        self.qdag = qdag
        self.cards = {v.name: v.card for v in bn.variables}
        self.nbrs = [tree.neighbors(i) for i in range(len(tree.clusters))]
        self.psi: list[SymbolicPotential] = []
        self.messages: dict[tuple[int, int], SymbolicPotential] = {}
        self.posteriors: dict[int, SymbolicPotential] = {}
        self._proj: dict[tuple[int, tuple[str, ...]], list[int]] = {}
        self._split: list[list[list[int]]] = []

    def _potential(self, scope, table) -> SymbolicPotential:
        return SymbolicPotential(tuple(scope), tuple(self.cards[v] for v in scope), table)

    def projection(self, i: int, sub: tuple[str, ...]) -> list[int]:
        """Position in a table over ``sub`` for each entry of cluster ``i``."""
        key = (i, sub)
        if key not in self._proj:
            scope = self.tree.clusters[i]
            cards = [self.cards[v] for v in scope]
            stride = {v: 1 for v in scope}
            acc = 1
            for v in reversed(sub):
                stride[v] = acc
                acc *= self.cards[v]
            weights = [stride[v] if v in sub else 0 for v in scope]
            out = [0]
            for w, c in zip(weights, cards):
                out = [base + w * k for base in out for k in range(c)]
            self._proj[key] = out
        return self._proj[key]

    def init_potentials(self) -> list[SymbolicPotential]:
        q, bn, tree = self.qdag, self.bn, self.tree
        self.psi = []
        self._split = []
        for i, scope in enumerate(tree.clusters):
            size = math.prod(self.cards[v] for v in scope)
            factors: list[list] = [[] for _ in range(size)]
            for v in bn.names:
                if tree.assignment.get(v) != i:
                    continue
                cpt = bn.cpts[v]
                flat = [p for row in cpt.rows for p in row]
                if not q.fold:
                    flat = [q.mk_num(p) for p in flat]
                for t, pos in enumerate(self.projection(i, cpt.parents + (v,))):
                    factors[t].append(flat[pos])
            if q.fold:
                # the product folding would compute anyway, same order, without
                # interning every CPT entry
                for t, f in enumerate(factors):
                    acc = 1.0
                    for p in f:
                        acc *= p
                    factors[t] = [q.mk_num(acc)] if f else []
            for v in bn.names:
                if tree.attachment.get(v) != i:
                    continue
                esns = [q.mk_esn(v, x) for x in bn.domain(v)]
                for t, pos in enumerate(self.projection(i, (v,))):
                    factors[t].append(esns[pos])
            table = [q._mul(f) if f else q.mk_num(1.0) for f in factors]
            self.psi.append(self._potential(scope, table))
            # a product entry is spliced open when multiplied by messages
            split = []
            for nid in table:
                node = q.nodes[nid]
                split.append(list(node.inputs) if type(node) is Mul else [nid])
            self._split.append(split)
        return self.psi

    def _products(self, i: int, skip: int | None) -> list[int]:
        """Per entry of cluster ``i``: its potential times the incoming
        messages, leaving out the one from ``skip``."""
        q = self.qdag
        incoming = []
        for k in self.nbrs[i]:
            if k != skip:
                msg = self.messages[(k, i)]
                incoming.append((msg.table, self.projection(i, msg.scope)))
        mul = q._mul
        out = []
        for t, base in enumerate(self._split[i]):
            if incoming:
                out.append(mul(base + [tab[proj[t]] for tab, proj in incoming]))
            else:
                out.append(mul(base))
        return out

    def compute_message(self, i: int, j: int) -> SymbolicPotential:
        sep = self.tree.separator(i, j)
        groups: list[list[int]] = [[] for _ in range(math.prod(self.cards[v] for v in sep))]
        for pos, nid in zip(self.projection(i, sep), self._products(i, j)):
            groups[pos].append(nid)
        msg = self._potential(sep, [self.qdag._add(g) for g in groups])
        self.messages[(i, j)] = msg
        return msg

    def compute_posterior(self, i: int) -> SymbolicPotential:
        if i not in self.posteriors:
            self.posteriors[i] = self._potential(self.tree.clusters[i], self._products(i, None))
        return self.posteriors[i]

    def query_nodes(self, X: str) -> dict[str, int]:
        """Sum the posterior of X's lowest-indexed cluster down to X."""
        i = self.tree.home(X)
        post = self.compute_posterior(i)
        groups: list[list[int]] = [[] for _ in range(self.cards[X])]
        for pos, nid in zip(self.projection(i, (X,)), post.table):
            groups[pos].append(nid)
        return {x: self.qdag.mk_add(g) for x, g in zip(self.bn.domain(X), groups)}

    def run(self, schedule: Schedule) -> None:
        self.init_potentials()
        for i, j in schedule.messages:
            self.compute_message(i, j)


@dataclass
class Compilation:
    """Everything a compile produced, for inspection and instrumentation."""

    qdag: QDag
    raw: QDag
    tree: ClusterTree
    schedule: Schedule
    clustering: SymbolicClustering
    query_vars: tuple[str, ...] = field(default=())


def _ordered(bn: BeliefNetwork, vs: Iterable[str]) -> tuple[str, ...]:
    chosen = set(vs)
    return tuple(v for v in bn.names if v in chosen)


def compile_traced(req: CompilationRequest) -> Compilation:
    req.validate()
    bn = req.network
    try:
        check(bn)
    except NetworkError as exc:
        raise CompileError(str(exc)) from exc
    evidence = _ordered(bn, req.evidence_vars)
    queries = _ordered(bn, req.query_vars)
    tree = join_tree(bn, evidence)
    schedule = Schedule.two_phase(tree)
    raw = QDag({v: bn.domain(v) for v in evidence}, fold=req.fold_constants)
    sc = SymbolicClustering(bn, tree, raw)
    sc.run(schedule)
    for X in queries:
        for x, nid in sc.query_nodes(X).items():
            raw.set_query(X, x, nid)
    raw.seal()
    out = reduce(raw) if req.reduce else raw
    return Compilation(out, raw, tree, schedule, sc, queries)


def compile_network(req: CompilationRequest) -> QDag:
    return compile_traced(req).qdag


def compile_qdag(bn: BeliefNetwork, evidence: Iterable[str], query: Iterable[str],
                 fold: bool = True, reduce: bool = True) -> QDag:
    return compile_network(CompilationRequest(bn, list(evidence), list(query), fold, reduce))


def reduce(qdag: QDag) -> QDag:
    """Replace every evidence-free subexpression by a single number node and
    drop nodes no query depends on."""
    live = qdag.reachable()
    if qdag.fold:
        return _prune(qdag, live)
    value: list[float | None] = [None] * len(qdag.nodes)  # None: depends on evidence
    out = QDag(qdag.domains, fold=True)
    new_id: dict[int, int] = {}
    for nid, node in enumerate(qdag.nodes):
        if not live[nid]:
            continue
        t = type(node)
        if t is Num:
            value[nid] = node.value
        elif t is Esn:
            new_id[nid] = out.mk_esn(node.var, node.val)
            continue
        else:
            args = [value[i] for i in node.inputs]
            if None not in args:
                acc = 1.0 if t is Mul else 0.0
                for x in args:
                    acc = acc * x if t is Mul else acc + x
                value[nid] = acc
            elif args.count(None) == len(args):
                # nothing to fold: intern the renamed node directly
                key = (2 if t is Mul else 3, tuple([new_id[i] for i in node.inputs]))
                new_id[nid] = out._intern(key, t)
                continue
            else:
                ins = [new_id[i] if value[i] is None else out.mk_num(value[i])
                       for i in node.inputs]
                r = out.mk_mul(ins) if t is Mul else out.mk_add(ins)
                if out._const[r] is None:
                    new_id[nid] = r
                    continue
                # folded to a number, e.g. a product with a zero factor
                value[nid] = out._const[r]
        new_id[nid] = -1  # materialized on demand
    for (var, val), nid in qdag.queries.items():
        out.set_query(var, val, out.mk_num(value[nid]) if value[nid] is not None
                      else new_id[nid])
    # constants materialized for a node can be folded away by it
    return _prune(out, out.reachable())


def _prune(qdag: QDag, live: list[bool]) -> QDag:
    """Reduction of an already folded Q-DAG: folding leaves no operation
    with only constant inputs, so all that remains is dropping dead nodes."""
    out = QDag(qdag.domains, fold=True)
    new_id = [-1] * len(qdag.nodes)
    for nid, node in enumerate(qdag.nodes):
        if not live[nid]:
            continue
        t = type(node)
        if t is Num:
            key = (0, node.value)
        elif t is Esn:
            key = (1, node.var, node.val)
        else:
            ins = tuple([new_id[i] for i in node.inputs])
            node = t(ins)
            key = (2 if t is Mul else 3, ins)
        new_id[nid] = len(out.nodes)
        out._ids[key] = new_id[nid]
        out.nodes.append(node)
        out._const.append(node.value if t is Num else None)
    for (var, val), nid in qdag.queries.items():
        out.set_query(var, val, new_id[nid])
    return out.seal()
