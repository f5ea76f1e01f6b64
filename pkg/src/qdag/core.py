"""Query DAG data model and hash-consing node constructors.

Nodes live in an append-only store; a node's inputs always have smaller ids,
so id order is a topological order.  Inputs are operands ("parents" in the
usual Q-DAG vocabulary) and query nodes are outputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .network import UNKNOWN

# Sums of probabilities may overshoot 1 by accumulated rounding.
PROB_TOL = 1e-9


class QDagError(ValueError):
    pass


@dataclass(frozen=True, slots=True)
class Num:
    value: float


@dataclass(frozen=True, slots=True)
class Esn:
    var: str
    val: str


@dataclass(frozen=True, slots=True)
class Mul:
    inputs: tuple[int, ...]


@dataclass(frozen=True, slots=True)
class Add:
    inputs: tuple[int, ...]


Node = Num | Esn | Mul | Add

KIND_NAMES = {Num: "NUM", Esn: "ESN", Mul: "MUL", Add: "ADD"}


def _check_prob(p: float) -> float:
    p = float(p)
    if not (0.0 <= p <= 1.0 + PROB_TOL):
        raise QDagError(f"number node out of range: {p!r}")
    return p


class QDag:
    """The tuple (evidence variables, unknown marker, domains, nodes, queries).

    Build with the ``mk_*`` constructors, register outputs with
    :meth:`set_query`, then :meth:`seal`.  With ``fold=False`` the
    constructors do no algebra at all; hash-consing and the collapse of
    singleton products and sums still apply.
    """

    unknown = UNKNOWN

    def __init__(self, domains: Mapping[str, Sequence[str]], fold: bool = True):
        self.domains: dict[str, tuple[str, ...]] = {v: tuple(vals) for v, vals in domains.items()}
        for v, vals in self.domains.items():
            if UNKNOWN in vals:
                raise QDagError(f"{v} uses the reserved value {UNKNOWN}")
        self.fold = fold
        self.nodes: list[Node] = []
        self.queries: dict[tuple[str, str], int] = {}
        # keyed by (kind, payload) tuples; hashing those stays in C
        self._ids: dict[tuple, int] = {}
        self._const: list[float | None] = []  # payload of NUM nodes, None otherwise
        self._sealed = False
        self._program = None

    # -- construction ---------------------------------------------------

    def _intern(self, key: tuple, make) -> int:
        nid = self._ids.get(key)
        if nid is None:
            if self._sealed:
                raise QDagError("Q-DAG is sealed")
            nid = len(self.nodes)
            self.nodes.append(make(*key[1:]))
            self._const.append(key[1] if key[0] == 0 else None)
            self._ids[key] = nid
        return nid

    def mk_num(self, p: float) -> int:
        nid = self._ids.get((0, p))
        if nid is not None:
            return nid
        return self._intern((0, _check_prob(p)), Num)

    def mk_esn(self, var: str, val: str) -> int:
        if var not in self.domains:
            raise QDagError(f"{var} is not an evidence variable")
        if val not in self.domains[var]:
            raise QDagError(f"{val!r} is not a value of {var}")
        return self._intern((1, var, val), Esn)

    def _operands(self, inputs: Iterable[int]) -> list[int]:
        ids = list(inputs)
        if not ids:
            raise QDagError("operation with no inputs")
        if min(ids) < 0 or max(ids) >= len(self.nodes):
            raise QDagError(f"unknown node id in {ids}")
        return ids

    def mk_mul(self, inputs: Iterable[int]) -> int:
        return self._mul(self._operands(inputs))

    def _mul(self, ids: list[int]) -> int:
        # ids are known to be valid
        if self.fold:
            const = self._const
            kept: list[int] = []
            product = None
            slot = -1
            for i in ids:
                c = const[i]
                if c is None:
                    kept.append(i)
                elif c == 0.0:
                    return i
                elif c != 1.0:
                    if product is None:
                        product, slot = c, len(kept)
                        kept.append(-1)
                    else:
                        product *= c
            if product is not None:
                kept[slot] = self.mk_num(product)
            if not kept:
                return self.mk_num(1.0)
            ids = kept
        if len(ids) == 1:
            return ids[0]
        key = (2, tuple(ids))
        nid = self._ids.get(key)
        return self._intern(key, Mul) if nid is None else nid

    def mk_add(self, inputs: Iterable[int]) -> int:
        return self._add(self._operands(inputs))

    def _add(self, ids: list[int]) -> int:
        if self.fold:
            const = self._const
            kept: list[int] = []
            total = None
            slot = -1
            for i in ids:
                c = const[i]
                if c is None:
                    kept.append(i)
                elif c != 0.0:
                    if total is None:
                        total, slot = c, len(kept)
                        kept.append(-1)
                    else:
                        total += c
            if total is not None:
                kept[slot] = self.mk_num(total)
            if not kept:
                return self.mk_num(0.0)
            ids = kept
        if len(ids) == 1:
            return ids[0]
        key = (3, tuple(ids))
        nid = self._ids.get(key)
        return self._intern(key, Add) if nid is None else nid

    def set_query(self, var: str, val: str, nid: int) -> None:
        if self._sealed:
            raise QDagError("Q-DAG is sealed")
        if not (0 <= nid < len(self.nodes)):
            raise QDagError(f"unknown node id {nid}")
        if (var, val) in self.queries:
            raise QDagError(f"query {var}={val} registered twice")
        self.queries[(var, val)] = nid

    def seal(self) -> "QDag":
        self._sealed = True
        return self

    @property
    def sealed(self) -> bool:
        return self._sealed

    # -- inspection -----------------------------------------------------

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def evidence_vars(self) -> tuple[str, ...]:
        return tuple(self.domains)

    @property
    def query_vars(self) -> tuple[str, ...]:
        seen: dict[str, None] = {}
        for var, _ in self.queries:
            seen.setdefault(var)
        return tuple(seen)

    def query_values(self, var: str) -> tuple[str, ...]:
        return tuple(val for v, val in self.queries if v == var)

    def reachable(self) -> list[bool]:
        """Mask of nodes some query node depends on."""
        mark = [False] * len(self.nodes)
        for nid in self.queries.values():
            mark[nid] = True
        for nid in range(len(self.nodes) - 1, -1, -1):
            node = self.nodes[nid]
            if mark[nid] and type(node) in (Mul, Add):
                for i in node.inputs:
                    mark[i] = True
        return mark

    def has_esn_below(self) -> list[bool]:
        flag = [False] * len(self.nodes)
        for nid, node in enumerate(self.nodes):
            t = type(node)
            if t is Esn:
                flag[nid] = True
            elif t is Mul or t is Add:
                flag[nid] = any(flag[i] for i in node.inputs)
        return flag

    def check_invariants(self) -> list[str]:
        """Structural invariants as a list of problems (empty when sound)."""
        problems = []
        if len(set(self.nodes)) != len(self.nodes):
            problems.append("duplicate node")
        for nid, node in enumerate(self.nodes):
            t = type(node)
            if t is Num:
                if not (0.0 <= node.value <= 1.0 + PROB_TOL):
                    problems.append(f"node {nid}: number out of range")
            elif t is Esn:
                if node.val not in self.domains.get(node.var, ()):
                    problems.append(f"node {nid}: bad evidence node {node}")
            else:
                if len(node.inputs) < 2:
                    problems.append(f"node {nid}: fewer than two inputs")
                if any(not (0 <= i < nid) for i in node.inputs):
                    problems.append(f"node {nid}: input does not precede it")
        for key, nid in self.queries.items():
            if not (0 <= nid < len(self.nodes)):
                problems.append(f"query {key}: dangling id")
        return problems

    def stats(self) -> "QDagStats":
        counts = {name: 0 for name in KIND_NAMES.values()}
        esn_per_var = {v: 0 for v in self.domains}
        edges = 0
        depth = [0] * len(self.nodes)
        for nid, node in enumerate(self.nodes):
            t = type(node)
            counts[KIND_NAMES[t]] += 1
            if t is Esn:
                esn_per_var[node.var] += 1
            elif t is Mul or t is Add:
                edges += len(node.inputs)
                depth[nid] = 1 + max(depth[i] for i in node.inputs)
        max_depth = max((depth[n] for n in self.queries.values()), default=0)
        return QDagStats(len(self.nodes), counts, edges, max_depth, esn_per_var,
                         len(self.queries))

    def program(self):
        """Flat array form consumed by the evaluation kernels (cached)."""
        if self._program is None:
            if not self._sealed:
                raise QDagError("seal the Q-DAG before evaluating it")
            from .program import Program
            self._program = Program.from_qdag(self)
        return self._program

    def __repr__(self) -> str:
        s = self.stats()
        return (f"QDag({s.nodes} nodes, {len(self.domains)} evidence vars, "
                f"{len(self.queries)} queries)")


@dataclass(frozen=True)
class QDagStats:
    nodes: int
    by_kind: dict[str, int]
    edges: int
    max_depth: int
    esn_per_var: dict[str, int]
    queries: int

    def lines(self) -> list[str]:
        out = [f"nodes {self.nodes}"]
        out += [f"{k.lower()} {n}" for k, n in self.by_kind.items()]
        out.append(f"edges {self.edges}")
        out.append(f"max_depth {self.max_depth}")
        out.append(f"queries {self.queries}")
        out += [f"esn {v} {n}" for v, n in self.esn_per_var.items()]
        return out


def same_structure(a: QDag, b: QDag) -> bool:
    return (a.domains == b.domains and a.nodes == b.nodes
            and a.queries == b.queries)
