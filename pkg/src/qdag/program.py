"""Flat, array-backed view of a sealed Q-DAG for the evaluation kernels.

Node ids are kept as-is.  Only nodes reachable from a query are listed in
``order`` and wired into the consumer (output) adjacency, so evaluating an
unreduced Q-DAG never touches dead nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import Add, Esn, Mul, Num, QDag

NUM, ESN, MUL, ADD = 0, 1, 2, 3
_CODES = {Num: NUM, Esn: ESN, Mul: MUL, Add: ADD}


def _csr(lists: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(len(lists) + 1, dtype=np.int64)
    ptr[1:] = np.cumsum([len(x) for x in lists], dtype=np.int64)
    idx = np.array([i for x in lists for i in x], dtype=np.int64)
    return ptr, idx


@dataclass
class Program:
    kind: np.ndarray        # int8 per node
    num: np.ndarray         # float64 payload of NUM nodes, 0 elsewhere
    esn_var: np.ndarray     # int64 evidence-variable index of ESN nodes, -1 elsewhere
    esn_val: np.ndarray     # int64 value index of ESN nodes, -1 elsewhere
    in_ptr: np.ndarray
    in_idx: np.ndarray
    out_ptr: np.ndarray     # consumers, reachable nodes only
    out_idx: np.ndarray
    order: np.ndarray       # reachable node ids, ascending
    var_ptr: np.ndarray     # reachable ESN ids grouped by evidence variable
    var_idx: np.ndarray
    variables: tuple[str, ...]
    values: tuple[tuple[str, ...], ...]
    query_keys: tuple[tuple[str, str], ...]
    query_ids: np.ndarray
    _lists: dict = field(default_factory=dict, repr=False)

    @classmethod
    def from_qdag(cls, q: QDag) -> "Program":
        n = len(q.nodes)
        variables = tuple(q.domains)
        var_index = {v: k for k, v in enumerate(variables)}
        live = q.reachable()
        kind = np.array([_CODES[type(node)] for node in q.nodes], dtype=np.int8)
        num = np.array([c if c is not None else 0.0 for c in q._const], dtype=np.float64)
        esn_var = np.full(n, -1, dtype=np.int64)
        esn_val = np.full(n, -1, dtype=np.int64)
        by_var: list[list[int]] = [[] for _ in variables]
        counts = [0] * n
        flat: list[int] = []
        for nid in np.flatnonzero(kind >= MUL).tolist():
            if live[nid]:
                ins = q.nodes[nid].inputs
                counts[nid] = len(ins)
                flat.extend(ins)
        for nid in np.flatnonzero(kind == ESN).tolist():
            node = q.nodes[nid]
            esn_var[nid] = var_index[node.var]
            esn_val[nid] = q.domains[node.var].index(node.val)
            if live[nid]:
                by_var[esn_var[nid]].append(nid)
        # dead nodes get no inputs; they are never evaluated
        in_ptr = np.zeros(n + 1, dtype=np.int64)
        in_ptr[1:] = np.cumsum(counts)
        in_idx = np.array(flat, dtype=np.int64)
        # consumer lists: unique (input, consumer) pairs sorted by input then consumer
        dst = np.repeat(np.arange(n, dtype=np.int64), counts)
        pairs = np.unique(in_idx * n + dst)
        out_idx = pairs % n if n else pairs
        out_ptr = np.zeros(n + 1, dtype=np.int64)
        if n:
            out_ptr[1:] = np.cumsum(np.bincount(pairs // n, minlength=n))
        var_ptr, var_idx = _csr(by_var)
        order = np.flatnonzero(np.array(live, dtype=bool)).astype(np.int64)
        keys = tuple(q.queries)
        return cls(kind, num, esn_var, esn_val, in_ptr, in_idx, out_ptr, out_idx,
                   order, var_ptr, var_idx, variables,
                   tuple(q.domains[v] for v in variables), keys,
                   np.array([q.queries[k] for k in keys], dtype=np.int64))

    @property
    def size(self) -> int:
        return len(self.kind)

    def as_lists(self) -> dict:
        """Plain-list copies of the arrays, for the pure-Python kernels."""
        if not self._lists:
            for name in ("kind", "num", "esn_var", "esn_val", "in_ptr", "in_idx",
                         "out_ptr", "out_idx", "order", "var_ptr", "var_idx", "query_ids"):
                self._lists[name] = getattr(self, name).tolist()
        return self._lists
