"""On-line Q-DAG runtime: evidence functions, full evaluation, incremental
forward propagation, and normalized posteriors."""

from __future__ import annotations

import itertools
import math
from typing import Mapping

import numpy as np

from . import kernels
from .core import QDag, QDagError
from .network import UNKNOWN


class EvidenceError(QDagError):
    pass


class InconsistentEvidence(EvidenceError):
    """Raised when the evidence has probability zero."""


class Evidence:
    """Total map from the Q-DAG's evidence variables to a value or UNKNOWN.

    Variables missing from ``assignment`` are unknown.
    """

    def __init__(self, qdag: QDag, assignment: Mapping[str, str] | None = None):
        self.domains = qdag.domains
        self._values: dict[str, str] = {v: UNKNOWN for v in self.domains}
        for var, val in (assignment or {}).items():
            self[var] = val

    def __getitem__(self, var: str) -> str:
        return self._values[var]

    def __setitem__(self, var: str, val: str) -> None:
        if var not in self.domains:
            raise EvidenceError(f"{var} is not an evidence variable")
        if val != UNKNOWN and val not in self.domains[var]:
            raise EvidenceError(f"{val!r} is not a value of {var}")
        self._values[var] = val

    def items(self):
        return self._values.items()

    def observed(self) -> dict[str, str]:
        """The instantiated part, i.e. the evidence ``e`` proper."""
        return {v: x for v, x in self._values.items() if x != UNKNOWN}

    def codes(self) -> list[int]:
        return [-1 if x == UNKNOWN else self.domains[v].index(x)
                for v, x in self._values.items()]

    def copy(self) -> "Evidence":
        out = Evidence.__new__(Evidence)
        out.domains = self.domains
        out._values = dict(self._values)
        return out

    def __eq__(self, other) -> bool:
        return isinstance(other, Evidence) and self._values == other._values

    def __repr__(self) -> str:
        body = ", ".join(f"{v}={'?' if x == UNKNOWN else x}" for v, x in self._values.items())
        return f"Evidence({body})"


def _as_evidence(qdag: QDag, E) -> Evidence:
    if isinstance(E, Evidence):
        if E.domains is not qdag.domains and E.domains != qdag.domains:
            raise EvidenceError("evidence belongs to a different Q-DAG")
        return E
    return Evidence(qdag, E)


def evaluate_nodes(qdag: QDag, E=None, backend=None):
    """Values of every node reachable from a query, plus the visit count.

    Unreachable nodes are left at 0.
    """
    be = backend or kernels.backend
    prog = qdag.program()
    ev = _as_evidence(qdag, E)
    values = be.new_values(prog)
    visited = be.evaluate(prog, ev.codes(), values)
    return values, visited


def evaluate(qdag: QDag, E=None, backend=None) -> dict[tuple[str, str], float]:
    """Map each (query variable, value) to Pr(value, e) under evidence ``E``.

    ``E`` is an :class:`Evidence` or a plain mapping; absent variables are
    unknown.
    """
    values, _ = evaluate_nodes(qdag, E, backend)
    return {key: float(values[nid]) for key, nid in qdag.queries.items()}


def all_evidence(qdag: QDag) -> np.ndarray:
    """Every evidence function as a row of value indices, -1 for unknown.

    Columns follow ``qdag.evidence_vars``.
    """
    axes = [range(-1, len(qdag.domains[v])) for v in qdag.evidence_vars]
    rows = list(itertools.product(*axes))
    return np.array(rows, dtype=np.int64).reshape(len(rows), len(axes))


def decode(qdag: QDag, row) -> dict[str, str]:
    return {v: (UNKNOWN if k < 0 else qdag.domains[v][k])
            for v, k in zip(qdag.evidence_vars, row)}


def evaluate_batch(qdag: QDag, rows, backend=None) -> np.ndarray:
    """Query values for many evidence functions at once.

    ``rows`` holds value-index codes as produced by :func:`all_evidence`;
    the result has one row per evidence function and one column per entry of
    ``qdag.queries`` in insertion order.
    """
    be = backend or kernels.backend
    prog = qdag.program()
    rows = np.asarray(rows, dtype=np.int64)
    if rows.ndim == 1:
        rows = rows[None, :]
    if rows.shape[1] != len(prog.variables):
        raise EvidenceError("evidence rows do not match the evidence variables")
    for k, v in enumerate(prog.variables):
        if rows.size and (rows[:, k].max() >= len(qdag.domains[v]) or rows[:, k].min() < -1):
            raise EvidenceError(f"bad value code for {v}")
    out = np.zeros((rows.shape[0], len(prog.query_ids)))
    be.evaluate_batch(prog, rows, out)
    return out


def probability_of_evidence(results: Mapping[tuple[str, str], float], var: str) -> float:
    return math.fsum(p for (v, _), p in results.items() if v == var)


def marginal(qdag: QDag, E, X: str, backend=None) -> tuple[float, dict[str, float]]:
    """Pr(e) and the posterior over the query variable ``X``."""
    if X not in qdag.query_vars:
        raise EvidenceError(f"{X} is not a query variable")
    results = evaluate(qdag, E, backend)
    return _normalize(results, X)


def _normalize(results, X):
    joint = {val: p for (v, val), p in results.items() if v == X}
    pr_e = math.fsum(joint.values())
    if pr_e <= 0.0:
        raise InconsistentEvidence("evidence has probability zero")
    return pr_e, {val: p / pr_e for val, p in joint.items()}


class EvaluationState:
    """Cached node values kept current under evidence changes.

    Starts with every evidence variable unknown.  :meth:`set_evidence`
    flips only the affected evidence nodes and recomputes just the nodes
    downstream of a value that actually changed.
    """

    def __init__(self, qdag: QDag, backend=None):
        self.qdag = qdag
        self.backend = backend or kernels.backend
        self.program = qdag.program()
        self.evidence = Evidence(qdag)
        self._codes = self.evidence.codes()
        self._var_index = {v: k for k, v in enumerate(self.program.variables)}
        self.values = self.backend.new_values(self.program)
        self._scratch = self.backend.new_scratch(self.program)
        self.last_recomputed = self.backend.evaluate(self.program, self._codes, self.values)

    def set_evidence(self, var: str, val: str) -> set[tuple[str, str]]:
        """Set ``var`` to ``val`` (or UNKNOWN); return query keys whose value changed."""
        old = self.evidence[var] if var in self.qdag.domains else None
        self.evidence[var] = val
        if old == val:
            self.last_recomputed = 0
            return set()
        k = self._var_index[var]
        self._codes[k] = -1 if val == UNKNOWN else self.qdag.domains[var].index(val)
        before = {key: self.values[nid] for key, nid in self.qdag.queries.items()}
        self.last_recomputed = self.backend.propagate(
            self.program, self._codes, k, self.values, self._scratch)
        return {key for key, nid in self.qdag.queries.items()
                if self.values[nid] != before[key]}

    def unset(self, var: str) -> set[tuple[str, str]]:
        return self.set_evidence(var, UNKNOWN)

    def results(self) -> dict[tuple[str, str], float]:
        return {key: float(self.values[nid]) for key, nid in self.qdag.queries.items()}

    def marginal(self, X: str) -> tuple[float, dict[str, float]]:
        if X not in self.qdag.query_vars:
            raise EvidenceError(f"{X} is not a query variable")
        return _normalize(self.results(), X)

    def node_value(self, nid: int) -> float:
        return float(self.values[nid])
