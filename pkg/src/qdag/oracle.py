"""Exact inference by enumerating every joint state.

Deliberately naive: it shares no code with the clustering path and is the
reference the compiler is checked against.
"""

from __future__ import annotations

import itertools
import math
from typing import Mapping

import numpy as np

from .network import BeliefNetwork

STATE_CAP = 2 ** 20


class StateSpaceTooLarge(RuntimeError):
    pass


def joint(bn: BeliefNetwork, w: Mapping[str, str]) -> float:
    """Chain-rule probability of the full instantiation ``w``."""
    p = 1.0
    for v in bn.variables:
        p *= bn.probability(v.name, w)
    return p


def query(bn: BeliefNetwork, e: Mapping[str, str], X: str,
          cap: int = STATE_CAP) -> dict[str, float]:
    """Pr(x, e) for every value x of ``X``, summed over consistent completions."""
    names = bn.names
    size = math.prod(v.card for v in bn.variables)
    if size > cap:
        raise StateSpaceTooLarge(f"{size} joint states exceed the cap of {cap}")
    for var, val in e.items():
        if val not in bn.domain(var):
            raise ValueError(f"{val!r} is not a value of {var}")
    doms = [(e[n],) if n in e else bn.domain(n) for n in names]
    acc: dict[str, list[float]] = {x: [] for x in bn.domain(X)}
    for combo in itertools.product(*doms):
        w = dict(zip(names, combo))
        acc[w[X]].append(joint(bn, w))
    return {x: math.fsum(ps) for x, ps in acc.items()}


def probability_of_evidence(bn: BeliefNetwork, e: Mapping[str, str],
                            cap: int = STATE_CAP) -> float:
    return math.fsum(query(bn, e, bn.names[0], cap).values())


class JointTable:
    """Every joint probability of ``bn`` held in one array, for sweeps that
    ask many queries of the same network.

    Entry ``[i_1, ..., i_n]`` is the chain-rule product for the instantiation
    picking value ``i_k`` of the k-th declared variable.
    """

    def __init__(self, bn: BeliefNetwork, cap: int = STATE_CAP):
        self.bn = bn
        self.names = bn.names
        shape = tuple(v.card for v in bn.variables)
        if math.prod(shape) > cap:
            raise StateSpaceTooLarge(f"{math.prod(shape)} joint states exceed the cap of {cap}")
        axis = {n: k for k, n in enumerate(self.names)}
        table = np.ones(shape)
        for v in bn.variables:
            cpt = bn.cpts[v.name]
            fam = cpt.parents + (v.name,)
            arr = np.array(cpt.rows, dtype=float).reshape(
                tuple(bn.variable(f).card for f in fam))
            order = sorted(range(len(fam)), key=lambda k: axis[fam[k]])
            arr = arr.transpose(order)
            full = [1] * len(shape)
            for k in order:
                full[axis[fam[k]]] = shape[axis[fam[k]]]
            table = table * arr.reshape(full)
        self.table = table
        self._axis = axis

    def query(self, e: Mapping[str, str], X: str) -> dict[str, float]:
        idx = [slice(None)] * len(self.names)
        for var, val in e.items():
            k = self._axis[var]
            j = self.bn.domain(var).index(val)
            idx[k] = slice(j, j + 1)
        sub = self.table[tuple(idx)]
        k = self._axis[X]
        other = tuple(a for a in range(sub.ndim) if a != k)
        col = sub.sum(axis=other)
        dom = self.bn.domain(X)
        if X in e:
            return {x: (float(col[0]) if x == e[X] else 0.0) for x in dom}
        return {x: float(col[i]) for i, x in enumerate(dom)}

    def sweep(self, evidence: tuple[str, ...], X: str) -> np.ndarray:
        """Pr(x, e) for every evidence function over ``evidence`` at once.

        Axis k of the result has one slot per value of ``evidence[k]`` plus a
        final slot for unknown; the last axis runs over the values of ``X``.
        """
        return self.sweep_all(evidence, (X,))[X]

    def sweep_all(self, evidence: tuple[str, ...],
                  targets: tuple[str, ...] | None = None) -> dict[str, np.ndarray]:
        """:meth:`sweep` for several query variables, sharing the summations."""
        evidence = tuple(evidence)
        targets = self.names if targets is None else tuple(targets)
        ev_axes = [self._axis[v] for v in evidence]
        rest = [a for a in range(len(self.names)) if a not in ev_axes]
        m = len(rest)
        # other axes first so each summation runs over a leading axis
        t = np.ascontiguousarray(np.transpose(self.table, rest + ev_axes))
        prefix = [t]
        for _ in rest:
            prefix.append(prefix[-1].sum(axis=0))
        marg = {}
        for j, a in enumerate(rest):
            name = self.names[a]
            if name in targets:
                p = prefix[j]
                if m - j > 1:
                    p = p.sum(axis=tuple(range(1, m - j)))
                marg[name] = np.moveaxis(p, 0, -1)
        base = prefix[m]
        k = len(evidence)
        for d in range(k):
            base = np.concatenate([base, base.sum(axis=d, keepdims=True)], axis=d)
        out = {}
        for X in targets:
            if X in evidence:
                out[X] = self._observed_target(base, evidence.index(X), self.bn.variable(X).card)
            else:
                arr = marg[X]
                for d in range(k):
                    arr = np.concatenate([arr, arr.sum(axis=d, keepdims=True)], axis=d)
                out[X] = arr
        return out

    @staticmethod
    def _observed_target(base: np.ndarray, k: int, d: int) -> np.ndarray:
        # X is observed too: Pr(x, e) keeps only entries consistent with X = x
        out = np.zeros(base.shape + (d,))
        for x in range(d):
            src = [slice(None)] * base.ndim
            src[k] = x
            for slot in (x, d):
                sel = [slice(None)] * base.ndim
                sel[k] = slot
                out[tuple(sel) + (x,)] = base[tuple(src)]
        return out
