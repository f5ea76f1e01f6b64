"""Discrete belief networks: data model, text format, validation.

Text format, one statement per logical line, ``#`` starts a comment::

    network <name>
    variable <Name> { <v1> <v2> ... }
    cpt <Child> { <p1> <p2> ... }
    cpt <Child> | <P1> <P2> ... {
      <P1val> <P2val> ... : <p1> <p2> ...
    }

Rows of a conditioned table are keyed by parent values, so they may appear in
any order; internally they are stored with the leftmost parent varying
slowest.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

UNKNOWN = "*UNKNOWN*"

NORMALIZATION_TOL = 1e-9

_SPECIAL = set("{}|:#")


class NetworkError(ValueError):
    """Raised for a network that cannot be built or fails validation."""


class NetworkParseError(NetworkError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno
        self.message = message


@dataclass(frozen=True)
class Variable:
    name: str
    values: tuple[str, ...]

    @property
    def card(self) -> int:
        return len(self.values)

    def index(self, value: str) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise NetworkError(f"{value!r} is not a value of {self.name}") from None


@dataclass(frozen=True)
class CPT:
    """Conditional table of ``child`` given ``parents``.

    ``rows[r][k]`` is Pr(child = k-th value | r-th parent instantiation), with
    parent instantiations enumerated leftmost-parent-slowest.
    """

    child: str
    parents: tuple[str, ...]
    rows: tuple[tuple[float, ...], ...]


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str

    def __str__(self) -> str:
        return f"{self.kind}: {self.message}"


@dataclass(frozen=True)
class BeliefNetwork:
    name: str
    variables: tuple[Variable, ...]
    edges: tuple[tuple[str, str], ...]
    cpts: Mapping[str, CPT] = field(hash=False)

    @classmethod
    def from_cpts(cls, name: str, variables: Iterable[Variable],
                  cpts: Iterable[CPT]) -> "BeliefNetwork":
        """Build a network whose edges are read off the CPT parent lists."""
        variables = tuple(variables)
        cpts = tuple(cpts)
        edges = tuple((p, c.child) for c in cpts for p in c.parents)
        return cls(name, variables, edges, {c.child: c for c in cpts})

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(v.name for v in self.variables)

    def variable(self, name: str) -> Variable:
        for v in self.variables:
            if v.name == name:
                return v
        raise NetworkError(f"unknown variable {name!r}")

    def domain(self, name: str) -> tuple[str, ...]:
        return self.variable(name).values

    def parents(self, name: str) -> tuple[str, ...]:
        return tuple(p for p, c in self.edges if c == name)

    def family(self, name: str) -> tuple[str, ...]:
        return (name,) + self.cpts[name].parents

    def topological_order(self) -> list[str]:
        """Kahn's algorithm, ties resolved by declaration order."""
        names = self.names
        indeg = {n: 0 for n in names}
        children: dict[str, list[str]] = {n: [] for n in names}
        for p, c in self.edges:
            if p in indeg and c in indeg:
                indeg[c] += 1
                children[p].append(c)
        order = []
        ready = [n for n in names if indeg[n] == 0]
        while ready:
            n = ready.pop(0)
            order.append(n)
            for c in children[n]:
                indeg[c] -= 1
                if indeg[c] == 0:
                    ready.append(c)
            ready.sort(key=names.index)
        if len(order) != len(names):
            raise NetworkError("network has a directed cycle")
        return order

    def probability(self, child: str, assignment: Mapping[str, str]) -> float:
        """CPT entry of ``child`` under a (super-)instantiation of its family."""
        cpt = self.cpts[child]
        row = 0
        for p in cpt.parents:
            var = self.variable(p)
            row = row * var.card + var.index(assignment[p])
        return cpt.rows[row][self.variable(child).index(assignment[child])]


def instantiations(domains: Sequence[Sequence[str]]) -> Iterator[tuple[str, ...]]:
    """All joint values of ``domains`` with the leftmost varying slowest."""
    return itertools.product(*domains)


# -- validation --------------------------------------------------------------

def validate(bn: BeliefNetwork) -> list[Violation]:
    out: list[Violation] = []

    def bad(kind, msg):
        out.append(Violation(kind, msg))

    seen: set[str] = set()
    by_name: dict[str, Variable] = {}
    for v in bn.variables:
        if v.name in seen:
            bad("duplicate-variable", f"variable {v.name} declared twice")
        seen.add(v.name)
        by_name[v.name] = v
        if not v.values:
            bad("empty-domain", f"variable {v.name} has no values")
        if len(set(v.values)) != len(v.values):
            bad("duplicate-value", f"variable {v.name} repeats a value")
        if UNKNOWN in v.values:
            bad("reserved-value", f"variable {v.name} uses the reserved value {UNKNOWN}")

    parents: dict[str, list[str]] = {n: [] for n in by_name}
    for p, c in bn.edges:
        if p not in by_name or c not in by_name:
            bad("unknown-variable", f"edge {p}->{c} mentions an undeclared variable")
            continue
        if p == c:
            bad("acyclicity", f"self-loop on {p}")
            continue
        parents[c].append(p)

    try:
        bn.topological_order()
    except NetworkError:
        bad("acyclicity", "edge relation contains a directed cycle")

    for name in by_name:
        if name not in bn.cpts:
            bad("missing-cpt", f"variable {name} has no CPT")
    for key, cpt in bn.cpts.items():
        if key != cpt.child or cpt.child not in by_name:
            bad("unknown-variable", f"CPT for undeclared variable {cpt.child}")
            continue
        if any(p not in by_name for p in cpt.parents):
            bad("unknown-variable", f"CPT of {cpt.child} conditions on an undeclared variable")
            continue
        if sorted(cpt.parents) != sorted(parents[cpt.child]) or \
                len(set(cpt.parents)) != len(cpt.parents):
            bad("parents-mismatch",
                f"CPT of {cpt.child} conditions on {list(cpt.parents)} "
                f"but its parents are {parents[cpt.child]}")
        nrows = math.prod(by_name[p].card for p in cpt.parents)
        if len(cpt.rows) != nrows:
            bad("arity", f"CPT of {cpt.child} has {len(cpt.rows)} rows, expected {nrows}")
        width = by_name[cpt.child].card
        for r, row in enumerate(cpt.rows):
            if len(row) != width:
                bad("arity", f"CPT of {cpt.child} row {r} has {len(row)} entries, "
                             f"expected {width}")
                continue
            if any(not (0.0 <= p <= 1.0) for p in row):
                bad("range", f"CPT of {cpt.child} row {r} has an entry outside [0, 1]")
            total = math.fsum(row)
            if abs(total - 1.0) > NORMALIZATION_TOL:
                bad("normalization", f"CPT of {cpt.child} row {r} sums to {total!r}")
    return out


def check(bn: BeliefNetwork) -> BeliefNetwork:
    problems = validate(bn)
    if problems:
        raise NetworkError("; ".join(map(str, problems)))
    return bn


# -- text format -------------------------------------------------------------

def _logical_lines(text: str) -> Iterator[tuple[int, list[str]]]:
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0]
        for ch in "{}|:":
            line = line.replace(ch, f" {ch} ")
        toks = line.split()
        if toks:
            yield lineno, toks


def _ident(tok: str, lineno: int, what: str) -> str:
    if any(ch in _SPECIAL for ch in tok):
        raise NetworkParseError(lineno, f"bad {what} {tok!r}")
    return tok


def _prob(tok: str, lineno: int) -> float:
    try:
        p = float(tok)
    except ValueError:
        raise NetworkParseError(lineno, f"expected a probability, got {tok!r}") from None
    if not math.isfinite(p):
        raise NetworkParseError(lineno, f"non-finite probability {tok!r}")
    return p


def parse_network(text: str) -> BeliefNetwork:
    name = None
    variables: dict[str, Variable] = {}
    cpts: dict[str, CPT] = {}
    lines = _logical_lines(text)

    def var(tok, lineno):
        if tok not in variables:
            raise NetworkParseError(lineno, f"undeclared variable {tok!r}")
        return variables[tok]

    for lineno, toks in lines:
        head = toks[0]
        if head == "network":
            if len(toks) != 2:
                raise NetworkParseError(lineno, "expected 'network <name>'")
            if name is not None:
                raise NetworkParseError(lineno, "duplicate network statement")
            name = _ident(toks[1], lineno, "network name")
        elif head == "variable":
            if len(toks) < 4 or toks[2] != "{" or toks[-1] != "}":
                raise NetworkParseError(lineno, "expected 'variable <Name> { <values> }'")
            vname = _ident(toks[1], lineno, "variable name")
            values = tuple(_ident(t, lineno, "value") for t in toks[3:-1])
            if vname in variables:
                raise NetworkParseError(lineno, f"variable {vname} declared twice")
            if not values:
                raise NetworkParseError(lineno, f"variable {vname} has no values")
            if len(set(values)) != len(values):
                raise NetworkParseError(lineno, f"variable {vname} repeats a value")
            if UNKNOWN in values:
                raise NetworkParseError(lineno, f"{UNKNOWN} is reserved")
            variables[vname] = Variable(vname, values)
        elif head == "cpt":
            if len(toks) < 3:
                raise NetworkParseError(lineno, "truncated cpt statement")
            child = var(toks[1], lineno)
            if child.name in cpts:
                raise NetworkParseError(lineno, f"second CPT for {child.name}")
            if toks[2] == "{":
                if toks[-1] != "}":
                    raise NetworkParseError(lineno, "expected '}' closing the row")
                row = tuple(_prob(t, lineno) for t in toks[3:-1])
                if len(row) != child.card:
                    raise NetworkParseError(
                        lineno, f"row for {child.name} has {len(row)} entries, "
                                f"expected {child.card}")
                cpts[child.name] = CPT(child.name, (), (row,))
            elif toks[2] == "|":
                if toks[-1] != "{":
                    raise NetworkParseError(lineno, "expected '{' after the parent list")
                pars = [var(t, lineno) for t in toks[3:-1]]
                if not pars:
                    raise NetworkParseError(lineno, "empty parent list")
                if len({p.name for p in pars}) != len(pars) or child in pars:
                    raise NetworkParseError(lineno, "repeated parent")
                cpts[child.name] = _parse_rows(lines, lineno, child, pars)
            else:
                raise NetworkParseError(lineno, f"unexpected token {toks[2]!r}")
        else:
            raise NetworkParseError(lineno, f"unknown statement {head!r}")

    if name is None:
        raise NetworkParseError(0, "missing 'network <name>' statement")
    bn = BeliefNetwork.from_cpts(name, variables.values(),
                                 (cpts[v] for v in variables if v in cpts))
    return check(bn)


def _parse_rows(lines, start: int, child: Variable, pars: list[Variable]) -> CPT:
    rows: dict[tuple[int, ...], tuple[float, ...]] = {}
    for lineno, toks in lines:
        if toks == ["}"]:
            break
        if ":" not in toks:
            raise NetworkParseError(lineno, "expected '<parent values> : <probabilities>'")
        colon = toks.index(":")
        key_toks, prob_toks = toks[:colon], toks[colon + 1:]
        if len(key_toks) != len(pars):
            raise NetworkParseError(
                lineno, f"row key has {len(key_toks)} values, expected {len(pars)}")
        key = []
        for p, t in zip(pars, key_toks):
            if t not in p.values:
                raise NetworkParseError(lineno, f"{t!r} is not a value of {p.name}")
            key.append(p.values.index(t))
        row = tuple(_prob(t, lineno) for t in prob_toks)
        if len(row) != child.card:
            raise NetworkParseError(
                lineno, f"row for {child.name} has {len(row)} entries, "
                        f"expected {child.card}")
        if tuple(key) in rows:
            raise NetworkParseError(lineno, "duplicate row")
        rows[tuple(key)] = row
    else:
        raise NetworkParseError(start, f"unterminated cpt block for {child.name}")
    ordered = []
    for key in itertools.product(*(range(p.card) for p in pars)):
        if key not in rows:
            missing = " ".join(p.values[i] for p, i in zip(pars, key))
            raise NetworkParseError(start, f"CPT of {child.name} lacks row '{missing}'")
        ordered.append(rows[key])
    return CPT(child.name, tuple(p.name for p in pars), tuple(ordered))


def serialize_network(bn: BeliefNetwork) -> str:
    """Inverse of :func:`parse_network`; probabilities keep every bit."""
    out = [f"network {bn.name}"]
    for v in bn.variables:
        out.append(f"variable {v.name} {{ {' '.join(v.values)} }}")
    for v in bn.variables:
        cpt = bn.cpts[v.name]
        if not cpt.parents:
            out.append(f"cpt {v.name} {{ {' '.join(map(repr, cpt.rows[0]))} }}")
            continue
        out.append(f"cpt {v.name} | {' '.join(cpt.parents)} {{")
        keys = instantiations([bn.domain(p) for p in cpt.parents])
        for key, row in zip(keys, cpt.rows):
            out.append(f"  {' '.join(key)} : {' '.join(map(repr, row))}")
        out.append("}")
    return "\n".join(out) + "\n"
