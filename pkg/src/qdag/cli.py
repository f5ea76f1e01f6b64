"""Command-line front end: compile off-line, evaluate on-line.

    qdag compile --network car.bn --evidence C --query B -o m.qdag
    qdag eval m.qdag --set C=ON
    qdag eval m.qdag --unknown C --normalize
    qdag verify --network car.bn --evidence C --query B
    qdag stats m.qdag
    qdag repl m.qdag
"""

from __future__ import annotations

import argparse
import sys
from typing import Sequence, TextIO

import numpy as np

from .compiler import CompilationRequest, CompileError, compile_network
from .core import QDag, QDagError
from .evaluator import (EvaluationState, Evidence, InconsistentEvidence, all_evidence,
                        evaluate, evaluate_batch, probability_of_evidence)
from .jointree import join_tree
from .network import UNKNOWN, BeliefNetwork, NetworkError, parse_network
from .oracle import JointTable, StateSpaceTooLarge
from .qdagfile import parse_qdag, serialize_qdag

VERIFY_TOL = 1e-9


class CliError(Exception):
    pass


def fmt(p: float) -> str:
    """Fixed twelve-decimal rendering without a leading zero: .3475, 1, 0."""
    s = f"{p:.12f}".rstrip("0").rstrip(".")
    if s.startswith("0."):
        s = s[1:]
    return s or "0"


def _read(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc.strerror}") from None


def _load_network(path: str) -> BeliefNetwork:
    return parse_network(_read(path))


def _load_qdag(path: str) -> QDag:
    return parse_qdag(_read(path))


def _split_list(values: Sequence[str] | None) -> list[str]:
    out: list[str] = []
    for v in values or ():
        out += [x for x in v.split(",") if x]
    return out


def _request(args) -> CompilationRequest:
    bn = _load_network(args.network)
    query = _split_list(args.query) or list(bn.names)
    return CompilationRequest(bn, _split_list(args.evidence), query,
                              fold_constants=not getattr(args, "no_fold", False),
                              reduce=not getattr(args, "no_reduce", False))


def cmd_compile(args, out: TextIO) -> int:
    q = compile_network(_request(args))
    text = serialize_qdag(q)
    if args.output == "-":
        out.write(text)
    else:
        with open(args.output, "w", encoding="utf-8") as fh:
            fh.write(text)
        s = q.stats()
        out.write(f"wrote {args.output}: {s.nodes} nodes, {s.queries} queries\n")
    return 0


def _evidence(q: QDag, sets: Sequence[str], unknowns: Sequence[str]) -> Evidence:
    ev = Evidence(q)
    for item in sets:
        var, sep, val = item.partition("=")
        if not sep:
            raise CliError(f"--set expects Var=value, got {item!r}")
        ev[var] = val
    for var in unknowns:
        ev[var] = UNKNOWN
    return ev


def cmd_eval(args, out: TextIO) -> int:
    q = _load_qdag(args.qdag)
    ev = _evidence(q, args.set or (), args.unknown or ())
    results = evaluate(q, ev)
    if not args.normalize:
        for (var, val), p in results.items():
            out.write(f"{var} {val} {fmt(p)}\n")
        return 0
    first = True
    for X in q.query_vars:
        pr_e = probability_of_evidence(results, X)
        if first:
            out.write(f"Pr(e) {fmt(pr_e)}\n")
            first = False
        if pr_e <= 0.0:
            raise InconsistentEvidence("evidence has probability zero")
        for (var, val), p in results.items():
            if var == X:
                out.write(f"{var} {val} {fmt(p / pr_e)}\n")
    return 0


def cmd_verify(args, out: TextIO) -> int:
    req = _request(args)
    q = compile_network(req)
    bn = req.network
    S = q.evidence_vars
    rows = all_evidence(q)
    got = evaluate_batch(q, rows)
    table = JointTable(bn)
    idx = tuple(np.where(rows < 0, [bn.variable(v).card for v in S], rows).T)
    cols = {key: k for k, key in enumerate(q.queries)}
    worst = 0.0
    expected = table.sweep_all(S, q.query_vars)
    for X in q.query_vars:
        exp = expected[X][idx] if S else expected[X][None, :]
        for j, x in enumerate(bn.domain(X)):
            worst = max(worst, float(np.abs(got[:, cols[(X, x)]] - exp[:, j]).max()))
    ok = worst <= args.tol
    out.write(f"evidence functions {len(rows)}\n")
    out.write(f"max deviation {worst:.3e}\n")
    out.write("OK\n" if ok else "FAIL\n")
    return 0 if ok else 1


def cmd_stats(args, out: TextIO) -> int:
    if args.qdag is None and args.network is None:
        raise CliError("stats needs a Q-DAG file or --network")
    if args.qdag is not None:
        for line in _load_qdag(args.qdag).stats().lines():
            out.write(line + "\n")
    if args.network is not None:
        tree = join_tree(_load_network(args.network), _split_list(args.evidence))
        for i, c in enumerate(tree.clusters):
            out.write(f"cluster {i} size {len(c)} {' '.join(c)}\n")
        for i, j in tree.edges:
            out.write(f"edge {i} {j} separator {' '.join(tree.separator(i, j))}\n")
    return 0


def _show(state: EvaluationState, out: TextIO, only: set[str] | None = None) -> None:
    for X in state.qdag.query_vars:
        if only is not None and X not in only:
            continue
        try:
            _, post = state.marginal(X)
        except InconsistentEvidence:
            out.write(f"{X} inconsistent evidence\n")
            continue
        out.write(f"{X} " + " ".join(f"{x}={fmt(p)}" for x, p in post.items()) + "\n")


def repl(q: QDag, inp: TextIO, out: TextIO) -> int:
    """Interactive loop: ``set V=v`` (or ``set V v``), ``unset V``, ``show``, ``quit``."""
    state = EvaluationState(q)
    _show(state, out)
    for line in inp:
        words = line.split()
        if not words:
            continue
        cmd = words[0]
        try:
            if cmd == "quit":
                break
            if cmd == "show":
                _show(state, out)
            elif cmd == "set" and (len(words) == 3 or len(words) == 2 and "=" in words[1]):
                var, val = words[1:] if len(words) == 3 else words[1].split("=", 1)
                changed = state.set_evidence(var, val)
                _show(state, out, {v for v, _ in changed})
            elif cmd == "unset" and len(words) == 2:
                changed = state.unset(words[1])
                _show(state, out, {v for v, _ in changed})
            else:
                out.write(f"unknown command: {line.strip()} (set V=v, unset V, show, quit)\n")
        except QDagError as exc:
            out.write(f"error: {exc}\n")
    return 0


def cmd_repl(args, out: TextIO) -> int:
    return repl(_load_qdag(args.qdag), sys.stdin, out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="qdag", description="Compile belief networks into Q-DAGs and evaluate them.")
    sub = p.add_subparsers(dest="command", required=True)

    def net_args(sp, query=True):
        sp.add_argument("--network", required=True, help="network file")
        sp.add_argument("--evidence", action="append", help="evidence variable(s), repeatable or comma separated")
        if query:
            sp.add_argument("--query", action="append", help="query variable(s); default all")

    c = sub.add_parser("compile", help="compile a network into a Q-DAG file")
    net_args(c)
    c.add_argument("-o", "--output", required=True, help="output file, - for stdout")
    c.add_argument("--no-fold", action="store_true", help="disable constant folding")
    c.add_argument("--no-reduce", action="store_true", help="skip numeric reduction")
    c.set_defaults(func=cmd_compile)

    e = sub.add_parser("eval", help="evaluate a Q-DAG file under evidence")
    e.add_argument("qdag")
    e.add_argument("--set", action="append", metavar="VAR=VAL")
    e.add_argument("--unknown", action="append", metavar="VAR")
    e.add_argument("--normalize", action="store_true", help="print Pr(e) and posteriors")
    e.set_defaults(func=cmd_eval)

    v = sub.add_parser("verify", help="check a compile against brute-force enumeration")
    net_args(v)
    v.add_argument("--tol", type=float, default=VERIFY_TOL)
    v.set_defaults(func=cmd_verify)

    s = sub.add_parser("stats", help="node counts of a Q-DAG file, or join-tree clusters of a network")
    s.add_argument("qdag", nargs="?")
    s.add_argument("--network")
    s.add_argument("--evidence", action="append")
    s.set_defaults(func=cmd_stats)

    r = sub.add_parser("repl", help="interactive evidence updates over a Q-DAG file")
    r.add_argument("qdag")
    r.set_defaults(func=cmd_repl)
    return p


def run_cli(argv: Sequence[str] | None = None, out: TextIO | None = None,
            err: TextIO | None = None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args, out)
    except (CliError, NetworkError, CompileError, QDagError, StateSpaceTooLarge) as exc:
        err.write(f"qdag: error: {exc}\n")
        return 1


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
