"""Compare the compiled and pure-Python evaluation kernels.

Run from the repository root after building the extension::

    python3 benchmarks/bench_eval.py [--networks N] [--vars V] [--repeat R]
"""

import argparse
import random
import time

import numpy as np

from qdag import kernels
from qdag.compiler import compile_qdag
from qdag.evaluator import EvaluationState, all_evidence, evaluate, evaluate_batch
from qdag.generate import random_network
from qdag.network import UNKNOWN


def timed(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def workload(n_networks, n_vars, seed):
    rng = random.Random(seed)
    cases = []
    for k in range(n_networks):
        bn = random_network(rng, n_vars, max_card=3, name=f"bench{k}")
        ev = rng.sample(bn.names, min(4, len(bn.names)))
        cases.append((bn, ev, compile_qdag(bn, ev, bn.names)))
    return cases


def run_single(cases, backend):
    for _, _, q in cases:
        evaluate(q, {}, backend)


def run_batch(cases, backend):
    for _, _, q in cases:
        evaluate_batch(q, all_evidence(q), backend)


def run_incremental(cases, backend, steps=50):
    rng = random.Random(0)
    for bn, ev, q in cases:
        state = EvaluationState(q, backend)
        for _ in range(steps):
            v = rng.choice(ev)
            state.set_evidence(v, rng.choice(bn.domain(v) + (UNKNOWN,)))


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--networks", type=int, default=20)
    ap.add_argument("--vars", type=int, default=14)
    ap.add_argument("--repeat", type=int, default=3)
    ap.add_argument("--seed", type=int, default=5)
    args = ap.parse_args(argv)

    cases = workload(args.networks, args.vars, args.seed)
    nodes = sum(len(q.nodes) for _, _, q in cases)
    print(f"{len(cases)} networks of {args.vars} variables, {nodes} Q-DAG nodes in total")
    if "cython" not in kernels.BACKENDS:
        print("compiled extension not built; only the Python kernels are available")

    # both backends must agree bit for bit before timings mean anything
    if "cython" in kernels.BACKENDS:
        for _, _, q in cases:
            rows = all_evidence(q)
            a = evaluate_batch(q, rows, kernels.BACKENDS["python"])
            b = evaluate_batch(q, rows, kernels.BACKENDS["cython"])
            assert np.array_equal(a, b)

    benches = [("evaluate", run_single), ("evaluate_batch", run_batch),
               ("propagate", run_incremental)]
    print(f"{'kernel':<16}" + "".join(f"{name:>12}" for name in kernels.BACKENDS) + "     speedup")
    for label, fn in benches:
        times = {name: timed(lambda be=be: fn(cases, be), args.repeat)
                 for name, be in kernels.BACKENDS.items()}
        line = f"{label:<16}" + "".join(f"{t * 1e3:>10.1f}ms" for t in times.values())
        if "cython" in times:
            line += f"  {times['python'] / times['cython']:>9.1f}x"
        print(line)


if __name__ == "__main__":
    main()
