"""Random belief networks for property tests and benchmarks."""

from __future__ import annotations

import random

from .network import CPT, BeliefNetwork, Variable, check


def random_network(rng: random.Random, n_vars: int, max_card: int = 3,
                   max_parents: int = 3, edge_prob: float = 0.4,
                   zero_prob: float = 0.1, name: str = "random") -> BeliefNetwork:
    """A random DAG over ``n_vars`` variables, edges only from earlier to later
    variables, with random normalized CPTs.

    ``zero_prob`` is the chance an individual CPT entry is forced to 0 (one
    entry per row always stays positive).
    """
    variables = []
    for k in range(n_vars):
        card = rng.randint(2, max_card)
        variables.append(Variable(f"X{k}", tuple(f"v{j}" for j in range(card))))
    cpts = []
    for k, var in enumerate(variables):
        earlier = list(range(k))
        rng.shuffle(earlier)
        parents = sorted(p for p in earlier[:max_parents] if rng.random() < edge_prob)
        nrows = 1
        for p in parents:
            nrows *= variables[p].card
        rows = []
        for _ in range(nrows):
            w = [rng.random() + 1e-3 for _ in range(var.card)]
            keep = rng.randrange(var.card)
            for j in range(var.card):
                if j != keep and rng.random() < zero_prob:
                    w[j] = 0.0
            s = sum(w)
            rows.append(tuple(x / s for x in w))
        cpts.append(CPT(var.name, tuple(variables[p].name for p in parents), tuple(rows)))
    return check(BeliefNetwork.from_cpts(name, variables, cpts))
