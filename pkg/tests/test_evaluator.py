import random

import numpy as np
import pytest

from qdag import kernels
from qdag.compiler import compile_qdag
from qdag.evaluator import (EvaluationState, Evidence, EvidenceError, InconsistentEvidence,
                            all_evidence, decode, evaluate, evaluate_batch, evaluate_nodes,
                            marginal)
from qdag.generate import random_network
from qdag.network import UNKNOWN

BACKENDS = sorted(kernels.BACKENDS)


@pytest.fixture(scope="module")
def example(abc):
    return compile_qdag(abc, ["C"], ["B"])


class TestEvidence:
    def test_missing_variables_are_unknown(self, example):
        ev = Evidence(example)
        assert ev["C"] == UNKNOWN
        assert ev.observed() == {}
        assert ev.codes() == [-1]

    def test_rejects_bad_entries(self, example):
        with pytest.raises(EvidenceError):
            Evidence(example, {"A": "ON"})
        with pytest.raises(EvidenceError):
            Evidence(example, {"C": "maybe"})

    def test_copy_is_independent(self, example):
        ev = Evidence(example, {"C": "ON"})
        cp = ev.copy()
        cp["C"] = "OFF"
        assert ev["C"] == "ON" and cp != ev


class TestEvaluate:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_example_values(self, example, backend):
        be = kernels.BACKENDS[backend]
        cases = {"ON": (0.3475, 0.2725), "OFF": (0.2875, 0.0925), UNKNOWN: (0.635, 0.365)}
        for c, (on, off) in cases.items():
            got = evaluate(example, {"C": c}, backend=be)
            assert got[("B", "ON")] == pytest.approx(on, abs=1e-12)
            assert got[("B", "OFF")] == pytest.approx(off, abs=1e-12)

    def test_marginal(self, example):
        pr_e, post = marginal(example, {"C": "ON"}, "B")
        assert pr_e == pytest.approx(0.62)
        assert post["ON"] == pytest.approx(0.3475 / 0.62)
        with pytest.raises(EvidenceError):
            marginal(example, {}, "A")

    def test_inconsistent_evidence(self):
        from qdag.network import parse_network
        bn = parse_network("network z\nvariable A { a b }\nvariable B { a b }\n"
                           "cpt A { 1 0 }\ncpt B | A {\n a : 1 0\n b : 0.5 0.5\n}\n")
        q = compile_qdag(bn, ["B"], ["A"])
        assert evaluate(q, {"B": "b"}) == {("A", "a"): 0.0, ("A", "b"): 0.0}
        with pytest.raises(InconsistentEvidence):
            marginal(q, {"B": "b"}, "A")

    def test_visit_count_is_reachable_count(self, example):
        _, visited = evaluate_nodes(example, {"C": "ON"})
        assert visited == sum(example.reachable())

    def test_batch_matches_single(self, car):
        q = compile_qdag(car, ["BatterySensor", "FuelSensor"], car.names)
        rows = all_evidence(q)
        assert rows.shape == (16, 2)
        batch = evaluate_batch(q, rows)
        keys = list(q.queries)
        for r, row in enumerate(rows):
            single = evaluate(q, decode(q, row))
            assert [single[k] for k in keys] == list(batch[r])

    def test_batch_without_evidence_vars(self, car):
        q = compile_qdag(car, [], ["Battery"])
        out = evaluate_batch(q, all_evidence(q))
        assert out.shape == (1, 3)
        assert out.sum() == pytest.approx(1.0)

    def test_batch_rejects_bad_codes(self, example):
        with pytest.raises(EvidenceError):
            evaluate_batch(example, [[2]])
        with pytest.raises(EvidenceError):
            evaluate_batch(example, [[0, 0]])


@pytest.mark.skipif("cython" not in kernels.BACKENDS, reason="extension not built")
class TestBackendsAgree:
    def test_bit_identical(self):
        rng = random.Random(12)
        for _ in range(15):
            bn = random_network(rng, rng.randint(2, 8))
            ev = [v for v in bn.names if rng.random() < 0.4]
            q = compile_qdag(bn, ev, bn.names, fold=rng.random() < 0.5)
            rows = all_evidence(q)
            a = evaluate_batch(q, rows, backend=kernels.BACKENDS["python"])
            b = evaluate_batch(q, rows, backend=kernels.BACKENDS["cython"])
            assert np.array_equal(a, b)
            sa = EvaluationState(q, kernels.BACKENDS["python"])
            sb = EvaluationState(q, kernels.BACKENDS["cython"])
            for _ in range(20):
                v = rng.choice(ev) if ev else None
                if v is None:
                    break
                x = rng.choice(bn.domain(v) + (UNKNOWN,))
                assert sa.set_evidence(v, x) == sb.set_evidence(v, x)
                assert sa.last_recomputed == sb.last_recomputed
                assert sa.results() == sb.results()


class TestIncremental:
    @pytest.mark.parametrize("backend", BACKENDS)
    def test_matches_full_evaluation(self, backend):
        be = kernels.BACKENDS[backend]
        rng = random.Random(99)
        for _ in range(10):
            bn = random_network(rng, rng.randint(2, 8))
            ev = [v for v in bn.names if rng.random() < 0.5] or [bn.names[-1]]
            q = compile_qdag(bn, ev, bn.names, fold=rng.random() < 0.5)
            state = EvaluationState(q, be)
            reachable = sum(q.reachable())
            for _ in range(30):
                v = rng.choice(ev)
                x = rng.choice(bn.domain(v) + (UNKNOWN,))
                before = state.results()
                changed = state.set_evidence(v, x)
                fresh = evaluate(q, state.evidence, be)
                assert state.results() == fresh
                assert changed == {k for k in fresh if fresh[k] != before[k]}
                assert state.last_recomputed <= reachable

    def test_repeat_is_free(self, example):
        state = EvaluationState(example)
        state.set_evidence("C", "ON")
        assert state.set_evidence("C", "ON") == set()
        assert state.last_recomputed == 0

    def test_only_downstream_nodes_recomputed(self, car):
        q = compile_qdag(car, ["OilSensor", "BatterySensor"], car.names)
        state = EvaluationState(q)
        state.set_evidence("OilSensor", "warning")
        # the oil subtree is small compared with the whole graph
        assert 0 < state.last_recomputed < sum(q.reachable())
        pr_e, post = state.marginal("OilSystem")
        assert post["leak"] > 0.5
        state.unset("OilSensor")
        assert state.results() == evaluate(q, {})

    def test_node_value(self, example):
        state = EvaluationState(example)
        state.set_evidence("C", "OFF")
        nid = example.queries[("B", "ON")]
        assert state.node_value(nid) == pytest.approx(0.2875)
