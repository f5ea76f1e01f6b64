import itertools
import random

import pytest

from qdag.generate import random_network
from qdag.oracle import (JointTable, StateSpaceTooLarge, joint, probability_of_evidence,
                         query)


class TestEnumeration:
    def test_example_hand_values(self, abc):
        # Pr(B=ON, C=ON) = .3*.25*.9 + .7*.8*.5
        assert query(abc, {"C": "ON"}, "B") == pytest.approx({"ON": 0.3475, "OFF": 0.2725})
        assert query(abc, {}, "B") == pytest.approx({"ON": 0.635, "OFF": 0.365})
        assert probability_of_evidence(abc, {"C": "ON"}) == pytest.approx(0.62)

    def test_joint_sums_to_one(self, car):
        doms = [car.domain(v) for v in car.names]
        total = sum(joint(car, dict(zip(car.names, w))) for w in itertools.product(*doms))
        assert total == pytest.approx(1.0)

    def test_observed_query_variable(self, abc):
        got = query(abc, {"C": "ON"}, "C")
        assert got == pytest.approx({"ON": 0.62, "OFF": 0.0})

    def test_bad_value(self, abc):
        with pytest.raises(ValueError):
            query(abc, {"C": "maybe"}, "B")

    def test_state_cap(self, car):
        with pytest.raises(StateSpaceTooLarge):
            query(car, {}, "Battery", cap=10)
        with pytest.raises(StateSpaceTooLarge):
            JointTable(car, cap=10)


class TestJointTable:
    def test_sweep_matches_enumeration(self):
        rng = random.Random(17)
        for _ in range(15):
            bn = random_network(rng, rng.randint(1, 5))
            table = JointTable(bn)
            for size in range(3):
                for S in itertools.combinations(bn.names, size):
                    swept = table.sweep_all(S)
                    cards = [bn.variable(v).card for v in S]
                    for combo in itertools.product(*[range(c + 1) for c in cards]):
                        e = {v: bn.domain(v)[k] for v, k, c in zip(S, combo, cards) if k < c}
                        for X in bn.names:
                            ref = query(bn, e, X)
                            for j, x in enumerate(bn.domain(X)):
                                assert swept[X][combo + (j,)] == pytest.approx(ref[x], abs=1e-14)

    def test_single_sweep_and_query(self, abc):
        table = JointTable(abc)
        assert table.sweep(("C",), "B")[0].tolist() == pytest.approx([0.3475, 0.2725])
        assert table.query({"C": "OFF"}, "B") == pytest.approx({"ON": 0.2875, "OFF": 0.0925})
