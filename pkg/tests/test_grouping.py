import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cbsest import GroupingResult, Observable, load_observable, sorted_insertion, verify_grouping
from cbsest.grouping import gc_gate_cost

from .conftest import random_observable

# identity, Z0, X0, Z1, X0X1, Z0Z1 with distinct magnitudes so the order is fixed
HAND = Observable.from_pairs(
    2, [(1.0, ""), (0.5, "Z0"), (2.0, "X0"), (-1.5, "Z1"), (1.0, "X0 X1"), (0.7, "Z0 Z1")]
)


def test_hand_traced_qwc():
    # X0 admits Z1; X0X1 clashes with Z1 on qubit 1; Z0Z1 then takes Z0
    assert sorted_insertion(HAND, "qwc").groups == ((2, 3), (4,), (5, 1))


def test_hand_traced_gc():
    # X0X1 and Z0Z1 anticommute on two qubits, so they commute
    assert sorted_insertion(HAND, "gc").groups == ((2, 3), (4, 5), (1,))


def test_no_grouping_is_sorted_singletons():
    assert sorted_insertion(HAND, "none").groups == ((2,), (3,), (4,), (5,), (1,))


def test_unknown_relation():
    with pytest.raises(ValueError):
        sorted_insertion(HAND, "xyz")


def test_pure_greedy_can_be_worse_than_qwc():
    o = Observable.from_pairs(
        2,
        [(-2.76, "Z0 X1"), (2.22, "X0"), (0.20, "Z1"), (-0.84, "Y0"), (0.67, "Z0"), (-1.82, "Y0 Y1")],
    )
    pure = sorted_insertion(o, "gc", qwc_fallback=False)
    qwc = sorted_insertion(o, "qwc")
    assert (len(pure), len(qwc)) == (4, 3)
    result = sorted_insertion(o, "gc")
    assert result.groups == qwc.groups
    assert verify_grouping(o, result) == (True, [])


@given(st.integers(0, 2**32 - 1), st.integers(1, 5), st.integers(1, 25))
@settings(max_examples=60, deadline=None)
def test_invariants_on_random_observables(seed, n, m):
    o = random_observable(np.random.default_rng(seed), n, m)
    non_identity = sum(1 for t in o.terms if not t.string.is_identity)
    counts = {}
    for relation in ("none", "qwc", "gc"):
        result = sorted_insertion(o, relation)
        ok, problems = verify_grouping(o, result)
        assert ok, problems
        counts[relation] = len(result)
    assert counts["gc"] <= counts["qwc"] <= counts["none"] == non_identity


def test_verify_reports_problems():
    bad = GroupingResult("qwc", ((2, 5), (3,), (3, 0), (4,)))
    ok, problems = verify_grouping(HAND, bad)
    assert not ok
    text = "\n".join(problems)
    assert "more than once" in text
    assert "identity term 0" in text
    assert "[1]" in text
    assert "do not commute" in text
    assert not verify_grouping(HAND, GroupingResult("none", ((2, 3), (4,), (5,), (1,))))[0]
    assert not verify_grouping(HAND, GroupingResult("zz", ()))[0]


def test_json_roundtrip():
    result = sorted_insertion(HAND, "gc")
    back = GroupingResult.from_json(result.to_json())
    assert back.relation == "gc" and back.groups == result.groups


def test_gate_cost():
    assert gc_gate_cost(1) == 0
    assert gc_gate_cost(4) == 8
    assert sorted_insertion(HAND, "gc").two_qubit_gate_cost == (4, 4, 4)
    assert set(sorted_insertion(HAND, "qwc").two_qubit_gate_cost) == {0}


def test_fixture_group_counts(h2_path):
    h = load_observable(h2_path)
    counts = [len(sorted_insertion(h, r)) for r in ("none", "qwc", "gc")]
    assert counts == [14, 5, 2]
