import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from cpsfe.lut import (
    CircuitBuilder,
    CircuitError,
    and_gate_circuit,
    circuit_from_text,
    circuit_to_text,
    eval_lut_circuit,
    eval_plain,
    lut_eval,
    lut_merge,
    lut_merge_sort,
    sort_circuit,
)


def test_lut_eval_example():
    res = lut_eval(1, [5, 2, 3, 7], 1, [1, 6, 0, 2], 3)
    assert res.alice ^ res.bob == 5 ^ 1
    assert res.meter.ot_log == [4, 4]
    assert res.meter.ot_rounds == 1


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 3), st.data())
def test_lut_eval_matches_xor_of_tables(logw, data):
    w = 1 << logw
    tab = st.lists(st.integers(0, 15), min_size=w, max_size=w)
    RA, RB = data.draw(tab), data.draw(tab)
    jA, jB = data.draw(st.integers(0, w - 1)), data.draw(st.integers(0, w - 1))
    res = lut_eval(jA, RA, jB, RB, 4)
    assert res.alice ^ res.bob == RA[jA ^ jB] ^ RB[jA ^ jB]


def test_lut_eval_rejects_bad_tables():
    with pytest.raises(CircuitError):
        lut_eval(0, [1, 2, 3], 0, [1, 2, 3])
    with pytest.raises(CircuitError):
        lut_eval(0, [1, 2], 0, [1, 2, 3, 4])


def test_and_gate():
    circ = and_gate_circuit()
    for a, b in itertools.product((0, 1), repeat=2):
        out, res = eval_lut_circuit(circ, {"a": a}, {"b": b}, seed=a + 2 * b)
        assert out["out"] == a & b
        assert res.meter.ot_log == [4, 4]


def test_text_round_trip():
    cb = CircuitBuilder()
    x = cb.input("A", 2, "x")
    y = cb.input("B", 2, "y")
    s = cb.xor(x, y)
    hi, lo = cb.split(s, [1, 1])
    t = cb.lut([hi, lo], 3, "public", [1, 2, 3, 4], "t")
    u = cb.concat(t, cb.const(1, 1))
    cb.output(u)
    circ = cb.build()
    back = circuit_from_text(circuit_to_text(circ))
    for xv, yv in itertools.product(range(4), repeat=2):
        assert eval_plain(back, {"x": xv}, {"y": yv}) == eval_plain(circ, {"x": xv}, {"y": yv})


def test_circuit_validation():
    cb = CircuitBuilder()
    x = cb.input("A", 1, "x")
    cb.lut([x], 2, "public", [1, 2, 3])  # wrong table size
    with pytest.raises(CircuitError):
        cb.build()
    with pytest.raises(CircuitError):
        circuit_from_text("frobnicate a b c")


def test_merge_tie_takes_b_first():
    res = lut_merge([5], [5], mode="plain")
    assert res.values == [5, 5] and res.sources == ["b", "a"]


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 3), st.data())
def test_merge_plain(logn, data):
    n = 1 << logn
    lst = st.lists(st.integers(0, 63), min_size=n, max_size=n).map(sorted)
    a, b = data.draw(lst), data.draw(lst)
    res = lut_merge(a, b, mode="plain", debug=True)
    assert res.values == sorted(a + b)
    assert res.gadget_count == 2 * n


def test_merge_compiled():
    rng = random.Random(1)
    for _ in range(5):
        a = sorted(rng.randrange(16) for _ in range(4))
        b = sorted(rng.randrange(16) for _ in range(4))
        res = lut_merge(a, b, mode="compiled", seed=rng.randrange(100))
        assert res.values == sorted(a + b)
        assert res.run.meter.total_ots == 2 * res.lut_count


def test_merge_debug_checks_sortedness():
    with pytest.raises(CircuitError):
        lut_merge([3, 1], [0, 2], debug=True)


def test_sort_counts_and_values():
    _, gadgets = sort_circuit(64, 8)
    assert gadgets == 64 * 6
    rng = random.Random(2)
    vals = [rng.randrange(256) for _ in range(16)]
    assert lut_merge_sort(vals).values == sorted(vals)
    res = lut_merge_sort(vals[:8], mode="compiled", seed=3)
    assert res.values == sorted(vals[:8])
    with pytest.raises(CircuitError):
        lut_merge_sort([1, 2, 3])


def test_sort_hundred_lists_plain():
    rng = random.Random(3)
    circ, _ = sort_circuit(64, 10)
    for _ in range(100):
        vals = [rng.randrange(1024) for _ in range(64)]
        out = eval_plain(circ, {f"v{i}": v for i, v in enumerate(vals)}, {})
        assert [out[w] for w in circ.outputs] == sorted(vals)
