import pytest
from hypothesis import given, settings, strategies as st

from cpsfe.indexing import (
    GIndInstance,
    GIndPlan,
    IndexingError,
    Ring,
    gind,
    gind_plain,
    gind_public_start,
    ind_ab,
    ind_ba,
    ind_two_level,
)
from cpsfe.kernel import BitString, SeededRng, bits


def test_ring_choice_follows_width():
    assert Ring.for_width(8) == Ring("xor", 3)
    assert Ring.for_width(3) == Ring("mod", 3)
    assert Ring.for_width(1) == Ring("xor", 0)


@given(st.integers(1, 40), st.integers(0, 10**6))
def test_ring_split_recombines(w, seed):
    ring = Ring.for_width(w)
    rng = SeededRng(seed)
    v = rng.randbelow(w)
    a, b = ring.split(v, rng)
    assert ring.combine(a, b) == v


def test_ind_ab_and_ba():
    ys = [bits(f"{v:04b}") for v in (3, 9, 14, 6)]
    pi = bits("10")
    for j in range(4):
        J = BitString(pi.value ^ j, 2)
        res = ind_ab(J, pi, ys, seed=j)
        assert res.alice ^ res.bob == ys[j]
        res = ind_ba(pi, ys, J, seed=j)
        assert res.alice ^ res.bob == ys[j]
        assert res.meter.ot_log == [4]


def test_ind_rejects_bad_lists():
    with pytest.raises(IndexingError):
        ind_ab(bits("00"), bits("00"), [bits("1")] * 3)
    with pytest.raises(IndexingError):
        ind_ab(bits("00"), bits("00"), [bits("1"), bits("10"), bits("1"), bits("1")])


def test_two_level_worked_value():
    xs = [10, 20, 30, 40]
    ys = [2, 0, 3, 1, 2, 2, 0, 1]
    res = ind_two_level(1, xs, ys, seed=3)
    assert res.alice == xs[ys[1]]
    shared = ind_two_level(6, xs, ys, final_send=False, seed=4)
    assert shared.alice ^ shared.bob == xs[ys[6]]


def test_two_level_rejects_out_of_range():
    with pytest.raises(IndexingError):
        ind_two_level(9, [1, 2], [0, 1])
    with pytest.raises(IndexingError):
        ind_two_level(0, [1, 2], [0, 2])


def test_gind_hamming_lists():
    levels = [[1, 2], [1, 3, 5, 7], [1, 2, 5, 6, 9, 10, 13, 14],
              [0, 1, 0, 1, 1, 2, 1, 2, 0, 1, 0, 1, 1, 2, 1, 2]]
    inst = GIndInstance(levels, 0, out_bits=2)
    res = gind_public_start(inst, seed=1)
    assert res.alice ^ res.bob == 1
    assert res.meter.ot_log == [2, 4, 8, 16]
    assert res.meter.ot_rounds == 4


@st.composite
def gind_instances(draw):
    c = 2 * draw(st.integers(1, 3))
    widths = [draw(st.integers(1, 9)) for _ in range(c)]
    out_bits = draw(st.integers(1, 6))
    levels = []
    for i, w in enumerate(widths):
        bound = widths[i + 1] if i + 1 < c else 1 << out_bits
        levels.append([draw(st.integers(0, bound - 1)) for _ in range(w)])
    j0 = draw(st.integers(0, widths[0] - 1))
    return GIndInstance(levels, j0, out_bits)


@settings(max_examples=60, deadline=None)
@given(gind_instances(), st.integers(0, 1000))
def test_gind_matches_pointer_jumping(inst, seed):
    res = gind(inst, seed=seed)
    assert res.alice ^ res.bob == gind_plain(inst.levels, inst.j0)
    assert res.meter.ot_log == list(inst.plan.widths)


def test_gind_outputs_are_fresh_shares():
    inst = GIndInstance([[1, 0], [3, 2]], 1, out_bits=2)
    alice_shares = {gind(inst, seed=s).alice for s in range(40)}
    assert len(alice_shares) == 4


def test_gind_plan_validation():
    with pytest.raises(IndexingError):
        GIndPlan((2, 4, 8), 1)
    with pytest.raises(IndexingError):
        GIndInstance([[0, 4], [1, 1, 1, 1]], 0)
    with pytest.raises(IndexingError):
        GIndInstance([[0, 1], [1, 1]], 5)
