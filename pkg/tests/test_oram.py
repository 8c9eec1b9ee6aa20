import pytest
from hypothesis import given, settings, strategies as st

from cpsfe.kernel import SeededRng
from cpsfe.oram import (
    SCHEMES,
    AddressError,
    BasicMemory,
    HierMemory,
    SqrtMemory,
    hier_bound,
    hier_capacities,
    oram_bench,
    random_ops,
    replay,
    secure_basic_ram,
    sqrt_bound,
)


def ops_strategy(s):
    op = st.one_of(
        st.tuples(st.just("w"), st.integers(0, s - 1), st.integers(0, 255)),
        st.tuples(st.just("r"), st.integers(0, s - 1), st.none()),
    )
    return st.lists(op, max_size=120)


@pytest.mark.parametrize("name", list(SCHEMES))
@settings(max_examples=40, deadline=None)
@given(data=st.data(), s=st.sampled_from([1, 2, 5, 16, 33]))
def test_schemes_match_flat_array(name, data, s):
    ops = data.draw(ops_strategy(s))
    replay(SCHEMES[name](s), ops, [0] * s)


def test_capacities():
    assert hier_capacities(16) == [16, 4, 1]
    assert hier_capacities(64) == [64, 11, 2, 1]
    assert hier_capacities(2) == [2, 1]


def test_hier_invariants_hold_after_every_write():
    mem = HierMemory(64)
    rng = SeededRng(1)
    for i in range(600):
        mem.write(rng.randbelow(64), i)
        mem.check_invariants()
    assert mem.merges > 0


def test_basic_touches_every_cell_per_write():
    mem = BasicMemory(32, keep_trace=True)
    mem.write(7, 1)
    assert [r[2] for r in mem.trace.write_records()] == list(range(32))


def test_sqrt_log_capacity():
    assert SqrtMemory(16).cap == 4
    assert SqrtMemory(17).cap == 5


@pytest.mark.parametrize("name", list(SCHEMES))
def test_write_trace_independent_of_addresses_and_values(name):
    s = 64
    shape = ["w", "r", "w", "w", "r"] * 60
    seqs = []
    for seed in (1, 2, 3):
        rng = SeededRng(seed)
        seqs.append([(k, rng.randbelow(s), rng.getrandbits(8)) for k in shape])
    digests = set()
    for seq in seqs:
        mem = SCHEMES[name](s, keep_trace=True)
        replay(mem, seq)
        digests.add(mem.trace.write_digest)
    assert len(digests) == 1


def test_amortized_bounds():
    rows = oram_bench([16, 64, 256], 3000, seed=2)
    for r in rows:
        if r["scheme"] == "sqrt":
            assert r["touches_per_op"] <= sqrt_bound(r["s"])
        if r["scheme"] == "hier":
            assert r["touches_per_op"] <= hier_bound(r["s"])
        if r["scheme"] == "basic":
            assert r["write_touches_per_write"] == r["s"]


def test_address_checks():
    with pytest.raises(AddressError):
        BasicMemory(4).read(4)
    with pytest.raises(AddressError):
        HierMemory(4).write(-1, 0)
    with pytest.raises(ValueError):
        SqrtMemory(0)


def test_lut_bridge():
    ops = [("w", 3, 7), ("w", 5, 9), ("r", 3, None), ("w", 3, 1), ("r", 3, None), ("r", 5, None), ("r", 0, None)]
    got, run = secure_basic_ram(ops, 8, 4, seed=5)
    assert got == [7, 1, 9, 0]
    rng = SeededRng(6)
    ops = random_ops(16, 20, rng, vbits=4)
    want = replay(BasicMemory(16), ops)
    got, _ = secure_basic_ram(ops, 16, 4, seed=6)
    assert got == want
    with pytest.raises(ValueError):
        secure_basic_ram(ops, 12, 4)
