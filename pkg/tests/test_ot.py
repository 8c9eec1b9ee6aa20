import pytest
from hypothesis import given, settings, strategies as st

from cpsfe.harness import run_two_party
from cpsfe.kernel import SeededRng, bits
from cpsfe.ot import (
    Choose,
    GroupOt,
    IdealOt,
    Ot12Reduction,
    OtError,
    Send,
    get_group,
    make_backend,
    ot1w_via_ot12_receive,
    ot1w_via_ot12_send,
    ot12_decrypt_slot,
    ot12_encrypt_table,
    ot_receive,
    ot_send,
)
from cpsfe.transport import ProtocolAbort


def backends():
    return {
        "ideal": IdealOt(),
        "group": GroupOt("modp1024"),
        "ot12": Ot12Reduction(GroupOt("modp1024")),
        "ot12-ideal": Ot12Reduction(IdealOt()),
    }


def run_ot(backend, values, j, elen=16, seed=0):
    w = len(values)
    return run_two_party(
        lambda p: ot_send(p, values, elen),
        lambda p: ot_receive(p, j, w, elen),
        seed=seed, backend=backend,
    )


@pytest.mark.parametrize("name", list(backends()))
@pytest.mark.parametrize("w", [2, 3, 4, 5, 8])
def test_chooser_gets_selected_value(name, w):
    values = [(37 * i + 11) % 65536 for i in range(w)]
    for j in range(w):
        res = run_ot(backends()[name], values, j, seed=j)
        assert res.bob.value == values[j]
        assert res.meter.ot_log == [w]
        assert res.meter.ot_rounds == 1


def test_bitstring_values_and_default_length():
    vals = [bits("1010"), bits("0111")]
    res = run_two_party(lambda p: ot_send(p, vals), lambda p: ot_receive(p, 1, 2, 4), backend="ideal")
    assert res.bob == bits("0111")


def test_batch_meters_each_logical_ot_once():
    def alice(p):
        return p.backend.batch(p, [Send((1, 2), 8), Choose(2, 4, 8), Send((5, 6, 7), 8)])

    def bob(p):
        return p.backend.batch(p, [Choose(0, 2, 8), Send((9, 10, 11, 12), 8), Choose(2, 3, 8)])

    for be in backends().values():
        res = run_two_party(alice, bob, backend=be)
        assert res.alice == [None, 11, None] and res.bob == [1, None, 7]
        assert sorted(res.meter.ot_log) == [2, 3, 4]
        assert res.meter.ot_rounds == 1


def test_shape_mismatch_aborts():
    with pytest.raises(ProtocolAbort):
        run_two_party(lambda p: ot_send(p, [1, 2, 3], 8), lambda p: ot_receive(p, 0, 4, 8), backend="ideal")


def test_invalid_requests_rejected():
    with pytest.raises(OtError):
        Send((), 4)
    with pytest.raises(OtError):
        Send((16,), 4)
    with pytest.raises(OtError):
        Choose(3, 3, 4)
    with pytest.raises(OtError):
        make_backend("carrier-pigeon")


def test_explicit_reduction_requires_power_of_two():
    with pytest.raises(OtError):
        run_two_party(lambda p: ot1w_via_ot12_send(p, [1, 2, 3], 8),
                      lambda p: ot1w_via_ot12_receive(p, 0, 3, 8), backend="ideal")
    res = run_two_party(lambda p: ot1w_via_ot12_send(p, [1, 2, 3, 4], 8),
                        lambda p: ot1w_via_ot12_receive(p, 2, 4, 8), backend="ideal")
    assert res.bob.value == 3
    assert res.meter.base_ot12 == 2


@settings(max_examples=30, deadline=None)
@given(st.integers(1, 4), st.integers(0, 2**20))
def test_reduction_table_hides_other_slots(L, seed):
    rng = SeededRng(seed)
    k = 64
    pairs = [(rng.getrandbits(k), rng.getrandbits(k)) for _ in range(L)]
    values = [rng.getrandbits(12) for _ in range(1 << L)]
    table = ot12_encrypt_table(values, 12, pairs, k)
    j = rng.randbelow(1 << L)
    keys = [pairs[t][(j >> (L - 1 - t)) & 1] for t in range(L)]
    assert ot12_decrypt_slot(table[j], j, keys, 12, k) == values[j]
    for i in range(1 << L):
        if i != j:
            # the chooser's keys do not open any other slot
            assert ot12_decrypt_slot(table[i], i, keys, 12, k) is None


def test_group_parameters():
    for name in ("modp1024", "modp1536", "modp2048"):
        g = get_group(name)
        assert g.p % 8 == 7
        assert pow(g.g, g.q, g.p) == 1


def test_group_rejects_out_of_range_element():
    g = get_group("modp1024")
    with pytest.raises(ProtocolAbort):
        g.decode((g.p + 1).to_bytes(g.elem_bytes, "big"))
