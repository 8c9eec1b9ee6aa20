import itertools

import pytest

from cpsfe.cc import build_hamming_tree, constant_tree
from cpsfe.garbled import (
    BoolBuilder,
    WireSecret,
    _parse_setup,
    _setup_payload,
    eval_garbled_gate,
    garble,
    garble_gate_table,
    garbled_tree,
    translate_receive,
    translate_send,
    tree_circuits,
)
from cpsfe.harness import run_two_party
from cpsfe.kernel import SeededRng
from cpsfe.transport import ProtocolAbort

K = 32


def bits_of(v, n):
    return [(v >> (n - 1 - i)) & 1 for i in range(n)]


def secrets(seed):
    rng = SeededRng(seed)
    return [WireSecret(rng.getrandbits(K), rng.getrandbits(K), rng.getrandbits(1)) for _ in range(3)]


@pytest.mark.parametrize("tt", list(itertools.product((0, 1), repeat=4)))
def test_gate_table_decrypts_each_row(tt):
    si, sj, so = secrets(sum(tt) + 8 * tt[0])
    table = garble_gate_table(7, tt, si, sj, so, K)
    for bi, bj in itertools.product((0, 1), repeat=2):
        out = eval_garbled_gate(table, 7, si.encode(bi), sj.encode(bj), K)
        assert so.decode(out) == tt[2 * bi + bj]
        assert out == so.encode(tt[2 * bi + bj])


def test_wrong_gate_id_gives_garbage():
    si, sj, so = secrets(1)
    table = garble_gate_table(3, (0, 1, 1, 0), si, sj, so, K)
    with pytest.raises(ProtocolAbort):
        so.decode(eval_garbled_gate(table, 4, si.encode(1), sj.encode(0), K))


def test_not_is_a_label_swap():
    bb = BoolBuilder()
    a = bb.input()
    n = bb.not_(a)
    assert bb.not_(n) == a
    circ = bb.build({}, [n])
    gb = garble(circ, SeededRng(2), K, [1])
    assert gb.tables == {} and gb.prf_evals == 0
    s_in, s_out = gb.secrets[a], gb.secrets[n]
    assert (s_out.w0, s_out.w1, s_out.perm) == (s_in.w1, s_in.w0, s_in.perm ^ 1)
    assert s_out.decode(gb.given[a]) == 0


def test_constants_fold():
    bb = BoolBuilder()
    a = bb.input()
    assert bb.and_(a, -1) == -1
    assert bb.xor(a, -1) == a
    assert bb.xor(a, -2) == bb.not_(a)
    assert bb.gate((0, 0, 0, 0), a, a) == -1


@pytest.mark.parametrize("pi_i,pi_j,m", list(itertools.product((0, 1), repeat=3)))
def test_translate_wire(pi_i, pi_j, m):
    rng = SeededRng(100 + 4 * pi_i + 2 * pi_j + m)
    source = WireSecret(rng.getrandbits(K), rng.getrandbits(K), pi_i)
    target = WireSecret(rng.getrandbits(K), rng.getrandbits(K), pi_j)
    res = run_two_party(
        lambda p: translate_receive(p, source.perm),
        lambda p: translate_send(p, source.encode(m), target),
        seed=3, k=K,
    )
    assert res.alice == target.encode(m)
    assert res.meter.ot_log == [2]


@pytest.mark.parametrize("n", [1, 2])
def test_hamming_end_to_end(n):
    tree = build_hamming_tree(n)
    for x, y in itertools.product(range(1 << n), repeat=2):
        z, res = garbled_tree(tree, bits_of(x, n), bits_of(y, n), seed=x * 7 + y, k=K)
        assert z == bin(x ^ y).count("1")
        assert res.meter.ot_log == [2] * tree.depth


def test_constant_protocol_has_no_tables():
    tree = constant_tree(4, 5, 3)
    ca, cb = tree_circuits(tree, 2, 2)
    assert ca.table_gates == [] and cb.table_gates == []
    z, _ = garbled_tree(tree, [0, 1], [1, 1], k=K)
    assert z == 5


def test_labels_fresh_across_seeds():
    tree = build_hamming_tree(2)
    firsts = set()
    for seed in range(5):
        _, res = garbled_tree(tree, [0, 1], [1, 1], seed=seed, k=K)
        firsts.add(res.views["B"][0])
    assert len(firsts) == 5


def test_communication_shape_is_input_independent():
    tree = build_hamming_tree(2)
    ca, cb = tree_circuits(tree, 2, 2)
    sizes = set()
    for x, y in itertools.product(range(4), repeat=2):
        _, res = garbled_tree(tree, bits_of(x, 2), bits_of(y, 2), seed=1, k=K)
        sizes.add((res.meter.bytes_sent["A"], res.meter.bytes_sent["B"], res.meter.prf_evals))
        gates = len(ca.table_gates) + len(cb.table_gates)
        assert res.meter.prf_evals <= 10 * gates
    assert len(sizes) == 1


def test_mismatched_schedule_aborts():
    ca2, _ = tree_circuits(build_hamming_tree(2), 2, 2)
    ca3, _ = tree_circuits(build_hamming_tree(3), 3, 3)
    gb = garble(ca2, SeededRng(1), K, [0, 1])
    payload = _setup_payload(ca2, gb, K)
    with pytest.raises(ProtocolAbort):
        _parse_setup(payload, ca3, K)
    with pytest.raises(ProtocolAbort):
        _parse_setup(payload[:-1], ca2, K)
    tables, given = _parse_setup(payload, ca2, K)
    assert tables == gb.tables and given == gb.given


def test_input_length_checked():
    ca, _ = tree_circuits(build_hamming_tree(2), 2, 2)
    with pytest.raises(ValueError):
        garble(ca, SeededRng(0), K, [1])
