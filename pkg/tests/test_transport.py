import pytest
from hypothesis import given, strategies as st

from cpsfe.cc import build_hamming_tree, compile_and_run_cc
from cpsfe.harness import run_two_party
from cpsfe.meter import CostMeter
from cpsfe.transport import (
    Channel,
    FrameType,
    ProtocolAbort,
    TransportError,
    decode_frame,
    encode_frame,
    memory_pair,
    tcp_pair,
)


@given(st.sampled_from(list(FrameType)), st.binary(max_size=300))
def test_frame_round_trip(ftype, payload):
    data = encode_frame(ftype, payload)
    assert data[:4] == len(payload).to_bytes(4, "little")
    assert data[4] == int(ftype)
    t, p, rest = decode_frame(data + b"tail")
    assert (t, p, rest) == (ftype, payload, b"tail")


def test_truncated_and_unknown_frames():
    with pytest.raises(TransportError):
        decode_frame(b"\x05\x00")
    with pytest.raises(TransportError):
        decode_frame(encode_frame(FrameType.DATA, b"abc")[:-1])
    with pytest.raises(TransportError):
        decode_frame(b"\x00\x00\x00\x00\x09")


@pytest.mark.parametrize("maker", [memory_pair, tcp_pair])
def test_ordered_delivery(maker):
    a, b = maker()
    meter = CostMeter()
    ca, cb = Channel(a, "A", meter), Channel(b, "B", meter)
    for i in range(20):
        ca.send(bytes([i]) * i)
    assert [cb.recv() for _ in range(20)] == [bytes([i]) * i for i in range(20)]
    assert meter.bytes_sent["A"] == sum(5 + i for i in range(20))
    a.close()
    b.close()


def test_unexpected_frame_type_aborts():
    a, b = memory_pair()
    meter = CostMeter()
    Channel(a, "A", meter).send(b"x", FrameType.DATA)
    with pytest.raises(ProtocolAbort):
        Channel(b, "B", meter).recv(FrameType.SEED)


def test_closed_peer_raises():
    a, b = memory_pair()
    a.close()
    with pytest.raises(TransportError):
        Channel(b, "B", CostMeter()).recv()


def test_rounds_count_message_flights():
    def alice(p):
        p.channel.send(b"1")
        p.channel.send(b"2")
        p.channel.recv()

    def bob(p):
        p.channel.recv()
        p.channel.recv()
        p.channel.send(b"3")

    res = run_two_party(alice, bob)
    assert res.meter.rounds == 2
    assert res.views["B"] == [b"1", b"2"] and res.views["A"] == [b"3"]


def test_tcp_and_memory_meter_identically():
    tree = build_hamming_tree(2)
    m = compile_and_run_cc(tree, "01", "11", seed=4, transport="mem")
    t = compile_and_run_cc(tree, "01", "11", seed=4, transport="tcp")
    assert m.alice ^ m.bob == t.alice ^ t.bob == 1
    assert m.meter.to_dict() == t.meter.to_dict()


def test_failure_on_one_side_propagates():
    def alice(p):
        raise RuntimeError("boom")

    def bob(p):
        p.channel.recv()

    with pytest.raises(RuntimeError, match="boom"):
        run_two_party(alice, bob)
