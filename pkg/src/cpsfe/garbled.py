"""Garbled execution of an interactive protocol.

Each party garbles its own next-message circuit and hands the tables to the
other, who evaluates it.  A message bit leaves one garbling and enters the
other through a single 1-out-of-2 OT: the holder of the garbled bit is the
sender with entries ordered by its permuted bit, and the garbler of that bit
chooses with its permutation bit.

Wire values are ``(label, c)`` pairs with ``c = perm ^ bit``; on the wire a
garbled value is the (k+1)-bit integer ``label << 1 | c``.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .harness import run_two_party
from .kernel import prf_int
from .ot import ot_receive, ot_send
from .transport import ProtocolAbort

ZERO, ONE = -1, -2  # constant refs inside the builder


def _is_const(ref: int) -> bool:
    return ref < 0


def _const_val(ref: int) -> int:
    return 1 if ref == ONE else 0


def _const(bit: int) -> int:
    return ONE if bit else ZERO


@dataclass(frozen=True)
class Gate:
    out: int
    kind: str  # "tt" (two inputs, truth table) or "not"
    ins: tuple
    tt: tuple = ()


@dataclass
class BoolCircuit:
    """Next-message circuit.

    ``inputs`` are the garbler's own input bits, ``msg_in[l]`` the wires
    carrying the other party's message l, ``msg_out[l]`` this party's message
    l and ``z_out`` the final output (Alice's circuit only).
    """

    n_wires: int
    inputs: list
    consts: dict
    msg_in: dict
    gates: list
    msg_out: dict
    z_out: list = field(default_factory=list)
    c: int = 0

    @property
    def table_gates(self) -> list:
        return [g for g in self.gates if g.kind == "tt"]

    def eval_plain(self, in_bits: Sequence[int], msgs: dict) -> dict:
        """Wire values given own input bits and the other party's message bits."""
        val = dict(zip(self.inputs, in_bits))
        val.update(self.consts)
        for ell, w in self.msg_in.items():
            if ell in msgs:
                val[w] = msgs[ell]
        for g in self.gates:
            if not all(i in val for i in g.ins):
                continue
            if g.kind == "not":
                val[g.out] = 1 - val[g.ins[0]]
            else:
                val[g.out] = g.tt[2 * val[g.ins[0]] + val[g.ins[1]]]
        return val


class BoolBuilder:
    """Structural hashing plus folding of public constants."""

    def __init__(self):
        self.n = 0
        self.inputs: list = []
        self.msg_in: dict = {}
        self.gates: list = []
        self.consts: dict = {}
        self._memo: dict = {}
        self._neg: dict = {}

    def _wire(self) -> int:
        self.n += 1
        return self.n - 1

    def input(self) -> int:
        w = self._wire()
        self.inputs.append(w)
        return w

    def message_input(self, ell: int) -> int:
        w = self._wire()
        self.msg_in[ell] = w
        return w

    def not_(self, a: int) -> int:
        if _is_const(a):
            return _const(1 - _const_val(a))
        if a in self._neg:
            return self._neg[a]
        out = self._wire()
        self.gates.append(Gate(out, "not", (a,)))
        self._neg[a], self._neg[out] = out, a
        return out

    def _unary(self, u0: int, u1: int, a: int) -> int:
        if u0 == u1:
            return _const(u0)
        return a if u0 == 0 else self.not_(a)

    def gate(self, tt: Sequence[int], a: int, b: int) -> int:
        tt = tuple(int(t) for t in tt)
        if _is_const(a):
            va = _const_val(a)
            return self._unary(tt[2 * va], tt[2 * va + 1], b)
        if _is_const(b):
            vb = _const_val(b)
            return self._unary(tt[vb], tt[2 + vb], a)
        if a == b:
            return self._unary(tt[0], tt[3], a)
        if self._neg.get(a) == b:
            return self._unary(tt[1], tt[2], a)
        if tt[0] == tt[1] and tt[2] == tt[3]:
            return self._unary(tt[0], tt[2], a)
        if tt[0] == tt[2] and tt[1] == tt[3]:
            return self._unary(tt[0], tt[1], b)
        key = (tt, a, b)
        if key not in self._memo:
            out = self._wire()
            self.gates.append(Gate(out, "tt", (a, b), tt))
            self._memo[key] = out
        return self._memo[key]

    def xor(self, a, b):
        return self.gate((0, 1, 1, 0), a, b)

    def and_(self, a, b):
        return self.gate((0, 0, 0, 1), a, b)

    def mux(self, s, f0, f1):
        """f1 if s else f0."""
        if f0 == f1:
            return f0
        return self.xor(f0, self.and_(s, self.xor(f0, f1)))

    def from_table(self, refs: Sequence[int], table: Sequence[int]) -> int:
        """Circuit for a function given by its truth table, big-endian over ``refs``."""
        memo: dict = {}

        def rec(lo: int, tbl: tuple) -> int:
            if all(t == tbl[0] for t in tbl):
                return _const(tbl[0])
            key = (lo, tbl)
            if key not in memo:
                half = len(tbl) // 2
                memo[key] = self.mux(refs[lo], rec(lo + 1, tbl[:half]), rec(lo + 1, tbl[half:]))
            return memo[key]

        if len(table) != 1 << len(refs):
            raise ValueError("truth table size does not match variable count")
        return rec(0, tuple(int(t) for t in table))

    def materialize(self, ref: int) -> int:
        """Wire id for a ref; a public constant becomes a wire whose garbled value is sent."""
        if not _is_const(ref):
            return ref
        w = self._wire()
        self.consts[w] = _const_val(ref)
        return w

    def build(self, msg_out: dict, z_out: Sequence[int] = (), c: int = 0) -> BoolCircuit:
        mo = {ell: self.materialize(r) for ell, r in msg_out.items()}
        zo = [self.materialize(r) for r in z_out]
        return BoolCircuit(self.n, list(self.inputs), dict(self.consts), dict(self.msg_in),
                           list(self.gates), mo, zo, c)


def tree_circuits(tree, n_a: int, n_b: int) -> tuple[BoolCircuit, BoolCircuit]:
    """Next-message circuits for a protocol tree over n_a-bit and n_b-bit inputs.

    Circuit shape depends only on the public tree, never on the inputs.
    """
    c = tree.depth
    out = []
    for role, n_in, labeler in (("A", n_a, tree.alice), ("B", n_b, tree.bob)):
        bb = BoolBuilder()
        xin = [bb.input() for _ in range(n_in)]
        labels = [labeler(tuple((x >> (n_in - 1 - i)) & 1 for i in range(n_in))) for x in range(1 << n_in)]
        msgs: list = []
        msg_out = {}
        for d in range(c):
            ell = d + 1
            mine = (d % 2 == 0) == (role == "A")
            if mine:
                table = [lab(d, pos) for lab in labels for pos in range(1 << d)]
                ref = bb.from_table(xin + msgs, table)
                msg_out[ell] = ref
            else:
                ref = bb.message_input(ell)
            msgs.append(ref)
        z = []
        if role == "A":
            leaves = [tree.leaf_value(pos) for pos in range(1 << c)]
            for b in range(tree.leaf_bits):
                sh = tree.leaf_bits - 1 - b
                z.append(bb.from_table(msgs, [(v >> sh) & 1 for v in leaves]))
        out.append(bb.build(msg_out, z, c))
    return out[0], out[1]


# --- garbling -----------------------------------------------------------------------------


def _label_key(label: int, k: int) -> bytes:
    return label.to_bytes((k + 7) // 8, "big")


def garble_prf(label: int, gid: int, pos: int, bit: int, k: int) -> int:
    """F_label on (gate, input position, other perm bit), k+1 bits out."""
    return prf_int(_label_key(label, k), b"cpsfe/gc\x00" + struct.pack(">IBB", gid, pos, bit), k + 1)


@dataclass
class WireSecret:
    w0: int
    w1: int
    perm: int

    def label(self, bit: int) -> int:
        return self.w1 if bit else self.w0

    def encode(self, bit: int) -> int:
        return (self.label(bit) << 1) | (self.perm ^ bit)

    def decode(self, garbled: int) -> int:
        c = garbled & 1
        bit = c ^ self.perm
        if garbled >> 1 != self.label(bit):
            raise ProtocolAbort("garbled value does not match either wire label")
        return bit


@dataclass
class Garbling:
    secrets: dict
    tables: dict  # gate index -> 4 entries in (c_i, c_j) order
    given: dict   # wire -> garbled value for own inputs and constants
    prf_evals: int = 0


def garble_gate_table(gid: int, tt: Sequence[int], si: WireSecret, sj: WireSecret, so: WireSecret, k: int) -> list:
    table = [0] * 4
    for bi in (0, 1):
        for bj in (0, 1):
            ci, cj = si.perm ^ bi, sj.perm ^ bj
            table[2 * ci + cj] = (
                so.encode(tt[2 * bi + bj])
                ^ garble_prf(si.label(bi), gid, 0, cj, k)
                ^ garble_prf(sj.label(bj), gid, 1, ci, k)
            )
    return table


def eval_garbled_gate(table: Sequence[int], gid: int, gi: int, gj: int, k: int) -> int:
    """Garbled output from garbled inputs ``label << 1 | c``."""
    ci, cj = gi & 1, gj & 1
    return table[2 * ci + cj] ^ garble_prf(gi >> 1, gid, 0, cj, k) ^ garble_prf(gj >> 1, gid, 1, ci, k)


def _fresh_secret(rng, k: int) -> WireSecret:
    w0 = rng.getrandbits(k)
    w1 = rng.getrandbits(k)
    while w1 == w0:
        w1 = rng.getrandbits(k)
    return WireSecret(w0, w1, rng.getrandbits(1))


def garble(circ: BoolCircuit, rng, k: int, in_bits: Sequence[int]) -> Garbling:
    if len(in_bits) != len(circ.inputs):
        raise ValueError(f"circuit takes {len(circ.inputs)} input bits, got {len(in_bits)}")
    sec: dict = {}
    for w in list(circ.inputs) + sorted(circ.consts) + sorted(circ.msg_in.values()):
        sec[w] = _fresh_secret(rng, k)
    tables = {}
    evals = 0
    for gid, g in enumerate(circ.gates):
        if g.kind == "not":
            s = sec[g.ins[0]]
            sec[g.out] = WireSecret(s.w1, s.w0, s.perm ^ 1)
        else:
            sec[g.out] = _fresh_secret(rng, k)
            tables[gid] = garble_gate_table(gid, g.tt, sec[g.ins[0]], sec[g.ins[1]], sec[g.out], k)
            evals += 8
    given = {w: sec[w].encode(b) for w, b in zip(circ.inputs, in_bits)}
    given.update({w: sec[w].encode(v) for w, v in circ.consts.items()})
    return Garbling(sec, tables, given, evals)


class GarbledEvaluator:
    """Evaluates the other party's garbled circuit on demand."""

    def __init__(self, circ: BoolCircuit, tables: dict, given: dict, k: int):
        self.circ = circ
        self.tables = tables
        self.values = dict(given)
        self.k = k
        self.prf_evals = 0
        self._producer = {g.out: i for i, g in enumerate(circ.gates)}

    def get(self, wire: int) -> int:
        stack = [wire]
        while stack:
            w = stack[-1]
            if w in self.values:
                stack.pop()
                continue
            if w not in self._producer:
                raise ProtocolAbort(f"wire {w} is needed before its message arrived")
            gid = self._producer[w]
            g = self.circ.gates[gid]
            missing = [i for i in g.ins if i not in self.values]
            if missing:
                stack.extend(missing)
                continue
            stack.pop()
            if g.kind == "not":
                self.values[w] = self.values[g.ins[0]]
            else:
                self.values[w] = eval_garbled_gate(self.tables[gid], gid, self.values[g.ins[0]],
                                                   self.values[g.ins[1]], self.k)
                self.prf_evals += 2
        return self.values[wire]


# --- wire translation -------------------------------------------------------------------------


def translate_send(party, held: int, target: WireSecret) -> None:
    """Holder of garbled ``held`` (other garbling) offers target wire values indexed by its c_i."""
    ci = held & 1
    entries = [0, 0]
    entries[ci] = target.encode(0)
    entries[1 - ci] = target.encode(1)
    ot_send(party, entries, party.k + 1)


def translate_receive(party, perm_i: int) -> int:
    return ot_receive(party, perm_i, 2, party.k + 1).value


# --- protocol ---------------------------------------------------------------------------------


def _pack(values: Sequence[int], width: int) -> bytes:
    acc = 0
    for v in values:
        acc = (acc << width) | v
    nbytes = (len(values) * width + 7) // 8
    return acc.to_bytes(nbytes, "big")


def _unpack(data: bytes, count: int, width: int) -> list:
    if len(data) != (count * width + 7) // 8:
        raise ProtocolAbort("garbled material has the wrong length")
    acc = int.from_bytes(data, "big")
    mask = (1 << width) - 1
    return [(acc >> (width * (count - 1 - i))) & mask for i in range(count)]


def _setup_payload(circ: BoolCircuit, gb: Garbling, k: int) -> bytes:
    gids = sorted(gb.tables)
    vals = [e for gid in gids for e in gb.tables[gid]]
    given_order = list(circ.inputs) + sorted(circ.consts)
    vals += [gb.given[w] for w in given_order]
    return struct.pack("<III", circ.c, len(gids), len(given_order)) + _pack(vals, k + 1)


def _parse_setup(payload: bytes, circ: BoolCircuit, k: int) -> tuple[dict, dict]:
    c, nt, ng = struct.unpack_from("<III", payload)
    gids = [i for i, g in enumerate(circ.gates) if g.kind == "tt"]
    given_order = list(circ.inputs) + sorted(circ.consts)
    if c != circ.c:
        raise ProtocolAbort(f"message schedules disagree: {c} vs {circ.c} messages")
    if nt != len(gids) or ng != len(given_order):
        raise ProtocolAbort("garbled material does not match the circuit shape")
    vals = _unpack(payload[12:], 4 * nt + ng, k + 1)
    tables = {gid: vals[4 * i : 4 * i + 4] for i, gid in enumerate(gids)}
    given = dict(zip(given_order, vals[4 * nt :]))
    return tables, given


def garbled_party(party, mine: BoolCircuit, peer: BoolCircuit, in_bits: Sequence[int]) -> Optional[int]:
    """One side of the garbled execution; Alice returns z, Bob returns None."""
    k = party.k
    if mine.c != peer.c or mine.c % 2:
        raise ProtocolAbort("both circuits need the same even message count")
    gb = garble(mine, party.rng.fork("garble"), k, in_bits)
    party.meter.add("prf_evals", gb.prf_evals)
    party.channel.send(_setup_payload(mine, gb, k))
    tables, given = _parse_setup(party.channel.recv(), peer, k)
    ev = GarbledEvaluator(peer, tables, given, k)
    for ell in range(1, mine.c + 1):
        speaker = "A" if ell % 2 else "B"
        if party.role == speaker:
            ev.values[peer.msg_in[ell]] = translate_receive(party, gb.secrets[mine.msg_out[ell]].perm)
        else:
            translate_send(party, ev.get(peer.msg_out[ell]), gb.secrets[mine.msg_in[ell]])
    if party.role == "B":
        zs = [ev.get(w) for w in peer.z_out]
        party.meter.add("prf_evals", ev.prf_evals)
        party.channel.send(_pack(zs, k + 1))
        return None
    party.meter.add("prf_evals", ev.prf_evals)
    zs = _unpack(party.channel.recv(), len(mine.z_out), k + 1)
    z = 0
    for w, g in zip(mine.z_out, zs):
        z = (z << 1) | gb.secrets[w].decode(g)
    return z


def run_garbled_protocol(alice_circ: BoolCircuit, bob_circ: BoolCircuit, x_bits, y_bits, *, seed=0,
                         backend="ideal", transport="mem", k: int = 128):
    """Returns (z, run result)."""
    res = run_two_party(
        lambda p: garbled_party(p, alice_circ, bob_circ, x_bits),
        lambda p: garbled_party(p, bob_circ, alice_circ, y_bits),
        seed=seed, backend=backend, transport=transport, k=k,
    )
    return res.alice, res


def garbled_tree(tree, x_bits: Sequence[int], y_bits: Sequence[int], **kw):
    ca, cb = tree_circuits(tree, len(x_bits), len(y_bits))
    return run_garbled_protocol(ca, cb, list(x_bits), list(y_bits), **kw)
