"""Private look-up tables, circuits of LUT gates, and the LUT merger / merge-sorter.

Every wire holds an XOR-shared value.  A LUT gate reads entry ``j`` of the
table ``R_A xor R_B`` where ``j`` is the concatenation of its index wires.
It costs one Ind_AB plus one Ind_BA, issued in the same OT round.  Linear
gates (xor, split, concat, const) are local.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .harness import run_two_party
from .indexing import Lookup, Ring, is_pow2, lookup_batch


class CircuitError(ValueError):
    pass


# --- single LUT ----------------------------------------------------------------------------


def lut_lookups(j: int, table: Sequence[int], role: str, m: int) -> list[Lookup]:
    """The two lookups of one LUT read, in the agreed order (B's table first)."""
    w = len(table)
    ring = Ring.bits(m)
    if role == "A":
        return [Lookup(j, w, ring), Lookup(j, w, ring, table)]
    return [Lookup(j, w, ring, table), Lookup(j, w, ring)]


def lut_eval_party(party, j: int, table: Sequence[int], m: int) -> int:
    """One endpoint of a LUT read; returns this party's share of R_A[j] xor R_B[j]."""
    w = len(table)
    if not is_pow2(w):
        raise CircuitError(f"LUT width {w} is not a power of two")
    if not 0 <= j < w:
        raise CircuitError(f"index share {j} out of range")
    s1, s2 = lookup_batch(party, lut_lookups(j, table, party.role, m))
    return s1 ^ s2


def lut_eval(jA: int, RA: Sequence[int], jB: int, RB: Sequence[int], m: Optional[int] = None,
             *, seed=0, backend="ideal", k=128):
    if len(RA) != len(RB):
        raise CircuitError(f"table widths differ: {len(RA)} vs {len(RB)}")
    if m is None:
        m = max(1, max(list(RA) + list(RB)).bit_length())
    return run_two_party(
        lambda p: lut_eval_party(p, jA, RA, m),
        lambda p: lut_eval_party(p, jB, RB, m),
        seed=seed, backend=backend, k=k,
    )


# --- circuits ------------------------------------------------------------------------------


@dataclass(frozen=True)
class InputWire:
    wire: str
    bits: int
    owner: str  # "A" or "B"


@dataclass(frozen=True)
class LutGate:
    """``source``: ``public`` (table given, held by A), ``A``/``B`` (named private table),
    or ``shared`` (table entries are wires)."""

    out: str
    index: tuple
    m: int
    source: str
    table: tuple

    @property
    def kind(self) -> str:
        return "lut"


@dataclass(frozen=True)
class XorGate:
    out: str
    ins: tuple
    kind: str = "xor"


@dataclass(frozen=True)
class SplitGate:
    """Cut ``src`` into consecutive fields (MSB first) of the given widths."""

    outs: tuple
    src: str
    widths: tuple
    kind: str = "split"


@dataclass(frozen=True)
class ConcatGate:
    out: str
    ins: tuple
    kind: str = "concat"


@dataclass(frozen=True)
class ConstGate:
    out: str
    value: int
    bits: int
    kind: str = "const"


def _outs(g) -> tuple:
    return g.outs if isinstance(g, SplitGate) else (g.out,)


def _ins(g) -> tuple:
    if isinstance(g, LutGate):
        return tuple(g.index) + (tuple(g.table) if g.source == "shared" else ())
    if isinstance(g, SplitGate):
        return (g.src,)
    if isinstance(g, ConstGate):
        return ()
    return tuple(g.ins)


@dataclass
class LutCircuit:
    inputs: list
    gates: list
    outputs: list
    bits: dict = field(init=False)
    depth: dict = field(init=False)

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        bits: dict = {}
        depth: dict = {}

        def define(w, b, d):
            if w in bits:
                raise CircuitError(f"wire {w!r} written twice")
            if b < 0:
                raise CircuitError(f"wire {w!r} has negative width")
            bits[w] = b
            depth[w] = d

        for iw in self.inputs:
            if iw.owner not in ("A", "B"):
                raise CircuitError(f"input {iw.wire!r} has bad owner {iw.owner!r}")
            define(iw.wire, iw.bits, 0)
        self._gate_depth = []
        for g in self.gates:
            for w in _ins(g):
                if w not in bits:
                    raise CircuitError(f"gate reads wire {w!r} before it is written")
            d_in = max((depth[w] for w in _ins(g)), default=0)
            if isinstance(g, LutGate):
                ib = sum(bits[w] for w in g.index)
                wdt = 1 << ib
                if g.source == "public":
                    if len(g.table) != wdt:
                        raise CircuitError(f"public table for {g.out!r} has {len(g.table)} entries, index needs {wdt}")
                    if any(not 0 <= v < 1 << g.m for v in g.table):
                        raise CircuitError(f"public table for {g.out!r} has entries wider than {g.m} bits")
                elif g.source == "shared":
                    if len(g.table) != wdt:
                        raise CircuitError(f"shared table for {g.out!r} has {len(g.table)} wires, index needs {wdt}")
                    if any(bits[w] != g.m for w in g.table):
                        raise CircuitError(f"shared table for {g.out!r} mixes entry widths")
                elif g.source in ("A", "B"):
                    if len(g.table) != 1:
                        raise CircuitError("private table gates name exactly one table")
                else:
                    raise CircuitError(f"unknown table source {g.source!r}")
                define(g.out, g.m, d_in + 1)
                self._gate_depth.append(d_in + 1)
            elif isinstance(g, XorGate):
                if len({bits[w] for w in g.ins}) != 1:
                    raise CircuitError(f"xor inputs of {g.out!r} differ in width")
                define(g.out, bits[g.ins[0]], d_in)
                self._gate_depth.append(d_in)
            elif isinstance(g, SplitGate):
                if sum(g.widths) != bits[g.src] or len(g.widths) != len(g.outs):
                    raise CircuitError(f"split of {g.src!r} does not cover its width")
                for o, b in zip(g.outs, g.widths):
                    define(o, b, d_in)
                self._gate_depth.append(d_in)
            elif isinstance(g, ConcatGate):
                define(g.out, sum(bits[w] for w in g.ins), d_in)
                self._gate_depth.append(d_in)
            elif isinstance(g, ConstGate):
                if not 0 <= g.value < 1 << g.bits:
                    raise CircuitError(f"constant {g.value} does not fit in {g.bits} bits")
                define(g.out, g.bits, 0)
                self._gate_depth.append(0)
            else:
                raise CircuitError(f"unknown gate {g!r}")
        for w in self.outputs:
            if w not in bits:
                raise CircuitError(f"output {w!r} is never written")
        self.bits, self.depth = bits, depth

    @property
    def luts(self) -> list:
        return [g for g in self.gates if isinstance(g, LutGate)]

    def lut_widths(self) -> list[int]:
        return [1 << sum(self.bits[w] for w in g.index) for g in self.luts]

    @property
    def lut_depth(self) -> int:
        return max((d for g, d in zip(self.gates, self._gate_depth) if isinstance(g, LutGate)), default=0)

    def schedule(self) -> list[tuple[list, list]]:
        """Per level: (local gates, LUT gates).  LUTs in one level share an OT round."""
        top = max(self._gate_depth, default=0)
        local = [[] for _ in range(top + 1)]
        luts = [[] for _ in range(top + 2)]
        for g, d in zip(self.gates, self._gate_depth):
            (luts[d] if isinstance(g, LutGate) else local[d]).append(g)
        return [(local[d], luts[d + 1]) for d in range(top + 1)]


def _index_value(g: LutGate, vals: dict, bits: dict) -> int:
    j = 0
    for w in g.index:
        j = (j << bits[w]) | vals[w]
    return j


def _apply_local(g, vals: dict, bits: dict, role: Optional[str]) -> None:
    """Evaluate a local gate on plaintext values (role None) or on one party's shares."""
    if isinstance(g, XorGate):
        acc = 0
        for w in g.ins:
            acc ^= vals[w]
        vals[g.out] = acc
    elif isinstance(g, SplitGate):
        v, rem = vals[g.src], bits[g.src]
        for o, b in zip(g.outs, g.widths):
            rem -= b
            vals[o] = (v >> rem) & ((1 << b) - 1)
    elif isinstance(g, ConcatGate):
        acc = 0
        for w in g.ins:
            acc = (acc << bits[w]) | vals[w]
        vals[g.out] = acc
    elif isinstance(g, ConstGate):
        vals[g.out] = g.value if role in (None, "A") else 0


def eval_plain(circ: LutCircuit, alice_inputs: dict, bob_inputs: dict) -> dict:
    """Plaintext evaluation; returns every wire's value."""
    vals: dict = {}
    for iw in circ.inputs:
        src = alice_inputs if iw.owner == "A" else bob_inputs
        vals[iw.wire] = src[iw.wire]
    for g in circ.gates:
        if isinstance(g, LutGate):
            j = _index_value(g, vals, circ.bits)
            if g.source == "public":
                vals[g.out] = g.table[j]
            elif g.source == "shared":
                vals[g.out] = vals[g.table[j]]
            else:
                owner = alice_inputs if g.source == "A" else bob_inputs
                vals[g.out] = owner[g.table[0]][j]
        else:
            _apply_local(g, vals, circ.bits, None)
    return vals


def _share_inputs(circ: LutCircuit, inputs: dict, role: str) -> dict:
    vals = {}
    for iw in circ.inputs:
        if iw.owner == role:
            v = inputs[iw.wire]
            if not 0 <= v < 1 << iw.bits:
                raise CircuitError(f"input {iw.wire!r}={v} does not fit in {iw.bits} bits")
            vals[iw.wire] = v
        else:
            vals[iw.wire] = 0
    return vals


def eval_lut_circuit_party(party, circ: LutCircuit, inputs: dict) -> dict:
    """One endpoint: returns this party's shares of the output wires."""
    role = party.role
    vals = _share_inputs(circ, inputs, role)
    bits = circ.bits
    for local, luts in circ.schedule():
        for g in local:
            _apply_local(g, vals, bits, role)
        if not luts:
            continue
        lookups = []
        for g in luts:
            w = 1 << sum(bits[x] for x in g.index)
            if g.source == "public":
                table = list(g.table) if role == "A" else [0] * w
            elif g.source == "shared":
                table = [vals[x] for x in g.table]
            elif g.source == role:
                table = list(inputs[g.table[0]])
                if len(table) != w or any(not 0 <= v < 1 << g.m for v in table):
                    raise CircuitError(f"private table {g.table[0]!r} has the wrong shape")
            else:
                table = [0] * w
            lookups += lut_lookups(_index_value(g, vals, bits), table, role, g.m)
        got = lookup_batch(party, lookups)
        for n, g in enumerate(luts):
            vals[g.out] = got[2 * n] ^ got[2 * n + 1]
    return {w: vals[w] for w in circ.outputs}


def eval_lut_circuit(circ: LutCircuit, alice_inputs: dict, bob_inputs: dict, *, seed=0, backend="ideal",
                     transport="mem", k=128):
    """Private evaluation; returns (plain outputs, run result)."""
    res = run_two_party(
        lambda p: eval_lut_circuit_party(p, circ, alice_inputs),
        lambda p: eval_lut_circuit_party(p, circ, bob_inputs),
        seed=seed, backend=backend, transport=transport, k=k,
    )
    return {w: res.alice[w] ^ res.bob[w] for w in circ.outputs}, res


# --- builder and text format -----------------------------------------------------------------


class CircuitBuilder:
    def __init__(self):
        self.inputs: list = []
        self.gates: list = []
        self.outputs: list = []
        self.bits: dict = {}
        self._n = 0

    def fresh(self, stem: str = "w") -> str:
        self._n += 1
        return f"{stem}{self._n}"

    def input(self, owner: str, bits: int, name: Optional[str] = None) -> str:
        name = name or self.fresh("in")
        self.inputs.append(InputWire(name, bits, owner))
        self.bits[name] = bits
        return name

    def const(self, value: int, bits: int) -> str:
        out = self.fresh("k")
        self.gates.append(ConstGate(out, value, bits))
        self.bits[out] = bits
        return out

    def lut(self, index: Sequence[str], m: int, source: str, table: Sequence, name: Optional[str] = None) -> str:
        out = name or self.fresh("t")
        self.gates.append(LutGate(out, tuple(index), m, source, tuple(table)))
        self.bits[out] = m
        return out

    def xor(self, *ins: str) -> str:
        out = self.fresh("x")
        self.gates.append(XorGate(out, tuple(ins)))
        self.bits[out] = self.bits[ins[0]]
        return out

    def split(self, src: str, widths: Sequence[int]) -> list[str]:
        outs = tuple(self.fresh("s") for _ in widths)
        self.gates.append(SplitGate(outs, src, tuple(widths)))
        for o, b in zip(outs, widths):
            self.bits[o] = b
        return list(outs)

    def concat(self, *ins: str) -> str:
        out = self.fresh("c")
        self.gates.append(ConcatGate(out, tuple(ins)))
        self.bits[out] = sum(self.bits[w] for w in ins)
        return out

    def output(self, *wires: str) -> None:
        self.outputs.extend(wires)

    def build(self) -> LutCircuit:
        return LutCircuit(list(self.inputs), list(self.gates), list(self.outputs))


def circuit_to_text(circ: LutCircuit) -> str:
    lines = []
    for iw in circ.inputs:
        lines.append(f"input {iw.wire} {iw.owner} {iw.bits}")
    for g in circ.gates:
        if isinstance(g, LutGate):
            tab = ",".join(map(str, g.table))
            lines.append(f"lut {g.out} {g.m} {g.source} {','.join(g.index)} {tab}")
        elif isinstance(g, XorGate):
            lines.append(f"xor {g.out} {','.join(g.ins)}")
        elif isinstance(g, SplitGate):
            lines.append(f"split {g.src} {','.join(g.outs)} {','.join(map(str, g.widths))}")
        elif isinstance(g, ConcatGate):
            lines.append(f"concat {g.out} {','.join(g.ins)}")
        elif isinstance(g, ConstGate):
            lines.append(f"const {g.out} {g.value} {g.bits}")
    lines.append("output " + ",".join(circ.outputs))
    return "\n".join(lines) + "\n"


def circuit_from_text(text: str) -> LutCircuit:
    """Parse and validate; raises :class:`CircuitError` on any structural problem."""
    inputs, gates, outputs = [], [], []
    for raw in text.splitlines():
        parts = raw.split()
        if not parts or parts[0].startswith("#"):
            continue
        op = parts[0]
        try:
            if op == "input":
                inputs.append(InputWire(parts[1], int(parts[3]), parts[2]))
            elif op == "lut":
                out, m, src, idx, tab = parts[1], int(parts[2]), parts[3], parts[4], parts[5]
                table = tuple(int(v) for v in tab.split(",")) if src == "public" else tuple(tab.split(","))
                gates.append(LutGate(out, tuple(idx.split(",")), m, src, table))
            elif op == "xor":
                gates.append(XorGate(parts[1], tuple(parts[2].split(","))))
            elif op == "split":
                gates.append(SplitGate(tuple(parts[2].split(",")), parts[1],
                                       tuple(int(v) for v in parts[3].split(","))))
            elif op == "concat":
                gates.append(ConcatGate(parts[1], tuple(parts[2].split(","))))
            elif op == "const":
                gates.append(ConstGate(parts[1], int(parts[2]), int(parts[3])))
            elif op == "output":
                outputs.extend(parts[1].split(","))
            else:
                raise CircuitError(f"unknown line type {op!r}")
        except (IndexError, ValueError) as exc:
            if isinstance(exc, CircuitError):
                raise
            raise CircuitError(f"malformed line {raw!r}") from exc
    return LutCircuit(inputs, gates, outputs)


def and_gate_circuit() -> LutCircuit:
    cb = CircuitBuilder()
    a, b = cb.input("A", 1, "a"), cb.input("B", 1, "b")
    cb.output(cb.lut([a, b], 1, "public", [0, 0, 0, 1], "out"))
    return cb.build()


# --- merger and merge-sort -------------------------------------------------------------------

# comparator state for "b versus a" scanned from the most significant chunk
_EQ, _LT, _GT = 0, 1, 2


def _chunk_table(cb_bits: int, with_state: bool) -> list[int]:
    size = 1 << cb_bits
    out = []
    for s in (range(4) if with_state else [0]):
        for av in range(size):
            for bv in range(size):
                if s != _EQ:
                    out.append(s if s in (_LT, _GT) else _EQ)
                else:
                    out.append(_EQ if av == bv else (_LT if bv < av else _GT))
    return out


def _sel_table() -> list[int]:
    # index (flag_a, flag_b, state): 1 means emit from b
    out = []
    for fa in (0, 1):
        for fb in (0, 1):
            for s in range(4):
                out.append(1 if fa else (0 if fb else int(s in (_EQ, _LT))))
    return out


@dataclass
class MergeWires:
    outputs: list
    sels: list
    gadgets: int


def build_merge(cb: CircuitBuilder, a: Sequence[str], b: Sequence[str], v: int) -> MergeWires:
    """2n copies of the update gadget: read a[i_a], b[i_b], emit the smaller (b on ties)."""
    n = len(a)
    if n != len(b) or not is_pow2(n):
        raise CircuitError("merge inputs must have equal power-of-two length")
    ib_bits = int(math.log2(2 * n))
    zero1 = cb.const(0, 1)
    exhausted = cb.const(1 << v, v + 1)
    ea = [cb.concat(zero1, w) for w in a] + [exhausted] * n
    eb = [cb.concat(zero1, w) for w in b] + [exhausted] * n
    ia = cb.const(0, ib_bits)
    ib = cb.const(0, ib_bits)
    top = 2 * n - 1
    inc_a = [min(i + (1 - s), top) for i in range(2 * n) for s in (0, 1)]
    inc_b = [min(i + s, top) for i in range(2 * n) for s in (0, 1)]
    chunks = [2] * (v // 2) if v % 2 == 0 else [1] + [2] * (v // 2)
    outs, sels = [], []
    for _ in range(2 * n):
        ra = cb.lut([ia], v + 1, "shared", ea)
        rb = cb.lut([ib], v + 1, "shared", eb)
        fa, va = cb.split(ra, [1, v])
        fb, vb = cb.split(rb, [1, v])
        pa = cb.split(va, chunks)
        pb = cb.split(vb, chunks)
        state = None
        for ca, cbw, width in zip(pa, pb, chunks):
            if state is None:
                state = cb.lut([ca, cbw], 2, "public", _chunk_table(width, False))
            else:
                state = cb.lut([state, ca, cbw], 2, "public", _chunk_table(width, True))
        sel = cb.lut([fa, fb, state], 1, "public", _sel_table())
        outs.append(cb.lut([sel], v, "shared", [va, vb]))
        sels.append(sel)
        ia = cb.lut([ia, sel], ib_bits, "public", inc_a)
        ib = cb.lut([ib, sel], ib_bits, "public", inc_b)
    return MergeWires(outs, sels, 2 * n)


def merge_circuit(n: int, v: int) -> tuple[LutCircuit, MergeWires]:
    """Alice inputs a0..a{n-1}, Bob inputs b0..b{n-1}, each v bits."""
    cb = CircuitBuilder()
    a = [cb.input("A", v, f"a{i}") for i in range(n)]
    b = [cb.input("B", v, f"b{i}") for i in range(n)]
    mw = build_merge(cb, a, b, v)
    cb.output(*mw.outputs)
    return cb.build(), mw


def sort_circuit(n: int, v: int) -> tuple[LutCircuit, int]:
    """Merge-sort network of merges; values are Alice's inputs v0..v{n-1}."""
    if not is_pow2(n):
        raise CircuitError("sort length must be a power of two")
    cb = CircuitBuilder()
    runs = [[cb.input("A", v, f"v{i}")] for i in range(n)]
    gadgets = 0
    while len(runs) > 1:
        nxt = []
        for i in range(0, len(runs), 2):
            mw = build_merge(cb, runs[i], runs[i + 1], v)
            gadgets += mw.gadgets
            nxt.append(mw.outputs)
        runs = nxt
    cb.output(*runs[0])
    return cb.build(), gadgets


@dataclass
class MergeResult:
    values: list
    sources: list  # "a" or "b" per output
    gadget_count: int
    lut_count: int
    run: object = None


def _value_bits(vals) -> int:
    return max(1, max(vals, default=0).bit_length())


def lut_merge(a: Sequence[int], b: Sequence[int], *, mode: str = "plain", debug: bool = False,
              v: Optional[int] = None, **kw) -> MergeResult:
    a, b = list(a), list(b)
    if debug:
        for name, lst in (("a", a), ("b", b)):
            if any(lst[i] > lst[i + 1] for i in range(len(lst) - 1)):
                raise CircuitError(f"input {name} is not sorted")
    v = v or _value_bits(a + b)
    circ, mw = merge_circuit(len(a), v)
    ain = {f"a{i}": x for i, x in enumerate(a)}
    bin_ = {f"b{i}": x for i, x in enumerate(b)}
    run = None
    plain = eval_plain(circ, ain, bin_)
    sources = ["b" if plain[s] else "a" for s in mw.sels]
    if mode == "plain":
        values = [plain[w] for w in mw.outputs]
    elif mode == "compiled":
        outs, run = eval_lut_circuit(circ, ain, bin_, **kw)
        values = [outs[w] for w in mw.outputs]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    if debug and values != sorted(a + b):
        raise CircuitError("merge output is not the sorted union")
    return MergeResult(values, sources, mw.gadgets, len(circ.luts), run)


def lut_merge_sort(values: Sequence[int], *, mode: str = "plain", v: Optional[int] = None, **kw) -> MergeResult:
    values = list(values)
    n = len(values)
    if n == 0 or not is_pow2(n):
        raise CircuitError("length must be a power of two")
    v = v or _value_bits(values)
    circ, gadgets = sort_circuit(n, v)
    ain = {f"v{i}": x for i, x in enumerate(values)}
    run = None
    if mode == "plain":
        vals = eval_plain(circ, ain, {})
        out = [vals[w] for w in circ.outputs]
    elif mode == "compiled":
        outs, run = eval_lut_circuit(circ, ain, {}, **kw)
        out = [outs[w] for w in circ.outputs]
    else:
        raise ValueError(f"unknown mode {mode!r}")
    return MergeResult(out, [], gadgets, len(circ.luts), run)
