"""Write-oblivious memory: full rewrite, a single sqrt(s) log, and hierarchical logs.

Each scheme records its slot touches in an :class:`AccessTrace`.  Write
touches must not depend on addresses or values, so the trace keeps a running
digest of them that tests compare across op sequences of the same shape.
Reads may depend on the address.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence


class AddressError(IndexError):
    pass


@dataclass
class AccessTrace:
    keep: bool = False
    touches: int = 0
    write_touches: int = 0
    read_touches: int = 0
    records: list = field(default_factory=list)
    _h: object = field(default_factory=hashlib.sha256, repr=False)

    def touch(self, kind: str, struct: str, slot: int) -> None:
        self.touches += 1
        if kind == "r":
            self.read_touches += 1
        else:
            self.write_touches += 1
            self._h.update(f"{kind}:{struct}:{slot};".encode())
        if self.keep:
            self.records.append((kind, struct, slot))

    @property
    def write_digest(self) -> str:
        return self._h.hexdigest()

    def write_records(self) -> list:
        return [r for r in self.records if r[0] != "r"]


class _Scheme:
    name = "abstract"

    def __init__(self, s: int, keep_trace: bool = False):
        if s < 1:
            raise ValueError("memory size must be positive")
        self.s = s
        self.trace = AccessTrace(keep_trace)
        self.ops = 0
        self.writes = 0
        self.reads = 0

    def _check(self, addr: int) -> None:
        if not 0 <= addr < self.s:
            raise AddressError(f"address {addr} outside [0, {self.s})")

    def read(self, addr: int) -> int:
        self._check(addr)
        self.ops += 1
        self.reads += 1
        return self._read(addr)

    def write(self, addr: int, value: int) -> None:
        self._check(addr)
        self.ops += 1
        self.writes += 1
        self._write(addr, value)

    def stats(self) -> dict:
        t = self.trace
        return {
            "scheme": self.name,
            "s": self.s,
            "ops": self.ops,
            "touches": t.touches,
            "touches_per_op": t.touches / self.ops if self.ops else 0.0,
            "write_touches_per_write": t.write_touches / self.writes if self.writes else 0.0,
        }


class BasicMemory(_Scheme):
    """Every write rewrites all s cells in address order."""

    name = "basic"

    def __init__(self, s: int, keep_trace: bool = False):
        super().__init__(s, keep_trace)
        self.mem = [0] * s

    def _read(self, addr):
        self.trace.touch("r", "mem", addr)
        return self.mem[addr]

    def _write(self, addr, value):
        for i in range(self.s):
            self.trace.touch("rw", "mem", i)
            if i == addr:
                self.mem[i] = value


def _sorted_by_addr(entries: list, trace: AccessTrace, struct: str) -> list:
    """Bottom-up merge sort on (addr, seq).  Output slots are written in a fixed order."""
    cur = list(entries)
    n = len(cur)
    width = 1
    while width < n:
        out = []
        for lo in range(0, n, 2 * width):
            left, right = cur[lo : lo + width], cur[lo + width : lo + 2 * width]
            i = j = 0
            while i < len(left) or j < len(right):
                if j >= len(right) or (i < len(left) and left[i][:2] <= right[j][:2]):
                    trace.touch("r", struct, lo + i)
                    out.append(left[i])
                    i += 1
                else:
                    trace.touch("r", struct, lo + width + j)
                    out.append(right[j])
                    j += 1
                trace.touch("w", struct + "-sorted", len(out) - 1)
        cur = out
        width *= 2
    return cur


class SqrtMemory(_Scheme):
    """Writes append to a log of ceil(sqrt(s)) pairs; a full log is sorted and folded into memory."""

    name = "sqrt"

    def __init__(self, s: int, keep_trace: bool = False):
        super().__init__(s, keep_trace)
        self.mem = [0] * s
        self.log: list = []
        self.cap = math.isqrt(s - 1) + 1 if s > 1 else 1
        self.seq = 0

    def _read(self, addr):
        for pos in range(len(self.log) - 1, -1, -1):
            self.trace.touch("r", "log", pos)
            if self.log[pos][0] == addr:
                return self.log[pos][2]
        self.trace.touch("r", "mem", addr)
        return self.mem[addr]

    def _write(self, addr, value):
        self.seq += 1
        self.trace.touch("w", "log", len(self.log))
        self.log.append((addr, self.seq, value))
        if len(self.log) >= self.cap:
            self._flush()

    def _flush(self):
        ordered = _sorted_by_addr(self.log, self.trace, "log")
        p = 0
        for i in range(self.s):
            val = None
            while p < len(ordered) and ordered[p][0] == i:
                self.trace.touch("r", "log-sorted", p)
                val = ordered[p][2]  # later seq wins: sorted by (addr, seq)
                p += 1
            self.trace.touch("rw", "mem", i)
            if val is not None:
                self.mem[i] = val
        self.log = []


def hier_capacities(s: int) -> list[int]:
    """n_i = max(1, ceil(s / b^i)) with b = ceil(log2 s) (at least 2), up to the first n_k = 1."""
    b = max(2, math.ceil(math.log2(s))) if s > 1 else 2
    caps = [s]
    while caps[-1] > 1:
        caps.append(max(1, -(-s // b ** len(caps))))
    return caps


@dataclass
class LogEntry:
    addr: int
    value: int
    seq: int
    dummy: bool = False

    def key(self, s: int) -> int:
        return s if self.dummy else self.addr


class HierMemory(_Scheme):
    """Logs L_0..L_k with capacities n_i; L_0 is the dense base memory, writes enter L_k.

    A log is full once it could not absorb a full lower log
    (|L_i| + n_{i+1} > n_i, and |L_k| = n_k for the newest one).  A full log
    is merged into the next older one.  Merges keep the newest pair per
    address and turn the overwritten pair into a dummy, so merged sizes never
    depend on the data.  Merging into L_0 rewrites all s cells.
    """

    name = "hier"

    def __init__(self, s: int, keep_trace: bool = False):
        super().__init__(s, keep_trace)
        self.caps = hier_capacities(s)
        self.k = len(self.caps) - 1
        self.base = [0] * s
        self.logs: list = [[] for _ in range(self.k + 1)]  # logs[0] unused; base is L_0
        self.seq = 0
        self.merges = 0

    @property
    def sizes(self) -> list[int]:
        return [self.s] + [len(self.logs[i]) for i in range(1, self.k + 1)]

    def _read(self, addr):
        for i in range(self.k, 0, -1):
            log = self.logs[i]
            lo, hi = 0, len(log)
            while lo < hi:
                mid = (lo + hi) // 2
                self.trace.touch("r", f"L{i}", mid)
                key = log[mid].key(self.s)
                if key == addr:
                    return log[mid].value
                if key < addr:
                    lo = mid + 1
                else:
                    hi = mid
        self.trace.touch("r", "L0", addr)
        return self.base[addr]

    def _full(self, i: int) -> bool:
        if i == self.k:
            return len(self.logs[i]) >= self.caps[i]
        return len(self.logs[i]) + self.caps[i + 1] > self.caps[i]

    def _write(self, addr, value):
        self.seq += 1
        k = self.k
        if k == 0:
            self.trace.touch("rw", "L0", addr)
            self.base[addr] = value
            return
        self.trace.touch("w", f"L{k}", len(self.logs[k]))
        self.logs[k].append(LogEntry(addr, value, self.seq))
        i = k
        while i >= 1 and self._full(i):
            self._merge_down(i)
            i -= 1

    def _merge_down(self, i: int) -> None:
        self.merges += 1
        newer = self.logs[i]
        if i == 1:
            p = 0
            for t in range(self.s):
                val = None
                while p < len(newer) and newer[p].key(self.s) == t:
                    self.trace.touch("r", "L1", p)
                    if not newer[p].dummy:
                        val = newer[p].value
                    p += 1
                self.trace.touch("rw", "L0", t)
                if val is not None:
                    self.base[t] = val
            self.logs[1] = []
            return
        older = self.logs[i - 1]
        live: list = []
        dummies = 0
        a = b = 0
        s = self.s
        while a < len(older) or b < len(newer):
            ka = older[a].key(s) if a < len(older) else s + 1
            kb = newer[b].key(s) if b < len(newer) else s + 1
            if ka == kb and ka < s:
                self.trace.touch("r", f"L{i - 1}", a)
                self.trace.touch("r", f"L{i}", b)
                live.append(newer[b] if newer[b].seq > older[a].seq else older[a])
                dummies += 1
                a += 1
                b += 1
            elif ka <= kb and a < len(older):
                self.trace.touch("r", f"L{i - 1}", a)
                if older[a].dummy:
                    dummies += 1
                else:
                    live.append(older[a])
                a += 1
            else:
                self.trace.touch("r", f"L{i}", b)
                if newer[b].dummy:
                    dummies += 1
                else:
                    live.append(newer[b])
                b += 1
        merged = live + [LogEntry(s, 0, 0, True) for _ in range(dummies)]
        for pos in range(len(merged)):
            self.trace.touch("w", f"L{i - 1}", pos)
        self.logs[i - 1] = merged
        self.logs[i] = []

    def check_invariants(self) -> None:
        for i in range(1, self.k + 1):
            log = self.logs[i]
            if len(log) > self.caps[i]:
                raise AssertionError(f"L{i} holds {len(log)} > n_{i} = {self.caps[i]}")
            keys = [e.key(self.s) for e in log]
            if keys != sorted(keys):
                raise AssertionError(f"L{i} is not sorted")
            live = [e.addr for e in log if not e.dummy]
            if len(live) != len(set(live)):
                raise AssertionError(f"L{i} has two live entries for one address")


SCHEMES = {"basic": BasicMemory, "sqrt": SqrtMemory, "hier": HierMemory}


def random_ops(s: int, count: int, rng, write_frac: float = 0.5, vbits: int = 16) -> list[tuple]:
    ops = []
    for _ in range(count):
        if rng.getrandbits(16) < write_frac * 65536:
            ops.append(("w", rng.randbelow(s), rng.getrandbits(vbits)))
        else:
            ops.append(("r", rng.randbelow(s), None))
    return ops


def replay(scheme, ops: Sequence[tuple], oracle: Optional[list] = None) -> list:
    """Apply ops; returns read results, asserting against a flat array when given."""
    out = []
    for kind, addr, val in ops:
        if kind == "w":
            scheme.write(addr, val)
            if oracle is not None:
                oracle[addr] = val
        else:
            got = scheme.read(addr)
            if oracle is not None and got != oracle[addr]:
                raise AssertionError(f"{scheme.name}: read({addr}) = {got}, expected {oracle[addr]}")
            out.append(got)
    return out


def sqrt_bound(s: int) -> float:
    return 4 * math.sqrt(s)


def hier_bound(s: int) -> float:
    lg = math.log2(s)
    return 8 * lg * lg / math.log2(lg)


def oram_bench(sizes: Sequence[int], ops: int, seed: int = 0) -> list[dict]:
    from .kernel import SeededRng

    rows = []
    for s in sizes:
        seq = random_ops(s, ops, SeededRng(seed).fork(f"oram-{s}"))
        for name, cls in SCHEMES.items():
            mem = cls(s)
            replay(mem, seq, [0] * s)
            rows.append(mem.stats())
    return rows


# --- LUT bridge: basic scheme as a LUT circuit ---------------------------------------------------


def basic_ram_circuit(s: int, vbits: int, kinds: Sequence[str]):
    """Shared-memory circuit for a public op schedule.

    Write t takes Alice inputs ``wa{t}``/``wv{t}``; read t takes Bob input
    ``ra{t}`` and outputs ``out{t}``.  Each write touches every cell through
    an equality LUT and a 2-entry select LUT.
    """
    from .lut import CircuitBuilder

    if s & (s - 1) or s < 2:
        raise ValueError("bridge memory size must be a power of two >= 2")
    ab = int(math.log2(s))
    cb = CircuitBuilder()
    cells = [cb.const(0, vbits) for _ in range(s)]
    outs = []
    for t, kind in enumerate(kinds):
        if kind == "w":
            a = cb.input("A", ab, f"wa{t}")
            v = cb.input("A", vbits, f"wv{t}")
            new = []
            for i in range(s):
                sel = cb.lut([a], 1, "public", [int(x == i) for x in range(s)])
                new.append(cb.lut([sel], vbits, "shared", [cells[i], v]))
            cells = new
        else:
            a = cb.input("B", ab, f"ra{t}")
            outs.append(cb.lut([a], vbits, "shared", cells, f"out{t}"))
    cb.output(*outs)
    return cb.build()


def secure_basic_ram(ops: Sequence[tuple], s: int, vbits: int = 8, **kw) -> tuple[list, object]:
    from .lut import eval_lut_circuit

    kinds = [op[0] for op in ops]
    circ = basic_ram_circuit(s, vbits, kinds)
    ain, bin_ = {}, {}
    for t, (kind, addr, val) in enumerate(ops):
        if kind == "w":
            ain[f"wa{t}"], ain[f"wv{t}"] = addr, val
        else:
            bin_[f"ra{t}"] = addr
    outs, run = eval_lut_circuit(circ, ain, bin_, **kw)
    return [outs[f"out{t}"] for t, k in enumerate(kinds) if k == "r"], run
