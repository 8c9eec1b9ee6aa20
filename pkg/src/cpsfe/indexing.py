"""Private indirect indexing: Ind_AB, Ind_BA, two-level Ind and GInd.

A shared index ``j`` is held as shares (a, b).  At each lookup the table
owner acts as OT sender.  It rotates its table by its own share, masks every
entry with one fresh mask, and the chooser selects at its own share.  The
chooser ends up with ``mask(T[j])`` and the sender keeps the matching mask
share, so the result is again freshly shared.

Shares combine by XOR when the index space has power-of-two size.  Other
sizes (branching-program layers of width 3, say) use addition mod w, which
keeps every OT exactly as wide as the layer.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

from .harness import run_two_party
from .kernel import BitString
from .ot import Choose, Send


class IndexingError(ValueError):
    pass


def is_pow2(w: int) -> bool:
    return w >= 1 and not w & (w - 1)


def index_bits(w: int) -> int:
    return math.ceil(math.log2(w)) if w > 1 else 0


@dataclass(frozen=True)
class Ring:
    """Share algebra: ``xor`` over ``size`` bits, or ``mod`` with modulus ``size``."""

    kind: str
    size: int

    @classmethod
    def for_width(cls, w: int) -> Ring:
        if w < 1:
            raise IndexingError(f"width must be positive, got {w}")
        return cls("xor", index_bits(w)) if is_pow2(w) else cls("mod", w)

    @classmethod
    def bits(cls, n: int) -> Ring:
        return cls("xor", n)

    @property
    def elen(self) -> int:
        return self.size if self.kind == "xor" else index_bits(self.size)

    def random(self, rng) -> int:
        return rng.getrandbits(self.size) if self.kind == "xor" else rng.randbelow(self.size)

    def combine(self, a: int, b: int) -> int:
        return a ^ b if self.kind == "xor" else (a + b) % self.size

    def mask(self, v: int, r: int) -> int:
        return v ^ r if self.kind == "xor" else (v + r) % self.size

    def counter_share(self, r: int) -> int:
        """The share that, combined with ``mask(v, r)``, gives back v."""
        return r if self.kind == "xor" else (-r) % self.size

    def split(self, v: int, rng) -> tuple[int, int]:
        r = self.random(rng)
        return self.mask(v, r), self.counter_share(r)

    def contains(self, v: int) -> bool:
        return 0 <= v < (1 << self.size if self.kind == "xor" else self.size)


@dataclass
class Lookup:
    """One shared-index table read, seen from one party.

    ``table`` is set on the owner's side only.  ``index_ring`` is the share
    algebra of the index, ``out_ring`` that of the freshly shared result.
    """

    share: int
    w: int
    out_ring: Ring
    table: Optional[Sequence[int]] = None
    index_ring: Optional[Ring] = None

    def __post_init__(self):
        if self.index_ring is None:
            self.index_ring = Ring.for_width(self.w)
        if self.table is not None and len(self.table) != self.w:
            raise IndexingError(f"table has {len(self.table)} entries, expected {self.w}")


def lookup_batch(party, lookups: Sequence[Lookup]) -> list[int]:
    """Run several independent lookups in one OT round; returns my output shares."""
    items = []
    mine = []
    for lk in lookups:
        if lk.table is not None:
            r = lk.out_ring.random(party.rng)
            idx = lk.index_ring
            ring = lk.out_ring
            rotated = [0] * lk.w
            for t in range(lk.w):
                v = lk.table[idx.combine(lk.share, t)]
                rotated[t] = ring.mask(v, r)
            items.append(Send(tuple(rotated), ring.elen))
            mine.append(ring.counter_share(r))
        else:
            items.append(Choose(lk.share, lk.w, lk.out_ring.elen))
            mine.append(None)
    got = party.backend.batch(party, items)
    return [m if m is not None else g for m, g in zip(mine, got)]


# --- single-level Ind ------------------------------------------------------------


def _check_list(entries: Sequence[BitString]) -> tuple[int, int]:
    w = len(entries)
    if not is_pow2(w):
        raise IndexingError(f"list width {w} is not a power of two")
    lens = {e.bit_len for e in entries}
    if len(lens) != 1:
        raise IndexingError("list entries must have a uniform length")
    return w, lens.pop()


def ind_chooser(party, J: BitString, w: int, elen: int) -> BitString:
    """Endpoint holding the masked index; receives pi' xor list[j]."""
    if not is_pow2(w) or J.bit_len != index_bits(w):
        raise IndexingError(f"masked index must have log2(w) = {index_bits(w)} bits")
    (v,) = lookup_batch(party, [Lookup(J.value, w, Ring.bits(elen))])
    return BitString(v, elen)


def ind_owner(party, pi: BitString, entries: Sequence[BitString]) -> BitString:
    """Endpoint holding the mask pi and the list; returns its fresh mask pi'."""
    w, elen = _check_list(entries)
    if pi.bit_len != index_bits(w):
        raise IndexingError(f"mask must have log2(w) = {index_bits(w)} bits")
    (v,) = lookup_batch(party, [Lookup(pi.value, w, Ring.bits(elen), [e.value for e in entries])])
    return BitString(v, elen)


def ind_ab(J: BitString, pi: BitString, ys: Sequence[BitString], *, seed=0, backend="ideal", k=128):
    """Ind_AB: Alice holds J = pi xor j, Bob holds (pi, ys).  Returns the run result."""
    w, elen = _check_list(ys)
    return run_two_party(
        lambda p: ind_chooser(p, J, w, elen),
        lambda p: ind_owner(p, pi, ys),
        seed=seed, backend=backend, k=k,
    )


def ind_ba(pi: BitString, xs: Sequence[BitString], J: BitString, *, seed=0, backend="ideal", k=128):
    """Ind_BA: Alice holds (pi, xs), Bob holds J = pi xor j."""
    w, elen = _check_list(xs)
    return run_two_party(
        lambda p: ind_owner(p, pi, xs),
        lambda p: ind_chooser(p, J, w, elen),
        seed=seed, backend=backend, k=k,
    )


# --- two-level Ind -----------------------------------------------------------------


def ind2_alice(party, j: int, xs: Sequence[int], w_y: int, out_bits: int, final_send: bool = True) -> int:
    w_x = len(xs)
    s1, = lookup_batch(party, [Lookup(j, w_y, Ring.for_width(w_x))])
    s2, = lookup_batch(party, [Lookup(s1, w_x, Ring.bits(out_bits), xs)])
    if not final_send:
        return s2
    other = int.from_bytes(party.channel.recv(), "big")
    return s2 ^ other


def ind2_bob(party, ys: Sequence[int], w_x: int, out_bits: int, final_send: bool = True) -> Optional[int]:
    s1, = lookup_batch(party, [Lookup(0, len(ys), Ring.for_width(w_x), ys)])
    s2, = lookup_batch(party, [Lookup(s1, w_x, Ring.bits(out_bits))])
    if not final_send:
        return s2
    party.channel.send(s2.to_bytes((out_bits + 7) // 8 or 1, "big"))
    return None


def ind_two_level(
    j: int, xs: Sequence[int], ys: Sequence[int], *, out_bits: Optional[int] = None,
    final_send: bool = True, seed=0, backend="ideal", k=128,
):
    """Alice holds (j, xs), Bob holds ys; Alice learns xs[ys[j]].

    With ``final_send=False`` both outputs are XOR shares of xs[ys[j]].
    """
    w_x, w_y = len(xs), len(ys)
    if not 0 <= j < w_y:
        raise IndexingError(f"j={j} outside [0, {w_y})")
    if any(not 0 <= v < w_x for v in ys):
        raise IndexingError("inner list entries must index the outer list")
    if out_bits is None:
        out_bits = max(1, max(xs).bit_length())
    return run_two_party(
        lambda p: ind2_alice(p, j, xs, w_y, out_bits, final_send),
        lambda p: ind2_bob(p, ys, w_x, out_bits, final_send),
        seed=seed, backend=backend, k=k,
    )


# --- GInd ------------------------------------------------------------------------------


@dataclass(frozen=True)
class GIndPlan:
    """Public shape of a GInd run: level widths w_1..w_c and the final entry length."""

    widths: tuple
    out_bits: int

    def __post_init__(self):
        if len(self.widths) < 2 or len(self.widths) % 2:
            raise IndexingError(f"GInd needs an even number of levels, got {len(self.widths)}")
        if any(w < 1 for w in self.widths):
            raise IndexingError("level widths must be positive")

    @property
    def c(self) -> int:
        return len(self.widths)

    def out_ring(self, level: int) -> Ring:
        if level < self.c:
            return Ring.for_width(self.widths[level])
        return Ring.bits(self.out_bits)

    def start_ring(self) -> Ring:
        return Ring.for_width(self.widths[0])


@dataclass
class GIndInstance:
    """Lists ybar_1, xbar_2, ..., xbar_c (odd levels Bob's, even levels Alice's) and j_0."""

    levels: list
    j0: int
    out_bits: Optional[int] = None
    plan: GIndPlan = field(init=False)

    def __post_init__(self):
        self.levels = [list(lv) for lv in self.levels]
        widths = tuple(len(lv) for lv in self.levels)
        if self.out_bits is None:
            self.out_bits = max(1, max(self.levels[-1]).bit_length()) if self.levels else 1
        self.plan = GIndPlan(widths, self.out_bits)
        if not 0 <= self.j0 < widths[0]:
            raise IndexingError(f"j0={self.j0} outside level-1 width {widths[0]}")
        for n, lv in enumerate(self.levels[:-1]):
            if any(not 0 <= v < widths[n + 1] for v in lv):
                raise IndexingError(f"level {n + 1} has an entry outside [0, {widths[n + 1]})")
        if any(not 0 <= v < 1 << self.out_bits for v in self.levels[-1]):
            raise IndexingError(f"final level entries must fit in {self.out_bits} bits")

    @property
    def alice_lists(self) -> dict:
        return {n + 1: lv for n, lv in enumerate(self.levels) if (n + 1) % 2 == 0}

    @property
    def bob_lists(self) -> dict:
        return {n + 1: lv for n, lv in enumerate(self.levels) if (n + 1) % 2 == 1}


def gind_plain(levels: Sequence[Sequence[int]], j0: int) -> int:
    """Pointer-jumping oracle: x_c[y_{c-1}[... y_1[j0] ...]]."""
    j = j0
    for lv in levels:
        j = lv[j]
    return j


def gind_party_many(party, shares: Sequence[int], lists: Sequence[dict], plans: Sequence[GIndPlan]) -> list[int]:
    """Run several GInd instances side by side, one OT round per level.

    ``lists[i]`` maps level number to this party's list for instance i.
    Returns this party's XOR shares of the results.
    """
    if not (len(shares) == len(lists) == len(plans)):
        raise IndexingError("per-instance arguments must have equal length")
    own_parity = 0 if party.role == "A" else 1
    cur = list(shares)
    depth = max((pl.c for pl in plans), default=0)
    for level in range(1, depth + 1):
        active = [i for i, pl in enumerate(plans) if pl.c >= level]
        lookups = []
        for i in active:
            pl = plans[i]
            w = pl.widths[level - 1]
            table = None
            if level % 2 == own_parity:
                table = lists[i].get(level)
                if table is None or len(table) != w:
                    raise IndexingError(f"missing or mis-sized list for level {level}")
            lookups.append(Lookup(cur[i], w, pl.out_ring(level), table))
        for i, v in zip(active, lookup_batch(party, lookups)):
            cur[i] = v
    return cur


def gind_party(party, share: int, lists: dict, plan: GIndPlan) -> int:
    return gind_party_many(party, [share], [lists], [plan])[0]


def gind(instance: GIndInstance, *, public_start: bool = False, seed=0, backend="ideal", k=128):
    """Run GInd on ``instance``; Alice starts with pi xor j0 and Bob with pi.

    With ``public_start`` the first mask is zero, so Alice simply holds j0.
    Returns the run result whose ``alice``/``bob`` fields are result shares.
    """
    from .kernel import SeededRng

    plan = instance.plan
    ring = plan.start_ring()
    if public_start:
        a0, b0 = instance.j0, 0
    else:
        a0, b0 = ring.split(instance.j0, SeededRng(seed).fork("gind-start"))
    alice_lists, bob_lists = instance.alice_lists, instance.bob_lists
    return run_two_party(
        lambda p: gind_party(p, a0, alice_lists, plan),
        lambda p: gind_party(p, b0, bob_lists, plan),
        seed=seed, backend=backend, k=k,
    )


def gind_public_start(instance: GIndInstance, **kw):
    return gind(instance, public_start=True, **kw)
