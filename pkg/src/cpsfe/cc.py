"""Communication-complexity protocol trees and their private compilation via GInd.

Node ``v`` at depth ``d`` is identified by its path integer ``pos`` (the
root-to-v bits, big-endian), so its children are ``2*pos`` and ``2*pos + 1``.
Alice labels even depths, Bob odd depths; leaves carry the output value.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .harness import run_two_party
from .indexing import GIndPlan, gind_party, gind_party_many

DEFAULT_BUDGET = 1 << 22

Label = Callable[[int, int], int]


class BudgetExceeded(ValueError):
    pass


@dataclass
class ProtocolTree:
    """Full binary tree of even depth.

    ``alice(x)`` and ``bob(y)`` return the hard-wired label function
    ``(depth, pos) -> bit`` for that input.  ``leaf_value(pos)`` gives z_v.
    """

    depth: int
    alice: Callable[[object], Label]
    bob: Callable[[object], Label]
    leaf_value: Callable[[int], int]
    leaf_bits: int
    name: str = "tree"

    def __post_init__(self):
        if self.depth < 2 or self.depth % 2:
            raise ValueError(f"tree depth must be even and >= 2, got {self.depth}")


def run_plaintext(tree: ProtocolTree, x, y) -> int:
    a, b = tree.alice(x), tree.bob(y)
    pos = 0
    for d in range(tree.depth):
        bit = a(d, pos) if d % 2 == 0 else b(d, pos)
        pos = 2 * pos + bit
    return tree.leaf_value(pos)


def transcript(tree: ProtocolTree, x, y) -> list[int]:
    a, b = tree.alice(x), tree.bob(y)
    pos, out = 0, []
    for d in range(tree.depth):
        bit = a(d, pos) if d % 2 == 0 else b(d, pos)
        out.append(bit)
        pos = 2 * pos + bit
    return out


def constant_tree(depth: int, z0: int, bits: int = 8) -> ProtocolTree:
    zero = lambda _inp: (lambda d, pos: 0)
    return ProtocolTree(depth, zero, zero, lambda pos: z0, bits, "constant")


def _bits_of(v) -> tuple:
    if isinstance(v, str):
        return tuple(int(c) for c in v)
    if hasattr(v, "bits"):
        return tuple(v.bits)
    return tuple(v)


def build_hamming_tree(n: int) -> ProtocolTree:
    """Alice sends x_i; Bob answers whether y_i differs from it; the leaf counts Bob's 1s."""
    if n < 1:
        raise ValueError("n must be >= 1")
    c = 2 * n

    def alice(x):
        xb = _bits_of(x)
        if len(xb) != n:
            raise ValueError(f"expected {n} bits, got {len(xb)}")
        return lambda d, pos: xb[d // 2]

    def bob(y):
        yb = _bits_of(y)
        if len(yb) != n:
            raise ValueError(f"expected {n} bits, got {len(yb)}")
        return lambda d, pos: yb[d // 2] ^ (pos & 1)

    def leaf(pos):
        return sum((pos >> (c - 1 - d)) & 1 for d in range(1, c, 2))

    return ProtocolTree(c, alice, bob, leaf, max(1, n.bit_length()), f"hamming{n}")


# --- induced lists ------------------------------------------------------------------


@dataclass
class InducedLists:
    """Per-party lists: Alice has j and xbar_l for even l (incl. leaves), Bob ybar_l for odd l."""

    role: str
    depth: int
    lists: dict = field(default_factory=dict)
    j: int | None = None

    def sizes(self) -> dict:
        return {lv: len(v) for lv, v in self.lists.items()}


def check_budget(depth: int, budget: int = DEFAULT_BUDGET) -> int:
    total = (1 << (depth + 1)) - 2
    if total > budget:
        raise BudgetExceeded(
            f"depth {depth} needs 2^{depth + 1} - 2 = {total} list entries, over the budget of {budget}"
        )
    return total


def induce_lists(tree: ProtocolTree, inp, role: str, budget: int = DEFAULT_BUDGET) -> InducedLists:
    if role not in ("A", "B"):
        raise ValueError("role must be 'A' or 'B'")
    check_budget(tree.depth, budget)
    c = tree.depth
    out = InducedLists(role, c)
    if role == "A":
        lab = tree.alice(inp)
        out.j = lab(0, 0)
        for lv in range(2, c, 2):
            out.lists[lv] = [2 * p + lab(lv, p) for p in range(1 << lv)]
        out.lists[c] = [tree.leaf_value(p) for p in range(1 << c)]
    else:
        lab = tree.bob(inp)
        for lv in range(1, c, 2):
            out.lists[lv] = [2 * p + lab(lv, p) for p in range(1 << lv)]
    return out


def dump_lists(il: InducedLists) -> str:
    """Text form: optional ``j <v>`` line, then ``<level> <entries...>`` per level."""
    lines = [f"# role {il.role} depth {il.depth}"]
    if il.j is not None:
        lines.append(f"j {il.j}")
    for lv in sorted(il.lists):
        lines.append(" ".join([str(lv)] + [str(v) for v in il.lists[lv]]))
    return "\n".join(lines) + "\n"


def load_lists(text: str) -> InducedLists:
    role, depth, j, lists = None, None, None, {}
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            parts = line[1:].split()
            if len(parts) == 4 and parts[0] == "role" and parts[2] == "depth":
                role, depth = parts[1], int(parts[3])
            continue
        head, *rest = line.split()
        if head == "j":
            j = int(rest[0])
        else:
            lv = int(head)
            if len(rest) != 1 << lv:
                raise ValueError(f"level {lv} should have {1 << lv} entries, found {len(rest)}")
            lists[lv] = [int(v) for v in rest]
    if role is None:
        raise ValueError("missing role/depth header")
    return InducedLists(role, depth, lists, j)


# --- compilation -----------------------------------------------------------------------


def cc_plan(tree: ProtocolTree) -> GIndPlan:
    return GIndPlan(tuple(1 << lv for lv in range(1, tree.depth + 1)), tree.leaf_bits)


def cc_alice(party, tree: ProtocolTree, x, budget: int = DEFAULT_BUDGET) -> int:
    il = induce_lists(tree, x, "A", budget)
    return gind_party(party, il.j, il.lists, cc_plan(tree))


def cc_bob(party, tree: ProtocolTree, y, budget: int = DEFAULT_BUDGET) -> int:
    il = induce_lists(tree, y, "B", budget)
    return gind_party(party, 0, il.lists, cc_plan(tree))


def compile_and_run_cc(tree: ProtocolTree, x, y, *, seed=0, backend="ideal", transport="mem",
                       k=128, budget: int = DEFAULT_BUDGET):
    """Private evaluation of ``tree``; ``result.alice ^ result.bob`` is f(x, y)."""
    check_budget(tree.depth, budget)
    return run_two_party(
        lambda p: cc_alice(p, tree, x, budget),
        lambda p: cc_bob(p, tree, y, budget),
        seed=seed, backend=backend, transport=transport, k=k,
    )



def compile_and_run_cc_many(tree: ProtocolTree, pairs: Sequence[tuple], *, seed=0, backend="ideal", k=128,
                            budget: int = DEFAULT_BUDGET):
    """Evaluate one tree on many input pairs in a single run; returns (values, run result)."""
    check_budget(tree.depth, budget)
    plan = cc_plan(tree)

    def alice(p):
        ils = [induce_lists(tree, x, "A", budget) for x, _ in pairs]
        return gind_party_many(p, [il.j for il in ils], [il.lists for il in ils], [plan] * len(pairs))

    def bob(p):
        ils = [induce_lists(tree, y, "B", budget) for _, y in pairs]
        return gind_party_many(p, [0] * len(pairs), [il.lists for il in ils], [plan] * len(pairs))

    res = run_two_party(alice, bob, seed=seed, backend=backend, k=k)
    return [a ^ b for a, b in zip(res.alice, res.bob)], res

# --- median ----------------------------------------------------------------------------
#
# Elements e in {1..n} are handled as e-1 on b = ceil(log2 n) bits.  Each
# round Alice sends one bit, then Bob sends one bit.  While comparing, both
# send bit ``pos`` of their current lower median.  Equal bits extend the
# common prefix P.  Different bits with sets larger than one halve both sets
# (the side with the smaller median drops its lower half, the other its upper
# half) and clamp them to the interval of values with prefix P, so the next
# medians agree on P and comparison resumes at ``pos``.  Different bits with
# singleton sets settle the answer as the smaller element, whose owner then
# streams its remaining bits.  Rounds = b + log2 m; finished runs send zeros.


@dataclass(frozen=True)
class _MedState:
    phase: str  # cmp | fin-A | fin-B | done
    P: int
    pos: int
    size: int


def _median_bits(n: int) -> int:
    return max(1, math.ceil(math.log2(n)))


def _lower_median(s: Sequence[int]) -> int:
    return s[len(s) // 2 - 1] if len(s) > 1 else s[0]


def _advance(st: _MedState, a: int, b: int, b_len: int) -> tuple[_MedState, str]:
    """Public transition after bits (a, b).  Also returns what happened to the sets."""
    if st.phase == "done":
        return st, "none"
    if st.phase in ("fin-A", "fin-B"):
        bit = a if st.phase == "fin-A" else b
        nxt = _MedState(st.phase, 2 * st.P + bit, st.pos + 1, st.size)
        return (_MedState("done", nxt.P, nxt.pos, nxt.size) if nxt.pos == b_len else nxt), "none"
    if a == b:
        nxt = _MedState("cmp", 2 * st.P + a, st.pos + 1, st.size)
        return (_MedState("done", nxt.P, nxt.pos, nxt.size) if nxt.pos == b_len else nxt), "none"
    if st.size > 1:
        return _MedState("cmp", st.P, st.pos, st.size // 2), ("a<b" if a < b else "a>b")
    phase = "fin-A" if a == 0 else "fin-B"
    nxt = _MedState(phase, 2 * st.P, st.pos + 1, 1)
    return (_MedState("done", nxt.P, nxt.pos, 1) if nxt.pos == b_len else nxt), "none"


def _update_set(s: tuple, event: str, role: str, st: _MedState, b_len: int) -> tuple:
    if event == "none":
        return s
    half = len(s) // 2
    drop_low = (event == "a<b") == (role == "A")
    s = s[half:] if drop_low else s[:half]
    lo = st.P << (b_len - st.pos)
    hi = ((st.P + 1) << (b_len - st.pos)) - 1
    return tuple(min(max(v, lo), hi) for v in s)


def _check_median_input(s, n: int, m: int) -> tuple:
    s = tuple(sorted(s))
    if len(s) != m:
        raise ValueError(f"expected a multiset of size {m}, got {len(s)}")
    if any(not 1 <= v <= n for v in s):
        raise ValueError(f"elements must lie in 1..{n}")
    return tuple(v - 1 for v in s)


def median_tree(n: int, m: int) -> ProtocolTree:
    if n < 2:
        raise ValueError("n must be >= 2")
    if m < 1 or m & (m - 1):
        raise ValueError("m must be a power of two")
    b_len = _median_bits(n)
    rounds = b_len + int(math.log2(m))
    c = 2 * rounds
    start = _MedState("cmp", 0, 0, m)

    def party_labels(inp, role):
        s0 = _check_median_input(inp, n, m)
        cache: dict = {(0, 0): (start, s0)}

        def state_at(d, pos):
            key = (d, pos)
            hit = cache.get(key)
            if hit is not None:
                return hit
            st, s = state_at(d - 2, pos >> 2)
            a, b = (pos >> 1) & 1, pos & 1
            nst, ev = _advance(st, a, b, b_len)
            val = (nst, _update_set(s, ev, role, nst, b_len))
            cache[key] = val
            return val

        def own_bit(st, s):
            if st.phase == "done":
                return 0
            if st.phase == "cmp":
                return (_lower_median(s) >> (b_len - 1 - st.pos)) & 1
            if st.phase == f"fin-{role}":
                return (s[0] >> (b_len - 1 - st.pos)) & 1
            return 0

        if role == "A":
            return lambda d, pos: own_bit(*state_at(d, pos))
        return lambda d, pos: own_bit(*state_at(d - 1, pos >> 1))

    def leaf(pos):
        st = start
        for r in range(rounds):
            shift = c - 2 - 2 * r
            st, _ = _advance(st, (pos >> (shift + 1)) & 1, (pos >> shift) & 1, b_len)
        if st.phase != "done":
            raise AssertionError("median protocol did not settle within its round budget")
        return st.P + 1

    return ProtocolTree(c, lambda x: party_labels(x, "A"), lambda y: party_labels(y, "B"),
                        leaf, n.bit_length(), f"median-n{n}-m{m}")


def median_oracle(x: Sequence[int], y: Sequence[int]) -> int:
    return sorted(list(x) + list(y))[len(x) - 1]


def median_protocol(x: Sequence[int], y: Sequence[int], n: int, mode: str = "plaintext", **kw) -> int:
    if len(x) != len(y):
        raise ValueError("both multisets must have the same size")
    tree = median_tree(n, len(x))
    if mode == "plaintext":
        return run_plaintext(tree, x, y)
    if mode == "compiled":
        res = compile_and_run_cc(tree, x, y, **kw)
        return res.alice ^ res.bob
    raise ValueError(f"unknown mode {mode!r}")
