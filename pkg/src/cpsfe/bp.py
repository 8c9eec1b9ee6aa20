"""Oblivious branching programs, their compilation via GInd, and the example programs.

A program has layers L_0..L_c (|L_0| = 1, c even).  Alice moves the walk on
even layers, Bob on odd layers, and the node reached in L_c carries the
output.  Node keys are arbitrary hashable values; ``n(v)`` is the position of
``v`` within its layer.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Any, Callable, Optional, Sequence

from .harness import run_two_party
from .indexing import GIndPlan, gind_party, gind_party_many
from .kernel import BitString, SeededRng, prf_int, prg_expand
from .transport import FrameType

DEFAULT_BUDGET = 1 << 22

Step = Callable[[int, Any], Any]


class BranchingProgramError(ValueError):
    pass


def _bits(v, n: Optional[int] = None) -> tuple:
    if isinstance(v, str):
        out = tuple(int(c) for c in v)
    elif isinstance(v, BitString):
        out = v.bits
    elif isinstance(v, int):
        if n is None:
            raise BranchingProgramError("bit length needed for integer input")
        if not 0 <= v < 1 << n:
            raise BranchingProgramError(f"{v} does not fit in {n} bits")
        out = tuple((v >> (n - 1 - i)) & 1 for i in range(n))
    else:
        out = tuple(v)
    if n is not None and len(out) != n:
        raise BranchingProgramError(f"expected {n} bits, got {len(out)}")
    return out


@dataclass
class BranchingProgram:
    layers: list
    alice: Callable[[Any], Step]
    bob: Callable[[Any], Step]
    leaf_values: dict
    leaf_bits: int
    name: str = "bp"
    index: list = field(init=False, repr=False)

    def __post_init__(self):
        self.layers = [tuple(layer) for layer in self.layers]
        if len(self.layers[0]) != 1:
            raise BranchingProgramError("L_0 must hold exactly one node")
        if self.c < 2 or self.c % 2:
            raise BranchingProgramError(f"cost c must be even and >= 2, got {self.c}")
        self.index = []
        for layer in self.layers:
            idx = {v: i for i, v in enumerate(layer)}
            if len(idx) != len(layer):
                raise BranchingProgramError("duplicate node in a layer")
            self.index.append(idx)
        missing = [v for v in self.layers[-1] if v not in self.leaf_values]
        if missing:
            raise BranchingProgramError(f"leaf nodes without values: {missing[:3]}")
        if any(not 0 <= z < 1 << self.leaf_bits for z in self.leaf_values.values()):
            raise BranchingProgramError(f"leaf values must fit in {self.leaf_bits} bits")

    @property
    def c(self) -> int:
        return len(self.layers) - 1

    @property
    def widths(self) -> tuple:
        return tuple(len(layer) for layer in self.layers)

    @property
    def width(self) -> int:
        return max(self.widths)

    def step_index(self, layer: int, step: Step, node) -> int:
        nxt = step(layer, node)
        try:
            return self.index[layer + 1][nxt]
        except KeyError:
            raise BranchingProgramError(f"label at layer {layer} leaves the next layer: {nxt!r}") from None


def run_plaintext_bp(bp: BranchingProgram, x, y):
    a, b = bp.alice(x), bp.bob(y)
    node = bp.layers[0][0]
    for layer in range(bp.c):
        nxt = (a if layer % 2 == 0 else b)(layer, node)
        if nxt not in bp.index[layer + 1]:
            raise BranchingProgramError(f"label at layer {layer} leaves the next layer: {nxt!r}")
        node = nxt
    return bp.leaf_values[node]


def bp_plan(bp: BranchingProgram) -> GIndPlan:
    return GIndPlan(bp.widths[1:], bp.leaf_bits)


def check_bp_budget(bp: BranchingProgram, budget: int = DEFAULT_BUDGET) -> int:
    total = sum(bp.widths[1:])
    if total > budget:
        raise BranchingProgramError(f"program needs {total} list entries, over the budget of {budget}")
    return total


def bp_lists(bp: BranchingProgram, inp, role: str) -> tuple[Optional[int], dict]:
    """Hard-wire one party's labels into index lists (plus j0 for Alice)."""
    c = bp.c
    lists = {}
    if role == "A":
        step = bp.alice(inp)
        j0 = bp.step_index(0, step, bp.layers[0][0])
        for layer in range(2, c, 2):
            lists[layer] = [bp.step_index(layer, step, v) for v in bp.layers[layer]]
        lists[c] = [bp.leaf_values[v] for v in bp.layers[c]]
        return j0, lists
    step = bp.bob(inp)
    for layer in range(1, c, 2):
        lists[layer] = [bp.step_index(layer, step, v) for v in bp.layers[layer]]
    return None, lists


def bp_alice(party, bp: BranchingProgram, x) -> int:
    j0, lists = bp_lists(bp, x, "A")
    return gind_party(party, j0, lists, bp_plan(bp))


def bp_bob(party, bp: BranchingProgram, y) -> int:
    _, lists = bp_lists(bp, y, "B")
    return gind_party(party, 0, lists, bp_plan(bp))


def compile_and_run_bp(bp: BranchingProgram, x, y, *, seed=0, backend="ideal", transport="mem",
                       k=128, budget: int = DEFAULT_BUDGET):
    """Private evaluation; ``result.alice ^ result.bob`` is the leaf value."""
    check_bp_budget(bp, budget)
    return run_two_party(
        lambda p: bp_alice(p, bp, x),
        lambda p: bp_bob(p, bp, y),
        seed=seed, backend=backend, transport=transport, k=k,
    )


def compile_and_run_bp_many(bp: BranchingProgram, pairs: Sequence[tuple], *, seed=0, backend="ideal", k=128):
    """Evaluate one program on many input pairs in a single run, one OT round per layer."""
    check_bp_budget(bp, DEFAULT_BUDGET)
    plan = bp_plan(bp)

    def alice(p):
        prep = [bp_lists(bp, x, "A") for x, _ in pairs]
        return gind_party_many(p, [j for j, _ in prep], [ls for _, ls in prep], [plan] * len(pairs))

    def bob(p):
        prep = [bp_lists(bp, y, "B")[1] for _, y in pairs]
        return gind_party_many(p, [0] * len(pairs), prep, [plan] * len(pairs))

    res = run_two_party(alice, bob, seed=seed, backend=backend, k=k)
    return [a ^ b for a, b in zip(res.alice, res.bob)], res


def build_layers(start, c: int, successors: Callable[[int, Any], Sequence]) -> list:
    """Enumerate layers from the structural successor relation (all inputs)."""
    layers = [(start,)]
    for layer in range(c):
        nxt = set()
        for v in layers[-1]:
            nxt.update(successors(layer, v))
        layers.append(tuple(sorted(nxt, key=repr)))
    return layers


# --- textual form ------------------------------------------------------------------------


def to_text(bp: BranchingProgram, x_domain: Sequence, y_domain: Sequence) -> str:
    """Header, then per node the successor index for each domain element, then leaves."""
    lines = [f"bp {bp.c} {bp.leaf_bits}", "sizes " + " ".join(map(str, bp.widths)),
             f"domains {len(x_domain)} {len(y_domain)}"]
    steps_a = [bp.alice(x) for x in x_domain]
    steps_b = [bp.bob(y) for y in y_domain]
    for layer in range(bp.c):
        steps = steps_a if layer % 2 == 0 else steps_b
        for i, v in enumerate(bp.layers[layer]):
            succ = [bp.step_index(layer, s, v) for s in steps]
            lines.append(f"node {layer} {i} " + " ".join(map(str, succ)))
    lines.append("leaves " + " ".join(str(bp.leaf_values[v]) for v in bp.layers[-1]))
    return "\n".join(lines) + "\n"


def from_text(text: str, x_domain: Sequence, y_domain: Sequence, name: str = "loaded") -> BranchingProgram:
    lines = [ln.split() for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0][0] != "bp":
        raise BranchingProgramError("missing 'bp' header")
    c, leaf_bits = int(lines[0][1]), int(lines[0][2])
    sizes = [int(v) for v in lines[1][1:]]
    nx, ny = int(lines[2][1]), int(lines[2][2])
    if len(sizes) != c + 1 or nx != len(x_domain) or ny != len(y_domain):
        raise BranchingProgramError("header does not match the supplied domains")
    table: dict = {}
    for parts in lines[3:-1]:
        if parts[0] != "node":
            raise BranchingProgramError(f"unexpected line {' '.join(parts)!r}")
        layer, i = int(parts[1]), int(parts[2])
        succ = [int(v) for v in parts[3:]]
        if len(succ) != (nx if layer % 2 == 0 else ny):
            raise BranchingProgramError(f"node {layer}/{i} has the wrong number of successors")
        if any(not 0 <= s < sizes[layer + 1] for s in succ):
            raise BranchingProgramError(f"node {layer}/{i} points outside layer {layer + 1}")
        table[(layer, i)] = succ
    for layer in range(c):
        for i in range(sizes[layer]):
            if (layer, i) not in table:
                raise BranchingProgramError(f"node {layer}/{i} missing")
    leaves = [int(v) for v in lines[-1][1:]]
    if lines[-1][0] != "leaves" or len(leaves) != sizes[-1]:
        raise BranchingProgramError("bad leaves line")
    xi = {x: n for n, x in enumerate(x_domain)}
    yi = {y: n for n, y in enumerate(y_domain)}
    return BranchingProgram(
        [tuple(range(s)) for s in sizes],
        lambda x: (lambda layer, v: table[(layer, v)][xi[x]]),
        lambda y: (lambda layer, v: table[(layer, v)][yi[y]]),
        dict(enumerate(leaves)), leaf_bits, name,
    )


# --- string equality ---------------------------------------------------------------------


def bp_string_equality(w: int) -> BranchingProgram:
    """Width 3, cost 2w; the walk falls into ``trap`` at the first disagreeing bit."""
    if w < 1:
        raise BranchingProgramError("w must be >= 1")
    layers = [("start",)]
    for _ in range(w):
        layers.append(("live0", "live1", "trap"))
        layers.append(("live", "trap"))

    def alice(x):
        xb = _bits(x, w)
        return lambda layer, v: "trap" if v == "trap" else f"live{xb[layer // 2]}"

    def bob(y):
        yb = _bits(y, w)

        def step(layer, v):
            if v == "trap":
                return "trap"
            return "live" if int(v[-1]) == yb[layer // 2] else "trap"

        return step

    return BranchingProgram(layers, alice, bob, {"live": 1, "trap": 0}, 1, f"equality{w}")


# --- DFA acceptance ------------------------------------------------------------------------


@dataclass(frozen=True)
class Automaton:
    """Total DFA over {0,1}: ``delta[q][bit]``."""

    delta: tuple
    accept: int
    start: int = 0

    def __post_init__(self):
        q = len(self.delta)
        if q < 1 or not 0 <= self.accept < q or not 0 <= self.start < q:
            raise BranchingProgramError("bad automaton")
        for row in self.delta:
            if len(row) != 2 or any(not 0 <= t < q for t in row):
                raise BranchingProgramError("delta must be total over {0,1}")

    @property
    def size(self) -> int:
        return len(self.delta)

    def run(self, alpha) -> int:
        q = self.start
        for bit in alpha:
            q = self.delta[q][bit]
        return q

    def accepts(self, alpha) -> bool:
        return self.run(alpha) == self.accept

    def normalized(self) -> Automaton:
        """Swap states so the accepting state is the last one.

        Leaf values are public, so the accepting state has to sit at a fixed
        position.  The start state needs no fixing: Alice's first label
        points the walk at it.
        """
        last = self.size - 1
        ren = lambda s: last if s == self.accept else (self.accept if s == last else s)
        new = [None] * self.size
        for s in range(self.size):
            new[ren(s)] = tuple(ren(t) for t in self.delta[s])
        return Automaton(tuple(new), last, ren(self.start))


def bp_dfa_accept(states: int, length: int) -> BranchingProgram:
    """Program for Alice holding a DFA with ``states`` states and Bob holding alpha.

    Alice's input is an :class:`Automaton`; it is normalized on use so the
    accepting state is the last one.
    """
    if states < 1 or length < 0:
        raise BranchingProgramError("need states >= 1 and length >= 0")
    Q = tuple(range(states))
    QB = tuple((q, b) for q in Q for b in (0, 1))
    layers = [("start",), Q]
    for _ in range(length):
        layers += [QB, Q]
    layers.append(Q)

    def alice(auto: Automaton):
        a = auto.normalized()
        if a.size != states:
            raise BranchingProgramError(f"automaton has {a.size} states after normalization, program expects {states}")

        def step(layer, v):
            if layer == 0:
                return a.start
            q, b = v
            return a.delta[q][b]

        return step

    def bob(alpha):
        ab = _bits(alpha, length)

        def step(layer, v):
            i = (layer - 1) // 2
            return (v, ab[i]) if i < length else v

        return step

    leaves = {q: int(q == states - 1) for q in Q}
    return BranchingProgram(layers, alice, bob, leaves, 1, f"dfa{states}x{length}")


# --- millionaires / first differing bit -----------------------------------------------------


def hash_bits(n: int, eps: float) -> int:
    """a = ceil(log2(ceil(log2 n) / eps))."""
    if n < 2:
        raise BranchingProgramError("n must be >= 2")
    if not 0 < eps < 1 / n:
        raise BranchingProgramError("need 0 < eps < 1/n")
    return math.ceil(math.log2(math.ceil(math.log2(n)) / Fraction(eps).limit_denominator(1 << 62)) - 1e-12)


@dataclass(frozen=True)
class HashFamilyConfig:
    """h_l(prefix) = PRF(key_l, prefix) truncated to a bits, key_l derived from the seed."""

    a: int
    seed: BitString

    def key(self, length: int) -> bytes:
        return prf_int(self.seed.serialize(), b"prefix-hash-key" + length.to_bytes(4, "big"), 256).to_bytes(32, "big")

    def h(self, length: int, prefix: Sequence[int]) -> int:
        return prf_int(self.key(length), BitString.from_bits(prefix).serialize(), self.a)


def _search_mid(lo: int, hi: int) -> int:
    return (lo + hi + 1) // 2


@lru_cache(maxsize=None)
def _search_layers(n: int, a: int, variant: str) -> tuple:
    """Layer structure: ceil(log2 n) hashed prefix probes of 2a layers, then a 2-layer bit compare."""
    probes = math.ceil(math.log2(n))

    def succ(layer, v):
        probe, off = divmod(layer, 2 * a)
        if probe < probes:
            _, lo, hi, g = v
            if off % 2 == 0:
                return [("s", lo, hi, "trap")] if g == "trap" else [("s", lo, hi, "l0"), ("s", lo, hi, "l1")]
            if off < 2 * a - 1:
                return [("s", lo, hi, "live"), ("s", lo, hi, "trap")]
            if lo == hi:
                return [("s", lo, hi, "live")]
            mid = _search_mid(lo, hi)
            return [("s", mid, hi, "live"), ("s", lo, mid - 1, "live")]
        if layer == 2 * a * probes:
            _, lo, hi, _ = v
            return [("f", lo, 0), ("f", lo, 1)]
        _, L, _ = v
        if variant == "compare":
            return [("eq",), ("x",), ("y",)]
        return [("eq",), ("d", L)]

    return tuple(build_layers(("s", 0, n - 1, "live"), 2 * a * probes + 2, succ))


def _search_bp(n: int, eps: float, shared_seed, variant: str) -> BranchingProgram:
    a = hash_bits(n, eps)
    if not isinstance(shared_seed, BitString):
        shared_seed = BitString(int(shared_seed) % (1 << 128), 128)
    hf = HashFamilyConfig(a, shared_seed)
    probes = math.ceil(math.log2(n))
    layers = _search_layers(n, a, variant)
    split = 2 * a * probes

    def party(inp, role):
        bits = _bits(inp, n)
        hashes = [hf.h(length, bits[:length]) for length in range(n + 1)]

        def step(layer, v):
            if layer < split:
                off = layer % (2 * a)
                t = off // 2
                _, lo, hi, g = v
                hb = (hashes[_search_mid(lo, hi) if lo < hi else lo] >> (a - 1 - t)) & 1
                if role == "A":
                    return ("s", lo, hi, "trap" if g == "trap" else f"l{hb}")
                same = g != "trap" and int(g[1]) == hb
                if off < 2 * a - 1:
                    return ("s", lo, hi, "live" if same else "trap")
                if lo == hi:
                    return ("s", lo, hi, "live")
                mid = _search_mid(lo, hi)
                return ("s", mid, hi, "live") if same else ("s", lo, mid - 1, "live")
            if role == "A":
                return ("f", v[1], bits[v[1]])
            _, L, xb = v
            if xb == bits[L]:
                return ("eq",)
            if variant == "compare":
                return ("x",) if xb == 1 else ("y",)
            return ("d", L)

        return step

    if variant == "compare":
        leaves = {("eq",): 0, ("x",): 1, ("y",): 2}
        leaf_bits = 2
    else:
        leaves = {("eq",): n}
        leaves.update({v: v[1] for v in layers[-1] if v[0] == "d"})
        leaf_bits = n.bit_length()
    return BranchingProgram(list(layers), lambda x: party(x, "A"), lambda y: party(y, "B"),
                            leaves, leaf_bits, f"{variant}-n{n}-a{a}")


MILLIONAIRES_OUTCOME = {0: "equal", 1: "x", 2: "y"}


def bp_millionaires(n: int, eps: float, shared_seed) -> BranchingProgram:
    """Leaves: 0 equal, 1 x larger, 2 y larger (inputs are n-bit, MSB first)."""
    return _search_bp(n, eps, shared_seed, "compare")


def bp_first_diff(n: int, eps: float, shared_seed) -> BranchingProgram:
    """Leaf is the first index where x and y differ, or n when they are equal (promise broken)."""
    return _search_bp(n, eps, shared_seed, "first-diff")


def millionaires_oracle(x: int, y: int) -> int:
    return 0 if x == y else (1 if x > y else 2)


def first_diff_oracle(x, y, n: int) -> int:
    xb, yb = _bits(x, n), _bits(y, n)
    for i in range(n):
        if xb[i] != yb[i]:
            return i
    return n


# --- position-wise inequality -----------------------------------------------------------


def positionwise_rs(n: int, m: int, shared_seed, elem_bits: int) -> list[int]:
    if not isinstance(shared_seed, BitString):
        shared_seed = BitString(int(shared_seed) % (1 << 128), 128)
    stream = prg_expand(shared_seed, m * elem_bits).value
    return [(stream >> (elem_bits * (m - 1 - j))) & ((1 << elem_bits) - 1) for j in range(m)]


def _ip(a: int, b: int) -> int:
    return bin(a & b).count("1") & 1


def bp_positionwise_inequality(n: int, m: int, shared_seed, elem_bits: Optional[int] = None) -> BranchingProgram:
    """Rows 0..n-1 plus an absorbing trap; value 1 iff the walk never enters the trap.

    Column j compares <x_i, r_j> with <y_i, r_j> for the current row i; a
    mismatch eliminates row i (the last row's elimination enters the trap).
    """
    if m <= n:
        raise BranchingProgramError("need m > n")
    eb = n if elem_bits is None else elem_bits
    rs = positionwise_rs(n, m, shared_seed, eb)

    def succ(layer, v):
        if v == "trap":
            return ["trap"]
        if layer % 2 == 0:
            return [(v, 0), (v, 1)]
        i, _ = v
        return [i, i + 1 if i + 1 < n else "trap"]

    layers = build_layers(0, 2 * m, succ)

    def check(lst):
        lst = list(lst)
        if len(lst) != n or any(not 0 <= e < 1 << eb for e in lst):
            raise BranchingProgramError(f"expected {n} elements of {eb} bits")
        return lst

    def alice(xs):
        xs = check(xs)
        return lambda layer, v: "trap" if v == "trap" else (v, _ip(xs[v], rs[layer // 2]))

    def bob(ys):
        ys = check(ys)

        def step(layer, v):
            if v == "trap":
                return "trap"
            i, xb = v
            if _ip(ys[i], rs[layer // 2]) == xb:
                return i
            return i + 1 if i + 1 < n else "trap"

        return step

    leaves = {v: int(v != "trap") for v in layers[-1]}
    return BranchingProgram(layers, alice, bob, leaves, 1, f"poswise-n{n}-m{m}")


def positionwise_oracle(xs, ys) -> int:
    return int(any(a == b for a, b in zip(xs, ys)))


# --- revealed random bits ------------------------------------------------------------------


@dataclass
class RevealedProtocol:
    """Alice draws a k-bit seed and sends it; both expand it and run the hard-wired program."""

    builder: Callable[[BitString], BranchingProgram]
    k: int
    seed_bits_out: int = 128

    def program(self, s: BitString) -> BranchingProgram:
        return self.builder(prg_expand(s, self.seed_bits_out))

    def alice(self, party, x):
        s = party.rng.bitstring(self.k)
        party.channel.send(s.to_bytes(), FrameType.SEED)
        party.meter.add("seed_bits", self.k)
        party.meter.add("prg_bits", self.seed_bits_out)
        return bp_alice(party, self.program(s), x)

    def bob(self, party, y):
        payload = party.channel.recv(FrameType.SEED)
        s = BitString.from_bytes(payload, self.k)
        return bp_bob(party, self.program(s), y)

    def run(self, x, y, *, seed=0, backend="ideal", transport="mem", k=128):
        res = run_two_party(lambda p: self.alice(p, x), lambda p: self.bob(p, y),
                            seed=seed, backend=backend, transport=transport, k=k)
        return res.alice ^ res.bob, res

    def run_plaintext(self, x, y, s: BitString):
        return run_plaintext_bp(self.program(s), x, y)


def derandomize_revealed(builder: Callable[[BitString], BranchingProgram], k: int = 128) -> RevealedProtocol:
    return RevealedProtocol(builder, k)


# --- randomness reduction by sampling -------------------------------------------------------


@dataclass
class RandomizedProtocol:
    """Output ``fn(x, y, r)`` for r uniform over ``rand_bits`` bits; inputs are ``n``-bit."""

    n: int
    m: int
    rand_bits: int
    fn: Callable[[int, int, int], int]

    def distribution(self, x: int, y: int) -> dict:
        cnt: dict = {}
        total = 1 << self.rand_bits
        for r in range(total):
            z = self.fn(x, y, r)
            cnt[z] = cnt.get(z, 0) + 1
        return {z: Fraction(c, total) for z, c in cnt.items()}


@dataclass
class SampledProtocol:
    base: RandomizedProtocol
    samples: list

    def __post_init__(self):
        if len(self.samples) < 1:
            raise BranchingProgramError("need t >= 1 samples")

    @property
    def t(self) -> int:
        return len(self.samples)

    @property
    def selector_bits(self) -> int:
        return max(0, math.ceil(math.log2(self.t)))

    def run(self, x: int, y: int, i: int) -> int:
        return self.base.fn(x, y, self.samples[i])

    def distribution(self, x: int, y: int) -> dict:
        cnt: dict = {}
        for r in self.samples:
            z = self.base.fn(x, y, r)
            cnt[z] = cnt.get(z, 0) + 1
        return {z: Fraction(c, self.t) for z, c in cnt.items()}


def reduce_randomness(base: RandomizedProtocol, t: int, rng: SeededRng) -> SampledProtocol:
    if t < 1:
        raise BranchingProgramError("t must be >= 1")
    return SampledProtocol(base, [rng.getrandbits(base.rand_bits) for _ in range(t)])


def statistical_distance(p: dict, q: dict) -> Fraction:
    keys = set(p) | set(q)
    return sum((abs(p.get(z, 0) - q.get(z, 0)) for z in keys), Fraction(0)) / 2


def max_statistical_distance(base: RandomizedProtocol, sampled: SampledProtocol) -> Fraction:
    worst = Fraction(0)
    for x, y in itertools.product(range(1 << base.n), repeat=2):
        worst = max(worst, statistical_distance(base.distribution(x, y), sampled.distribution(x, y)))
    return worst


def inner_product_equality(n: int = 3, reps: int = 2) -> RandomizedProtocol:
    """Outputs 1 iff <x, r_i> = <y, r_i> for each of ``reps`` random n-bit vectors."""
    mask = (1 << n) - 1

    def fn(x, y, r):
        for i in range(reps):
            ri = (r >> (n * i)) & mask
            if _ip(x, ri) != _ip(y, ri):
                return 0
        return 1

    return RandomizedProtocol(n, 1, n * reps, fn)
