import itertools
import random

import pytest
from hypothesis import given, settings, strategies as st

from cpsfe.bp import (
    Automaton,
    BranchingProgramError,
    bp_dfa_accept,
    bp_first_diff,
    bp_millionaires,
    bp_positionwise_inequality,
    bp_string_equality,
    compile_and_run_bp,
    compile_and_run_bp_many,
    derandomize_revealed,
    first_diff_oracle,
    from_text,
    hash_bits,
    inner_product_equality,
    max_statistical_distance,
    millionaires_oracle,
    positionwise_oracle,
    reduce_randomness,
    run_plaintext_bp,
    to_text,
)
from cpsfe.kernel import SeededRng


def test_equality_shape():
    bp = bp_string_equality(4)
    assert bp.c == 8 and bp.width == 3
    res = compile_and_run_bp(bp, "1101", "1010", seed=1)
    assert res.alice ^ res.bob == 0
    assert res.meter.ot_log == [3, 2, 3, 2, 3, 2, 3, 2]


def test_equality_text_round_trip():
    bp = bp_string_equality(2)
    dom = ["00", "01", "10", "11"]
    back = from_text(to_text(bp, dom, dom), dom, dom)
    for x, y in itertools.product(dom, repeat=2):
        assert run_plaintext_bp(back, x, y) == int(x == y)


def test_from_text_rejects_garbage():
    with pytest.raises((BranchingProgramError, ValueError)):
        from_text("not a program", ["0"], ["0"])


def test_hash_bits():
    assert hash_bits(16, 2 ** -20) == 22
    assert hash_bits(32, 2 ** -20) == 23
    with pytest.raises(BranchingProgramError):
        hash_bits(16, 0.5)


def test_millionaires_shape():
    bp = bp_millionaires(16, 2 ** -20, 3)
    assert bp.c == 2 * 22 * 4 + 2
    assert bp.width <= 2 * 16


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**16 - 1), st.integers(0, 2**16 - 1))
def test_millionaires_plaintext(x, y):
    bp = _mill16()
    assert run_plaintext_bp(bp, x, y) == millionaires_oracle(x, y)


_cache = {}


def _mill16():
    if "bp" not in _cache:
        _cache["bp"] = bp_millionaires(16, 2 ** -20, 3)
    return _cache["bp"]


def test_millionaires_compiled_sample():
    bp = bp_millionaires(8, 2 ** -12, 4)
    rng = random.Random(2)
    pairs = [(rng.getrandbits(8), rng.getrandbits(8)) for _ in range(60)] + [(5, 5), (0, 255), (255, 0)]
    vals, res = compile_and_run_bp_many(bp, pairs)
    assert vals == [millionaires_oracle(x, y) for x, y in pairs]
    assert res.meter.ot_rounds == bp.c


def test_first_diff():
    bp = bp_first_diff(8, 2 ** -12, 6)
    rng = random.Random(3)
    for _ in range(200):
        x, y = rng.getrandbits(8), rng.getrandbits(8)
        assert run_plaintext_bp(bp, x, y) == first_diff_oracle(x, y, 8)


def test_dfa_matches_direct_run():
    rng = random.Random(4)
    for _ in range(20):
        q = rng.randint(1, 4)
        auto = Automaton(tuple((rng.randrange(q), rng.randrange(q)) for _ in range(q)), rng.randrange(q), rng.randrange(q))
        bp = bp_dfa_accept(q, 5)
        for alpha in range(32):
            word = format(alpha, "05b")
            assert run_plaintext_bp(bp, auto, word) == int(auto.accepts([int(c) for c in word]))


def test_dfa_normalization_keeps_language():
    auto = Automaton(((1, 2), (0, 0), (2, 1)), accept=0, start=1)
    norm = auto.normalized()
    assert norm.accept == 2
    for word in itertools.product((0, 1), repeat=4):
        assert auto.accepts(word) == norm.accepts(word)


def test_dfa_rejects_partial_delta():
    with pytest.raises(BranchingProgramError):
        Automaton(((0, 3),), 0)


def test_positionwise():
    bp = bp_positionwise_inequality(3, 28, 7, 4)
    rng = random.Random(5)
    for _ in range(200):
        xs = [rng.randrange(16) for _ in range(3)]
        ys = [rng.randrange(16) for _ in range(3)]
        if rng.random() < 0.3:
            i = rng.randrange(3)
            ys[i] = xs[i]
        got = run_plaintext_bp(bp, xs, ys)
        if positionwise_oracle(xs, ys):
            assert got == 1  # an equal position is never eliminated
    with pytest.raises(BranchingProgramError):
        bp_positionwise_inequality(3, 3, 1)


def test_revealed_randomness():
    proto = derandomize_revealed(lambda s: bp_millionaires(8, 2 ** -12, s), k=128)
    for x, y in [(3, 200), (77, 77), (250, 9)]:
        z, res = proto.run(x, y, seed=x)
        assert z == millionaires_oracle(x, y)
        assert res.meter.seed_bits == 128 and res.meter.prg_bits == 128


def test_randomness_reduction_small():
    base = inner_product_equality(3, 2)
    sampled = reduce_randomness(base, 256, SeededRng(1))
    assert sampled.selector_bits == 8
    assert max_statistical_distance(base, sampled) <= 0.1
    one = reduce_randomness(base, 1, SeededRng(1))
    assert max_statistical_distance(base, one) > 0.1
    with pytest.raises(BranchingProgramError):
        reduce_randomness(base, 0, SeededRng(1))
