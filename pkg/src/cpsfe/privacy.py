"""Statistical smoke test for view privacy.

For each party we run many trials split into two classes that differ only in
the counterpart's input (own input and output held fixed) and compare the
received payload bytes position by position with a two-sample z-test.  A
position whose class means differ by more than 4 standard errors is reported.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .harness import run_two_party
from .indexing import GIndInstance, gind, gind_plain

Z_LIMIT = 4.0


@dataclass
class PrivacyVerdict:
    verdict: str  # "pass", "fail" or "inconclusive"
    trials: int
    failures: dict = field(default_factory=dict)  # role -> offending byte positions
    max_z: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "verdict": self.verdict,
            "trials": self.trials,
            "failures": {r: list(p) for r, p in self.failures.items()},
            "max_z": {r: round(z, 3) for r, z in self.max_z.items()},
        }


def view_bytes(view: Sequence[bytes]) -> bytes:
    return b"".join(view)


def byte_ztest(class0: Sequence[bytes], class1: Sequence[bytes], limit: float = Z_LIMIT) -> tuple[list, float]:
    """Positions whose mean byte value differs between the classes, and the largest |z|."""
    lengths = {len(v) for v in class0} | {len(v) for v in class1}
    if len(lengths) > 1:
        return [-1], math.inf  # view length itself depends on the class
    (n,) = lengths
    bad, worst = [], 0.0
    n0, n1 = len(class0), len(class1)
    for p in range(n):
        a = [v[p] for v in class0]
        b = [v[p] for v in class1]
        ma, mb = sum(a) / n0, sum(b) / n1
        va = sum((x - ma) ** 2 for x in a) / max(1, n0 - 1)
        vb = sum((x - mb) ** 2 for x in b) / max(1, n1 - 1)
        se = math.sqrt(va / n0 + vb / n1)
        if se == 0:
            z = 0.0 if ma == mb else math.inf
        else:
            z = abs(ma - mb) / se
        worst = max(worst, z)
        if z > limit:
            bad.append(p)
    return bad, worst


def smoke(run: Callable[[str, int, int], dict], trials: int, roles: Sequence[str] = ("A", "B")) -> PrivacyVerdict:
    """``run(role, cls, seed)`` executes one trial and returns the views by role.

    For the role under test, ``cls`` picks which of two counterpart inputs is used.
    """
    if trials < 2:
        return PrivacyVerdict("inconclusive", trials)
    failures, max_z = {}, {}
    for role in roles:
        groups: tuple = ([], [])
        for t in range(trials):
            cls = t % 2
            groups[cls].append(view_bytes(run(role, cls, t)[role]))
        bad, worst = byte_ztest(*groups)
        max_z[role] = worst
        if bad:
            failures[role] = bad
    return PrivacyVerdict("fail" if failures else "pass", trials, failures, max_z)


# --- scenarios -----------------------------------------------------------------------------

# four-level GInd, widths 4; both inputs of each class give output 2
GIND_ALICE = ([[1, 3, 0, 2], [3, 1, 2, 0]], [[2, 2, 1, 0], [1, 2, 3, 0]])   # levels 2 and 4
GIND_BOB = ([[0, 1, 2, 3], [3, 0, 1, 2]], [[1, 2, 0, 3], [2, 2, 0, 1]])     # levels 1 and 3
GIND_J0 = 1


def _gind_levels(alice: Sequence, bob: Sequence) -> list:
    return [bob[0], alice[0], bob[1], alice[1]]


def _gind_inputs(role: str, cls: int) -> tuple:
    """Alice-view trials vary Bob's lists; Bob-view trials vary Alice's."""
    if role == "A":
        return GIND_ALICE[0], GIND_BOB[cls]
    return GIND_ALICE[cls], GIND_BOB[0]


def gind_run(role: str, cls: int, seed: int) -> dict:
    a, b = _gind_inputs(role, cls)
    inst = GIndInstance(_gind_levels(a, b), GIND_J0, out_bits=2)
    return gind(inst, seed=seed).views


def leaky_gind_run(role: str, cls: int, seed: int) -> dict:
    """Broken pointer jumping: each list owner announces the next index in the clear."""
    a, b = _gind_inputs(role, cls)
    levels = _gind_levels(a, b)

    def party(p, own_parity):
        j = GIND_J0
        for lvl, lst in enumerate(levels, start=1):
            if lvl % 2 == own_parity:
                j = lst[j]
                p.channel.send(bytes([j]))
            else:
                j = p.channel.recv()[0]
        return j

    return run_two_party(lambda p: party(p, 0), lambda p: party(p, 1), seed=seed).views


# LUT read: (RA xor RB)[jA xor jB] is 5 in every configuration below
LUT_ALICE = ((1, (1, 2, 3, 4)), (3, (6, 0, 2, 5)))
LUT_BOB = ((0, (0, 7, 0, 0)), (2, (3, 6, 1, 1)))


def _lut_inputs(role: str, cls: int) -> tuple:
    if role == "A":
        return LUT_ALICE[0], LUT_BOB[cls]
    return LUT_ALICE[cls], LUT_BOB[0]


def lut_run(role: str, cls: int, seed: int) -> dict:
    from .lut import lut_eval

    (ja, ra), (jb, rb) = _lut_inputs(role, cls)
    return lut_eval(ja, ra, jb, rb, 3, seed=seed).views


def _garbled_circuits(cache={}):
    if "c" not in cache:
        from .cc import build_hamming_tree
        from .garbled import tree_circuits

        cache["c"] = tree_circuits(build_hamming_tree(2), 2, 2)
    return cache["c"]


def garbled_run(role: str, cls: int, seed: int) -> dict:
    """Hamming distance on 2 bits; every pair used has distance 1."""
    from .garbled import run_garbled_protocol

    ca, cb = _garbled_circuits()
    if role == "A":
        x, y = [0, 1], ([0, 0], [1, 1])[cls]
    else:
        x, y = ([0, 1], [1, 0])[cls], [0, 0]
    return run_garbled_protocol(ca, cb, x, y, seed=seed)[1].views


SCENARIOS = {
    "gind": gind_run,
    "lut": lut_run,
    "garbled": garbled_run,
    "leaky-gind": leaky_gind_run,
}


def privacy_smoke(protocol: str, trials: int) -> PrivacyVerdict:
    if protocol not in SCENARIOS:
        raise ValueError(f"unknown privacy scenario {protocol!r}; choose from {sorted(SCENARIOS)}")
    return smoke(SCENARIOS[protocol], trials)


def check_scenarios() -> dict:
    """Plain outputs per (scenario, role, class); each role's two classes must agree."""
    from .cc import build_hamming_tree, run_plaintext

    out = {}
    for role in "AB":
        for cls in (0, 1):
            a, b = _gind_inputs(role, cls)
            out[("gind", role, cls)] = gind_plain(_gind_levels(a, b), GIND_J0)
            (ja, ra), (jb, rb) = _lut_inputs(role, cls)
            out[("lut", role, cls)] = ra[ja ^ jb] ^ rb[ja ^ jb]
    t = build_hamming_tree(2)
    out[("garbled", "A", 0)] = run_plaintext(t, "01", "00")
    out[("garbled", "A", 1)] = run_plaintext(t, "01", "11")
    out[("garbled", "B", 0)] = run_plaintext(t, "01", "00")
    out[("garbled", "B", 1)] = run_plaintext(t, "10", "00")
    return out
