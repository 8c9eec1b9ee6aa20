"""Command-line runner: ``python -m cpsfe --protocol hamming --x 01 --y 11``.

Every flag can also come from an environment variable ``CPSFE_<FLAG>``
(``CPSFE_SEED=3``); explicit flags win.  The report is JSON.  Wall time is
only included with ``--timing`` so that repeated runs are byte-identical.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from . import __version__
from .harness import run_endpoint, run_two_party
from .meter import CostMeter

SCHEMA = "cpsfe-report/1"


class UsageError(ValueError):
    pass


@dataclass
class Job:
    alice: Optional[Callable] = None
    bob: Optional[Callable] = None
    finish: Callable = lambda a, b: {}
    checks: Callable = lambda meter, outputs: {}
    local: Optional[Callable] = None  # protocols with no two-party run
    params: dict = field(default_factory=dict)


def parse_eps(text: str) -> float:
    text = str(text).strip().replace(" ", "")
    if text.startswith("2^"):
        return 2.0 ** float(text[2:])
    return float(text)


def parse_list(text: str) -> list[int]:
    text = str(text).strip()
    return [int(t) for t in text.split(",")] if text else []


def parse_bits(text: str, n: Optional[int] = None) -> str:
    text = str(text).strip()
    if not text or set(text) - {"0", "1"}:
        raise UsageError(f"expected a bit string, got {text!r}")
    if n is not None and len(text) != n:
        raise UsageError(f"expected {n} bits, got {len(text)}")
    return text


def _widths(meter: CostMeter) -> list:
    return list(meter.ot_log)


# --- protocol setups -------------------------------------------------------------------------


def _job_millionaires(a) -> Job:
    from .bp import MILLIONAIRES_OUTCOME, bp_alice, bp_bob, bp_millionaires, hash_bits

    n, eps = a.n or 32, parse_eps(a.eps)
    x, y = int(a.x or 0), int(a.y or 0)
    if not (0 <= x < 1 << n and 0 <= y < 1 << n):
        raise UsageError(f"inputs must be {n}-bit integers")
    bp = bp_millionaires(n, eps, a.seed)
    ah = hash_bits(n, eps)
    probes = math.ceil(math.log2(n))

    def checks(meter, out):
        return {
            "ot_count_le_3_a_log_n": meter.total_ots <= 3 * ah * probes,
            "ot_widths_le_4n": max(_widths(meter)) <= 4 * n,
            "ot_widths_match_layers": _widths(meter) == list(bp.widths[1:]),
        }

    return Job(lambda p: bp_alice(p, bp, x), lambda p: bp_bob(p, bp, y),
               lambda ra, rb: {"winner": MILLIONAIRES_OUTCOME[ra ^ rb]}, checks,
               params={"n": n, "eps": eps, "a": ah, "x": x, "y": y, "layers": bp.c, "width": bp.width})


def _cc_checks(tree):
    def checks(meter, out):
        return {"ot_widths_powers_of_two": _widths(meter) == [1 << d for d in range(1, tree.depth + 1)]}
    return checks


def _job_hamming(a) -> Job:
    from .cc import build_hamming_tree, cc_alice, cc_bob

    n = a.n or len(a.x or a.y or "00")
    x, y = parse_bits(a.x or "0" * n, n), parse_bits(a.y or "0" * n, n)
    tree = build_hamming_tree(n)
    return Job(lambda p: cc_alice(p, tree, x), lambda p: cc_bob(p, tree, y),
               lambda ra, rb: {"value": ra ^ rb}, _cc_checks(tree), params={"n": n, "x": x, "y": y})


def _job_median(a) -> Job:
    from .cc import cc_alice, cc_bob, median_tree

    n = a.n or 16
    x, y = parse_list(a.x or "1,9"), parse_list(a.y or "2,4")
    if len(x) != len(y):
        raise UsageError("median needs equally sized sets")
    tree = median_tree(n, len(x))
    return Job(lambda p: cc_alice(p, tree, x), lambda p: cc_bob(p, tree, y),
               lambda ra, rb: {"median": ra ^ rb}, _cc_checks(tree), params={"n": n, "x": x, "y": y})


def _bp_job(bp, x, y, finish, params) -> Job:
    from .bp import bp_alice, bp_bob

    def checks(meter, out):
        return {"ot_widths_match_layers": _widths(meter) == list(bp.widths[1:])}

    return Job(lambda p: bp_alice(p, bp, x), lambda p: bp_bob(p, bp, y), finish, checks, params=params)


def _job_equality(a) -> Job:
    from .bp import bp_string_equality

    x = parse_bits(a.x or "1101")
    y = parse_bits(a.y or "1010", len(x))
    return _bp_job(bp_string_equality(len(x)), x, y, lambda ra, rb: {"equal": ra ^ rb},
                   {"w": len(x), "x": x, "y": y})


def _job_dfa(a) -> Job:
    from .bp import Automaton, bp_dfa_accept

    rows = [tuple(int(t) for t in r.split(",")) for r in (a.delta or "0,1;1,0").split(";")]
    auto = Automaton(tuple(rows), int(a.accept if a.accept is not None else 1))
    alpha = parse_bits(a.y or "1011")
    bp = bp_dfa_accept(auto.size, len(alpha))
    return _bp_job(bp, auto, alpha, lambda ra, rb: {"accepted": ra ^ rb},
                   {"delta": [list(r) for r in rows], "accept": auto.accept, "alpha": alpha})


def _job_poswise(a) -> Job:
    from .bp import bp_positionwise_inequality

    x, y = parse_list(a.x or "1,2,3"), parse_list(a.y or "4,2,6")
    n = len(x)
    if len(y) != n:
        raise UsageError("position-wise check needs equal-length lists")
    eb = a.bits or 8
    m = a.m or 4 * n + 16
    bp = bp_positionwise_inequality(n, m, a.seed, eb)
    return _bp_job(bp, x, y, lambda ra, rb: {"some_position_equal": ra ^ rb},
                   {"n": n, "m": m, "elem_bits": eb, "x": x, "y": y})


def _job_gind(a) -> Job:
    from .indexing import GIndInstance, gind_party, gind_plain
    from .kernel import SeededRng

    widths = parse_list(a.widths or "2,4,8,16")
    rng = SeededRng(a.seed).fork("gind-demo")
    out_bits = a.bits or 4
    levels = []
    for i, w in enumerate(widths):
        bound = widths[i + 1] if i + 1 < len(widths) else 1 << out_bits
        levels.append([rng.randbelow(bound) for _ in range(w)])
    inst = GIndInstance(levels, rng.randbelow(widths[0]), out_bits)
    a0, b0 = inst.plan.start_ring().split(inst.j0, rng.fork("start"))
    expect = gind_plain(levels, inst.j0)

    def checks(meter, out):
        return {"one_ot_per_level": _widths(meter) == widths, "matches_pointer_jumping": out.get("value") == expect}

    return Job(lambda p: gind_party(p, a0, inst.alice_lists, inst.plan),
               lambda p: gind_party(p, b0, inst.bob_lists, inst.plan),
               lambda ra, rb: {"value": ra ^ rb}, checks, params={"widths": widths, "levels": levels, "j0": inst.j0})


def _job_lut_sort(a) -> Job:
    from .kernel import SeededRng
    from .lut import eval_lut_circuit_party, sort_circuit

    n = a.n or 8
    vbits = a.bits or 8
    if a.x:
        values = parse_list(a.x)
        n = len(values)
    else:
        rng = SeededRng(a.seed).fork("lut-sort")
        values = [rng.getrandbits(vbits) for _ in range(n)]
    vbits = max(vbits, max(values).bit_length())
    circ, gadgets = sort_circuit(n, vbits)
    ain = {f"v{i}": x for i, x in enumerate(values)}

    def finish(ra, rb):
        return {"sorted": [ra[w] ^ rb[w] for w in circ.outputs]}

    def checks(meter, out):
        return {
            "sorted_matches": out.get("sorted") == sorted(values),
            "two_ots_per_lut": meter.total_ots == 2 * len(circ.luts),
        }

    return Job(lambda p: eval_lut_circuit_party(p, circ, ain), lambda p: eval_lut_circuit_party(p, circ, {}),
               finish, checks, params={"values": values, "gadgets": gadgets, "luts": len(circ.luts)})


def _job_oram(a) -> Job:
    from .oram import hier_bound, oram_bench, sqrt_bound

    sizes = parse_list(a.sizes or "16,64,256")
    ops = a.ops or 1000

    def local():
        rows = oram_bench(sizes, ops, a.seed)
        checks = {}
        for r in rows:
            s = r["scheme"]
            key = f"{s}_s{r['s']}"
            if s == "basic":
                checks[key] = r["write_touches_per_write"] == r["s"]
            elif s == "sqrt":
                checks[key] = r["touches_per_op"] <= sqrt_bound(r["s"])
            else:
                checks[key] = r["touches_per_op"] <= hier_bound(r["s"])
        return {"rows": rows}, checks

    return Job(local=local, params={"sizes": sizes, "ops": ops})


def _job_garbled(a) -> Job:
    from .cc import build_hamming_tree, run_plaintext
    from .garbled import garbled_party, tree_circuits

    n = a.n or 2
    x, y = parse_bits(a.x or "01", n), parse_bits(a.y or "11", n)
    tree = build_hamming_tree(n)
    ca, cb = tree_circuits(tree, n, n)
    xb, yb = [int(c) for c in x], [int(c) for c in y]

    def checks(meter, out):
        return {
            "c_width2_ots": _widths(meter) == [2] * tree.depth,
            "matches_plaintext": out.get("hamming") in (None, run_plaintext(tree, x, y)),
        }

    return Job(lambda p: garbled_party(p, ca, cb, xb), lambda p: garbled_party(p, cb, ca, yb),
               lambda ra, rb: {"hamming": ra}, checks,
               params={"n": n, "x": x, "y": y, "gates": [len(ca.table_gates), len(cb.table_gates)]})


PROTOCOLS = {
    "millionaires": _job_millionaires,
    "median": _job_median,
    "hamming": _job_hamming,
    "equality": _job_equality,
    "dfa": _job_dfa,
    "poswise": _job_poswise,
    "gind-demo": _job_gind,
    "lut-sort": _job_lut_sort,
    "oram-bench": _job_oram,
    "garbled-demo": _job_garbled,
}


# --- argument handling ----------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cpsfe", description="Run a two-party protocol and print a JSON report.")
    ap.add_argument("--protocol", choices=sorted(PROTOCOLS))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--transport", choices=["mem", "tcp"], default="mem")
    ap.add_argument("--ot", choices=["ideal", "group", "ot12"], default="ideal")
    ap.add_argument("--k", type=int, default=128, help="security parameter in bits")
    ap.add_argument("--listen", metavar="HOST:PORT", help="run as Alice, waiting for Bob")
    ap.add_argument("--connect", metavar="HOST:PORT", help="run as Bob, connecting to Alice")
    ap.add_argument("--json", metavar="PATH", help="also write the report here")
    ap.add_argument("--timing", action="store_true", help="include wall time in the report")
    g = ap.add_argument_group("protocol parameters")
    g.add_argument("--x", help="Alice's input")
    g.add_argument("--y", help="Bob's input")
    g.add_argument("--n", type=int, help="input length or universe bits")
    g.add_argument("--m", type=int, help="column count for poswise")
    g.add_argument("--eps", default="2^-20", help="error bound, e.g. 2^-20")
    g.add_argument("--bits", type=int, help="value or element bit width")
    g.add_argument("--widths", help="GInd level widths, comma separated")
    g.add_argument("--sizes", help="ORAM memory sizes, comma separated")
    g.add_argument("--ops", type=int, help="ORAM op count")
    g.add_argument("--delta", help="DFA transitions 'q0on0,q0on1;q1on0,q1on1;...'")
    g.add_argument("--accept", type=int, help="DFA accepting state")
    return ap


def _apply_env(ap: argparse.ArgumentParser, env) -> None:
    """Environment values become parser defaults, so explicit flags still win."""
    defaults = {}
    for act in ap._actions:
        if not act.option_strings or act.dest == "help":
            continue
        key = "CPSFE_" + act.dest.upper()
        if key in env:
            raw = env[key]
            if isinstance(act, argparse._StoreTrueAction):
                defaults[act.dest] = raw.lower() in ("1", "true", "yes")
            else:
                defaults[act.dest] = act.type(raw) if act.type else raw
    ap.set_defaults(**defaults)


def _split_addr(text: str) -> tuple[str, int]:
    host, _, port = text.rpartition(":")
    if not host or not port.isdigit():
        raise UsageError(f"expected HOST:PORT, got {text!r}")
    return host, int(port)


def run_config(a) -> dict:
    job = PROTOCOLS[a.protocol](a)
    config = {"protocol": a.protocol, "seed": a.seed, "transport": a.transport, "ot": a.ot, "k": a.k}
    report: dict = {"schema": SCHEMA, "version": __version__, "config": config, "params": job.params}
    t0 = time.perf_counter()
    if job.local is not None:
        outputs, checks = job.local()
        meter = CostMeter()
    elif a.listen or a.connect:
        from .transport import tcp_connect, tcp_listen

        if a.ot == "ideal":
            raise UsageError("the ideal OT backend cannot span two processes; pass --ot group or --ot ot12")
        role = "A" if a.listen else "B"
        host, port = _split_addr(a.listen or a.connect)
        ep = tcp_listen(host, port) if role == "A" else tcp_connect(host, port)
        out, meter, _ = run_endpoint(role, job.alice if role == "A" else job.bob, ep,
                                     seed=a.seed, backend=a.ot, k=a.k)
        config["role"] = role
        outputs = {"share" if a.protocol != "garbled-demo" else "output": _jsonable(out)}
        checks = {}  # each side meters only the OTs it sends, so totals are not checkable here
    else:
        res = run_two_party(job.alice, job.bob, seed=a.seed, backend=a.ot, transport=a.transport, k=a.k)
        meter = res.meter
        outputs = job.finish(res.alice, res.bob)
        checks = job.checks(meter, outputs)
    report["outputs"] = outputs
    report["meter"] = meter.to_dict()
    report["checks"] = checks
    if a.timing:
        report["wall_time_s"] = round(time.perf_counter() - t0, 6)
    return report


def _jsonable(v: Any):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    return v


def render(report: dict) -> str:
    return json.dumps(report, sort_keys=True, indent=2)


def main(argv=None, env=None) -> int:
    ap = build_parser()
    _apply_env(ap, os.environ if env is None else env)
    a = ap.parse_args(argv)
    if not a.protocol:
        ap.error("--protocol is required (or set CPSFE_PROTOCOL)")
    if a.listen and a.connect:
        ap.error("use only one of --listen and --connect")
    try:
        report = run_config(a)
    except (UsageError, ValueError) as exc:
        print(f"cpsfe: error: {exc}", file=sys.stderr)
        return 2
    text = render(report)
    if a.json:
        with open(a.json, "w") as fh:
            fh.write(text + "\n")
    print(text)
    return 0 if all(report["checks"].values()) else 1
