"""Two-party execution: party contexts, the out-of-band dealer queue, and runners.

``run_two_party`` drives Alice on a worker thread and Bob on the calling
thread.  Each endpoint only touches its own rng and view and talks to the
other through the channel, so results are a function of the seed alone.
"""

from __future__ import annotations

import queue
import threading
from dataclasses import dataclass, field
from typing import Any, Callable, Optional

from .kernel import SeededRng
from .meter import CostMeter
from .ot import OtBackend, make_backend
from .transport import Channel, TransportError, memory_pair, tcp_pair


class _OobClosed:
    pass


class DealerQueues:
    """Side channel used only by the ideal OT backend."""

    def __init__(self):
        self.q = {"A": queue.Queue(), "B": queue.Queue()}

    def put(self, to_role: str, item) -> None:
        self.q[to_role].put(item)

    def get(self, role: str):
        item = self.q[role].get()
        if isinstance(item, _OobClosed):
            self.q[role].put(item)
            raise TransportError("dealer queue closed")
        return item

    def close(self) -> None:
        for q in self.q.values():
            q.put(_OobClosed())


@dataclass
class Party:
    role: str
    channel: Channel
    rng: SeededRng
    backend: OtBackend
    meter: CostMeter
    k: int = 128
    dealer: Optional[DealerQueues] = None

    @property
    def peer(self) -> str:
        return "B" if self.role == "A" else "A"

    @property
    def view(self) -> list[bytes]:
        return self.channel.view

    def record_view(self, payload: bytes) -> None:
        self.channel.view.append(payload)

    def oob_send(self, item) -> None:
        if self.dealer is None:
            raise TransportError("ideal OT needs both parties in one process")
        self.dealer.put(self.peer, item)

    def oob_recv(self):
        if self.dealer is None:
            raise TransportError("ideal OT needs both parties in one process")
        return self.dealer.get(self.role)


@dataclass
class RunResult:
    alice: Any
    bob: Any
    meter: CostMeter
    views: dict = field(default_factory=dict)


def party_rng(seed, role: str) -> SeededRng:
    return SeededRng(seed).fork(f"party-{role}")


def run_two_party(
    alice_fn: Callable[[Party], Any],
    bob_fn: Callable[[Party], Any],
    *,
    seed=0,
    backend="ideal",
    transport: str = "mem",
    k: int = 128,
    meter: Optional[CostMeter] = None,
) -> RunResult:
    backend = make_backend(backend) if isinstance(backend, str) else backend
    meter = meter if meter is not None else CostMeter()
    if transport == "mem":
        ep_a, ep_b = memory_pair()
    elif transport == "tcp":
        ep_a, ep_b = tcp_pair()
    else:
        raise ValueError(f"unknown transport {transport!r}")
    dealer = DealerQueues()
    alice = Party("A", Channel(ep_a, "A", meter), party_rng(seed, "A"), backend, meter, k, dealer)
    bob = Party("B", Channel(ep_b, "B", meter), party_rng(seed, "B"), backend, meter, k, dealer)

    box: dict = {}

    def alice_main():
        try:
            box["out"] = alice_fn(alice)
        except BaseException as exc:
            box["err"] = exc
            dealer.close()
            ep_a.close()

    th = threading.Thread(target=alice_main, name="alice", daemon=True)
    th.start()
    bob_err = None
    try:
        bob_out = bob_fn(bob)
    except BaseException as exc:
        bob_err = exc
        dealer.close()
        ep_b.close()
    th.join()
    if transport == "tcp":
        ep_a.close()
        ep_b.close()
    # the side that failed first carries the real cause
    if "err" in box and (bob_err is None or isinstance(bob_err, TransportError)):
        raise box["err"]
    if bob_err is not None:
        raise bob_err
    return RunResult(box["out"], bob_out, meter, {"A": list(alice.view), "B": list(bob.view)})


def run_endpoint(
    role: str, fn: Callable[[Party], Any], endpoint, *, seed=0, backend="group", k: int = 128
) -> tuple[Any, CostMeter, list]:
    """Run one side over an already connected endpoint (two-process mode)."""
    backend = make_backend(backend) if isinstance(backend, str) else backend
    if backend.kind == "ideal":
        raise ValueError("the ideal OT backend cannot span two processes; use group or ot12")
    meter = CostMeter()
    party = Party(role, Channel(endpoint, role, meter), party_rng(seed, role), backend, meter, k, None)
    try:
        out = fn(party)
    finally:
        endpoint.close()
    return out, meter, list(party.view)
