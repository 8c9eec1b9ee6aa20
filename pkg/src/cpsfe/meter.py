"""Per-run cost accounting."""

from __future__ import annotations

import threading
from collections import Counter
from dataclasses import dataclass, field


@dataclass
class CostMeter:
    """Tally of OT invocations by width and of bytes, rounds and PRF/PRG work.

    Every logical OT is counted once, on the sender side.  ``base_ot12``
    counts the OT_1^2 calls issued internally by the reduction backend.
    """

    ot_invocations: Counter = field(default_factory=Counter)
    ot_log: list = field(default_factory=list)
    base_ot12: int = 0
    bytes_sent: dict = field(default_factory=lambda: {"A": 0, "B": 0})
    frames_sent: dict = field(default_factory=lambda: {"A": 0, "B": 0})
    rounds: int = 0
    ot_rounds: int = 0
    prf_evals: int = 0
    prg_bits: int = 0
    seed_bits: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def record_ot(self, width: int) -> None:
        with self._lock:
            self.ot_invocations[width] += 1
            self.ot_log.append(width)

    def add(self, name: str, amount: int = 1) -> None:
        with self._lock:
            setattr(self, name, getattr(self, name) + amount)

    def add_bytes(self, role: str, n: int) -> None:
        with self._lock:
            self.bytes_sent[role] += n
            self.frames_sent[role] += 1

    @property
    def total_ots(self) -> int:
        return sum(self.ot_invocations.values())

    @property
    def total_bytes(self) -> int:
        return sum(self.bytes_sent.values())

    def to_dict(self) -> dict:
        return {
            "ot_invocations": {str(w): c for w, c in sorted(self.ot_invocations.items())},
            "ot_total": self.total_ots,
            "base_ot12": self.base_ot12,
            "bytes_sent": dict(sorted(self.bytes_sent.items())),
            "frames_sent": dict(sorted(self.frames_sent.items())),
            "rounds": self.rounds,
            "ot_rounds": self.ot_rounds,
            "prf_evals": self.prf_evals,
            "prg_bits": self.prg_bits,
            "seed_bits": self.seed_bits,
        }
