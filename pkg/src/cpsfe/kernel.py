"""Bit strings, XOR sharing, and the PRG / PRF / seeded-randomness primitives.

Bit order is big-endian throughout: bit 0 of a ``BitString`` is its most
significant bit, so a tree path ``s0 s1 s2`` read root-to-leaf is the integer
``s0*4 + s1*2 + s2``.
"""

from __future__ import annotations

import hashlib
import hmac
import struct
from dataclasses import dataclass
from typing import Iterable, Sequence


class ShareError(ValueError):
    """Two shares (or operands of a XOR) do not have matching bit lengths."""


@dataclass(frozen=True, slots=True)
class BitString:
    value: int
    bit_len: int

    def __post_init__(self) -> None:
        if self.bit_len < 0:
            raise ValueError("bit_len must be non-negative")
        if self.value < 0 or self.value >> self.bit_len:
            raise ValueError(f"value {self.value} does not fit in {self.bit_len} bits")

    @classmethod
    def zeros(cls, n: int) -> BitString:
        return cls(0, n)

    @classmethod
    def from_bits(cls, bits: Iterable[int] | str) -> BitString:
        value = 0
        n = 0
        for b in bits:
            b = int(b)
            if b not in (0, 1):
                raise ValueError(f"not a bit: {b!r}")
            value = (value << 1) | b
            n += 1
        return cls(value, n)

    @classmethod
    def from_bytes(cls, data: bytes, bit_len: int | None = None) -> BitString:
        """Read the leading ``bit_len`` bits of ``data`` (all of it by default)."""
        total = len(data) * 8
        if bit_len is None:
            bit_len = total
        if bit_len > total:
            raise ValueError("not enough bytes for requested bit length")
        return cls(int.from_bytes(data, "big") >> (total - bit_len), bit_len)

    @property
    def bits(self) -> tuple[int, ...]:
        n = self.bit_len
        return tuple((self.value >> (n - 1 - i)) & 1 for i in range(n))

    def __len__(self) -> int:
        return self.bit_len

    def __int__(self) -> int:
        return self.value

    def __index__(self) -> int:
        return self.value

    def __getitem__(self, i: int) -> int:
        if i < 0:
            i += self.bit_len
        if not 0 <= i < self.bit_len:
            raise IndexError(i)
        return (self.value >> (self.bit_len - 1 - i)) & 1

    def __xor__(self, other: BitString) -> BitString:
        if not isinstance(other, BitString):
            return NotImplemented
        if other.bit_len != self.bit_len:
            raise ShareError(f"length mismatch: {self.bit_len} vs {other.bit_len}")
        return BitString(self.value ^ other.value, self.bit_len)

    def __add__(self, other: BitString) -> BitString:
        """Concatenation."""
        if not isinstance(other, BitString):
            return NotImplemented
        return BitString((self.value << other.bit_len) | other.value, self.bit_len + other.bit_len)

    def slice(self, start: int, stop: int) -> BitString:
        if not 0 <= start <= stop <= self.bit_len:
            raise IndexError((start, stop))
        width = stop - start
        return BitString((self.value >> (self.bit_len - stop)) & ((1 << width) - 1), width)

    def to_bytes(self) -> bytes:
        """Payload bytes: left-aligned, padded with zero bits to a whole byte."""
        nbytes = (self.bit_len + 7) // 8
        pad = nbytes * 8 - self.bit_len
        return (self.value << pad).to_bytes(nbytes, "big")

    def serialize(self) -> bytes:
        return struct.pack("<I", self.bit_len) + self.to_bytes()

    @classmethod
    def deserialize(cls, data: bytes) -> BitString:
        bs, rest = cls.read_from(data)
        if rest:
            raise ValueError(f"{len(rest)} trailing bytes after BitString")
        return bs

    @classmethod
    def read_from(cls, data: bytes) -> tuple[BitString, bytes]:
        """Parse one serialized BitString off the front of ``data``."""
        if len(data) < 4:
            raise ValueError("truncated BitString header")
        (n,) = struct.unpack_from("<I", data)
        nbytes = (n + 7) // 8
        if len(data) < 4 + nbytes:
            raise ValueError("truncated BitString payload")
        body = data[4 : 4 + nbytes]
        pad = nbytes * 8 - n
        raw = int.from_bytes(body, "big")
        if raw & ((1 << pad) - 1):
            raise ValueError("non-zero padding bits")
        return cls(raw >> pad, n), data[4 + nbytes :]

    def __str__(self) -> str:
        return format(self.value, f"0{self.bit_len}b") if self.bit_len else ""


def bits(text: str) -> BitString:
    """Shorthand: ``bits("1101")``."""
    return BitString.from_bits(text)


def xor_reconstruct(a: BitString, b: BitString) -> BitString:
    if a.bit_len != b.bit_len:
        raise ShareError(f"malformed shares: {a.bit_len} vs {b.bit_len} bits")
    return a ^ b


@dataclass(frozen=True, slots=True)
class XorShare:
    share: BitString
    role: str  # "A" or "B"

    def __post_init__(self) -> None:
        if self.role not in ("A", "B"):
            raise ValueError(f"role must be 'A' or 'B', got {self.role!r}")

    def __xor__(self, other: XorShare) -> BitString:
        if self.role == other.role:
            raise ShareError("cannot reconstruct from two shares of the same party")
        return xor_reconstruct(self.share, other.share)


def share(secret: BitString, rng: SeededRng) -> tuple[XorShare, XorShare]:
    mask = rng.bitstring(secret.bit_len)
    return XorShare(secret ^ mask, "A"), XorShare(mask, "B")


@dataclass(frozen=True)
class SecurityParam:
    k: int

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("security parameter must be positive")

    def check_real(self) -> None:
        if self.k < 64:
            raise ValueError(f"k={self.k} is below the 64-bit floor for real backends")


# --- PRG / PRF --------------------------------------------------------------

_BLOCK_BITS = 256


def _expand(prefix: bytes, out_len_bits: int) -> int:
    nblocks = -(-out_len_bits // _BLOCK_BITS)
    acc = bytearray()
    for ctr in range(nblocks):
        acc += hashlib.sha256(prefix + ctr.to_bytes(8, "big")).digest()
    return int.from_bytes(acc, "big") >> (nblocks * _BLOCK_BITS - out_len_bits)


def prg_expand(seed: BitString, out_len_bits: int) -> BitString:
    """SHA-256 in counter mode over the canonical seed encoding."""
    if out_len_bits < 1:
        raise ValueError("out_len_bits must be >= 1")
    return BitString(_expand(b"cpsfe/prg\x00" + seed.serialize(), out_len_bits), out_len_bits)


def prf_eval(key: BitString, data: BitString, out_len_bits: int) -> BitString:
    """HMAC-SHA256 keyed by ``key`` and run in counter mode to ``out_len_bits``."""
    if out_len_bits < 0:
        raise ValueError("out_len_bits must be >= 0")
    if out_len_bits == 0:
        return BitString(0, 0)
    return BitString(prf_int(key.serialize(), data.serialize(), out_len_bits), out_len_bits)


def prf_int(key: bytes, data: bytes, out_len_bits: int) -> int:
    """Raw-bytes form of :func:`prf_eval`, for hot loops."""
    nblocks = -(-out_len_bits // _BLOCK_BITS)
    acc = bytearray()
    for ctr in range(nblocks):
        acc += hmac.digest(key, data + ctr.to_bytes(4, "big"), "sha256")
    return int.from_bytes(acc, "big") >> (nblocks * _BLOCK_BITS - out_len_bits)


class SeededRng:
    """Deterministic random stream: identical ``(seed, counter)`` gives identical output.

    Single-owner; do not share one instance between parties.
    """

    def __init__(self, seed: BitString | bytes | int, counter: int = 0) -> None:
        if isinstance(seed, int):
            seed = BitString(seed % (1 << 128), 128)
        elif isinstance(seed, bytes):
            seed = BitString.from_bytes(seed)
        self.seed = seed
        self.counter = counter
        self._prefix = b"cpsfe/rng\x00" + seed.serialize()
        self._buf = 0
        self._buf_bits = 0

    def _refill(self) -> None:
        block = hashlib.sha256(self._prefix + self.counter.to_bytes(8, "big")).digest()
        self.counter += 1
        self._buf = (self._buf << _BLOCK_BITS) | int.from_bytes(block, "big")
        self._buf_bits += _BLOCK_BITS

    def getrandbits(self, n: int) -> int:
        if n < 0:
            raise ValueError("negative bit count")
        while self._buf_bits < n:
            self._refill()
        self._buf_bits -= n
        out = self._buf >> self._buf_bits
        self._buf &= (1 << self._buf_bits) - 1
        return out

    def bitstring(self, n: int) -> BitString:
        return BitString(self.getrandbits(n), n)

    def randbelow(self, n: int) -> int:
        if n <= 0:
            raise ValueError("randbelow needs a positive bound")
        nbits = (n - 1).bit_length()
        while True:
            r = self.getrandbits(nbits)
            if r < n:
                return r

    def randbytes(self, n: int) -> bytes:
        return self.getrandbits(8 * n).to_bytes(n, "big")

    def shuffle(self, items: list) -> None:
        for i in range(len(items) - 1, 0, -1):
            j = self.randbelow(i + 1)
            items[i], items[j] = items[j], items[i]

    def choice(self, items: Sequence):
        return items[self.randbelow(len(items))]

    def fork(self, label: str) -> SeededRng:
        """Independent child stream; does not advance this one."""
        child = prf_eval(self.seed, BitString.from_bytes(label.encode()), self.seed.bit_len or 128)
        return SeededRng(child)
