"""1-out-of-w oblivious transfer backends.

All backends share one batched interface.  Both parties call
``backend.batch(party, items)`` with item lists that correspond position by
position: a :class:`Send` on one side pairs with a :class:`Choose` on the
other.  Batching lets independent OTs share a round trip.

Backends:

* ``ideal``  trusted dealer; values cross an in-process side queue.
* ``group``  two-message Naor-Pinkas style OT in a safe-prime subgroup.
* ``ot12``   OT_1^w from log2(w) base OT_1^2 calls plus PRF-masked slots.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Sequence

from .kernel import BitString, prf_int
from .transport import FrameType, ProtocolAbort

TAG_BITS = 32


class OtError(ValueError):
    """Width/index mismatch or malformed OT input."""


@dataclass(frozen=True)
class Send:
    values: tuple
    elen: int

    def __post_init__(self):
        if len(self.values) < 1:
            raise OtError("OT width must be at least 1")
        if self.elen < 0:
            raise OtError("negative element length")
        lim = 1 << self.elen
        for v in self.values:
            if not 0 <= v < lim:
                raise OtError(f"value {v} does not fit in {self.elen} bits")

    @property
    def w(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class Choose:
    j: int
    w: int
    elen: int

    def __post_init__(self):
        if self.w < 1:
            raise OtError("OT width must be at least 1")
        if not 0 <= self.j < self.w:
            raise OtError(f"choice {self.j} out of range for width {self.w}")


def default_element_len(w: int, k: int) -> int:
    return max(k, math.ceil(math.log2(w)) if w > 1 else 0)


def _nbytes(bits: int) -> int:
    return (bits + 7) // 8


def _meter_batch(party, items, logical: bool) -> None:
    if not items:
        return
    for it in items:
        if isinstance(it, Send):
            if logical:
                party.meter.record_ot(it.w)
            else:
                party.meter.add("base_ot12")
    if logical and party.role == "A":
        party.meter.add("ot_rounds")


class OtBackend:
    kind = "abstract"
    real = False

    def batch(self, party, items: Sequence, logical: bool = True) -> list[Optional[int]]:
        raise NotImplementedError

    def describe(self) -> dict:
        return {"kind": self.kind}


class IdealOt(OtBackend):
    """Trusted dealer: the sender's vector goes out of band, the chooser keeps one entry."""

    kind = "ideal"

    def batch(self, party, items, logical=True):
        _meter_batch(party, items, logical)
        out: list[Optional[int]] = []
        for it in items:
            if isinstance(it, Send):
                party.oob_send((it.w, it.elen, it.values))
                out.append(None)
            else:
                w, elen, values = party.oob_recv()
                if w != it.w or elen != it.elen:
                    raise ProtocolAbort(
                        f"OT shape mismatch: sender (w={w}, X={elen}) vs chooser (w={it.w}, X={it.elen})"
                    )
                v = values[it.j]
                party.record_view(v.to_bytes(_nbytes(elen), "big") if elen else b"")
                out.append(v)
        return out


# --- group backend -----------------------------------------------------------

MODP_HEX = {
    "modp1024": (
        "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74020BBEA63B139B22514A08798E3404DD"
        "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
        "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE65381FFFFFFFFFFFFFFFF"
    ),
    "modp1536": (
        "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74020BBEA63B139B22514A08798E3404DD"
        "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
        "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
        "83655D23DCA3AD961C62F356208552BB9ED529077096966D670C354E4ABC9804F1746C08CA237327FFFFFFFFFFFFFFFF"
    ),
    "modp2048": (
        "FFFFFFFFFFFFFFFFC90FDAA22168C234C4C6628B80DC1CD129024E088A67CC74020BBEA63B139B22514A08798E3404DD"
        "EF9519B3CD3A431B302B0A6DF25F14374FE1356D6D51C245E485B576625E7EC6F44C42E9A637ED6B0BFF5CB6F406B7ED"
        "EE386BFB5A899FA5AE9F24117C4B1FE649286651ECE45B3DC2007CB8A163BF0598DA48361C55D39A69163FA8FD24CF5F"
        "83655D23DCA3AD961C62F356208552BB9ED529077096966D670C354E4ABC9804F1746C08CA18217C32905E462E36CE3B"
        "E39E772C180E86039B2783A2EC07A28FB5C55DF06F4C52C9DE2BCBF6955817183995497CEA956AE515D2261898FA0510"
        "15728E5A8AACAA68FFFFFFFFFFFFFFFF"
    ),
}


@dataclass(frozen=True)
class Group:
    """Order-q subgroup of quadratic residues mod a safe prime p = 2q + 1."""

    name: str
    p: int
    g: int = 2

    @property
    def q(self) -> int:
        return (self.p - 1) // 2

    @property
    def elem_bytes(self) -> int:
        return _nbytes(self.p.bit_length())

    def encode(self, x: int) -> bytes:
        return x.to_bytes(self.elem_bytes, "big")

    def decode(self, data: bytes) -> int:
        x = int.from_bytes(data, "big")
        if not 1 < x < self.p - 1 or pow(x, self.q, self.p) != 1:
            raise ProtocolAbort("group element outside the prime-order subgroup")
        return x


@lru_cache(maxsize=None)
def get_group(name: str) -> Group:
    try:
        return Group(name, int(MODP_HEX[name], 16))
    except KeyError:
        raise OtError(f"unknown group {name!r}; choose from {sorted(MODP_HEX)}") from None


@lru_cache(maxsize=1 << 16)
def _public_point(group_name: str, i: int) -> int:
    """C_i: a group element nobody knows the discrete log of (C_0 = 1)."""
    if i == 0:
        return 1
    grp = get_group(group_name)
    nb = grp.elem_bytes + 16
    seed = b"cpsfe/np-point\x00" + group_name.encode() + i.to_bytes(8, "big")
    raw = b"".join(hashlib.sha256(seed + c.to_bytes(2, "big")).digest() for c in range(-(-nb // 32)))
    h = int.from_bytes(raw[:nb], "big") % grp.p
    return pow(h, 2, grp.p)


def _np_hash(elem: int, i: int, grp: Group, elen: int) -> int:
    if elen == 0:
        return 0
    return prf_int(grp.encode(elem), b"np-slot" + i.to_bytes(8, "big"), elen)


class GroupOt(OtBackend):
    """Chooser sends PK_0 = g^k / C_j; sender answers with g^r and H((PK_0 C_i)^r, i) xor x_i."""

    kind = "group"
    real = True

    def __init__(self, group: str = "modp2048", exp_bits: int = 256):
        self.group = get_group(group)
        self.exp_bits = exp_bits

    def describe(self) -> dict:
        return {"kind": self.kind, "group": self.group.name, "exp_bits": self.exp_bits}

    def _exponent(self, party) -> int:
        while True:
            e = party.rng.getrandbits(self.exp_bits)
            if e:
                return e

    def batch(self, party, items, logical=True):
        _meter_batch(party, items, logical)
        grp = self.group
        p, eb = grp.p, grp.elem_bytes
        sends = [it for it in items if isinstance(it, Send)]
        chooses = [(n, it) for n, it in enumerate(items) if isinstance(it, Choose)]
        secrets_k = {}
        if chooses:
            req = bytearray()
            for n, it in chooses:
                k = self._exponent(party)
                secrets_k[n] = k
                pk = pow(grp.g, k, p)
                if it.j:
                    pk = pk * pow(_public_point(grp.name, it.j), -1, p) % p
                req += grp.encode(pk)
            party.channel.send(bytes(req), FrameType.OT_MSG)
        if sends:
            req = party.channel.recv(FrameType.OT_MSG)
            if len(req) != eb * len(sends):
                raise ProtocolAbort("OT request count mismatch")
            resp = bytearray()
            for m, it in enumerate(sends):
                pk0 = grp.decode(req[m * eb : (m + 1) * eb])
                r = self._exponent(party)
                resp += grp.encode(pow(grp.g, r, p))
                pk0r = pow(pk0, r, p)
                nbe = _nbytes(it.elen)
                for i, x in enumerate(it.values):
                    key = pk0r if i == 0 else pk0r * pow(_public_point(grp.name, i), r, p) % p
                    resp += (x ^ _np_hash(key, i, grp, it.elen)).to_bytes(nbe, "big")
            party.channel.send(bytes(resp), FrameType.OT_MSG)
        out: list[Optional[int]] = [None] * len(items)
        if chooses:
            resp = party.channel.recv(FrameType.OT_MSG)
            off = 0
            for n, it in chooses:
                nbe = _nbytes(it.elen)
                size = eb + it.w * nbe
                if off + size > len(resp):
                    raise ProtocolAbort("OT response shorter than the agreed widths")
                gr = grp.decode(resp[off : off + eb])
                slot = resp[off + eb + it.j * nbe : off + eb + (it.j + 1) * nbe]
                key = pow(gr, secrets_k[n], p)
                out[n] = int.from_bytes(slot, "big") ^ _np_hash(key, it.j, grp, it.elen)
                off += size
            if off != len(resp):
                raise ProtocolAbort("OT response longer than the agreed widths")
        return out


# --- OT_1^w from OT_1^2 ------------------------------------------------------


def _slot_pad(keys: Sequence[int], i: int, k: int, nbits: int) -> int:
    pad = 0
    data = b"ot12-slot" + i.to_bytes(8, "big")
    for key in keys:
        pad ^= prf_int(key.to_bytes(_nbytes(k), "big"), data, nbits)
    return pad


def ot12_encrypt_table(values: Sequence[int], elen: int, key_pairs: Sequence[tuple[int, int]], k: int) -> list[int]:
    """Slot i is (x_i || 0^32) masked by the PRF keys picked out by the bits of i."""
    L = len(key_pairs)
    out = []
    for i in range(1 << L):
        x = values[i] if i < len(values) else 0
        keys = [key_pairs[t][(i >> (L - 1 - t)) & 1] for t in range(L)]
        out.append((x << TAG_BITS) ^ _slot_pad(keys, i, k, elen + TAG_BITS))
    return out


def ot12_decrypt_slot(entry: int, i: int, keys: Sequence[int], elen: int, k: int) -> Optional[int]:
    """Open slot i with one key per level; None when the integrity tag is wrong."""
    plain = entry ^ _slot_pad(keys, i, k, elen + TAG_BITS)
    if plain & ((1 << TAG_BITS) - 1):
        return None
    return plain >> TAG_BITS


class Ot12Reduction(OtBackend):
    """OT_1^w from ceil(log2 w) concurrent OT_1^2 calls on ``base``.

    Non-power-of-two widths are padded with zero slots up to the next power
    of two; the meter still records the logical width.
    """

    kind = "ot12"
    real = True

    def __init__(self, base: Optional[OtBackend] = None, k: int = 128):
        self.base = base if base is not None else GroupOt()
        self.k = k
        self.real = self.base.real

    def describe(self) -> dict:
        return {"kind": self.kind, "k": self.k, "base": self.base.describe()}

    def batch(self, party, items, logical=True):
        _meter_batch(party, items, logical)
        k = self.k
        base_items = []
        plans = []
        for it in items:
            L = math.ceil(math.log2(it.w)) if it.w > 1 else 0
            if isinstance(it, Send):
                pairs = [(party.rng.getrandbits(k), party.rng.getrandbits(k)) for _ in range(L)]
                plans.append(pairs)
                base_items += [Send((a, b), k) for a, b in pairs]
            else:
                plans.append(L)
                base_items += [Choose((it.j >> (L - 1 - t)) & 1, 2, k) for t in range(L)]
        got = self.base.batch(party, base_items, logical=False) if base_items else []
        tables = bytearray()
        for it, plan in zip(items, plans):
            if isinstance(it, Send):
                nbe = _nbytes(it.elen + TAG_BITS)
                enc = ot12_encrypt_table(it.values, it.elen, plan, k)
                party.meter.add("prf_evals", len(enc) * len(plan))
                for e in enc:
                    tables += e.to_bytes(nbe, "big")
        if tables:
            party.channel.send(bytes(tables), FrameType.OT_MSG)
        out: list[Optional[int]] = [None] * len(items)
        if any(isinstance(it, Choose) for it in items):
            data = party.channel.recv(FrameType.OT_MSG)
            off = 0
            pos = 0
            for n, (it, plan) in enumerate(zip(items, plans)):
                if isinstance(it, Send):
                    pos += len(plan)
                    continue
                L = plan
                keys = got[pos : pos + L]
                pos += L
                nbe = _nbytes(it.elen + TAG_BITS)
                size = (1 << L) * nbe
                if off + size > len(data):
                    raise ProtocolAbort("OT table shorter than the agreed widths")
                entry = int.from_bytes(data[off + it.j * nbe : off + (it.j + 1) * nbe], "big")
                off += size
                val = ot12_decrypt_slot(entry, it.j, keys, it.elen, k)
                party.meter.add("prf_evals", L)
                if val is None:
                    raise ProtocolAbort("OT slot failed its integrity tag")
                out[n] = val
            if off != len(data):
                raise ProtocolAbort("OT table longer than the agreed widths")
        return out


def make_backend(kind: str = "ideal", *, group: str = "modp2048", base: str = "group", k: int = 128) -> OtBackend:
    if isinstance(kind, OtBackend):
        return kind
    if kind == "ideal":
        return IdealOt()
    if kind == "group":
        return GroupOt(group)
    if kind == "ot12":
        return Ot12Reduction(make_backend(base, group=group, k=k), k=k)
    raise OtError(f"unknown OT backend {kind!r}")


# --- endpoint helpers ----------------------------------------------------------


def ot_send(party, values: Sequence, elen: Optional[int] = None) -> None:
    """Sender side of one OT.  ``values`` may be ints or equal-length BitStrings."""
    ints, elen = _as_ints(values, elen, party.k)
    party.backend.batch(party, [Send(tuple(ints), elen)])


def ot_receive(party, j: int, w: int, elen: Optional[int] = None) -> BitString:
    if elen is None:
        elen = default_element_len(w, party.k)
    (v,) = party.backend.batch(party, [Choose(j, w, elen)])
    return BitString(v, elen)


def _as_ints(values, elen, k):
    if values and isinstance(values[0], BitString):
        lens = {v.bit_len for v in values}
        if len(lens) != 1:
            raise OtError("OT values must all have the same length")
        (blen,) = lens
        if elen is not None and elen != blen:
            raise OtError("element length does not match value lengths")
        return [v.value for v in values], blen
    if elen is None:
        elen = default_element_len(len(values), k)
    return list(values), elen


def ot1w_via_ot12_send(party, values: Sequence, elen: Optional[int] = None) -> None:
    _require_pow2(len(values))
    ints, elen = _as_ints(values, elen, party.k)
    _reduction(party).batch(party, [Send(tuple(ints), elen)])


def ot1w_via_ot12_receive(party, j: int, w: int, elen: Optional[int] = None) -> BitString:
    _require_pow2(w)
    if elen is None:
        elen = default_element_len(w, party.k)
    (v,) = _reduction(party).batch(party, [Choose(j, w, elen)])
    return BitString(v, elen)


def _reduction(party) -> Ot12Reduction:
    if isinstance(party.backend, Ot12Reduction):
        return party.backend
    return Ot12Reduction(party.backend, k=party.k)


def _require_pow2(w: int) -> None:
    if w < 1 or w & (w - 1):
        raise OtError(f"width {w} is not a power of two")

