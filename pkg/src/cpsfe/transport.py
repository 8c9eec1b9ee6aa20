"""Frame codec, byte transports and the metered :class:`Channel`.

A frame is ``<u32 little-endian payload length><u8 type><payload>``.
"""

from __future__ import annotations

import enum
import queue
import socket
import struct
import threading
import time
from typing import Optional

from .meter import CostMeter

HEADER = struct.Struct("<IB")
MAX_FRAME = 1 << 30


class FrameType(enum.IntEnum):
    DATA = 0
    OT_MSG = 1
    SEED = 2
    END = 3


class TransportError(RuntimeError):
    pass


class ProtocolAbort(RuntimeError):
    """The counterpart sent something the protocol did not expect."""


def encode_frame(ftype: int, payload: bytes) -> bytes:
    if len(payload) > MAX_FRAME:
        raise ValueError("frame too large")
    return HEADER.pack(len(payload), int(ftype)) + payload


def decode_frame(data: bytes) -> tuple[FrameType, bytes, bytes]:
    """Split one frame off ``data``; returns (type, payload, rest)."""
    if len(data) < HEADER.size:
        raise TransportError("truncated frame header")
    n, t = HEADER.unpack_from(data)
    end = HEADER.size + n
    if len(data) < end:
        raise TransportError("truncated frame payload")
    try:
        ftype = FrameType(t)
    except ValueError:
        raise TransportError(f"unknown frame type {t}") from None
    return ftype, data[HEADER.size : end], data[end:]


class _Closed:
    pass


_CLOSED = _Closed()


class MemoryEndpoint:
    def __init__(self, inbox: queue.Queue, outbox: queue.Queue):
        self._in = inbox
        self._out = outbox

    def send_bytes(self, data: bytes) -> None:
        self._out.put(data)

    def recv_frame(self) -> bytes:
        item = self._in.get()
        if item is _CLOSED:
            self._in.put(_CLOSED)
            raise TransportError("channel closed by peer")
        return item

    def close(self) -> None:
        self._out.put(_CLOSED)
        self._in.put(_CLOSED)


def memory_pair() -> tuple[MemoryEndpoint, MemoryEndpoint]:
    a_to_b: queue.Queue = queue.Queue()
    b_to_a: queue.Queue = queue.Queue()
    return MemoryEndpoint(b_to_a, a_to_b), MemoryEndpoint(a_to_b, b_to_a)


class TcpEndpoint:
    """Socket endpoint; sends go through a writer thread so both sides may send at once."""

    def __init__(self, sock: socket.socket):
        sock.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        self._sock = sock
        self._outq: queue.Queue = queue.Queue()
        self._err: Optional[BaseException] = None
        self._writer = threading.Thread(target=self._write_loop, daemon=True)
        self._writer.start()

    def _write_loop(self) -> None:
        while True:
            item = self._outq.get()
            if item is None:
                return
            try:
                self._sock.sendall(item)
            except OSError as exc:
                self._err = exc
                return

    def send_bytes(self, data: bytes) -> None:
        if self._err is not None:
            raise TransportError(str(self._err))
        self._outq.put(data)

    def _read_exact(self, n: int) -> bytes:
        buf = bytearray()
        while len(buf) < n:
            try:
                chunk = self._sock.recv(min(1 << 20, n - len(buf)))
            except OSError as exc:
                raise TransportError(str(exc)) from exc
            if not chunk:
                raise TransportError("connection closed by peer")
            buf += chunk
        return bytes(buf)

    def recv_frame(self) -> bytes:
        head = self._read_exact(HEADER.size)
        n, _ = HEADER.unpack(head)
        if n > MAX_FRAME:
            raise TransportError("oversized frame")
        return head + self._read_exact(n)

    def flush(self) -> None:
        self._outq.put(None)
        self._writer.join()

    def close(self) -> None:
        if self._writer.is_alive():
            self.flush()
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def tcp_pair() -> tuple[TcpEndpoint, TcpEndpoint]:
    """Two connected endpoints over loopback TCP."""
    with socket.create_server(("127.0.0.1", 0)) as srv:
        port = srv.getsockname()[1]
        client = socket.create_connection(("127.0.0.1", port))
        server, _ = srv.accept()
    return TcpEndpoint(client), TcpEndpoint(server)


def tcp_listen(host: str, port: int) -> TcpEndpoint:
    with socket.create_server((host, port)) as srv:
        conn, _ = srv.accept()
    return TcpEndpoint(conn)


def tcp_connect(host: str, port: int, timeout: float = 30.0) -> TcpEndpoint:
    """Connect, retrying while the listener is not up yet."""
    deadline = time.monotonic() + timeout
    while True:
        try:
            return TcpEndpoint(socket.create_connection((host, port), timeout=timeout))
        except ConnectionRefusedError:
            if time.monotonic() > deadline:
                raise
            time.sleep(0.05)


class Channel:
    """Metered, frame-oriented duplex channel for one endpoint.

    ``view`` records every payload received, which is what privacy checks
    inspect.  ``rounds`` counts message flights: a send that follows a
    receive (or opens the conversation) starts a new flight.
    """

    def __init__(self, endpoint, role: str, meter: CostMeter):
        self.endpoint = endpoint
        self.role = role
        self.meter = meter
        self.view: list[bytes] = []
        self._last = "recv"

    def send(self, payload: bytes, ftype: FrameType = FrameType.DATA) -> None:
        frame = encode_frame(ftype, payload)
        if self._last == "recv":
            self.meter.add("rounds")
        self._last = "send"
        self.meter.add_bytes(self.role, len(frame))
        self.endpoint.send_bytes(frame)

    def recv(self, expect: Optional[FrameType] = None) -> bytes:
        ftype, payload, rest = decode_frame(self.endpoint.recv_frame())
        if rest:
            raise TransportError("trailing bytes after frame")
        if expect is not None and ftype != expect:
            raise ProtocolAbort(f"expected {expect.name} frame, got {ftype.name}")
        self._last = "recv"
        self.view.append(payload)
        return payload

    def close(self) -> None:
        self.endpoint.close()
