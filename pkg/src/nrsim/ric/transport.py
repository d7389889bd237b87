"""E2 links between the gNB and an xApp.

Both links carry the same encoded bytes. The in-process link hands messages
to an Xapp object synchronously; the socket link talks to ``serve_xapp`` in
another process over TCP and never blocks the engine when reading.
"""
from __future__ import annotations

import logging
import os
import socket
import threading

from .protocol import E2Message, decode_message, encode_message
from .xapp import Xapp

log = logging.getLogger(__name__)

E2_SOCKET_ENV = "NRSIM_E2_SOCKET"


def parse_address(text: str) -> tuple[str, int]:
    host, sep, port = text.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"E2 socket address must look like host:port, got {text!r}")
    return host or "127.0.0.1", int(port)


def default_address() -> str | None:
    return os.environ.get(E2_SOCKET_ENV) or None


class _LineBuffer:
    def __init__(self):
        self._buf = b""
        self._line = 0

    def feed(self, data: bytes) -> list[E2Message]:
        self._buf += data
        out = []
        while True:
            i = self._buf.find(b"\n")
            if i < 0:
                return out
            raw, self._buf = self._buf[: i + 1], self._buf[i + 1:]
            self._line += 1
            out.append(decode_message(raw, line=self._line))


class InProcessLink:
    def __init__(self, xapp: Xapp):
        self.xapp = xapp
        self._inbox = _LineBuffer()
        self._pending = b""
        self.bytes_sent = 0

    def send(self, msg: E2Message) -> None:
        wire = encode_message(msg)
        self.bytes_sent += len(wire)
        for reply in self.xapp.handle(decode_message(wire)):
            self._pending += encode_message(reply)

    @property
    def has_pending(self) -> bool:
        return bool(self._pending)

    def poll(self) -> list[E2Message]:
        data, self._pending = self._pending, b""
        return self._inbox.feed(data) if data else []

    def close(self) -> None:
        pass


class SocketLink:
    """gNB side of a TCP E2 connection."""

    def __init__(self, address: str, timeout: float = 5.0):
        self.address = parse_address(address)
        self.sock = socket.create_connection(self.address, timeout=timeout)
        self.sock.setblocking(False)
        self._inbox = _LineBuffer()

    def send(self, msg: E2Message) -> None:
        self.sock.setblocking(True)
        try:
            self.sock.sendall(encode_message(msg))
        finally:
            self.sock.setblocking(False)

    def poll(self) -> list[E2Message]:
        chunks = []
        while True:
            try:
                data = self.sock.recv(65536)
            except (BlockingIOError, InterruptedError):
                break
            if not data:
                break
            chunks.append(data)
        return self._inbox.feed(b"".join(chunks)) if chunks else []

    def close(self) -> None:
        try:
            self.sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self.sock.close()


def serve_xapp(xapp, host: str = "127.0.0.1", port: int = 0,
               ready: threading.Event | None = None, bound: list | None = None,
               connections: int | None = 1) -> None:
    """Accept gNB connections one after another and answer them.

    ``xapp`` is an Xapp shared by every session, or a zero-argument callable
    returning a fresh one per session. ``connections=None`` serves forever.
    ``bound`` (if given) receives the actual (host, port), useful with port 0.
    """
    with socket.create_server((host, port)) as srv:
        if bound is not None:
            bound.append(srv.getsockname()[:2])
        if ready is not None:
            ready.set()
        served = 0
        while connections is None or served < connections:
            conn, peer = srv.accept()
            served += 1
            app = xapp if isinstance(xapp, Xapp) else xapp()
            log.info("gNB connected from %s", peer)
            with conn, conn.makefile("rb") as reader:
                for n, raw in enumerate(reader, start=1):
                    msg = decode_message(raw, line=n)
                    for reply in app.handle(msg):
                        conn.sendall(encode_message(reply))
            log.info("gNB %s disconnected", peer)
