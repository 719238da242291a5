"""Line transports and the sequenced message link that rides on them."""
from __future__ import annotations

import queue
import socket
import threading
from collections import Counter
from typing import Any, Iterator

from .protocol import ControlMessage, ProtocolError, decode, encode

_EOF = object()


class QueueChannel:
    """One end of an in-process duplex line pipe."""

    def __init__(self, inbox: queue.Queue, outbox: queue.Queue):
        self._inbox = inbox
        self._outbox = outbox
        self._closed = False

    def send_line(self, line: str) -> None:
        if self._closed:
            raise ConnectionError("channel closed")
        self._outbox.put(line)

    def recv_line(self) -> str | None:
        item = self._inbox.get()
        if item is _EOF:
            self._inbox.put(_EOF)
            return None
        return item

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._outbox.put(_EOF)
            self._inbox.put(_EOF)


def pipe() -> tuple[QueueChannel, QueueChannel]:
    a_to_b: queue.Queue = queue.Queue()
    b_to_a: queue.Queue = queue.Queue()
    return QueueChannel(b_to_a, a_to_b), QueueChannel(a_to_b, b_to_a)


class SocketChannel:
    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._reader = sock.makefile("rb")
        self._closed = False

    def send_line(self, line: str) -> None:
        try:
            self._sock.sendall(line.encode("utf-8"))
        except OSError as exc:
            raise ConnectionError(str(exc)) from exc

    def recv_line(self) -> str | bytes | None:
        try:
            data = self._reader.readline()
        except OSError:
            return None
        return data if data else None

    def close(self) -> None:
        if self._closed:
            return
        self._closed = True
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


def parse_address(addr: str) -> tuple[str, int]:
    host, sep, port = addr.rpartition(":")
    if not sep or not port.isdigit():
        raise ValueError(f"address must be host:port, got {addr!r}")
    return host or "127.0.0.1", int(port)


def connect(addr: str, timeout: float = 5.0) -> SocketChannel:
    host, port = parse_address(addr)
    sock = socket.create_connection((host, port), timeout=timeout)
    sock.settimeout(None)
    return SocketChannel(sock)


class Link:
    """Sequenced message endpoint over a line channel.

    Outgoing messages get consecutive ``seq`` numbers starting at 1; incoming
    ``seq`` values must be strictly increasing. Sends are thread-safe.
    """

    def __init__(self, channel: Any, name: str = ""):
        self.channel = channel
        self.name = name
        self._lock = threading.Lock()
        self._next_seq = 1
        self._last_in = 0
        self.sent = Counter()

    @property
    def sent_count(self) -> int:
        return sum(self.sent.values())

    def send(self, mtype: str, payload: dict[str, Any] | None = None) -> int:
        with self._lock:
            msg = ControlMessage(mtype, self._next_seq, payload or {})
            self.channel.send_line(encode(msg))
            self._next_seq += 1
            self.sent[mtype] += 1
            return msg.seq

    def recv(self) -> ControlMessage | None:
        """Next message, or None once the peer has closed."""
        line = self.channel.recv_line()
        if line is None:
            return None
        msg = decode(line)
        if msg.seq <= self._last_in:
            raise ProtocolError(f"seq {msg.seq} not greater than previous {self._last_in}", 0, "bad_seq")
        self._last_in = msg.seq
        return msg

    def __iter__(self) -> Iterator[ControlMessage | ProtocolError]:
        """Yield messages until EOF; protocol errors are yielded, not raised."""
        while True:
            try:
                msg = self.recv()
            except ProtocolError as exc:
                yield exc
                continue
            if msg is None:
                return
            yield msg

    def close(self) -> None:
        self.channel.close()
