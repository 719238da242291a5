"""User-side client: the app / remote control of the workflow."""
from __future__ import annotations

import threading
from concurrent.futures import Future
from typing import Any

from .protocol import ControlMessage, ProtocolError
from .transport import Link


class ClientError(Exception):
    pass


class UserClient:
    """Request/response wrapper; every call returns the broker's reply message."""

    def __init__(self, link: Link, timeout: float | None = 30.0):
        self.link = link
        self.timeout = timeout
        self._lock = threading.Lock()
        self._pending: dict[int, Future] = {}
        self._closed = threading.Event()
        self._reader = threading.Thread(target=self._read, name="user-client", daemon=True)
        self._reader.start()
        reply = self.call("hello", {"role": "user"})
        if reply.type != "ack":
            raise ClientError(f"hello rejected: {reply.payload}")

    def _read(self) -> None:
        for item in self.link:
            if isinstance(item, ProtocolError):
                continue
            of_seq = item.get("of_seq")
            with self._lock:
                fut = self._pending.pop(of_seq, None)
            if fut is not None:
                fut.set_result(item)
        self._closed.set()
        with self._lock:
            pending, self._pending = list(self._pending.values()), {}
        for fut in pending:
            fut.set_exception(ConnectionError("broker connection closed"))

    def call(self, mtype: str, payload: dict[str, Any] | None = None,
             timeout: float | None = None) -> ControlMessage:
        fut: Future = Future()
        with self._lock:
            if self._closed.is_set():
                raise ConnectionError("broker connection closed")
            seq = self.link.send(mtype, payload or {})
            self._pending[seq] = fut
        return fut.result(timeout if timeout is not None else self.timeout)

    def gen(self, location_id: str, algorithm_id: str, timeout: float | None = None) -> ControlMessage:
        return self.call("gen_request", {"location_id": location_id, "algorithm_id": algorithm_id},
                         timeout=timeout if timeout is not None else max(self.timeout or 0, 300.0))

    def apply(self, location_id: str) -> ControlMessage:
        return self.call("apply_cb", {"location_id": location_id})

    def save(self, location_id: str, codebook_text: str) -> ControlMessage:
        return self.call("save_cb", {"location_id": location_id, "codebook": codebook_text})

    def delete(self, location_id: str) -> ControlMessage:
        return self.call("delete_cb", {"location_id": location_id})

    def list(self) -> ControlMessage:
        return self.call("list_cb")

    def rssi(self) -> ControlMessage:
        return self.call("rssi_request")

    def close(self) -> None:
        self.link.close()
        self._reader.join(2.0)
