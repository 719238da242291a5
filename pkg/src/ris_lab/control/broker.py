"""Cloud broker: routes user commands and runs codebook generation over the wire.

Each connection gets a reader thread that feeds one inbox; a single loop
thread drains the inbox, so all routing decisions and state changes happen
in order. A generation session runs on its own worker thread and blocks on
agent replies, which the loop resolves. One session at a time.
"""
from __future__ import annotations

import itertools
import logging
import queue
import socket
import threading
from concurrent.futures import Future, TimeoutError as FutureTimeout
from dataclasses import dataclass, field
from typing import Any, Callable

from ..core import Codebook, Grid, codebook_from_text
from ..search import run_search
from .protocol import ControlMessage, ProtocolError
from .store import check_location_id
from .transport import Link, SocketChannel, parse_address

log = logging.getLogger(__name__)

WIRE_ALGORITHMS = ("alg1", "bench1", "bench2", "random")
REPLY_TYPES = ("ack", "error", "rssi_response", "cb_list")


class AgentLost(Exception):
    pass


class RequestTimeout(Exception):
    pass


class RemoteError(Exception):
    def __init__(self, code: str, text: str):
        super().__init__(f"{code}: {text}")
        self.code = code
        self.text = text


@dataclass
class _Conn:
    cid: int
    link: Link
    role: str | None = None
    pending: dict[int, Callable[[ControlMessage | None], None]] = field(default_factory=dict)


class WireOracle:
    """Oracle whose measurements travel set_codebook -> rssi_request -> rssi_response."""

    def __init__(self, broker: Broker):
        self.broker = broker
        self._count = 0

    def measure(self, cb: Codebook) -> float:
        self.broker.request("ris", "set_codebook", {"codebook": cb.to_text()})
        reply = self.broker.request("rx", "rssi_request", {})
        if reply.type != "rssi_response":
            raise RemoteError("protocol", f"expected rssi_response, got {reply.type}")
        self._count += 1
        return reply.payload["rssi_dbm"]

    def query_count(self) -> int:
        return self._count


class Broker:
    def __init__(self, request_timeout: float = 5.0, retries: int = 1):
        self.request_timeout = request_timeout
        self.retries = retries
        self._inbox: queue.Queue = queue.Queue()
        self._lock = threading.RLock()
        self._roles_changed = threading.Condition(self._lock)
        self._conns: dict[int, _Conn] = {}
        self._roles: dict[str, int] = {}
        self._ids = itertools.count(1)
        self._ris_grid: Grid | None = None
        self._busy = False
        self._loop: threading.Thread | None = None
        self._server: socket.socket | None = None
        self.sessions_completed = 0

    # -- lifecycle -------------------------------------------------------

    def start(self) -> Broker:
        self._loop = threading.Thread(target=self._run, name="broker-loop", daemon=True)
        self._loop.start()
        return self

    def stop(self) -> None:
        if self._server is not None:
            try:
                self._server.close()
            except OSError:
                pass
        with self._lock:
            conns = list(self._conns.values())
        for c in conns:
            c.link.close()
        self._inbox.put(("stop",))
        if self._loop is not None:
            self._loop.join(2.0)

    def attach(self, link: Link) -> int:
        with self._lock:
            cid = next(self._ids)
            self._conns[cid] = _Conn(cid, link)
        threading.Thread(target=self._reader, args=(cid, link), name=f"broker-read-{cid}", daemon=True).start()
        return cid

    def listen(self, addr: str) -> tuple[str, int]:
        host, port = parse_address(addr)
        srv = socket.create_server((host, port))
        self._server = srv
        threading.Thread(target=self._accept, args=(srv,), name="broker-accept", daemon=True).start()
        return srv.getsockname()[:2]

    def _accept(self, srv: socket.socket) -> None:
        while True:
            try:
                sock, peer = srv.accept()
            except OSError:
                return
            log.info("connection from %s", peer)
            self.attach(Link(SocketChannel(sock), name=str(peer)))

    def wait_for_roles(self, roles: tuple[str, ...], timeout: float = 5.0) -> bool:
        with self._roles_changed:
            return self._roles_changed.wait_for(lambda: all(r in self._roles for r in roles), timeout)

    def link_for(self, role: str) -> Link | None:
        with self._lock:
            cid = self._roles.get(role)
            return self._conns[cid].link if cid is not None else None

    # -- reader / loop ---------------------------------------------------

    def _reader(self, cid: int, link: Link) -> None:
        for item in link:
            self._inbox.put(("item", cid, item))
        self._inbox.put(("eof", cid))

    def _run(self) -> None:
        while True:
            event = self._inbox.get()
            if event[0] == "stop":
                return
            try:
                if event[0] == "eof":
                    self._on_eof(event[1])
                else:
                    self._on_item(event[1], event[2])
            except Exception:  # keep the loop alive
                log.exception("broker loop error")

    def _send(self, cid: int, mtype: str, payload: dict[str, Any]) -> None:
        conn = self._conns.get(cid)
        if conn is None:
            return
        try:
            conn.link.send(mtype, payload)
        except ConnectionError:
            log.info("send to connection %d failed", cid)

    def _error(self, cid: int, of_seq: int | None, code: str, text: str) -> None:
        self._send(cid, "error", {"of_seq": of_seq, "code": code, "text": text})

    def _on_eof(self, cid: int) -> None:
        with self._lock:
            conn = self._conns.pop(cid, None)
            if conn is None:
                return
            if conn.role and self._roles.get(conn.role) == cid:
                del self._roles[conn.role]
                if conn.role == "ris":
                    self._ris_grid = None
                self._roles_changed.notify_all()
            pending = list(conn.pending.values())
            conn.pending.clear()
        conn.link.close()
        for callback in pending:
            callback(None)

    def _on_item(self, cid: int, item: ControlMessage | ProtocolError) -> None:
        with self._lock:
            conn = self._conns.get(cid)
            if conn is None:
                return
            if isinstance(item, ProtocolError):
                self._error(cid, None, "protocol", str(item))
                return
            msg = item
            if conn.role is None:
                self._on_hello(conn, msg)
                return
            if msg.type in REPLY_TYPES and conn.role in ("ris", "rx"):
                callback = conn.pending.pop(msg.get("of_seq"), None) if msg.get("of_seq") is not None else None
                if callback is None:
                    log.debug("dropping unsolicited %s from %s", msg.type, conn.role)
                    return
            else:
                callback = None
        if callback is not None:
            callback(msg)
        elif conn.role == "user":
            self._on_user(conn, msg)
        else:
            self._error(cid, msg.seq, "unsupported", f"broker does not accept {msg.type} from {conn.role}")

    def _on_hello(self, conn: _Conn, msg: ControlMessage) -> None:
        if msg.type != "hello":
            self._error(conn.cid, msg.seq, "hello_required", "first message must be hello")
            return
        role = msg.payload["role"]
        if role in self._roles:
            self._error(conn.cid, msg.seq, "role_taken", f"a {role} agent is already connected")
            return
        if role == "ris":
            try:
                self._ris_grid = codebook_from_text(msg.payload["codebook"]).grid
            except (KeyError, ValueError) as exc:
                self._error(conn.cid, msg.seq, "bad_codebook", f"ris hello needs a valid codebook: {exc}")
                return
        conn.role = role
        self._roles[role] = conn.cid
        self._roles_changed.notify_all()
        self._send(conn.cid, "ack", {"of_seq": msg.seq})

    # -- user commands ---------------------------------------------------

    def _on_user(self, conn: _Conn, msg: ControlMessage) -> None:
        t = msg.type
        if t == "gen_request":
            self._on_gen_request(conn, msg)
        elif t in ("apply_cb", "save_cb", "delete_cb", "list_cb"):
            self._forward(conn, msg, "ris")
        elif t == "rssi_request":
            self._forward(conn, msg, "rx")
        else:
            self._error(conn.cid, msg.seq, "unsupported", f"broker does not accept {t} from user")

    def _forward(self, user: _Conn, msg: ControlMessage, role: str) -> None:
        with self._lock:
            if self._busy and msg.type != "list_cb":
                self._error(user.cid, msg.seq, "busy", "a generation session is running")
                return
            target = self._roles.get(role)
            if target is None:
                self._error(user.cid, msg.seq, "no_agent", f"no {role} agent connected")
                return

            def relay(reply: ControlMessage | None, user_seq: int = msg.seq, ucid: int = user.cid) -> None:
                if reply is None:
                    self._error(ucid, user_seq, "agent_lost", f"{role} agent disconnected")
                elif reply.type == "error":
                    self._error(ucid, user_seq, reply.payload["code"], reply.payload["text"])
                else:
                    payload = dict(reply.payload)
                    payload["of_seq"] = user_seq
                    self._send(ucid, reply.type, payload)

            self._send_request(target, msg.type, dict(msg.payload), relay)

    def _send_request(self, cid: int, mtype: str, payload: dict[str, Any],
                      callback: Callable[[ControlMessage | None], None]) -> int:
        with self._lock:
            conn = self._conns.get(cid)
            if conn is None:
                raise AgentLost(f"connection {cid} gone")
            try:
                seq = conn.link.send(mtype, payload)
            except ConnectionError as exc:
                raise AgentLost(str(exc)) from exc
            conn.pending[seq] = callback
            return seq

    def request(self, role: str, mtype: str, payload: dict[str, Any]) -> ControlMessage:
        """Blocking request to an agent with one retry after a timeout."""
        for _ in range(1 + self.retries):
            with self._lock:
                cid = self._roles.get(role)
            if cid is None:
                raise AgentLost(f"no {role} agent connected")
            fut: Future = Future()
            seq = self._send_request(cid, mtype, payload, fut.set_result)
            try:
                reply = fut.result(self.request_timeout)
            except FutureTimeout:
                with self._lock:
                    conn = self._conns.get(cid)
                    if conn is not None:
                        conn.pending.pop(seq, None)
                log.warning("%s request to %s timed out", mtype, role)
                continue
            if reply is None:
                raise AgentLost(f"{role} agent disconnected")
            if reply.type == "error":
                raise RemoteError(reply.payload["code"], reply.payload["text"])
            return reply
        raise RequestTimeout(f"{mtype} to {role} timed out")

    def _on_gen_request(self, user: _Conn, msg: ControlMessage) -> None:
        algo = msg.payload["algorithm_id"]
        if algo not in WIRE_ALGORITHMS:
            self._error(user.cid, msg.seq, "bad_algorithm", f"unknown algorithm {algo!r}")
            return
        try:
            location = check_location_id(msg.payload["location_id"])
        except ValueError as exc:
            self._error(user.cid, msg.seq, "bad_location", str(exc))
            return
        with self._lock:
            if self._busy:
                self._error(user.cid, msg.seq, "busy", "a generation session is already running")
                return
            if "ris" not in self._roles or "rx" not in self._roles or self._ris_grid is None:
                self._error(user.cid, msg.seq, "no_agent", "generation needs a ris and an rx agent")
                return
            self._busy = True
            grid = self._ris_grid
        threading.Thread(target=self._session, args=(user.cid, msg.seq, location, algo, grid),
                         name="broker-session", daemon=True).start()

    def _session(self, ucid: int, of_seq: int, location: str, algo: str, grid: Grid) -> None:
        try:
            report = run_search(algo, WireOracle(self), grid)
            self.request("ris", "save_cb", {"location_id": location, "codebook": report.final_codebook.to_text()})
        except AgentLost as exc:
            self._error(ucid, of_seq, "agent_lost", str(exc))
        except RequestTimeout as exc:
            self._error(ucid, of_seq, "timeout", str(exc))
        except RemoteError as exc:
            self._error(ucid, of_seq, exc.code, exc.text)
        else:
            self.sessions_completed += 1
            self._send(ucid, "gen_done", {"location_id": location, "queries": report.queries_used,
                                          "rssi_dbm": report.final_rssi_dbm, "of_seq": of_seq})
        finally:
            with self._lock:
                self._busy = False
