"""RIS-controller and receiver agents.

The two agents never talk to each other. The physical coupling between them
(the receiver sees whatever the panel currently shows) is modelled by an
``Air`` object: the RIS agent writes its live codebook, the receiver reads it.
"""
from __future__ import annotations

import logging
import os
import tempfile
import threading
from collections import Counter
from pathlib import Path

from ..core import Codebook, Grid, codebook_from_text
from ..oracle import RssiOracle
from .protocol import ControlMessage, ProtocolError
from .store import CodebookStore, check_location_id
from .transport import Link

log = logging.getLogger(__name__)


class SimulatedAir:
    """In-process stand-in for the propagation medium."""

    def __init__(self) -> None:
        self._lock = threading.Lock()
        self._live: Codebook | None = None

    def set(self, cb: Codebook) -> None:
        with self._lock:
            self._live = cb

    def get(self) -> Codebook | None:
        with self._lock:
            return self._live


class FileAir:
    """Cross-process air: the live codebook lives in a RISCB text file."""

    def __init__(self, path: str | os.PathLike):
        self.path = Path(path)

    def set(self, cb: Codebook) -> None:
        fd, tmp = tempfile.mkstemp(dir=self.path.parent, prefix=self.path.name + ".", suffix=".tmp")
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(cb.to_text())
        os.replace(tmp, self.path)

    def get(self) -> Codebook | None:
        try:
            return codebook_from_text(self.path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            return None


class Agent:
    role = ""

    def __init__(self, link: Link):
        self.link = link
        self.received: Counter[str] = Counter()
        self._thread: threading.Thread | None = None
        self.stopped = threading.Event()

    def hello_payload(self) -> dict:
        return {"role": self.role}

    def start(self) -> Agent:
        self.link.send("hello", self.hello_payload())
        self._thread = threading.Thread(target=self.run, name=f"{self.role}-agent", daemon=True)
        self._thread.start()
        return self

    def run(self) -> None:
        try:
            for item in self.link:
                if isinstance(item, ProtocolError):
                    log.warning("%s agent: %s", self.role, item)
                    self._reply_error(None, "protocol", str(item))
                    continue
                self.received[item.type] += 1
                if item.type in ("ack",):
                    continue
                if item.type == "error":
                    log.warning("%s agent got error %s: %s", self.role, item.get("code"), item.get("text"))
                    if item.get("code") == "role_taken":
                        break
                    continue
                try:
                    self.handle(item)
                except ConnectionError:
                    break
        finally:
            self.stopped.set()

    def handle(self, msg: ControlMessage) -> None:
        self._reply_error(msg.seq, "unsupported", f"{self.role} agent does not handle {msg.type}")

    def _reply_error(self, of_seq: int | None, code: str, text: str) -> None:
        try:
            self.link.send("error", {"of_seq": of_seq, "code": code, "text": text})
        except ConnectionError:
            pass

    def join(self, timeout: float | None = None) -> None:
        if self._thread is not None:
            self._thread.join(timeout)

    def close(self) -> None:
        self.link.close()
        self.join(2.0)


class RisAgent(Agent):
    """Holds the live panel configuration and the persistent codebook store."""

    role = "ris"

    def __init__(self, link: Link, grid: Grid, store: CodebookStore, air):
        super().__init__(link)
        self.grid = grid
        self.store = store
        self.air = air
        self.live = Codebook.all_off(grid)
        air.set(self.live)

    def hello_payload(self) -> dict:
        return {"role": self.role, "codebook": self.live.to_text()}

    def _apply(self, cb: Codebook) -> None:
        self.live = cb
        self.air.set(cb)

    def _parse(self, text: str) -> Codebook:
        cb = codebook_from_text(text)
        if cb.grid != self.grid:
            raise ValueError(f"codebook is {cb.rows}x{cb.cols} with a different mask than the panel")
        return cb

    def handle(self, msg: ControlMessage) -> None:
        t = msg.type
        try:
            if t == "set_codebook":
                self._apply(self._parse(msg.payload["codebook"]))
            elif t == "save_cb":
                loc = check_location_id(msg.payload["location_id"])
                cb = self._parse(msg.payload["codebook"])
                self.store.put(loc, cb)
                # A freshly generated codebook is served straight away.
                self._apply(cb)
            elif t == "apply_cb":
                loc = msg.payload["location_id"]
                if loc not in self.store:
                    return self._reply_error(msg.seq, "unknown_location", f"no codebook stored for {loc!r}")
                self._apply(self.store.get(loc))
            elif t == "delete_cb":
                loc = msg.payload["location_id"]
                if loc not in self.store:
                    return self._reply_error(msg.seq, "unknown_location", f"no codebook stored for {loc!r}")
                self.store.delete(loc)
            elif t == "list_cb":
                self.link.send("cb_list", {"location_ids": self.store.location_ids(), "of_seq": msg.seq})
                return
            else:
                return super().handle(msg)
        except OSError as exc:
            return self._reply_error(msg.seq, "io_error", str(exc))
        except ValueError as exc:
            code = "bad_location" if t == "save_cb" and "location id" in str(exc) else "bad_codebook"
            return self._reply_error(msg.seq, code, str(exc))
        self.link.send("ack", {"of_seq": msg.seq})


class RxAgent(Agent):
    """Answers RSSI requests by measuring whatever the panel currently shows."""

    role = "rx"

    def __init__(self, link: Link, grid: Grid, oracle: RssiOracle, air):
        super().__init__(link)
        self.grid = grid
        self.oracle = oracle
        self.air = air
        self._lock = threading.Lock()

    def rebind(self, oracle: RssiOracle) -> None:
        """Move the receiver: subsequent measurements use another channel."""
        with self._lock:
            self.oracle = oracle

    def handle(self, msg: ControlMessage) -> None:
        if msg.type != "rssi_request":
            return super().handle(msg)
        cb = self.air.get() or Codebook.all_off(self.grid)
        with self._lock:
            try:
                rssi = self.oracle.measure(cb)
            except ValueError as exc:
                return self._reply_error(msg.seq, "bad_codebook", str(exc))
            frames = self.oracle.frames
        self.link.send("rssi_response", {"rssi_dbm": rssi, "frames": frames, "of_seq": msg.seq})
