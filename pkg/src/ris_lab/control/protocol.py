"""Newline-delimited JSON wire format for the cloud / RIS / receiver workflow.

Each message is one UTF-8 JSON object on one line with exactly the keys
``type``, ``seq`` and ``payload`` (in that order). Replies carry ``of_seq``,
the ``seq`` of the request they answer. Unknown keys are dropped on decode.
Non-finite floats use Python's ``Infinity``/``-Infinity`` tokens.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable

ROLES = ("user", "ris", "rx")


class ProtocolError(Exception):
    def __init__(self, message: str, offset: int = 0, code: str = "malformed"):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset
        self.code = code


def _int(v: Any) -> int:
    if isinstance(v, bool) or not isinstance(v, int):
        raise TypeError("expected integer")
    return v


def _int_or_none(v: Any) -> int | None:
    return None if v is None else _int(v)


def _float(v: Any) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise TypeError("expected number")
    return float(v)


def _str(v: Any) -> str:
    if not isinstance(v, str):
        raise TypeError("expected string")
    return v


def _role(v: Any) -> str:
    if v not in ROLES:
        raise TypeError(f"role must be one of {ROLES}")
    return v


def _str_list(v: Any) -> list[str]:
    if not isinstance(v, list) or not all(isinstance(x, str) for x in v):
        raise TypeError("expected list of strings")
    return list(v)


# type -> field -> (validator, required)
Field = tuple[Callable[[Any], Any], bool]
CATALOG: dict[str, dict[str, Field]] = {
    "hello": {"role": (_role, True), "codebook": (_str, False)},
    "ack": {"of_seq": (_int, True)},
    "error": {"of_seq": (_int_or_none, True), "code": (_str, True), "text": (_str, True)},
    "gen_request": {"location_id": (_str, True), "algorithm_id": (_str, True)},
    "gen_done": {"location_id": (_str, True), "queries": (_int, True), "rssi_dbm": (_float, True),
                 "of_seq": (_int, False)},
    "set_codebook": {"codebook": (_str, True)},
    "rssi_request": {},
    "rssi_response": {"rssi_dbm": (_float, True), "frames": (_int, True), "of_seq": (_int, False)},
    "save_cb": {"location_id": (_str, True), "codebook": (_str, True)},
    "apply_cb": {"location_id": (_str, True)},
    "delete_cb": {"location_id": (_str, True)},
    "list_cb": {},
    "cb_list": {"location_ids": (_str_list, True), "of_seq": (_int, False)},
}


def _normalize(mtype: str, payload: dict[str, Any], offset: int = 0) -> dict[str, Any]:
    if mtype not in CATALOG:
        raise ProtocolError(f"unknown message type {mtype!r}", offset, "unknown_type")
    if not isinstance(payload, dict):
        raise ProtocolError("payload must be an object", offset, "bad_field")
    out: dict[str, Any] = {}
    for name, (check, required) in CATALOG[mtype].items():
        if name not in payload:
            if required:
                raise ProtocolError(f"{mtype}: missing payload field {name!r}", offset, "bad_field")
            continue
        try:
            out[name] = check(payload[name])
        except TypeError as exc:
            raise ProtocolError(f"{mtype}.{name}: {exc}", offset, "bad_field") from None
    return out


@dataclass(frozen=True)
class ControlMessage:
    type: str
    seq: int
    payload: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if isinstance(self.seq, bool) or not isinstance(self.seq, int) or self.seq < 0:
            raise ProtocolError(f"seq must be a nonnegative integer, got {self.seq!r}", 0, "bad_field")
        object.__setattr__(self, "payload", _normalize(self.type, self.payload))

    def get(self, key: str, default: Any = None) -> Any:
        return self.payload.get(key, default)


def encode(msg: ControlMessage) -> str:
    return json.dumps({"type": msg.type, "seq": msg.seq, "payload": msg.payload},
                      separators=(",", ":"), ensure_ascii=False) + "\n"


def decode(line: str | bytes) -> ControlMessage:
    if isinstance(line, bytes):
        try:
            line = line.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProtocolError("invalid UTF-8", exc.start) from None
    if line.endswith("\n"):
        line = line[:-1]
    if "\n" in line:
        raise ProtocolError("embedded newline", len(line[: line.index("\n")].encode()))
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"malformed JSON: {exc.msg}", len(line[: exc.pos].encode())) from None
    if not isinstance(obj, dict):
        raise ProtocolError("message must be a JSON object", 0)
    for key in ("type", "seq", "payload"):
        if key not in obj:
            raise ProtocolError(f"missing top-level key {key!r}", 0, "bad_field")
    if not isinstance(obj["type"], str):
        raise ProtocolError("type must be a string", 0, "bad_field")
    if isinstance(obj["seq"], bool) or not isinstance(obj["seq"], int) or obj["seq"] < 0:
        raise ProtocolError("seq must be a nonnegative integer", 0, "bad_field")
    return ControlMessage(obj["type"], obj["seq"], _normalize(obj["type"], obj["payload"]))
