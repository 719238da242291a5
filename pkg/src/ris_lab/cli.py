"""``ris-lab`` command-line entry point.

Exit codes: 0 success, 2 usage/config, 3 IO, 4 protocol.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import shlex
import sys
import threading
from concurrent.futures import TimeoutError as FutureTimeout
from pathlib import Path
from typing import TextIO

from .control.agents import FileAir, RisAgent, RxAgent
from .control.broker import Broker
from .control.client import ClientError, UserClient
from .control.lab import Lab
from .control.protocol import ControlMessage, ProtocolError
from .control.store import CodebookStore
from .control.transport import Link, connect
from .experiments import locations_csv, run_csv
from .oracle import RssiOracle
from .scenario import DEFAULT_SCENARIO, Scenario, ScenarioError, load_scenario, parse_scenario

EXIT_OK, EXIT_USAGE, EXIT_IO, EXIT_PROTOCOL = 0, 2, 3, 4

log = logging.getLogger("ris_lab")


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


def _scenario(path: str | None) -> Scenario:
    if path is None:
        return parse_scenario(DEFAULT_SCENARIO)
    try:
        return load_scenario(path)
    except ScenarioError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    except OSError as exc:
        raise CliError(f"cannot read scenario: {exc}", EXIT_IO) from None


def _write(out: str, text: str) -> None:
    if out == "-":
        sys.stdout.write(text)
        return
    try:
        Path(out).write_text(text, encoding="utf-8")
    except OSError as exc:
        raise CliError(f"cannot write {out}: {exc}", EXIT_IO) from None


def cmd_run(args: argparse.Namespace) -> int:
    scenario = _scenario(args.scenario)
    _write(args.out, run_csv(scenario))
    return EXIT_OK


def cmd_locations(args: argparse.Namespace) -> int:
    scenario = _scenario(args.scenario)
    try:
        text = locations_csv(scenario)
    except ScenarioError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    _write(args.out, text)
    return EXIT_OK


def _connect(addr: str, name: str) -> Link:
    try:
        return Link(connect(addr), name=name)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    except OSError as exc:
        raise CliError(f"cannot connect to {addr}: {exc}", EXIT_IO) from None


def cmd_serve(args: argparse.Namespace) -> int:
    broker = Broker(request_timeout=args.timeout).start()
    try:
        host, port = broker.listen(args.listen)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from None
    except OSError as exc:
        raise CliError(f"cannot listen on {args.listen}: {exc}", EXIT_IO) from None
    print(f"listening on {host}:{port}", flush=True)
    try:
        threading.Event().wait()
    except KeyboardInterrupt:
        pass
    finally:
        broker.stop()
    return EXIT_OK


def cmd_agent(args: argparse.Namespace) -> int:
    scenario = _scenario(args.scenario)
    air = FileAir(args.air)
    link = _connect(args.connect, args.role)
    if args.role == "ris":
        try:
            store = CodebookStore.load(args.store) if args.store else CodebookStore()
        except (OSError, ValueError) as exc:
            raise CliError(f"cannot load store: {exc}", EXIT_IO) from None
        agent = RisAgent(link, scenario.grid, store, air)
    else:
        by_id = {loc.id: loc for loc in scenario.locations}
        loc_id = args.location or scenario.locations[0].id
        if loc_id not in by_id:
            raise CliError(f"unknown location {loc_id!r} in scenario", EXIT_USAGE)
        oracle = RssiOracle(scenario.channel_for(by_id[loc_id]), scenario.oracle)
        agent = RxAgent(link, scenario.grid, oracle, air)
    agent.start()
    try:
        agent.stopped.wait()
    except KeyboardInterrupt:
        agent.close()
    return EXIT_OK


def format_reply(msg: ControlMessage) -> str:
    p = msg.payload
    if msg.type == "error":
        return f"error {p['code']}: {p['text']}"
    if msg.type == "ack":
        return "ok"
    if msg.type == "cb_list":
        return "locations " + json.dumps(p["location_ids"])
    if msg.type == "rssi_response":
        return f"rssi_dbm={p['rssi_dbm']!r} frames={p['frames']}"
    if msg.type == "gen_done":
        return f"generated {p['location_id']} queries={p['queries']} rssi_dbm={p['rssi_dbm']!r}"
    return f"{msg.type} {json.dumps(p)}"


REPL_HELP = """commands:
  gen <location> <alg1|bench1|bench2|random>   generate and store a codebook
  apply <location>                             apply a stored codebook
  save <location> <riscb-file>                 store a codebook from a file
  delete <location>                            remove a stored codebook
  list                                         list stored locations
  rssi                                         measure received power
  help | quit"""


def repl(client: UserClient, stdin: TextIO, stdout: TextIO, prompt: str = "") -> int:
    """Line-oriented REPL; command errors are printed and the session continues."""
    while True:
        if prompt:
            stdout.write(prompt)
            stdout.flush()
        raw = stdin.readline()
        if not raw:
            break
        try:
            words = shlex.split(raw)
        except ValueError as exc:
            print(f"error usage: {exc}", file=stdout)
            continue
        if not words:
            continue
        cmd, rest = words[0], words[1:]
        try:
            if cmd in ("quit", "exit"):
                break
            if cmd == "help":
                print(REPL_HELP, file=stdout)
                continue
            if cmd == "gen" and len(rest) == 2:
                reply = client.gen(*rest)
            elif cmd == "apply" and len(rest) == 1:
                reply = client.apply(rest[0])
            elif cmd == "save" and len(rest) == 2:
                reply = client.save(rest[0], Path(rest[1]).read_text(encoding="utf-8"))
            elif cmd == "delete" and len(rest) == 1:
                reply = client.delete(rest[0])
            elif cmd == "list" and not rest:
                reply = client.list()
            elif cmd == "rssi" and not rest:
                reply = client.rssi()
            else:
                print(f"error usage: unrecognised command {raw.strip()!r} (try help)", file=stdout)
                continue
        except OSError as exc:
            if isinstance(exc, ConnectionError):
                raise CliError(f"broker connection lost: {exc}", EXIT_PROTOCOL) from None
            print(f"error io: {exc}", file=stdout)
            continue
        except ProtocolError as exc:
            print(f"error protocol: {exc}", file=stdout)
            continue
        except FutureTimeout:
            print("error timeout: no reply from broker", file=stdout)
            continue
        print(format_reply(reply), file=stdout, flush=True)
    return EXIT_OK


def cmd_repl(args: argparse.Namespace) -> int:
    prompt = "ris> " if sys.stdin.isatty() else ""
    if args.connect:
        try:
            client = UserClient(_connect(args.connect, "user"))
        except ClientError as exc:
            raise CliError(str(exc), EXIT_PROTOCOL) from None
        try:
            return repl(client, sys.stdin, sys.stdout, prompt)
        finally:
            client.close()
    scenario = _scenario(args.scenario)
    loc = scenario.locations[0]
    store = CodebookStore.load(args.store) if args.store else CodebookStore()
    with Lab(scenario.grid, scenario.channel_for(loc), scenario.oracle, store) as lab:
        return repl(lab.user, sys.stdin, sys.stdout, prompt)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="ris-lab", description="RIS codebook search laboratory")
    parser.add_argument("--log-level", default=os.environ.get("RIS_LAB_LOG", "WARNING"),
                        help="logging level (env: RIS_LAB_LOG)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="compare algorithms over the scenario's seeds, write CSV")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help="CSV path, or - for stdout")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("locations", help="cross-location codebook matrix, write CSV")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help="CSV path, or - for stdout")
    p.set_defaults(func=cmd_locations)

    p = sub.add_parser("serve", help="run the broker on a TCP address")
    p.add_argument("--listen", required=True, help="host:port")
    p.add_argument("--timeout", type=float, default=5.0, help="per-request timeout in seconds")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("agent", help="run a RIS or receiver agent")
    p.add_argument("--role", choices=("ris", "rx"), required=True)
    p.add_argument("--connect", required=True, help="broker host:port")
    p.add_argument("--scenario", help="scenario file (defaults to the built-in scenario)")
    p.add_argument("--store", help="codebook store file (ris role)")
    p.add_argument("--air", default="ris_air.riscb",
                   help="file through which the live panel state reaches the receiver")
    p.add_argument("--location", help="scenario location the receiver sits at (rx role)")
    p.set_defaults(func=cmd_agent)

    p = sub.add_parser("repl", help="interactive user client")
    p.add_argument("--connect", help="broker host:port; omit to run an in-process lab")
    p.add_argument("--scenario", help="scenario for the in-process lab")
    p.add_argument("--store", help="codebook store file for the in-process lab")
    p.set_defaults(func=cmd_repl)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    level = logging.getLevelName(str(args.log_level).upper())
    if not isinstance(level, int):
        print(f"ris-lab: unknown log level {args.log_level!r}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except CliError as exc:
        print(f"ris-lab: {exc}", file=sys.stderr)
        return exc.code
    except ProtocolError as exc:
        print(f"ris-lab: protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL


if __name__ == "__main__":
    sys.exit(main())
