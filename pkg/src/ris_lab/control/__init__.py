"""Network-isolated control plane: wire protocol, agents, broker, store."""
from .agents import FileAir, RisAgent, RxAgent, SimulatedAir
from .broker import Broker
from .client import UserClient
from .lab import Lab
from .protocol import CATALOG, ControlMessage, ProtocolError, decode, encode
from .store import CodebookStore
from .transport import Link, connect, pipe

__all__ = [
    "CATALOG", "Broker", "CodebookStore", "ControlMessage", "FileAir", "Lab", "Link", "ProtocolError",
    "RisAgent", "RxAgent", "SimulatedAir", "UserClient", "connect", "decode", "encode", "pipe",
]
