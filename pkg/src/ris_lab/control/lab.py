"""In-process deployment of broker, agents and user client over pipes."""
from __future__ import annotations

from ..core import ChannelRealization, Grid
from ..oracle import OracleConfig, RssiOracle
from .agents import RisAgent, RxAgent, SimulatedAir
from .broker import Broker
from .client import UserClient
from .store import CodebookStore
from .transport import Link, pipe


class Lab:
    """Broker, RIS agent, receiver agent and user, wired together in threads.

    Use as a context manager. ``rx_oracle`` is the receiver's own oracle, so
    its query counter is exactly what the receiver observed.
    """

    def __init__(self, grid: Grid, channel: ChannelRealization, oracle_config: OracleConfig | None = None,
                 store: CodebookStore | None = None, request_timeout: float = 5.0):
        self.grid = grid
        self.air = SimulatedAir()
        self.store = store if store is not None else CodebookStore()
        self.rx_oracle = RssiOracle(channel, oracle_config)
        self.broker = Broker(request_timeout=request_timeout)
        self.ris: RisAgent | None = None
        self.rx: RxAgent | None = None
        self.user: UserClient | None = None

    def _wire(self, name: str) -> Link:
        broker_end, agent_end = pipe()
        self.broker.attach(Link(broker_end, name=f"broker->{name}"))
        return Link(agent_end, name=name)

    def start(self) -> Lab:
        self.broker.start()
        self.ris = RisAgent(self._wire("ris"), self.grid, self.store, self.air).start()
        self.rx = RxAgent(self._wire("rx"), self.grid, self.rx_oracle, self.air).start()
        if not self.broker.wait_for_roles(("ris", "rx")):
            raise RuntimeError("agents did not register with the broker")
        self.user = UserClient(self._wire("user"))
        return self

    def broker_sent_to(self, role: str) -> int:
        link = self.broker.link_for(role)
        return 0 if link is None else link.sent_count

    def close(self) -> None:
        for part in (self.user, self.ris, self.rx):
            if part is not None:
                part.close()
        self.broker.stop()

    def __enter__(self) -> Lab:
        return self.start()

    def __exit__(self, *exc) -> None:
        self.close()
