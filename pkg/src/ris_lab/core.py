"""Domain types and exact gain mathematics for the cascaded Tx-RIS-Rx link."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

DEFAULT_ENUMERATION_LIMIT = 4**10
RISCB_MAGIC = "RISCB v1"


class ElementState(NamedTuple):
    """Phase bits of one element; bit 0 is 0 degrees, bit 1 is 180 degrees."""

    h_bit: int
    v_bit: int

    @property
    def code(self) -> int:
        return self.h_bit + 2 * self.v_bit

    @classmethod
    def from_code(cls, code: int) -> ElementState:
        if code not in (0, 1, 2, 3):
            raise ValueError(f"element state code must be 0..3, got {code!r}")
        return STATES[code]

    def flipped(self) -> ElementState:
        return ElementState(1 - self.h_bit, 1 - self.v_bit)


# Iteration and tie-break order of the four element states.
STATES: tuple[ElementState, ...] = (
    ElementState(0, 0),
    ElementState(1, 0),
    ElementState(0, 1),
    ElementState(1, 1),
)
OFF = STATES[0]


@dataclass(frozen=True)
class Grid:
    """R x C panel with a row-major controllability mask."""

    rows: int
    cols: int
    mask: tuple[bool, ...] = ()

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ValueError(f"grid needs rows >= 1 and cols >= 1, got {self.rows}x{self.cols}")
        if not self.mask:
            object.__setattr__(self, "mask", (True,) * (self.rows * self.cols))
        else:
            object.__setattr__(self, "mask", tuple(bool(m) for m in self.mask))
        if len(self.mask) != self.rows * self.cols:
            raise ValueError(f"mask has {len(self.mask)} cells, expected {self.rows * self.cols}")

    @classmethod
    def full(cls, rows: int, cols: int) -> Grid:
        return cls(rows, cols)

    @classmethod
    def with_block(cls, rows: int, cols: int, block_rows: int, block_cols: int,
                   corner: str = "top-left") -> Grid:
        """Grid with a non-controllable rectangular block in one corner."""
        if corner not in ("top-left", "top-right", "bottom-left", "bottom-right"):
            raise ValueError(f"unknown corner {corner!r}")
        if not (0 <= block_rows <= rows and 0 <= block_cols <= cols):
            raise ValueError("controller block larger than the grid")
        r0 = 0 if corner.startswith("top") else rows - block_rows
        c0 = 0 if corner.endswith("left") else cols - block_cols
        mask = [True] * (rows * cols)
        for r in range(r0, r0 + block_rows):
            for c in range(c0, c0 + block_cols):
                mask[r * cols + c] = False
        return cls(rows, cols, tuple(mask))

    @cached_property
    def cells(self) -> tuple[tuple[int, int], ...]:
        """(row, col) of each controllable element, in element-index order."""
        return tuple(divmod(i, self.cols) for i, m in enumerate(self.mask) if m)

    @property
    def n(self) -> int:
        return len(self.cells)

    @cached_property
    def row_members(self) -> tuple[tuple[int, ...], ...]:
        members: list[list[int]] = [[] for _ in range(self.rows)]
        for idx, (r, _) in enumerate(self.cells):
            members[r].append(idx)
        return tuple(tuple(m) for m in members)

    @cached_property
    def col_members(self) -> tuple[tuple[int, ...], ...]:
        members: list[list[int]] = [[] for _ in range(self.cols)]
        for idx, (_, c) in enumerate(self.cells):
            members[c].append(idx)
        return tuple(tuple(m) for m in members)


@dataclass(frozen=True)
class Codebook:
    """A complete state assignment for every controllable element of a grid."""

    grid: Grid
    states: tuple[ElementState, ...]

    def __post_init__(self) -> None:
        states = tuple(ElementState(*s) for s in self.states)
        for s in states:
            if s.h_bit not in (0, 1) or s.v_bit not in (0, 1):
                raise ValueError(f"invalid element state {s!r}")
        if len(states) != self.grid.n:
            raise ValueError(f"codebook has {len(states)} states, grid has {self.grid.n} controllable cells")
        if self.grid.n < 1:
            raise ValueError("codebook needs at least one controllable cell")
        object.__setattr__(self, "states", states)

    @classmethod
    def all_off(cls, grid: Grid) -> Codebook:
        return cls(grid, (OFF,) * grid.n)

    @classmethod
    def uniform(cls, grid: Grid, state: ElementState) -> Codebook:
        return cls(grid, (state,) * grid.n)

    @classmethod
    def from_codes(cls, grid: Grid, codes: Iterable[int]) -> Codebook:
        return cls(grid, tuple(ElementState.from_code(int(c)) for c in codes))

    @property
    def rows(self) -> int:
        return self.grid.rows

    @property
    def cols(self) -> int:
        return self.grid.cols

    @property
    def mask(self) -> tuple[bool, ...]:
        return self.grid.mask

    @property
    def n(self) -> int:
        return self.grid.n

    @property
    def codes(self) -> tuple[int, ...]:
        return tuple(s.code for s in self.states)

    def replace(self, indices: Iterable[int], state: ElementState) -> Codebook:
        """Copy with the given element indices set to ``state``."""
        states = list(self.states)
        for i in indices:
            states[i] = state
        return Codebook(self.grid, tuple(states))

    def state_at(self, row: int, col: int) -> ElementState | None:
        if not self.grid.mask[row * self.grid.cols + col]:
            return None
        return self.states[self.grid.cells.index((row, col))]

    def digest(self) -> str:
        """Compact identity string: the state codes, row-major."""
        return "".join(str(c) for c in self.codes)

    def to_text(self) -> str:
        return codebook_to_text(self)


@dataclass(frozen=True)
class GainValue:
    linear: float

    def __post_init__(self) -> None:
        if not self.linear >= 0:
            raise ValueError(f"gain must be nonnegative, got {self.linear!r}")

    def dbm(self, p_tx_dbm: float) -> float:
        if self.linear == 0:
            return -math.inf
        return p_tx_dbm + 10 * math.log10(self.linear)

    def db(self) -> float:
        return self.dbm(0.0)


@dataclass(frozen=True)
class ChannelRealization:
    """Per-polarization cascade channel vectors plus link-level constants.

    ``background`` is the uncontrolled multipath reaching the receiver
    directly; ``alpha`` is the common reflection magnitude.
    """

    h_h: np.ndarray
    h_v: np.ndarray
    g_h: np.ndarray
    g_v: np.ndarray
    background: complex = 0j
    alpha: float = 1.0
    tx_power_dbm: float = -10.0
    noise_power_dbm: float = -90.0
    _products: tuple[np.ndarray, np.ndarray] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        vecs = []
        for name in ("h_h", "h_v", "g_h", "g_v"):
            v = np.array(getattr(self, name), dtype=complex).reshape(-1)
            if not np.all(np.isfinite(v)):
                raise ValueError(f"{name} has non-finite entries")
            v.setflags(write=False)
            object.__setattr__(self, name, v)
            vecs.append(v)
        if len({v.shape[0] for v in vecs}) != 1:
            raise ValueError("channel vectors must share one length")
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha!r}")
        b = complex(self.background)
        if not (math.isfinite(b.real) and math.isfinite(b.imag)):
            raise ValueError("background must be finite")
        object.__setattr__(self, "background", b)
        object.__setattr__(self, "_products", (self.g_h * self.h_h, self.g_v * self.h_v))

    @property
    def n(self) -> int:
        return self.h_h.shape[0]

    def with_alpha(self, alpha: float) -> ChannelRealization:
        return ChannelRealization(self.h_h, self.h_v, self.g_h, self.g_v, self.background,
                                  alpha, self.tx_power_dbm, self.noise_power_dbm)

    def with_background(self, background: complex) -> ChannelRealization:
        return ChannelRealization(self.h_h, self.h_v, self.g_h, self.g_v, background,
                                  self.alpha, self.tx_power_dbm, self.noise_power_dbm)

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ChannelRealization):
            return NotImplemented
        return (all(np.array_equal(getattr(self, k), getattr(other, k))
                    for k in ("h_h", "h_v", "g_h", "g_v"))
                and (self.background, self.alpha, self.tx_power_dbm, self.noise_power_dbm)
                == (other.background, other.alpha, other.tx_power_dbm, other.noise_power_dbm))

    __hash__ = None  # type: ignore[assignment]


def element_coefficient(bit: int, alpha: float) -> complex:
    """Reflection coefficient ``alpha * exp(j*pi*bit)`` of one polarization branch."""
    if bit not in (0, 1):
        raise ValueError(f"phase bit must be 0 or 1, got {bit!r}")
    if not alpha > 0:
        raise ValueError(f"alpha must be positive, got {alpha!r}")
    return complex(alpha if bit == 0 else -alpha, 0.0)


def _signs(bits: Sequence[int]) -> np.ndarray:
    return 1.0 - 2.0 * np.asarray(bits, dtype=float)


def cascade_amplitude(chan: ChannelRealization, cb: Codebook | None) -> complex:
    """Complex end-to-end coefficient ``b + alpha * sum(...)`` for a codebook.

    ``cb=None`` stands for a panel with no controllable elements.
    """
    n = 0 if cb is None else cb.n
    if chan.n != n:
        raise ValueError(f"dimension mismatch: channel has N={chan.n}, codebook expects N={n}")
    if cb is None:
        return chan.background
    a, b = chan._products
    s_h = _signs([s.h_bit for s in cb.states])
    s_v = _signs([s.v_bit for s in cb.states])
    total = np.dot(s_h, a) + np.dot(s_v, b)
    return chan.background + chan.alpha * complex(total)


def cascade_gain(chan: ChannelRealization, cb: Codebook | None) -> GainValue:
    return GainValue(abs(cascade_amplitude(chan, cb)) ** 2)


def flip_all(cb: Codebook) -> Codebook:
    return Codebook(cb.grid, tuple(s.flipped() for s in cb.states))


def exhaustive_optimum(chan: ChannelRealization, grid: Grid,
                       limit: int = DEFAULT_ENUMERATION_LIMIT) -> tuple[Codebook, GainValue]:
    """Best codebook over all 4^N configurations.

    Ties resolve to the lexicographically smallest state sequence in
    ``STATES`` order, first element most significant.
    """
    n = grid.n
    if chan.n != n:
        raise ValueError(f"dimension mismatch: channel has N={chan.n}, grid expects N={n}")
    if 4**n > limit:
        raise ValueError(f"refusing to enumerate 4^{n} configurations (limit {limit})")
    a, b = chan._products
    sh = np.array([1 - 2 * s.h_bit for s in STATES], dtype=float)
    sv = np.array([1 - 2 * s.v_bit for s in STATES], dtype=float)
    # contrib[k, s]: contribution of element k in state s.
    contrib = chan.alpha * (np.outer(a, sh) + np.outer(b, sv))

    def partial_sums(rows: np.ndarray, start: complex) -> np.ndarray:
        sums = np.array([start], dtype=complex)
        for row in rows:
            sums = (sums[:, None] + row[None, :]).ravel()
        return sums

    split = n // 2
    hi = partial_sums(contrib[:split], chan.background)
    lo = partial_sums(contrib[split:], 0j)
    power = np.abs(hi[:, None] + lo[None, :]) ** 2
    flat = int(np.argmax(power))
    codes = []
    for _ in range(n):
        flat, digit = divmod(flat, 4)
        codes.append(digit)
    best = Codebook.from_codes(grid, reversed(codes))
    return best, cascade_gain(chan, best)


def codebook_to_text(cb: Codebook) -> str:
    lines = [f"{RISCB_MAGIC} rows={cb.rows} cols={cb.cols}"]
    it = iter(cb.states)
    for r in range(cb.rows):
        row = []
        for c in range(cb.cols):
            row.append(str(next(it).code) if cb.mask[r * cb.cols + c] else "#")
        lines.append("".join(row))
    return "\n".join(lines) + "\n"


def codebook_from_text(text: str) -> Codebook:
    lines = text.splitlines()
    if not lines:
        raise ValueError("empty codebook text")
    head = lines[0].split()
    if len(head) != 4 or " ".join(head[:2]) != RISCB_MAGIC or lines[0] != " ".join(head):
        raise ValueError(f"bad codebook header {lines[0]!r}")
    try:
        if not (head[2].startswith("rows=") and head[3].startswith("cols=")):
            raise ValueError
        rows = int(head[2][5:])
        cols = int(head[3][5:])
    except ValueError:
        raise ValueError(f"bad codebook header {lines[0]!r}") from None
    body = lines[1:]
    if len(body) != rows:
        raise ValueError(f"expected {rows} grid lines, got {len(body)}")
    mask: list[bool] = []
    codes: list[int] = []
    for r, line in enumerate(body):
        if len(line) != cols:
            raise ValueError(f"line {r + 2}: expected {cols} cells, got {len(line)}")
        for ch in line:
            if ch == "#":
                mask.append(False)
            elif ch in "0123":
                mask.append(True)
                codes.append(int(ch))
            else:
                raise ValueError(f"line {r + 2}: invalid cell character {ch!r}")
    return Codebook.from_codes(Grid(rows, cols, tuple(mask)), codes)
