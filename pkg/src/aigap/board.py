"""Go rules kernel: immutable board states, move application and replay.

Rules: simple ko, suicide illegal, handicap/setup stones placed before the
first move. Points are ``(column, row)`` with ``(0, 0)`` the top-left corner,
matching SGF's ``aa``.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable, Optional

from . import kernel

MAX_SIZE = 25

Point = tuple[int, int]


class Color(IntEnum):
    BLACK = 1
    WHITE = 2

    @property
    def opponent(self) -> "Color":
        return Color.WHITE if self is Color.BLACK else Color.BLACK

    @property
    def letter(self) -> str:
        return "B" if self is Color.BLACK else "W"

    @classmethod
    def from_letter(cls, s: str) -> "Color":
        s = s.upper()
        if s in ("B", "BLACK"):
            return cls.BLACK
        if s in ("W", "WHITE"):
            return cls.WHITE
        raise ValueError(f"not a color: {s!r}")


@dataclass(frozen=True)
class Move:
    color: Color
    point: Optional[Point] = None

    @property
    def kind(self) -> str:
        return "pass" if self.point is None else "play"

    @property
    def is_pass(self) -> bool:
        return self.point is None

    @classmethod
    def play(cls, color: Color, column: int, row: int) -> "Move":
        return cls(Color(color), (column, row))

    @classmethod
    def pass_(cls, color: Color) -> "Move":
        return cls(Color(color), None)

    def __str__(self) -> str:
        where = "pass" if self.point is None else f"{self.point[0]},{self.point[1]}"
        return f"{self.color.letter}[{where}]"


class IllegalMove(ValueError):
    """Base class for rule violations raised by :func:`apply_move`."""


class OccupiedPoint(IllegalMove):
    pass


class SuicideMove(IllegalMove):
    pass


class KoViolation(IllegalMove):
    pass


class WrongColor(IllegalMove):
    pass


class OffBoard(IllegalMove):
    pass


class IllegalRecordedMove(ValueError):
    """A recorded move could not be replayed. ``ply`` is the 1-based move number."""

    def __init__(self, ply: int, reason: str):
        super().__init__(f"illegal move at ply {ply}: {reason}")
        self.ply = ply
        self.reason = reason


# Tabulation (Zobrist) keys. The seed is part of the cache format: keys must
# be identical across runs and machines.
ZOBRIST_SEED = 0x41494741_505A4B31


def _zobrist_tables():
    rng = random.Random(ZOBRIST_SEED)
    npts = MAX_SIZE * MAX_SIZE
    black = tuple(rng.getrandbits(64) for _ in range(npts))
    white = tuple(rng.getrandbits(64) for _ in range(npts))
    ko = tuple(rng.getrandbits(64) for _ in range(npts))
    sizes = tuple(rng.getrandbits(64) for _ in range(MAX_SIZE + 1))
    white_to_move = rng.getrandbits(64)
    return (None, black, white), ko, sizes, white_to_move


_Z_STONE, _Z_KO, _Z_SIZE, _Z_WHITE_TO_MOVE = _zobrist_tables()


def _zidx(idx: int, size: int) -> int:
    r, c = divmod(idx, size)
    return r * MAX_SIZE + c


@dataclass(frozen=True)
class BoardState:
    """Full rules state at one ply. Treat as immutable; use :func:`apply_move`."""

    size: int
    grid: bytes
    to_move: Color
    ko_index: Optional[int]
    prisoners: tuple[int, int]  # stones captured by (black, white)
    komi: float
    key: int
    ply: int
    setup: tuple[tuple[Color, Point], ...] = field(default=(), repr=False)
    history: tuple[Move, ...] = field(default=(), repr=False)

    @property
    def simple_ko_point(self) -> Optional[Point]:
        if self.ko_index is None:
            return None
        r, c = divmod(self.ko_index, self.size)
        return (c, r)

    @property
    def position_key(self) -> int:
        return self.key

    def at(self, point: Point) -> Optional[Color]:
        v = self.grid[point[1] * self.size + point[0]]
        return Color(v) if v else None

    def stones(self, color: Color) -> list[Point]:
        out = []
        for idx, v in enumerate(self.grid):
            if v == color:
                r, c = divmod(idx, self.size)
                out.append((c, r))
        return out

    def __str__(self) -> str:
        chars = {0: ".", 1: "X", 2: "O"}
        rows = []
        for r in range(self.size):
            row = self.grid[r * self.size:(r + 1) * self.size]
            rows.append(" ".join(chars[v] for v in row))
        return "\n".join(rows)


def compute_key(grid: bytes, size: int, to_move: Color, ko_index: Optional[int]) -> int:
    """Position key recomputed from scratch."""
    key = _Z_SIZE[size]
    for idx, v in enumerate(grid):
        if v:
            key ^= _Z_STONE[v][_zidx(idx, size)]
    if to_move is Color.WHITE:
        key ^= _Z_WHITE_TO_MOVE
    if ko_index is not None:
        key ^= _Z_KO[_zidx(ko_index, size)]
    return key


def position_key(state: BoardState) -> int:
    return state.key


def initial_state(
    size: int = 19,
    komi: float = 0.0,
    setup: Iterable[tuple[Color, Point]] = (),
    to_move: Color = Color.BLACK,
) -> BoardState:
    if not 2 <= size <= MAX_SIZE:
        raise ValueError(f"unsupported board size {size}")
    g = bytearray(size * size)
    placed = []
    for color, (c, r) in setup:
        if not (0 <= c < size and 0 <= r < size):
            raise OffBoard(f"setup stone {(c, r)} off a {size}x{size} board")
        idx = r * size + c
        if g[idx]:
            raise OccupiedPoint(f"setup stone {(c, r)} placed twice")
        g[idx] = int(color)
        placed.append((Color(color), (c, r)))
    grid = bytes(g)
    to_move = Color(to_move)
    return BoardState(
        size=size,
        grid=grid,
        to_move=to_move,
        ko_index=None,
        prisoners=(0, 0),
        komi=float(komi),
        key=compute_key(grid, size, to_move, None),
        ply=0,
        setup=tuple(placed),
        history=(),
    )


def apply_move(state: BoardState, move: Move) -> BoardState:
    """Return the successor of ``state`` after ``move``.

    Raises a subclass of :class:`IllegalMove` when the move breaks the rules.
    """
    if move.color != state.to_move:
        raise WrongColor(f"{move.color.name} to play, but {state.to_move.name} is on move")
    size = state.size
    key = state.key ^ _Z_WHITE_TO_MOVE
    if state.ko_index is not None:
        key ^= _Z_KO[_zidx(state.ko_index, size)]
    nxt = state.to_move.opponent
    if move.point is None:
        return BoardState(
            size=size,
            grid=state.grid,
            to_move=nxt,
            ko_index=None,
            prisoners=state.prisoners,
            komi=state.komi,
            key=key,
            ply=state.ply + 1,
            setup=state.setup,
            history=state.history + (move,),
        )
    c, r = move.point
    if not (0 <= c < size and 0 <= r < size):
        raise OffBoard(f"{move.point} is off a {size}x{size} board")
    idx = r * size + c
    if state.grid[idx]:
        raise OccupiedPoint(f"{move.point} is occupied")
    if idx == state.ko_index:
        raise KoViolation(f"{move.point} retakes a ko")
    res = kernel.place_stone(state.grid, size, idx, int(move.color))
    if res is None:
        raise SuicideMove(f"{move.point} is suicide")
    grid, captured, ko = res
    color = int(move.color)
    key ^= _Z_STONE[color][_zidx(idx, size)]
    opp_table = _Z_STONE[3 - color]
    for p in captured:
        key ^= opp_table[_zidx(p, size)]
    ko_index = None if ko < 0 else ko
    if ko_index is not None:
        key ^= _Z_KO[_zidx(ko_index, size)]
    b, w = state.prisoners
    if move.color is Color.BLACK:
        b += len(captured)
    else:
        w += len(captured)
    return BoardState(
        size=size,
        grid=grid,
        to_move=nxt,
        ko_index=ko_index,
        prisoners=(b, w),
        komi=state.komi,
        key=key,
        ply=state.ply + 1,
        setup=state.setup,
        history=state.history + (move,),
    )


def legal_moves(state: BoardState) -> set[Move]:
    """All legal plays for the player to move, plus pass."""
    size = state.size
    ko = -1 if state.ko_index is None else state.ko_index
    color = state.to_move
    out = {Move(color, None)}
    for idx in kernel.legal_points(state.grid, size, int(color), ko):
        r, c = divmod(idx, size)
        out.add(Move(color, (c, r)))
    return out


def replay(record) -> list[BoardState]:
    """States visited by ``record``: ``states[k]`` is the position before move k+1.

    ``record`` needs ``size``, ``komi``, ``setup_stones`` (mapping color to
    points), ``first_to_move`` and ``moves``.
    """
    setup = [
        (Color(color), p)
        for color in (Color.BLACK, Color.WHITE)
        for p in sorted(record.setup_stones.get(color, ()))
    ]
    try:
        state = initial_state(record.size, record.komi, setup, record.first_to_move)
    except IllegalMove as exc:
        raise IllegalRecordedMove(0, str(exc)) from exc
    states = [state]
    for n, move in enumerate(record.moves, start=1):
        try:
            state = apply_move(state, move)
        except IllegalMove as exc:
            raise IllegalRecordedMove(n, f"{type(exc).__name__}: {exc}") from exc
        states.append(state)
    return states
