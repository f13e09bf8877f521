from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from ..board import Color, Move


class EngineError(RuntimeError):
    pass


class EngineUnavailable(EngineError):
    """The engine process could not be started or died."""


class EngineTimeout(EngineError):
    pass


class ProtocolViolation(EngineError):
    """Malformed response or mismatched request id."""


class MissingEvaluation(EngineError):
    """The engine could not score the position or move within budget."""


@dataclass(frozen=True)
class EngineParams:
    engine_id: str = "scripted-v1"
    visits_budget: int = 100
    max_candidates: int = 10
    komi: float = 6.5
    ruleset: str = "korean"
    per_query_timeout: float = 60.0

    def __post_init__(self):
        if self.visits_budget < 1:
            raise ValueError("visits_budget must be >= 1")
        if self.max_candidates < 1:
            raise ValueError("max_candidates must be >= 1")


@dataclass(frozen=True)
class Candidate:
    move: Move
    win_prob: float
    visits: int


@dataclass(frozen=True)
class EngineEvaluation:
    """Engine output at one state. Win probabilities are from the mover's side."""

    state_key: int
    to_move: Color
    candidates: tuple[Candidate, ...]
    engine_id: str
    visits_budget: int
    root_win_prob: Optional[float] = None
    best_move: Move = field(init=False)

    def __post_init__(self):
        if not self.candidates:
            raise MissingEvaluation("evaluation without candidates")
        object.__setattr__(self, "best_move", self.candidates[0].move)

    @property
    def best_win_prob(self) -> float:
        return self.candidates[0].win_prob

    def find(self, move: Move) -> Optional[Candidate]:
        for c in self.candidates:
            if c.move == move:
                return c
        return None

    def to_dict(self) -> dict:
        return {
            "state_key": f"{self.state_key:016x}",
            "to_move": self.to_move.letter,
            "engine_id": self.engine_id,
            "visits_budget": self.visits_budget,
            "root_win_prob": self.root_win_prob,
            "candidates": [
                [_move_code(c.move), c.win_prob, c.visits] for c in self.candidates
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "EngineEvaluation":
        to_move = Color.from_letter(d["to_move"])
        return cls(
            state_key=int(d["state_key"], 16),
            to_move=to_move,
            candidates=tuple(
                Candidate(_move_decode(code, to_move), float(wp), int(v))
                for code, wp, v in d["candidates"]
            ),
            engine_id=d["engine_id"],
            visits_budget=int(d["visits_budget"]),
            root_win_prob=d.get("root_win_prob"),
        )


def _move_code(m: Move) -> str:
    if m.point is None:
        return "pass"
    return f"{m.point[0]},{m.point[1]}"


def _move_decode(code: str, color: Color) -> Move:
    if code == "pass":
        return Move(color, None)
    c, r = code.split(",")
    return Move(color, (int(c), int(r)))
