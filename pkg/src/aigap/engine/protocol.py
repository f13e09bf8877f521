"""JSON-lines analysis protocol: one request object per line in, one response
object per line out. Field names are fixed; see ``docs/engine-protocol.md``.
"""
from __future__ import annotations

import json
import math
from typing import Optional

from ..board import BoardState, Color, Move, Point
from .types import Candidate, EngineEvaluation, EngineParams, MissingEvaluation, ProtocolViolation

COLUMNS = "ABCDEFGHJKLMNOPQRSTUVWXYZ"


def to_gtp(point: Optional[Point], size: int) -> str:
    if point is None:
        return "pass"
    c, r = point
    return f"{COLUMNS[c]}{size - r}"


def from_gtp(text: str, size: int) -> Optional[Point]:
    t = text.strip().upper()
    if t == "PASS":
        return None
    if len(t) < 2 or t[0] not in COLUMNS:
        raise ValueError(f"bad coordinate {text!r}")
    c = COLUMNS.index(t[0])
    r = size - int(t[1:])
    if not (0 <= c < size and 0 <= r < size):
        raise ValueError(f"coordinate {text!r} off a {size}x{size} board")
    return (c, r)


def build_request(
    req_id: str,
    state: BoardState,
    params: EngineParams,
    include_move: Optional[Move] = None,
) -> dict:
    size = state.size
    first = state.history[0].color if state.history else state.to_move
    req = {
        "id": req_id,
        "moves": [[m.color.letter, to_gtp(m.point, size)] for m in state.history],
        "initial_stones": [[c.letter, to_gtp(p, size)] for c, p in state.setup],
        "komi": params.komi,
        "ruleset": params.ruleset,
        "max_visits": params.visits_budget,
        "board_size": size,
        "initial_player": first.letter,
    }
    if include_move is not None:
        req["include_move"] = to_gtp(include_move.point, size)
    return req


def encode(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), sort_keys=True) + "\n"


def _prob(x, what: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise ProtocolViolation(f"{what} is not a number: {x!r}")
    x = float(x)
    if not (0.0 <= x <= 1.0) or math.isnan(x):
        raise ProtocolViolation(f"{what} outside [0, 1]: {x}")
    return x


def parse_response(
    line: str,
    req_id: str,
    state: BoardState,
    params: EngineParams,
    perspective: str = "mover",
) -> EngineEvaluation:
    """Decode one response line into an evaluation in the mover's perspective.

    ``perspective="black"`` flips values reported from Black's side when
    White is to move.
    """
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolViolation(f"response is not JSON: {exc}") from None
    if not isinstance(obj, dict):
        raise ProtocolViolation("response is not an object")
    if str(obj.get("id")) != req_id:
        raise ProtocolViolation(f"response id {obj.get('id')!r} does not match request {req_id!r}")
    if "error" in obj:
        raise MissingEvaluation(f"engine error: {obj['error']}")
    try:
        turn = Color.from_letter(str(obj["turn"]))
        infos = obj["move_infos"]
        root = obj.get("root_winrate")
    except (KeyError, ValueError) as exc:
        raise ProtocolViolation(f"bad response field: {exc}") from None
    if turn != state.to_move:
        raise ProtocolViolation(f"engine says {turn.letter} to move, expected {state.to_move.letter}")
    if not isinstance(infos, list):
        raise ProtocolViolation("move_infos is not a list")
    flip = perspective == "black" and turn is Color.WHITE
    cands = []
    for info in infos:
        try:
            point = from_gtp(str(info["move"]), state.size)
            wr = _prob(info["winrate"], "winrate")
            visits = int(info["visits"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolViolation(f"bad move_info {info!r}: {exc}") from None
        if visits < 1:
            raise ProtocolViolation(f"move_info with {visits} visits")
        cands.append(Candidate(Move(turn, point), 1.0 - wr if flip else wr, visits))
    if not cands:
        raise MissingEvaluation("engine returned no candidate moves")
    # stable: engine order breaks ties
    cands.sort(key=lambda c: -c.win_prob)
    if root is not None:
        root = _prob(root, "root_winrate")
        if flip:
            root = 1.0 - root
    return EngineEvaluation(
        state_key=state.key,
        to_move=state.to_move,
        candidates=tuple(cands[: params.max_candidates]),
        engine_id=params.engine_id,
        visits_budget=params.visits_budget,
        root_win_prob=root,
    )
