"""Deterministic stand-in engine.

Position value for the player to move is ``logistic(score / SCALE)`` where
``score`` is the integer

    8 * (stone difference) + 2 * (liberty difference) + 1 * (centre difference)

all taken mover-minus-opponent. The liberty term counts empty points touching
each side; the centre term sums, over stones, the doubled Manhattan closeness
to the board centre (0 on a corner). Candidates are every legal move ranked by
the integer score of the successor, so the ordering never depends on
floating point.
"""
from __future__ import annotations

import math

from .. import kernel
from ..board import BoardState, Move
from .types import Candidate, EngineEvaluation, EngineParams

SCALE = 100.0


def value_of_score(score: int) -> float:
    x = score / SCALE
    if x < -700:
        return 0.0
    return 1.0 / (1.0 + math.exp(-x))


def state_value(state: BoardState) -> float:
    """Scripted value of ``state`` for the player to move."""
    return value_of_score(kernel.state_score(state.grid, state.size, int(state.to_move)))


class ScriptedEngine:
    def __init__(self):
        self.queries = 0

    def analyze(self, state: BoardState, params: EngineParams) -> EngineEvaluation:
        self.queries += 1
        size = state.size
        color = int(state.to_move)
        ko = -1 if state.ko_index is None else state.ko_index
        npts = size * size
        # (successor score for the opponent, tie-break, point index); pass sorts last on ties
        ranked = [(s, idx) for idx, s in kernel.successor_scores(state.grid, size, color, ko)]
        ranked.append((kernel.state_score(state.grid, size, 3 - color), npts))
        ranked.sort()
        cands = []
        for s, idx in ranked[: params.max_candidates]:
            if idx == npts:
                move = Move(state.to_move, None)
            else:
                r, c = divmod(idx, size)
                move = Move(state.to_move, (c, r))
            cands.append(Candidate(move, 1.0 - value_of_score(s), params.visits_budget))
        return EngineEvaluation(
            state_key=state.key,
            to_move=state.to_move,
            candidates=tuple(cands),
            engine_id=params.engine_id,
            visits_budget=params.visits_budget,
            root_win_prob=state_value(state),
        )

    def close(self):
        pass
