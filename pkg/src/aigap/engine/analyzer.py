"""Cache-aware evaluation front end shared by every engine backend."""
from __future__ import annotations

import threading
from typing import Optional, Protocol

from ..board import BoardState, IllegalMove, Move, apply_move
from .cache import CacheKey, EvalCache
from .types import EngineEvaluation, EngineParams, MissingEvaluation

MIN_VISITS = 2


class Engine(Protocol):
    def analyze(self, state: BoardState, params: EngineParams) -> EngineEvaluation: ...

    def close(self) -> None: ...


class Analyzer:
    """Wraps one engine session with the evaluation cache.

    Counters ``queries`` and ``cache_hits`` tell how often the engine itself
    was touched.
    """

    def __init__(self, engine: Engine, cache: Optional[EvalCache] = None, min_visits: int = MIN_VISITS):
        self.engine = engine
        self.cache = cache
        self.min_visits = min_visits
        self.queries = 0
        self.cache_hits = 0
        self._lock = threading.Lock()

    def evaluate(self, state: BoardState, params: EngineParams) -> EngineEvaluation:
        key = CacheKey.of(state, params)
        if self.cache is not None:
            hit = self.cache.get(key)
            if hit is not None:
                with self._lock:
                    self.cache_hits += 1
                return hit
        with self._lock:
            self.queries += 1
        ev = self.engine.analyze(state, params)
        if ev.state_key != state.key or ev.to_move != state.to_move:
            raise MissingEvaluation("engine answered for a different position")
        if self.cache is not None:
            self.cache.put(key, ev)
        return ev

    def evaluate_move(
        self,
        state: BoardState,
        move: Move,
        params: EngineParams,
        ev: Optional[EngineEvaluation] = None,
    ) -> float:
        """Win probability of ``move`` for the player making it."""
        if ev is None:
            ev = self.evaluate(state, params)
        cand = ev.find(move)
        if cand is not None and cand.visits >= self.min_visits:
            return cand.win_prob
        try:
            succ = apply_move(state, move)
        except IllegalMove as exc:
            raise MissingEvaluation(f"cannot evaluate illegal move {move}: {exc}") from exc
        sev = self.evaluate(succ, params)
        v = sev.root_win_prob if sev.root_win_prob is not None else sev.best_win_prob
        return 1.0 - v

    def close(self):
        self.engine.close()
        if self.cache is not None:
            self.cache.flush()
