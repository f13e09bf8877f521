"""Serve the scripted engine over the JSON-lines protocol on stdin/stdout.

    python -m aigap.engine.serve [--perspective black]

Useful as a reference peer for the protocol and for offline runs.
"""
from __future__ import annotations

import argparse
import json
import sys

from ..board import Color, IllegalMove, Move, apply_move, initial_state
from .protocol import encode, from_gtp, to_gtp
from .scripted import ScriptedEngine
from .types import EngineParams


def answer(req: dict, engine: ScriptedEngine, perspective: str = "mover") -> dict:
    size = int(req.get("board_size", 19))
    setup = [(Color.from_letter(c), from_gtp(p, size)) for c, p in req.get("initial_stones", [])]
    moves = [Move(Color.from_letter(c), from_gtp(p, size)) for c, p in req.get("moves", [])]
    first = Color.from_letter(req.get("initial_player", moves[0].color.letter if moves else "B"))
    state = initial_state(size, float(req.get("komi", 0.0)), setup, first)
    for m in moves:
        state = apply_move(state, m)
    params = EngineParams(
        engine_id="scripted-v1",
        visits_budget=int(req.get("max_visits", 100)),
        max_candidates=size * size + 1,
        komi=float(req.get("komi", 0.0)),
        ruleset=str(req.get("ruleset", "")),
    )
    ev = engine.analyze(state, params)
    flip = perspective == "black" and state.to_move is Color.WHITE
    infos = [
        {
            "move": to_gtp(c.move.point, size),
            "winrate": 1.0 - c.win_prob if flip else c.win_prob,
            "visits": c.visits,
        }
        for c in ev.candidates
    ]
    root = ev.root_win_prob
    return {
        "id": req["id"],
        "turn": state.to_move.letter,
        "root_winrate": 1.0 - root if flip else root,
        "move_infos": infos,
    }


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--perspective", choices=["mover", "black"], default="mover")
    ap.add_argument("--max-requests", type=int, default=0,
                    help="exit after this many requests (crash simulation for tests)")
    args = ap.parse_args(argv)
    engine = ScriptedEngine()
    served = 0
    for line in sys.stdin:
        if not line.strip():
            continue
        if args.max_requests and served >= args.max_requests:
            return 1
        served += 1
        req = None
        try:
            req = json.loads(line)
            out = answer(req, engine, args.perspective)
        except (ValueError, KeyError, IllegalMove) as exc:
            rid = req.get("id") if isinstance(req, dict) else None
            out = {"id": rid, "error": f"{type(exc).__name__}: {exc}"}
        sys.stdout.write(encode(out))
        sys.stdout.flush()
    return 0


if __name__ == "__main__":
    sys.exit(main())
