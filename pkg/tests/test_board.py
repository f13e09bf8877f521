import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from aigap import _pykernel, board, kernel
from aigap.board import (
    Color,
    IllegalRecordedMove,
    KoViolation,
    Move,
    OccupiedPoint,
    OffBoard,
    SuicideMove,
    WrongColor,
    apply_move,
    compute_key,
    initial_state,
    legal_moves,
    position_key,
    replay,
)
from aigap.sgf import GameRecord
from aigap.synth import random_moves

from conftest import flood_liberties, play, position

B, W = Color.BLACK, Color.WHITE


def test_first_move():
    s = apply_move(initial_state(19), Move(B, (3, 3)))
    assert s.at((3, 3)) is B
    assert sum(1 for v in s.grid if v) == 1
    assert s.to_move is W
    assert s.prisoners == (0, 0)
    assert s.ply == 1


def test_pass_keeps_stones_and_clears_ko():
    s = position([
        ". X O .",
        "X O . O",
        ". X O .",
        ". . . .",
    ])
    s = apply_move(s, Move(B, (2, 1)))  # captures (1,1), creates ko
    assert s.simple_ko_point == (1, 1)
    p = apply_move(s, Move(W, None))
    assert p.grid == s.grid
    assert p.to_move is B
    assert p.ply == s.ply + 1
    assert p.simple_ko_point is None


def test_corner_capture_matches_flood_fill():
    s = position([
        "O X . .",
        ". . . .",
        ". . . .",
        ". . . .",
    ], to_move=B)
    s = apply_move(s, Move(B, (0, 1)))
    # oracle: every white group with zero liberties after the play is gone
    groups = flood_liberties(s.grid, s.size)
    assert all(libs for _, _, libs in groups)
    assert s.at((0, 0)) is None
    assert s.prisoners == (1, 0)


def test_illegal_move_errors():
    s = position([
        ". X . .",
        "X . . .",
        ". . . .",
        ". . . .",
    ], to_move=W)
    with pytest.raises(SuicideMove):
        apply_move(s, Move(W, (0, 0)))
    with pytest.raises(OccupiedPoint):
        apply_move(s, Move(W, (1, 0)))
    with pytest.raises(WrongColor):
        apply_move(s, Move(B, (3, 3)))
    with pytest.raises(OffBoard):
        apply_move(s, Move(W, (4, 0)))


def test_legal_moves_counts():
    s = initial_state(19)
    assert len(legal_moves(s)) == 362
    s = apply_move(s, Move(B, (9, 9)))
    assert len(legal_moves(s)) == 361


def test_legal_moves_excludes_suicide_and_ko():
    k = position([
        ". X O . .",
        "X O . O .",
        ". X O . .",
        ". . . . .",
        ". O . . .",
    ], to_move=B)
    k = apply_move(k, Move(B, (2, 1)))
    assert k.simple_ko_point == (1, 1)
    # white at (0,0) would be suicide, (1,1) is ko
    moves = legal_moves(k)
    enumerated = set()
    for c in range(k.size):
        for r in range(k.size):
            try:
                apply_move(k, Move(W, (c, r)))
                enumerated.add(Move(W, (c, r)))
            except board.IllegalMove:
                pass
    enumerated.add(Move(W, None))
    assert moves == enumerated
    assert Move(W, (1, 1)) not in moves
    assert Move(W, (0, 0)) not in moves


def test_ko_recapture_after_intervening_move():
    s = position([
        ". X O . .",
        "X O . O .",
        ". X O . .",
        ". . . . .",
        ". . . . .",
    ], to_move=B)
    s = apply_move(s, Move(B, (2, 1)))
    with pytest.raises(KoViolation):
        apply_move(s, Move(W, (1, 1)))
    s = play(s, (4, 4), (4, 3))
    s = apply_move(s, Move(W, (1, 1)))
    assert s.at((2, 1)) is None
    assert s.prisoners == (1, 1)


def test_two_stone_capture_sets_no_ko():
    s = position([
        "X O O . .",
        ". X X . .",
        ". . . . .",
        ". . . . .",
        ". . . . .",
    ], to_move=B)
    s = apply_move(s, Move(B, (3, 0)))
    assert s.prisoners == (2, 0)
    assert s.simple_ko_point is None


def test_keys():
    assert initial_state(19).key == initial_state(19).key
    assert initial_state(9).key != initial_state(19).key
    a = play(initial_state(9), (2, 2), (6, 6), (2, 6))
    b = play(initial_state(9), (2, 6), (6, 6), (2, 2))
    assert a.grid == b.grid and position_key(a) == position_key(b)
    flipped = initial_state(9, setup=[(B, (2, 2))], to_move=W)
    same = initial_state(9, setup=[(B, (2, 2))], to_move=B)
    assert flipped.key != same.key


def test_replay_lengths(rng):
    assert len(replay(GameRecord(size=19))) == 1
    moves = random_moves(rng, size=19, n_moves=216)
    states = replay(GameRecord(size=19, moves=moves))
    assert len(states) == 217
    assert states[-1].ply == 216


def test_replay_reports_offending_ply():
    moves = [Move(B, (3, 3)), Move(W, (4, 4)), Move(B, (5, 5)), Move(W, (6, 6)), Move(B, (3, 3))]
    with pytest.raises(IllegalRecordedMove) as exc:
        replay(GameRecord(size=9, moves=moves))
    assert exc.value.ply == 5


def test_random_games_invariants(rng):
    """Liberties, hash and capture accounting on many random games."""
    for g in range(150):
        size = (5, 7, 9)[g % 3]
        state = initial_state(size)
        played = 0
        for _ in range(size * size * 2):
            plays = sorted((m for m in legal_moves(state) if not m.is_pass), key=lambda m: m.point)
            move = plays[int(rng.integers(len(plays)))] if plays else Move(state.to_move, None)
            state = apply_move(state, move)
            played += not move.is_pass
            assert all(libs for _, _, libs in flood_liberties(state.grid, size))
            assert state.key == compute_key(state.grid, size, state.to_move, state.ko_index)
            on_board = sum(1 for v in state.grid if v)
            assert sum(state.prisoners) + on_board == played


@pytest.mark.skipif(kernel.BACKEND != "cython", reason="compiled kernel not built")
@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), size=st.sampled_from([3, 5, 9, 13, 19]))
def test_backends_agree(seed, size):
    from aigap import _ckernel

    rng = np.random.default_rng(seed)
    moves = random_moves(rng, size=size, n_moves=int(rng.integers(0, size * size)))
    state = initial_state(size)
    for m in moves:
        state = apply_move(state, m)
    g, ko, color = state.grid, -1 if state.ko_index is None else state.ko_index, int(state.to_move)
    assert _ckernel.legal_points(g, size, color, ko) == _pykernel.legal_points(g, size, color, ko)
    assert _ckernel.successor_scores(g, size, color, ko) == _pykernel.successor_scores(g, size, color, ko)
    assert _ckernel.state_score(g, size, color) == _pykernel.state_score(g, size, color)
    assert _ckernel.dead_groups(g, size) == _pykernel.dead_groups(g, size) == 0
    for idx in range(size * size):
        if g[idx] == 0:
            assert _ckernel.place_stone(g, size, idx, color) == _pykernel.place_stone(g, size, idx, color)
    assert _ckernel.neighbors(size) == _pykernel.neighbors(size)
    assert _ckernel.centre_weights(size) == _pykernel.centre_weights(size)
