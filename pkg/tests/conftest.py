import numpy as np
import pytest

from aigap.board import Color, Move, apply_move, initial_state


def flood_liberties(grid, size):
    """Independent liberty oracle: list of (color, stones, liberties) per group."""
    seen = set()
    groups = []
    for idx in range(size * size):
        if grid[idx] == 0 or idx in seen:
            continue
        color = grid[idx]
        stones, libs, todo = set(), set(), [idx]
        while todo:
            p = todo.pop()
            if p in stones:
                continue
            stones.add(p)
            r, c = divmod(p, size)
            for rr, cc in ((r - 1, c), (r + 1, c), (r, c - 1), (r, c + 1)):
                if 0 <= rr < size and 0 <= cc < size:
                    q = rr * size + cc
                    if grid[q] == color:
                        todo.append(q)
                    elif grid[q] == 0:
                        libs.add(q)
        seen |= stones
        groups.append((color, stones, libs))
    return groups


def position(rows, to_move=Color.BLACK, komi=0.0):
    """Build a state from rows of 'X' (black), 'O' (white), '.'."""
    rows = [r.replace(" ", "") for r in rows]
    size = len(rows)
    setup = []
    for r, line in enumerate(rows):
        for c, ch in enumerate(line):
            if ch == "X":
                setup.append((Color.BLACK, (c, r)))
            elif ch == "O":
                setup.append((Color.WHITE, (c, r)))
    return initial_state(size, komi=komi, setup=setup, to_move=to_move)


def play(state, *points):
    for p in points:
        state = apply_move(state, Move(state.to_move, p))
    return state


@pytest.fixture
def rng():
    return np.random.default_rng(20201116)


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
