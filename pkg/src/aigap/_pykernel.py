"""Pure-Python board kernel.

Reference implementation of the hot loops used by :mod:`aigap.board` and the
scripted engine. ``_ckernel.pyx`` mirrors every function here with the same
signature and results; :mod:`aigap.kernel` picks one at import time.

Grids are ``bytes`` of length ``size * size`` in row-major order with
0 = empty, 1 = black, 2 = white.
"""
from __future__ import annotations

from functools import lru_cache

EMPTY, BLACK, WHITE = 0, 1, 2

# Scripted evaluation weights. Frozen: changing them changes every cached
# scripted evaluation and every frozen test value.
W_STONES = 8
W_LIBERTIES = 2
W_CENTRE = 1


@lru_cache(maxsize=None)
def neighbors(size: int) -> tuple[tuple[int, ...], ...]:
    out = []
    for idx in range(size * size):
        r, c = divmod(idx, size)
        nb = []
        if r > 0:
            nb.append(idx - size)
        if r < size - 1:
            nb.append(idx + size)
        if c > 0:
            nb.append(idx - 1)
        if c < size - 1:
            nb.append(idx + 1)
        out.append(tuple(nb))
    return tuple(out)


@lru_cache(maxsize=None)
def centre_weights(size: int) -> tuple[int, ...]:
    """Doubled Manhattan closeness to the board centre, 0 in the corners."""
    span = size - 1
    return tuple(
        2 * span - abs(2 * c - span) - abs(2 * r - span)
        for r in range(size)
        for c in range(size)
    )


def _group(grid, nbrs, start):
    """Return (stones, liberty_count) of the group containing ``start``."""
    color = grid[start]
    stones = {start}
    libs = set()
    stack = [start]
    while stack:
        p = stack.pop()
        for n in nbrs[p]:
            v = grid[n]
            if v == color:
                if n not in stones:
                    stones.add(n)
                    stack.append(n)
            elif v == EMPTY:
                libs.add(n)
    return stones, len(libs)


def place_stone(grid: bytes, size: int, idx: int, color: int):
    """Place ``color`` at empty point ``idx`` and resolve captures.

    Returns ``(new_grid, captured, ko_point)`` where ``captured`` is a sorted
    tuple of removed points and ``ko_point`` is the simple-ko point or -1.
    Returns ``None`` when the play is suicide. The caller checks occupancy
    and ko.
    """
    nbrs = neighbors(size)
    g = bytearray(grid)
    g[idx] = color
    opp = 3 - color
    captured: list[int] = []
    seen: set[int] = set()
    for n in nbrs[idx]:
        if g[n] == opp and n not in seen:
            stones, libs = _group(g, nbrs, n)
            seen |= stones
            if libs == 0:
                captured.extend(stones)
    for p in captured:
        g[p] = EMPTY
    own, own_libs = _group(g, nbrs, idx)
    if own_libs == 0:
        return None
    ko = -1
    if len(captured) == 1 and len(own) == 1 and own_libs == 1:
        ko = captured[0]
    captured.sort()
    return bytes(g), tuple(captured), ko


def is_legal(grid: bytes, size: int, idx: int, color: int, ko: int) -> bool:
    if grid[idx] != EMPTY or idx == ko:
        return False
    for n in neighbors(size)[idx]:
        if grid[n] == EMPTY:
            return True
    return place_stone(grid, size, idx, color) is not None


def legal_points(grid: bytes, size: int, color: int, ko: int) -> list[int]:
    return [i for i in range(size * size) if is_legal(grid, size, i, color, ko)]


def dead_groups(grid: bytes, size: int) -> int:
    """Count groups with no liberties (0 on any reachable position)."""
    nbrs = neighbors(size)
    seen: set[int] = set()
    dead = 0
    for i, v in enumerate(grid):
        if v != EMPTY and i not in seen:
            stones, libs = _group(grid, nbrs, i)
            seen |= stones
            if libs == 0:
                dead += 1
    return dead


def state_score(grid: bytes, size: int, color: int) -> int:
    """Integer evaluation of ``grid`` from ``color``'s point of view."""
    nbrs = neighbors(size)
    centre = centre_weights(size)
    opp = 3 - color
    stones = libs = close = 0
    for i, v in enumerate(grid):
        if v == EMPTY:
            mine = theirs = False
            for n in nbrs[i]:
                w = grid[n]
                if w == color:
                    mine = True
                elif w == opp:
                    theirs = True
            libs += mine - theirs
        elif v == color:
            stones += 1
            close += centre[i]
        else:
            stones -= 1
            close -= centre[i]
    return W_STONES * stones + W_LIBERTIES * libs + W_CENTRE * close


def successor_scores(grid: bytes, size: int, color: int, ko: int) -> list[tuple[int, int]]:
    """``(point, score)`` for every legal play by ``color``.

    ``score`` is :func:`state_score` of the successor from the point of view
    of the player to move there (the opponent).
    """
    out = []
    opp = 3 - color
    for i in range(size * size):
        if grid[i] != EMPTY or i == ko:
            continue
        res = place_stone(grid, size, i, color)
        if res is None:
            continue
        out.append((i, state_score(res[0], size, opp)))
    return out
