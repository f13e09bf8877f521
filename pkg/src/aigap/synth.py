"""Synthetic data generators for fixtures, Monte-Carlo checks and demos.

Everything takes an explicit ``numpy.random.Generator`` so a single seed
drives a whole run.
"""
from __future__ import annotations

import datetime as dt
from typing import Optional

import numpy as np

from . import kernel
from .board import Color, Move, apply_move, initial_state


def random_moves(
    rng: np.random.Generator,
    size: int = 9,
    n_moves: int = 60,
    pass_prob: float = 0.0,
    setup=(),
    first: Color = Color.BLACK,
) -> list[Move]:
    """A uniformly random legal move sequence of at most ``n_moves`` plies.

    Passes are only played with probability ``pass_prob`` or when nothing
    else is legal.
    """
    state = initial_state(size, setup=setup, to_move=first)
    moves = []
    for _ in range(n_moves):
        ko = -1 if state.ko_index is None else state.ko_index
        # (col, row) order, same as sorting Move points
        plays = sorted(kernel.legal_points(state.grid, size, int(state.to_move), ko),
                       key=lambda i: (i % size, i // size))
        if not plays or rng.random() < pass_prob:
            move = Move(state.to_move, None)
        else:
            r, c = divmod(plays[int(rng.integers(len(plays)))], size)
            move = Move(state.to_move, (c, r))
        state = apply_move(state, move)
        moves.append(move)
    return moves


def random_record(
    rng: np.random.Generator,
    size: int = 9,
    n_moves: int = 60,
    date: Optional[dt.date] = None,
    black: str = "black",
    white: str = "white",
    komi: float = 6.5,
):
    from .sgf import GameRecord

    return GameRecord(
        black_player_id=black,
        white_player_id=white,
        date=date,
        result=None,
        komi=komi,
        size=size,
        moves=tuple(random_moves(rng, size, n_moves)),
    )


def affine_to_moments(x, mean: float, sd: float) -> np.ndarray:
    """Rescale ``x`` so its sample mean and sample SD (ddof=1) are exact."""
    x = np.asarray(x, dtype=float)
    z = (x - x.mean()) / x.std(ddof=1)
    return mean + sd * z


def career_gaps(
    rng: np.random.Generator,
    n_other: int = 2375,
    n_suspect: int = 50,
    mean: float = 2.35,
    shape: float = 1.0,
    planted: bool = True,
) -> tuple[np.ndarray, np.ndarray]:
    """Gap values for one player's career: (other matches, suspect match).

    Other matches are Gamma(shape, mean/shape). With ``planted`` the suspect
    match is drawn with half the mean and half the variance (same scale,
    half the shape); otherwise from the same distribution.
    """
    scale = mean / shape
    other = rng.gamma(shape, scale, size=n_other)
    s_shape = shape / 2 if planted else shape
    suspect = rng.gamma(s_shape, scale, size=n_suspect)
    return other, suspect


def did_panel(
    rng: np.random.Generator,
    beta: float = -0.278,
    n_players: int = 100,
    n_months: int = 60,
    noise_sd: float = 0.5,
    start: tuple[int, int] = (2013, 9),
    treated_share: float = 0.5,
):
    """Balanced player-month panel ``y = a_i + t_t + beta*D_it + e``.

    Months run consecutively from ``start``; the first ``treated_share`` of
    players are treated. ``D_it`` is 1 for treated players in months at or
    after May 2016, the default post window.
    """
    from .gap import PanelCell
    from .timeline import month_index_of

    alpha = rng.normal(2.0, 0.5, size=n_players)
    tau = rng.normal(0.0, 0.3, size=n_months)
    m0 = month_index_of(dt.date(start[0], start[1], 1))
    post_start = month_index_of(dt.date(2016, 5, 1))
    n_treated = int(round(treated_share * n_players))
    cells = []
    for i in range(n_players):
        treated = i < n_treated
        for t in range(n_months):
            month = m0 + t
            d = 1.0 if (treated and month >= post_start) else 0.0
            y = alpha[i] + tau[t] + beta * d + rng.normal(0.0, noise_sd)
            cells.append(
                PanelCell(
                    player_id=f"p{i:03d}",
                    month_index=month,
                    mean_gap=float(y),
                    n_matches=1,
                    n_moves_used=50,
                    group_flag="treated" if treated else "control",
                )
            )
    return cells


def write_corpus(
    rng: np.random.Generator,
    root,
    n_matches: int = 3,
    size: int = 9,
    n_moves: int = 40,
    n_players: int = 4,
    start: dt.date = dt.date(2015, 1, 10),
    corrupt: tuple[int, ...] = (),
):
    """Write random SGF records plus a ``metadata.csv`` under ``root``.

    Players ``p0..`` alternate colours; even-numbered players are treated.
    Matches listed in ``corrupt`` get an unparseable file. Returns the
    metadata path.
    """
    import csv
    from pathlib import Path

    from .sgf import serialize_sgf

    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    rows = []
    for k in range(n_matches):
        b, w = f"p{k % n_players}", f"p{(k + 1) % n_players}"
        date = start + dt.timedelta(days=45 * k)
        name = f"m{k:04d}.sgf"
        if k in corrupt:
            (root / name).write_text("(;GM[1]SZ[9];B[aa", encoding="utf-8")
        else:
            rec = random_record(rng, size, n_moves, date, black=b, white=w)
            (root / name).write_text(serialize_sgf(rec), encoding="utf-8")
        rows.append({
            "match_id": f"m{k:04d}", "sgf_path": name, "black_id": b, "white_id": w,
            "date": date.isoformat(),
            "black_group": "treated" if int(b[1:]) % 2 == 0 else "control",
            "white_group": "treated" if int(w[1:]) % 2 == 0 else "control",
        })
    meta = root / "metadata.csv"
    with open(meta, "w", newline="", encoding="utf-8") as fh:
        wr = csv.DictWriter(fh, fieldnames=list(rows[0]))
        wr.writeheader()
        wr.writerows(rows)
    return meta
