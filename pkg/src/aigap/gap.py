"""Human-AI gap per move, per match, per move bin and per player-month.

Gaps are stored in win-probability percentage points. A move that the
engine values as highly as its own top choice has a gap of exactly zero.
"""
from __future__ import annotations

import datetime as dt
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Optional, Sequence

from .board import Color, Move, replay
from .engine.analyzer import Analyzer
from .engine.types import EngineEvaluation, EngineParams, MissingEvaluation
from .sgf import MetadataError
from .tables import parse_table, render, SchemaError
from .timeline import month_index_of, month_label, parse_month

K_LIMIT = 50
K_UNITS = ("own_moves", "plies")


@dataclass(frozen=True)
class EraConfig:
    cut_1: dt.date = dt.date(2016, 3, 15)
    cut_2: dt.date = dt.date(2017, 10, 25)
    labels: tuple[str, str, str] = ("before", "mid", "after")

    def __post_init__(self):
        if not self.cut_1 < self.cut_2:
            raise ValueError("era cut_1 must precede cut_2")
        if len(self.labels) != 3 or len(set(self.labels)) != 3:
            raise ValueError("eras need three distinct labels")

    def era_of(self, date: Optional[dt.date]) -> str:
        # closed on the left: a match on a cut day belongs to the later era
        if date is None:
            return ""
        if date < self.cut_1:
            return self.labels[0]
        if date < self.cut_2:
            return self.labels[1]
        return self.labels[2]


@dataclass(frozen=True)
class GapRecord:
    match_id: str
    player_id: str
    ply: int
    own_move_index: int
    color: Color
    delta: Optional[float]
    missing: bool
    engine_id: str
    month_index: Optional[int]
    visits_budget: int = 0
    era: str = ""
    date: Optional[dt.date] = None

    def __post_init__(self):
        if self.missing and self.delta is not None:
            raise ValueError("a missing gap carries no delta")
        if not self.missing and (self.delta is None or not math.isfinite(self.delta)):
            raise ValueError("a present gap needs a finite delta")


@dataclass(frozen=True)
class PanelCell:
    player_id: str
    month_index: int
    mean_gap: float
    n_matches: int
    n_moves_used: int
    group_flag: str = "none"

    def __post_init__(self):
        if self.n_matches < 1:
            raise ValueError("panel cell without matches")


@dataclass(frozen=True)
class BinRow:
    era: str
    bin: int
    first_ply: int
    last_ply: int
    mean_gap: Optional[float]
    n: int


def gap_for_move(ev: EngineEvaluation, human_move: Move, human_value: float) -> float:
    top = ev.candidates[0].win_prob
    if human_move == ev.best_move or human_value == top:
        return 0.0
    return 100.0 * (top - human_value)


def _analyzed_plies(moves: Sequence[Move], k_limit: int, k_unit: str):
    """Yield (ply, own_move_index) for the moves to analyze, 1-based."""
    if k_unit not in K_UNITS:
        raise ValueError(f"k_unit must be one of {K_UNITS}")
    own = {Color.BLACK: 0, Color.WHITE: 0}
    for i, m in enumerate(moves):
        own[m.color] += 1
        if k_unit == "plies" and i >= k_limit:
            break
        if k_unit == "own_moves" and own[m.color] > k_limit:
            if all(v >= k_limit for v in own.values()):
                break
            continue
        yield i + 1, own[m.color]


def match_gap_series(
    record,
    analyzer: Analyzer,
    params: EngineParams,
    k_limit: int = K_LIMIT,
    k_unit: str = "own_moves",
    *,
    match_id: str = "",
    black_id: Optional[str] = None,
    white_id: Optional[str] = None,
    date: Optional[dt.date] = None,
    eras: EraConfig = EraConfig(),
    players: Optional[Iterable[str]] = None,
) -> list[GapRecord]:
    """Gap records for one match, in ply order.

    ``players`` restricts output to the given ids. Engine failures other
    than :class:`MissingEvaluation` propagate; an illegal recorded move
    raises :class:`IllegalRecordedMove` before any engine query.
    """
    if k_limit < 1:
        raise ValueError("k_limit must be >= 1")
    states = replay(record)
    ids = {
        Color.BLACK: black_id if black_id is not None else record.black_player_id,
        Color.WHITE: white_id if white_id is not None else record.white_player_id,
    }
    keep = None if players is None else set(players)
    date = date if date is not None else record.date
    month = month_index_of(date) if date is not None else None
    era = eras.era_of(date)
    out = []
    for ply, own in _analyzed_plies(record.moves, k_limit, k_unit):
        move = record.moves[ply - 1]
        pid = ids[move.color]
        if keep is not None and pid not in keep:
            continue
        state = states[ply - 1]
        try:
            ev = analyzer.evaluate(state, params)
            value = analyzer.evaluate_move(state, move, params, ev)
            delta, missing = gap_for_move(ev, move, value), False
        except MissingEvaluation:
            delta, missing = None, True
        out.append(
            GapRecord(
                match_id=match_id,
                player_id=pid,
                ply=ply,
                own_move_index=own,
                color=move.color,
                delta=delta,
                missing=missing,
                engine_id=params.engine_id,
                month_index=month,
                visits_budget=params.visits_budget,
                era=era,
                date=date,
            )
        )
    return out


def _era(g: GapRecord, eras: Optional[EraConfig]) -> str:
    if eras is not None and g.date is not None:
        return eras.era_of(g.date)
    return g.era


def bin_by_move(
    gaps: Iterable[GapRecord],
    bin_size: int = 10,
    eras: Optional[EraConfig] = EraConfig(),
    n_bins: Optional[int] = None,
) -> list[BinRow]:
    """Mean gap per (era, ply bin). Bins are 1..bin_size, bin_size+1..2*bin_size, ...

    Every era label crossed with every bin up to the last occupied one (or
    ``n_bins``) is reported; empty cells have ``n == 0`` and no mean.
    """
    if bin_size < 1:
        raise ValueError("bin_size must be >= 1")
    sums: dict[tuple[str, int], list] = defaultdict(list)
    last = 0
    seen_eras = set()
    for g in gaps:
        b = (g.ply - 1) // bin_size
        last = max(last, b + 1)
        e = _era(g, eras)
        seen_eras.add(e)
        if not g.missing:
            sums[(e, b)].append(g.delta)
    labels = list(eras.labels) if eras is not None else []
    labels += sorted(seen_eras - set(labels))
    n_bins = last if n_bins is None else n_bins
    rows = []
    for e in labels:
        for b in range(n_bins):
            vals = sorted(sums.get((e, b), ()))
            mean = math.fsum(vals) / len(vals) if vals else None
            rows.append(BinRow(e, b + 1, b * bin_size + 1, (b + 1) * bin_size, mean, len(vals)))
    return rows


def match_means(gaps: Iterable[GapRecord]) -> dict[tuple[str, str], tuple[int, float, int]]:
    """(player, match) -> (month, mean over non-missing moves, move count)."""
    acc: dict[tuple[str, str], list] = defaultdict(list)
    months: dict[tuple[str, str], int] = {}
    for g in gaps:
        key = (g.player_id, g.match_id)
        if g.month_index is None:
            raise ValueError(f"gap record for match {g.match_id!r} has no month")
        months.setdefault(key, g.month_index)
        if not g.missing:
            acc[key].append(g.delta)
    return {
        k: (months[k], math.fsum(sorted(v)) / len(v), len(v))
        for k, v in acc.items()
    }


def build_panel(gaps: Iterable[GapRecord], table=None) -> list[PanelCell]:
    """Player-month cells: equal-weight mean over matches of per-match means.

    The inner mean divides by the number of non-missing analyzed moves in
    the match. Group flags come from the match table when given.
    """
    groups: dict[str, str] = {}
    if table is not None:
        rows = table.rows if hasattr(table, "rows") else table
        for row in rows:
            for pid in (row.black_id, row.white_id):
                g = row.group_of(pid)
                prev = groups.setdefault(pid, g)
                if prev != g:
                    raise MetadataError(f"player {pid!r} is listed as both {prev!r} and {g!r}")
    cells: dict[tuple[str, int], list] = defaultdict(list)
    for (pid, mid), (month, mean, n) in sorted(match_means(gaps).items()):
        cells[(pid, month)].append((mean, n))
    return [
        PanelCell(
            player_id=pid,
            month_index=month,
            mean_gap=math.fsum(m for m, _ in v) / len(v),
            n_matches=len(v),
            n_moves_used=sum(n for _, n in v),
            group_flag=groups.get(pid, "none"),
        )
        for (pid, month), v in sorted(cells.items())
    ]


# -- CSV -----------------------------------------------------------------

GAP_COLUMNS = (
    "match_id", "player_id", "color", "ply", "own_move_index", "delta_pp",
    "missing", "month", "era", "engine_id", "visits_budget", "date",
)
PANEL_COLUMNS = ("player_id", "month", "mean_gap_pp", "n_matches", "n_moves", "group")
BIN_COLUMNS = ("era", "bin", "first_ply", "last_ply", "mean_gap_pp", "n")


def sort_gaps(gaps: Iterable[GapRecord]) -> list[GapRecord]:
    return sorted(gaps, key=lambda g: (g.match_id, g.ply))


def gaps_to_csv(gaps: Iterable[GapRecord]) -> str:
    return render("gaps", GAP_COLUMNS, (
        (
            g.match_id, g.player_id, g.color.letter, g.ply, g.own_move_index,
            g.delta, g.missing,
            month_label(g.month_index) if g.month_index is not None else None,
            g.era, g.engine_id, g.visits_budget,
            g.date.isoformat() if g.date else None,
        )
        for g in sort_gaps(gaps)
    ))


def gaps_from_csv(text: str) -> list[GapRecord]:
    out = []
    for i, r in enumerate(parse_table(text, "gaps", GAP_COLUMNS), start=3):
        try:
            missing = r["missing"] == "1"
            out.append(GapRecord(
                match_id=r["match_id"],
                player_id=r["player_id"],
                ply=int(r["ply"]),
                own_move_index=int(r["own_move_index"]),
                color=Color.from_letter(r["color"]),
                delta=None if missing else float(r["delta_pp"]),
                missing=missing,
                engine_id=r["engine_id"],
                month_index=parse_month(r["month"]) if r["month"] else None,
                visits_budget=int(r["visits_budget"] or 0),
                era=r["era"],
                date=dt.date.fromisoformat(r["date"]) if r["date"] else None,
            ))
        except (ValueError, KeyError) as exc:
            raise SchemaError(f"gaps table line {i}: {exc}") from None
    return out


def panel_to_csv(cells: Iterable[PanelCell]) -> str:
    return render("panel", PANEL_COLUMNS, (
        (c.player_id, month_label(c.month_index), c.mean_gap, c.n_matches, c.n_moves_used, c.group_flag)
        for c in sorted(cells, key=lambda c: (c.player_id, c.month_index))
    ))


def panel_from_csv(text: str) -> list[PanelCell]:
    out = []
    for i, r in enumerate(parse_table(text, "panel", PANEL_COLUMNS), start=3):
        try:
            out.append(PanelCell(
                player_id=r["player_id"],
                month_index=parse_month(r["month"]),
                mean_gap=float(r["mean_gap_pp"]),
                n_matches=int(r["n_matches"]),
                n_moves_used=int(r["n_moves"]),
                group_flag=r["group"],
            ))
        except (ValueError, KeyError) as exc:
            raise SchemaError(f"panel table line {i}: {exc}") from None
    return out


def bins_to_csv(rows: Iterable[BinRow]) -> str:
    return render("bins", BIN_COLUMNS, (
        (b.era, b.bin, b.first_ply, b.last_ply, b.mean_gap, b.n) for b in rows
    ))
