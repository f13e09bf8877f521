"""SGF game records and the match-metadata corpus.

Only the mainline of a game tree is kept (first child at every branch).
Recognised root properties are decoded into :class:`GameRecord` fields;
everything else is preserved verbatim so that ``parse_sgf(serialize_sgf(r))``
reproduces ``r``.
"""
from __future__ import annotations

import csv
import datetime as dt
import os
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .board import MAX_SIZE, Color, Move, Point
from .timeline import month_index_of, parse_date

Props = tuple[tuple[str, tuple[str, ...]], ...]

ROOT_KEYS = {"GM", "FF", "SZ", "KM", "PB", "PW", "DT", "RE", "AB", "AW", "PL"}
METADATA_COLUMNS = ("match_id", "sgf_path", "black_id", "white_id", "date")
GROUPS = ("treated", "control", "none")


class MalformedSgf(ValueError):
    def __init__(self, position: int, reason: str):
        super().__init__(f"malformed SGF at offset {position}: {reason}")
        self.position = position
        self.reason = reason


class UnsupportedSize(ValueError):
    pass


class MissingMetadataFile(FileNotFoundError):
    pass


class DuplicateMatchId(ValueError):
    pass


class MetadataError(ValueError):
    pass


@dataclass
class GameRecord:
    black_player_id: Optional[str] = None
    white_player_id: Optional[str] = None
    date: Optional[dt.date] = None
    result: Optional[str] = None
    komi: float = 0.0
    size: int = 19
    moves: tuple[Move, ...] = ()
    setup_stones: dict = field(default_factory=dict)
    player_to_move: Optional[Color] = None
    root_properties: Props = ()
    move_properties: tuple[Props, ...] = ()
    source_path: str = field(default="", compare=False)
    variations_dropped: int = field(default=0, compare=False)
    warnings: tuple[str, ...] = field(default=(), compare=False)

    def __post_init__(self):
        self.moves = tuple(self.moves)
        self.setup_stones = {
            Color(c): frozenset(pts) for c, pts in self.setup_stones.items() if pts
        }
        props = tuple(tuple(p) for p in self.move_properties)
        self.move_properties = props if any(props) else ()
        self.root_properties = tuple(
            (k, tuple(v)) for k, v in self.root_properties
        )

    @property
    def setup_color(self) -> Color:
        """Color to move first as implied by setup: white after handicap stones."""
        if self.setup_stones.get(Color.BLACK) and not self.setup_stones.get(Color.WHITE):
            return Color.WHITE
        return Color.BLACK

    @property
    def first_to_move(self) -> Color:
        if self.player_to_move is not None:
            return self.player_to_move
        if self.moves:
            return self.moves[0].color
        return self.setup_color

    def props_for_move(self, k: int) -> Props:
        return self.move_properties[k] if k < len(self.move_properties) else ()


# --------------------------------------------------------------------------
# parsing


def _decode_point(value: str, size: int, pos: int) -> Optional[Point]:
    if value == "" or (value == "tt" and size <= 19):
        return None
    if len(value) != 2 or not value.isalpha() or not value.islower():
        raise MalformedSgf(pos, f"bad point {value!r}")
    c, r = ord(value[0]) - 97, ord(value[1]) - 97
    if not (0 <= c < size and 0 <= r < size):
        raise MalformedSgf(pos, f"point {value!r} off a {size}x{size} board")
    return (c, r)


def _encode_point(p: Optional[Point]) -> str:
    if p is None:
        return ""
    return chr(97 + p[0]) + chr(97 + p[1])


def _decode_point_list(values, size: int, pos: int) -> set[Point]:
    out: set[Point] = set()
    for v in values:
        if ":" in v:
            a, b = v.split(":", 1)
            pa, pb = _decode_point(a, size, pos), _decode_point(b, size, pos)
            if pa is None or pb is None:
                raise MalformedSgf(pos, f"bad point range {v!r}")
            for c in range(min(pa[0], pb[0]), max(pa[0], pb[0]) + 1):
                for r in range(min(pa[1], pb[1]), max(pa[1], pb[1]) + 1):
                    out.add((c, r))
        else:
            p = _decode_point(v, size, pos)
            if p is None:
                raise MalformedSgf(pos, "empty setup point")
            out.add(p)
    return out


_DATE_RE = re.compile(r"^\s*(\d{4})(?:[-./](\d{1,2})(?:[-./](\d{1,2}))?)?")


def parse_sgf_date(text: str) -> Optional[dt.date]:
    """First date in an SGF ``DT`` value. Missing month/day resolve to 1."""
    m = _DATE_RE.match(text.split(",")[0])
    if not m:
        return None
    year = int(m.group(1))
    month = int(m.group(2) or 1)
    day = int(m.group(3) or 1)
    try:
        return dt.date(year, month, day)
    except ValueError:
        return None


class _Reader:
    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.n = len(text)

    def skip_ws(self):
        t, i, n = self.text, self.pos, self.n
        while i < n and t[i].isspace():
            i += 1
        self.pos = i

    def peek(self) -> str:
        self.skip_ws()
        return self.text[self.pos] if self.pos < self.n else ""

    def node(self) -> list[tuple[str, list[str], int]]:
        """Parse properties after a ';'. Returns (ident, values, offset)."""
        t = self.text
        props = []
        while True:
            self.skip_ws()
            start = self.pos
            i = start
            while i < self.n and t[i].isalpha():
                i += 1
            if i == start:
                break
            ident = "".join(ch for ch in t[start:i] if ch.isupper())
            if not ident:
                raise MalformedSgf(start, "property identifier without capitals")
            self.pos = i
            values = []
            while self.peek() == "[":
                values.append(self.value())
            if not values:
                raise MalformedSgf(start, f"property {ident} has no value")
            props.append((ident, values, start))
        return props

    def value(self) -> str:
        t = self.text
        open_at = self.pos
        i = open_at + 1
        out = []
        while i < self.n:
            ch = t[i]
            if ch == "\\":
                if i + 1 >= self.n:
                    break
                nxt = t[i + 1]
                if nxt == "\n":
                    i += 2
                    continue
                if nxt == "\r":
                    i += 3 if t[i + 2:i + 3] == "\n" else 2
                    continue
                out.append(nxt)
                i += 2
                continue
            if ch == "]":
                self.pos = i + 1
                return "".join(out)
            out.append(ch)
            i += 1
        raise MalformedSgf(open_at, "unclosed property value")


def _parse_tree(text: str):
    """Return (mainline nodes, variations dropped, trailing-tree count)."""
    rd = _Reader(text)
    if rd.peek() != "(":
        raise MalformedSgf(rd.pos, "expected '('")
    # frame: [nodes, first_child_mainline or None, dropped]
    stack: list[list] = []
    result = None
    while True:
        ch = rd.peek()
        if ch == "(":
            stack.append([[], None, 0])
            rd.pos += 1
        elif ch == ";":
            if not stack:
                raise MalformedSgf(rd.pos, "node outside a game tree")
            frame = stack[-1]
            if frame[1] is not None:
                raise MalformedSgf(rd.pos, "node after a variation")
            rd.pos += 1
            frame[0].append(rd.node())
        elif ch == ")":
            if not stack:
                raise MalformedSgf(rd.pos, "unbalanced ')'")
            frame = stack.pop()
            if not frame[0]:
                raise MalformedSgf(rd.pos, "empty game tree")
            rd.pos += 1
            mainline = frame[0] + (frame[1][0] if frame[1] else [])
            dropped = frame[2] + (frame[1][1] if frame[1] else 0)
            if stack:
                parent = stack[-1]
                if parent[1] is None:
                    parent[1] = (mainline, dropped)
                else:
                    # later siblings are discarded along with their subtrees
                    parent[2] += 1
            else:
                result = (mainline, dropped)
                break
        elif ch == "":
            raise MalformedSgf(rd.pos, "unexpected end of input")
        else:
            raise MalformedSgf(rd.pos, f"unexpected character {ch!r}")
    rd.skip_ws()
    trailing = rd.text[rd.pos:].count("(")
    return result[0], result[1], trailing


def parse_sgf(text: str, source_path: str = "") -> GameRecord:
    """Parse the first game tree in ``text`` into a :class:`GameRecord`."""
    if isinstance(text, bytes):
        text = decode_sgf_bytes(text)
    nodes, dropped, trailing = _parse_tree(text)
    warnings: list[str] = []
    if trailing:
        warnings.append("collection has more than one game; only the first was read")

    root = nodes[0]
    by_key: dict[str, tuple[list[str], int]] = {}
    for ident, values, pos in root:
        if ident in by_key and ident in ROOT_KEYS:
            raise MalformedSgf(pos, f"duplicate property {ident}")
        by_key.setdefault(ident, (values, pos))

    if "GM" in by_key and by_key["GM"][0][0].strip() not in ("1", ""):
        raise MalformedSgf(by_key["GM"][1], "not a Go record (GM != 1)")

    size = 19
    if "SZ" in by_key:
        raw, pos = by_key["SZ"]
        sz = raw[0].strip()
        if ":" in sz:
            a, b = sz.split(":", 1)
            if a.strip() != b.strip():
                raise UnsupportedSize(f"rectangular board {sz}")
            sz = a
        try:
            size = int(sz)
        except ValueError:
            raise MalformedSgf(pos, f"bad board size {raw[0]!r}") from None
        if size > MAX_SIZE or size < 2:
            raise UnsupportedSize(f"board size {size} is outside 2..{MAX_SIZE}")

    komi = 0.0
    if "KM" in by_key:
        raw = by_key["KM"][0][0].strip()
        try:
            komi = float(raw) if raw else 0.0
        except ValueError:
            m = re.match(r"^[-+]?\d+(\.\d+)?", raw)
            if not m:
                raise MalformedSgf(by_key["KM"][1], f"bad komi {raw!r}") from None
            komi = float(m.group(0))
            warnings.append(f"komi {raw!r} read as {komi}")

    date = None
    if "DT" in by_key:
        date = parse_sgf_date(by_key["DT"][0][0])
        if date is None:
            warnings.append(f"unparseable date {by_key['DT'][0][0]!r}")

    setup = {}
    for key, color in (("AB", Color.BLACK), ("AW", Color.WHITE)):
        if key in by_key:
            values, pos = by_key[key]
            setup[color] = _decode_point_list(values, size, pos)
    if setup.get(Color.BLACK, set()) & setup.get(Color.WHITE, set()):
        raise MalformedSgf(0, "point set up with both colors")

    pl = None
    if "PL" in by_key:
        try:
            pl = Color.from_letter(by_key["PL"][0][0].strip())
        except ValueError:
            raise MalformedSgf(by_key["PL"][1], "bad PL value") from None

    extras = tuple(
        (ident, tuple(values))
        for ident, values, _ in root
        if ident not in ROOT_KEYS and ident not in ("B", "W")
    )

    moves: list[Move] = []
    move_props: list[Props] = []
    skipped_nodes = 0
    for k, node in enumerate(nodes):
        mv = [(i, v, p) for i, v, p in node if i in ("B", "W")]
        if k > 0:
            for ident, _, pos in node:
                if ident in ("AB", "AW", "AE"):
                    raise MalformedSgf(pos, "setup properties after the root are not supported")
        if not mv:
            if k > 0:
                skipped_nodes += 1
            continue
        if len(mv) > 1:
            raise MalformedSgf(mv[1][2], "node holds more than one move")
        ident, values, pos = mv[0]
        color = Color.from_letter(ident)
        point = _decode_point(values[0].strip(), size, pos)
        moves.append(Move(color, point))
        if k == 0:
            move_props.append(())
        else:
            move_props.append(
                tuple((i, tuple(v)) for i, v, _ in node if i not in ("B", "W"))
            )
    if skipped_nodes:
        warnings.append(f"{skipped_nodes} node(s) without a move were dropped")

    rec = GameRecord(
        black_player_id=by_key["PB"][0][0] if "PB" in by_key else None,
        white_player_id=by_key["PW"][0][0] if "PW" in by_key else None,
        date=date,
        result=by_key["RE"][0][0] if "RE" in by_key else None,
        komi=komi,
        size=size,
        moves=tuple(moves),
        setup_stones=setup,
        player_to_move=pl,
        root_properties=extras,
        move_properties=tuple(move_props),
        source_path=source_path,
        variations_dropped=dropped,
    )
    if moves:
        if pl is None and moves[0].color != rec.setup_color:
            warnings.append(
                f"first move is {moves[0].color.name}, setup implies {rec.setup_color.name}"
            )
        expected = rec.first_to_move
        for n, m in enumerate(moves, start=1):
            if m.color != expected:
                warnings.append(f"move {n} breaks color alternation")
                break
            expected = expected.opponent
    rec.warnings = tuple(warnings)
    return rec


def decode_sgf_bytes(data: bytes) -> str:
    try:
        return data.decode("utf-8-sig")
    except UnicodeDecodeError:
        pass
    m = re.search(rb"CA\[([^\]]*)\]", data)
    if m:
        try:
            return data.decode(m.group(1).decode("ascii").strip())
        except (LookupError, UnicodeDecodeError):
            pass
    return data.decode("latin-1")


# --------------------------------------------------------------------------
# serialisation


def _escape(value: str) -> str:
    return value.replace("\\", "\\\\").replace("]", "\\]")


def _fmt_number(x: float) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


def _props(ident: str, values) -> str:
    return ident + "".join(f"[{_escape(v)}]" for v in values)


def serialize_sgf(record: GameRecord) -> str:
    parts = ["(;GM[1]FF[4]", f"SZ[{record.size}]", f"KM[{_fmt_number(record.komi)}]"]
    if record.black_player_id is not None:
        parts.append(_props("PB", [record.black_player_id]))
    if record.white_player_id is not None:
        parts.append(_props("PW", [record.white_player_id]))
    if record.date is not None:
        parts.append(f"DT[{record.date.isoformat()}]")
    if record.result is not None:
        parts.append(_props("RE", [record.result]))
    if record.player_to_move is not None:
        parts.append(f"PL[{record.player_to_move.letter}]")
    for color, ident in ((Color.BLACK, "AB"), (Color.WHITE, "AW")):
        pts = record.setup_stones.get(color)
        if pts:
            parts.append(ident + "".join(f"[{_encode_point(p)}]" for p in sorted(pts)))
    for ident, values in record.root_properties:
        parts.append(_props(ident, values))
    for k, move in enumerate(record.moves):
        if k % 12 == 0:
            parts.append("\n")
        parts.append(f";{move.color.letter}[{_encode_point(move.point)}]")
        for ident, values in record.props_for_move(k):
            parts.append(_props(ident, values))
    parts.append(")\n")
    return "".join(parts)


# --------------------------------------------------------------------------
# corpus


@dataclass
class MatchRow:
    match_id: str
    sgf_path: str
    black_id: str
    white_id: str
    date: dt.date
    month_index: int
    group: str = "none"
    tournament: Optional[str] = None
    black_group: Optional[str] = None
    white_group: Optional[str] = None
    extra: dict = field(default_factory=dict)
    record: Optional[GameRecord] = None

    def player_color(self, player_id: str) -> Optional[Color]:
        if player_id == self.black_id:
            return Color.BLACK
        if player_id == self.white_id:
            return Color.WHITE
        return None

    def group_of(self, player_id: str) -> str:
        if player_id == self.black_id and self.black_group:
            return self.black_group
        if player_id == self.white_id and self.white_group:
            return self.white_group
        return self.group


@dataclass(frozen=True)
class SkipEntry:
    path: str
    match_id: str
    reason: str


@dataclass
class MatchTable:
    rows: list[MatchRow]
    skipped: list[SkipEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.rows)

    def by_id(self) -> dict[str, MatchRow]:
        return {r.match_id: r for r in self.rows}

    def coverage(self) -> dict:
        total = len(self.rows) + len(self.skipped)
        return {"listed": total, "parsed": len(self.rows), "skipped": len(self.skipped)}


def _check_group(value: str, line: int, column: str) -> str:
    value = (value or "none").strip().lower() or "none"
    if value not in GROUPS:
        raise MetadataError(f"line {line}: {column} must be one of {GROUPS}, got {value!r}")
    return value


def load_metadata(metadata: str | os.PathLike) -> list[MatchRow]:
    """Read the metadata CSV without touching any SGF file."""
    path = Path(metadata)
    if not path.is_file():
        raise MissingMetadataFile(f"metadata file not found: {path}")
    rows: list[MatchRow] = []
    seen: set[str] = set()
    with open(path, newline="", encoding="utf-8-sig") as fh:
        reader = csv.DictReader(fh)
        header = reader.fieldnames or []
        missing = [c for c in METADATA_COLUMNS if c not in header]
        if missing:
            raise MetadataError(f"{path}: missing column(s) {', '.join(missing)}")
        for line, raw in enumerate(reader, start=2):
            mid = raw["match_id"].strip()
            if mid in seen:
                raise DuplicateMatchId(f"match_id {mid!r} appears twice (line {line})")
            seen.add(mid)
            try:
                date = parse_date(raw["date"])
            except ValueError:
                raise MetadataError(f"line {line}: bad date {raw['date']!r}") from None
            known = set(METADATA_COLUMNS) | {"group", "tournament", "black_group", "white_group"}
            rows.append(
                MatchRow(
                    match_id=mid,
                    sgf_path=raw["sgf_path"].strip(),
                    black_id=raw["black_id"].strip(),
                    white_id=raw["white_id"].strip(),
                    date=date,
                    month_index=month_index_of(date),
                    group=_check_group(raw.get("group"), line, "group"),
                    tournament=(raw.get("tournament") or None),
                    black_group=_check_group(raw["black_group"], line, "black_group")
                    if raw.get("black_group") else None,
                    white_group=_check_group(raw["white_group"], line, "white_group")
                    if raw.get("white_group") else None,
                    extra={k: v for k, v in raw.items() if k not in known and k is not None},
                )
            )
    return rows


def _read_one(path: str):
    try:
        data = Path(path).read_bytes()
    except OSError as exc:
        return None, f"unreadable: {exc.strerror or exc}"
    try:
        return parse_sgf(data, source_path=path), None
    except (MalformedSgf, UnsupportedSize) as exc:
        return None, f"{type(exc).__name__}: {exc}"


def load_corpus(
    root: str | os.PathLike, metadata: str | os.PathLike, workers: int = 1
) -> MatchTable:
    """Join the metadata CSV with parsed SGF files under ``root``.

    Unreadable or unparseable files go to ``MatchTable.skipped`` (sorted by
    path) instead of failing the load.
    """
    rows = load_metadata(metadata)
    root = Path(root)
    paths = [str(root / r.sgf_path) for r in rows]
    if workers > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_read_one, paths, chunksize=8))
    else:
        results = [_read_one(p) for p in paths]
    kept, skipped = [], []
    for row, path, (rec, err) in zip(rows, paths, results):
        if rec is None:
            skipped.append(SkipEntry(path=row.sgf_path, match_id=row.match_id, reason=err))
            continue
        row.record = rec
        kept.append(row)
    skipped.sort(key=lambda s: (s.path, s.match_id))
    return MatchTable(rows=kept, skipped=skipped)
