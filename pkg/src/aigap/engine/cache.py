"""Persistent evaluation cache: an append-only record log plus a side index.

``<base>.log`` starts with one header line::

    AIGAP-EVAL-CACHE 1 <engine_id>\\n

followed by records, each ``>I`` payload length, the UTF-8 JSON payload
``{"k": key, "v": evaluation}`` and a ``>I`` CRC-32 of the payload.
``<base>.idx`` maps keys to record offsets and can always be rebuilt by
scanning the log. Writers serialise on ``<base>.lock``; a key is written at
most once, so concurrent puts of the same key leave one durable record.
"""
from __future__ import annotations

import json
import logging
import os
import struct
import threading
import zlib
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from filelock import FileLock

from ..board import BoardState, Color
from .types import EngineEvaluation, EngineParams

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
MAGIC = "AIGAP-EVAL-CACHE"
_LEN = struct.Struct(">I")
_MAX_RECORD = 64 << 20


class CacheCorrupt(Exception):
    def __init__(self, offset: int, reason: str):
        super().__init__(f"corrupt cache record at offset {offset}: {reason}")
        self.offset = offset
        self.reason = reason


class CacheFormatError(ValueError):
    pass


@dataclass(frozen=True)
class CacheKey:
    position_key: int
    to_move: Color
    engine_id: str
    visits_budget: int
    komi: float
    ruleset: str
    max_candidates: int

    @classmethod
    def of(cls, state: BoardState, params: EngineParams) -> "CacheKey":
        return cls(
            state.key,
            state.to_move,
            params.engine_id,
            params.visits_budget,
            float(params.komi),
            params.ruleset,
            params.max_candidates,
        )

    def __str__(self) -> str:
        return (
            f"{self.position_key:016x}|{self.to_move.letter}|{self.engine_id}|"
            f"{self.visits_budget}|{self.komi!r}|{self.ruleset}|{self.max_candidates}"
        )


def _pack(key: str, ev: EngineEvaluation) -> bytes:
    payload = json.dumps({"k": key, "v": ev.to_dict()}, separators=(",", ":"), sort_keys=True).encode()
    return _LEN.pack(len(payload)) + payload + _LEN.pack(zlib.crc32(payload))


class EvalCache:
    def __init__(self, base: str | os.PathLike, engine_id: str = ""):
        base = Path(base)
        self.log_path = base.with_name(base.name + ".log")
        self.idx_path = base.with_name(base.name + ".idx")
        self._flock = FileLock(str(base.with_name(base.name + ".lock")))
        self._tlock = threading.RLock()
        self._index: dict[str, int] = {}
        self._scanned = 0
        self.problems: list[CacheCorrupt] = []
        self.hits = 0
        self.misses = 0
        self.writes = 0
        self.log_path.parent.mkdir(parents=True, exist_ok=True)
        with self._tlock, self._flock:
            if not self.log_path.exists() or self.log_path.stat().st_size == 0:
                header = f"{MAGIC} {FORMAT_VERSION} {engine_id}\n".encode()
                with open(self.log_path, "ab") as fh:
                    fh.write(header)
            self.engine_id, self._data_start = self._read_header()
            self._load_index()
            self._refresh()

    # -- log scanning --------------------------------------------------

    def _read_header(self) -> tuple[str, int]:
        with open(self.log_path, "rb") as fh:
            line = fh.readline(4096)
        parts = line.decode("utf-8", "replace").rstrip("\n").split(" ", 2)
        if len(parts) < 2 or parts[0] != MAGIC or not line.endswith(b"\n"):
            raise CacheFormatError(f"{self.log_path} is not an evaluation cache")
        if parts[1] != str(FORMAT_VERSION):
            raise CacheFormatError(f"{self.log_path}: unsupported format version {parts[1]}")
        return (parts[2] if len(parts) > 2 else ""), len(line)

    def _load_index(self):
        self._scanned = self._data_start
        try:
            text = self.idx_path.read_text(encoding="utf-8")
        except OSError:
            return
        lines = text.splitlines()
        try:
            head = lines[0].split()
            if head[:2] != ["AIGAP-EVAL-INDEX", str(FORMAT_VERSION)]:
                return
            covered = int(head[2])
            if covered > self.log_path.stat().st_size or covered < self._data_start:
                return
            index = {}
            for ln in lines[1:]:
                k, off = ln.rsplit("\t", 1)
                index[k] = int(off)
        except (IndexError, ValueError):
            return
        self._index = index
        self._scanned = covered

    def _scan(self, fh, start: int, stop_on_tail: bool = True):
        """Yield (offset, key, payload) for complete records from ``start``."""
        fh.seek(start)
        off = start
        while True:
            head = fh.read(4)
            if len(head) < 4:
                if head:
                    self._tail_problem(off, "truncated length", stop_on_tail)
                return
            (n,) = _LEN.unpack(head)
            if n > _MAX_RECORD:
                self._flag(CacheCorrupt(off, f"implausible record length {n}"))
                return
            body = fh.read(n + 4)
            if len(body) < n + 4:
                self._tail_problem(off, "truncated record", stop_on_tail)
                return
            payload, crc = body[:n], _LEN.unpack(body[n:])[0]
            nxt = off + 8 + n
            if zlib.crc32(payload) != crc:
                self._flag(CacheCorrupt(off, "checksum mismatch"))
            else:
                try:
                    key = json.loads(payload)["k"]
                except (ValueError, KeyError, TypeError):
                    self._flag(CacheCorrupt(off, "undecodable payload"))
                else:
                    yield off, key, payload
            off = nxt
            self._scanned = off

    def _tail_problem(self, off, reason, stop_on_tail):
        # an in-flight append from another process looks the same; only
        # report it from verify()
        if not stop_on_tail:
            self._flag(CacheCorrupt(off, reason))

    def _flag(self, problem: CacheCorrupt):
        if all(p.offset != problem.offset for p in self.problems):
            log.warning("%s", problem)
            self.problems.append(problem)

    def _refresh(self):
        size = self.log_path.stat().st_size
        if size <= self._scanned:
            return
        with open(self.log_path, "rb") as fh:
            for off, key, _ in self._scan(fh, self._scanned):
                self._index.setdefault(key, off)

    # -- public API ----------------------------------------------------

    def get(self, key: CacheKey | str) -> Optional[EngineEvaluation]:
        k = str(key)
        with self._tlock:
            off = self._index.get(k)
            if off is None:
                self._refresh()
                off = self._index.get(k)
            if off is None:
                self.misses += 1
                return None
            ev = self._read_at(off, k)
            if ev is None:
                self.misses += 1
            else:
                self.hits += 1
            return ev

    def _read_at(self, off: int, k: str) -> Optional[EngineEvaluation]:
        with open(self.log_path, "rb") as fh:
            fh.seek(off)
            head = fh.read(4)
            if len(head) < 4:
                self._flag(CacheCorrupt(off, "index points past end of log"))
                return None
            (n,) = _LEN.unpack(head)
            body = fh.read(n + 4) if n <= _MAX_RECORD else b""
        if len(body) < n + 4 or zlib.crc32(body[:n]) != _LEN.unpack(body[n:])[0]:
            self._flag(CacheCorrupt(off, "checksum mismatch"))
            self._index.pop(k, None)
            return None
        try:
            obj = json.loads(body[:n])
            if obj["k"] != k:
                raise ValueError("key mismatch")
            return EngineEvaluation.from_dict(obj["v"])
        except (ValueError, KeyError, TypeError) as exc:
            self._flag(CacheCorrupt(off, f"bad record: {exc}"))
            self._index.pop(k, None)
            return None

    def put(self, key: CacheKey | str, ev: EngineEvaluation) -> bool:
        """Store ``ev``. Returns False when the key was already present."""
        k = str(key)
        record = _pack(k, ev)
        with self._tlock, self._flock:
            self._refresh()
            if k in self._index:
                return False
            with open(self.log_path, "ab") as fh:
                off = fh.seek(0, os.SEEK_END)
                fh.write(record)
                fh.flush()
            if off == self._scanned:
                self._scanned = off + len(record)
            self._index[k] = off
            self.writes += 1
            return True

    def __contains__(self, key) -> bool:
        with self._tlock:
            self._refresh()
            return str(key) in self._index

    def __len__(self) -> int:
        with self._tlock:
            self._refresh()
            return len(self._index)

    def verify(self) -> dict:
        """Full scan of the log; reports record count and any problems."""
        with self._tlock:
            count = 0
            keys = set()
            with open(self.log_path, "rb") as fh:
                for _, key, _ in self._scan(fh, self._data_start, stop_on_tail=False):
                    count += 1
                    keys.add(key)
            return {
                "log": str(self.log_path),
                "engine_id": self.engine_id,
                "format_version": FORMAT_VERSION,
                "records": count,
                "keys": len(keys),
                "bytes": self.log_path.stat().st_size,
                "problems": [str(p) for p in self.problems],
            }

    def rebuild_index(self):
        with self._tlock:
            self._index = {}
            self._scanned = self._data_start
            self._refresh()
            self.flush()

    def flush(self):
        """Write the side index atomically (temp file + rename)."""
        with self._tlock:
            self._refresh()
            lines = [f"AIGAP-EVAL-INDEX {FORMAT_VERSION} {self._scanned}"]
            lines += [f"{k}\t{off}" for k, off in sorted(self._index.items())]
            tmp = self.idx_path.with_name(f"{self.idx_path.name}.{os.getpid()}.{threading.get_ident()}.tmp")
            tmp.write_text("\n".join(lines) + "\n", encoding="utf-8")
            os.replace(tmp, self.idx_path)

    def close(self):
        self.flush()
