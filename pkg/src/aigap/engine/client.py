"""Subprocess client for an external analysis engine speaking JSON lines."""
from __future__ import annotations

import itertools
import logging
import queue
import shlex
import subprocess
import threading
from typing import Optional, Sequence

from ..board import BoardState, Move
from .protocol import build_request, encode, parse_response
from .types import EngineEvaluation, EngineParams, EngineTimeout, EngineUnavailable, ProtocolViolation

log = logging.getLogger(__name__)

_EOF = object()


class JsonLinesEngine:
    """One engine session: a child process fed one request per line.

    ``command`` comes from configuration; nothing is hard-coded. Use one
    instance per worker.
    """

    def __init__(self, command: str | Sequence[str], perspective: str = "mover", cwd: Optional[str] = None):
        self.command = shlex.split(command) if isinstance(command, str) else list(command)
        if perspective not in ("mover", "black"):
            raise ValueError("perspective must be 'mover' or 'black'")
        self.perspective = perspective
        self.cwd = cwd
        self.queries = 0
        self._ids = itertools.count(1)
        self._proc: Optional[subprocess.Popen] = None
        self._lines: queue.Queue = queue.Queue()

    def _start(self):
        try:
            self._proc = subprocess.Popen(
                self.command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
                text=True,
                encoding="utf-8",
                bufsize=1,
                cwd=self.cwd,
            )
        except OSError as exc:
            raise EngineUnavailable(f"cannot start engine {self.command!r}: {exc}") from exc
        self._lines = queue.Queue()
        threading.Thread(target=self._pump, args=(self._proc, self._lines), daemon=True).start()

    @staticmethod
    def _pump(proc, lines):
        for line in proc.stdout:
            lines.put(line)
        lines.put(_EOF)

    def analyze(self, state: BoardState, params: EngineParams, include_move: Optional[Move] = None) -> EngineEvaluation:
        if self._proc is None or self._proc.poll() is not None:
            self._start()
        req_id = str(next(self._ids))
        self.queries += 1
        try:
            self._proc.stdin.write(encode(build_request(req_id, state, params, include_move)))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            self.close()
            raise EngineUnavailable(f"engine closed its input: {exc}") from exc
        while True:
            try:
                line = self._lines.get(timeout=params.per_query_timeout)
            except queue.Empty:
                self.close()
                raise EngineTimeout(f"no response to request {req_id} within {params.per_query_timeout}s") from None
            if line is _EOF:
                self.close()
                raise EngineUnavailable("engine exited")
            if not line.strip():
                continue
            try:
                return parse_response(line, req_id, state, params, self.perspective)
            except ProtocolViolation:
                if self._is_stale(line, req_id):
                    log.debug("discarding stale response %s", line.strip())
                    continue
                raise

    @staticmethod
    def _is_stale(line: str, req_id: str) -> bool:
        import json

        try:
            got = int(json.loads(line).get("id"))
        except (ValueError, TypeError, AttributeError):
            return False
        return got < int(req_id)

    def close(self):
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=2)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
