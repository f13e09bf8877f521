"""aigap command line.

Configuration is a plain-text file of ``key = value`` lines (``#`` starts a
comment, blank lines are ignored). Every key can also be given as a flag
(``--k-limit 40`` for ``k_limit``); flags win over the file.

Exit codes: 0 success (skipped matches included), 2 configuration error,
3 engine failure, 4 data error.
"""
from __future__ import annotations

import argparse
import datetime as dt
import json
import logging
import os
import sys
import threading
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, fields, replace
from pathlib import Path
from typing import Optional

from . import __version__
from .board import IllegalRecordedMove, initial_state
from .engine import Analyzer, EngineParams, EvalCache, JsonLinesEngine, ScriptedEngine
from .engine.cache import CacheFormatError
from .engine.types import EngineError
from .gap import (
    K_UNITS,
    EraConfig,
    bin_by_move,
    bins_to_csv,
    build_panel,
    gaps_from_csv,
    gaps_to_csv,
    match_gap_series,
    panel_from_csv,
    panel_to_csv,
)
from .sgf import MetadataError, MissingMetadataFile, load_corpus, load_metadata, DuplicateMatchId
from .stats import histogram, ks_two_sample, levene, summarize, welch_t, wilcoxon_rank_sum
from .tables import SchemaError, render, write_atomic

log = logging.getLogger("aigap")

EXIT_OK, EXIT_CONFIG, EXIT_ENGINE, EXIT_DATA = 0, 2, 3, 4


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


class UnknownPlayer(DataError):
    pass


class UnknownMatch(DataError):
    pass


class EmptyComparisonSet(DataError):
    pass


# -- configuration ----------------------------------------------------------------


@dataclass
class RunConfig:
    corpus_root: str = "."
    metadata: str = ""
    engine: str = "scripted"  # or a command line speaking the JSON-lines protocol
    perspective: str = "mover"
    engine_id: str = "scripted-v1"
    visits: int = 100
    max_candidates: int = 10
    komi: float = 6.5
    ruleset: str = "korean"
    timeout: float = 60.0
    k_limit: int = 50
    k_unit: str = "own_moves"
    era_cut_1: str = "2016-03-15"
    era_cut_2: str = "2017-10-25"
    cache: str = ""
    out_dir: str = "out"
    workers: int = 1
    seed: int = 20201116
    bin_size: int = 10
    weights: str = "none"

    def validate(self) -> "RunConfig":
        if self.k_limit < 1:
            raise ConfigError("k_limit must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if self.k_unit not in K_UNITS:
            raise ConfigError(f"k_unit must be one of {K_UNITS}")
        if self.perspective not in ("mover", "black"):
            raise ConfigError("perspective must be 'mover' or 'black'")
        if self.weights not in ("none", "n_matches"):
            raise ConfigError("weights must be 'none' or 'n_matches'")
        if self.bin_size < 1:
            raise ConfigError("bin_size must be >= 1")
        try:
            self.eras()
            self.params()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        return self

    def eras(self) -> EraConfig:
        return EraConfig(dt.date.fromisoformat(self.era_cut_1), dt.date.fromisoformat(self.era_cut_2))

    def params(self) -> EngineParams:
        return EngineParams(
            engine_id=self.engine_id,
            visits_budget=self.visits,
            max_candidates=self.max_candidates,
            komi=self.komi,
            ruleset=self.ruleset,
            per_query_timeout=self.timeout,
        )


_FIELDS = {f.name: f for f in fields(RunConfig)}


def _coerce(key: str, value: str):
    f = _FIELDS.get(key)
    if f is None:
        raise ConfigError(f"unknown config key {key!r}")
    kind = type(getattr(RunConfig(), key))
    try:
        return kind(value)
    except ValueError:
        raise ConfigError(f"config key {key!r}: cannot read {value!r} as {kind.__name__}") from None


def read_config(path: str | os.PathLike) -> dict:
    out = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc.strerror or exc}") from None
    for n, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{path}:{n}: expected 'key = value'")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key.replace("-", "_")] = _coerce(key.replace("-", "_"), value)
    return out


def build_config(args: argparse.Namespace) -> RunConfig:
    values = read_config(args.config) if args.config else {}
    for name in _FIELDS:
        v = getattr(args, name, None)
        if v is not None:
            values[name] = v
    return RunConfig(**values).validate()


# -- engines --------------------------------------------------------------------


def make_engine(cfg: RunConfig):
    if cfg.engine == "scripted":
        return ScriptedEngine()
    return JsonLinesEngine(cfg.engine, perspective=cfg.perspective)


# -- commands -------------------------------------------------------------------


def _out(cfg: RunConfig) -> Path:
    p = Path(cfg.out_dir)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _emit(summary: dict):
    sys.stdout.write(json.dumps(summary, sort_keys=True) + "\n")


def cmd_analyze(cfg: RunConfig, args) -> int:
    if not cfg.metadata:
        raise ConfigError("analyze needs 'metadata'")
    if not Path(cfg.corpus_root).is_dir():
        raise ConfigError(f"corpus_root {cfg.corpus_root!r} is not a directory")
    table = load_corpus(cfg.corpus_root, cfg.metadata)
    out = _out(cfg)
    params, eras = cfg.params(), cfg.eras()
    cache = EvalCache(cfg.cache, engine_id=params.engine_id) if cfg.cache else None

    local = threading.local()
    sessions: list[Analyzer] = []
    lock = threading.Lock()

    def analyzer() -> Analyzer:
        if not hasattr(local, "a"):
            local.a = Analyzer(make_engine(cfg), cache)
            with lock:
                sessions.append(local.a)
        return local.a

    def one(row):
        a = analyzer()
        before = a.queries
        try:
            # komi comes from the record; the configured value is only a default for probes
            gaps = match_gap_series(
                row.record, a, replace(params, komi=row.record.komi), cfg.k_limit, cfg.k_unit,
                match_id=row.match_id, black_id=row.black_id, white_id=row.white_id,
                date=row.date, eras=eras,
            )
        except IllegalRecordedMove as exc:
            return row, None, f"IllegalRecordedMove: {exc}", a.queries - before
        return row, gaps, None, a.queries - before

    done: list = []
    skips = [(s.match_id, s.path, s.reason) for s in table.skipped]
    partial = out / "gaps.csv.partial"
    status = EXIT_OK
    pool = ThreadPoolExecutor(max_workers=cfg.workers)
    try:
        for row, gaps, err, n_q in pool.map(one, table.rows):
            if err:
                skips.append((row.match_id, row.sgf_path, err))
            else:
                done.append((row.match_id, gaps, n_q))
    except EngineError as exc:
        log.error("engine failure: %s", exc)
        status = EXIT_ENGINE
    finally:
        pool.shutdown(wait=True, cancel_futures=True)
        for s in sessions:
            s.engine.close()
        if cache is not None:
            cache.close()

    all_gaps = [g for _, gs, _ in done for g in gs]
    skips.sort(key=lambda s: (s[1], s[0]))
    skip_csv = render("skips", ("match_id", "sgf_path", "reason"), skips)
    stats = {
        "engine_queries": sum(s.queries for s in sessions),
        "cache_hits": sum(s.cache_hits for s in sessions),
        "engine_queries_by_match": {m: q for m, _, q in sorted(done)},
    }
    write_atomic(out / "analyze-stats.json", json.dumps(stats, indent=2, sort_keys=True) + "\n")
    if status != EXIT_OK:
        # completed matches only, under a name no reader picks up
        write_atomic(partial, gaps_to_csv(all_gaps))
        write_atomic(out / "skips.csv.partial", skip_csv)
        _emit({"status": "partial", "matches_done": len(done), "gaps": str(partial)})
        return status
    write_atomic(out / "gaps.csv", gaps_to_csv(all_gaps))
    write_atomic(out / "skips.csv", skip_csv)
    for stale in (partial, out / "skips.csv.partial"):
        stale.unlink(missing_ok=True)
    manifest = {
        "aigap": __version__,
        "coverage": {"listed": len(table.rows) + len(table.skipped), "analyzed": len(done), "skipped": len(skips)},
        "params": {
            "engine_id": params.engine_id, "visits_budget": params.visits_budget,
            "max_candidates": params.max_candidates, "komi": "per record", "ruleset": params.ruleset,
            "k_limit": cfg.k_limit, "k_unit": cfg.k_unit,
        },
        "gap_records": len(all_gaps),
        "missing": sum(g.missing for g in all_gaps),
    }
    write_atomic(out / "analyze.json", json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    _emit({"status": "ok", "gaps": str(out / "gaps.csv"), "skipped": len(skips)})
    return EXIT_OK


def _read_gaps(path):
    try:
        return gaps_from_csv(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read gaps table {path}: {exc.strerror or exc}") from None


def _read_panel(path):
    try:
        return panel_from_csv(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read panel table {path}: {exc.strerror or exc}") from None


def cmd_bins(cfg: RunConfig, args) -> int:
    rows = bin_by_move(_read_gaps(args.gaps), cfg.bin_size, cfg.eras(), args.n_bins)
    path = _out(cfg) / "bins.csv"
    write_atomic(path, bins_to_csv(rows))
    _emit({"status": "ok", "bins": str(path), "rows": len(rows)})
    return EXIT_OK


def cmd_panel(cfg: RunConfig, args) -> int:
    table = load_metadata(cfg.metadata) if cfg.metadata else None
    try:
        cells = build_panel(_read_gaps(args.gaps), table)
    except ValueError as exc:
        raise DataError(str(exc)) from None
    path = _out(cfg) / "panel.csv"
    write_atomic(path, panel_to_csv(cells))
    _emit({"status": "ok", "panel": str(path), "cells": len(cells)})
    return EXIT_OK


def cmd_trend(cfg: RunConfig, args) -> int:
    from .econ import fit_two_way_fe, trend_table

    fit = fit_two_way_fe(_read_panel(args.panel), weights=_weights(cfg))
    rows = [
        (m, t, s, t - 1.96 * s, t + 1.96 * s) for m, t, s in trend_table(fit)
    ]
    path = _out(cfg) / "trend.csv"
    # band: tau +/- 1.96 player-clustered standard errors
    write_atomic(path, render("trend", ("month", "tau_hat", "se_clustered", "band_low", "band_high"), rows))
    _emit({"status": "ok", "trend": str(path), "months": len(rows),
           "dropped_players": sorted(fit.dropped_players), "n_obs": fit.n_obs})
    return EXIT_OK


def _weights(cfg):
    return None if cfg.weights == "none" else cfg.weights


def cmd_did(cfg: RunConfig, args) -> int:
    from .econ import did_json, did_table, format_did_table

    fits = did_table(_read_panel(args.panel), weights=_weights(cfg),
                     event_dates=(cfg.eras().cut_1, cfg.eras().cut_2))
    out = _out(cfg)
    write_atomic(out / "did.txt", format_did_table(fits))
    write_atomic(out / "did.json", did_json(fits))
    sys.stdout.write(format_did_table(fits))
    return EXIT_OK


def cheat_split(gaps, player: str, match: str):
    mine = [g for g in gaps if g.player_id == player and not g.missing]
    if not any(g.player_id == player for g in gaps):
        raise UnknownPlayer(f"player {player!r} not in the gaps table")
    if not any(g.match_id == match for g in gaps):
        raise UnknownMatch(f"match {match!r} not in the gaps table")
    suspect = [g.delta for g in mine if g.match_id == match]
    if not suspect:
        raise UnknownMatch(f"player {player!r} has no analyzed moves in match {match!r}")
    other = [g.delta for g in mine if g.match_id != match]
    if not other:
        raise EmptyComparisonSet(f"player {player!r} has no other analyzed matches")
    return other, suspect


def cheat_reports(other, suspect, tail: str = "one_sided_greater", levene_center: str = "median"):
    """All four tests with the other-matches sample first.

    Levene defaults to the median centre here: gap values are right-skewed,
    and the mean-centred variant over-rejects on such data.
    """
    return [
        welch_t(other, suspect, tail),
        wilcoxon_rank_sum(other, suspect, tail),
        ks_two_sample(other, suspect, tail),
        levene(other, suspect, levene_center, tail),
    ]


def cmd_cheatcheck(cfg: RunConfig, args) -> int:
    other, suspect = cheat_split(_read_gaps(args.gaps), args.player, args.match)
    reports = cheat_reports(other, suspect, args.tail, args.levene_center)
    out = _out(cfg)
    summaries = {"other_matches": summarize(other), "suspect_match": summarize(suspect)}
    doc = {
        "schema": "aigap cheatcheck v1",
        "player": args.player,
        "match": args.match,
        "tail": args.tail,
        "levene_center": args.levene_center,
        "samples": {k: v.to_dict() for k, v in summaries.items()},
        "tests": [r.to_dict() for r in reports],
    }
    write_atomic(out / "cheatcheck.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")
    write_atomic(out / "cheatcheck-summary.csv", render(
        "summary", ("sample", "n", "mean", "sd", "median", "q1", "q3"),
        ((k, s.n, s.mean, s.sd, s.median, s.q1, s.q3) for k, s in summaries.items()),
    ))
    hist = histogram({"other_matches": other, "suspect_match": suspect}, args.bin_width)
    write_atomic(out / "cheatcheck-histogram.csv", render(
        "histogram", ("sample", "left", "right", "count", "density"), hist))
    _emit({r.test_name: {"p": r.p_value, "statistic": r.statistic} for r in reports})
    return EXIT_OK


def cmd_cache_info(cfg: RunConfig, args) -> int:
    path = cfg.cache
    if not path:
        raise ConfigError("cache-info needs --cache")
    if not Path(path + ".log").exists():
        raise ConfigError(f"no cache log at {path}.log")
    cache = EvalCache(path)
    try:
        info = cache.verify()
    finally:
        cache.close()
    _emit(info)
    return EXIT_OK if not info["problems"] else EXIT_DATA


def cmd_engine_probe(cfg: RunConfig, args) -> int:
    engine = make_engine(cfg)
    try:
        ev = engine.analyze(initial_state(args.size), cfg.params())
    finally:
        engine.close()
    best = ev.candidates[0]
    _emit({"status": "ok", "engine_id": ev.engine_id, "best": list(best.move.point) if best.move.point else None,
           "win_prob": best.win_prob, "candidates": len(ev.candidates)})
    return EXIT_OK


COMMANDS = {
    "analyze": cmd_analyze,
    "bins": cmd_bins,
    "panel": cmd_panel,
    "trend": cmd_trend,
    "did": cmd_did,
    "cheatcheck": cmd_cheatcheck,
    "cache-info": cmd_cache_info,
    "engine-probe": cmd_engine_probe,
}


def _config_flags(p: argparse.ArgumentParser):
    g = p.add_argument_group("configuration (overrides the config file)")
    g.add_argument("--config", help="key = value configuration file")
    for name, f in _FIELDS.items():
        kind = type(getattr(RunConfig(), name))
        g.add_argument("--" + name.replace("_", "-"), dest=name, type=kind, default=None)


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="aigap", description="Human-AI gap toolkit for Go records.")
    ap.add_argument("--version", action="version", version=f"aigap {__version__}")
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        _config_flags(p)
        if name in ("bins", "panel", "cheatcheck"):
            p.add_argument("--gaps", required=True, help="gaps.csv from analyze")
        if name in ("trend", "did"):
            p.add_argument("--panel", required=True, help="panel.csv from panel")
        if name == "bins":
            p.add_argument("--n-bins", type=int, default=None)
        if name == "cheatcheck":
            p.add_argument("--player", required=True)
            p.add_argument("--match", required=True)
            p.add_argument("--tail", default="one_sided_greater",
                           choices=("one_sided_greater", "one_sided_less", "two_sided"))
            p.add_argument("--bin-width", type=float, default=1.0)
            p.add_argument("--levene-center", choices=("median", "mean"), default="median")
        if name == "engine-probe":
            p.add_argument("--size", type=int, default=19)
    return ap


def main(argv: Optional[list[str]] = None) -> int:
    from .econ import EconError

    ap = build_parser()
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = build_config(args)
        return COMMANDS[args.command](cfg, args)
    except ConfigError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except EngineError as exc:
        log.error("engine failure: %s", exc)
        return EXIT_ENGINE
    except MissingMetadataFile as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    except (DataError, SchemaError, MetadataError, DuplicateMatchId,
            CacheFormatError, EconError) as exc:
        log.error("%s: %s", type(exc).__name__, exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
