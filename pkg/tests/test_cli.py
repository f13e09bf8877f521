import json
import sys

import numpy as np
import pytest

from aigap import cli
from aigap.gap import GapRecord, gaps_from_csv, gaps_to_csv, panel_from_csv
from aigap.board import Color
from aigap.synth import career_gaps, did_panel, write_corpus
from aigap.gap import panel_to_csv
from aigap.tables import parse_table


@pytest.fixture
def corpus(tmp_path, rng):
    meta = write_corpus(rng, tmp_path / "corpus", n_matches=3, n_moves=30)
    return tmp_path / "corpus", meta


def run(*argv):
    return cli.main([str(a) for a in argv])


def analyze(corpus, out, *extra):
    root, meta = corpus
    return run("analyze", "--corpus-root", root, "--metadata", meta, "--out-dir", out,
               "--k-limit", 10, *extra)


def test_analyze_is_byte_identical(corpus, tmp_path):
    assert analyze(corpus, tmp_path / "a") == 0
    assert analyze(corpus, tmp_path / "b", "--workers", 3) == 0
    for name in ("gaps.csv", "skips.csv", "analyze.json"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()
    gaps = gaps_from_csv((tmp_path / "a" / "gaps.csv").read_text())
    assert len(gaps) == 3 * 20
    assert all(g.delta >= 0 for g in gaps)


def test_config_file_and_flag_override(corpus, tmp_path):
    root, meta = corpus
    conf = tmp_path / "run.conf"
    conf.write_text(f"# fixture\ncorpus_root = {root}\nmetadata = {meta}\nk_limit = 5\nout_dir = {tmp_path / 'o'}\n")
    assert run("analyze", "--config", conf) == 0
    assert len(gaps_from_csv((tmp_path / "o" / "gaps.csv").read_text())) == 3 * 10
    assert run("analyze", "--config", conf, "--k-limit", 2) == 0
    assert len(gaps_from_csv((tmp_path / "o" / "gaps.csv").read_text())) == 3 * 4


@pytest.mark.parametrize("text", ["k_limit = 0", "bogus = 1", "k_limit = many", "no equals sign"])
def test_config_errors_exit_2(tmp_path, text):
    conf = tmp_path / "bad.conf"
    conf.write_text(text + "\n")
    assert run("bins", "--config", conf, "--gaps", tmp_path / "x.csv") == 2


def test_missing_metadata_is_config_error(tmp_path):
    assert run("analyze", "--corpus-root", tmp_path, "--metadata", tmp_path / "nope.csv") == 2


def test_corrupt_sgf_is_skipped(tmp_path, rng):
    meta = write_corpus(rng, tmp_path / "c", n_matches=3, n_moves=20, corrupt=(1,))
    assert run("analyze", "--corpus-root", tmp_path / "c", "--metadata", meta,
               "--out-dir", tmp_path / "o") == 0
    skips = parse_table((tmp_path / "o" / "skips.csv").read_text(), "skips")
    assert [s["match_id"] for s in skips] == ["m0001"]
    assert "MalformedSgf" in skips[0]["reason"]
    gaps = gaps_from_csv((tmp_path / "o" / "gaps.csv").read_text())
    assert {g.match_id for g in gaps} == {"m0000", "m0002"}


def serve_cmd(extra=""):
    return f"{sys.executable} -m aigap.engine.serve {extra}".strip()


def test_interrupted_run_resumes_from_cache(corpus, tmp_path):
    cache = tmp_path / "evals"
    # reference run with its own cache, so query counts reflect reuse
    assert analyze(corpus, tmp_path / "ref", "--engine", serve_cmd(), "--cache", tmp_path / "ref-evals") == 0
    # an engine that dies part-way through the third match
    stats = json.loads((tmp_path / "ref" / "analyze-stats.json").read_text())
    by_match = stats["engine_queries_by_match"]
    budget = by_match["m0000"] + by_match["m0001"] + 3
    code = analyze(corpus, tmp_path / "run", "--engine", serve_cmd(f"--max-requests {budget}"),
                   "--cache", cache)
    assert code == 3
    assert (tmp_path / "run" / "gaps.csv.partial").exists()
    assert not (tmp_path / "run" / "gaps.csv").exists()
    partial = gaps_from_csv((tmp_path / "run" / "gaps.csv.partial").read_text())
    assert {g.match_id for g in partial} == {"m0000", "m0001"}
    # re-run with a healthy engine
    assert analyze(corpus, tmp_path / "run", "--engine", serve_cmd(), "--cache", cache) == 0
    assert (tmp_path / "run" / "gaps.csv").read_bytes() == (tmp_path / "ref" / "gaps.csv").read_bytes()
    assert not (tmp_path / "run" / "gaps.csv.partial").exists()
    resumed = json.loads((tmp_path / "run" / "analyze-stats.json").read_text())
    assert resumed["engine_queries_by_match"]["m0000"] == 0
    assert resumed["engine_queries_by_match"]["m0001"] == 0


def test_engine_unavailable_exit_3(corpus, tmp_path):
    assert analyze(corpus, tmp_path / "o", "--engine", "/nonexistent/engine") == 3
    assert run("engine-probe", "--engine", "/nonexistent/engine") == 3


def test_engine_probe(capsys):
    assert run("engine-probe", "--size", 9) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["best"] == [4, 4]


def test_downstream_commands(corpus, tmp_path, capsys):
    root, meta = corpus
    out = tmp_path / "o"
    assert analyze(corpus, out) == 0
    assert run("bins", "--gaps", out / "gaps.csv", "--out-dir", out, "--bin-size", 5) == 0
    bins = parse_table((out / "bins.csv").read_text(), "bins")
    assert {b["era"] for b in bins} == {"before", "mid", "after"}
    assert run("panel", "--gaps", out / "gaps.csv", "--metadata", meta, "--out-dir", out) == 0
    cells = panel_from_csv((out / "panel.csv").read_text())
    assert {c.group_flag for c in cells} <= {"treated", "control"}
    assert run("cache-info", "--cache", tmp_path / "none") == 2


def test_trend_and_did(tmp_path, capsys):
    panel = did_panel(np.random.default_rng(3), n_players=30, n_months=60)
    (tmp_path / "panel.csv").write_text(panel_to_csv(panel))
    assert run("trend", "--panel", tmp_path / "panel.csv", "--out-dir", tmp_path) == 0
    trend = parse_table((tmp_path / "trend.csv").read_text(), "trend")
    assert len(trend) == 60 and float(trend[0]["tau_hat"]) == 0.0
    assert run("did", "--panel", tmp_path / "panel.csv", "--out-dir", tmp_path) == 0
    doc = json.loads((tmp_path / "did.json").read_text())
    assert [c["label"] for c in doc["columns"]] == ["after_event1", "between_events", "after_event2"]
    assert "Observations" in capsys.readouterr().out


def test_unknown_schema_rejected(tmp_path):
    p = tmp_path / "panel.csv"
    p.write_text("# aigap panel v9\nplayer_id\n")
    assert run("did", "--panel", p, "--out-dir", tmp_path) == 4


def career_csv(other, suspect, player="ace"):
    gaps = []
    for k, v in enumerate(other):
        gaps.append(GapRecord(f"o{k // 50:03d}", player, k % 50 + 1, k % 50 + 1, Color.BLACK,
                              float(v), False, "x", 24200))
    for k, v in enumerate(suspect):
        gaps.append(GapRecord("sus", player, k + 1, k + 1, Color.BLACK, float(v), False, "x", 24200))
    gaps.append(GapRecord("sus", "rival", 1, 1, Color.WHITE, 1.0, False, "x", 24200))
    return gaps_to_csv(gaps)


def test_cheatcheck_planted(tmp_path):
    other, suspect = career_gaps(np.random.default_rng(cli.RunConfig().seed))
    (tmp_path / "g.csv").write_text(career_csv(other, suspect))
    assert run("cheatcheck", "--gaps", tmp_path / "g.csv", "--player", "ace", "--match", "sus",
               "--out-dir", tmp_path) == 0
    doc = json.loads((tmp_path / "cheatcheck.json").read_text())
    assert [t["test"] for t in doc["tests"]] == ["welch_t", "wilcoxon_rank_sum", "ks_two_sample", "levene"]
    assert all(t["p"] < 0.05 for t in doc["tests"])
    assert doc["samples"]["suspect_match"]["n"] == 50
    hist = parse_table((tmp_path / "cheatcheck-histogram.csv").read_text(), "histogram")
    assert {h["sample"] for h in hist} == {"other_matches", "suspect_match"}


def test_cheatcheck_errors(tmp_path):
    (tmp_path / "g.csv").write_text(career_csv([], [1.0, 2.0, 3.0]))
    base = ["cheatcheck", "--gaps", tmp_path / "g.csv", "--out-dir", tmp_path]
    assert run(*base, "--player", "ace", "--match", "sus") == 4  # single career match
    assert run(*base, "--player", "nobody", "--match", "sus") == 4
    assert run(*base, "--player", "ace", "--match", "nothing") == 4
    with pytest.raises(cli.EmptyComparisonSet):
        cli.cheat_split(gaps_from_csv((tmp_path / "g.csv").read_text()), "ace", "sus")
    with pytest.raises(cli.UnknownPlayer):
        cli.cheat_split(gaps_from_csv((tmp_path / "g.csv").read_text()), "nobody", "sus")
    with pytest.raises(cli.UnknownMatch):
        cli.cheat_split(gaps_from_csv((tmp_path / "g.csv").read_text()), "rival", "o000")


def test_analyze_passes_record_komi(corpus, tmp_path, monkeypatch):
    import re

    from aigap.engine import ScriptedEngine

    seen = set()

    class Spy(ScriptedEngine):
        def analyze(self, state, params):
            seen.add(params.komi)
            return super().analyze(state, params)

    root, meta = corpus
    sgf = root / "m0000.sgf"
    sgf.write_text(re.sub(r"KM\[[^]]*\]", "KM[7.5]", sgf.read_text()))
    monkeypatch.setattr(cli, "make_engine", lambda cfg: Spy())
    assert analyze(corpus, tmp_path / "o", "--komi", 99) == 0
    assert 7.5 in seen and 99.0 not in seen
