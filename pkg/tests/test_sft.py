import json

import numpy as np
import pytest

from corpusforge.errors import ScorerFailure
from corpusforge.sft import (
    SftCleanConfig,
    SftPair,
    clean,
    heuristic_scorer,
    pair_from_json,
    pair_to_json,
    quality_gate,
    rule_filter,
    scores_file_scorer,
    semantic_dedup,
    SftCleanReport,
)


def pair(id="p0", prompt="ask me a question", response="a varied long answer body", **kw):
    return SftPair(id=id, prompt=prompt, response=response, **kw)


def const_scorer(score):
    return lambda p: score


# ---- boundaries --------------------------------------------------------------

def test_quality_boundary_inclusive():
    cfg = SftCleanConfig()
    assert quality_gate(pair(), const_scorer(7.0), cfg.min_quality) is True
    assert quality_gate(pair(), const_scorer(6.9), cfg.min_quality) is False
    assert quality_gate(pair(), const_scorer(10.0), cfg.min_quality) is True


def test_quality_score_recorded_on_pair():
    p = pair()
    quality_gate(p, const_scorer(8.25), 7.0)
    assert p.quality_score == 8.25


def test_dedup_boundary_strict():
    # embeddings with exact known cosines: identical -> 1.0 (> t, dropped);
    # engineered vector at exactly t -> kept
    t = 0.98
    cfg = SftCleanConfig(dup_cos_threshold=t)
    base = np.zeros(32)
    base[0] = 1.0
    at_threshold = np.zeros(32)
    at_threshold[0] = t
    at_threshold[1] = float(np.sqrt(1 - t * t))
    vectors = {"a": base, "b": at_threshold, "c": base.copy()}
    fn = lambda text: vectors[text.split("\n")[0]]
    pairs = [pair(id=k, prompt=k, response="r") for k in vectors]
    report = SftCleanReport()
    kept = list(semantic_dedup(pairs, cfg, embed_fn=fn, report=report))
    assert [p.id for p in kept] == ["a", "b"]  # cos(a,b) == t exactly: kept
    assert report.dedup_dropped == 1  # c is identical to a: dropped


def test_dedup_first_seen_survives():
    cfg = SftCleanConfig()
    pairs = [pair(id="first", prompt="same question", response="same answer"),
             pair(id="second", prompt="same question", response="same answer")]
    kept = list(semantic_dedup(pairs, cfg))
    assert [p.id for p in kept] == ["first"]


# ---- rules ---------------------------------------------------------------------

def test_rule_filter_reports_matching_pattern():
    cfg = SftCleanConfig(rule_patterns=[r"(?i)as an ai", r"http://bad"])
    keep, reason = rule_filter(pair(response="As an AI I cannot"), cfg)
    assert not keep and reason == r"(?i)as an ai"
    keep, reason = rule_filter(pair(prompt="see http://bad.site"), cfg)
    assert not keep
    assert rule_filter(pair(), cfg) == (True, None)


def test_config_validation():
    with pytest.raises(ValueError):
        SftCleanConfig(min_quality=0.5)
    with pytest.raises(ValueError):
        SftCleanConfig(dup_cos_threshold=1.5)


# ---- scorers --------------------------------------------------------------------

def test_heuristic_scorer_range_and_preferences():
    good = pair(response="a detailed response with plenty of distinct and varied words in it")
    bad = pair(response="spam spam spam spam spam spam spam spam spam spam")
    for p in (good, bad):
        assert 1.0 <= heuristic_scorer(p) <= 10.0
    assert heuristic_scorer(good) > heuristic_scorer(bad)


@pytest.mark.parametrize("layout", ["jsonl", "list", "map"])
def test_scores_file_formats(tmp_path, layout):
    rows = [{"id": "a", "score": 8.0}, {"id": "b", "score": 3.0}]
    path = tmp_path / "scores"
    if layout == "jsonl":
        path.write_text("\n".join(json.dumps(r) for r in rows) + "\n")
    elif layout == "list":
        path.write_text(json.dumps(rows, indent=2))
    else:
        path.write_text(json.dumps({r["id"]: r["score"] for r in rows}))
    scorer = scores_file_scorer(str(path))
    assert scorer(pair(id="a")) == 8.0
    assert scorer(pair(id="b")) == 3.0
    with pytest.raises(ScorerFailure):
        scorer(pair(id="missing"))


def test_scores_file_rejects_out_of_range(tmp_path):
    path = tmp_path / "s.jsonl"
    path.write_text('{"id": "a", "score": 11.0}\n')
    with pytest.raises(ScorerFailure):
        scores_file_scorer(str(path))(pair(id="a"))


# ---- full clean -------------------------------------------------------------------

def test_clean_reconciliation_and_retry():
    scores = {"good1": 9.0, "good2": 8.0, "low": 5.0, "dup": 9.5}

    def scorer(p):
        if p.id == "flaky":
            raise ScorerFailure(p.id)
        return scores[p.id]

    cfg = SftCleanConfig(rule_patterns=["forbidden"])
    pairs = [
        pair(id="good1", prompt="q one", response="answer one body"),
        pair(id="invalid", prompt="  ", response="x"),
        pair(id="ruled", prompt="forbidden content", response="x y z"),
        pair(id="low", prompt="q low", response="meh"),
        pair(id="flaky", prompt="q flaky", response="zzz"),
        pair(id="good2", prompt="q two", response="answer two body"),
        pair(id="dup", prompt="q one", response="answer one body"),
    ]
    kept, report, retry = clean(pairs, cfg, scorer=scorer)
    assert [p.id for p in kept] == ["good1", "good2"]
    assert [p.id for p in retry] == ["flaky"]
    assert report.to_dict() == {
        "pairs_in": 7, "invalid": 1, "rule_dropped": 1, "quality_dropped": 1,
        "dedup_dropped": 1, "retry": 1, "pairs_out": 2,
    }
    report.check()


def test_clean_default_scorer_keeps_decent_pairs():
    pairs = [
        pair(id=f"p{i}", prompt=f"please explain topic number {i} in detail",
             response=" ".join(f"word{i}x{j}" for j in range(30)))
        for i in range(10)
    ]
    kept, report, retry = clean(pairs, SftCleanConfig())
    assert len(kept) == 10 and not retry
    assert all(p.quality_score >= 7.0 for p in kept)


# ---- serialization ------------------------------------------------------------------

def test_pair_json_roundtrip():
    p = pair(id="x", origin="synthetic")
    p.quality_score = 8.5
    back = pair_from_json(pair_to_json(p))
    assert back == p


def test_pair_json_omits_missing_score():
    assert "quality_score" not in json.loads(pair_to_json(pair()))
