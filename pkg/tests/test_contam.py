import math

import pytest

from corpusforge.corpus import Document
from corpusforge.contam import (
    ContamReport,
    format_table,
    interpret,
    lm_scorer,
    measure,
    nll_file_scorer,
)
from corpusforge.errors import EmptyCorpus, ScorerFailure
from corpusforge.ngram import NgramLM


def D(id, text="some text"):
    return Document(id=id, text=text, source="test", lang="en")


def table_scorer(table):
    # table: id -> (total_nll, tokens)
    return lambda doc: table[doc.id]


# ---- measurement arithmetic ----------------------------------------------------

def test_token_weighted_means():
    table = {
        "u1": (10.0, 5), "u2": (2.0, 5),     # unseen: 12 nats over 10 tokens
        "e1": (3.0, 3), "e2": (1.0, 1),      # set a: 4 nats over 4 tokens
        "e3": (12.0, 6),                     # set b: 2.0/token
    }
    report = measure(
        table_scorer(table),
        [D("u1"), D("u2")],
        {"a": [D("e1"), D("e2")], "b": [D("e3")]},
        scorer_id="fixture",
    )
    assert report.l_unseen == pytest.approx(1.2)
    assert report.per_set["a"] == (pytest.approx(1.0), 4)
    assert report.per_set["b"] == (pytest.approx(2.0), 6)
    # overall eval mean weights by tokens, not by set: (4 + 12) / (4 + 6)
    assert report.l_eval == pytest.approx(1.6)
    assert report.delta == pytest.approx(1.2 - 1.6)
    assert report.n_unseen_tokens == 10
    assert report.scorer_id == "fixture"


def test_to_dict_sorts_sets():
    table = {"u": (1.0, 1), "x": (1.0, 1), "a": (1.0, 1)}
    report = measure(table_scorer(table), [D("u")],
                     {"x": [D("x")], "a": [D("a")]})
    d = report.to_dict()
    assert list(d["per_set"]) == ["a", "x"]
    assert d["per_set"]["a"] == {"l_eval": 1.0, "n_tokens": 1}
    assert set(d) == {"scorer_id", "l_unseen", "l_eval", "delta",
                      "per_set", "n_unseen_tokens"}


def test_zero_token_corpora_rejected():
    zero = lambda doc: (0.0, 0)
    with pytest.raises(EmptyCorpus):
        measure(zero, [D("u")], {"a": [D("e")]})
    mixed = table_scorer({"u": (1.0, 2), "e": (0.0, 0)})
    with pytest.raises(EmptyCorpus, match="'a'"):
        measure(mixed, [D("u")], {"a": [D("e")]})
    with pytest.raises(EmptyCorpus):
        measure(table_scorer({"u": (1.0, 2)}), [D("u")], {})


# ---- verdicts ----------------------------------------------------------------------

def report_with_delta(delta):
    return ContamReport(scorer_id="t", l_unseen=delta, l_eval=0.0, delta=delta,
                        per_set={"a": (0.0, 1)}, n_unseen_tokens=1)


@pytest.mark.parametrize("delta,label", [
    (-1.0, "clean"),
    (0.35, "clean"),        # boundary inclusive
    (0.350001, "suspect"),
    (0.699999, "suspect"),
    (0.70, "overfit"),      # 2x threshold inclusive
    (5.0, "overfit"),
])
def test_verdict_boundaries(delta, label):
    verdict = interpret(report_with_delta(delta), threshold=0.35)
    assert verdict.label == label
    assert verdict.overfit_threshold == pytest.approx(0.70)


def test_threshold_must_be_positive():
    for bad in (0.0, -0.1):
        with pytest.raises(ValueError):
            interpret(report_with_delta(0.0), threshold=bad)


# ---- scorers -------------------------------------------------------------------------

def test_lm_scorer_matches_model_and_tolerates_empty_text():
    lm = NgramLM.train([D("t1", "the cat sat"), D("t2", "the dog sat")], order=2)
    scorer = lm_scorer(lm)
    st = lm.score("the cat")
    assert scorer(D("d", "the cat")) == (st.total_nll, st.token_count)
    assert scorer(D("e", "   ")) == (0.0, 0)


def test_nll_file_scorer(tmp_path):
    path = tmp_path / "nll.jsonl"
    path.write_text('{"id": "a", "nll": 4.5, "tokens": 3}\n\n'
                    '{"id": "b", "nll": 1.0, "tokens": 1}\n')
    scorer = nll_file_scorer(str(path))
    assert scorer(D("a")) == (4.5, 3)
    with pytest.raises(ScorerFailure):
        scorer(D("zzz"))


def test_end_to_end_leak_raises_delta():
    eval_docs = [D(f"e{i}", f"question {i} about topic {i % 3} answered fully")
                 for i in range(30)]
    unseen = [D(f"u{i}", f"report {i} covering subject {i % 5} in plain words")
              for i in range(30)]
    train_clean = [D(f"t{i}", f"article number {i} describing theme {i % 7}")
                   for i in range(200)]
    clean_lm = NgramLM.train(train_clean, order=3)
    leaky_lm = NgramLM.train(train_clean + eval_docs * 5, order=3)

    evalsets = {"qa": eval_docs}
    clean_delta = measure(lm_scorer(clean_lm), unseen, evalsets).delta
    leaky_delta = measure(lm_scorer(leaky_lm), unseen, evalsets).delta
    assert leaky_delta > clean_delta
    assert math.isfinite(clean_delta) and math.isfinite(leaky_delta)


# ---- rendering -------------------------------------------------------------------------

def test_format_table_contents():
    report = ContamReport(scorer_id="t", l_unseen=2.5, l_eval=2.0, delta=0.5,
                          per_set={"b": (2.25, 8), "a": (1.75, 8)},
                          n_unseen_tokens=40)
    text = format_table(report, interpret(report, threshold=0.35))
    lines = text.split("\n")
    assert lines[0].split() == ["set", "tokens", "loss"]
    # per-set rows come out sorted by name
    assert lines.index([l for l in lines if l.startswith("a ")][0]) < \
        lines.index([l for l in lines if l.startswith("b ")][0])
    assert "delta = L_unseen - L_eval = 0.5000" in text
    assert "verdict: suspect" in text
    assert "2.2500" in text and "1.7500" in text and "40" in text
