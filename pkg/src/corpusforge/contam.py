"""Overfitting/leakage analysis: compare a scorer's mean per-token loss on
held-out text (L_unseen) against evaluation-set text (L_eval).

delta = L_unseen - L_eval.  A scorer that never saw the eval sets should land
near zero; training on them drives L_eval down and delta up, so large deltas
flag leakage.  Losses are natural-log NLL per token, token-weighted across
documents; external NLL files must use the same convention.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable, Iterable, Tuple

from corpusforge.corpus import Document
from corpusforge.errors import EmptyCorpus, EmptyText, ScorerFailure
from corpusforge.ngram import NgramLM

DEFAULT_THRESHOLD = 0.35

# scorer: Document -> (total_nll, token_count)
Scorer = Callable[[Document], Tuple[float, int]]


@dataclass
class ContamReport:
    scorer_id: str
    l_unseen: float
    l_eval: float
    delta: float
    per_set: dict  # name -> (l_eval, n_tokens)
    n_unseen_tokens: int

    def to_dict(self):
        return {
            "scorer_id": self.scorer_id,
            "l_unseen": self.l_unseen,
            "l_eval": self.l_eval,
            "delta": self.delta,
            "per_set": {k: {"l_eval": v[0], "n_tokens": v[1]}
                        for k, v in sorted(self.per_set.items())},
            "n_unseen_tokens": self.n_unseen_tokens,
        }


@dataclass
class ContamVerdict:
    label: str  # clean | suspect | overfit
    threshold: float
    overfit_threshold: float


def lm_scorer(lm: NgramLM) -> Scorer:
    def score(doc: Document):
        try:
            st = lm.score(doc.text)
        except EmptyText:
            return 0.0, 0
        return st.total_nll, st.token_count

    return score


def nll_file_scorer(path: str) -> Scorer:
    """Scorer from a JSONL file of {"id":..., "nll":..., "tokens":...} rows,
    so externally computed per-text losses can be analyzed offline."""
    table: dict = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            row = json.loads(line)
            table[str(row["id"])] = (float(row["nll"]), int(row["tokens"]))

    def score(doc: Document):
        if doc.id not in table:
            raise ScorerFailure(doc.id, "no NLL on file")
        return table[doc.id]

    return score


def _weighted_mean(scorer: Scorer, docs: Iterable[Document]):
    nll = 0.0
    tokens = 0
    for doc in docs:
        d_nll, d_tok = scorer(doc)
        nll += d_nll
        tokens += d_tok
    return nll, tokens


def measure(scorer: Scorer, unseen: Iterable[Document], evalsets: dict,
            scorer_id: str = "ngram") -> ContamReport:
    unseen_nll, unseen_tokens = _weighted_mean(scorer, unseen)
    if unseen_tokens == 0:
        raise EmptyCorpus("unseen corpus scored zero tokens")
    per_set = {}
    eval_nll = 0.0
    eval_tokens = 0
    for name, docs in evalsets.items():
        s_nll, s_tok = _weighted_mean(scorer, docs)
        if s_tok == 0:
            raise EmptyCorpus(f"eval set {name!r} scored zero tokens")
        per_set[name] = (s_nll / s_tok, s_tok)
        eval_nll += s_nll
        eval_tokens += s_tok
    if eval_tokens == 0:
        raise EmptyCorpus("no eval sets given")
    l_unseen = unseen_nll / unseen_tokens
    l_eval = eval_nll / eval_tokens
    return ContamReport(
        scorer_id=scorer_id,
        l_unseen=l_unseen,
        l_eval=l_eval,
        delta=l_unseen - l_eval,
        per_set=per_set,
        n_unseen_tokens=unseen_tokens,
    )


def interpret(report: ContamReport, threshold: float = DEFAULT_THRESHOLD) -> ContamVerdict:
    """clean at delta <= threshold (inclusive), overfit at >= 2x threshold,
    suspect between."""
    if threshold <= 0:
        raise ValueError("threshold must be positive")
    if report.delta <= threshold:
        label = "clean"
    elif report.delta >= 2.0 * threshold:
        label = "overfit"
    else:
        label = "suspect"
    return ContamVerdict(label=label, threshold=threshold,
                         overfit_threshold=2.0 * threshold)


def format_table(report: ContamReport, verdict: ContamVerdict) -> str:
    rows = [("set", "tokens", "loss")]
    rows.append(("<unseen>", str(report.n_unseen_tokens), f"{report.l_unseen:.4f}"))
    for name in sorted(report.per_set):
        l, n = report.per_set[name]
        rows.append((name, str(n), f"{l:.4f}"))
    rows.append(("<eval overall>", "", f"{report.l_eval:.4f}"))
    widths = [max(len(r[i]) for r in rows) for i in range(3)]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
             for row in rows]
    lines.append("")
    lines.append(f"delta = L_unseen - L_eval = {report.delta:.4f}")
    lines.append(
        f"verdict: {verdict.label} "
        f"(clean <= {verdict.threshold:g}, overfit >= {verdict.overfit_threshold:g})"
    )
    return "\n".join(lines)
