"""Cleaning for prompt/response fine-tuning pairs: rule filtering, a 1-10
quality gate (keep at >= min_quality, boundary inclusive), and semantic
dedup (drop at cosine strictly > dup_cos_threshold, first seen survives).

The quality scorer is pluggable; pairs whose scorer call fails go to a retry
queue instead of being dropped, and the stage report reconciles exactly:
input == output + invalid + rule + quality + dedup + retry.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterable, Optional

import numpy as np

from corpusforge.dedup import embed, extract_features, top_keyphrases
from corpusforge.errors import ScorerFailure
from corpusforge.filters import _dup_line_fraction, _ratio_subscore, _top_ngram_fraction
from corpusforge.ngram import tokenize_words
from corpusforge.normalize import compile_patterns


@dataclass
class SftPair:
    id: str
    prompt: str
    response: str
    origin: str = ""
    quality_score: Optional[float] = None


@dataclass
class SftCleanConfig:
    rule_patterns: list = field(default_factory=list)
    min_quality: float = 7.0
    dup_cos_threshold: float = 0.98

    def __post_init__(self):
        if not 1.0 <= self.min_quality <= 10.0:
            raise ValueError("min_quality must be in [1, 10]")
        if not 0.0 < self.dup_cos_threshold <= 1.0:
            raise ValueError("dup_cos_threshold must be in (0, 1]")
        self._compiled = list(zip(
            self.rule_patterns,
            (rx for rx, _ in compile_patterns((p, "") for p in self.rule_patterns)),
        ))


@dataclass
class SftCleanReport:
    pairs_in: int = 0
    invalid: int = 0
    rule_dropped: int = 0
    quality_dropped: int = 0
    dedup_dropped: int = 0
    retry: int = 0
    pairs_out: int = 0

    def check(self):
        assert self.pairs_in == (self.pairs_out + self.invalid + self.rule_dropped
                                 + self.quality_dropped + self.dedup_dropped + self.retry)

    def to_dict(self):
        return {
            "pairs_in": self.pairs_in,
            "invalid": self.invalid,
            "rule_dropped": self.rule_dropped,
            "quality_dropped": self.quality_dropped,
            "dedup_dropped": self.dedup_dropped,
            "retry": self.retry,
            "pairs_out": self.pairs_out,
        }


def rule_filter(pair: SftPair, cfg: SftCleanConfig):
    """(keep, reason): drop iff any configured pattern matches either side."""
    for pattern, rx in cfg._compiled:
        if rx.search(pair.prompt) or rx.search(pair.response):
            return False, pattern
    return True, None


def heuristic_scorer(pair: SftPair) -> float:
    """Documented default in [1, 10]: 1 + 9 * (length * line-diversity *
    ngram-repetition subscores).  A stand-in for an external model scorer."""
    text = pair.prompt + "\n" + pair.response
    length = min(1.0, len(text) / 64.0)
    dup = _ratio_subscore(_dup_line_fraction(text), 0.30)
    rep = _ratio_subscore(_top_ngram_fraction(tokenize_words(text)), 0.18)
    return 1.0 + 9.0 * (length * dup * rep)


def scores_file_scorer(path: str) -> Callable[[SftPair], float]:
    """Scorer backed by a JSON/JSONL file of {"id": ..., "score": ...} rows
    (or one JSON object mapping id to score); missing or out-of-range ids
    raise ScorerFailure."""
    scores: dict = {}
    with open(path, encoding="utf-8") as fh:
        content = fh.read()
    try:
        blob = json.loads(content)
        if isinstance(blob, dict) and "id" not in blob:
            scores = {str(k): float(v) for k, v in blob.items()}
        else:
            for row in blob if isinstance(blob, list) else [blob]:
                scores[str(row["id"])] = float(row["score"])
    except json.JSONDecodeError:
        for line in content.split("\n"):
            if line.strip():
                row = json.loads(line)
                scores[str(row["id"])] = float(row["score"])

    def scorer(pair: SftPair) -> float:
        if pair.id not in scores:
            raise ScorerFailure(pair.id, "no score on file")
        s = scores[pair.id]
        if not 1.0 <= s <= 10.0:
            raise ScorerFailure(pair.id, f"score {s} outside [1, 10]")
        return s

    return scorer


def quality_gate(pair: SftPair, scorer: Callable[[SftPair], float],
                 min_quality: float = 7.0) -> bool:
    """Keep iff score >= min_quality; the score is recorded on the pair."""
    score = scorer(pair)
    pair.quality_score = score
    return score >= min_quality


def embed_pair_text(text: str) -> np.ndarray:
    return embed(top_keyphrases(extract_features(text)))


def semantic_dedup(pairs: Iterable[SftPair], cfg: SftCleanConfig,
                   embed_fn: Optional[Callable[[str], np.ndarray]] = None,
                   report: Optional[SftCleanReport] = None):
    """Yield pairs whose embedding is not strictly closer than the threshold
    to any earlier kept pair.  Embeds prompt + newline + response: deduping
    prompts alone would delete legitimate multi-answer data."""
    embed_fn = embed_fn or embed_pair_text
    kept = np.zeros((0, 0))
    n = 0
    for pair in pairs:
        vec = np.asarray(embed_fn(pair.prompt + "\n" + pair.response), dtype=np.float64)
        if n == 0:
            kept = np.zeros((16, len(vec)))
        if n and float(np.max(kept[:n] @ vec)) > cfg.dup_cos_threshold:
            if report is not None:
                report.dedup_dropped += 1
            continue
        if n == len(kept):
            grown = np.zeros((2 * n, kept.shape[1]))
            grown[:n] = kept
            kept = grown
        kept[n] = vec
        n += 1
        yield pair


def clean(pairs: Iterable[SftPair], cfg: SftCleanConfig,
          scorer: Optional[Callable[[SftPair], float]] = None,
          embed_fn: Optional[Callable[[str], np.ndarray]] = None):
    """Full pipeline: rule filter, quality gate, semantic dedup.

    Returns (kept pairs, report, retry queue).  Retry-queue pairs had a
    scorer failure and were processed no further; rerun them with a working
    scorer and merge.
    """
    scorer = scorer or heuristic_scorer
    report = SftCleanReport()
    survivors = []
    retry = []
    for pair in pairs:
        report.pairs_in += 1
        if not pair.prompt.strip() or not pair.response.strip():
            report.invalid += 1
            continue
        keep, _ = rule_filter(pair, cfg)
        if not keep:
            report.rule_dropped += 1
            continue
        try:
            if not quality_gate(pair, scorer, cfg.min_quality):
                report.quality_dropped += 1
                continue
        except ScorerFailure:
            retry.append(pair)
            report.retry += 1
            continue
        survivors.append(pair)
    kept = list(semantic_dedup(survivors, cfg, embed_fn, report))
    report.pairs_out = len(kept)
    report.check()
    return kept, report, retry


def pair_to_json(pair: SftPair) -> str:
    row = {"id": pair.id, "prompt": pair.prompt, "response": pair.response,
           "origin": pair.origin}
    if pair.quality_score is not None:
        row["quality_score"] = pair.quality_score
    return json.dumps(row, ensure_ascii=False, separators=(",", ":"))


def pair_from_json(line: str) -> SftPair:
    row = json.loads(line)
    return SftPair(
        id=str(row["id"]),
        prompt=str(row["prompt"]),
        response=str(row["response"]),
        origin=str(row.get("origin", "")),
        quality_score=row.get("quality_score"),
    )
