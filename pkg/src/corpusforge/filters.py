"""Per-document filtering: harmful-content policy, PII scrubbing, quality
checks.

All operations are pure functions of (document, config) so they can run in
parallel; the harmful-content retention decision is a deterministic hash of
the document id, never an RNG stream, so shard order and reruns cannot change
outcomes.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from typing import Optional

from corpusforge.corpus import Document
from corpusforge.errors import EmptyText
from corpusforge.ngram import NgramLM, tokenize_words
from corpusforge.normalize import compile_patterns

PII_KINDS = ("email", "phone", "id_number", "address", "name_list")

_RETENTION_SCALE = 2**64


@dataclass
class FilterVerdict:
    keep: bool
    reasons: list = field(default_factory=list)
    quality_score: float = 1.0
    perplexity: Optional[float] = None


@dataclass
class HarmPolicy:
    keyword_lists: dict = field(default_factory=dict)  # category -> [keyword]
    patterns: list = field(default_factory=list)  # regex strings
    retain_fraction: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.retain_fraction <= 1.0:
            raise ValueError("retain_fraction must be in [0, 1]")
        self._keywords = {
            cat: [kw.lower() for kw in kws] for cat, kws in self.keyword_lists.items()
        }
        self._patterns = [rx for rx, _ in compile_patterns((p, "") for p in self.patterns)]


@dataclass
class PiiRules:
    detectors: list = field(default_factory=list)  # [(kind, regex string)]
    action: str = "placeholder"  # or "drop_span"

    def __post_init__(self):
        if self.action not in ("placeholder", "drop_span"):
            raise ValueError(f"unknown PII action {self.action!r}")
        for kind, _ in self.detectors:
            if kind not in PII_KINDS:
                raise ValueError(f"unknown PII kind {kind!r}")
        self._compiled = [
            (kind, regex)
            for (kind, _), (regex, _) in zip(
                self.detectors, compile_patterns((p, "") for _, p in self.detectors)
            )
        ]


DEFAULT_PII_RULES = PiiRules(
    detectors=[
        ("email", r"[A-Za-z0-9._%+-]+@[A-Za-z0-9.-]+\.[A-Za-z]{2,}"),
        ("phone", r"(?<!\d)(?:\+?\d{1,3}[-. ])?(?:\(\d{2,4}\)[-. ]?)?\d{3,4}[-. ]\d{3,4}(?:[-. ]\d{3,4})?(?!\d)"),
        ("id_number", r"(?<!\d)\d{3}-\d{2}-\d{4}(?!\d)"),
    ]
)


@dataclass
class QualityThresholds:
    max_perplexity: Optional[float] = None  # None disables the LM gate
    max_dup_line_fraction: float = 0.30
    max_top_ngram_fraction: float = 0.18
    min_chars: int = 1
    max_symbol_ratio: float = 0.30

    def __post_init__(self):
        for name in ("max_dup_line_fraction", "max_top_ngram_fraction", "max_symbol_ratio"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.min_chars < 0:
            raise ValueError("min_chars must be >= 0")


def retention_hash(seed: int, doc_id: str) -> int:
    # blake2b rather than the FNV kernel: the comparison against
    # retain_fraction * 2^64 needs uniform high bits, and FNV-1a is visibly
    # lumpy up there on short structured ids.
    digest = hashlib.blake2b(f"{seed}:{doc_id}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


def harm_filter(doc: Document, policy: HarmPolicy) -> FilterVerdict:
    """Flag documents matching the keyword/pattern policy; keep a flagged doc
    only when its id hashes under the retention fraction."""
    lowered = doc.text.lower()
    reasons = []
    for cat, keywords in sorted(policy._keywords.items()):
        if any(kw in lowered for kw in keywords):
            reasons.append(f"harm:{cat}")
    for regex in policy._patterns:
        if regex.search(doc.text):
            reasons.append("harm:pattern")
            break
    if not reasons:
        return FilterVerdict(keep=True)
    keep = retention_hash(policy.seed, doc.id) < policy.retain_fraction * _RETENTION_SCALE
    return FilterVerdict(keep=keep, reasons=reasons, quality_score=0.0)


def pii_scrub(doc: Document, rules: PiiRules) -> Document:
    """Replace or delete detector matches; non-matching text is untouched."""
    text = doc.text
    for kind, regex in rules._compiled:
        repl = f"[{kind.upper()}]" if rules.action == "placeholder" else ""
        text = regex.sub(repl, text)
    if text == doc.text:
        return doc
    return Document(id=doc.id, text=text, source=doc.source, lang=doc.lang, meta=doc.meta)


def _dup_line_fraction(text: str) -> float:
    lines = [ln for ln in (l.strip() for l in text.split("\n")) if ln]
    if len(lines) < 2:
        return 0.0
    return 1.0 - len(set(lines)) / len(lines)


def _top_ngram_fraction(tokens: list, n: int = 3) -> float:
    if len(tokens) < n:
        return 0.0
    counts: dict = {}
    for i in range(len(tokens) - n + 1):
        g = tuple(tokens[i : i + n])
        counts[g] = counts.get(g, 0) + 1
    top = max(counts.values())
    if top < 2:  # a single occurrence is not repetition
        return 0.0
    return top * n / len(tokens)


def _symbol_ratio(text: str) -> float:
    if not text:
        return 0.0
    symbols = sum(1 for ch in text if not ch.isalnum() and not ch.isspace())
    return symbols / len(text)


def _ratio_subscore(actual: float, limit: float) -> float:
    if actual <= limit:
        return 1.0
    if actual <= 0:
        return 1.0
    return max(0.0, min(1.0, limit / actual))


def quality_filter(
    doc: Document, lm: Optional[NgramLM], th: QualityThresholds
) -> FilterVerdict:
    """keep=false iff any threshold is violated; the verdict records the
    perplexity and a composite score (product of per-check subscores)."""
    text = doc.text
    if not text.strip():
        return FilterVerdict(keep=False, reasons=["empty"], quality_score=0.0)

    reasons = []
    score = 1.0

    if len(text) < th.min_chars:
        reasons.append("too_short")
        score *= len(text) / th.min_chars

    dup = _dup_line_fraction(text)
    if dup > th.max_dup_line_fraction:
        reasons.append("dup_lines")
        score *= _ratio_subscore(dup, th.max_dup_line_fraction)

    tokens = tokenize_words(text)
    top = _top_ngram_fraction(tokens)
    if top > th.max_top_ngram_fraction:
        reasons.append("top_ngram")
        score *= _ratio_subscore(top, th.max_top_ngram_fraction)

    sym = _symbol_ratio(text)
    if sym > th.max_symbol_ratio:
        reasons.append("symbol_ratio")
        score *= _ratio_subscore(sym, th.max_symbol_ratio)

    ppl = None
    if lm is not None and th.max_perplexity is not None:
        try:
            ppl = lm.perplexity(text)
        except EmptyText:
            return FilterVerdict(keep=False, reasons=["empty"], quality_score=0.0)
        if ppl > th.max_perplexity:
            reasons.append("high_perplexity")
            score *= _ratio_subscore(ppl, th.max_perplexity)

    return FilterVerdict(keep=not reasons, reasons=reasons, quality_score=score, perplexity=ppl)


def percentile_threshold(perplexities: list, drop_top_fraction: float) -> float:
    """Absolute perplexity cutoff that drops the top fraction of a scored
    batch; requires the two-pass flow documented in the CLI."""
    if not perplexities:
        raise ValueError("no perplexities scored")
    if not 0.0 < drop_top_fraction < 1.0:
        raise ValueError("drop_top_fraction must be in (0, 1)")
    ordered = sorted(perplexities)
    idx = int(len(ordered) * (1.0 - drop_top_fraction))
    idx = min(max(idx - 1, 0), len(ordered) - 1)
    return ordered[idx]
