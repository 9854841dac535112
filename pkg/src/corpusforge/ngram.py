"""Word-level n-gram language model with interpolated absolute discounting.

Used as the perplexity gate for quality filtering and as the default loss
scorer for the contamination analyzer. All log quantities are natural-log.

Smoothing: at each order the observed counts are discounted by a constant D
and the freed mass is interpolated with the next-lower order, bottoming out
at a uniform distribution over the prediction vocabulary (seen types + UNK +
the end-of-document token). This guarantees p(token|context) > 0 everywhere
and that each conditional distribution sums to 1.

UNK receives a pseudo unigram count equal to the number of singleton types in
the training corpus (a leave-one-out style estimate of unseen-word mass);
singletons themselves stay in the vocabulary.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from typing import Iterable

from corpusforge.corpus import Document
from corpusforge.errors import EmptyCorpus, EmptyText, ModelFormatError

MAGIC = "corpusforge-ngram"
VERSION = 1
DEFAULT_ORDER = 3
DEFAULT_DISCOUNT = 0.75

UNK_ID = 0
BOS_ID = 1
EOS_ID = 2
_FIRST_WORD_ID = 3

# Scriptio-continua ranges tokenized one codepoint at a time: kana, Han
# (incl. extensions), Hangul syllables, CJK punctuation.
_CJK_RANGES = (
    (0x3001, 0x303F),
    (0x3040, 0x30FF),
    (0x3400, 0x4DBF),
    (0x4E00, 0x9FFF),
    (0xAC00, 0xD7A3),
    (0xF900, 0xFAFF),
    (0x20000, 0x2FA1F),
)


def _is_cjk(cp: int) -> bool:
    for lo, hi in _CJK_RANGES:
        if lo <= cp <= hi:
            return True
    return False


def tokenize_words(text: str) -> list[str]:
    """Whitespace tokenization with per-codepoint CJK splitting and ASCII
    lowercasing."""
    tokens: list[str] = []
    word: list[str] = []
    for ch in text:
        if ch.isspace() or ch == "\x00":
            if word:
                tokens.append("".join(word))
                word = []
        elif _is_cjk(ord(ch)):
            if word:
                tokens.append("".join(word))
                word = []
            tokens.append(ch)
        else:
            word.append(ch.lower() if "A" <= ch <= "Z" else ch)
    if word:
        tokens.append("".join(word))
    return tokens


@dataclass
class ScoredText:
    token_count: int  # scored events, including the end-of-document token
    total_nll: float
    mean_nll: float
    perplexity: float


class NgramLM:
    def __init__(self, order: int, discount: float = DEFAULT_DISCOUNT):
        if not 1 <= order <= 5:
            raise ValueError("order must be in 1..5")
        self.order = order
        self.discount = discount
        self.vocab: dict[str, int] = {}  # real word types only
        self.unk_id = UNK_ID
        # grams[k] maps a k-tuple of ids (context + predicted token) to its
        # count; contexts may contain BOS, predicted tokens never do.
        self.grams: list[dict] = [dict() for _ in range(order + 1)]
        self._ctx_total: list[dict] = [dict() for _ in range(order + 1)]
        self._ctx_distinct: list[dict] = [dict() for _ in range(order + 1)]

    # -- training ----------------------------------------------------------

    @classmethod
    def train(
        cls,
        corpus: Iterable[Document],
        order: int = DEFAULT_ORDER,
        discount: float = DEFAULT_DISCOUNT,
    ) -> "NgramLM":
        token_docs = [tokenize_words(doc.text) for doc in corpus]
        if not token_docs:
            raise EmptyCorpus("n-gram training corpus is empty")
        model = cls(order, discount)

        word_freq: dict[str, int] = {}
        for tokens in token_docs:
            for t in tokens:
                word_freq[t] = word_freq.get(t, 0) + 1
        model.vocab = {t: i for i, t in enumerate(sorted(word_freq), start=_FIRST_WORD_ID)}
        singletons = sum(1 for c in word_freq.values() if c == 1)
        if singletons:
            model.grams[1][(UNK_ID,)] = singletons

        n = order
        for tokens in token_docs:
            stream = [BOS_ID] * (n - 1) + [model.vocab[t] for t in tokens] + [EOS_ID]
            for i in range(n - 1, len(stream)):
                for k in range(1, n + 1):
                    gram = tuple(stream[i - k + 1 : i + 1])
                    tab = model.grams[k]
                    tab[gram] = tab.get(gram, 0) + 1
        model._finalize()
        return model

    def _finalize(self) -> None:
        for k in range(1, self.order + 1):
            totals: dict = {}
            distinct: dict = {}
            for gram, count in self.grams[k].items():
                ctx = gram[:-1]
                totals[ctx] = totals.get(ctx, 0) + count
                distinct[ctx] = distinct.get(ctx, 0) + 1
            self._ctx_total[k] = totals
            self._ctx_distinct[k] = distinct

    # -- probabilities -----------------------------------------------------

    @property
    def prediction_vocab_size(self) -> int:
        # real types + UNK + EOS; BOS is context-only
        return len(self.vocab) + 2

    def prob(self, token_id: int, context: tuple) -> float:
        return self._prob(self.order, tuple(context[-(self.order - 1) :]) if self.order > 1 else (), token_id)

    def _prob(self, k: int, ctx: tuple, token_id: int) -> float:
        if k == 0:
            return 1.0 / self.prediction_vocab_size
        total = self._ctx_total[k].get(ctx, 0)
        if total == 0:
            return self._prob(k - 1, ctx[1:], token_id)
        count = self.grams[k].get(ctx + (token_id,), 0)
        d = self.discount
        lower = self._prob(k - 1, ctx[1:], token_id)
        return max(count - d, 0.0) / total + d * self._ctx_distinct[k][ctx] / total * lower

    def token_ids(self, tokens: list[str]) -> list[int]:
        return [self.vocab.get(t, UNK_ID) for t in tokens]

    def score(self, text: str) -> ScoredText:
        tokens = tokenize_words(text)
        if not tokens:
            raise EmptyText("cannot score a text with no tokens")
        n = self.order
        stream = [BOS_ID] * (n - 1) + self.token_ids(tokens) + [EOS_ID]
        total_nll = 0.0
        for i in range(n - 1, len(stream)):
            ctx = tuple(stream[i - n + 1 : i])
            total_nll -= math.log(self._prob(n, ctx, stream[i]))
        events = len(tokens) + 1
        mean = total_nll / events
        return ScoredText(
            token_count=events,
            total_nll=total_nll,
            mean_nll=mean,
            perplexity=math.exp(mean),
        )

    def perplexity(self, text: str) -> float:
        return self.score(text).perplexity

    # -- serialization -----------------------------------------------------

    def save(self, path: str) -> None:
        payload = {
            "magic": MAGIC,
            "version": VERSION,
            "order": self.order,
            "discount": self.discount,
            "tokens": sorted(self.vocab),
            "grams": {
                str(k): {" ".join(map(str, gram)): c for gram, c in sorted(self.grams[k].items())}
                for k in range(1, self.order + 1)
            },
        }
        parent = os.path.dirname(path)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, ensure_ascii=False)

    @classmethod
    def load(cls, path: str) -> "NgramLM":
        with open(path, encoding="utf-8") as fh:
            payload = json.load(fh)
        if payload.get("magic") != MAGIC:
            raise ModelFormatError(f"{path}: not a corpusforge n-gram model")
        if payload.get("version") != VERSION:
            raise ModelFormatError(f"{path}: unsupported model version {payload.get('version')}")
        model = cls(payload["order"], payload["discount"])
        model.vocab = {t: i for i, t in enumerate(payload["tokens"], start=_FIRST_WORD_ID)}
        for k_str, table in payload["grams"].items():
            k = int(k_str)
            model.grams[k] = {tuple(map(int, key.split())): c for key, c in table.items()}
        model._finalize()
        return model
