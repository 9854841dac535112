"""Deterministic synthetic corpora.

Fixtures are generated, not checked in: every function is a pure function of
its seed, so "bundled corpus" means "this generator at its default seed".
Word pools are sampled uniformly rather than Zipf-weighted; heavy-tailed
function words would dominate the shingle keyphrases and wash out the
dedup false-positive measurements.
"""

from __future__ import annotations

import random
from typing import Optional

from corpusforge.corpus import Document

DEFAULT_SEED = 20240801

_SYLLABLES = [
    "ka", "to", "mi", "ren", "sol", "var", "ne", "lor", "ti", "bas",
    "du", "mer", "qui", "san", "pel", "og", "ri", "tan", "ves", "um",
]

SOURCES = ("web", "news", "books", "academic", "code")
LANGS = ("en", "zh", "ja", "ko")


def _char_pool(start: int, n: int) -> list:
    return [chr(start + i) for i in range(n)]


ZH_POOL = _char_pool(0x4E00, 60)
JA_POOL = _char_pool(0x3041, 50)
KO_POOL = _char_pool(0xAC00, 60)


def word_pool(n: int, seed: int = 0) -> list:
    rng = random.Random(f"words:{seed}")
    pool = []
    seen = set()
    while len(pool) < n:
        w = "".join(rng.choice(_SYLLABLES) for _ in range(rng.randint(2, 4)))
        if w not in seen:
            seen.add(w)
            pool.append(w)
    return pool


def en_text(rng: random.Random, vocab: list, n_words: int) -> str:
    words = [rng.choice(vocab) for _ in range(n_words)]
    # sentence-ish shape: occasional period + capitalization
    out = []
    for i, w in enumerate(words):
        if i and rng.random() < 0.08:
            out[-1] += "."
        out.append(w)
    return " ".join(out)


def cjk_text(rng: random.Random, pool: list, n_chars: int) -> str:
    return "".join(rng.choice(pool) for _ in range(n_chars))


def _edit_tokens(rng: random.Random, text: str, edit_fraction: float, vocab: list) -> str:
    """Replace up to edit_fraction of tokens, at least one."""
    words = text.split(" ")
    k = max(1, round(len(words) * edit_fraction))
    for pos in rng.sample(range(len(words)), k):
        words[pos] = rng.choice(vocab)
    return " ".join(words)


def mini_corpus(n_docs: int = 5000, seed: int = DEFAULT_SEED) -> list:
    """Mixed-language, mildly messy corpus for pipeline runs: some HTML
    markup, stray fullwidth punctuation, exact and near duplicates."""
    rng = random.Random(f"mini:{seed}")
    vocab = word_pool(2500, seed)
    docs = []
    for i in range(n_docs):
        roll = rng.random()
        source = SOURCES[i % len(SOURCES)]
        if roll < 0.70:
            lang = "en"
            text = en_text(rng, vocab, rng.randint(40, 220))
        elif roll < 0.85:
            lang = "zh"
            text = cjk_text(rng, ZH_POOL, rng.randint(60, 200))
        elif roll < 0.90:
            lang = "ja"
            text = cjk_text(rng, JA_POOL, rng.randint(50, 160))
        elif roll < 0.95:
            lang = "ko"
            text = cjk_text(rng, KO_POOL, rng.randint(50, 160))
        else:
            lang = "en"
            body = en_text(rng, vocab, rng.randint(30, 120))
            text = f"<html><p>{body}</p><!-- footer -->&amp; more</html>"
        if rng.random() < 0.02 and docs:  # exact duplicate of an earlier doc
            text = docs[rng.randrange(len(docs))].text
        elif rng.random() < 0.02 and lang == "en":
            text = _edit_tokens(rng, text, 0.02, vocab)
        docs.append(Document(id=f"doc-{i:06d}", text=text, source=source, lang=lang))
    return docs


def dedup_corpus(n_base: int = 4000, n_pairs: int = 500, seed: int = DEFAULT_SEED):
    """(docs, dup_of): n_base + n_pairs docs where each planted near-dup has
    at most 2% of its tokens edited; dup_of maps planted id -> partner id.
    The returned order is a seeded shuffle of originals and duplicates."""
    rng = random.Random(f"dedup:{seed}")
    vocab = word_pool(2000, seed)
    originals = []
    for i in range(n_base):
        n = rng.randint(150, 260)
        originals.append(Document(
            id=f"base-{i:05d}",
            text=" ".join(rng.choice(vocab) for _ in range(n)),
            source="web", lang="en",
        ))
    dup_of = {}
    dups = []
    chosen = rng.sample(range(n_base), n_pairs)
    for j, idx in enumerate(chosen):
        partner = originals[idx]
        text = _edit_tokens(rng, partner.text, rng.choice((0.005, 0.01, 0.02)), vocab)
        d = Document(id=f"dup-{j:05d}", text=text, source="web", lang="en")
        dup_of[d.id] = partner.id
        dups.append(d)
    docs = originals + dups
    rng.shuffle(docs)
    return docs, dup_of


def multilingual_corpus(seed: int = DEFAULT_SEED, docs_per_lang: int = 120) -> list:
    """Per-language corpus with small symbol pools so larger BPE vocabularies
    keep finding useful merges (the compression-ratio testbed)."""
    rng = random.Random(f"multi:{seed}")
    vocab = word_pool(400, seed)
    docs = []
    for i in range(docs_per_lang):
        docs.append(Document(id=f"en-{i:04d}", text=en_text(rng, vocab, rng.randint(60, 120)),
                             source="web", lang="en"))
    for lang, pool in (("zh", ZH_POOL), ("ja", JA_POOL), ("ko", KO_POOL)):
        for i in range(docs_per_lang):
            docs.append(Document(id=f"{lang}-{i:04d}",
                                 text=cjk_text(rng, pool, rng.randint(80, 200)),
                                 source="web", lang=lang))
    return docs


def contam_corpora(seed: int = DEFAULT_SEED):
    """(train, unseen, evalsets): all three drawn fresh from one vocabulary,
    so a scorer trained on `train` alone treats unseen and eval text alike."""
    rng = random.Random(f"contam:{seed}")
    vocab = word_pool(300, seed)
    mk = lambda prefix, n_docs, lo, hi: [
        Document(id=f"{prefix}-{i:04d}",
                 text=" ".join(rng.choice(vocab) for _ in range(rng.randint(lo, hi))),
                 source="web", lang="en")
        for i in range(n_docs)
    ]
    train = mk("train", 400, 25, 45)
    unseen = mk("unseen", 80, 20, 40)
    evalsets = {"qa": mk("qa", 60, 18, 36), "exam": mk("exam", 60, 18, 36)}
    return train, unseen, evalsets
