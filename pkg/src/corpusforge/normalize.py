"""Markup and format-noise stripping for raw text.

normalize() is a pure function of (document, config) and is idempotent for
the built-in steps; custom patterns are applied once, in order, and must be
idempotent themselves if the caller relies on re-running the stage.
"""

from __future__ import annotations

import html
import re
import unicodedata
from dataclasses import dataclass, field

from corpusforge.corpus import Document
from corpusforge.errors import RegexCompileError

_SCRIPT_STYLE = re.compile(r"<(script|style)\b[^>]*>.*?</\1\s*>", re.IGNORECASE | re.DOTALL)
_UNCLOSED_SCRIPT_STYLE = re.compile(r"<(script|style)\b[^>]*>.*\Z", re.IGNORECASE | re.DOTALL)
_COMMENT = re.compile(r"<!--.*?-->", re.DOTALL)
_TAG = re.compile(r"</?[a-zA-Z!][^>]*>")
# Unclosed tag fragment: "<" plus a tag-ish start, running to the next angle
# bracket or end of text.
_TAG_FRAGMENT = re.compile(r"<[a-zA-Z!/][^<>]*")
_INLINE_WS = re.compile(r"[^\S\n]+")
_MANY_NEWLINES = re.compile(r"\n{3,}")

# Fullwidth ASCII block (U+FF01..U+FF5E) plus the ideographic space.
_FULLWIDTH = {i: i - 0xFF01 + 0x21 for i in range(0xFF01, 0xFF5F)}
_FULLWIDTH[0x3000] = 0x20

_MAX_PASSES = 16


def compile_patterns(patterns) -> list:
    """Compile (regex, replacement) pairs, raising RegexCompileError early."""
    compiled = []
    for pattern, repl in patterns:
        try:
            compiled.append((re.compile(pattern), repl))
        except re.error as exc:
            raise RegexCompileError(pattern, str(exc)) from exc
    return compiled


@dataclass
class NormalizeConfig:
    strip_html: bool = True
    collapse_whitespace: bool = True
    unicode_nfc: bool = True
    custom_patterns: list = field(default_factory=list)

    def __post_init__(self):
        self._compiled = compile_patterns(self.custom_patterns)


def _strip_html_pass(text: str) -> str:
    text = _SCRIPT_STYLE.sub("", text)
    text = _UNCLOSED_SCRIPT_STYLE.sub("", text)
    text = _COMMENT.sub("", text)
    text = _TAG.sub("", text)
    text = _TAG_FRAGMENT.sub("", text)
    # Entities last: anything they uncover is caught by the next fixpoint pass.
    return html.unescape(text)


def _collapse_whitespace(text: str) -> str:
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    lines = [_INLINE_WS.sub(" ", line).strip() for line in text.split("\n")]
    text = "\n".join(lines)
    text = _MANY_NEWLINES.sub("\n\n", text)
    return text.strip()


def normalize_text(text: str, cfg: NormalizeConfig, lang: str = "") -> str:
    fold = cfg.unicode_nfc and (lang.startswith("zh") or lang.startswith("ja"))
    # Folding, NFC and HTML stripping interact (entities can uncover tags,
    # fullwidth brackets fold into real ones), so iterate them to a fixpoint.
    for _ in range(_MAX_PASSES):
        prev = text
        if fold:
            text = text.translate(_FULLWIDTH)
        if cfg.unicode_nfc:
            text = unicodedata.normalize("NFC", text)
        if cfg.strip_html:
            text = _strip_html_pass(text)
        if text == prev:
            break
    for regex, repl in cfg._compiled:
        text = regex.sub(repl, text)
    if cfg.collapse_whitespace:
        text = _collapse_whitespace(text)
    return text


def normalize(doc: Document, cfg: NormalizeConfig) -> Document:
    """Return a copy of doc with cleaned text; id/source/lang/meta unchanged."""
    return Document(
        id=doc.id,
        text=normalize_text(doc.text, cfg, lang=doc.lang),
        source=doc.source,
        lang=doc.lang,
        meta=doc.meta,
    )
