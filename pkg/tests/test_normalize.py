import pytest
from hypothesis import given, strategies as st

from corpusforge.corpus import Document
from corpusforge.errors import RegexCompileError
from corpusforge.normalize import NormalizeConfig, normalize, normalize_text

CFG = NormalizeConfig()


def n(text, lang="en", cfg=CFG):
    return normalize_text(text, cfg, lang=lang)


def test_tag_stripping():
    assert n("<p>Hello <b>world</b></p>") == "Hello world"
    assert n("before <!-- note --> after") == "before after"
    assert n("<script>var x = '<p>';</script>keep") == "keep"
    assert n("<style type='text/css'>a { color: red }</style>keep") == "keep"


def test_entity_unescape_and_uncovered_tags():
    assert n("a &amp; b") == "a & b"
    # entity-encoded markup must not survive as markup
    assert n("&lt;script&gt;alert(1)&lt;/script&gt;x") == "x"


def test_unclosed_fragments_removed():
    assert n("text <div class='x") == "text"
    assert n("<script>never closed") == ""


def test_whitespace_collapse():
    assert n("a\t\t b\r\ncc  \n\n\n\nd ") == "a b\ncc\n\nd"
    assert n("  \n \n ") == ""


def test_nfc_composition():
    # e + combining acute -> precomposed
    assert n("café") == "café"


def test_fullwidth_folding_is_cjk_only():
    assert n("ＡＢＣ！　ｄ", lang="zh") == "ABC! d"
    assert n("ＡＢＣ！", lang="en") == "ＡＢＣ！"


def test_custom_patterns_applied_in_order():
    cfg = NormalizeConfig(custom_patterns=[(r"\d+", "N"), ("NN", "M")])
    assert normalize_text("a 12 34", cfg) == "a N N"
    cfg = NormalizeConfig(custom_patterns=[("NN", "M"), (r"\d+", "N")])
    assert normalize_text("aNN 12", cfg) == "aM N"


def test_bad_pattern_raises_at_construction():
    with pytest.raises(RegexCompileError):
        NormalizeConfig(custom_patterns=[("(unclosed", "")])


def test_document_fields_preserved():
    doc = Document(id="d1", text=" <p>x</p> ", source="web", lang="en", meta={"a": 1})
    out = normalize(doc, CFG)
    assert (out.id, out.source, out.lang, out.meta) == ("d1", "web", "en", {"a": 1})
    assert out.text == "x"
    assert doc.text == " <p>x</p> "  # input untouched


@given(st.text(max_size=300))
def test_idempotent(text):
    once = n(text)
    assert n(once) == once


@given(st.text(max_size=300))
def test_idempotent_zh(text):
    once = n(text, lang="zh")
    assert n(once, lang="zh") == once


@given(st.text(alphabet="ab <>/&;pc!-", max_size=120))
def test_markup_soup_never_leaves_tags(text):
    out = n(text)
    assert "<p>" not in out and "<!--" not in out
