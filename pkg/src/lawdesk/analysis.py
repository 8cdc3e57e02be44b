"""Normalization and tokenization for mixed Chinese/English text.

Segmenter-free: CJK runs are broken into overlapping character bigrams
(plus unigrams when configured), Latin/digit runs split on anything
non-alphanumeric. Both indexes, the keyword extractor, and the router's
feature hashing share this analyzer, so it must stay deterministic.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass, field
from importlib import resources
from typing import Iterable, NamedTuple

CJK_BIGRAM = "cjk_bigram"
CJK_UNIGRAM = "cjk_unigram"
LATIN_WORD = "latin_word"
NUMBER = "number"


class Token(NamedTuple):
    surface: str
    kind: str


# Full-width ASCII block (U+FF01..U+FF5E) to half-width, plus the
# ideographic space.
_FULLWIDTH_TABLE = str.maketrans(
    {cp: cp - 0xFEE0 for cp in range(0xFF01, 0xFF5F)} | {0x3000: 0x20}
)

# CJK Unified Ideographs, Extension A/B, and compatibility block.
_RUN_RE = re.compile(
    r"(?P<cjk>[㐀-䶿一-鿿豈-﫿\U00020000-\U0002a6df]+)"
    r"|(?P<word>[a-z0-9]+)"
)

_DIGITS_RE = re.compile(r"[0-9]+$")


def normalize(text: str) -> str:
    """Map full-width ASCII to half-width, lowercase, collapse whitespace.

    Total and idempotent: `normalize(normalize(x)) == normalize(x)`.
    """
    return " ".join(text.translate(_FULLWIDTH_TABLE).lower().split())


def _load_builtin_stopwords() -> frozenset[str]:
    terms: set[str] = set()
    for name in ("stopwords_zh.txt", "stopwords_en.txt"):
        data = resources.files("lawdesk.data").joinpath(name).read_text("utf-8")
        terms.update(_parse_stopword_lines(data.splitlines()))
    return frozenset(terms)


def _parse_stopword_lines(lines: Iterable[str]) -> set[str]:
    out: set[str] = set()
    for line in lines:
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        out.add(normalize(line))
    return out


def load_stopwords(path: str) -> frozenset[str]:
    """Read a stopword file: UTF-8, one term per line, '#' lines ignored."""
    with open(path, encoding="utf-8") as fh:
        return frozenset(_parse_stopword_lines(fh))


def default_stopwords() -> frozenset[str]:
    return _load_builtin_stopwords()


@dataclass(frozen=True)
class AnalyzerConfig:
    """Tokenizer settings. Stopwords are matched after normalization."""

    stopwords: frozenset[str] = field(default_factory=_load_builtin_stopwords)
    emit_cjk_unigrams: bool = False
    min_latin_len: int = 1

    def __post_init__(self) -> None:
        if self.min_latin_len < 1:
            raise ValueError("min_latin_len must be >= 1")


def tokenize(text: str, cfg: AnalyzerConfig | None = None) -> list[Token]:
    """Tokenize `text`, normalizing first.

    CJK runs emit overlapping bigrams in reading order (unigrams too when
    `emit_cjk_unigrams`; a length-1 run always falls back to its unigram so
    a lone ideograph is never silently dropped). Latin/digit runs become
    lowercase words of length >= `min_latin_len`; all-digit words are
    `number` tokens. Stopwords are removed last.
    """
    if cfg is None:
        cfg = AnalyzerConfig()
    norm = normalize(text)
    out: list[Token] = []
    for m in _RUN_RE.finditer(norm):
        run = m.group()
        if m.lastgroup == "cjk":
            _emit_cjk_run(run, cfg, out)
        else:
            _emit_word(run, cfg, out)
    if cfg.stopwords:
        out = [t for t in out if t.surface not in cfg.stopwords]
    return out


def _emit_cjk_run(run: str, cfg: AnalyzerConfig, out: list[Token]) -> None:
    if len(run) == 1:
        out.append(Token(run, CJK_UNIGRAM))
        return
    for i in range(len(run)):
        if cfg.emit_cjk_unigrams:
            out.append(Token(run[i], CJK_UNIGRAM))
        if i + 1 < len(run):
            out.append(Token(run[i : i + 2], CJK_BIGRAM))


def _emit_word(word: str, cfg: AnalyzerConfig, out: list[Token]) -> None:
    if _DIGITS_RE.fullmatch(word):
        out.append(Token(word, NUMBER))
    elif len(word) >= cfg.min_latin_len:
        out.append(Token(word, LATIN_WORD))


def token_surfaces(text: str, cfg: AnalyzerConfig | None = None) -> list[str]:
    return [t.surface for t in tokenize(text, cfg)]


def term_counts(tokens: Iterable[Token]) -> Counter[str]:
    """Multiset count of token surfaces."""
    return Counter(t.surface for t in tokens)
