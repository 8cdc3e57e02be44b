"""Intent routing: LawQuestion / LawSearch / CaseSearch / General.

Two interchangeable models:

- rules (default): citation patterns catch statute lookups, a case-cue
  lexicon catches case searches, a legal-term lexicon catches substantive
  questions, everything else is General. First match in the fixed priority
  LawSearch > CaseSearch > LawQuestion > General wins. Predictable, no
  training data needed.
- linear: multinomial logistic regression over hashed token unigram+bigram
  features, trained by seeded mini-batch gradient descent. Used once an
  operator has labeled traffic to train on.

Trained models serialize with magic "DLRM". Lexicons and patterns are
plain UTF-8 line files (one entry per line, '#' comments) so operators can
edit routing behavior without code changes.
"""

from __future__ import annotations

import re
import struct
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

import numpy as np

from .analysis import AnalyzerConfig, normalize, token_surfaces
from .errors import (
    BadHyperparameter,
    EmptyMessage,
    FormatError,
    MissingClass,
)
from .hashing import ROUTER_FEATURE_NS, stable_hash64

_MAGIC = b"DLRM"
_VERSION = 1


class Intent(str, Enum):
    LAW_QUESTION = "LawQuestion"
    LAW_SEARCH = "LawSearch"
    CASE_SEARCH = "CaseSearch"
    GENERAL = "General"


INTENTS: tuple[Intent, ...] = tuple(Intent)
_CLASS_INDEX = {intent: i for i, intent in enumerate(INTENTS)}

# Tie-break / rule-priority order.
PRIORITY: tuple[Intent, ...] = (
    Intent.LAW_SEARCH,
    Intent.CASE_SEARCH,
    Intent.LAW_QUESTION,
    Intent.GENERAL,
)

# Features are analyzed with stopwords kept: function words carry intent
# signal ("what can i do", "give me cases").
_FEATURE_ANALYZER = AnalyzerConfig(stopwords=frozenset(), emit_cjk_unigrams=False)

_CJK_RE = re.compile(r"[㐀-䶿一-鿿]")


def _read_lines(name: str) -> list[str]:
    data = resources.files("lawdesk.data").joinpath(name).read_text("utf-8")
    out = []
    for line in data.splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            out.append(line)
    return out


def load_term_file(path: str) -> list[str]:
    """UTF-8, one term per line, '#' lines ignored."""
    with open(path, encoding="utf-8") as fh:
        return [ln.strip() for ln in fh if ln.strip() and not ln.strip().startswith("#")]


@dataclass(frozen=True)
class RuleTables:
    law_name_patterns: tuple[re.Pattern, ...]
    article_patterns: tuple[re.Pattern, ...]
    case_cues: tuple[str, ...]
    legal_terms: tuple[str, ...]

    @classmethod
    def builtin(cls) -> "RuleTables":
        return cls.from_lines(
            _read_lines("law_name_patterns.txt"),
            _read_lines("article_patterns.txt"),
            _read_lines("case_cues.txt"),
            _read_lines("legal_terms.txt"),
        )

    @classmethod
    def from_lines(
        cls,
        law_name_patterns: list[str],
        article_patterns: list[str],
        case_cues: list[str],
        legal_terms: list[str],
    ) -> "RuleTables":
        return cls(
            law_name_patterns=tuple(re.compile(p) for p in law_name_patterns),
            article_patterns=tuple(re.compile(p) for p in article_patterns),
            case_cues=tuple(normalize(t) for t in case_cues),
            legal_terms=tuple(normalize(t) for t in legal_terms),
        )


def _term_present(term: str, norm_message: str, tokens: frozenset[str]) -> bool:
    # CJK cues and multi-word phrases match as substrings; single Latin
    # words match whole tokens so "law" does not fire inside "lawn".
    if _CJK_RE.search(term) or " " in term:
        return term in norm_message
    return term in tokens


class RulesRouter:
    """Deterministic priority-rule classifier; emits one-hot scores."""

    kind = "rules"

    def __init__(self, tables: RuleTables | None = None):
        self.tables = tables if tables is not None else RuleTables.builtin()

    def classify(self, message: str) -> tuple[Intent, np.ndarray]:
        norm = normalize(message)
        if not norm:
            raise EmptyMessage("cannot classify an empty message")
        tokens = frozenset(token_surfaces(norm, _FEATURE_ANALYZER))
        intent = self._match(norm, tokens)
        scores = np.zeros(len(INTENTS), dtype=np.float64)
        scores[_CLASS_INDEX[intent]] = 1.0
        return intent, scores

    def _match(self, norm: str, tokens: frozenset[str]) -> Intent:
        has_law_name = any(p.search(norm) for p in self.tables.law_name_patterns)
        has_article = any(p.search(norm) for p in self.tables.article_patterns)
        if has_law_name and has_article:
            return Intent.LAW_SEARCH
        if any(_term_present(c, norm, tokens) for c in self.tables.case_cues):
            return Intent.CASE_SEARCH
        if any(_term_present(t, norm, tokens) for t in self.tables.legal_terms):
            return Intent.LAW_QUESTION
        return Intent.GENERAL


# --- trainable linear model ---

def featurize(message: str, buckets: int) -> dict[int, float]:
    """Hashed counts of token unigrams and adjacent bigrams."""
    surfaces = token_surfaces(message, _FEATURE_ANALYZER)
    feats: dict[int, float] = {}
    grams = surfaces + [a + "\x1f" + b for a, b in zip(surfaces, surfaces[1:])]
    for gram in grams:
        idx = stable_hash64(gram, ROUTER_FEATURE_NS) % buckets
        feats[idx] = feats.get(idx, 0.0) + 1.0
    return feats


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


@dataclass
class LinearRouter:
    """Softmax classifier over hashed n-gram features."""

    kind = "linear"

    buckets: int
    weights: np.ndarray  # (4, buckets)
    bias: np.ndarray  # (4,)
    epoch_losses: list[float] = field(default_factory=list)

    def classify(self, message: str) -> tuple[Intent, np.ndarray]:
        if not normalize(message):
            raise EmptyMessage("cannot classify an empty message")
        feats = featurize(message, self.buckets)
        logits = self.bias.copy()
        for idx, value in feats.items():
            logits += self.weights[:, idx] * value
        scores = _softmax(logits)
        best = scores.max()
        # Argmax with ties resolved in rule-priority order.
        for intent in PRIORITY:
            if scores[_CLASS_INDEX[intent]] == best:
                return intent, scores
        raise AssertionError("unreachable")

    def save(self, path: str) -> None:
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(struct.pack("<III", _VERSION, self.buckets, len(INTENTS)))
            fh.write(self.bias.astype("<f8").tobytes())
            fh.write(np.ascontiguousarray(self.weights, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path: str) -> "LinearRouter":
        with open(path, "rb") as fh:
            blob = fh.read()
        if len(blob) < 16 or blob[:4] != _MAGIC:
            raise FormatError("bad magic; not a router model file")
        version, buckets, n_classes = struct.unpack_from("<III", blob, 4)
        if version != _VERSION:
            raise FormatError(f"unsupported model version {version}")
        if n_classes != len(INTENTS):
            raise FormatError(f"model has {n_classes} classes, expected {len(INTENTS)}")
        expected = 16 + 8 * n_classes + 8 * n_classes * buckets
        if len(blob) != expected:
            raise FormatError("model payload size mismatch")
        bias = np.frombuffer(blob, dtype="<f8", count=n_classes, offset=16).copy()
        weights = np.frombuffer(
            blob, dtype="<f8", count=n_classes * buckets, offset=16 + 8 * n_classes
        ).reshape(n_classes, buckets).copy()
        return cls(buckets=buckets, weights=weights, bias=bias)


def train_linear(
    examples: list[tuple[str, Intent]],
    epochs: int = 30,
    lr: float = 0.5,
    seed: int = 0,
    buckets: int = 1 << 14,
    batch_size: int = 32,
) -> LinearRouter:
    """Train the softmax router with seeded mini-batch gradient descent.

    Deterministic: the same examples, hyperparameters, and seed reproduce
    bit-identical weights. Epoch-end training losses are recorded on the
    returned model.
    """
    if lr <= 0:
        raise BadHyperparameter("learning rate must be > 0")
    if epochs < 1:
        raise BadHyperparameter("epochs must be >= 1")
    if batch_size < 1:
        raise BadHyperparameter("batch_size must be >= 1")
    if buckets < (1 << 10):
        raise BadHyperparameter("feature space must have at least 2**10 buckets")
    seen = {intent for _, intent in examples}
    missing = [i.value for i in INTENTS if i not in seen]
    if missing:
        raise MissingClass(f"no training examples for: {', '.join(missing)}")

    feats = [featurize(msg, buckets) for msg, _ in examples]
    labels = np.array([_CLASS_INDEX[intent] for _, intent in examples], dtype=np.int64)
    n = len(examples)

    weights = np.zeros((len(INTENTS), buckets), dtype=np.float64)
    bias = np.zeros(len(INTENTS), dtype=np.float64)
    rng = np.random.default_rng(seed)
    losses: list[float] = []

    def batch_matrix(idxs: np.ndarray) -> np.ndarray:
        x = np.zeros((len(idxs), buckets), dtype=np.float64)
        for row, i in enumerate(idxs):
            for col, value in feats[i].items():
                x[row, col] = value
        return x

    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            idxs = order[start : start + batch_size]
            x = batch_matrix(idxs)
            y = labels[idxs]
            probs = _softmax(x @ weights.T + bias)
            probs[np.arange(len(idxs)), y] -= 1.0
            grad_w = probs.T @ x / len(idxs)
            grad_b = probs.mean(axis=0)
            weights -= lr * grad_w
            bias -= lr * grad_b
        full = _softmax(batch_matrix(np.arange(n)) @ weights.T + bias)
        losses.append(float(-np.log(np.clip(full[np.arange(n), labels], 1e-300, None)).mean()))

    return LinearRouter(buckets=buckets, weights=weights, bias=bias, epoch_losses=losses)


# --- evaluation ---

@dataclass(frozen=True)
class RouterReport:
    per_class: dict[str, float]
    per_class_counts: dict[str, tuple[int, int]]  # correct, total
    macro_accuracy: float
    n_examples: int


def eval_router(model, labeled: list[tuple[str, Intent]]) -> RouterReport:
    """Per-gold-class accuracy plus the macro average."""
    if not labeled:
        raise ValueError("labeled set must be non-empty")
    correct = {intent: 0 for intent in INTENTS}
    total = {intent: 0 for intent in INTENTS}
    for message, gold in labeled:
        total[gold] += 1
        predicted, _ = model.classify(message)
        if predicted == gold:
            correct[gold] += 1
    per_class = {
        intent.value: (correct[intent] / total[intent]) if total[intent] else 0.0
        for intent in INTENTS
    }
    present = [intent for intent in INTENTS if total[intent]]
    macro = sum(per_class[i.value] for i in present) / len(present)
    return RouterReport(
        per_class=per_class,
        per_class_counts={i.value: (correct[i], total[i]) for i in INTENTS},
        macro_accuracy=macro,
        n_examples=len(labeled),
    )
