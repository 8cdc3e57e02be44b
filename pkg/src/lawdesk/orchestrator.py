"""Per-turn inference: route, retrieve, prompt, generate.

The routing table is fixed:

    General     -> generator only (no retrieval)
    CaseSearch  -> case retriever only, results returned directly
    LawSearch   -> law retriever only, results returned directly
    LawQuestion -> law retriever, then generator over a prompt that embeds
                   the retrieved provisions

A LawQuestion that retrieves nothing falls back to the General path with a
disclaimer flag on the turn; the system never fabricates citations.
Statute ids travel through prompts and answers inside square brackets, so
citation grounding can be checked mechanically.
"""

from __future__ import annotations

import re
import string
import threading
import time
import uuid
from dataclasses import dataclass, field

import requests

from .errors import EmptyMessage, GeneratorUnavailable, BadResponse, TemplateError
from .retrieval import CaseDoc, CaseRetriever, LawRetriever, Statute
from .router import Intent

DEFAULT_HISTORY_WINDOW = 4

_CITATION_RE = re.compile(r"\[([A-Za-z0-9_.:\-]+)\]")

_SECTION_NAMES = ("system", "law_block", "history", "question")
_ALLOWED_FIELDS = {
    "law_block": {"id", "law_name", "article_no", "text"},
    "history": {"role", "text"},
    "question": {"question"},
}


def extract_citation_ids(answer: str) -> list[str]:
    """Bracketed ids in an answer, in first-appearance order."""
    seen = []
    for match in _CITATION_RE.findall(answer):
        if match not in seen:
            seen.append(match)
    return seen


def _check_fields(template: str, section: str) -> None:
    allowed = _ALLOWED_FIELDS[section]
    for _, fname, _, _ in string.Formatter().parse(template):
        if fname is None:
            continue
        if fname not in allowed:
            raise TemplateError(
                f"unknown placeholder {{{fname}}} in {section} "
                f"(allowed: {', '.join(sorted(allowed))})"
            )


@dataclass(frozen=True)
class PromptTemplate:
    """Prompt skeleton: system text, a per-statute block, history lines,
    and the question line. Zero statutes render no law block at all."""

    system_text: str
    law_block_format: str = "[{id}] {law_name} {article_no}: {text}"
    history_line_format: str = "{role}: {text}"
    question_format: str = "Question: {question}"
    history_window: int = DEFAULT_HISTORY_WINDOW

    def __post_init__(self) -> None:
        _check_fields(self.law_block_format, "law_block")
        _check_fields(self.history_line_format, "history")
        _check_fields(self.question_format, "question")

    @classmethod
    def from_file(cls, path: str, history_window: int = DEFAULT_HISTORY_WINDOW) -> "PromptTemplate":
        """Parse a sectioned template file ([system] / [law_block] /
        [history] / [question] headers, each on its own line)."""
        with open(path, encoding="utf-8") as fh:
            return cls.from_text(fh.read(), history_window=history_window)

    @classmethod
    def from_text(cls, text: str, history_window: int = DEFAULT_HISTORY_WINDOW) -> "PromptTemplate":
        sections: dict[str, list[str]] = {name: [] for name in _SECTION_NAMES}
        current: str | None = None
        for line in text.splitlines():
            stripped = line.strip()
            if stripped.startswith("[") and stripped.endswith("]") and stripped[1:-1] in _SECTION_NAMES:
                current = stripped[1:-1]
                continue
            if current is not None:
                sections[current].append(line)
        def joined(name: str) -> str:
            return "\n".join(sections[name]).strip()
        if not joined("system"):
            raise TemplateError("template file has no [system] section")
        kwargs = {}
        if joined("law_block"):
            kwargs["law_block_format"] = joined("law_block")
        if joined("history"):
            kwargs["history_line_format"] = joined("history")
        if joined("question"):
            kwargs["question_format"] = joined("question")
        return cls(system_text=joined("system"), history_window=history_window, **kwargs)

    @classmethod
    def builtin(cls, history_window: int = DEFAULT_HISTORY_WINDOW) -> "PromptTemplate":
        from importlib import resources

        text = resources.files("lawdesk.data").joinpath("prompt_default.txt").read_text("utf-8")
        return cls.from_text(text, history_window=history_window)


def render_prompt(
    template: PromptTemplate,
    statutes: list[Statute],
    question: str,
    history: list["ChatTurn"] | None = None,
) -> str:
    """Deterministic prompt: system text, law blocks in retrieval order,
    the last `history_window` turns, then the question."""
    parts = [template.system_text]
    if statutes:
        blocks = [
            template.law_block_format.format(
                id=s.id, law_name=s.law_name, article_no=s.article_no, text=s.text
            )
            for s in statutes
        ]
        parts.append("\n".join(blocks))
    if history:
        recent = history[-template.history_window :]
        lines = []
        for turn in recent:
            lines.append(template.history_line_format.format(role="User", text=turn.user_message))
            lines.append(template.history_line_format.format(role="Assistant", text=turn.answer))
        parts.append("\n".join(lines))
    parts.append(template.question_format.format(question=question))
    return "\n\n".join(parts)


@dataclass(frozen=True)
class Evidence:
    kind: str  # "statute" | "case"
    doc: Statute | CaseDoc
    score: float
    rank: int


@dataclass
class ChatTurn:
    turn_id: int
    user_message: str
    intent: Intent
    evidence: list[Evidence]
    answer: str
    latency: float
    disclaimer: bool = False

    @property
    def evidence_ids(self) -> list[str]:
        return [e.doc.id for e in self.evidence]


@dataclass
class Session:
    session_id: str
    turns: list[ChatTurn] = field(default_factory=list)
    created_at: float = field(default_factory=time.time)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


# --- answer generation providers ---

class CannedGenerator:
    """Deterministic offline generator: echoes the question line plus the
    ids of the law blocks it finds in the prompt (lines opening with a
    bracketed id; history lines never start that way, so stale citations
    from earlier turns are not re-echoed). Used in tests and demos."""

    kind = "canned"

    def generate(self, prompt: str) -> str:
        question = ""
        for line in reversed(prompt.splitlines()):
            if line.strip():
                question = line.strip()
                break
        ids = []
        for line in prompt.splitlines():
            match = _CITATION_RE.match(line.strip())
            if match and match.start() == 0 and match.group(1) not in ids:
                ids.append(match.group(1))
        if not ids:
            return f"{question} I cannot cite specific provisions for this."
        cited = " ".join(f"[{i}]" for i in ids)
        return f"{question} Based on the provisions {cited}, the cited law applies."


class RemoteGenerator:
    """Chat-completions HTTP client."""

    kind = "remote"

    def __init__(
        self,
        endpoint_url: str,
        model_name: str = "",
        temperature: float = 0.1,
        timeout: float = 30.0,
        session: requests.Session | None = None,
    ):
        self.endpoint_url = endpoint_url
        self.model_name = model_name
        self.temperature = temperature
        self.timeout = timeout
        self._session = session or requests.Session()

    def generate(self, prompt: str) -> str:
        body = {
            "model": self.model_name,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.temperature,
        }
        try:
            resp = self._session.post(self.endpoint_url, json=body, timeout=self.timeout)
        except requests.RequestException as exc:
            raise GeneratorUnavailable(str(exc)) from exc
        if not 200 <= resp.status_code < 300:
            raise GeneratorUnavailable(f"endpoint returned HTTP {resp.status_code}")
        try:
            return resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise BadResponse(f"malformed chat completion payload: {exc}") from exc


def _attach_stage(exc: Exception, intent: Intent, stage: str) -> Exception:
    exc.intent = intent
    exc.stage = stage
    return exc


class Orchestrator:
    """Session manager plus the dispatch table above."""

    def __init__(
        self,
        router,
        law_retriever: LawRetriever,
        case_retriever: CaseRetriever,
        generator,
        template: PromptTemplate | None = None,
        law_k: int = 3,
        case_k: int = 10,
    ):
        self.router = router
        self.law_retriever = law_retriever
        self.case_retriever = case_retriever
        self.generator = generator
        self.template = template if template is not None else PromptTemplate.builtin()
        self.law_k = law_k
        self.case_k = case_k
        self._sessions: dict[str, Session] = {}
        self._sessions_lock = threading.Lock()

    # --- sessions ---

    def new_session(self, session_id: str | None = None) -> Session:
        with self._sessions_lock:
            sid = session_id or uuid.uuid4().hex
            session = Session(session_id=sid)
            self._sessions[sid] = session
            return session

    def get_or_create_session(self, session_id: str | None) -> Session:
        with self._sessions_lock:
            if session_id and session_id in self._sessions:
                return self._sessions[session_id]
        return self.new_session(session_id)

    def sessions(self) -> list[Session]:
        with self._sessions_lock:
            return list(self._sessions.values())

    # --- turn handling ---

    def handle_turn(self, session: Session, message: str) -> ChatTurn:
        if not message or not message.strip():
            raise EmptyMessage("message must be non-empty")
        started = time.perf_counter()
        intent, _scores = self.router.classify(message)
        with session._lock:
            history = list(session.turns)
            if intent is Intent.GENERAL:
                turn = self._general_turn(message, history, intent)
            elif intent is Intent.CASE_SEARCH:
                turn = self._case_search_turn(message, intent)
            elif intent is Intent.LAW_SEARCH:
                turn = self._law_search_turn(message, intent)
            else:
                turn = self._law_question_turn(message, history, intent)
            turn.turn_id = len(session.turns) + 1
            turn.latency = time.perf_counter() - started
            session.turns.append(turn)
        return turn

    def _generate(self, prompt: str, intent: Intent) -> str:
        try:
            return self.generator.generate(prompt)
        except Exception as exc:
            raise _attach_stage(exc, intent, "generation")

    def _general_turn(self, message: str, history: list[ChatTurn], intent: Intent,
                      disclaimer: bool = False) -> ChatTurn:
        prompt = render_prompt(self.template, [], message, history)
        answer = self._generate(prompt, intent)
        return ChatTurn(0, message, intent, [], answer, 0.0, disclaimer=disclaimer)

    def _case_search_turn(self, message: str, intent: Intent) -> ChatTurn:
        try:
            pairs = self.case_retriever.retrieve(message, self.case_k)
        except Exception as exc:
            raise _attach_stage(exc, intent, "retrieval")
        evidence = [Evidence("case", doc, hit.score, hit.rank) for doc, hit in pairs]
        return ChatTurn(0, message, intent, evidence, _format_case_list(pairs), 0.0)

    def _law_search_turn(self, message: str, intent: Intent) -> ChatTurn:
        try:
            pairs = self.law_retriever.retrieve(message, self.law_k)
        except Exception as exc:
            raise _attach_stage(exc, intent, "retrieval")
        evidence = [Evidence("statute", doc, hit.score, hit.rank) for doc, hit in pairs]
        return ChatTurn(0, message, intent, evidence, _format_statute_list(pairs), 0.0)

    def _law_question_turn(self, message: str, history: list[ChatTurn], intent: Intent) -> ChatTurn:
        try:
            pairs = self.law_retriever.retrieve(message, self.law_k)
        except Exception as exc:
            raise _attach_stage(exc, intent, "retrieval")
        if not pairs:
            # No real law to stand on: answer generally, flag the turn.
            return self._general_turn(message, history, intent, disclaimer=True)
        statutes = [doc for doc, _ in pairs]
        prompt = render_prompt(self.template, statutes, message, history)
        answer = self._generate(prompt, intent)
        evidence = [Evidence("statute", doc, hit.score, hit.rank) for doc, hit in pairs]
        return ChatTurn(0, message, intent, evidence, answer, 0.0)


def _snippet(text: str, limit: int = 120) -> str:
    return text if len(text) <= limit else text[: limit - 3] + "..."


def _format_statute_list(pairs) -> str:
    if not pairs:
        return "No matching statutes found."
    lines = []
    for statute, hit in pairs:
        title = " ".join(p for p in (statute.law_name, statute.article_no) if p)
        lines.append(f"{hit.rank}. [{statute.id}] {title} (score {hit.score:.4f})")
        lines.append(f"   {_snippet(statute.text)}")
    return "\n".join(lines)


def _format_case_list(pairs) -> str:
    if not pairs:
        return "No matching cases found."
    lines = []
    for case, hit in pairs:
        title = " - ".join(p for p in (case.court, case.cause_of_action) if p)
        lines.append(f"{hit.rank}. [{case.id}] {title} (score {hit.score:.4f})")
        lines.append(f"   {_snippet(case.text)}")
    return "\n".join(lines)
