"""HTTP service over the consultation pipeline.

Endpoints:

    POST /v1/chat          {session_id?, message} -> answer with citations
    GET  /v1/law/search    ?q=&k=3                -> ranked statutes
    GET  /v1/case/search   ?q=&k=10               -> ranked cases
    POST /v1/admin/ingest  {kind: law|case, path} -> ingest counts
    GET  /healthz                                 -> status + index sizes

Every response carries an X-Request-Id header (echoed from the request or
generated). Error bodies are {"code", "message", "request_id"}; success
bodies stay request-id-free so identical search requests return
byte-identical payloads. Ingest holds an exclusive lock: a second
concurrent ingest gets 409.
"""

from __future__ import annotations

import json
import os
import threading
import time
import uuid
from dataclasses import dataclass, field

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel

from . import __version__
from .config import AppConfig
from .embeddings import build_provider
from .errors import (
    BadResponse,
    EmptyMessage,
    GeneratorUnavailable,
    LawdeskError,
    ProviderUnavailable,
)
from .orchestrator import (
    CannedGenerator,
    ChatTurn,
    Orchestrator,
    PromptTemplate,
    RemoteGenerator,
)
from .retrieval import (
    CaseRetriever,
    LawRetriever,
    load_cases_jsonl,
    load_statutes_jsonl,
)
from .router import LinearRouter, RulesRouter
from .analysis import AnalyzerConfig, load_stopwords


@dataclass
class AppState:
    config: AppConfig
    orchestrator: Orchestrator
    law_retriever: LawRetriever
    case_retriever: CaseRetriever
    ingest_lock: threading.Lock = field(default_factory=threading.Lock)
    session_log_lock: threading.Lock = field(default_factory=threading.Lock)


def build_state(config: AppConfig) -> AppState:
    """Wire retrievers, router, generator, and orchestrator from config."""
    provider = build_provider(config.embedding)
    analyzer = None
    if config.stopwords:
        analyzer = AnalyzerConfig(stopwords=load_stopwords(config.stopwords))
    law = LawRetriever(provider, min_score=config.min_score)
    case = CaseRetriever(analyzer=analyzer, params=config.bm25)
    if config.law_corpus:
        statutes, _ = load_statutes_jsonl(config.law_corpus)
        law.ingest(statutes)
    if config.case_corpus:
        cases, _ = load_cases_jsonl(config.case_corpus)
        case.ingest(cases)
    if config.router.kind == "linear" and config.router.model_path:
        router = LinearRouter.load(config.router.model_path)
    else:
        router = RulesRouter()
    if config.generator.kind == "remote":
        generator = RemoteGenerator(
            endpoint_url=config.generator.endpoint_url or "",
            model_name=config.generator.model_name,
            temperature=config.generator.temperature,
            timeout=config.generator.timeout,
        )
    else:
        generator = CannedGenerator()
    template = (
        PromptTemplate.from_file(config.prompt_template, history_window=config.history_window)
        if config.prompt_template
        else PromptTemplate.builtin(history_window=config.history_window)
    )
    orchestrator = Orchestrator(
        router=router,
        law_retriever=law,
        case_retriever=case,
        generator=generator,
        template=template,
        law_k=config.law_k,
        case_k=config.case_k,
    )
    return AppState(
        config=config, orchestrator=orchestrator, law_retriever=law, case_retriever=case
    )


class ChatBody(BaseModel):
    session_id: str | None = None
    message: str


class IngestBody(BaseModel):
    kind: str
    path: str


def _error(status: int, code: str, message: str, request_id: str) -> JSONResponse:
    resp = JSONResponse(
        status_code=status,
        content={"code": code, "message": message, "request_id": request_id},
    )
    resp.headers["X-Request-Id"] = request_id
    return resp


def _citations(turn: ChatTurn) -> list[dict]:
    out = []
    for ev in turn.evidence:
        doc = ev.doc
        if ev.kind == "statute":
            title, subtitle = doc.law_name, doc.article_no
        else:
            # Case evidence reuses the citation shape: court as the title,
            # cause of action where the article number would sit.
            title, subtitle = doc.court, doc.cause_of_action
        snippet = doc.text if len(doc.text) <= 200 else doc.text[:197] + "..."
        out.append(
            {
                "id": doc.id,
                "law_name": title,
                "article_no": subtitle,
                "snippet": snippet,
                "score": ev.score,
            }
        )
    return out


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="lawdesk", version=__version__)

    @app.middleware("http")
    async def request_id_middleware(request: Request, call_next):
        request.state.request_id = request.headers.get("X-Request-Id") or uuid.uuid4().hex
        response: Response = await call_next(request)
        response.headers.setdefault("X-Request-Id", request.state.request_id)
        return response

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        return _error(400, "bad_request", str(exc.errors()[:1]), request.state.request_id)

    @app.exception_handler(LawdeskError)
    async def lawdesk_handler(request: Request, exc: LawdeskError):
        request_id = request.state.request_id
        if isinstance(exc, (ProviderUnavailable, GeneratorUnavailable)):
            stage = getattr(exc, "stage", None)
            intent = getattr(exc, "intent", None)
            detail = f"{type(exc).__name__}: {exc}"
            if stage:
                detail += f" (stage={stage}, intent={intent.value if intent else '?'})"
            return _error(503, "upstream_unavailable", detail, request_id)
        if isinstance(exc, (EmptyMessage, BadResponse)):
            return _error(400, "bad_request", str(exc), request_id)
        return _error(500, "internal", f"{type(exc).__name__}: {exc}", request_id)

    @app.post("/v1/chat")
    def chat(body: ChatBody, request: Request):
        if not body.message or not body.message.strip():
            return _error(400, "bad_request", "message must be non-empty", request.state.request_id)
        session = state.orchestrator.get_or_create_session(body.session_id)
        turn = state.orchestrator.handle_turn(session, body.message)
        _log_turn(state, session.session_id, turn)
        return {
            "session_id": session.session_id,
            "turn_id": turn.turn_id,
            "intent": turn.intent.value,
            "answer": turn.answer,
            "citations": _citations(turn),
            "latency_ms": round(turn.latency * 1000.0, 3),
        }

    @app.get("/v1/law/search")
    def law_search(request: Request, q: str = "", k: int = 3):
        if not q.strip():
            return _error(400, "bad_request", "q must be non-empty", request.state.request_id)
        if not 1 <= k <= 50:
            return _error(400, "bad_request", "k must be in 1..50", request.state.request_id)
        pairs = state.law_retriever.retrieve(q, k)
        return {
            "hits": [
                {
                    "id": statute.id,
                    "law_name": statute.law_name,
                    "article_no": statute.article_no,
                    "text": statute.text,
                    "score": hit.score,
                    "rank": hit.rank,
                }
                for statute, hit in pairs
            ]
        }

    @app.get("/v1/case/search")
    def case_search(request: Request, q: str = "", k: int = 10):
        if not q.strip():
            return _error(400, "bad_request", "q must be non-empty", request.state.request_id)
        if not 1 <= k <= 50:
            return _error(400, "bad_request", "k must be in 1..50", request.state.request_id)
        pairs = state.case_retriever.retrieve(q, k)
        return {
            "hits": [
                {
                    "id": case.id,
                    "court": case.court,
                    "cause_of_action": case.cause_of_action,
                    "text": case.text,
                    "score": hit.score,
                    "rank": hit.rank,
                }
                for case, hit in pairs
            ]
        }

    @app.post("/v1/admin/ingest")
    def ingest(body: IngestBody, request: Request):
        request_id = request.state.request_id
        if body.kind not in ("law", "case"):
            return _error(400, "bad_request", "kind must be 'law' or 'case'", request_id)
        if not os.path.isfile(body.path):
            return _error(404, "not_found", f"no such file: {body.path}", request_id)
        if not state.ingest_lock.acquire(blocking=False):
            return _error(409, "bad_request", "ingest already running", request_id)
        try:
            if body.kind == "law":
                records, report = load_statutes_jsonl(body.path)
                state.law_retriever.ingest(records)
            else:
                records, report = load_cases_jsonl(body.path)
                state.case_retriever.ingest(records)
        finally:
            state.ingest_lock.release()
        return {
            "ingested": report.ingested,
            "rejected": report.rejected,
            "errors": [{"line": e.line, "reason": e.reason} for e in report.errors],
        }

    @app.get("/healthz")
    def healthz():
        return {
            "status": "ok",
            "versions": {"lawdesk": __version__, "api": "v1"},
            "index_sizes": {
                "law": len(state.law_retriever),
                "case": len(state.case_retriever),
            },
        }

    # Mounted last so /v1/* and /healthz keep precedence.
    if state.config.ui_dir and os.path.isdir(state.config.ui_dir):
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=state.config.ui_dir, html=True), name="ui")

    return app


def _log_turn(state: AppState, session_id: str, turn: ChatTurn) -> None:
    path = state.config.session_log
    if not path:
        return
    record = {
        "ts": time.time(),
        "session_id": session_id,
        "turn_id": turn.turn_id,
        "intent": turn.intent.value,
        "message": turn.user_message,
        "answer": turn.answer,
        "evidence_ids": turn.evidence_ids,
        "disclaimer": turn.disclaimer,
        "latency_ms": round(turn.latency * 1000.0, 3),
    }
    with state.session_log_lock:
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")


def serve(config: AppConfig) -> None:
    """Blocking uvicorn run (the `lawdesk serve` entry point)."""
    import uvicorn

    app = create_app(build_state(config))
    uvicorn.run(app, host=config.bind_host, port=config.bind_port, log_level="info")
