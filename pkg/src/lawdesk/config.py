"""Service configuration, loaded from a JSON file.

Documented keys (all optional; defaults shown):

    bind_host          "127.0.0.1"
    bind_port          8000
    law_corpus         null        path to statute JSONL
    case_corpus        null        path to case JSONL
    embedding          {"kind": "hashed_local", "dimension": 1024, ...}
                       remote kind adds endpoint_url, model_name, timeout,
                       max_batch, max_in_flight, query_prefix, passage_prefix
    generator          {"kind": "canned"} or {"kind": "remote",
                       "endpoint_url": ..., "model_name": ...,
                       "temperature": 0.1, "timeout": 30.0}
    router             {"kind": "rules"} or {"kind": "linear",
                       "model_path": "router.dlrm"}
    law_k              3
    case_k             10
    tau                0.05        contrastive loss temperature
    bm25               {"k1": 1.2, "b": 0.75}
    history_window     4
    min_score          null        optional dense similarity floor
    session_log        null        append-only JSONL of completed turns
    stopwords          null        path overriding the built-in list
    prompt_template    null        path to a sectioned template file
    ui_dir             null        static directory served at / (the
                                   built browser client, if any)

Unknown keys are ignored.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .embeddings import EmbeddingProviderConfig
from .sparse import Bm25Params


@dataclass(frozen=True)
class GeneratorConfig:
    kind: str = "canned"  # or "remote"
    endpoint_url: str | None = None
    model_name: str = ""
    temperature: float = 0.1
    timeout: float = 30.0


@dataclass(frozen=True)
class RouterConfig:
    kind: str = "rules"  # or "linear"
    model_path: str | None = None


@dataclass(frozen=True)
class AppConfig:
    bind_host: str = "127.0.0.1"
    bind_port: int = 8000
    law_corpus: str | None = None
    case_corpus: str | None = None
    embedding: EmbeddingProviderConfig = field(default_factory=EmbeddingProviderConfig)
    generator: GeneratorConfig = field(default_factory=GeneratorConfig)
    router: RouterConfig = field(default_factory=RouterConfig)
    law_k: int = 3
    case_k: int = 10
    tau: float = 0.05
    bm25: Bm25Params = field(default_factory=Bm25Params)
    history_window: int = 4
    min_score: float | None = None
    session_log: str | None = None
    stopwords: str | None = None
    prompt_template: str | None = None
    ui_dir: str | None = None


def _pick(obj: dict, cls, **overrides):
    fields = {f for f in cls.__dataclass_fields__}
    kwargs = {k: v for k, v in obj.items() if k in fields}
    kwargs.update(overrides)
    return cls(**kwargs)


def config_from_dict(obj: dict) -> AppConfig:
    embedding = _pick(obj.get("embedding", {}), EmbeddingProviderConfig)
    generator = _pick(obj.get("generator", {}), GeneratorConfig)
    router = _pick(obj.get("router", {}), RouterConfig)
    bm25 = _pick(obj.get("bm25", {}), Bm25Params)
    top = {
        k: v
        for k, v in obj.items()
        if k in AppConfig.__dataclass_fields__
        and k not in ("embedding", "generator", "router", "bm25")
    }
    return AppConfig(embedding=embedding, generator=generator, router=router, bm25=bm25, **top)


def load_config(path: str) -> AppConfig:
    with open(path, encoding="utf-8") as fh:
        obj = json.load(fh)
    if not isinstance(obj, dict):
        raise ValueError("config file must contain a JSON object")
    return config_from_dict(obj)
