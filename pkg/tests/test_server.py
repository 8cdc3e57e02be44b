"""HTTP surface: contracts, status codes, determinism, fault injection."""

import json
import threading

import pytest
from fastapi.testclient import TestClient

from lawdesk.config import AppConfig, config_from_dict
from lawdesk.errors import ProviderUnavailable
from lawdesk.server import build_state, create_app


def write_corpora(tmp_path):
    law_path = tmp_path / "laws.jsonl"
    with law_path.open("w", encoding="utf-8") as fh:
        rows = [
            {"id": "L1", "law_name": "民法典", "article_no": "第一条",
             "text": "employer must pay wages monthly 工资按月支付"},
            {"id": "L2", "law_name": "劳动法", "article_no": "第五十条",
             "text": "wages may not be withheld 不得克扣工资"},
            {"id": "L3", "law_name": "劳动合同法", "article_no": "第八十五条",
             "text": "overtime compensation required 加班应当支付报酬"},
            {"id": "L4", "law_name": "废止条例", "article_no": "第一条",
             "text": "repealed provision 已废止", "effective": False},
        ]
        for row in rows:
            fh.write(json.dumps(row, ensure_ascii=False) + "\n")
    case_path = tmp_path / "cases.jsonl"
    with case_path.open("w", encoding="utf-8") as fh:
        for i in range(5):
            fh.write(json.dumps({
                "id": f"C{i}",
                "court": "某法院",
                "cause_of_action": "交通肇事",
                "text": f"hit and run case number {i} 交通肇事逃逸",
            }, ensure_ascii=False) + "\n")
    return str(law_path), str(case_path)


@pytest.fixture()
def client(tmp_path):
    law_path, case_path = write_corpora(tmp_path)
    config = config_from_dict({
        "law_corpus": law_path,
        "case_corpus": case_path,
        "embedding": {"kind": "hashed_local", "dimension": 256},
    })
    state = build_state(config)
    with TestClient(create_app(state), raise_server_exceptions=False) as test_client:
        test_client.state = state
        yield test_client


class TestChat:
    def test_general_utterance(self, client):
        resp = client.post("/v1/chat", json={"message": "Hi, what's your name?"})
        assert resp.status_code == 200
        body = resp.json()
        assert body["intent"] == "General"
        assert body["citations"] == []
        assert body["session_id"]
        assert body["turn_id"] == 1
        assert body["latency_ms"] >= 0

    def test_law_question_has_citations(self, client):
        resp = client.post("/v1/chat", json={"message": "my employer has not paid wages"})
        body = resp.json()
        assert body["intent"] == "LawQuestion"
        assert body["citations"]
        for citation in body["citations"]:
            assert set(citation) == {"id", "law_name", "article_no", "snippet", "score"}

    def test_session_continuity(self, client):
        first = client.post("/v1/chat", json={"message": "hello"}).json()
        second = client.post(
            "/v1/chat", json={"session_id": first["session_id"], "message": "hello again"}
        ).json()
        assert second["session_id"] == first["session_id"]
        assert second["turn_id"] == 2

    def test_missing_message_field(self, client):
        resp = client.post("/v1/chat", json={})
        assert resp.status_code == 400
        body = resp.json()
        assert body["code"] == "bad_request"
        assert body["request_id"]

    def test_blank_message(self, client):
        resp = client.post("/v1/chat", json={"message": "   "})
        assert resp.status_code == 400

    def test_provider_failure_maps_to_503(self, client):
        def boom(query, k=3):
            raise ProviderUnavailable("encoder down")

        client.state.orchestrator.law_retriever.retrieve = boom
        client.state.law_retriever.retrieve = boom
        resp = client.post("/v1/chat", json={"message": "my employer withheld wages"})
        assert resp.status_code == 503
        body = resp.json()
        assert body["code"] == "upstream_unavailable"
        assert body["request_id"]


class TestLawSearch:
    def test_matches_library_call(self, client):
        resp = client.get("/v1/law/search", params={"q": "wages withheld", "k": 3})
        assert resp.status_code == 200
        hits = resp.json()["hits"]
        direct = client.state.law_retriever.retrieve("wages withheld", 3)
        assert [h["id"] for h in hits] == [s.id for s, _ in direct]
        assert [h["rank"] for h in hits] == list(range(1, len(hits) + 1))

    def test_default_k_is_three(self, client):
        resp = client.get("/v1/law/search", params={"q": "wages 工资 加班 compensation"})
        assert len(resp.json()["hits"]) <= 3

    def test_k_zero_rejected(self, client):
        assert client.get("/v1/law/search", params={"q": "x", "k": 0}).status_code == 400

    def test_k_over_limit_rejected(self, client):
        assert client.get("/v1/law/search", params={"q": "x", "k": 51}).status_code == 400

    def test_empty_q_rejected(self, client):
        assert client.get("/v1/law/search", params={"q": " "}).status_code == 400

    def test_byte_identical_responses(self, client):
        params = {"q": "wages withheld 工资", "k": 3}
        first = client.get("/v1/law/search", params=params)
        second = client.get("/v1/law/search", params=params)
        assert first.content == second.content

    def test_never_returns_ineffective(self, client):
        resp = client.get("/v1/law/search", params={"q": "repealed provision 已废止", "k": 4})
        assert "L4" not in [h["id"] for h in resp.json()["hits"]]


class TestCaseSearch:
    def test_hits_shape(self, client):
        resp = client.get("/v1/case/search", params={"q": "hit and run", "k": 10})
        hits = resp.json()["hits"]
        assert hits
        assert set(hits[0]) == {"id", "court", "cause_of_action", "text", "score", "rank"}

    def test_bounds(self, client):
        assert client.get("/v1/case/search", params={"q": "x", "k": 0}).status_code == 400
        assert client.get("/v1/case/search", params={"q": "", "k": 5}).status_code == 400


class TestIngest:
    def test_ingest_counts(self, client, tmp_path):
        extra = tmp_path / "more_cases.jsonl"
        with extra.open("w", encoding="utf-8") as fh:
            for i in range(50):
                fh.write(json.dumps({
                    "id": f"X{i}", "court": "法院", "cause_of_action": "合同",
                    "text": f"case body {i} 合同纠纷",
                }) + "\n")
        resp = client.post("/v1/admin/ingest", json={"kind": "case", "path": str(extra)})
        assert resp.status_code == 200
        assert resp.json() == {"ingested": 50, "rejected": 0, "errors": []}
        sizes = client.get("/healthz").json()["index_sizes"]
        assert sizes["case"] == 55

    def test_bad_kind(self, client):
        resp = client.post("/v1/admin/ingest", json={"kind": "nope", "path": "x"})
        assert resp.status_code == 400

    def test_missing_file_404(self, client):
        resp = client.post("/v1/admin/ingest", json={"kind": "law", "path": "/does/not/exist"})
        assert resp.status_code == 404
        assert resp.json()["code"] == "not_found"

    def test_concurrent_ingest_conflicts(self, client, tmp_path):
        path = tmp_path / "slow.jsonl"
        path.write_text(json.dumps({"id": "Z1", "text": "body"}) + "\n", encoding="utf-8")
        assert client.state.ingest_lock.acquire(blocking=False)
        try:
            resp = client.post("/v1/admin/ingest", json={"kind": "case", "path": str(path)})
            assert resp.status_code == 409
        finally:
            client.state.ingest_lock.release()

    def test_rejected_lines_reported(self, client, tmp_path):
        path = tmp_path / "broken.jsonl"
        path.write_text('{"id": "ok1", "text": "fine"}\nnot-json\n', encoding="utf-8")
        resp = client.post("/v1/admin/ingest", json={"kind": "case", "path": str(path)})
        body = resp.json()
        assert body["ingested"] == 1
        assert body["rejected"] == 1
        assert body["errors"][0]["line"] == 2


class TestHealthAndHeaders:
    def test_healthz(self, client):
        body = client.get("/healthz").json()
        assert body["status"] == "ok"
        assert body["index_sizes"] == {"law": 4, "case": 5}
        assert "lawdesk" in body["versions"]

    def test_fresh_boot_zero_sizes(self):
        state = build_state(AppConfig())
        with TestClient(create_app(state)) as test_client:
            body = test_client.get("/healthz").json()
            assert body["index_sizes"] == {"law": 0, "case": 0}

    def test_request_id_echoed(self, client):
        resp = client.get("/healthz", headers={"X-Request-Id": "req-abc-123"})
        assert resp.headers["X-Request-Id"] == "req-abc-123"

    def test_request_id_generated(self, client):
        resp = client.get("/healthz")
        assert resp.headers["X-Request-Id"]


def test_ui_dir_served_when_configured(tmp_path):
    ui = tmp_path / "dist"
    ui.mkdir()
    (ui / "index.html").write_text("<html><body>ui shell</body></html>", encoding="utf-8")
    state = build_state(config_from_dict({"ui_dir": str(ui)}))
    with TestClient(create_app(state)) as client:
        resp = client.get("/")
        assert resp.status_code == 200
        assert "ui shell" in resp.text
        assert client.get("/healthz").json()["status"] == "ok"


def test_session_log_written(tmp_path):
    law_path, case_path = write_corpora(tmp_path)
    log_path = tmp_path / "sessions.jsonl"
    config = config_from_dict({
        "law_corpus": law_path,
        "case_corpus": case_path,
        "embedding": {"kind": "hashed_local", "dimension": 128},
        "session_log": str(log_path),
    })
    state = build_state(config)
    with TestClient(create_app(state)) as client:
        client.post("/v1/chat", json={"message": "hello"})
        client.post("/v1/chat", json={"message": "my employer withheld wages"})
    rows = [json.loads(line) for line in log_path.read_text().splitlines()]
    assert len(rows) == 2
    assert rows[0]["intent"] == "General"
    assert rows[1]["intent"] == "LawQuestion"
