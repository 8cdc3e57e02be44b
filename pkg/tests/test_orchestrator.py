"""Dispatch table, prompt rendering, generators, and citation grounding."""

import threading

import numpy as np
import pytest

from lawdesk.embeddings import HashedEmbedder
from lawdesk.errors import (
    EmptyMessage,
    GeneratorUnavailable,
    ProviderUnavailable,
    TemplateError,
)
from lawdesk.orchestrator import (
    CannedGenerator,
    Orchestrator,
    PromptTemplate,
    RemoteGenerator,
    extract_citation_ids,
    render_prompt,
)
from lawdesk.retrieval import CaseDoc, CaseRetriever, LawRetriever, Statute
from lawdesk.router import Intent, RulesRouter

from conftest import PLAIN

STATUTES = [
    Statute("LAW1", "民法典", "第一条", "employer must pay wages monthly 工资按月支付"),
    Statute("LAW2", "劳动法", "第五十条", "wages may not be withheld 不得克扣工资"),
    Statute("LAW3", "劳动合同法", "第八十五条", "overtime compensation required 加班应当支付报酬"),
]

CASES = [
    CaseDoc("CASE1", "某中院", "交通肇事", "hit and run conviction 交通肇事逃逸案"),
    CaseDoc("CASE2", "某高院", "交通肇事", "hit and run appeal 肇事逃逸上诉案"),
]


class CountingLawRetriever(LawRetriever):
    def __init__(self, provider):
        super().__init__(provider)
        self.calls = 0

    def retrieve(self, query, k=3):
        self.calls += 1
        return super().retrieve(query, k)


class CountingCaseRetriever(CaseRetriever):
    def __init__(self, analyzer=None):
        super().__init__(analyzer=analyzer)
        self.calls = 0

    def retrieve(self, query, k=10):
        self.calls += 1
        return super().retrieve(query, k)


class CountingGenerator(CannedGenerator):
    def __init__(self):
        self.calls = 0

    def generate(self, prompt):
        self.calls += 1
        return super().generate(prompt)


def make_orchestrator():
    law = CountingLawRetriever(HashedEmbedder(dimension=256, analyzer=PLAIN))
    law.ingest(STATUTES)
    # Default analyzer (with stopwords): keyword extraction must not burn
    # its budget on function words like "please"/"me".
    case = CountingCaseRetriever()
    case.ingest(CASES)
    generator = CountingGenerator()
    orch = Orchestrator(
        router=RulesRouter(),
        law_retriever=law,
        case_retriever=case,
        generator=generator,
    )
    return orch, law, case, generator


class TestRoutingTable:
    def test_general_calls_generator_only(self):
        orch, law, case, gen = make_orchestrator()
        session = orch.new_session()
        turn = orch.handle_turn(session, "Hi, what's your name?")
        assert turn.intent == Intent.GENERAL
        assert (law.calls, case.calls, gen.calls) == (0, 0, 1)
        assert turn.evidence == []

    def test_case_search_calls_case_retriever_only(self):
        orch, law, case, gen = make_orchestrator()
        session = orch.new_session()
        turn = orch.handle_turn(session, "Please give me cases related to hit-and-run.")
        assert turn.intent == Intent.CASE_SEARCH
        assert (law.calls, case.calls, gen.calls) == (0, 1, 0)
        assert turn.evidence
        assert all(e.kind == "case" for e in turn.evidence)

    def test_law_search_calls_law_retriever_only(self):
        orch, law, case, gen = make_orchestrator()
        session = orch.new_session()
        turn = orch.handle_turn(session, "Article 3 of the Civil Code of the People's Republic of China")
        assert turn.intent == Intent.LAW_SEARCH
        assert (law.calls, case.calls, gen.calls) == (1, 0, 0)

    def test_law_question_retrieves_then_generates(self):
        orch, law, case, gen = make_orchestrator()
        session = orch.new_session()
        turn = orch.handle_turn(session, "My employer has not paid wages for three months, what can I do?")
        assert turn.intent == Intent.LAW_QUESTION
        assert (law.calls, case.calls, gen.calls) == (1, 0, 1)
        assert turn.evidence

    def test_search_paths_never_generate(self):
        orch, law, case, gen = make_orchestrator()
        session = orch.new_session()
        orch.handle_turn(session, "Please give me cases related to hit-and-run.")
        orch.handle_turn(session, "Article 3 of the Civil Code of the People's Republic of China")
        assert gen.calls == 0


class TestLawQuestionGrounding:
    def test_citations_subset_of_evidence(self):
        orch, law, case, gen = make_orchestrator()
        session = orch.new_session()
        turn = orch.handle_turn(session, "My employer has not paid wages, what can I do?")
        cited = set(extract_citation_ids(turn.answer))
        assert cited
        assert cited <= set(turn.evidence_ids)

    def test_zero_hit_law_question_takes_disclaimer_fallback(self):
        law = CountingLawRetriever(HashedEmbedder(dimension=64, analyzer=PLAIN))
        case = CountingCaseRetriever(analyzer=PLAIN)
        gen = CountingGenerator()
        orch = Orchestrator(RulesRouter(), law, case, gen)  # empty law corpus
        session = orch.new_session()
        turn = orch.handle_turn(session, "my employer withheld wages, help")
        assert turn.intent == Intent.LAW_QUESTION
        assert turn.disclaimer is True
        assert turn.evidence == []
        assert gen.calls == 1
        assert extract_citation_ids(turn.answer) == []

    def test_randomized_grounding(self):
        rng = np.random.default_rng(31)
        orch, law, case, gen = make_orchestrator()
        topics = ["wages", "overtime", "compensation", "工资", "加班"]
        for i in range(100):
            session = orch.new_session()
            words = rng.choice(topics, size=int(rng.integers(1, 4)), replace=True)
            message = "my employer problem " + " ".join(words)
            turn = orch.handle_turn(session, message)
            assert turn.intent == Intent.LAW_QUESTION
            cited = set(extract_citation_ids(turn.answer))
            if turn.evidence:
                assert cited <= set(turn.evidence_ids)
            else:
                assert turn.disclaimer and not cited


class TestSessions:
    def test_turn_ids_increase_from_one(self):
        orch, *_ = make_orchestrator()
        session = orch.new_session()
        for expected in (1, 2, 3):
            turn = orch.handle_turn(session, "hello there")
            assert turn.turn_id == expected

    def test_sessions_isolated_under_concurrency(self):
        orch, *_ = make_orchestrator()
        sessions = [orch.new_session() for _ in range(4)]
        errors = []

        def worker(session):
            try:
                for _ in range(10):
                    orch.handle_turn(session, "hello there")
            except Exception as exc:  # pragma: no cover
                errors.append(exc)

        threads = [threading.Thread(target=worker, args=(s,)) for s in sessions]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        for session in sessions:
            assert [t.turn_id for t in session.turns] == list(range(1, 11))

    def test_get_or_create(self):
        orch, *_ = make_orchestrator()
        session = orch.get_or_create_session(None)
        same = orch.get_or_create_session(session.session_id)
        assert same is session

    def test_empty_message_rejected(self):
        orch, *_ = make_orchestrator()
        session = orch.new_session()
        with pytest.raises(EmptyMessage):
            orch.handle_turn(session, "   ")


class TestErrorsCarryStage:
    class _FailingLaw:
        def retrieve(self, query, k=3):
            raise ProviderUnavailable("encoder offline")

    class _FailingGen:
        def generate(self, prompt):
            raise GeneratorUnavailable("llm offline")

    def test_retrieval_stage_attached(self):
        orch = Orchestrator(RulesRouter(), self._FailingLaw(), CaseRetriever(analyzer=PLAIN),
                            CannedGenerator())
        session = orch.new_session()
        with pytest.raises(ProviderUnavailable) as exc_info:
            orch.handle_turn(session, "my employer withheld wages")
        assert exc_info.value.stage == "retrieval"
        assert exc_info.value.intent == Intent.LAW_QUESTION

    def test_generation_stage_attached(self):
        law = LawRetriever(HashedEmbedder(dimension=64, analyzer=PLAIN))
        orch = Orchestrator(RulesRouter(), law, CaseRetriever(analyzer=PLAIN), self._FailingGen())
        session = orch.new_session()
        with pytest.raises(GeneratorUnavailable) as exc_info:
            orch.handle_turn(session, "hello")
        assert exc_info.value.stage == "generation"
        assert exc_info.value.intent == Intent.GENERAL


class TestRenderPrompt:
    def test_zero_statutes_no_law_block(self):
        template = PromptTemplate(system_text="sys", law_block_format="[{id}] {text}")
        prompt = render_prompt(template, [], "question?")
        assert "[" not in prompt
        assert "question?" in prompt

    def test_blocks_in_rank_order(self):
        template = PromptTemplate.builtin()
        prompt = render_prompt(template, STATUTES, "訴えたい")
        expected = (
            "You are a careful legal assistant. Answer using only the statutory "
            "provisions listed below, and cite each provision you rely on by its "
            "bracketed id. If no provisions are listed, say that you cannot cite "
            "specific law and give general guidance only.\n\n"
            "[LAW1] 民法典 第一条: employer must pay wages monthly 工资按月支付\n"
            "[LAW2] 劳动法 第五十条: wages may not be withheld 不得克扣工资\n"
            "[LAW3] 劳动合同法 第八十五条: overtime compensation required 加班应当支付报酬\n\n"
            "Question: 訴えたい"
        )
        assert prompt == expected

    def test_permuting_statutes_changes_prompt(self):
        template = PromptTemplate.builtin()
        a = render_prompt(template, STATUTES, "q")
        b = render_prompt(template, list(reversed(STATUTES)), "q")
        assert a != b

    def test_history_window_limits_turns(self):
        orch, *_ = make_orchestrator()
        session = orch.new_session()
        for i in range(7):
            orch.handle_turn(session, f"hello number {i}")
        template = orch.template
        prompt = render_prompt(template, [], "latest", session.turns)
        assert "hello number 2" not in prompt  # window is 4
        for i in (3, 4, 5, 6):
            assert f"hello number {i}" in prompt

    def test_unknown_placeholder_rejected(self):
        with pytest.raises(TemplateError):
            PromptTemplate(system_text="s", law_block_format="{nope}")

    def test_template_file_round_trip(self, tmp_path):
        path = tmp_path / "tpl.txt"
        path.write_text(
            "[system]\nbe helpful\n[law_block]\n<{id}> {text}\n[question]\nQ: {question}\n",
            encoding="utf-8",
        )
        template = PromptTemplate.from_file(str(path))
        prompt = render_prompt(template, [STATUTES[0]], "why?")
        assert prompt.startswith("be helpful")
        assert "<LAW1>" in prompt
        assert prompt.endswith("Q: why?")

    def test_template_file_requires_system(self, tmp_path):
        path = tmp_path / "tpl.txt"
        path.write_text("[law_block]\n[{id}]\n", encoding="utf-8")
        with pytest.raises(TemplateError):
            PromptTemplate.from_file(str(path))


class TestGenerators:
    def test_canned_deterministic(self):
        gen = CannedGenerator()
        prompt = "sys\n\n[L1] x: y\n\nQuestion: what?"
        assert gen.generate(prompt) == gen.generate(prompt)

    def test_canned_echoes_exactly_the_law_block_ids(self):
        gen = CannedGenerator()
        prompt = "sys\n\n[L1] a: b\n[L2] c: d\n[L3] e: f\n\nQuestion: what?"
        assert extract_citation_ids(gen.generate(prompt)) == ["L1", "L2", "L3"]

    def test_canned_ignores_history_citations(self):
        gen = CannedGenerator()
        prompt = "sys\n\nUser: old question\nAssistant: cited [OLD9] before\n\nQuestion: new?"
        assert extract_citation_ids(gen.generate(prompt)) == []

    def test_remote_5xx_raises(self):
        class _Session:
            def post(self, url, json=None, timeout=None):
                class R:
                    status_code = 500
                return R()

        gen = RemoteGenerator("http://llm.local/chat", session=_Session())
        with pytest.raises(GeneratorUnavailable):
            gen.generate("prompt")

    def test_remote_parses_choices(self):
        class _Session:
            def post(self, url, json=None, timeout=None):
                class R:
                    status_code = 200
                    def json(self):
                        return {"choices": [{"message": {"content": "an answer"}}]}
                return R()

        gen = RemoteGenerator("http://llm.local/chat", session=_Session())
        assert gen.generate("prompt") == "an answer"


def test_extract_citation_ids_dedupes_in_order():
    assert extract_citation_ids("see [B] then [A] then [B]") == ["B", "A"]
