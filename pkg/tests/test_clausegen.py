import itertools

import httpx
import pytest

from caploop.clausegen import (
    CARRIER_TEMPLATES,
    ClauseError,
    ClauseRequest,
    ClauseTransportError,
    CompletionClient,
    RecordingPrompt,
    build_prompt,
    fallback_clause,
    generate_clause,
    validate_clause,
)


def req(original, corrected, cid="c1"):
    return ClauseRequest(tuple(original), tuple(corrected), cid)


class FakeGenerator:
    """Scripted stand-in for the completion endpoint."""

    def __init__(self, replies):
        self.replies = list(replies)
        self.calls = 0

    def complete(self, prompt):
        self.calls += 1
        reply = self.replies.pop(0)
        if isinstance(reply, Exception):
            raise reply
        return reply


class TestBuildPrompt:
    def test_substitutes_both_slots(self):
        text = build_prompt(req(["fok"], ["fork"]))
        assert 'Original words: "fok"' in text
        assert 'Corrected words: "fork"' in text
        assert "5-15 words" in text

    def test_byte_stable(self):
        a = build_prompt(req(["fok"], ["fork"]))
        b = build_prompt(req(["fok"], ["fork"]))
        assert a == b and a.encode() == b.encode()

    def test_empty_original(self):
        text = build_prompt(req([], ["fork"]))
        assert 'Original words: ""' in text

    def test_multi_word_corrected(self):
        text = build_prompt(req(["an", "arbor"], ["ann", "arbor"]))
        assert 'Corrected words: "ann arbor"' in text


class TestValidateClause:
    def test_good_clause(self):
        assert validate_clause("She picked up the fork from the table.", ["fork"]) == []

    def test_too_short(self):
        violations = validate_clause("Fork.", ["fork"])
        assert any("too short" in v for v in violations)

    def test_too_long(self):
        clause = " ".join(["word"] * 15 + ["fork"])
        violations = validate_clause(clause, ["fork"])
        assert any("too long" in v for v in violations)

    def test_missing_target_named(self):
        violations = validate_clause("A perfectly fine short sentence here.", ["fork"])
        assert violations == ["missing target word 'fork'"]

    def test_case_and_punctuation_insensitive(self):
        assert validate_clause("Hand me that FORK, please, right now.", ["fork"]) == []


class TestFallback:
    def test_single_word(self):
        clause = fallback_clause(req(["fok"], ["fork"]))
        assert validate_clause(clause, ["fork"]) == []

    def test_multi_word_phrase(self):
        clause = fallback_clause(req(["an", "arbor"], ["ann", "arbor"]))
        assert validate_clause(clause, ["ann", "arbor"]) == []

    def test_deterministic_by_id(self):
        a = fallback_clause(req(["x"], ["fork"], cid="same"))
        b = fallback_clause(req(["y"], ["fork"], cid="same"))
        assert a == b

    def test_ids_cycle_templates(self):
        clauses = {fallback_clause(req(["x"], ["fork"], cid=f"c{i}")) for i in range(60)}
        assert len(clauses) > 1

    def test_impossibly_long_phrase_rejected(self):
        with pytest.raises(ClauseError):
            fallback_clause(req([], [f"w{i}" for i in range(14)]))

    def test_ten_thousand_word_corpus(self):
        syllables = ["ba", "de", "fi", "go", "hu", "ka", "lo", "me", "ni", "po",
                     "ra", "su", "ta", "vu", "wa", "ze", "chi", "dro", "fle", "gra",
                     "ski", "tru"]
        corpus = ["".join(parts) for parts in itertools.product(syllables, repeat=3)]
        corpus = corpus[:10000]
        assert len(corpus) == 10000
        for i, word in enumerate(corpus):
            clause = fallback_clause(req(["mis"], [word], cid=f"c{i}"))
            assert validate_clause(clause, [word]) == [], word


class TestGenerateClause:
    def test_fallback_generator(self):
        prompt = generate_clause(req(["fok"], ["fork"]))
        assert prompt.source == "fallback"
        assert prompt.status == "pending"
        assert validate_clause(prompt.clause, list(prompt.target_words)) == []

    def test_llm_accepted(self):
        gen = FakeGenerator(["She picked up the fork from the table."])
        prompt = generate_clause(req(["fok"], ["fork"]), gen)
        assert prompt.source == "llm"
        assert prompt.clause == "She picked up the fork from the table."

    def test_llm_retried_once(self):
        gen = FakeGenerator(["Fork.", "She picked up the fork from the table."])
        prompt = generate_clause(req(["fok"], ["fork"]), gen)
        assert gen.calls == 2
        assert prompt.source == "llm"

    def test_llm_two_misses_fall_back(self):
        gen = FakeGenerator(["Fork.", "Still not about cutlery at all."])
        prompt = generate_clause(req(["fok"], ["fork"]), gen)
        assert gen.calls == 2
        assert prompt.source == "fallback"
        assert validate_clause(prompt.clause, ["fork"]) == []

    def test_transport_failure_falls_back(self):
        gen = FakeGenerator([ClauseTransportError("down")])
        prompt = generate_clause(req(["fok"], ["fork"]), gen)
        assert prompt.source == "fallback"

    def test_prompt_id_passthrough(self):
        prompt = generate_clause(req(["a"], ["b"]), prompt_id="rp7")
        assert prompt.id == "rp7"


class TestRecordingPrompt:
    def test_constructor_enforces_constraints(self):
        with pytest.raises(ClauseError):
            RecordingPrompt("p1", "Too short.", ("short",), "fallback")
        with pytest.raises(ClauseError):
            RecordingPrompt("p1", "A clause lacking the word entirely today.", ("fork",), "fallback")

    def test_dict_round_trip(self):
        prompt = generate_clause(req(["fok"], ["fork"]))
        assert RecordingPrompt.from_dict(prompt.to_dict()) == prompt


class TestCompletionClient:
    def _client(self, handler):
        transport = httpx.MockTransport(handler)
        return CompletionClient(
            "http://llm.test/complete", "clause-model", api_key="sekrit",
            client=httpx.Client(transport=transport),
        )

    def test_posts_prompt_and_reads_text(self):
        seen = {}

        def handler(request):
            seen["auth"] = request.headers.get("authorization")
            seen["body"] = request.content
            return httpx.Response(200, json={"text": "She picked up the fork from the table."})

        client = self._client(handler)
        text = client.complete(build_prompt(req(["fok"], ["fork"])))
        assert text == "She picked up the fork from the table."
        assert seen["auth"] == "Bearer sekrit"
        assert b'"prompt"' in seen["body"]

    def test_http_error_is_transport_error(self):
        client = self._client(lambda request: httpx.Response(500, text="boom"))
        with pytest.raises(ClauseTransportError):
            client.complete("prompt")

    def test_missing_text_is_transport_error(self):
        client = self._client(lambda request: httpx.Response(200, json={"nope": 1}))
        with pytest.raises(ClauseTransportError):
            client.complete("prompt")


def test_carrier_templates_have_enough_variety():
    assert len(CARRIER_TEMPLATES) >= 8
    assert all(t.count("{}") == 1 for t in CARRIER_TEMPLATES)
