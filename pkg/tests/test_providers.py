import json
import math
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np
import pytest

from ragkit.index import cosine_sim
from ragkit.providers import (
    MOCK_EMBED_DIM,
    MockEmbedding,
    MockGeneration,
    MockRerank,
    ProviderConfig,
    ProviderConfigError,
    TransportError,
    make_provider,
    mock_embed,
    provider_from_env,
    split_sentences,
)


class TestMockEmbed:
    def test_unit_norm(self):
        vec = mock_embed("the quick brown fox", seed=3)
        assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-6)

    def test_identical_texts_identical_vectors(self):
        a, b = mock_embed("cat sat"), mock_embed("cat sat")
        assert np.array_equal(a, b)
        assert cosine_sim(a, b) == pytest.approx(1.0, abs=1e-9)

    def test_disjoint_texts_orthogonal(self):
        # distinct single tokens hash to distinct buckets for this seed
        a, b = mock_embed("alpha", seed=0), mock_embed("omega", seed=0)
        assert cosine_sim(a, b) == pytest.approx(0.0, abs=1e-9)

    def test_half_overlap_cosine(self):
        a, b = mock_embed("a b", seed=0), mock_embed("a c", seed=0)
        assert cosine_sim(a, b) == pytest.approx(0.5, abs=1e-9)

    def test_overlap_orders_similarity(self):
        first = mock_embed("cat sat")
        second = mock_embed("cat sat")
        third = mock_embed("dog ran")
        assert cosine_sim(first, second) == pytest.approx(1.0)
        assert cosine_sim(first, second) > cosine_sim(first, third)

    def test_dim_floor(self):
        with pytest.raises(ValueError):
            mock_embed("text", dim=4)

    def test_empty_text_rejected(self):
        with pytest.raises(ValueError):
            mock_embed("   ")

    def test_batch_order_preserved(self):
        provider = MockEmbedding()
        vecs = provider.embed_batch(["one two", "three", "one two"])
        assert np.array_equal(vecs[0], vecs[2])
        assert not np.array_equal(vecs[0], vecs[1])


class TestMockRerank:
    def test_single_candidate(self):
        assert len(MockRerank().score_pairs("q", ["doc"])) == 1

    def test_full_overlap_beats_none(self):
        scores = MockRerank().score_pairs(
            "robotics seminar schedule",
            ["the robotics seminar schedule is online", "unrelated text entirely"],
        )
        assert scores[0] == pytest.approx(1.0)
        assert scores[1] == 0.0
        assert scores[0] > scores[1]

    def test_duplicates_equal(self):
        scores = MockRerank().score_pairs("query words", ["same doc", "same doc"])
        assert scores[0] == scores[1]

    def test_empty_candidates_rejected(self):
        with pytest.raises(ValueError):
            MockRerank().score_pairs("q", [])


class TestMockGeneration:
    def qa_prompt(self, question, context):
        return (
            "[INST]<<SYS>> sys text <</SYS>> \n"
            f"Question: {question} \n"
            f"Context: {context} \n"
            "Answer: [/INST]"
        )

    def test_extracts_best_overlap_sentence(self):
        context = (
            "The library opens at nine. Classes begin on August 26, 2024. "
            "Parking is limited."
        )
        answer = MockGeneration().generate(
            self.qa_prompt("When do classes begin in the fall?", context)
        )
        assert answer == "Classes begin on August 26, 2024."

    def test_empty_context_falls_back(self):
        answer = MockGeneration().generate(self.qa_prompt("Any question?", ""))
        assert answer == "I don't know."

    def test_zero_overlap_falls_back(self):
        answer = MockGeneration().generate(
            self.qa_prompt("zebra quagga?", "Completely unrelated sentence here.")
        )
        assert answer == "I don't know."

    def test_deterministic(self):
        prompt = self.qa_prompt("what is here?", "Something is here. Other text.")
        gen = MockGeneration()
        assert gen.generate(prompt) == gen.generate(prompt)

    def test_split_sentences(self):
        assert split_sentences("One. Two! Three?") == ["One.", "Two!", "Three?"]


class _WireHandler(BaseHTTPRequestHandler):
    """Implements the provider wire protocol on top of the mocks."""

    fail_next = 0

    def do_POST(self):
        length = int(self.headers["Content-Length"])
        payload = json.loads(self.rfile.read(length))
        if _WireHandler.fail_next > 0:
            _WireHandler.fail_next -= 1
            self.send_response(503)
            self.end_headers()
            return
        if self.path == "/embed":
            vectors = [mock_embed(t).tolist() for t in payload["texts"]]
            body = {"vectors": vectors, "dim": MOCK_EMBED_DIM}
        elif self.path == "/rerank":
            scores = MockRerank().score_pairs(payload["query"], payload["documents"])
            body = {"scores": scores}
        elif self.path == "/generate":
            body = {"text": MockGeneration().generate(payload["prompt"])}
        else:
            self.send_response(404)
            self.end_headers()
            return
        data = json.dumps(body).encode()
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(data)))
        self.end_headers()
        self.wfile.write(data)

    def log_message(self, *args):
        pass


@pytest.fixture()
def wire_server():
    server = ThreadingHTTPServer(("127.0.0.1", 0), _WireHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _WireHandler.fail_next = 0
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()


class TestHttpProviders:
    def test_embed_round_trip(self, wire_server):
        provider = make_provider(
            ProviderConfig(role="embedding", endpoint=wire_server, max_batch=2)
        )
        vecs = provider.embed_batch(["a b", "a c", "a b"])
        assert len(vecs) == 3
        assert np.array_equal(vecs[0], vecs[2])
        assert cosine_sim(vecs[0], vecs[1]) == pytest.approx(0.5, abs=1e-9)
        for vec in vecs:
            assert np.linalg.norm(vec) == pytest.approx(1.0, abs=1e-6)

    def test_rerank_round_trip(self, wire_server):
        provider = make_provider(ProviderConfig(role="rerank", endpoint=wire_server))
        scores = provider.score_pairs("find this", ["find this here", "nothing"])
        assert scores[0] > scores[1]
        assert all(math.isfinite(s) for s in scores)

    def test_generate_round_trip(self, wire_server):
        provider = make_provider(ProviderConfig(role="generation", endpoint=wire_server))
        text = provider.generate(
            "[INST]<<SYS>> s <</SYS>> \nQuestion: where is it? \n"
            "Context: It is in the hall. \nAnswer: [/INST]"
        )
        assert text == "It is in the hall."

    def test_retry_then_success(self, wire_server):
        _WireHandler.fail_next = 2
        provider = make_provider(
            ProviderConfig(role="rerank", endpoint=wire_server, max_retries=3)
        )
        assert provider.score_pairs("q", ["q text"]) == [1.0]

    def test_unreachable_endpoint_raises_transport_error(self):
        provider = make_provider(
            ProviderConfig(
                role="embedding",
                endpoint="http://127.0.0.1:9",  # discard port, nothing listens
                max_retries=1,
                timeout_ms=300,
            )
        )
        with pytest.raises(TransportError):
            provider.embed_batch(["text"])

    def test_dim_change_is_fatal(self, wire_server, monkeypatch):
        provider = make_provider(ProviderConfig(role="embedding", endpoint=wire_server))
        provider.embed_batch(["warm up"])
        provider._dim = 7  # simulate a provider swap mid-session
        with pytest.raises(ProviderConfigError):
            provider.embed_batch(["next"])


class TestConfig:
    def test_default_model_ids(self):
        embed_cfg = ProviderConfig(role="embedding", endpoint="mock:0")
        assert embed_cfg.model_id == "mixedbread-ai/mxbai-embed-large-v1"
        rerank_cfg = ProviderConfig(role="rerank", endpoint="mock:0")
        assert rerank_cfg.model_id == "BAAI/bge-reranker-large"

    def test_mock_seed_parsing(self):
        cfg = ProviderConfig(role="embedding", endpoint="mock:42")
        assert cfg.is_mock and cfg.mock_seed == 42

    def test_invalid_role(self):
        with pytest.raises(ValueError):
            ProviderConfig(role="oracle", endpoint="mock:0")

    def test_invalid_temperature(self):
        with pytest.raises(ValueError):
            ProviderConfig(role="generation", endpoint="mock:0", temperature=-1)

    def test_provider_from_env(self, monkeypatch):
        monkeypatch.setenv("RAG_EMBED_URL", "mock:9")
        provider = provider_from_env("embedding")
        assert isinstance(provider, MockEmbedding)
        assert provider.seed == 9

    def test_mock_selection_via_factory(self):
        assert isinstance(
            make_provider(ProviderConfig(role="generation", endpoint="mock:1")),
            MockGeneration,
        )
