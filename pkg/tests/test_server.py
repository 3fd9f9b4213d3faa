import pytest
from fastapi.testclient import TestClient

from ragkit.chunking import Chunk
from ragkit.generation import QAPipeline
from ragkit.index import build_index
from ragkit.providers import MockEmbedding, MockGeneration, MockRerank
from ragkit.retrieval import Retriever
from ragkit.server import corpus_stats, create_app


def make_chunks():
    texts = [
        f"Campus bulletin item {i}. Weekly announcements for week {i}." for i in range(12)
    ]
    texts.append(
        "Academic calendar update. Classes begin on August 26, 2024 for the fall semester."
    )
    return [
        Chunk(chunk_id=f"doc{i:02d}#0", doc_id=f"doc{i:02d}", index=0, text=text,
              word_count=len(text.split()), source_path=f"clean/html/doc{i:02d}.txt")
        for i, text in enumerate(texts)
    ]


@pytest.fixture(scope="module")
def client():
    chunks = make_chunks()
    index = build_index(chunks, MockEmbedding())
    retriever = Retriever(index, chunks, MockEmbedding(), MockRerank())
    pipeline = QAPipeline(retriever, MockGeneration())
    app = create_app(pipeline)
    with TestClient(app) as test_client:
        test_client.app_chunks = chunks
        yield test_client


class TestAsk:
    def test_happy_path(self, client):
        response = client.post(
            "/api/ask", json={"question": "When do classes begin for the fall semester?"}
        )
        assert response.status_code == 200
        data = response.json()
        assert "August 26" in data["answer"]
        assert data["used_rag"] is True
        assert len(data["contexts"]) == 5
        for context in data["contexts"]:
            assert set(context) == {
                "chunk_id", "text", "source_path", "sim_score", "rerank_score",
            }
        assert "retrieve_ms" in data["timings"]

    def test_contexts_sorted_by_rerank(self, client):
        data = client.post("/api/ask", json={"question": "weekly announcements"}).json()
        scores = [c["rerank_score"] for c in data["contexts"]]
        assert scores == sorted(scores, reverse=True)

    def test_contexts_retrievable_from_chunk_store(self, client):
        data = client.post(
            "/api/ask", json={"question": "classes begin fall semester"}
        ).json()
        by_id = {c.chunk_id: c for c in client.app_chunks}
        for context in data["contexts"]:
            assert context["text"] == by_id[context["chunk_id"]].text

    def test_rag_off_baseline(self, client):
        data = client.post(
            "/api/ask", json={"question": "When do classes begin?", "rag": False}
        ).json()
        assert data["used_rag"] is False
        assert data["contexts"] == []
        assert data["answer"] == "I don't know."

    def test_top_k_respected(self, client):
        data = client.post(
            "/api/ask", json={"question": "campus bulletin", "top_k": 3, "fetch_k": 8}
        ).json()
        assert len(data["contexts"]) == 3

    def test_empty_question_400(self, client):
        response = client.post("/api/ask", json={"question": ""})
        assert response.status_code == 400
        assert "detail" in response.json()

    def test_blank_question_400(self, client):
        assert client.post("/api/ask", json={"question": "   "}).status_code == 400

    def test_bad_bounds_400(self, client):
        response = client.post(
            "/api/ask", json={"question": "q", "top_k": 10, "fetch_k": 5}
        )
        assert response.status_code == 400
        response = client.post(
            "/api/ask", json={"question": "q", "top_k": 1, "fetch_k": 500}
        )
        assert response.status_code == 400

    def test_deterministic_minus_timings(self, client):
        payload = {"question": "When do classes begin for the fall semester?"}
        first = client.post("/api/ask", json=payload).json()
        second = client.post("/api/ask", json=payload).json()
        first.pop("timings"), second.pop("timings")
        assert first == second


class TestHealth:
    def test_health_shape(self, client):
        data = client.get("/api/health").json()
        assert data["status"] == "ok"
        assert data["index_chunks"] == 13
        assert data["providers"]["embedding"] == "mixedbread-ai/mxbai-embed-large-v1"
        assert data["providers"]["rerank"] == "BAAI/bge-reranker-large"


class TestStats:
    def test_stats_endpoint_with_no_stores(self, client):
        data = client.get("/api/stats").json()
        assert data["chunks"] is None

    def test_corpus_stats_counts(self, tmp_path):
        clean = tmp_path / "clean"
        for category, count in (("html", 3), ("pdf", 1), ("paper", 2)):
            (clean / category).mkdir(parents=True)
            for i in range(count):
                (clean / category / f"d{i}.txt").write_text("x")
        chunks_file = tmp_path / "chunks.jsonl"
        chunks_file.write_text('{"chunk_id":"a#0"}\n{"chunk_id":"b#0"}\n')
        dataset = tmp_path / "qa.jsonl"
        dataset.write_text(
            '{"question":"q","answer":"a","chunk_id":"a#0","split":"train"}\n'
            '{"question":"q2","answer":"a2","chunk_id":"b#0","split":"test"}\n'
        )
        stats = corpus_stats(clean, chunks_file, dataset)
        assert stats["html"] == 3 and stats["pdf"] == 1 and stats["paper"] == 2
        assert stats["chunks"] == 2
        assert stats["qa_pairs"] == {"train": 1, "test": 1, "unsplit": 0}

    def test_missing_stores_give_nulls(self):
        stats = corpus_stats(None, None, None)
        assert stats == {
            "html": None, "pdf": None, "paper": None, "chunks": None, "qa_pairs": None,
        }
