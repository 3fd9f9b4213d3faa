"""Uniform interfaces to the three model roles: embed, rerank, generate.

Real inference happens over a JSON-over-HTTP wire protocol:

    POST <endpoint>/embed     {"texts": [...]}            -> {"vectors": [[...], ...], "dim": int}
    POST <endpoint>/rerank    {"query": ..., "documents": [...]} -> {"scores": [...]}
    POST <endpoint>/generate  {"prompt": ..., "max_new_tokens": int,
                               "temperature": num, "seed": int}  -> {"text": ...}

An endpoint of ``mock:<seed>`` selects deterministic offline stand-ins:
bag-of-words hash embeddings, token-overlap rerank scores, and an
extractive generator. Mock outputs are pure functions of (input, seed),
byte-identical across runs and platforms.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import time
from dataclasses import dataclass

import numpy as np
import requests

logger = logging.getLogger(__name__)

ROLE_EMBEDDING = "embedding"
ROLE_RERANK = "rerank"
ROLE_GENERATION = "generation"

DEFAULT_MODEL_IDS = {
    ROLE_EMBEDDING: "mixedbread-ai/mxbai-embed-large-v1",
    ROLE_RERANK: "BAAI/bge-reranker-large",
    ROLE_GENERATION: "meta-llama/Llama-2-7b-chat-hf",
}
# Separate model used to embed answers for the cosine metric.
EVAL_EMBED_MODEL_ID = "sentence-transformers/all-MiniLM-L6-v2"

ENV_VARS = {
    ROLE_EMBEDDING: "RAG_EMBED_URL",
    ROLE_RERANK: "RAG_RERANK_URL",
    ROLE_GENERATION: "RAG_GEN_URL",
}

MOCK_EMBED_DIM = 256
_MOCK_FALLBACK = "I don't know."


class ProviderError(Exception):
    """Base class for provider failures."""


class TransportError(ProviderError):
    """Endpoint unreachable, timed out, or kept returning server errors."""


class ProviderConfigError(ProviderError):
    """Fatal misconfiguration, e.g. embedding dimension changed mid-session."""


class ContextOverflowError(ProviderError):
    """The endpoint reported the prompt exceeds its context window."""


@dataclass
class ProviderConfig:
    role: str
    endpoint: str  # URL base or "mock:<seed>"
    model_id: str = ""
    timeout_ms: int = 30_000
    max_batch: int = 32
    max_new_tokens: int = 256
    temperature: float = 0.0
    seed: int = 0
    max_retries: int = 3

    def __post_init__(self) -> None:
        if self.role not in (ROLE_EMBEDDING, ROLE_RERANK, ROLE_GENERATION):
            raise ValueError(f"unknown provider role: {self.role!r}")
        if self.max_batch < 1:
            raise ValueError("max_batch must be >= 1")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if not self.model_id:
            self.model_id = DEFAULT_MODEL_IDS[self.role]

    @property
    def is_mock(self) -> bool:
        return self.endpoint.startswith("mock")

    @property
    def mock_seed(self) -> int:
        _, _, seed = self.endpoint.partition(":")
        return int(seed) if seed else self.seed


def _normalize(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        raise ValueError("cannot normalize a zero vector")
    return vec / norm


def _mock_tokens(text: str) -> list[str]:
    return text.lower().split()


def _hash_bucket(token: str, seed: int, dim: int) -> int:
    digest = hashlib.blake2b(f"{seed}:{token}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little") % dim


def mock_embed(text: str, dim: int = MOCK_EMBED_DIM, seed: int = 0) -> np.ndarray:
    """Deterministic bag-of-words embedding: hash tokens into ``dim``
    buckets and L2-normalize the count histogram.

    Cosine between two mock embeddings is then a pure function of token
    overlap, which makes retrieval behaviour hand-checkable in tests.
    """
    if dim < 8:
        raise ValueError(f"dim must be >= 8, got {dim}")
    tokens = _mock_tokens(text)
    if not tokens:
        raise ValueError("cannot embed empty text")
    histogram = np.zeros(dim, dtype=np.float64)
    for token in tokens:
        histogram[_hash_bucket(token, seed, dim)] += 1.0
    return _normalize(histogram)


def split_sentences(text: str) -> list[str]:
    """Crude sentence split on ., !, ? boundaries; used by the mock generator."""
    parts = re.split(r"(?<=[.!?])\s+", text.strip())
    return [p.strip() for p in parts if p.strip()]


class MockEmbedding:
    """Offline embedding provider; see :func:`mock_embed`."""

    def __init__(self, cfg: ProviderConfig | None = None, dim: int = MOCK_EMBED_DIM):
        self.cfg = cfg or ProviderConfig(role=ROLE_EMBEDDING, endpoint="mock:0")
        self.seed = self.cfg.mock_seed
        self.dim = dim

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        if not texts:
            raise ValueError("texts must be non-empty")
        return [mock_embed(text, self.dim, self.seed) for text in texts]


class MockRerank:
    """Scores a (query, candidate) pair by normalized token overlap."""

    def __init__(self, cfg: ProviderConfig | None = None):
        self.cfg = cfg or ProviderConfig(role=ROLE_RERANK, endpoint="mock:0")

    def score_pairs(self, query: str, candidates: list[str]) -> list[float]:
        if not candidates:
            raise ValueError("candidates must be non-empty")
        query_tokens = set(_mock_tokens(query))
        scores = []
        for candidate in candidates:
            overlap = len(query_tokens & set(_mock_tokens(candidate)))
            scores.append(overlap / max(1, len(query_tokens)))
        return scores


class MockGeneration:
    """Extractive mock generator.

    For QA prompts ("Question: ... Context: ... Answer:") it returns the
    context sentence with maximal question-token overlap, or a fixed
    fallback when the context is empty or shares no tokens. For annotation
    prompts (dashed separator + "### Response:") it returns a well-formed
    JSON array with the requested number of QA pairs drawn from the text.
    """

    def __init__(self, cfg: ProviderConfig | None = None):
        self.cfg = cfg or ProviderConfig(role=ROLE_GENERATION, endpoint="mock:0")

    def generate(self, prompt: str) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        if "----------------" in prompt and "### Response:" in prompt:
            return self._annotate(prompt)
        return self._answer(prompt)

    def _answer(self, prompt: str) -> str:
        question = _section(prompt, "Question:", "Context:")
        context = _section(prompt, "Context:", "Answer:")
        if not context:
            return _MOCK_FALLBACK
        question_tokens = set(_mock_tokens(question))
        best_sentence, best_overlap = None, 0
        for sentence in split_sentences(context):
            overlap = len(question_tokens & set(_mock_tokens(sentence)))
            if overlap > best_overlap:
                best_sentence, best_overlap = sentence, overlap
        return best_sentence if best_sentence is not None else _MOCK_FALLBACK

    def _annotate(self, prompt: str) -> str:
        match = re.search(r"come up with (\d+) question and answer pairs", prompt)
        num_qas = int(match.group(1)) if match else 1
        body = prompt.split("----------------", 1)[1]
        body = body.split("### Response:", 1)[0].strip()
        sentences = split_sentences(body) or [body]
        pairs = []
        for i in range(num_qas):
            pairs.append(
                {
                    "question": f"What does part {i + 1} of the passage describe?",
                    "answer": sentences[i % len(sentences)],
                }
            )
        return json.dumps(pairs, ensure_ascii=False, indent=2)


def _section(prompt: str, start_marker: str, end_marker: str) -> str:
    start = prompt.find(start_marker)
    if start < 0:
        return ""
    start += len(start_marker)
    end = prompt.find(end_marker, start)
    if end < 0:
        end = len(prompt)
    return prompt[start:end].strip()


class _HttpBase:
    def __init__(self, cfg: ProviderConfig):
        self.cfg = cfg
        self.session = requests.Session()

    def _post(self, path: str, payload: dict) -> dict:
        url = self.cfg.endpoint.rstrip("/") + path
        timeout = self.cfg.timeout_ms / 1000.0
        last_error: Exception | None = None
        for attempt in range(self.cfg.max_retries):
            try:
                response = self.session.post(url, json=payload, timeout=timeout)
                if response.status_code in (429,) or response.status_code >= 500:
                    last_error = TransportError(
                        f"{url} returned {response.status_code}"
                    )
                elif response.status_code >= 400:
                    detail = response.text[:500]
                    if "context" in detail.lower() and "length" in detail.lower():
                        raise ContextOverflowError(
                            f"{url}: prompt exceeds context window; shrink the context ({detail})"
                        )
                    raise ProviderError(f"{url} returned {response.status_code}: {detail}")
                else:
                    return response.json()
            except (requests.ConnectionError, requests.Timeout) as exc:
                last_error = TransportError(f"{url}: {exc}")
            if attempt + 1 < self.cfg.max_retries:
                time.sleep(0.05 * (2**attempt))
        raise last_error if last_error else TransportError(f"{url}: request failed")


class HttpEmbedding(_HttpBase):
    """Embedding over the wire protocol. Vectors are re-normalized locally
    so cosine similarity is computable as a plain dot product."""

    def __init__(self, cfg: ProviderConfig):
        super().__init__(cfg)
        self._dim: int | None = None

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        if not texts:
            raise ValueError("texts must be non-empty")
        if any(not t for t in texts):
            raise ValueError("every text must be non-empty")
        vectors: list[np.ndarray] = []
        for start in range(0, len(texts), self.cfg.max_batch):
            batch = texts[start : start + self.cfg.max_batch]
            data = self._post("/embed", {"texts": batch})
            dim = int(data["dim"])
            if self._dim is None:
                self._dim = dim
            elif dim != self._dim:
                raise ProviderConfigError(
                    f"embedding dimension changed from {self._dim} to {dim}"
                )
            if len(data["vectors"]) != len(batch):
                raise ProviderError(
                    f"expected {len(batch)} vectors, got {len(data['vectors'])}"
                )
            for values in data["vectors"]:
                vec = np.asarray(values, dtype=np.float64)
                if vec.shape != (dim,):
                    raise ProviderConfigError(
                        f"vector of length {vec.shape} does not match dim {dim}"
                    )
                vectors.append(_normalize(vec))
        return vectors


class HttpRerank(_HttpBase):
    def score_pairs(self, query: str, candidates: list[str]) -> list[float]:
        if not candidates:
            raise ValueError("candidates must be non-empty")
        data = self._post("/rerank", {"query": query, "documents": candidates})
        scores = [float(s) for s in data["scores"]]
        if len(scores) != len(candidates):
            raise ProviderError(
                f"expected {len(candidates)} scores, got {len(scores)}"
            )
        if any(not np.isfinite(s) for s in scores):
            raise ProviderError("rerank endpoint returned non-finite scores")
        return scores


class HttpGeneration(_HttpBase):
    def generate(self, prompt: str) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        data = self._post(
            "/generate",
            {
                "prompt": prompt,
                "max_new_tokens": self.cfg.max_new_tokens,
                "temperature": self.cfg.temperature,
                "seed": self.cfg.seed,
            },
        )
        return str(data["text"])


def make_provider(cfg: ProviderConfig):
    """Instantiate the provider implementation for a config."""
    if cfg.is_mock:
        return {
            ROLE_EMBEDDING: MockEmbedding,
            ROLE_RERANK: MockRerank,
            ROLE_GENERATION: MockGeneration,
        }[cfg.role](cfg)
    return {
        ROLE_EMBEDDING: HttpEmbedding,
        ROLE_RERANK: HttpRerank,
        ROLE_GENERATION: HttpGeneration,
    }[cfg.role](cfg)


def provider_from_env(role: str, default_endpoint: str = "mock:0", **overrides):
    """Build a provider from ``RAG_EMBED_URL`` / ``RAG_RERANK_URL`` /
    ``RAG_GEN_URL``, falling back to the given default endpoint."""
    endpoint = os.environ.get(ENV_VARS[role], default_endpoint)
    return make_provider(ProviderConfig(role=role, endpoint=endpoint, **overrides))
