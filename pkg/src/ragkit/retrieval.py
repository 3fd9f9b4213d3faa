"""Query-time retrieval: cosine candidates, MMR diversification, reranking.

The chain follows fetch-then-rerank: embed the question, take the top
2*fetch_k chunks by cosine, MMR-select fetch_k of them, score those with
the cross-encoder, and return the final_k best by rerank score. If the
rerank provider is down the result degrades to MMR order with a flag set,
so answers stay possible.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .chunking import Chunk
from .index import ScoredChunk, VectorIndex, cosine_sim, top_k
from .providers import ProviderError

logger = logging.getLogger(__name__)

DEFAULT_FETCH_K = 10
DEFAULT_FINAL_K = 5
DEFAULT_MMR_LAMBDA = 0.5


def mmr_select(
    query_vec: np.ndarray,
    candidates: list[ScoredChunk],
    lambda_param: float = DEFAULT_MMR_LAMBDA,
    k: int = DEFAULT_FINAL_K,
) -> list[ScoredChunk]:
    """Greedy maximal-marginal-relevance selection.

    The first pick is the pure similarity argmax; each later pick maximizes
    lambda * sim(d, q) - (1 - lambda) * max over selected s of sim(d, s).
    All ties break by chunk_id ascending, which keeps evaluation runs
    reproducible. Candidates must carry their vectors.
    """
    if not 0.0 <= lambda_param <= 1.0:
        raise ValueError(f"lambda_param must be in [0, 1], got {lambda_param}")
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    if not candidates:
        return []
    if any(c.vector is None for c in candidates):
        raise ValueError("every MMR candidate needs a vector")

    query = np.asarray(query_vec, dtype=np.float64)
    sims = [cosine_sim(c.vector, query) for c in candidates]

    remaining = list(range(len(candidates)))
    selected: list[int] = []
    while remaining and len(selected) < k:
        if not selected:
            best = min(remaining, key=lambda i: (-sims[i], candidates[i].chunk_id))
        else:
            def mmr_score(i: int) -> float:
                redundancy = max(
                    cosine_sim(candidates[i].vector, candidates[j].vector)
                    for j in selected
                )
                return lambda_param * sims[i] - (1.0 - lambda_param) * redundancy

            best = min(remaining, key=lambda i: (-mmr_score(i), candidates[i].chunk_id))
        selected.append(best)
        remaining.remove(best)
    return [candidates[i] for i in selected]


@dataclass
class RetrievalResult:
    chunks: list[ScoredChunk] = field(default_factory=list)
    rerank_degraded: bool = False


class Retriever:
    """Joins the vector index with the chunk store and the model providers."""

    def __init__(
        self,
        index: VectorIndex,
        chunks: list[Chunk],
        embed,
        rerank=None,
        mmr_lambda: float = DEFAULT_MMR_LAMBDA,
    ):
        self.index = index
        self.chunk_map = {chunk.chunk_id: chunk for chunk in chunks}
        missing = [cid for cid in index.chunk_ids if cid not in self.chunk_map]
        if missing:
            raise ValueError(
                f"index references chunk_ids missing from the store: {missing[:5]}"
            )
        self.embed = embed
        self.rerank = rerank
        self.mmr_lambda = mmr_lambda

    def _attach_text(self, scored: ScoredChunk) -> ScoredChunk:
        chunk = self.chunk_map[scored.chunk_id]
        scored.text = chunk.text
        scored.source_path = chunk.source_path
        return scored

    def retrieve(
        self,
        question: str,
        fetch_k: int = DEFAULT_FETCH_K,
        final_k: int = DEFAULT_FINAL_K,
        use_rerank: bool = True,
    ) -> RetrievalResult:
        if not question.strip():
            raise ValueError("question must be non-empty")
        if final_k > fetch_k:
            raise ValueError(f"final_k ({final_k}) must be <= fetch_k ({fetch_k})")
        (query_vec,) = self.embed.embed_batch([question])
        pool = top_k(self.index, query_vec, 2 * fetch_k)
        picked = mmr_select(query_vec, pool, self.mmr_lambda, fetch_k)
        for scored in picked:
            self._attach_text(scored)

        if self.rerank is None or not use_rerank:
            return RetrievalResult(chunks=picked[:final_k])

        try:
            scores = self.rerank.score_pairs(question, [c.text for c in picked])
        except ProviderError as exc:
            logger.warning("rerank degraded to MMR order: %s", exc)
            return RetrievalResult(chunks=picked[:final_k], rerank_degraded=True)
        for scored, value in zip(picked, scores):
            scored.rerank_score = float(value)
        ranked = sorted(picked, key=lambda c: (-c.rerank_score, c.chunk_id))
        return RetrievalResult(chunks=ranked[:final_k])
