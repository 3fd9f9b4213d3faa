"""HTTP service exposing the QA chain.

    POST /api/ask     {"question": ..., "rag": bool, "top_k": int, "fetch_k": int}
    GET  /api/health  liveness plus provider model ids and index size
    GET  /api/stats   corpus/chunk/dataset counts

Bad requests return 400 with validation detail. Responses are
deterministic under mock providers (timings aside).
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from fastapi import FastAPI, Request
from fastapi.exceptions import RequestValidationError
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field, model_validator

from .generation import QAPipeline

logger = logging.getLogger(__name__)


class AskRequest(BaseModel):
    question: str = Field(min_length=1)
    rag: bool = True
    top_k: int = 5
    fetch_k: int = 10

    @model_validator(mode="after")
    def check_bounds(self):
        if not self.question.strip():
            raise ValueError("question must be non-empty")
        if not 1 <= self.top_k <= self.fetch_k <= 100:
            raise ValueError("bounds violated: 1 <= top_k <= fetch_k <= 100")
        return self


def corpus_stats(
    clean_root: str | Path | None = None,
    chunks_path: str | Path | None = None,
    dataset_path: str | Path | None = None,
) -> dict:
    """Counts per clean category, chunk count, and QA counts per split.

    Missing stores yield nulls rather than errors so the endpoint stays
    usable while a corpus is still being assembled.
    """
    stats: dict = {"html": None, "pdf": None, "paper": None, "chunks": None, "qa_pairs": None}
    if clean_root is not None and Path(clean_root).is_dir():
        for category in ("html", "pdf", "paper"):
            base = Path(clean_root) / category
            stats[category] = len(list(base.glob("*.txt"))) if base.is_dir() else 0
    if chunks_path is not None and Path(chunks_path).is_file():
        with open(chunks_path, "r", encoding="utf-8") as fh:
            stats["chunks"] = sum(1 for line in fh if line.strip())
    if dataset_path is not None and Path(dataset_path).is_file():
        counts = {"train": 0, "test": 0, "unsplit": 0}
        with open(dataset_path, "r", encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    split = json.loads(line).get("split", "unsplit")
                    counts[split] = counts.get(split, 0) + 1
        stats["qa_pairs"] = counts
    return stats


def create_app(
    pipeline: QAPipeline,
    clean_root: str | Path | None = None,
    chunks_path: str | Path | None = None,
    dataset_path: str | Path | None = None,
    dev_cors: bool = False,
) -> FastAPI:
    app = FastAPI(title="ragkit", docs_url=None, redoc_url=None)

    if dev_cors:
        from fastapi.middleware.cors import CORSMiddleware

        app.add_middleware(
            CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
        )

    @app.exception_handler(RequestValidationError)
    async def validation_handler(request: Request, exc: RequestValidationError):
        detail = [
            {"loc": list(e.get("loc", ())), "msg": str(e.get("msg", "")), "type": e.get("type", "")}
            for e in exc.errors()
        ]
        return JSONResponse(status_code=400, content={"detail": detail})

    @app.post("/api/ask")
    def ask(request: AskRequest):
        if request.rag:
            result = pipeline.answer(
                request.question, fetch_k=request.fetch_k, final_k=request.top_k
            )
        else:
            result = pipeline.answer_baseline(request.question)
        logger.info(
            "ask rag=%s top_k=%d question=%r", request.rag, request.top_k, request.question
        )
        return {
            "answer": result.answer,
            "contexts": [c.to_dict() for c in result.contexts],
            "used_rag": result.used_rag,
            "model_id": result.model_id,
            "rerank_degraded": result.rerank_degraded,
            "timings": result.timings,
        }

    @app.get("/api/health")
    def health():
        retriever = pipeline.retriever
        providers = {"generation": pipeline.model_id}
        if retriever is not None:
            providers["embedding"] = getattr(
                getattr(retriever.embed, "cfg", None), "model_id", ""
            )
            if retriever.rerank is not None:
                providers["rerank"] = getattr(
                    getattr(retriever.rerank, "cfg", None), "model_id", ""
                )
        return {
            "status": "ok",
            "index_chunks": len(retriever.index) if retriever else 0,
            "providers": providers,
        }

    @app.get("/api/stats")
    def stats():
        return corpus_stats(clean_root, chunks_path, dataset_path)

    return app


def serve(app: FastAPI, host: str = "127.0.0.1", port: int = 8000) -> None:
    import uvicorn

    uvicorn.run(app, host=host, port=port, log_level="info")
