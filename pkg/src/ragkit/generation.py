"""Prompt rendering and answer generation.

The QA prompt is a fixed instruction scaffold with a question slot and a
context slot; retrieved chunks are joined into the context slot in rank
order. The baseline (no retrieval) path renders the identical template
with an empty context, which is what makes the RAG-vs-baseline ablation a
pure context ablation.
"""

from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .annotate import QAPair
from .chunking import Chunk
from .index import ScoredChunk
from .retrieval import DEFAULT_FETCH_K, DEFAULT_FINAL_K, Retriever

QUESTION_SLOT = "{question}"
CONTEXT_SLOT = "{context}"
CONTEXT_SEPARATOR = "\n\n"
DEFAULT_CHAR_BUDGET = 12_000


@dataclass(frozen=True)
class QAPromptTemplate:
    """The generation prompt scaffold with {question} and {context} slots."""

    text: str

    def __post_init__(self) -> None:
        for slot in (QUESTION_SLOT, CONTEXT_SLOT):
            if slot not in self.text:
                raise ValueError(f"template is missing the {slot} slot")

    @classmethod
    def default(cls) -> "QAPromptTemplate":
        raw = resources.files("ragkit.data").joinpath("qa_prompt.txt").read_text("utf-8")
        return cls(raw)

    @classmethod
    def from_file(cls, path: str | Path) -> "QAPromptTemplate":
        return cls(Path(path).read_text("utf-8"))

    @property
    def system_block(self) -> str:
        start = self.text.find("<<SYS>>")
        end = self.text.find("<</SYS>>")
        if start < 0 or end < 0:
            return ""
        return self.text[start + len("<<SYS>>") : end].strip()

    @property
    def answer_cue(self) -> str:
        return "Answer:"

    def render(self, question: str, context: str) -> str:
        return self.text.replace(QUESTION_SLOT, question).replace(CONTEXT_SLOT, context)


@dataclass
class RenderedPrompt:
    text: str
    contexts: list[ScoredChunk]
    truncated: bool = False


def render_qa_prompt(
    question: str,
    contexts: Sequence[ScoredChunk],
    template: QAPromptTemplate | None = None,
    char_budget: int | None = DEFAULT_CHAR_BUDGET,
) -> RenderedPrompt:
    """Render the QA prompt with contexts joined in rank order.

    If the rendered prompt exceeds the character budget, whole contexts
    are dropped from the tail (lowest-ranked first) and the truncation is
    flagged; contexts are never cut mid-text, so everything in the prompt
    stays citable.
    """
    if not question.strip():
        raise ValueError("question must be non-empty")
    template = template or QAPromptTemplate.default()
    kept = list(contexts)
    truncated = False
    while True:
        block = CONTEXT_SEPARATOR.join(c.text for c in kept)
        text = template.render(question, block)
        if char_budget is None or len(text) <= char_budget or not kept:
            return RenderedPrompt(text=text, contexts=kept, truncated=truncated)
        kept.pop()
        truncated = True


@dataclass
class SystemAnswer:
    question: str
    answer: str
    contexts: list[ScoredChunk] = field(default_factory=list)
    used_rag: bool = False
    model_id: str = ""
    latency_ms: float = 0.0
    timings: dict = field(default_factory=dict)  # per-stage ms
    rerank_degraded: bool = False
    context_truncated: bool = False

    def to_dict(self) -> dict:
        return {
            "question": self.question,
            "answer": self.answer,
            "contexts": [c.to_dict() for c in self.contexts],
            "used_rag": self.used_rag,
            "model_id": self.model_id,
            "latency_ms": self.latency_ms,
            "rerank_degraded": self.rerank_degraded,
            "context_truncated": self.context_truncated,
        }


class QAPipeline:
    """retrieve -> render -> generate, plus the no-context baseline path."""

    def __init__(
        self,
        retriever: Retriever | None,
        generation,
        template: QAPromptTemplate | None = None,
        char_budget: int | None = DEFAULT_CHAR_BUDGET,
        fetch_k: int = DEFAULT_FETCH_K,
        final_k: int = DEFAULT_FINAL_K,
    ):
        self.retriever = retriever
        self.generation = generation
        self.template = template or QAPromptTemplate.default()
        self.char_budget = char_budget
        self.fetch_k = fetch_k
        self.final_k = final_k

    @property
    def model_id(self) -> str:
        return getattr(getattr(self.generation, "cfg", None), "model_id", "")

    def answer(
        self,
        question: str,
        fetch_k: int | None = None,
        final_k: int | None = None,
        use_rerank: bool = True,
    ) -> SystemAnswer:
        if self.retriever is None:
            raise ValueError("no retriever configured; use answer_baseline")
        if len(self.retriever.index) == 0:
            raise ValueError("index empty")
        start = time.monotonic()
        retrieved = self.retriever.retrieve(
            question,
            fetch_k=fetch_k or self.fetch_k,
            final_k=final_k or self.final_k,
            use_rerank=use_rerank,
        )
        retrieved_at = time.monotonic()
        rendered = render_qa_prompt(
            question, retrieved.chunks, self.template, self.char_budget
        )
        completion = self.generation.generate(rendered.text).strip()
        done = time.monotonic()
        return SystemAnswer(
            question=question,
            answer=completion,
            contexts=rendered.contexts,
            used_rag=True,
            model_id=self.model_id,
            latency_ms=(done - start) * 1000.0,
            timings={
                "retrieve_ms": (retrieved_at - start) * 1000.0,
                "generate_ms": (done - retrieved_at) * 1000.0,
            },
            rerank_degraded=retrieved.rerank_degraded,
            context_truncated=rendered.truncated,
        )

    def answer_baseline(self, question: str) -> SystemAnswer:
        """Same template, empty context: the no-RAG ablation arm."""
        start = time.monotonic()
        rendered = render_qa_prompt(question, [], self.template, self.char_budget)
        completion = self.generation.generate(rendered.text).strip()
        done = time.monotonic()
        return SystemAnswer(
            question=question,
            answer=completion,
            contexts=[],
            used_rag=False,
            model_id=self.model_id,
            latency_ms=(done - start) * 1000.0,
            timings={"generate_ms": (done - start) * 1000.0},
        )


def finetune_template() -> str:
    return resources.files("ragkit.data").joinpath("finetune_prompt.txt").read_text("utf-8")


def export_finetune(
    pairs: Iterable[QAPair], chunks: Iterable[Chunk], out_path: str | Path
) -> int:
    """Write question+context+answer records in the fine-tune prompt layout.

    Training itself is out of scope; this is a dataset formatter for
    downstream trainers. Returns the number of records written.
    """
    chunk_map = {chunk.chunk_id: chunk for chunk in chunks}
    template = finetune_template()
    count = 0
    with open(out_path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            chunk = chunk_map.get(pair.chunk_id)
            if chunk is None:
                continue
            rendered = (
                template.replace("{question}", pair.question)
                .replace("{context}", chunk.text)
                .replace("{answer}", pair.answer)
            )
            record = {
                "question": pair.question,
                "context": chunk.text,
                "answer": pair.answer,
                "text": rendered,
            }
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            count += 1
    return count
