"""QA-pair dataset generation, splitting, and annotator agreement.

Each chunk is turned into a reading-comprehension prompt and sent to a
generation provider; the model's reply is expected to contain a JSON array
of {"question", "answer"} objects, which is located and parsed tolerantly
(models like to decorate their output with prose and code fences).
"""

from __future__ import annotations

import json
import logging
import random
from collections import Counter
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence

from .chunking import Chunk

logger = logging.getLogger(__name__)

DEFAULT_NUM_QAS = 10
DEFAULT_TRAIN_FRACTION = 0.8


class QAParseError(ValueError):
    """Raised when no balanced JSON array can be parsed out of a response."""

    def __init__(self, message: str, raw: str):
        super().__init__(message)
        self.raw = raw


@dataclass(frozen=True)
class QAPair:
    question: str
    answer: str
    chunk_id: str
    split: str = "unsplit"  # train | test | unsplit

    def to_record(self) -> dict:
        return {
            "question": self.question,
            "answer": self.answer,
            "chunk_id": self.chunk_id,
            "split": self.split,
        }

    @classmethod
    def from_record(cls, record: dict) -> "QAPair":
        return cls(
            question=record["question"],
            answer=record["answer"],
            chunk_id=record["chunk_id"],
            split=record.get("split", "unsplit"),
        )


def _load_template() -> str:
    return resources.files("ragkit.data").joinpath("annotation_prompt.txt").read_text("utf-8")


def build_annotation_prompt(chunk: Chunk, num_qas: int = DEFAULT_NUM_QAS) -> str:
    """Render the annotation prompt for one chunk.

    The chunk text goes in verbatim after the dashed separator; no escaping
    is applied (the instructions make well-formed JSON the model's job).
    """
    if num_qas < 1:
        raise ValueError(f"num_qas must be >= 1, got {num_qas}")
    template = _load_template()
    return template.replace("{num_qas}", str(num_qas)).replace("{text}", chunk.text)


def _find_balanced_array(raw: str) -> str | None:
    """Locate the first '[' and its matching ']', aware of string literals."""
    start = raw.find("[")
    if start < 0:
        return None
    depth = 0
    in_string = False
    escaped = False
    for i in range(start, len(raw)):
        ch = raw[i]
        if in_string:
            if escaped:
                escaped = False
            elif ch == "\\":
                escaped = True
            elif ch == '"':
                in_string = False
            continue
        if ch == '"':
            in_string = True
        elif ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
            if depth == 0:
                return raw[start : i + 1]
    return None


@dataclass
class QAParseResult:
    pairs: list[tuple[str, str]]
    dropped: int = 0


def parse_qa_response(raw: str) -> QAParseResult:
    """Extract (question, answer) pairs from a model response.

    Finds the first balanced JSON array in the text (code fences and
    surrounding prose are ignored by construction) and keeps entries with
    non-empty "question" and "answer" string fields; malformed entries are
    dropped and counted.
    """
    snippet = _find_balanced_array(raw)
    if snippet is None:
        raise QAParseError("no balanced JSON array found in response", raw)
    try:
        data = json.loads(snippet)
    except json.JSONDecodeError as exc:
        raise QAParseError(f"array does not parse as JSON: {exc}", raw) from exc
    if not isinstance(data, list):
        raise QAParseError("parsed JSON is not an array", raw)

    pairs: list[tuple[str, str]] = []
    dropped = 0
    for entry in data:
        if not isinstance(entry, dict):
            dropped += 1
            continue
        question = entry.get("question")
        answer = entry.get("answer")
        if (
            isinstance(question, str)
            and isinstance(answer, str)
            and question.strip()
            and answer.strip()
        ):
            pairs.append((question.strip(), answer.strip()))
        else:
            dropped += 1
    if not pairs:
        logger.warning("response parsed to an empty pair list (%d dropped)", dropped)
    return QAParseResult(pairs=pairs, dropped=dropped)


@dataclass
class AnnotationReport:
    chunks_total: int = 0
    chunks_ok: int = 0
    chunks_retried: int = 0
    chunks_skipped: int = 0
    pairs_kept: int = 0
    pairs_dropped: int = 0
    duplicates_dropped: int = 0
    failures: list[dict] = field(default_factory=list)  # per-chunk {chunk_id, error}

    def to_dict(self) -> dict:
        return {
            "chunks_total": self.chunks_total,
            "chunks_ok": self.chunks_ok,
            "chunks_retried": self.chunks_retried,
            "chunks_skipped": self.chunks_skipped,
            "pairs_kept": self.pairs_kept,
            "pairs_dropped": self.pairs_dropped,
            "duplicates_dropped": self.duplicates_dropped,
            "failures": self.failures,
        }


def annotate_corpus(
    chunks: Iterable[Chunk],
    provider,
    num_qas: int = DEFAULT_NUM_QAS,
) -> tuple[list[QAPair], AnnotationReport]:
    """Generate QA pairs for every chunk via the generation provider.

    A chunk whose response fails to parse is retried once, then skipped and
    recorded in the report. Exact duplicate (question, answer) pairs within
    a chunk are dropped.
    """
    report = AnnotationReport()
    dataset: list[QAPair] = []
    for chunk in chunks:
        report.chunks_total += 1
        prompt = build_annotation_prompt(chunk, num_qas)
        parsed = None
        for attempt in (0, 1):
            try:
                parsed = parse_qa_response(provider.generate(prompt))
                break
            except Exception as exc:
                if attempt == 0:
                    report.chunks_retried += 1
                    continue
                report.chunks_skipped += 1
                report.failures.append({"chunk_id": chunk.chunk_id, "error": str(exc)})
                logger.warning("skipping chunk %s: %s", chunk.chunk_id, exc)
        if parsed is None:
            continue
        report.chunks_ok += 1
        report.pairs_dropped += parsed.dropped
        seen: set[tuple[str, str]] = set()
        for question, answer in parsed.pairs:
            if (question, answer) in seen:
                report.duplicates_dropped += 1
                continue
            seen.add((question, answer))
            dataset.append(QAPair(question=question, answer=answer, chunk_id=chunk.chunk_id))
            report.pairs_kept += 1
    return dataset, report


def split_dataset(
    pairs: Sequence[QAPair],
    train_fraction: float = DEFAULT_TRAIN_FRACTION,
    seed: int = 0,
) -> tuple[list[QAPair], list[QAPair]]:
    """Random train/test split: first floor(n * fraction) of a seeded
    permutation become train, the rest test."""
    if not 0 < train_fraction < 1:
        raise ValueError(f"train_fraction must be in (0, 1), got {train_fraction}")
    n = len(pairs)
    if n < 2:
        raise ValueError("cannot split fewer than 2 pairs")
    order = list(range(n))
    random.Random(seed).shuffle(order)
    cut = int(n * train_fraction)
    train = [replace(pairs[i], split="train") for i in order[:cut]]
    test = [replace(pairs[i], split="test") for i in order[cut:]]
    return train, test


def write_dataset(pairs: Iterable[QAPair], path: str | Path) -> int:
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for pair in pairs:
            fh.write(json.dumps(pair.to_record(), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_dataset(path: str | Path, split: str | None = None) -> list[QAPair]:
    pairs = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            pair = QAPair.from_record(json.loads(line))
            if split is None or pair.split == split:
                pairs.append(pair)
    return pairs


@dataclass(frozen=True)
class AgreementResult:
    kappa: float
    p_o: float
    p_e: float
    n_items: int
    categories: tuple
    degenerate: bool = False  # both annotators constant and equal (p_e = 1)


def cohen_kappa(labels_a: Sequence, labels_b: Sequence) -> AgreementResult:
    """Cohen's kappa between two annotators' label sequences.

    p_o is the fraction of positions where the annotators agree; p_e the
    chance agreement from each annotator's marginal label distribution;
    kappa = (p_o - p_e) / (1 - p_e). If both annotators are constant and
    identical (p_e = 1), kappa is 1 by convention, flagged as degenerate.
    """
    if len(labels_a) != len(labels_b):
        raise ValueError(
            f"label sequences differ in length: {len(labels_a)} vs {len(labels_b)}"
        )
    n = len(labels_a)
    if n == 0:
        raise ValueError("label sequences are empty")

    p_o = sum(a == b for a, b in zip(labels_a, labels_b)) / n
    count_a = Counter(labels_a)
    count_b = Counter(labels_b)
    categories = tuple(sorted(set(count_a) | set(count_b), key=repr))
    p_e = sum((count_a[c] / n) * (count_b[c] / n) for c in categories)
    if p_e == 1.0:
        return AgreementResult(
            kappa=1.0, p_o=p_o, p_e=p_e, n_items=n, categories=categories, degenerate=True
        )
    kappa = (p_o - p_e) / (1.0 - p_e)
    return AgreementResult(
        kappa=kappa, p_o=p_o, p_e=p_e, n_items=n, categories=categories
    )
