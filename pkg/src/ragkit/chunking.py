"""Split clean documents into fixed-size word chunks.

The chunk is the unit of annotation, embedding, and retrieval. Words are
maximal runs of non-whitespace; chunks never overlap, and concatenating a
document's chunks reproduces its word sequence exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

DEFAULT_CHUNK_SIZE = 1000


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    index: int
    text: str
    word_count: int
    source_path: str = ""

    def to_record(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "doc_id": self.doc_id,
            "index": self.index,
            "text": self.text,
            "word_count": self.word_count,
            "source_path": self.source_path,
        }

    @classmethod
    def from_record(cls, record: dict) -> "Chunk":
        return cls(
            chunk_id=record["chunk_id"],
            doc_id=record["doc_id"],
            index=int(record["index"]),
            text=record["text"],
            word_count=int(record["word_count"]),
            source_path=record.get("source_path", ""),
        )


def chunk_text(
    doc_id: str,
    text: str,
    chunk_size: int = DEFAULT_CHUNK_SIZE,
    source_path: str = "",
) -> list[Chunk]:
    """Split text into consecutive chunks of at most ``chunk_size`` words.

    Inter-word whitespace is normalized to single spaces inside each chunk.
    An empty or whitespace-only document yields an empty list.
    """
    if chunk_size < 1:
        raise ValueError(f"chunk_size must be >= 1, got {chunk_size}")
    words = text.split()
    chunks = []
    for index, start in enumerate(range(0, len(words), chunk_size)):
        piece = words[start : start + chunk_size]
        chunks.append(
            Chunk(
                chunk_id=f"{doc_id}#{index}",
                doc_id=doc_id,
                index=index,
                text=" ".join(piece),
                word_count=len(piece),
                source_path=source_path,
            )
        )
    return chunks


def write_chunks(chunks: Iterable[Chunk], path: str | Path) -> int:
    """Write chunks to a JSONL store. Returns the number written."""
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for chunk in chunks:
            fh.write(json.dumps(chunk.to_record(), ensure_ascii=False) + "\n")
            count += 1
    return count


def read_chunks(path: str | Path) -> list[Chunk]:
    return list(iter_chunks(path))


def iter_chunks(path: str | Path) -> Iterator[Chunk]:
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line:
                yield Chunk.from_record(json.loads(line))
