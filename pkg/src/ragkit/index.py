"""Flat vector index over chunks: build, persist, cosine search.

The index stores unit-norm embeddings in a fixed little-endian float32
layout so that save/load/save round-trips and same-seed rebuilds are
byte-identical across platforms. Search is an exhaustive scan: corpora
here are thousands of chunks, and the evaluation oracles demand exactness.

File layout (all integers little-endian uint32):

    magic   4 bytes  b"RKIX"
    version u32      1
    dim     u32
    count   u32
    model   u32 length + UTF-8 bytes of the embedding model id
    vectors count * dim float32 (row-major)
    ids     count * (u32 length + UTF-8 bytes)
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .chunking import Chunk

MAGIC = b"RKIX"
VERSION = 1


class IndexFormatError(Exception):
    """Raised for malformed index files and dimension mismatches."""


@dataclass
class ScoredChunk:
    chunk_id: str
    text: str = ""
    source_path: str = ""
    sim_score: float = 0.0
    rerank_score: float | None = None
    vector: np.ndarray | None = None

    def to_dict(self) -> dict:
        return {
            "chunk_id": self.chunk_id,
            "text": self.text,
            "source_path": self.source_path,
            "sim_score": self.sim_score,
            "rerank_score": self.rerank_score,
        }


@dataclass
class VectorIndex:
    dim: int
    chunk_ids: list[str]
    vectors: np.ndarray  # (count, dim) float32, unit rows
    model_id: str = ""
    built_at: str = ""  # in-memory only; excluded from the file for byte-stability

    def __len__(self) -> int:
        return len(self.chunk_ids)

    def vector_for(self, chunk_id: str) -> np.ndarray:
        return self.vectors[self.chunk_ids.index(chunk_id)]


def cosine_sim(a: Sequence[float] | np.ndarray, b: Sequence[float] | np.ndarray) -> float:
    """Dot product over the product of magnitudes, in [-1, 1]."""
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise ValueError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    norm_a = float(np.linalg.norm(va))
    norm_b = float(np.linalg.norm(vb))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ValueError("cosine similarity undefined for zero vectors")
    return float(np.dot(va, vb) / (norm_a * norm_b))


def build_index(chunks: Iterable[Chunk], embed, model_id: str = "", built_at: str = "") -> VectorIndex:
    """Embed every chunk's text and assemble the index in store order.

    Any provider failure aborts the build: a partial index would silently
    narrow retrieval.
    """
    chunk_list = list(chunks)
    if not chunk_list:
        raise ValueError("chunk store is empty")
    seen: set[str] = set()
    for chunk in chunk_list:
        if chunk.chunk_id in seen:
            raise ValueError(f"duplicate chunk_id in store: {chunk.chunk_id}")
        seen.add(chunk.chunk_id)
    vectors = embed.embed_batch([chunk.text for chunk in chunk_list])
    matrix = np.asarray(vectors, dtype=np.float32)
    if not model_id:
        model_id = getattr(getattr(embed, "cfg", None), "model_id", "")
    return VectorIndex(
        dim=int(matrix.shape[1]),
        chunk_ids=[chunk.chunk_id for chunk in chunk_list],
        vectors=matrix,
        model_id=model_id,
        built_at=built_at,
    )


def top_k(index: VectorIndex, query_vec: np.ndarray, k: int) -> list[ScoredChunk]:
    """The k entries most cosine-similar to the query, ties broken by
    chunk_id ascending. Returns fewer when the index is smaller than k."""
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    query = np.asarray(query_vec, dtype=np.float64)
    if query.shape != (index.dim,):
        raise IndexFormatError(
            f"query dim {query.shape} does not match index dim {index.dim}"
        )
    norm = float(np.linalg.norm(query))
    if norm == 0.0:
        raise ValueError("query vector has zero norm")
    query = query / norm
    sims = index.vectors.astype(np.float64) @ query
    order = sorted(range(len(index)), key=lambda i: (-sims[i], index.chunk_ids[i]))
    return [
        ScoredChunk(
            chunk_id=index.chunk_ids[i],
            sim_score=float(sims[i]),
            vector=index.vectors[i],
        )
        for i in order[:k]
    ]


def save_index(index: VectorIndex, path: str | Path) -> None:
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<III", VERSION, index.dim, len(index)))
        model = index.model_id.encode("utf-8")
        fh.write(struct.pack("<I", len(model)))
        fh.write(model)
        fh.write(np.ascontiguousarray(index.vectors, dtype="<f4").tobytes())
        for chunk_id in index.chunk_ids:
            encoded = chunk_id.encode("utf-8")
            fh.write(struct.pack("<I", len(encoded)))
            fh.write(encoded)


def load_index(path: str | Path) -> VectorIndex:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise IndexFormatError(f"{path}: not an index file (bad magic)")
    version, dim, count = struct.unpack_from("<III", raw, 4)
    if version != VERSION:
        raise IndexFormatError(f"{path}: unsupported index version {version}")
    offset = 16
    (model_len,) = struct.unpack_from("<I", raw, offset)
    offset += 4
    model_id = raw[offset : offset + model_len].decode("utf-8")
    offset += model_len
    matrix_bytes = count * dim * 4
    vectors = np.frombuffer(
        raw[offset : offset + matrix_bytes], dtype="<f4"
    ).reshape(count, dim)
    offset += matrix_bytes
    chunk_ids = []
    for _ in range(count):
        (id_len,) = struct.unpack_from("<I", raw, offset)
        offset += 4
        chunk_ids.append(raw[offset : offset + id_len].decode("utf-8"))
        offset += id_len
    return VectorIndex(dim=dim, chunk_ids=chunk_ids, vectors=vectors.copy(), model_id=model_id)
