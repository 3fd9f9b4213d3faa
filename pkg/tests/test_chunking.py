import random

import pytest
from hypothesis import given, settings, strategies as st

from ragkit.chunking import Chunk, chunk_text, read_chunks, write_chunks


def make_words(n):
    return [f"w{i}" for i in range(n)]


def test_three_chunk_split():
    text = " ".join(make_words(2500))
    chunks = chunk_text("doc", text, chunk_size=1000)
    assert [c.word_count for c in chunks] == [1000, 1000, 500]
    assert [c.chunk_id for c in chunks] == ["doc#0", "doc#1", "doc#2"]


def test_under_one_chunk():
    chunks = chunk_text("doc", " ".join(make_words(999)), chunk_size=1000)
    assert len(chunks) == 1
    assert chunks[0].word_count == 999


def test_exact_boundary_single_chunk():
    chunks = chunk_text("doc", " ".join(make_words(1000)), chunk_size=1000)
    assert len(chunks) == 1


def test_empty_document():
    assert chunk_text("doc", "   ") == []


def test_invalid_size():
    with pytest.raises(ValueError):
        chunk_text("doc", "a b c", chunk_size=0)


def test_whitespace_normalized_inside_chunks():
    chunks = chunk_text("doc", "a\t b\n\n c   d", chunk_size=3)
    assert chunks[0].text == "a b c"
    assert chunks[1].text == "d"


def test_lossless_on_random_documents():
    # acceptance: 1,000 random documents up to 10,000 words
    rng = random.Random(42)
    for _ in range(1000):
        n_words = rng.randint(1, 10_000)
        size = rng.choice([1, 7, 100, 1000, 2048])
        words = [f"t{rng.randrange(50)}" for _ in range(n_words)]
        chunks = chunk_text("d", " ".join(words), chunk_size=size)
        flattened = [w for c in chunks for w in c.text.split()]
        assert flattened == words
        assert all(c.word_count == size for c in chunks[:-1])
        assert 1 <= chunks[-1].word_count <= size
        assert [c.index for c in chunks] == list(range(len(chunks)))


@settings(max_examples=200)
@given(
    st.lists(st.text(alphabet="abcxyz", min_size=1, max_size=6), min_size=1, max_size=400),
    st.integers(min_value=1, max_value=50),
)
def test_lossless_word_property(words, size):
    chunks = chunk_text("d", " ".join(words), chunk_size=size)
    assert [w for c in chunks for w in c.text.split()] == words


def test_deterministic():
    text = " ".join(make_words(3210))
    assert chunk_text("d", text) == chunk_text("d", text)


def test_jsonl_round_trip(tmp_path):
    chunks = chunk_text("doc", " ".join(make_words(250)), chunk_size=100, source_path="clean/html/doc.txt")
    path = tmp_path / "chunks.jsonl"
    assert write_chunks(chunks, path) == 3
    assert read_chunks(path) == chunks
