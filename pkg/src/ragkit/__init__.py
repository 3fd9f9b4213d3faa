"""ragkit: an end-to-end domain question-answering engine.

Builds a corpus by crawling web pages and fetching scholarly PDFs, cleans
and chunks the text, auto-annotates QA datasets with a generation model,
serves questions through an embed -> MMR -> rerank -> generate chain, and
evaluates itself with token P/R/F1, cosine similarity, and BLEU.

All model inference happens behind pluggable providers (HTTP wire protocol
or deterministic offline mocks), so the whole pipeline runs without GPUs.
"""

__version__ = "0.1.0"
