"""Umbrella command line: crawl / ingest / chunk / annotate / split / kappa /
index / query / ask / eval / compare / export-finetune / stats / serve.

Exit codes: 0 success, 2 validation error, 3 missing artifact, 4 provider
failure. Provider endpoints resolve as flags > RAG_*_URL env vars > config
file > offline mocks.
"""

from __future__ import annotations

import functools
import json
import sys
from pathlib import Path

import click

from . import annotate as annotate_mod
from . import chunking as chunking_mod
from . import evaluation as eval_mod
from . import generation as gen_mod
from .config import load_config, resolve_endpoint, resolve_path, resolve_retrieval
from .crawler import CrawlPolicy, crawl as run_crawl, read_seeds, store_raw
from .extract import ingest as run_ingest, load_keywords, read_clean_corpus
from .index import build_index, load_index, save_index
from .providers import ProviderConfig, ProviderError, make_provider
from .retrieval import Retriever
from .scholar import ScholarQuery, fetch_papers, read_authors

EXIT_VALIDATION = 2
EXIT_MISSING_ARTIFACT = 3
EXIT_PROVIDER = 4


def handle_errors(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except FileNotFoundError as exc:
            click.echo(f"error: missing artifact: {exc}", err=True)
            sys.exit(EXIT_MISSING_ARTIFACT)
        except ProviderError as exc:
            click.echo(f"error: provider failure: {exc}", err=True)
            sys.exit(EXIT_PROVIDER)
        except (ValueError, json.JSONDecodeError) as exc:
            click.echo(f"error: {exc}", err=True)
            sys.exit(EXIT_VALIDATION)

    return wrapper


@click.group()
@click.option("--config", "config_path", type=click.Path(), default=None,
              help="TOML config file (default: ./ragkit.toml if present).")
@click.pass_context
def main(ctx, config_path):
    """ragkit: crawl a domain, build a QA dataset, retrieve, answer, evaluate."""
    ctx.obj = load_config(config_path)


def _provider(role, endpoint_flag, config, **overrides):
    endpoint = resolve_endpoint(role, endpoint_flag, config)
    return make_provider(ProviderConfig(role=role, endpoint=endpoint, **overrides))


def _require(path: str, what: str) -> Path:
    resolved = Path(path)
    if not resolved.exists():
        raise FileNotFoundError(f"{what} not found at {resolved}")
    return resolved


def _load_retriever(index_path, chunks_path, config, embed_url=None, rerank_url=None,
                    mmr_lambda=None, with_rerank=True):
    index = load_index(_require(index_path, "index"))
    chunks = chunking_mod.read_chunks(_require(chunks_path, "chunk store"))
    embed = _provider("embedding", embed_url, config)
    rerank = _provider("rerank", rerank_url, config) if with_rerank else None
    lam = resolve_retrieval("mmr_lambda", mmr_lambda, config, 0.5)
    return Retriever(index, chunks, embed, rerank, mmr_lambda=lam)


@main.command("crawl")
@click.option("--seeds", "seeds_file", required=True, type=click.Path())
@click.option("--depth", default=2, show_default=True)
@click.option("--out", "out_root", required=True, type=click.Path())
@click.option("--max-pages", default=10_000, show_default=True)
@click.option("--delay-ms", default=200, show_default=True)
@click.option("--workers", default=4, show_default=True)
@click.option("--no-robots", is_flag=True, help="Ignore robots.txt (be sure you may).")
@click.pass_obj
@handle_errors
def crawl_cmd(config, seeds_file, depth, out_root, max_pages, delay_ms, workers, no_robots):
    """BFS-crawl seed URLs and store raw pages under OUT/html|pdf."""
    seeds = read_seeds(_require(seeds_file, "seed file"))
    policy = CrawlPolicy(
        max_depth=depth,
        max_pages=max_pages,
        per_host_delay_ms=delay_ms,
        workers=workers,
        respect_robots=not no_robots,
    )
    result = run_crawl(seeds, policy)
    for doc in result.documents:
        store_raw(doc, out_root)
    click.echo(f"stored {len(result.documents)} documents, {len(result.failures)} failures")
    for failure in result.failures:
        click.echo(f"  failed: {failure.url} ({failure.reason})", err=True)


@main.command("fetch-papers")
@click.option("--authors", "authors_file", required=True, type=click.Path())
@click.option("--year", required=True, type=int)
@click.option("--out", "out_root", required=True, type=click.Path())
@click.option("--endpoint", default=None, help="Paper-search endpoint override.")
@click.pass_obj
@handle_errors
def fetch_papers_cmd(config, authors_file, year, out_root, endpoint):
    """Fetch open-access PDFs by author list into OUT/paper/."""
    authors = read_authors(_require(authors_file, "author file"))
    query = ScholarQuery(author_names=authors, year=year)
    kwargs = {"base_url": endpoint} if endpoint else {}
    result = fetch_papers(query, **kwargs)
    for doc in result.documents:
        store_raw(doc, out_root)
    click.echo(
        f"stored {len(result.documents)} papers, "
        f"skipped {len(result.skipped)}, {len(result.failures)} failures"
    )


@main.command("sample")
@click.option("--root", "corpus_root", required=True, type=click.Path())
@click.argument("paths", nargs=-1, required=True)
@handle_errors
def sample_cmd(corpus_root, paths):
    """Tag hand-picked raw files into <root>/sample/ (manual curation).

    Which documents are clean and informative enough to seed annotation is
    a human judgement, so this is a copy command, not a heuristic.
    """
    import shutil

    root = Path(corpus_root)
    sample_dir = root / "sample"
    sample_dir.mkdir(parents=True, exist_ok=True)
    copied = 0
    for path in paths:
        source = _require(path, "corpus file")
        shutil.copy2(source, sample_dir / source.name)
        sidecar = source.with_name(source.name + ".meta.json")
        if sidecar.exists():
            shutil.copy2(sidecar, sample_dir / sidecar.name)
        copied += 1
    click.echo(f"tagged {copied} files into {sample_dir}")


@main.command("ingest")
@click.option("--raw", "raw_root", required=True, type=click.Path())
@click.option("--out", "out_root", required=True, type=click.Path())
@click.option("--keywords", "keywords_file", default=None, type=click.Path())
@click.option("--min-chars", default=200, show_default=True)
@click.pass_obj
@handle_errors
def ingest_cmd(config, raw_root, out_root, keywords_file, min_chars):
    """Extract text from the raw corpus and apply relevance/quality filters."""
    keywords = load_keywords(keywords_file) if keywords_file else None
    _require(raw_root, "raw corpus")
    documents, report = run_ingest(raw_root, out_root, keywords, min_chars)
    click.echo(json.dumps(report.to_dict(), indent=2))


@main.command("chunk")
@click.option("--clean", "clean_root", required=True, type=click.Path())
@click.option("--out", "out_path", default="chunks.jsonl", show_default=True)
@click.option("--size", default=1000, show_default=True)
@handle_errors
def chunk_cmd(clean_root, out_path, size):
    """Split the clean corpus into fixed-size word chunks (JSONL store)."""
    documents = read_clean_corpus(_require(clean_root, "clean corpus"))
    chunks = []
    for doc in documents:
        rel = f"{doc.category}/{doc.doc_id}.txt"
        chunks.extend(chunking_mod.chunk_text(doc.doc_id, doc.text, size, rel))
    count = chunking_mod.write_chunks(chunks, out_path)
    click.echo(f"wrote {count} chunks from {len(documents)} documents to {out_path}")


@main.command("annotate")
@click.option("--chunks", "chunks_path", default="chunks.jsonl", show_default=True)
@click.option("--out", "out_path", default="qa.jsonl", show_default=True)
@click.option("--num-qas", default=10, show_default=True)
@click.option("--gen-url", default=None, help="Generation endpoint override.")
@click.option("--report", "report_path", default=None, type=click.Path())
@click.pass_obj
@handle_errors
def annotate_cmd(config, chunks_path, out_path, num_qas, gen_url, report_path):
    """Generate QA pairs for every chunk via the generation provider."""
    chunks = chunking_mod.read_chunks(_require(chunks_path, "chunk store"))
    provider = _provider("generation", gen_url, config)
    pairs, report = annotate_mod.annotate_corpus(chunks, provider, num_qas)
    annotate_mod.write_dataset(pairs, out_path)
    if report_path:
        Path(report_path).write_text(
            json.dumps(report.to_dict(), indent=2) + "\n", encoding="utf-8"
        )
    click.echo(f"wrote {len(pairs)} QA pairs to {out_path} "
               f"({report.chunks_skipped} chunks skipped)")


@main.command("split")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--fraction", default=0.8, show_default=True)
@click.option("--seed", default=13, show_default=True)
@click.option("--out", "out_path", default=None, help="Defaults to rewriting --in.")
@handle_errors
def split_cmd(in_path, fraction, seed, out_path):
    """Tag the dataset with a random train/test split."""
    pairs = annotate_mod.read_dataset(_require(in_path, "dataset"))
    train, test = annotate_mod.split_dataset(pairs, fraction, seed)
    annotate_mod.write_dataset(train + test, out_path or in_path)
    click.echo(f"train={len(train)} test={len(test)}")


@main.command("kappa")
@click.option("--a", "file_a", required=True, type=click.Path())
@click.option("--b", "file_b", required=True, type=click.Path())
@handle_errors
def kappa_cmd(file_a, file_b):
    """Cohen's kappa between two label files (one label per line)."""

    def read_labels(path):
        lines = _require(path, "label file").read_text("utf-8").splitlines()
        return [line.strip() for line in lines if line.strip()]

    result = annotate_mod.cohen_kappa(read_labels(file_a), read_labels(file_b))
    click.echo(
        f"kappa={result.kappa:.4f} p_o={result.p_o:.4f} p_e={result.p_e:.4f} "
        f"n={result.n_items}"
    )


@main.command("index")
@click.option("--chunks", "chunks_path", default="chunks.jsonl", show_default=True)
@click.option("--out", "out_path", default="index.bin", show_default=True)
@click.option("--embed-url", default=None)
@click.pass_obj
@handle_errors
def index_cmd(config, chunks_path, out_path, embed_url):
    """Embed every chunk and persist the vector index."""
    chunks = chunking_mod.read_chunks(_require(chunks_path, "chunk store"))
    embed = _provider("embedding", embed_url, config)
    index = build_index(chunks, embed)
    save_index(index, out_path)
    click.echo(f"indexed {len(index)} chunks (dim={index.dim}) to {out_path}")


@main.command("query")
@click.option("--index", "index_path", default="index.bin", show_default=True)
@click.option("--chunks", "chunks_path", default="chunks.jsonl", show_default=True)
@click.option("--q", "question", required=True)
@click.option("--k", "final_k", default=5, show_default=True)
@click.option("--fetch-k", default=10, show_default=True)
@click.option("--lambda", "mmr_lambda", default=None, type=float,
              help="MMR trade-off (default 0.5).")
@click.option("--no-rerank", is_flag=True)
@click.option("--embed-url", default=None)
@click.option("--rerank-url", default=None)
@click.pass_obj
@handle_errors
def query_cmd(config, index_path, chunks_path, question, final_k, fetch_k,
              mmr_lambda, no_rerank, embed_url, rerank_url):
    """Retrieve chunks for a question (no generation)."""
    retriever = _load_retriever(
        index_path, chunks_path, config, embed_url, rerank_url,
        mmr_lambda, with_rerank=not no_rerank,
    )
    result = retriever.retrieve(question, fetch_k=fetch_k, final_k=final_k,
                                use_rerank=not no_rerank)
    if result.rerank_degraded:
        click.echo("warning: rerank provider down, results in MMR order", err=True)
    for rank, chunk in enumerate(result.chunks, 1):
        rerank_part = (
            f" rerank={chunk.rerank_score:.4f}" if chunk.rerank_score is not None else ""
        )
        click.echo(f"{rank}. [{chunk.chunk_id}] sim={chunk.sim_score:.4f}{rerank_part}")
        click.echo(f"   {chunk.text[:160]}")


@main.command("ask")
@click.option("--index", "index_path", default="index.bin", show_default=True)
@click.option("--chunks", "chunks_path", default="chunks.jsonl", show_default=True)
@click.option("--q", "question", required=True)
@click.option("--no-rag", is_flag=True)
@click.option("--template", "template_path", default=None, type=click.Path())
@click.option("--embed-url", default=None)
@click.option("--rerank-url", default=None)
@click.option("--gen-url", default=None)
@click.pass_obj
@handle_errors
def ask_cmd(config, index_path, chunks_path, question, no_rag, template_path,
            embed_url, rerank_url, gen_url):
    """Answer a question, printing the answer and its evidence."""
    template = (
        gen_mod.QAPromptTemplate.from_file(template_path)
        if template_path
        else gen_mod.QAPromptTemplate.default()
    )
    generation = _provider("generation", gen_url, config)
    if no_rag:
        pipeline = gen_mod.QAPipeline(None, generation, template)
        result = pipeline.answer_baseline(question)
    else:
        retriever = _load_retriever(index_path, chunks_path, config, embed_url, rerank_url)
        pipeline = gen_mod.QAPipeline(retriever, generation, template)
        result = pipeline.answer(question)
    click.echo(result.answer)
    for rank, chunk in enumerate(result.contexts, 1):
        rerank_part = (
            f" rerank={chunk.rerank_score:.4f}" if chunk.rerank_score is not None else ""
        )
        click.echo(f"[{rank}] {chunk.source_path} sim={chunk.sim_score:.4f}{rerank_part}")
        click.echo(f"    {chunk.text[:160]}")


@main.command("eval")
@click.option("--dataset", "dataset_path", default="qa.jsonl", show_default=True)
@click.option("--split", "split_name", default="test", show_default=True)
@click.option("--index", "index_path", default="index.bin", show_default=True)
@click.option("--chunks", "chunks_path", default="chunks.jsonl", show_default=True)
@click.option("--runs", default=4, show_default=True)
@click.option("--sample", default=128, show_default=True)
@click.option("--seed", default=7, show_default=True)
@click.option("--no-rag", is_flag=True)
@click.option("--name", default="", help="Configuration name in the report.")
@click.option("--out", "out_path", default="report.json", show_default=True)
@click.option("--embed-url", default=None)
@click.option("--rerank-url", default=None)
@click.option("--gen-url", default=None)
@click.pass_obj
@handle_errors
def eval_cmd(config, dataset_path, split_name, index_path, chunks_path, runs,
             sample, seed, no_rag, name, out_path, embed_url, rerank_url, gen_url):
    """Run the sampled evaluation protocol and write a JSON report."""
    pairs = annotate_mod.read_dataset(_require(dataset_path, "dataset"), split=split_name)
    if not pairs:
        raise ValueError(f"dataset has no pairs in split {split_name!r}")
    generation = _provider("generation", gen_url, config)
    retriever = _load_retriever(index_path, chunks_path, config, embed_url, rerank_url)
    pipeline = gen_mod.QAPipeline(retriever, generation)
    eval_embed = _provider("embedding", embed_url, config)
    eval_config = eval_mod.EvalConfig(
        sample_size=sample, num_runs=runs, seed=seed, rag_enabled=not no_rag
    )
    report = eval_mod.run_eval(
        pairs, pipeline, eval_config, eval_embed,
        name=name or ("baseline" if no_rag else "rag"),
    )
    Path(out_path).write_text(report.to_json() + "\n", encoding="utf-8")
    click.echo(report.summary_line())
    click.echo(f"report written to {out_path}")


@main.command("compare")
@click.option("--reports", "report_paths", multiple=True, required=True,
              type=click.Path())
@handle_errors
def compare_cmd(report_paths):
    """Render an aligned mean (std) table from eval reports."""
    reports = {}
    for path in report_paths:
        report = eval_mod.MetricReport.from_json(
            _require(path, "report").read_text("utf-8")
        )
        reports[report.name or Path(path).stem] = report
    table = eval_mod.compare_configs(reports)
    click.echo(eval_mod.render_comparison(table))


@main.command("export-finetune")
@click.option("--in", "in_path", required=True, type=click.Path())
@click.option("--chunks", "chunks_path", default="chunks.jsonl", show_default=True)
@click.option("--out", "out_path", default="sft.jsonl", show_default=True)
@handle_errors
def export_finetune_cmd(in_path, chunks_path, out_path):
    """Export question+context+answer records in the fine-tune layout."""
    pairs = annotate_mod.read_dataset(_require(in_path, "dataset"))
    chunks = chunking_mod.read_chunks(_require(chunks_path, "chunk store"))
    count = gen_mod.export_finetune(pairs, chunks, out_path)
    click.echo(f"wrote {count} records to {out_path}")


@main.command("stats")
@click.option("--clean", "clean_root", default=None, type=click.Path())
@click.option("--chunks", "chunks_path", default=None, type=click.Path())
@click.option("--dataset", "dataset_path", default=None, type=click.Path())
@handle_errors
def stats_cmd(clean_root, chunks_path, dataset_path):
    """Print corpus statistics as JSON."""
    from .server import corpus_stats

    click.echo(json.dumps(corpus_stats(clean_root, chunks_path, dataset_path), indent=2))


@main.command("serve")
@click.option("--index", "index_path", default="index.bin", show_default=True)
@click.option("--chunks", "chunks_path", default="chunks.jsonl", show_default=True)
@click.option("--clean", "clean_root", default=None, type=click.Path())
@click.option("--dataset", "dataset_path", default=None, type=click.Path())
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--dev", is_flag=True, help="Enable CORS for local UI development.")
@click.option("--embed-url", default=None)
@click.option("--rerank-url", default=None)
@click.option("--gen-url", default=None)
@click.pass_obj
@handle_errors
def serve_cmd(config, index_path, chunks_path, clean_root, dataset_path, host,
              port, dev, embed_url, rerank_url, gen_url):
    """Serve the QA chain over HTTP."""
    from .server import create_app, serve

    retriever = _load_retriever(index_path, chunks_path, config, embed_url, rerank_url)
    generation = _provider("generation", gen_url, config)
    pipeline = gen_mod.QAPipeline(retriever, generation)
    app = create_app(pipeline, clean_root, chunks_path, dataset_path, dev_cors=dev)
    click.echo(f"serving on http://{host}:{port} (index: {len(retriever.index)} chunks)")
    serve(app, host=host, port=port)


if __name__ == "__main__":
    main()
