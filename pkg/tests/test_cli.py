import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from ragkit.cli import main


@pytest.fixture(scope="module")
def pipeline_workspace(tmp_path_factory, site_server):
    """Runs crawl -> ingest -> chunk -> annotate -> split -> index once."""
    workdir = tmp_path_factory.mktemp("cli_ws")
    runner = CliRunner()

    def run(*args, **kwargs):
        result = runner.invoke(main, list(args), catch_exceptions=False, **kwargs)
        assert result.exit_code == 0, result.output
        return result

    seeds = workdir / "seeds.txt"
    seeds.write_text(f"{site_server}/index.html\n")
    run("crawl", "--seeds", str(seeds), "--depth", "2",
        "--out", str(workdir / "raw"), "--delay-ms", "0", "--workers", "8")
    run("ingest", "--raw", str(workdir / "raw"), "--out", str(workdir / "clean"))
    run("chunk", "--clean", str(workdir / "clean"),
        "--out", str(workdir / "chunks.jsonl"), "--size", "120")
    run("annotate", "--chunks", str(workdir / "chunks.jsonl"),
        "--out", str(workdir / "qa.jsonl"), "--num-qas", "4",
        "--report", str(workdir / "annotation_report.json"))
    run("split", "--in", str(workdir / "qa.jsonl"), "--fraction", "0.8", "--seed", "13")
    run("index", "--chunks", str(workdir / "chunks.jsonl"),
        "--out", str(workdir / "index.bin"))
    return workdir, run


class TestPipelineCommands:
    def test_crawl_stored_expected_layout(self, pipeline_workspace):
        workdir, _ = pipeline_workspace
        html_files = list((workdir / "raw" / "html").rglob("*.html"))
        assert len(html_files) == 17
        sidecars = list((workdir / "raw" / "html").rglob("*.meta.json"))
        assert len(sidecars) == 17

    def test_ingest_kept_thirteen(self, pipeline_workspace):
        workdir, _ = pipeline_workspace
        assert len(list((workdir / "clean" / "html").glob("*.txt"))) == 13

    def test_chunks_and_dataset_exist(self, pipeline_workspace):
        workdir, _ = pipeline_workspace
        chunk_lines = (workdir / "chunks.jsonl").read_text().strip().splitlines()
        assert len(chunk_lines) >= 13
        qa_lines = (workdir / "qa.jsonl").read_text().strip().splitlines()
        assert len(qa_lines) == 4 * len(chunk_lines)
        splits = {json.loads(line)["split"] for line in qa_lines}
        assert splits == {"train", "test"}

    def test_annotation_report_written(self, pipeline_workspace):
        workdir, _ = pipeline_workspace
        report = json.loads((workdir / "annotation_report.json").read_text())
        assert report["chunks_skipped"] == 0
        assert report["pairs_kept"] == 4 * report["chunks_total"]

    def test_query_returns_ranked_results(self, pipeline_workspace):
        workdir, run = pipeline_workspace
        result = run("query", "--index", str(workdir / "index.bin"),
                     "--chunks", str(workdir / "chunks.jsonl"),
                     "--q", "when do classes begin in the fall semester")
        assert "1. [" in result.output
        assert "sim=" in result.output and "rerank=" in result.output

    def test_ask_answers_planted_fact(self, pipeline_workspace):
        workdir, run = pipeline_workspace
        result = run("ask", "--index", str(workdir / "index.bin"),
                     "--chunks", str(workdir / "chunks.jsonl"),
                     "--q", "When do classes begin for the fall semester?")
        assert "August 26" in result.output
        assert "[1] " in result.output

    def test_ask_no_rag_baseline(self, pipeline_workspace):
        workdir, run = pipeline_workspace
        result = run("ask", "--no-rag", "--q", "When do classes begin?")
        assert "I don't know." in result.output

    def test_eval_deterministic_and_compare(self, pipeline_workspace):
        workdir, run = pipeline_workspace
        common = ["--dataset", str(workdir / "qa.jsonl"), "--split", "test",
                  "--index", str(workdir / "index.bin"),
                  "--chunks", str(workdir / "chunks.jsonl"),
                  "--runs", "2", "--sample", "6", "--seed", "7"]
        run("eval", *common, "--out", str(workdir / "rag1.json"), "--name", "rag")
        run("eval", *common, "--out", str(workdir / "rag2.json"), "--name", "rag")
        assert (workdir / "rag1.json").read_bytes() == (workdir / "rag2.json").read_bytes()
        run("eval", *common, "--no-rag", "--out", str(workdir / "base.json"),
            "--name", "baseline")
        result = run("compare", "--reports", str(workdir / "rag1.json"),
                     "--reports", str(workdir / "base.json"))
        assert "Configuration" in result.output
        assert "rag" in result.output and "baseline" in result.output

    def test_export_finetune(self, pipeline_workspace):
        workdir, run = pipeline_workspace
        result = run("export-finetune", "--in", str(workdir / "qa.jsonl"),
                     "--chunks", str(workdir / "chunks.jsonl"),
                     "--out", str(workdir / "sft.jsonl"))
        lines = (workdir / "sft.jsonl").read_text().strip().splitlines()
        record = json.loads(lines[0])
        assert set(record) == {"question", "context", "answer", "text"}
        assert record["text"].startswith("[INST]<<SYS>>")

    def test_stats_command(self, pipeline_workspace):
        workdir, run = pipeline_workspace
        result = run("stats", "--clean", str(workdir / "clean"),
                     "--chunks", str(workdir / "chunks.jsonl"),
                     "--dataset", str(workdir / "qa.jsonl"))
        stats = json.loads(result.output)
        assert stats["html"] == 13
        assert stats["chunks"] is not None
        assert stats["qa_pairs"]["train"] > stats["qa_pairs"]["test"]

    def test_sample_tagging(self, pipeline_workspace):
        workdir, run = pipeline_workspace
        picked = sorted((workdir / "raw" / "html").rglob("calendar.html"))[0]
        run("sample", "--root", str(workdir / "raw"), str(picked))
        sample_dir = workdir / "raw" / "sample"
        assert (sample_dir / "calendar.html").exists()
        assert (sample_dir / "calendar.html.meta.json").exists()

    def test_kappa_command(self, pipeline_workspace, tmp_path):
        _, run = pipeline_workspace
        a = tmp_path / "a.csv"
        b = tmp_path / "b.csv"
        a.write_text("1\n1\n1\n0\n0\n0\n")
        b.write_text("1\n1\n0\n0\n0\n1\n")
        result = run("kappa", "--a", str(a), "--b", str(b))
        assert "kappa=0.3333" in result.output


class TestExitCodes:
    def test_missing_artifact_exit_3(self):
        runner = CliRunner()
        result = runner.invoke(
            main, ["index", "--chunks", "/nonexistent/chunks.jsonl"]
        )
        assert result.exit_code == 3

    def test_validation_error_exit_2(self, tmp_path):
        bad = tmp_path / "qa.jsonl"
        bad.write_text('{"question":"q","answer":"a","chunk_id":"c#0"}\n')
        runner = CliRunner()
        result = runner.invoke(
            main, ["split", "--in", str(bad), "--fraction", "0.8"]
        )
        assert result.exit_code == 2  # cannot split a single pair

    def test_provider_failure_exit_4(self, tmp_path, pipeline_workspace):
        workdir, _ = pipeline_workspace
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["index", "--chunks", str(workdir / "chunks.jsonl"),
             "--out", str(tmp_path / "index.bin"),
             "--embed-url", "http://127.0.0.1:9"],
        )
        assert result.exit_code == 4

    def test_config_file_provides_defaults(self, pipeline_workspace, tmp_path):
        workdir, _ = pipeline_workspace
        config = tmp_path / "ragkit.toml"
        config.write_text(
            "[providers]\nembed_url = \"mock:0\"\nrerank_url = \"mock:0\"\n"
            "gen_url = \"mock:0\"\n"
        )
        runner = CliRunner()
        result = runner.invoke(
            main,
            ["--config", str(config), "ask",
             "--index", str(workdir / "index.bin"),
             "--chunks", str(workdir / "chunks.jsonl"),
             "--q", "When do classes begin for the fall semester?"],
            catch_exceptions=False,
        )
        assert result.exit_code == 0
        assert "August 26" in result.output
