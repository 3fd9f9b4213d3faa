"""Answer-quality metrics and the sampled evaluation protocol.

Per-item metrics: token precision/recall/F1 (multiset overlap of normalized
tokens), cosine similarity of answer embeddings, and BLEU with a brevity
penalty. The protocol samples QA pairs over several independent runs and
reports per-metric means with the standard deviation taken across run means.
"""

from __future__ import annotations

import json
import math
import random
import unicodedata
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

DEFAULT_SAMPLE_SIZE = 128
DEFAULT_NUM_RUNS = 4

METRIC_NAMES = ("recall", "precision", "f1", "cosine", "bleu")


def _is_punctuation(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def normalize_tokens(text: str) -> list[str]:
    """Lowercase, split on whitespace, and strip edge punctuation per token.

    Tokens that were punctuation-only are dropped. Duplicates are kept:
    downstream metrics use multiset semantics.
    """
    tokens = []
    for raw in text.lower().split():
        start, end = 0, len(raw)
        while start < end and _is_punctuation(raw[start]):
            start += 1
        while end > start and _is_punctuation(raw[end - 1]):
            end -= 1
        if end > start:
            tokens.append(raw[start:end])
    return tokens


def token_prf(prediction: str, gold: str) -> tuple[float, float, float]:
    """Token-level (precision, recall, f1) between prediction and gold.

    True positives are the multiset intersection of normalized tokens.
    Empty prediction gives P=0, empty gold gives R=0, and P+R=0 gives F1=0.
    """
    pred = Counter(normalize_tokens(prediction))
    ref = Counter(normalize_tokens(gold))
    tp = sum((pred & ref).values())
    pred_total = sum(pred.values())
    ref_total = sum(ref.values())
    precision = tp / pred_total if pred_total else 0.0
    recall = tp / ref_total if ref_total else 0.0
    # 2PR/(P+R) simplified to integer arithmetic; exact when P+R > 0
    f1 = 2 * tp / (pred_total + ref_total) if tp else 0.0
    return precision, recall, f1


def _ngram_counts(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(prediction: str, gold: str, max_n: int = 4) -> float:
    """Single-reference BLEU over normalized tokens.

    Uses clipped modified n-gram precisions with uniform 1/max_n weights and
    the brevity penalty BP = 1 if c > r else e^(1 - r/c). Any zero n-gram
    precision (including candidates shorter than n) yields 0; no smoothing.
    """
    if max_n < 1:
        raise ValueError(f"max_n must be >= 1, got {max_n}")
    candidate = normalize_tokens(prediction)
    reference = normalize_tokens(gold)
    if not candidate:
        return 0.0

    log_sum = 0.0
    for n in range(1, max_n + 1):
        cand_counts = _ngram_counts(candidate, n)
        ref_counts = _ngram_counts(reference, n)
        total = sum(cand_counts.values())
        if total == 0:
            return 0.0
        clipped = sum(
            min(count, ref_counts[gram]) for gram, count in cand_counts.items()
        )
        if clipped == 0:
            return 0.0
        log_sum += math.log(clipped / total) / max_n

    c, r = len(candidate), len(reference)
    brevity = 1.0 if c > r else math.exp(1.0 - r / c)
    return brevity * math.exp(log_sum)


def answer_cosine(prediction: str, gold: str, embed) -> float | None:
    """Cosine similarity of the two answers' embeddings, clamped to [0, 1].

    Returns None when the embedding provider fails, so the caller can mark
    the metric absent and keep the run going.
    """
    from .index import cosine_sim

    try:
        vec_pred, vec_gold = embed.embed_batch([prediction, gold])
    except Exception:
        return None
    return max(0.0, min(1.0, cosine_sim(vec_pred, vec_gold)))


@dataclass
class EvalConfig:
    sample_size: int = DEFAULT_SAMPLE_SIZE
    num_runs: int = DEFAULT_NUM_RUNS
    seed: int = 0
    rag_enabled: bool = True

    def __post_init__(self) -> None:
        if self.sample_size < 1:
            raise ValueError("sample_size must be >= 1")
        if self.num_runs < 1:
            raise ValueError("num_runs must be >= 1")


@dataclass
class MetricReport:
    """Per-item records plus per-run and cross-run aggregates."""

    config: dict
    runs: list[dict]
    mean: dict[str, float]
    std: dict[str, float]
    failed_items: int = 0
    name: str = ""

    def to_json(self) -> str:
        payload = {
            "name": self.name,
            "config": self.config,
            "mean": self.mean,
            "std": self.std,
            "failed_items": self.failed_items,
            "runs": self.runs,
        }
        return json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "MetricReport":
        data = json.loads(text)
        return cls(
            config=data["config"],
            runs=data["runs"],
            mean=data["mean"],
            std=data["std"],
            failed_items=data.get("failed_items", 0),
            name=data.get("name", ""),
        )

    def summary_line(self) -> str:
        cells = [
            f"{metric}={format_mean_std(self.mean.get(metric), self.std.get(metric))}"
            for metric in METRIC_NAMES
        ]
        return "  ".join(cells)


def format_mean_std(mean: float | None, std: float | None) -> str:
    if mean is None:
        return "—"
    return f"{mean:.3f} ({std:.3f})" if std is not None else f"{mean:.3f}"


def _mean(values: Sequence[float]) -> float | None:
    return sum(values) / len(values) if values else None


def _population_std(values: Sequence[float]) -> float:
    m = sum(values) / len(values)
    return math.sqrt(sum((v - m) ** 2 for v in values) / len(values))


def score_item(prediction: str, gold: str, eval_embed=None) -> dict:
    precision, recall, f1 = token_prf(prediction, gold)
    record = {
        "recall": recall,
        "precision": precision,
        "f1": f1,
        "bleu": bleu(prediction, gold),
    }
    record["cosine"] = (
        answer_cosine(prediction, gold, eval_embed) if eval_embed is not None else None
    )
    return record


def run_eval(dataset, pipeline, config: EvalConfig, eval_embed=None, name: str = "") -> MetricReport:
    """Evaluate a QA pipeline over sampled subsets of a dataset.

    For each of ``config.num_runs`` runs, samples ``config.sample_size``
    pairs without replacement (seeded with ``config.seed + run index``),
    answers each question via the pipeline (RAG or baseline per config),
    and scores every answer. Items whose pipeline call raises are recorded
    as failed and excluded from the means.

    The report is fully deterministic for a given seed: it contains no
    timestamps or latencies.
    """
    pairs = list(dataset)
    if not pairs:
        raise ValueError("dataset is empty")
    sample_size = config.sample_size
    if sample_size > len(pairs):
        sample_size = len(pairs)

    runs = []
    failed_total = 0
    for run_index in range(config.num_runs):
        rng = random.Random(config.seed + run_index)
        sampled = rng.sample(pairs, sample_size)
        items = []
        failed = 0
        for pair in sampled:
            try:
                if config.rag_enabled:
                    result = pipeline.answer(pair.question)
                else:
                    result = pipeline.answer_baseline(pair.question)
            except Exception as exc:
                failed += 1
                items.append(
                    {
                        "question": pair.question,
                        "gold": pair.answer,
                        "prediction": None,
                        "error": str(exc),
                    }
                )
                continue
            record = {
                "question": pair.question,
                "gold": pair.answer,
                "prediction": result.answer,
            }
            record.update(score_item(result.answer, pair.answer, eval_embed))
            items.append(record)
        run_means = {
            metric: _mean([item[metric] for item in items
                           if item.get("prediction") is not None and item.get(metric) is not None])
            for metric in METRIC_NAMES
        }
        runs.append(
            {
                "run": run_index,
                "seed": config.seed + run_index,
                "mean": run_means,
                "failed": failed,
                "items": items,
            }
        )
        failed_total += failed

    mean: dict[str, float] = {}
    std: dict[str, float] = {}
    for metric in METRIC_NAMES:
        per_run = [r["mean"][metric] for r in runs if r["mean"][metric] is not None]
        if per_run:
            mean[metric] = _mean(per_run)
            std[metric] = _population_std(per_run)
    return MetricReport(
        config={
            "sample_size": sample_size,
            "num_runs": config.num_runs,
            "seed": config.seed,
            "rag_enabled": config.rag_enabled,
        },
        runs=runs,
        mean=mean,
        std=std,
        failed_items=failed_total,
        name=name,
    )


def compare_configs(reports: Mapping[str, MetricReport]) -> dict:
    """Align named reports into a comparison table.

    Returns a machine-readable dict; render with :func:`render_comparison`.
    """
    if len(reports) < 2:
        raise ValueError("need at least 2 reports to compare")
    rows = []
    for name, report in reports.items():
        row: dict = {"config": name}
        for metric in METRIC_NAMES:
            row[metric] = {
                "mean": report.mean.get(metric),
                "std": report.std.get(metric),
            }
        rows.append(row)
    return {"metrics": list(METRIC_NAMES), "rows": rows}


def render_comparison(table: dict) -> str:
    """Text rendering: one row per configuration, 'mean (std)' per metric."""
    headers = ["Configuration", "Recall", "Precision", "F1 Score", "Cosine", "BLEU"]
    order = ["recall", "precision", "f1", "cosine", "bleu"]
    lines = []
    body = []
    for row in table["rows"]:
        cells = [row["config"]]
        for metric in order:
            cell = row.get(metric) or {}
            cells.append(format_mean_std(cell.get("mean"), cell.get("std")))
        body.append(cells)
    widths = [max(len(h), *(len(r[i]) for r in body)) for i, h in enumerate(headers)]
    lines.append("  ".join(h.ljust(widths[i]) for i, h in enumerate(headers)))
    lines.append("  ".join("-" * w for w in widths))
    for cells in body:
        lines.append("  ".join(c.ljust(widths[i]) for i, c in enumerate(cells)))
    return "\n".join(lines)
