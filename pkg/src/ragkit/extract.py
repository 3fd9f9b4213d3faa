"""Clean-document extraction, relevance/quality filtering, corpus ingest.

Raw documents become CleanDocuments; crawled html/pdf must mention a
domain keyword (in content or title) and clear the quality bar (length,
not an error page). Scholarly papers bypass the keyword filter: they were
selected by author, not by site affiliation.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from importlib import resources
from pathlib import Path
from urllib.parse import urlsplit

from .crawler import RawDocument
from .html_text import html_to_text, strip_repeated_lines
from .pdf_text import PdfError, extract_pdf_text
from .urls import doc_id_for_url

logger = logging.getLogger(__name__)

MIN_CHARS = 200
ERROR_TITLE_MARKER = "Page_not_found"
CATEGORIES = ("html", "pdf", "paper")


@dataclass
class CleanDocument:
    doc_id: str
    title: str
    text: str
    category: str  # html | pdf | paper
    source_path: str
    char_count: int = -1
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if self.category not in CATEGORIES:
            raise ValueError(f"unknown category {self.category!r}")
        if self.char_count < 0:
            self.char_count = len(self.text)
        elif self.char_count != len(self.text):
            raise ValueError("char_count does not match text length")


@dataclass(frozen=True)
class FilterVerdict:
    kept: bool
    reason: str  # ok | no_keyword | too_short | error_page

    def __post_init__(self) -> None:
        if self.kept != (self.reason == "ok"):
            raise ValueError("kept must hold exactly when reason is 'ok'")


def load_keywords(path: str | Path | None = None) -> list[str]:
    """The relevance keyword list; defaults to the shipped 16-entry file."""
    if path is None:
        raw = resources.files("ragkit.data").joinpath("keywords.txt").read_text("utf-8")
    else:
        raw = Path(path).read_text("utf-8")
    return [line.strip() for line in raw.splitlines() if line.strip()]


def relevance_filter(doc: CleanDocument, keywords: list[str]) -> FilterVerdict:
    """Keep documents mentioning any keyword as a substring of title or text.

    Matching is case-sensitive: the shipped list carries both casings.
    Scholarly papers are exempt.
    """
    if not keywords:
        raise ValueError("keywords must be non-empty")
    if doc.category == "paper":
        return FilterVerdict(kept=True, reason="ok")
    for keyword in keywords:
        if keyword in doc.text or keyword in doc.title:
            return FilterVerdict(kept=True, reason="ok")
    return FilterVerdict(kept=False, reason="no_keyword")


def quality_filter(doc: CleanDocument, min_chars: int = MIN_CHARS) -> FilterVerdict:
    if doc.char_count < min_chars:
        return FilterVerdict(kept=False, reason="too_short")
    if ERROR_TITLE_MARKER in doc.title:
        return FilterVerdict(kept=False, reason="error_page")
    return FilterVerdict(kept=True, reason="ok")


def apply_filters(
    doc: CleanDocument, keywords: list[str], min_chars: int = MIN_CHARS
) -> FilterVerdict:
    """Relevance first, then quality; deterministic per (text, title, keywords)."""
    verdict = relevance_filter(doc, keywords)
    if not verdict.kept:
        return verdict
    return quality_filter(doc, min_chars)


def clean_from_html(raw: RawDocument, source_path: str) -> CleanDocument:
    if raw.media_kind != "html":
        raise ValueError(f"expected html document, got {raw.media_kind}")
    extracted = html_to_text(raw.body)
    flags = ("decode_errors",) if extracted.had_decode_errors else ()
    return CleanDocument(
        doc_id=doc_id_for_url(raw.url),
        title=extracted.title,
        text=extracted.text,
        category="html",
        source_path=source_path,
        flags=flags,
    )


def clean_from_pdf(raw: RawDocument, source_path: str) -> CleanDocument:
    """Extract PDF text; encrypted or corrupt files raise PdfError with the
    source path attached."""
    if raw.media_kind != "pdf":
        raise ValueError(f"expected pdf document, got {raw.media_kind}")
    try:
        extracted = extract_pdf_text(raw.body)
    except PdfError as exc:
        raise PdfError(f"{source_path}: {exc}") from exc
    title = extracted.title or _stem_of(raw.url)
    return CleanDocument(
        doc_id=doc_id_for_url(raw.url),
        title=title,
        text=extracted.text,
        category="paper" if raw.paper_id else "pdf",
        source_path=source_path,
    )


def _stem_of(url: str) -> str:
    path = urlsplit(url).path
    name = path.rsplit("/", 1)[-1]
    return name.rsplit(".", 1)[0] if "." in name else name


@dataclass
class IngestReport:
    kept: dict = field(default_factory=lambda: {c: 0 for c in CATEGORIES})
    dropped: dict = field(default_factory=dict)  # reason -> count
    failures: list[dict] = field(default_factory=list)

    @property
    def total_kept(self) -> int:
        return sum(self.kept.values())

    def to_dict(self) -> dict:
        return {
            "kept": self.kept,
            "dropped": self.dropped,
            "failures": self.failures,
        }


def _iter_raw_files(raw_root: Path):
    for category in CATEGORIES:
        base = raw_root / category
        if not base.is_dir():
            continue
        for path in sorted(base.rglob("*")):
            if path.is_file() and not path.name.endswith(".meta.json"):
                yield category, path


def _sidecar_url(path: Path, raw_root: Path) -> str:
    sidecar = path.with_name(path.name + ".meta.json")
    if sidecar.exists():
        try:
            url = json.loads(sidecar.read_text("utf-8")).get("url")
            if url:
                return url
        except (OSError, json.JSONDecodeError):
            pass
    return f"file:///{path.relative_to(raw_root).as_posix()}"


def ingest(
    raw_root: str | Path,
    out_root: str | Path,
    keywords: list[str] | None = None,
    min_chars: int = MIN_CHARS,
) -> tuple[list[CleanDocument], IngestReport]:
    """Convert a raw corpus tree into the clean corpus layout.

    Reads ``<raw_root>/{html,pdf,paper}/``, extracts text, strips per-host
    boilerplate from html pages, applies the filters, and writes kept
    documents to ``<out_root>/{html,pdf,paper}/<doc_id>.txt`` with a
    ``<doc_id>.meta.json`` sidecar (title, category, source_path, verdict).
    """
    raw_root = Path(raw_root)
    out_root = Path(out_root)
    keywords = keywords if keywords is not None else load_keywords()
    report = IngestReport()
    documents: list[CleanDocument] = []

    for category, path in _iter_raw_files(raw_root):
        source_path = path.relative_to(raw_root).as_posix()
        url = _sidecar_url(path, raw_root)
        body = path.read_bytes()
        raw = RawDocument(
            url=url,
            fetched_at=datetime.now(timezone.utc),
            media_kind="html" if category == "html" else "pdf",
            body=body,
            depth=0,
            seed_origin=url,
            paper_id=path.stem if category == "paper" else "",
        )
        try:
            if category == "html":
                doc = clean_from_html(raw, source_path)
            else:
                doc = clean_from_pdf(raw, source_path)
        except (PdfError, ValueError) as exc:
            report.failures.append({"source_path": source_path, "error": str(exc)})
            continue
        documents.append(doc)

    documents = _strip_host_boilerplate(documents)

    kept_documents: list[CleanDocument] = []
    for doc in documents:
        verdict = apply_filters(doc, keywords, min_chars)
        if verdict.kept:
            report.kept[doc.category] += 1
            kept_documents.append(doc)
            _write_clean(out_root, doc, verdict)
        else:
            report.dropped[verdict.reason] = report.dropped.get(verdict.reason, 0) + 1
    return kept_documents, report


def _strip_host_boilerplate(documents: list[CleanDocument]) -> list[CleanDocument]:
    """Drop lines repeated across most of a host's html pages (site chrome
    the tag-level pass cannot see)."""
    by_host: dict[str, list[int]] = {}
    for i, doc in enumerate(documents):
        if doc.category != "html":
            continue
        host = doc.source_path.split("/", 2)[1] if "/" in doc.source_path else ""
        by_host.setdefault(host, []).append(i)
    result = list(documents)
    for indices in by_host.values():
        stripped = strip_repeated_lines([documents[i].text for i in indices])
        for i, text in zip(indices, stripped):
            if text != documents[i].text:
                result[i] = replace(documents[i], text=text, char_count=len(text))
    return result


def _write_clean(out_root: Path, doc: CleanDocument, verdict: FilterVerdict) -> None:
    target_dir = out_root / doc.category
    target_dir.mkdir(parents=True, exist_ok=True)
    (target_dir / f"{doc.doc_id}.txt").write_text(doc.text, encoding="utf-8")
    meta = {
        "title": doc.title,
        "category": doc.category,
        "source_path": doc.source_path,
        "verdict": {"kept": verdict.kept, "reason": verdict.reason},
    }
    (target_dir / f"{doc.doc_id}.meta.json").write_text(
        json.dumps(meta, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )


def read_clean_corpus(clean_root: str | Path) -> list[CleanDocument]:
    """Load a clean corpus written by :func:`ingest`."""
    clean_root = Path(clean_root)
    documents = []
    for category in CATEGORIES:
        base = clean_root / category
        if not base.is_dir():
            continue
        for text_path in sorted(base.glob("*.txt")):
            meta_path = text_path.with_name(f"{text_path.stem}.meta.json")
            meta = {}
            if meta_path.exists():
                meta = json.loads(meta_path.read_text("utf-8"))
            documents.append(
                CleanDocument(
                    doc_id=text_path.stem,
                    title=meta.get("title", ""),
                    text=text_path.read_text("utf-8"),
                    category=category,
                    source_path=meta.get("source_path", text_path.name),
                )
            )
    return documents
