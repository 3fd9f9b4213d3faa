"""Scholarly paper retrieval by author list.

Thin HTTP client over a paper-search endpoint (Semantic Scholar's graph
API by default). The response schema is pinned here so the whole flow can
be replayed from recorded fixtures:

    {"total": int, "data": [{"paperId": str, "title": str, "year": int,
                             "isOpenAccess": bool,
                             "openAccessPdf": {"url": str} | null}, ...]}
"""

from __future__ import annotations

import json
import logging
import time
from dataclasses import dataclass, field
from datetime import datetime, timezone
from urllib.parse import urlencode

from .crawler import FetchedPage, Fetcher, RawDocument, requests_fetcher
from .urls import canonicalize_url

logger = logging.getLogger(__name__)

DEFAULT_SEARCH_URL = "https://api.semanticscholar.org/graph/v1/paper/search"
SEARCH_FIELDS = "title,year,isOpenAccess,openAccessPdf"


@dataclass
class ScholarQuery:
    author_names: list[str]
    year: int
    open_access_only: bool = True

    def __post_init__(self) -> None:
        if not self.author_names:
            raise ValueError("author_names must be non-empty")
        if not 1000 <= self.year <= 9999:
            raise ValueError(f"year must be a 4-digit year, got {self.year}")


@dataclass
class FetchPapersResult:
    documents: list[RawDocument] = field(default_factory=list)
    skipped: list[dict] = field(default_factory=list)  # no open-access PDF etc.
    failures: list[dict] = field(default_factory=list)


def _search_url(base_url: str, author: str, year: int) -> str:
    params = urlencode({"query": author, "year": year, "fields": SEARCH_FIELDS})
    return f"{base_url}?{params}"


def _fetch_with_backoff(
    fetcher: Fetcher,
    url: str,
    timeout_s: float,
    user_agent: str,
    max_retries: int,
    backoff_s: float,
) -> FetchedPage:
    last: FetchedPage | None = None
    for attempt in range(max_retries + 1):
        page = fetcher(url, timeout_s, user_agent)
        if page.status != 429:
            return page
        last = page
        if attempt < max_retries:
            time.sleep(backoff_s * (2**attempt))
    return last


def fetch_papers(
    query: ScholarQuery,
    fetcher: Fetcher | None = None,
    base_url: str = DEFAULT_SEARCH_URL,
    timeout_s: float = 30.0,
    user_agent: str = "ragkit-scholar/0.1",
    max_retries: int = 3,
    backoff_s: float = 0.5,
) -> FetchPapersResult:
    """Fetch open-access PDFs for papers by any queried author in the year.

    Papers are deduplicated by paperId across authors. Rate-limit (429)
    responses are retried with exponential backoff up to ``max_retries``;
    papers without an open-access PDF are skipped and counted.
    """
    fetcher = fetcher or requests_fetcher()
    result = FetchPapersResult()
    seen_ids: set[str] = set()

    for author in query.author_names:
        search_url = _search_url(base_url, author, query.year)
        try:
            page = _fetch_with_backoff(
                fetcher, search_url, timeout_s, user_agent, max_retries, backoff_s
            )
        except Exception as exc:
            result.failures.append({"author": author, "reason": str(exc)})
            continue
        if page.status != 200:
            result.failures.append({"author": author, "reason": f"http_{page.status}"})
            continue
        try:
            payload = json.loads(page.body.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            result.failures.append({"author": author, "reason": f"bad_response: {exc}"})
            continue

        for paper in payload.get("data", []):
            paper_id = paper.get("paperId", "")
            if not paper_id or paper_id in seen_ids:
                continue
            seen_ids.add(paper_id)
            pdf_info = paper.get("openAccessPdf") or {}
            pdf_url = pdf_info.get("url")
            if query.open_access_only and not pdf_url:
                result.skipped.append(
                    {
                        "paper_id": paper_id,
                        "title": paper.get("title", ""),
                        "reason": "no_open_access_pdf",
                    }
                )
                continue
            try:
                pdf_page = _fetch_with_backoff(
                    fetcher, pdf_url, timeout_s, user_agent, max_retries, backoff_s
                )
            except Exception as exc:
                result.failures.append({"paper_id": paper_id, "reason": str(exc)})
                continue
            if pdf_page.status != 200:
                result.failures.append(
                    {"paper_id": paper_id, "reason": f"http_{pdf_page.status}"}
                )
                continue
            result.documents.append(
                RawDocument(
                    url=canonicalize_url(pdf_url),
                    fetched_at=datetime.now(timezone.utc),
                    media_kind="pdf",
                    body=pdf_page.body,
                    depth=0,
                    seed_origin=search_url,
                    paper_id=paper_id,
                )
            )
    return result


def read_authors(path) -> list[str]:
    """Author file: one name per line, '#' comments and blanks allowed."""
    from pathlib import Path

    authors = []
    for line in Path(path).read_text("utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            authors.append(line)
    return authors
