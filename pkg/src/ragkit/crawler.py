"""Breadth-first web crawler with politeness, dedup, and raw storage.

The crawl walks outward from seed URLs level by level up to a depth cap,
deduplicating by canonical URL. Fetches within a level run on a bounded
worker pool; a per-host throttle serializes requests to the same host so
consecutive request starts are at least the configured delay apart.
Fetch failures are recorded, never fatal: a depth-2 sweep of any real site
hits dead links.
"""

from __future__ import annotations

import json
import logging
import threading
import time
import urllib.robotparser
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from html.parser import HTMLParser
from pathlib import Path
from typing import Callable
from urllib.parse import urlsplit

import requests

from .urls import canonicalize_url, resolve_link, url_to_relpath

logger = logging.getLogger(__name__)

DEFAULT_USER_AGENT = "ragkit-crawler/0.1"


@dataclass
class CrawlPolicy:
    max_depth: int = 2
    max_pages: int = 10_000
    per_host_delay_ms: int = 200
    timeout_ms: int = 15_000
    allowed_schemes: frozenset[str] = frozenset({"http", "https"})
    user_agent: str = DEFAULT_USER_AGENT
    respect_robots: bool = True
    workers: int = 4

    def __post_init__(self) -> None:
        if self.max_depth < 0:
            raise ValueError("max_depth must be >= 0")
        if self.max_pages < 1:
            raise ValueError("max_pages must be >= 1")
        if self.per_host_delay_ms < 0:
            raise ValueError("per_host_delay_ms must be >= 0")


@dataclass
class RawDocument:
    url: str  # canonical form
    fetched_at: datetime
    media_kind: str  # html | pdf
    body: bytes
    depth: int
    seed_origin: str
    paper_id: str = ""  # set for scholarly PDFs; routes storage to paper/


@dataclass
class FetchFailure:
    url: str
    depth: int
    reason: str


@dataclass
class CrawlResult:
    documents: list[RawDocument] = field(default_factory=list)
    failures: list[FetchFailure] = field(default_factory=list)

    @property
    def visited_urls(self) -> set[str]:
        return {doc.url for doc in self.documents}


@dataclass
class FetchedPage:
    status: int
    body: bytes
    content_type: str = ""


Fetcher = Callable[[str, float, str], FetchedPage]


class _LinkCollector(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.hrefs: list[str] = []

    def handle_starttag(self, tag, attrs):
        if tag == "a":
            for name, value in attrs:
                if name == "href" and value is not None:
                    self.hrefs.append(value)


def extract_links(body: bytes, base: str) -> list[str]:
    """All anchor targets resolved against base, canonicalized, deduped.

    Fragment-only links and disallowed schemes are dropped; order of first
    occurrence is preserved. Malformed markup is tolerated; a body that
    cannot be parsed at all yields an empty list.
    """
    collector = _LinkCollector()
    try:
        collector.feed(body.decode("utf-8", errors="replace"))
        collector.close()
    except Exception:
        return []
    links: list[str] = []
    seen: set[str] = set()
    for href in collector.hrefs:
        resolved = resolve_link(href, base)
        if resolved is not None and resolved not in seen:
            seen.add(resolved)
            links.append(resolved)
    return links


def sniff_media_kind(body: bytes, content_type: str = "") -> str:
    if body[:5] == b"%PDF-" or "pdf" in content_type.lower():
        return "pdf"
    return "html"


class HostThrottle:
    """Per-host politeness: serializes same-host requests and spaces their
    start times by at least the configured delay."""

    def __init__(self, delay_ms: int):
        self.delay = delay_ms / 1000.0
        self._locks: dict[str, threading.Lock] = {}
        self._last_start: dict[str, float] = {}
        self._registry = threading.Lock()

    def _lock_for(self, host: str) -> threading.Lock:
        with self._registry:
            return self._locks.setdefault(host, threading.Lock())

    def wait(self, host: str) -> None:
        with self._lock_for(host):
            now = time.monotonic()
            earliest = self._last_start.get(host)
            if earliest is not None and now < earliest + self.delay:
                time.sleep(earliest + self.delay - now)
            self._last_start[host] = time.monotonic()


class _RobotsCache:
    def __init__(self, fetcher: Fetcher, policy: CrawlPolicy, throttle: HostThrottle):
        self.fetcher = fetcher
        self.policy = policy
        self.throttle = throttle
        self._parsers: dict[str, urllib.robotparser.RobotFileParser | None] = {}
        self._lock = threading.Lock()

    def allowed(self, url: str) -> bool:
        if not self.policy.respect_robots:
            return True
        parts = urlsplit(url)
        origin = f"{parts.scheme}://{parts.netloc}"
        with self._lock:
            if origin not in self._parsers:
                self._parsers[origin] = self._load(origin, parts.netloc)
            parser = self._parsers[origin]
        return parser is None or parser.can_fetch(self.policy.user_agent, url)

    def _load(self, origin: str, host: str):
        try:
            self.throttle.wait(host)
            page = self.fetcher(
                f"{origin}/robots.txt",
                self.policy.timeout_ms / 1000.0,
                self.policy.user_agent,
            )
        except Exception:
            return None  # unreachable robots -> allow
        if page.status != 200:
            return None
        parser = urllib.robotparser.RobotFileParser()
        parser.parse(page.body.decode("utf-8", errors="replace").splitlines())
        return parser


def requests_fetcher(session: requests.Session | None = None) -> Fetcher:
    session = session or requests.Session()

    def fetch(url: str, timeout_s: float, user_agent: str) -> FetchedPage:
        response = session.get(
            url, timeout=timeout_s, headers={"User-Agent": user_agent}
        )
        return FetchedPage(
            status=response.status_code,
            body=response.content,
            content_type=response.headers.get("Content-Type", ""),
        )

    return fetch


def crawl(seeds: list[str], policy: CrawlPolicy, fetcher: Fetcher | None = None) -> CrawlResult:
    """BFS crawl from the seeds up to policy.max_depth.

    Returns documents in BFS level order (deterministic for a fixed link
    graph) plus a failure entry for every URL that could not be fetched.
    Stops cleanly with partial results once max_pages documents are stored.
    """
    for seed in seeds:
        parts = urlsplit(seed)
        if parts.scheme not in policy.allowed_schemes or not parts.netloc:
            raise ValueError(f"seed is not an absolute http(s) URI: {seed!r}")
    fetcher = fetcher or requests_fetcher()
    throttle = HostThrottle(policy.per_host_delay_ms)
    robots = _RobotsCache(fetcher, policy, throttle)
    timeout_s = policy.timeout_ms / 1000.0

    result = CrawlResult()
    scheduled: set[str] = set()
    frontier: list[tuple[str, int, str]] = []  # (canonical url, depth, seed origin)
    for seed in seeds:
        canonical = canonicalize_url(seed)
        if canonical not in scheduled:
            scheduled.add(canonical)
            frontier.append((canonical, 0, canonical))

    def fetch_one(entry: tuple[str, int, str]):
        url, depth, origin = entry
        host = urlsplit(url).netloc
        if not robots.allowed(url):
            return FetchFailure(url=url, depth=depth, reason="robots_disallowed")
        throttle.wait(host)
        try:
            page = fetcher(url, timeout_s, policy.user_agent)
        except Exception as exc:
            return FetchFailure(url=url, depth=depth, reason=str(exc))
        if page.status != 200:
            return FetchFailure(url=url, depth=depth, reason=f"http_{page.status}")
        return RawDocument(
            url=url,
            fetched_at=datetime.now(timezone.utc),
            media_kind=sniff_media_kind(page.body, page.content_type),
            body=page.body,
            depth=depth,
            seed_origin=origin,
        )

    while frontier:
        budget = policy.max_pages - len(result.documents)
        if budget <= 0:
            logger.info("max_pages reached; stopping with partial results")
            break
        level = frontier[:budget]
        overflow = frontier[budget:]
        with ThreadPoolExecutor(max_workers=policy.workers) as pool:
            outcomes = list(pool.map(fetch_one, level))

        next_frontier: list[tuple[str, int, str]] = []
        for (url, depth, origin), outcome in zip(level, outcomes):
            if isinstance(outcome, FetchFailure):
                result.failures.append(outcome)
                continue
            result.documents.append(outcome)
            if depth < policy.max_depth and outcome.media_kind == "html":
                for link in extract_links(outcome.body, url):
                    if link not in scheduled:
                        scheduled.add(link)
                        next_frontier.append((link, depth + 1, origin))
        # overflow entries are shallower than next_frontier, so prepending
        # them preserves BFS level order
        frontier = overflow + next_frontier
    return result


def read_seeds(path: str | Path) -> list[str]:
    """Seed file: one absolute URL per line, '#' comments and blanks allowed."""
    seeds = []
    for line in Path(path).read_text("utf-8").splitlines():
        line = line.strip()
        if line and not line.startswith("#"):
            seeds.append(line)
    return seeds


def store_raw(doc: RawDocument, root: str | Path) -> Path:
    """Store a raw document under the hierarchical corpus layout.

    HTML goes to html/, crawled PDFs to pdf/, scholarly PDFs to
    paper/<id>.pdf. The file name derives deterministically from the
    canonical URL; a different URL mapping to an occupied name gets a
    ``-1``/``-2`` suffix, while re-storing the same URL overwrites in
    place (which keeps re-crawls idempotent). A ``<name>.meta.json``
    sidecar records url, fetched_at, depth, and seed_origin.
    """
    root = Path(root)
    if doc.paper_id:
        relpath = f"paper/{doc.paper_id}.pdf"
    else:
        extension = ".pdf" if doc.media_kind == "pdf" else ".html"
        relpath = f"{doc.media_kind}/{url_to_relpath(doc.url, extension)}"

    target = root / relpath
    target.parent.mkdir(parents=True, exist_ok=True)
    stem, suffix_num = target, 0
    while target.exists():
        sidecar = target.with_name(target.name + ".meta.json")
        if sidecar.exists():
            try:
                owner = json.loads(sidecar.read_text("utf-8")).get("url")
            except (OSError, json.JSONDecodeError):
                owner = None
            if owner == doc.url:
                break
        suffix_num += 1
        target = stem.with_name(f"{stem.stem}-{suffix_num}{stem.suffix}")

    try:
        target.write_bytes(doc.body)
        meta = {
            "url": doc.url,
            "fetched_at": doc.fetched_at.isoformat(),
            "depth": doc.depth,
            "seed_origin": doc.seed_origin,
        }
        target.with_name(target.name + ".meta.json").write_text(
            json.dumps(meta, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
        )
    except OSError as exc:
        raise OSError(f"failed to store {doc.url} at {target}: {exc}") from exc
    return target
