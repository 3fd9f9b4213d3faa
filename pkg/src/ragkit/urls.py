"""URL canonicalization and corpus path mapping."""

from __future__ import annotations

import hashlib
from urllib.parse import quote, urljoin, urlsplit, urlunsplit

ALLOWED_SCHEMES = frozenset({"http", "https"})


def canonicalize_url(url: str) -> str:
    """Normalize a URL so that equivalent spellings compare equal.

    Lowercases the scheme and host, strips the fragment, and strips a
    trailing ``?`` (empty query). Path case and non-empty queries are
    preserved.
    """
    parts = urlsplit(url.strip())
    return urlunsplit(
        (parts.scheme.lower(), parts.netloc.lower(), parts.path, parts.query, "")
    )


def resolve_link(href: str, base: str) -> str | None:
    """Resolve an anchor href against its page URL.

    Returns the canonical absolute URL, or None for fragment-only links
    and disallowed schemes.
    """
    href = href.strip()
    if not href or href.startswith("#"):
        return None
    absolute = urljoin(base, href)
    parts = urlsplit(absolute)
    if parts.scheme.lower() not in ALLOWED_SCHEMES:
        return None
    return canonicalize_url(absolute)


def doc_id_for_url(url: str) -> str:
    """Stable 16-hex-digit document id derived from the canonical URL."""
    return hashlib.sha256(canonicalize_url(url).encode("utf-8")).hexdigest()[:16]


def url_to_relpath(url: str, extension: str) -> str:
    """Map a canonical URL to a deterministic corpus-relative file path.

    ``http://x/a/b`` becomes ``x/a/b<extension>``. Every path segment is
    percent-encoded so the mapping is filesystem-safe; a non-empty query
    string is folded into the file name. Empty or directory-like paths
    map to ``index``.
    """
    parts = urlsplit(canonicalize_url(url))
    segments = [s for s in parts.path.split("/") if s]
    name = segments.pop() if segments and not parts.path.endswith("/") else "index"
    if parts.query:
        name = f"{name}?{parts.query}"
    if not name.endswith(extension):
        name += extension
    encoded = [quote(parts.netloc, safe="")]
    encoded += [quote(seg, safe="") for seg in segments]
    encoded.append(quote(name, safe="."))
    return "/".join(encoded)
