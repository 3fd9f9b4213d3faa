"""HTML to plain text via the stdlib tolerant parser.

Script and style bodies are removed entirely, nav/header/footer subtrees
are dropped, block elements start new lines, and whitespace runs collapse
to single spaces within each line.
"""

from __future__ import annotations

from dataclasses import dataclass
from html.parser import HTMLParser

_SKIP_SUBTREES = {"script", "style", "noscript", "nav", "header", "footer", "template"}
_BLOCK_TAGS = {
    "p", "div", "br", "li", "ul", "ol", "dl", "dt", "dd", "h1", "h2", "h3",
    "h4", "h5", "h6", "tr", "table", "thead", "tbody", "section", "article",
    "aside", "main", "blockquote", "pre", "figure", "figcaption", "hr",
    "address", "form",
}


@dataclass
class ExtractedHtml:
    title: str
    text: str
    had_decode_errors: bool = False


class _TextCollector(HTMLParser):
    def __init__(self) -> None:
        super().__init__(convert_charrefs=True)
        self.lines: list[list[str]] = [[]]
        self.title_parts: list[str] = []
        self._skip_depth = 0
        self._in_title = False

    def _newline(self) -> None:
        if self.lines[-1]:
            self.lines.append([])

    def handle_starttag(self, tag, attrs):
        if tag in _SKIP_SUBTREES:
            self._skip_depth += 1
            return
        if self._skip_depth:
            return
        if tag == "title":
            self._in_title = True
        if tag in _BLOCK_TAGS:
            self._newline()

    def handle_endtag(self, tag):
        if tag in _SKIP_SUBTREES:
            self._skip_depth = max(0, self._skip_depth - 1)
            return
        if self._skip_depth:
            return
        if tag == "title":
            self._in_title = False
        if tag in _BLOCK_TAGS:
            self._newline()

    def handle_startendtag(self, tag, attrs):
        if self._skip_depth:
            return
        if tag in _BLOCK_TAGS:
            self._newline()

    def handle_data(self, data):
        if self._skip_depth:
            return
        if self._in_title:
            self.title_parts.append(data)
            return
        self.lines[-1].extend(data.split())

    def result(self) -> tuple[str, str]:
        text = "\n".join(" ".join(words) for words in self.lines if words)
        title = " ".join("".join(self.title_parts).split())
        return title, text


def html_to_text(body: bytes) -> ExtractedHtml:
    """Extract title and visible text from HTML bytes.

    Undecodable bytes are replaced and flagged rather than fatal; markup
    that the tolerant parser cannot make sense of yields whatever text was
    recoverable.
    """
    try:
        decoded = body.decode("utf-8")
        had_errors = False
    except UnicodeDecodeError:
        decoded = body.decode("utf-8", errors="replace")
        had_errors = True
    collector = _TextCollector()
    try:
        collector.feed(decoded)
        collector.close()
    except Exception:
        pass  # keep whatever was collected before the parser choked
    title, text = collector.result()
    return ExtractedHtml(title=title, text=text, had_decode_errors=had_errors)


def strip_repeated_lines(texts: list[str], min_ratio: float = 0.3, min_pages: int = 3) -> list[str]:
    """Remove boilerplate lines repeated verbatim across many pages.

    A line is boilerplate when it appears in at least ``min_ratio`` of the
    given pages and in at least ``min_pages`` of them (the floor keeps tiny
    hosts from eating their own content). Intended to run per host.
    """
    if len(texts) < min_pages:
        return list(texts)
    appearance: dict[str, int] = {}
    for text in texts:
        for line in set(text.split("\n")):
            appearance[line] = appearance.get(line, 0) + 1
    threshold = max(min_pages, min_ratio * len(texts))
    boilerplate = {line for line, count in appearance.items() if count >= threshold}
    return [
        "\n".join(line for line in text.split("\n") if line not in boilerplate)
        for text in texts
    ]
