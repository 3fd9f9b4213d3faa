"""Minimal PDF text extraction, dependency-free.

Handles the common case this pipeline actually meets: unencrypted PDFs
with classic cross-reference tables, Flate and/or ASCII85 encoded content
streams, and simple (non-CID) fonts whose strings are close enough to
Latin-1. Pages with no text-showing operators (scanned images) yield
empty text. Encrypted documents are refused outright.
"""

from __future__ import annotations

import base64
import re
import zlib
from dataclasses import dataclass, field


class PdfError(Exception):
    """Raised for corrupt or unsupported PDF structure."""


class PdfEncryptedError(PdfError):
    """Raised when the document declares an /Encrypt dictionary."""


@dataclass(frozen=True)
class Ref:
    num: int
    gen: int


class Name(str):
    """A PDF name object, e.g. /Type."""


class PdfString(bytes):
    """A PDF string object; distinct from bare keyword tokens."""


_WHITESPACE = b"\x00\t\n\x0c\r "
_DELIMITERS = b"()<>[]{}/%"


class _Lexer:
    """Recursive-descent reader for PDF objects over a byte buffer."""

    def __init__(self, data: bytes, pos: int = 0):
        self.data = data
        self.pos = pos

    def skip_ws(self) -> None:
        data, n = self.data, len(self.data)
        while self.pos < n:
            ch = data[self.pos]
            if ch in _WHITESPACE:
                self.pos += 1
            elif ch == ord("%"):  # comment to end of line
                while self.pos < n and data[self.pos] not in b"\r\n":
                    self.pos += 1
            else:
                return

    def peek(self) -> int:
        return self.data[self.pos] if self.pos < len(self.data) else -1

    def read_token(self) -> bytes:
        self.skip_ws()
        start = self.pos
        data, n = self.data, len(self.data)
        while self.pos < n and data[self.pos] not in _WHITESPACE and data[self.pos] not in _DELIMITERS:
            self.pos += 1
        return data[start : self.pos]

    def parse_object(self):
        self.skip_ws()
        ch = self.peek()
        if ch < 0:
            raise PdfError("unexpected end of data")
        if ch == ord("<"):
            if self.data[self.pos : self.pos + 2] == b"<<":
                return self._parse_dict()
            return self._parse_hex_string()
        if ch == ord("("):
            return self._parse_literal_string()
        if ch == ord("["):
            return self._parse_array()
        if ch == ord("/"):
            return self._parse_name()
        if ch in b"+-.0123456789":
            return self._parse_number_or_ref()
        token = self.read_token()
        if token == b"true":
            return True
        if token == b"false":
            return False
        if token == b"null":
            return None
        if not token:
            raise PdfError(f"cannot parse object at offset {self.pos}")
        return token  # bare keyword (stream, endobj, ...)

    def _parse_dict(self) -> dict:
        self.pos += 2
        result: dict = {}
        while True:
            self.skip_ws()
            if self.data[self.pos : self.pos + 2] == b">>":
                self.pos += 2
                return result
            key = self.parse_object()
            if not isinstance(key, Name):
                raise PdfError(f"dictionary key is not a name at {self.pos}")
            result[str(key)] = self.parse_object()

    def _parse_array(self) -> list:
        self.pos += 1
        items = []
        while True:
            self.skip_ws()
            if self.peek() == ord("]"):
                self.pos += 1
                return items
            items.append(self.parse_object())

    def _parse_name(self) -> Name:
        self.pos += 1
        start = self.pos
        data, n = self.data, len(self.data)
        while self.pos < n and data[self.pos] not in _WHITESPACE and data[self.pos] not in _DELIMITERS:
            self.pos += 1
        raw = data[start : self.pos]
        # #xx hex escapes inside names
        decoded = re.sub(rb"#([0-9A-Fa-f]{2})", lambda m: bytes([int(m.group(1), 16)]), raw)
        return Name(decoded.decode("latin-1"))

    def _parse_number_or_ref(self):
        token = self.read_token()
        try:
            if b"." in token:
                return float(token)
            value = int(token)
        except ValueError as exc:
            raise PdfError(f"bad number {token!r}") from exc
        # lookahead for "<gen> R"
        saved = self.pos
        self.skip_ws()
        gen_token = self.read_token()
        if gen_token.isdigit():
            self.skip_ws()
            if self.data[self.pos : self.pos + 1] == b"R" and (
                self.pos + 1 >= len(self.data)
                or self.data[self.pos + 1] in _WHITESPACE
                or self.data[self.pos + 1] in _DELIMITERS
            ):
                self.pos += 1
                return Ref(value, int(gen_token))
        self.pos = saved
        return value

    def _parse_literal_string(self) -> bytes:
        self.pos += 1
        out = bytearray()
        depth = 1
        data, n = self.data, len(self.data)
        while self.pos < n:
            ch = data[self.pos]
            self.pos += 1
            if ch == ord("\\"):
                if self.pos >= n:
                    break
                esc = data[self.pos]
                self.pos += 1
                mapping = {
                    ord("n"): b"\n", ord("r"): b"\r", ord("t"): b"\t",
                    ord("b"): b"\b", ord("f"): b"\f",
                    ord("("): b"(", ord(")"): b")", ord("\\"): b"\\",
                }
                if esc in mapping:
                    out += mapping[esc]
                elif ord("0") <= esc <= ord("7"):
                    digits = chr(esc)
                    for _ in range(2):
                        if self.pos < n and ord("0") <= data[self.pos] <= ord("7"):
                            digits += chr(data[self.pos])
                            self.pos += 1
                    out.append(int(digits, 8) & 0xFF)
                elif esc in b"\r\n":  # line continuation
                    if esc == ord("\r") and self.pos < n and data[self.pos] == ord("\n"):
                        self.pos += 1
                else:
                    out.append(esc)
            elif ch == ord("("):
                depth += 1
                out.append(ch)
            elif ch == ord(")"):
                depth -= 1
                if depth == 0:
                    return PdfString(out)
                out.append(ch)
            else:
                out.append(ch)
        raise PdfError("unterminated literal string")

    def _parse_hex_string(self) -> bytes:
        self.pos += 1
        hex_digits = []
        data, n = self.data, len(self.data)
        while self.pos < n and data[self.pos] != ord(">"):
            ch = chr(data[self.pos])
            if ch in "0123456789abcdefABCDEF":
                hex_digits.append(ch)
            self.pos += 1
        self.pos += 1
        if len(hex_digits) % 2:
            hex_digits.append("0")
        return PdfString(bytes.fromhex("".join(hex_digits)))


@dataclass
class _PdfObject:
    value: object
    stream: bytes | None = None


@dataclass
class PdfDocument:
    objects: dict[tuple[int, int], _PdfObject] = field(default_factory=dict)
    trailer: dict = field(default_factory=dict)

    def resolve(self, value):
        seen = set()
        while isinstance(value, Ref):
            key = (value.num, value.gen)
            if key in seen:
                raise PdfError(f"circular reference {key}")
            seen.add(key)
            obj = self.objects.get(key)
            if obj is None:
                return None
            value = obj.value
        return value


_OBJ_RE = re.compile(rb"(\d+)\s+(\d+)\s+obj\b")


def _decode_stream(raw: bytes, filters) -> bytes:
    if filters is None:
        return raw
    if isinstance(filters, (Name, str)):
        filters = [filters]
    data = raw
    for filt in filters:
        name = str(filt)
        if name == "FlateDecode":
            data = zlib.decompress(data)
        elif name == "ASCII85Decode":
            data = base64.a85decode(data.strip(), adobe=True)
        elif name == "ASCIIHexDecode":
            data = bytes.fromhex(
                data.replace(b">", b"").translate(None, _WHITESPACE).decode("ascii")
            )
        else:
            raise PdfError(f"unsupported stream filter {name}")
    return data


def parse_pdf(data: bytes) -> PdfDocument:
    if not data.startswith(b"%PDF-"):
        raise PdfError("missing %PDF header")
    doc = PdfDocument()

    pos = 0
    while True:
        match = _OBJ_RE.search(data, pos)
        if match is None:
            break
        num, gen = int(match.group(1)), int(match.group(2))
        lexer = _Lexer(data, match.end())
        try:
            value = lexer.parse_object()
        except PdfError:
            pos = match.end()
            continue
        stream_bytes = None
        lexer.skip_ws()
        if data[lexer.pos : lexer.pos + 6] == b"stream":
            start = lexer.pos + 6
            if data[start : start + 2] == b"\r\n":
                start += 2
            elif data[start : start + 1] in (b"\n", b"\r"):
                start += 1
            length = value.get("Length") if isinstance(value, dict) else None
            end = -1
            if isinstance(length, int):
                candidate = start + length
                if data[candidate : candidate + 20].lstrip().startswith(b"endstream"):
                    end = candidate
            if end < 0:
                end = data.find(b"endstream", start)
                if end < 0:
                    raise PdfError(f"object {num}: stream without endstream")
            stream_bytes = data[start:end]
            pos = end
        else:
            pos = lexer.pos
        doc.objects[(num, gen)] = _PdfObject(value=value, stream=stream_bytes)

    for match in re.finditer(rb"trailer", data):
        lexer = _Lexer(data, match.end())
        try:
            chunk = lexer.parse_object()
        except PdfError:
            continue
        if isinstance(chunk, dict):
            doc.trailer.update(chunk)
    if not doc.trailer:
        # cross-reference-stream files keep root info in the catalog object
        for key, obj in doc.objects.items():
            if isinstance(obj.value, dict) and obj.value.get("Type") == Name("Catalog"):
                doc.trailer = {"Root": Ref(*key)}
                break
    if "Encrypt" in doc.trailer:
        raise PdfEncryptedError("document is encrypted")
    return doc


def _content_text(content: bytes) -> str:
    """Walk a content stream, collecting text-showing operator output."""
    lexer = _Lexer(content)
    pieces: list[str] = []
    operands: list = []
    n = len(content)
    while True:
        lexer.skip_ws()
        if lexer.pos >= n:
            break
        try:
            obj = lexer.parse_object()
        except PdfError:
            break
        if isinstance(obj, PdfString):
            operands.append(obj)
        elif isinstance(obj, bytes) and obj != b"":
            if obj == b"Tj":
                if operands and isinstance(operands[-1], PdfString):
                    pieces.append(_decode_text(operands[-1]))
                operands = []
            elif obj in (b"'", b'"'):
                string = next(
                    (op for op in reversed(operands) if isinstance(op, PdfString)), None
                )
                pieces.append("\n")
                if string is not None:
                    pieces.append(_decode_text(string))
                operands = []
            elif obj == b"TJ":
                if operands and isinstance(operands[-1], list):
                    for item in operands[-1]:
                        if isinstance(item, PdfString):
                            pieces.append(_decode_text(item))
                operands = []
            elif obj in (b"T*", b"Td", b"TD"):
                pieces.append("\n")
                operands = []
            elif obj == b"BI":  # inline image: skip to EI
                end = content.find(b"EI", lexer.pos)
                lexer.pos = n if end < 0 else end + 2
                operands = []
            else:
                operands = []  # any other operator consumes its operands
        else:
            operands.append(obj)
    text = "".join(pieces)
    lines = [re.sub(r"[ \t]+", " ", line).strip() for line in text.split("\n")]
    return "\n".join(line for line in lines if line)


def _decode_text(raw: bytes) -> str:
    if raw.startswith(b"\xfe\xff"):
        return raw[2:].decode("utf-16-be", errors="replace")
    return raw.decode("latin-1")


def _walk_pages(doc: PdfDocument, node_ref, pages: list) -> None:
    node = doc.resolve(node_ref)
    if not isinstance(node, dict):
        return
    node_type = node.get("Type")
    if node_type == Name("Pages") or (node_type is None and "Kids" in node):
        for kid in doc.resolve(node.get("Kids")) or []:
            _walk_pages(doc, kid, pages)
    elif node_type == Name("Page"):
        pages.append((node, node_ref))


def _page_content(doc: PdfDocument, page: dict) -> bytes:
    contents = page.get("Contents")
    refs = contents if isinstance(contents, list) else [contents]
    out = bytearray()
    for ref in refs:
        if ref is None:
            continue
        if isinstance(ref, Ref):
            obj = doc.objects.get((ref.num, ref.gen))
        else:
            obj = None
        if obj is None or obj.stream is None:
            continue
        filters = obj.value.get("Filter") if isinstance(obj.value, dict) else None
        filters = doc.resolve(filters) if isinstance(filters, Ref) else filters
        try:
            out += _decode_stream(obj.stream, filters)
        except (PdfError, zlib.error, ValueError) as exc:
            raise PdfError(f"cannot decode content stream: {exc}") from exc
        out += b"\n"
    return bytes(out)


@dataclass
class PdfText:
    pages: list[str]
    title: str = ""

    @property
    def text(self) -> str:
        """Page texts concatenated with form-feed separators."""
        return "\f".join(self.pages)


def extract_pdf_text(data: bytes) -> PdfText:
    """Extract per-page text and the metadata title from PDF bytes."""
    doc = parse_pdf(data)
    root = doc.resolve(doc.trailer.get("Root"))
    if not isinstance(root, dict):
        raise PdfError("no document catalog")
    pages: list = []
    _walk_pages(doc, root.get("Pages"), pages)
    if not pages:
        raise PdfError("no pages found")
    page_texts = [_content_text(_page_content(doc, page)) for page, _ in pages]

    title = ""
    info = doc.resolve(doc.trailer.get("Info"))
    if isinstance(info, dict):
        raw_title = doc.resolve(info.get("Title"))
        if isinstance(raw_title, (bytes, PdfString)):
            title = _decode_text(raw_title).strip()
    return PdfText(pages=page_texts, title=title)
