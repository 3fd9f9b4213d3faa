from pathlib import Path

from ragkit.html_text import html_to_text, strip_repeated_lines

FIXTURES = Path(__file__).parent / "fixtures" / "pages"


def test_scripts_and_tags_stripped():
    body = b"<html><head><script>x</script><title>T</title></head><body><p>hi</p></body>"
    result = html_to_text(body)
    assert result.title == "T"
    assert result.text == "hi"


def test_nav_page_matches_golden():
    result = html_to_text((FIXTURES / "nav_page.html").read_bytes())
    assert result.title == "Dining Services"
    assert result.text == (FIXTURES / "nav_page.golden.txt").read_text("utf-8")


def test_empty_body():
    result = html_to_text(b"<html><body></body></html>")
    assert result.text == ""


def test_block_elements_become_lines():
    body = b"<body><p>one</p><p>two</p><div>three</div></body>"
    assert html_to_text(body).text == "one\ntwo\nthree"


def test_inline_whitespace_collapsed():
    body = b"<body><p>a\n\n   b\t\tc</p></body>"
    assert html_to_text(body).text == "a b c"


def test_entities_decoded():
    assert html_to_text(b"<body><p>a &amp; b</p></body>").text == "a & b"


def test_undecodable_bytes_flagged_not_fatal():
    body = "<body><p>caf\xe9</p></body>".encode("latin-1")  # invalid utf-8
    result = html_to_text(body)
    assert result.had_decode_errors
    assert "caf" in result.text


def test_no_residual_tags():
    pages = [p.read_bytes() for p in sorted((FIXTURES.parent / "site").rglob("*.html"))]
    import re

    for body in pages:
        text = html_to_text(body).text
        assert not re.search(r"<[A-Za-z]", text)
        assert len(text) <= len(body)


def test_nested_skip_regions():
    body = b"<body><nav>menu <div>sub</div> more</nav><p>keep</p></body>"
    assert html_to_text(body).text == "keep"


class TestStripRepeatedLines:
    def test_boilerplate_removed_above_threshold(self):
        pages = [f"unique content {i}\nCopyright Notice Line" for i in range(5)]
        stripped = strip_repeated_lines(pages)
        assert all("Copyright" not in text for text in stripped)
        assert all(f"unique content {i}" in stripped[i] for i in range(5))

    def test_small_host_untouched(self):
        pages = ["shared line\na", "shared line\nb"]
        assert strip_repeated_lines(pages) == pages

    def test_min_pages_floor(self):
        # 2 of 5 pages share a line: 40% >= 30% but below the 3-page floor
        pages = ["shared\nu1", "shared\nu2", "u3", "u4", "u5"]
        assert strip_repeated_lines(pages) == pages
