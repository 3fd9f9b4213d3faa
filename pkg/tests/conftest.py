import functools
import threading
from http.server import SimpleHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path

import pytest

FIXTURES = Path(__file__).parent / "fixtures"
SITE_ROOT = FIXTURES / "site"

# Every page reachable within two hops of /index.html, traced by hand from
# the fixture link graph. The three /deep/ pages are a third hop away.
SITE_DEPTH2_PATHS = {
    "/index.html",
    "/academics.html",
    "/research.html",
    "/admissions.html",
    "/campus.html",
    "/junk/offtopic.html",
    "/academics/calendar.html",
    "/academics/courses.html",
    "/academics/faculty.html",
    "/research/labs.html",
    "/research/papers.html",
    "/admissions/visit.html",
    "/campus/traditions.html",
    "/campus/scotty.html",
    "/junk/short.html",
    "/junk/notfound.html",
    "/junk/ads.html",
}

# The four planted junk pages the ingest filters must drop (and why).
SITE_JUNK_PATHS = {
    "/junk/offtopic.html": "no_keyword",
    "/junk/ads.html": "no_keyword",
    "/junk/short.html": "too_short",
    "/junk/notfound.html": "error_page",
}


class _QuietHandler(SimpleHTTPRequestHandler):
    def log_message(self, *args):
        pass


_acceptance_reports: list = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        _acceptance_reports.append(report)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _acceptance_reports:
        return
    terminalreporter.section("acceptance criteria")
    for report in _acceptance_reports:
        name = report.nodeid.split("::")[-1]
        outcome = "PASS" if report.passed else "FAIL"
        terminalreporter.write_line(f"{outcome}  {name}")


@pytest.fixture(scope="session")
def site_server():
    """Serves the bundled fixture site on an ephemeral localhost port."""
    handler = functools.partial(_QuietHandler, directory=str(SITE_ROOT))
    server = ThreadingHTTPServer(("127.0.0.1", 0), handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield f"http://127.0.0.1:{server.server_address[1]}"
    server.shutdown()
