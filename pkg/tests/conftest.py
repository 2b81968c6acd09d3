import os
import re
from pathlib import Path

import pytest

from tydic.driver import BuildConfig, compile

ROOT = Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

# (source, top, sugar) for every design that must compile cleanly
GOOD_DESIGNS = [
    ("corpus/cookbook/parallelize.td", "adder_8x", True),
    ("corpus/cookbook/fanout.td", "fanout_top", True),
    ("corpus/cookbook/clocks.td", "frame_grabber", True),
    ("corpus/cookbook/union.td", "nic", True),
    ("corpus/cookbook/relax.td", "bridge", True),
    ("corpus/cookbook/arith.td", "scale", True),
    ("corpus/tpch/q1.td", "q1_i", True),
    ("corpus/tpch/q6.td", "q6_i", True),
    ("corpus/tpch/q19.td", "q19_i", True),
    ("corpus/tpch/q1_nosugar.td", "q1m_i", False),
]

TPCH_QUERIES = [d for d in GOOD_DESIGNS if d[0].startswith("corpus/tpch/q") and d[2]]

BAD_DESIGNS = sorted(str(p.relative_to(ROOT)) for p in (CORPUS / "bad").glob("*.td"))

_EXPECT = re.compile(r"//\s*expect:\s*(E\d{3})\s+(\d+):(\d+)")


def expected_diagnostic(path):
    """(code, line, column) from the ``// expect:`` header of a bad design."""
    first = (ROOT / path).read_text().splitlines()[0]
    m = _EXPECT.match(first)
    assert m, f"{path} lacks an expect header"
    return m.group(1), int(m.group(2)), int(m.group(3))


def build(source, top, sugar=True, drc="strict", outdir=None, emit="both"):
    return compile(BuildConfig(inputs=[source], top=top, sugar=sugar, drc=drc, emit=emit, outdir=outdir))


ACCEPTANCE = {}  # criterion number -> "PASS" | "FAIL"


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    callspec = getattr(item, "callspec", None)
    if callspec is None or "criterion" not in callspec.params:
        return
    n = callspec.params["criterion"]
    if report.failed:
        ACCEPTANCE[n] = "FAIL"
    elif report.when == "call" and report.passed:
        ACCEPTANCE.setdefault(n, "PASS")


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    from test_acceptance import TITLES
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        terminalreporter.write_line(f"criterion {n:2d}: {ACCEPTANCE[n]}  {TITLES[n]}")


def pytest_configure(config):
    # file ids in diagnostics and entity comments are relative to the cwd
    os.chdir(ROOT)


def design_id(d):
    return f"{Path(d[0]).stem}:{d[1]}"


@pytest.fixture(scope="session")
def good_builds():
    out = {}
    for d in GOOD_DESIGNS:
        result = build(*d)
        assert result.status == 0, "".join(x.render() for x in result.diagnostics)
        out[d] = result
    return out
