import json
from pathlib import Path

import pytest

from paramprof import scan_corpus
from paramprof.filters import parse_annotations, parse_coverage, pipeline
from paramprof.mutation import plan_all
from paramprof.source_model import corpus_enum_domain

FIXTURES = Path(__file__).parent / "fixtures"
APP = FIXTURES / "app"


def app_pipeline():
    sites = scan_corpus(APP).sites
    cov = parse_coverage((FIXTURES / "app.lcov").read_bytes())
    anns = parse_annotations((FIXTURES / "app.annotations.jsonl").read_text())
    return sites, pipeline(sites, cov, anns)


def app_work():
    """(site, plan) pairs for the 35 fixture candidates, in scan order."""
    _, res = app_pipeline()
    plans, errors = plan_all(res.candidates, corpus_enum_domain(APP))
    assert not errors
    by_id = {s.id: s for s in res.candidates}
    return [(by_id[p.site_id], p) for p in plans]


def find_site(sites, name, line, raw):
    hits = [s for s in sites if s.file.endswith("/" + name) or s.file == name]
    hits = [s for s in hits if s.line == line and s.raw_text == raw]
    assert len(hits) == 1, (name, line, raw, hits)
    return hits[0]


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


@pytest.fixture(scope="session")
def app_result():
    return app_pipeline()


@pytest.fixture(scope="session")
def golden():
    return json.loads((FIXTURES / "app.golden.json").read_text())


# lines added by the acceptance suite, echoed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
