import random

import pytest

from paramprof import scan_corpus
from paramprof.filters import (
    Annotation,
    AnnotationError,
    CoverageFormatError,
    CoverageMap,
    apply_annotations,
    coverage_filter,
    dump_annotations,
    heuristic_filter,
    normalize_path,
    parse_annotations,
    parse_coverage,
    pipeline,
)
from paramprof.source_model import scan_source

from conftest import FIXTURES, find_site
from corpus_gen import random_corpus, random_coverage


def write_corpus(root, corpus):
    for path, text in corpus.items():
        p = root / path
        p.parent.mkdir(parents=True, exist_ok=True)
        p.write_text(text)


# ---- coverage -------------------------------------------------------------


def test_lcov_counts():
    cov = parse_coverage("SF:src/A.java\nDA:10,1\nDA:11,0\nend_of_record\n")
    assert cov == {"src/A.java": {10}}


def test_empty_report():
    assert parse_coverage(b"") == {}


def test_two_file_report():
    text = "TN:t\n"
    for f, lines in (("a/One.java", [3, 4, 9, 12, 20]), ("b/Two.java", [1, 2, 5, 8, 13])):
        text += f"SF:{f}\n" + "".join(f"DA:{n},{n}\n" for n in lines) + "DA:99,0\nLF:6\nLH:5\nend_of_record\n"
    assert parse_coverage(text) == {"a/One.java": {3, 4, 9, 12, 20}, "b/Two.java": {1, 2, 5, 8, 13}}


def test_simple_format():
    assert parse_coverage("src/A.java:3\nsrc/A.java:5\n./src/B.java:1\n") == {
        "src/A.java": {3, 5}, "src/B.java": {1}}


def test_malformed_record_names_line():
    with pytest.raises(CoverageFormatError) as err:
        parse_coverage("SF:a.java\nDA:x,1\n")
    assert "2" in str(err.value)
    with pytest.raises(CoverageFormatError):
        parse_coverage("DA:1,1\n")
    with pytest.raises(CoverageFormatError):
        parse_coverage("SF:a.java\nDA:0,1\n")


def test_path_normalization():
    assert normalize_path("./a//b/C.java") == "a/b/C.java"
    with pytest.raises(ValueError):
        normalize_path("../C.java")


def test_unknown_paths_matched_by_suffix():
    cov = CoverageMap({"/build/checkout/app/src/A.java": [4]})
    assert cov.covered("src/A.java", 4)
    assert not cov.covered("src/A.java", 5)
    assert not cov.covered("src/B.java", 4)


# ---- individual stages -----------------------------------------------------


def sites_of(src, name="A.java"):
    return scan_source(name, src.encode())[0]


def test_coverage_filter():
    sites = sites_of("class A {\n int x = 4;\n int y = 5;\n}\n")
    d = coverage_filter(sites, CoverageMap({"A.java": [2]}))
    assert [(x.verdict, x.reason) for x in d] == [("kept", "kept-candidate"), ("dropped", "uncovered")]


def test_no_coverage_is_pass_through():
    sites = sites_of("class A { int x = 4; }")
    assert all(d.kept for d in coverage_filter(sites, None))


def test_heuristic_examples():
    src = "class A { void f() { item.setVisible(true); convert(5, DAYS); sock.setSocketTimeout(0); } }"
    sites = sites_of(src)
    got = {s.raw_text: d for s, d in zip(sites, heuristic_filter(sites))}
    assert got["true"].reason == "heuristic:OneArgBoolCall"
    assert got["DAYS"].reason == "heuristic:TimeUnitArg"
    assert got["0"].kept and got["5"].kept


def test_rules_respect_type_applicability():
    # a boolean compared with nothing but used as a one-arg call stays a bool rule;
    # numeric rules never fire on enums
    sites = sites_of("enum E { P, Q } class A { void f() { x = a[E.P]; } }")
    (d,) = heuristic_filter(sites)
    assert d.kept


def test_reason_follows_fixed_rule_order():
    # 1 here is both PlusMinusSmall and ReturnValue; numeric rules come first
    sites = sites_of("class A { int f(int n) { return n - 1; } }")
    assert heuristic_filter(sites)[0].reason == "heuristic:PlusMinusSmall"


# ---- annotations ----------------------------------------------------------


def test_annotation_overrides_kept():
    sites = sites_of("class A { int e = 42; int x = 7; }")
    auto = heuristic_filter(sites)
    out = apply_annotations(auto, [Annotation(sites[0].id, "dropped", "error code")])
    assert (out[0].verdict, out[0].reason) == ("dropped", "manual:error code")
    assert out[1] == auto[1]


def test_empty_annotations_unchanged():
    sites = sites_of("class A { int e = 42; }")
    auto = heuristic_filter(sites)
    assert apply_annotations(auto, []) == auto


def test_cannot_resurrect_without_force():
    sites = sites_of("class A { int f() { return 3; } }")
    auto = heuristic_filter(sites)
    assert not auto[0].kept
    ann = [Annotation(sites[0].id, "kept", "looked again")]
    assert apply_annotations(auto, ann) == auto
    assert apply_annotations(auto, ann, force=True)[0].kept


def test_annotation_errors():
    sites = sites_of("class A { int e = 42; }")
    auto = heuristic_filter(sites)
    with pytest.raises(AnnotationError):
        apply_annotations(auto, [Annotation("cdeadbeef", "dropped")])
    with pytest.raises(AnnotationError):
        apply_annotations(auto, [Annotation(sites[0].id, "dropped"), Annotation(sites[0].id, "kept")])
    with pytest.raises(AnnotationError):
        parse_annotations('{"site_id": "x", "verdict": "maybe"}\n')


def test_annotation_round_trip():
    anns = [Annotation("c1", "dropped", "n"), Annotation("c2", "kept", "")]
    assert parse_annotations(dump_annotations(anns)) == anns


def test_three_manual_drops_of_twenty():
    src = "class A {\n" + "".join(f"    int v{i} = {i + 10};\n" for i in range(20)) + "}\n"
    sites = sites_of(src)
    anns = [Annotation(s.id, "dropped", "not a parameter") for s in sites[:3]]
    res = pipeline(sites, None, anns)
    assert len(res.candidates) == 17
    assert res.stage_drops == {"coverage": 0, "heuristic": 0, "manual": 3}


# ---- pipeline ---------------------------------------------------------------


def test_fixture_golden(app_result, golden):
    sites, res = app_result
    got = sorted([s.file, s.line, s.raw_text] for s in res.candidates)
    assert got == sorted(golden["candidates"])
    counts = {}
    for s in res.candidates:
        counts[s.param_type] = counts.get(s.param_type, 0) + 1
    assert counts == golden["counts"]


def test_fixture_every_site_has_one_decision(app_result):
    sites, res = app_result
    assert [d.site_id for d in res.decisions] == [s.id for s in sites]
    assert sum(d.kept for d in res.decisions) + sum(not d.kept for d in res.decisions) == len(sites)
    assert all(d.kept or d.reason != "kept-candidate" for d in res.decisions)


def test_fixture_specific_reasons(app_result):
    sites, res = app_result
    by = {d.site_id: d for d in res.decisions}
    assert by[find_site(sites, "Unused.java", 4, "9").id].reason == "uncovered"
    assert by[find_site(sites, "SyncService.java", 27, "0").id].reason == "heuristic:ArrayIndex"
    assert by[find_site(sites, "ForecastView.java", 17, "8").id].reason == "manual:text layout offset"


def test_order_independence_on_random_corpora(tmp_path):
    rng = random.Random(11)
    for k in range(20):
        root = tmp_path / f"c{k}"
        corpus = random_corpus(rng)
        write_corpus(root, corpus)
        sites = scan_corpus(root).sites
        cov = parse_coverage(random_coverage(rng, corpus))
        a = {d.site_id for d in coverage_filter(sites, cov) if d.kept}
        b = {d.site_id for d in heuristic_filter(sites) if d.kept}
        cov_then_heur = {d.site_id for d in heuristic_filter([s for s in sites if s.id in a]) if d.kept}
        heur_then_cov = {d.site_id for d in coverage_filter([s for s in sites if s.id in b], cov) if d.kept}
        res = pipeline(sites, cov)
        assert cov_then_heur == heur_then_cov == set(res.candidate_ids)
        assert res.combined_kept <= min(res.coverage_only_kept, res.heuristic_only_kept)


def test_summary_breakdown(app_result):
    _, res = app_result
    s = res.summary()
    assert s["scanned"] == 68 and s["candidates"] == 35
    assert s["breakdown"]["Enum"]["combined"] == 5
