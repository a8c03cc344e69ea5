import csv
import io
import json
import shutil
import subprocess
import sys

import pytest

from conftest import FIXTURES
from paramprof.cli import RunConfig, ConfigError, main
from paramprof.measurement import RunMeasurement, Variant
from paramprof.orchestrator import (
    COMPLETED,
    DECIDED,
    ExperimentBlock,
    ParameterResult,
    ValueOutcome,
)
from paramprof.report import (
    CANDIDATE_COLUMNS,
    SummaryRow,
    candidate_rows,
    emit_summary,
    read_validations,
    write_report,
)
from paramprof.stats import decide

CAMPAIGN = FIXTURES / "app.campaign.json"
STEPS = ("scan", "filter", "plan", "run", "report")


def cli(*args):
    return main([str(a) for a in args])


def pipeline_into(out, *extra):
    for step in STEPS:
        assert cli(step, "--config", CAMPAIGN, "--out", out, *extra) == 0, step


@pytest.fixture(scope="module")
def campaign_out(tmp_path_factory):
    out = tmp_path_factory.mktemp("campaign")
    pipeline_into(out)
    return out


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


# ---- hand-built results -----------------------------------------------------


def block(variant, energies, start=0):
    runs = [RunMeasurement(f"r{start + i}", variant, e, 1.0, float(start + i)) for i, e in enumerate(energies)]
    return ExperimentBlock.of(variant, runs, accepted=True)


def result(site_id, type_, base, values, line=1):
    """``values`` is a list of (literal, energies) measured after ``base``."""
    b = block(Variant(), base)
    outcomes = []
    for i, (lit, energies) in enumerate(values):
        vb = block(Variant(site_id, i), energies, 5 * (i + 1))
        d = decide(vb.energies, b.energies, 0.0, site_id=site_id, value_index=i)
        outcomes.append(ValueOutcome(i, lit, DECIDED, [vb], d))
    return ParameterResult(site_id, {"file": "A.java", "line": line, "kind": "int", "raw": "10", "type": type_},
                           "10", "dev0", COMPLETED, [b], outcomes)


BASE = [100.0, 100.5, 99.5, 100.2, 99.8]


def test_relative_delta_row():
    r = result("s1", "Numeric", BASE, [("80", [87.9, 88.4, 87.4, 88.1, 87.7])])
    (row,) = candidate_rows([r])
    assert set(row) == set(CANDIDATE_COLUMNS)
    assert float(row["relative_delta"]) == pytest.approx(-0.121, abs=1e-4)
    assert row["validation"] == "pending" and row["value"] == "80" and row["location"] == "A.java:1"


def test_winning_value_is_largest_reduction():
    r = result("s1", "Numeric", BASE, [("80", [95.0, 95.5, 94.5, 95.2, 94.8]),
                                       ("1", [85.0, 85.5, 84.5, 85.2, 84.8]),
                                       ("2", [101.0, 101.5, 100.5, 101.2, 100.8])])
    (row,) = candidate_rows([r])
    assert row["value"] == "1"


def test_summary_counts_and_totals():
    rs = [
        result("n1", "Numeric", BASE, [("1", [85.0, 85.5, 84.5, 85.2, 84.8])], 1),
        result("n2", "Numeric", BASE, [("1", [100.0, 100.4, 99.6, 100.1, 99.9])], 2),
        result("b1", "Boolean", BASE, [("false", [90.0, 90.5, 89.5, 90.2, 89.8])], 3),
    ]
    rows = emit_summary(rs, {"n1": "validated", "b1": "rejected"})
    by = {r.type: r for r in rows}
    assert (by["Numeric"].P, by["Numeric"].R, by["Numeric"].V) == (2, 1, 1)
    assert (by["Boolean"].P, by["Boolean"].R, by["Boolean"].V) == (1, 1, 0)
    assert (by["Enum"].P, by["Enum"].R, by["Enum"].V) == (0, 0, 0)
    total = by["Total"]
    assert (total.P, total.R, total.V) == tuple(sum(getattr(by[t], k) for t in ("Numeric", "Boolean", "Enum"))
                                                for k in "PRV")
    with pytest.raises(ValueError):
        SummaryRow("Numeric", 1, 2, 0)


def test_empty_journal_gives_headers_only(tmp_path):
    (tmp_path / "journal.jsonl").write_text("")
    info = write_report(tmp_path / "journal.jsonl", tmp_path)
    assert info["candidates"] == 0
    assert (tmp_path / "candidates.csv").read_text() == ",".join(CANDIDATE_COLUMNS) + "\n"
    assert (tmp_path / "summary.csv").read_text() == "type,P,R,V\n"
    assert json.loads((tmp_path / "candidates.json").read_text()) == []


def test_unknown_validation_state_is_pending(tmp_path):
    p = tmp_path / "c.csv"
    p.write_text("site_id,validation\na,validated\nb,maybe\nc,REJECTED\n")
    assert read_validations(p) == {"a": "validated", "b": "pending", "c": "rejected"}


# ---- end-to-end through the CLI ----------------------------------------------


def test_campaign_flags_injected_effects(campaign_out):
    rows = read_csv(campaign_out / "candidates.csv")
    assert len(rows) == 3
    model = json.loads((FIXTURES / "app.model.json").read_text())
    assert {r["site_id"] for r in rows} == {e["site_id"] for e in model["effects"]}
    assert {r["type"] for r in rows} == {"Numeric", "Boolean", "Enum"}
    for r in rows:
        assert float(r["relative_delta"]) < -0.08 and float(r["p_value"]) < 0.05


def test_campaign_summary(campaign_out):
    summary = json.loads((campaign_out / "summary.json").read_text())
    by = {r["type"]: r for r in summary}
    assert by["Total"] == {"type": "Total", "P": 35, "R": 3, "V": 0}
    for r in summary:
        assert 0 <= r["V"] <= r["R"] <= r["P"]
    assert sum(by[t]["P"] for t in ("Numeric", "Boolean", "Enum")) == 35


def test_validation_round_trip(campaign_out, tmp_path):
    out = tmp_path / "o"
    shutil.copytree(campaign_out, out)
    rows = read_csv(out / "candidates.csv")
    rows[0]["validation"] = "validated"
    rows[1]["validation"] = "rejected"
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CANDIDATE_COLUMNS, lineterminator="\n")
    w.writeheader()
    w.writerows(rows)
    (out / "candidates.csv").write_text(buf.getvalue())
    assert cli("report", "--config", CAMPAIGN, "--out", out) == 0
    again = read_csv(out / "candidates.csv")
    assert [r["validation"] for r in again] == ["validated", "rejected", "pending"]
    total = [r for r in json.loads((out / "summary.json").read_text()) if r["type"] == "Total"][0]
    assert total["V"] == 1


def test_reruns_are_byte_identical(campaign_out, tmp_path):
    pipeline_into(tmp_path)
    for name in ("sites.jsonl", "kept_sites.jsonl", "plans.jsonl", "journal.jsonl", "candidates.csv",
                 "summary.csv", "series.json"):
        assert (tmp_path / name).read_bytes() == (campaign_out / name).read_bytes(), name


def test_analyze_and_calibrate(campaign_out, tmp_path):
    out = tmp_path / "o"
    shutil.copytree(campaign_out, out)
    assert cli("analyze", "--config", CAMPAIGN, "--out", out) == 0
    decisions = [json.loads(x) for x in (out / "decisions.jsonl").read_text().splitlines()]
    assert len(decisions) >= 35 and sum(d["verdict"] == "energy-reducing-candidate" for d in decisions) == 3

    assert cli("calibrate-ts", "--config", CAMPAIGN, "--out", out) == 0
    ts = json.loads((out / "ts_calibration.json").read_text())
    assert 0.0 < ts["suggested_t_s"] < 0.1

    assert cli("calibrate-td", "--config", CAMPAIGN, "--out", out) == 0
    td = json.loads((out / "td_calibration.json").read_text())
    assert 0.0 <= td["t_d"] <= 0.5
    assert len(td["persistent"]) >= 3


def test_calibrate_ts_without_journal_uses_simulator(tmp_path):
    assert cli("calibrate-ts", "--config", CAMPAIGN, "--out", tmp_path, "--blocks", 400) == 0
    ts = json.loads((tmp_path / "ts_calibration.json").read_text())
    assert ts["blocks"] == 400 and 0.02 < ts["suggested_t_s"] < 0.06


def test_simulate_writes_series(tmp_path):
    assert cli("simulate", "--config", CAMPAIGN, "--out", tmp_path, "--runs", 300) == 0
    rows = read_csv(tmp_path / "simulated_runs.csv")
    assert len(rows) == 300
    drift = [float(r["drift"]) for r in rows]
    assert max(drift) / min(drift) <= 1.14 + 1e-9


def test_dry_run(campaign_out, capsys):
    assert cli("run", "--config", CAMPAIGN, "--out", campaign_out, "--dry-run", "--build-seconds", 60,
               "--run-seconds", 22) == 0
    info = json.loads(capsys.readouterr().out)
    assert info["parameters"] == 35 and info["pipelined_makespan_s"] < info["serial_makespan_s"]


def test_seed_override_changes_enum_sampling(tmp_path):
    for step in ("scan", "filter"):
        assert cli(step, "--config", CAMPAIGN, "--out", tmp_path) == 0
    assert cli("plan", "--config", CAMPAIGN, "--out", tmp_path) == 0
    a = (tmp_path / "plans.jsonl").read_text()
    assert cli("plan", "--config", CAMPAIGN, "--out", tmp_path, "--seed", 12345) == 0
    b = (tmp_path / "plans.jsonl").read_text()
    assert a != b
    # numeric and boolean plans do not depend on the seed
    def values(text, enum):
        plans = [json.loads(line) for line in text.splitlines()]
        return [(p["site_id"], p["new_values"]) for p in plans if p["rule"].startswith("enum") == enum]

    assert values(a, False) == values(b, False)
    assert values(a, True) != values(b, True)


# ---- errors ---------------------------------------------------------------------


def test_unknown_flag_exits_2():
    with pytest.raises(SystemExit) as info:
        main(["scan", "--config", str(CAMPAIGN), "--bogus"])
    assert info.value.code == 2


def test_missing_step_input(tmp_path, capsys):
    assert cli("plan", "--config", CAMPAIGN, "--out", tmp_path) == 1
    assert "run `filter` first" in capsys.readouterr().err


@pytest.mark.parametrize("edit", [
    lambda c: c.pop("corpus"),
    lambda c: c.update(corpus="missing-dir"),
    lambda c: c.update(surprise=1),
    lambda c: c["experiment"].update(t_s=2),
    lambda c: c.update(measurer={"kind": "oscilloscope"}),
])
def test_bad_config(tmp_path, edit):
    cfg = json.loads(CAMPAIGN.read_text())
    edit(cfg)
    for k in ("corpus", "coverage", "annotations"):
        if k in cfg and cfg[k] != "missing-dir":
            cfg[k] = str(FIXTURES / cfg[k])
    cfg["measurer"].setdefault("model", str(FIXTURES / "app.model.json"))
    if "model" in cfg["measurer"] and not cfg["measurer"]["model"].startswith("/"):
        cfg["measurer"]["model"] = str(FIXTURES / cfg["measurer"]["model"])
    p = tmp_path / "c.json"
    p.write_text(json.dumps(cfg))
    with pytest.raises(ConfigError):
        RunConfig.load(p)
    assert cli("scan", "--config", p, "--out", tmp_path) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "paramprof", "scan", "--config", str(CAMPAIGN), "--out",
                           str(tmp_path)], capture_output=True, text=True)
    assert proc.returncode == 0, proc.stderr
    assert "68 sites" in proc.stdout
