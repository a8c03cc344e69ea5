"""Candidate lists, per-type summaries and the manual validation worklist."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from paramprof.orchestrator import Journal, ParameterResult
from paramprof.stats import TestDecision

log = logging.getLogger(__name__)

CANDIDATE_COLUMNS = (
    "site_id",
    "location",
    "type",
    "original",
    "value",
    "baseline_mean",
    "variant_mean",
    "relative_delta",
    "p_value",
    "validation",
)
VALIDATION_STATES = ("pending", "validated", "rejected")
PARAM_TYPES = ("Numeric", "Boolean", "Enum")


def _num(x: float | None) -> str:
    if x is None or (isinstance(x, float) and math.isnan(x)):
        return ""
    return format(x, ".6g")


def load_results(journal_path: str | os.PathLike) -> tuple[list[ParameterResult], int]:
    """Journal records in a stable order plus the number of unreadable lines."""
    contents = Journal.read(journal_path)
    results = sorted(contents.results.values(), key=lambda r: (r.site["file"], r.site["line"], r.site_id))
    return results, contents.skipped


def winning_decision(result: ParameterResult) -> TestDecision | None:
    """The flagged value with the largest reduction; ties go to the earlier value."""
    flagged = result.flagged
    if not flagged:
        return None
    return min(flagged, key=lambda d: (d.relative_delta, d.value_index))


def candidate_rows(
    results: Iterable[ParameterResult], validations: Mapping[str, str] | None = None
) -> list[dict[str, str]]:
    validations = validations or {}
    rows = []
    for r in results:
        d = winning_decision(r)
        if d is None:
            continue
        literal = next(v.literal for v in r.values if v.value_index == d.value_index)
        rows.append(
            {
                "site_id": r.site_id,
                "location": f"{r.site['file']}:{r.site['line']}",
                "type": r.site["type"],
                "original": r.original,
                "value": literal,
                "baseline_mean": _num(d.baseline_mean),
                "variant_mean": _num(d.variant_mean),
                "relative_delta": _num(d.relative_delta),
                "p_value": _num(d.result.p_value if d.result else None),
                "validation": validations.get(r.site_id, "pending"),
            }
        )
    rows.sort(key=lambda row: (row["location"].rsplit(":", 1)[0], int(row["location"].rsplit(":", 1)[1]),
                               row["site_id"]))
    return rows


def read_validations(path: str | os.PathLike) -> dict[str, str]:
    """Human verdicts from a previously emitted candidates CSV."""
    p = Path(path)
    if not p.exists():
        return {}
    out = {}
    with open(p, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            state = (row.get("validation") or "pending").strip().lower()
            if state not in VALIDATION_STATES:
                log.warning("unknown validation %r for %s; treating as pending", state, row.get("site_id"))
                state = "pending"
            if row.get("site_id"):
                out[row["site_id"]] = state
    return out


def candidates_csv(rows: Sequence[Mapping[str, str]]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=CANDIDATE_COLUMNS, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def candidates_json(rows: Sequence[Mapping[str, str]]) -> str:
    def typed(row):
        out = dict(row)
        for k in ("baseline_mean", "variant_mean", "relative_delta", "p_value"):
            out[k] = float(row[k]) if row[k] != "" else None
        return out

    return json.dumps([typed(r) for r in rows], indent=2, sort_keys=True) + "\n"


def emit_candidates(
    results: Iterable[ParameterResult], out_dir: str | os.PathLike, *, previous: str | os.PathLike | None = None
) -> list[dict[str, str]]:
    """Write candidates.csv and candidates.json, keeping verdicts found in ``previous``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    validations = read_validations(previous if previous is not None else out / "candidates.csv")
    rows = candidate_rows(results, validations)
    (out / "candidates.csv").write_text(candidates_csv(rows), encoding="utf-8")
    (out / "candidates.json").write_text(candidates_json(rows), encoding="utf-8")
    return rows


@dataclass(frozen=True)
class SummaryRow:
    type: str
    P: int
    R: int
    V: int

    def __post_init__(self):
        if not 0 <= self.V <= self.R <= self.P:
            raise ValueError(f"summary row violates V <= R <= P: {self}")

    def to_json(self) -> dict[str, Any]:
        return {"type": self.type, "P": self.P, "R": self.R, "V": self.V}


def emit_summary(results: Iterable[ParameterResult], validations: Mapping[str, str] | None = None) -> list[SummaryRow]:
    """P/R/V per parameter type followed by a Total row; empty when nothing was tested."""
    validations = validations or {}
    counts = {t: [0, 0, 0] for t in PARAM_TYPES}
    for r in results:
        c = counts.setdefault(r.site["type"], [0, 0, 0])
        c[0] += 1
        if r.flagged:
            c[1] += 1
            if validations.get(r.site_id) == "validated":
                c[2] += 1
    if not any(c[0] for c in counts.values()):
        return []
    rows = [SummaryRow(t, *counts[t]) for t in counts]
    rows.append(SummaryRow("Total", *(sum(c[i] for c in counts.values()) for i in range(3))))
    return rows


def summary_csv(rows: Sequence[SummaryRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["type", "P", "R", "V"])
    for r in rows:
        w.writerow([r.type, r.P, r.R, r.V])
    return buf.getvalue()


def series(results: Iterable[ParameterResult]) -> dict[str, Any]:
    """Numbers behind the usual plots: baseline energy over time and block σ/μ values."""
    baselines: dict[str, list[list[float]]] = {}
    nsd = []
    for r in results:
        for b in r.all_blocks():
            if math.isfinite(b.norm_sd):
                nsd.append(b.norm_sd)
            if b.variant.is_baseline:
                baselines.setdefault(r.device, []).extend([[m.timestamp, m.energy] for m in b.runs])
    for pts in baselines.values():
        pts.sort()
    return {"baseline_runs": dict(sorted(baselines.items())), "block_norm_sd": sorted(nsd)}


def write_report(
    journal_path: str | os.PathLike, out_dir: str | os.PathLike, *, previous: str | os.PathLike | None = None
) -> dict[str, Any]:
    results, skipped = load_results(journal_path)
    out = Path(out_dir)
    rows = emit_candidates(results, out, previous=previous)
    validations = {r["site_id"]: r["validation"] for r in rows}
    summary = emit_summary(results, validations)
    (out / "summary.csv").write_text(summary_csv(summary), encoding="utf-8")
    (out / "summary.json").write_text(
        json.dumps([s.to_json() for s in summary], indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    (out / "series.json").write_text(json.dumps(series(results), sort_keys=True) + "\n", encoding="utf-8")
    if skipped:
        log.warning("skipped %d unreadable journal records", skipped)
    return {"candidates": len(rows), "parameters": len(results), "skipped_records": skipped,
            "summary": [s.to_json() for s in summary]}
