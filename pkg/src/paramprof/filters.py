"""Narrow scanned constants down to candidate deep parameters.

Three stages run independently over the scan and are intersected: line
coverage from the measured usage scenario, negative syntactic patterns, and
a reviewed annotation overlay.
"""

from __future__ import annotations

import json
import posixpath
from collections import Counter
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence

from paramprof.source_model import ConstantSite, LiteralKind, SyntaxContext

SC = SyntaxContext

NUMERIC_RULES = (SC.ArrayIndex, SC.ComparisonWithZeroOrOne, SC.PlusMinusSmall, SC.ForLoopInit, SC.IgnoredMethodArg)
BOOL_RULES = (SC.OneArgBoolCall,)
ENUM_RULES = (SC.TimeUnitArg, SC.LocaleArg)
COMMON_RULES = (SC.Condition, SC.ReturnValue, SC.MultiWriteInit)

# Attribution order for the reason field; matching is order-free.
RULE_ORDER = NUMERIC_RULES + BOOL_RULES + ENUM_RULES + COMMON_RULES

KEPT = "kept"
DROPPED = "dropped"
KEPT_REASON = "kept-candidate"


class CoverageFormatError(ValueError):
    def __init__(self, lineno: int, text: str, why: str):
        super().__init__(f"coverage report line {lineno}: {why}: {text!r}")
        self.lineno = lineno
        self.text = text


class AnnotationError(ValueError):
    pass


def normalize_path(path: str) -> str:
    p = path.strip().replace("\\", "/")
    norm = posixpath.normpath(p)
    if norm.startswith("./"):
        norm = norm[2:]
    if ".." in norm.split("/"):
        raise ValueError(f"path escapes its root: {path!r}")
    return norm


class CoverageMap:
    """Covered 1-based line numbers per file.

    Lookups match exact paths first and then fall back to a unique
    component-wise suffix match, so reports written with absolute or
    package-relative paths still line up with corpus-relative site paths.
    """

    def __init__(self, lines: Mapping[str, Iterable[int]] | None = None):
        self.lines: dict[str, frozenset[int]] = {}
        for path, nums in (lines or {}).items():
            nums = frozenset(nums)
            if any(n < 1 for n in nums):
                raise ValueError(f"non-positive line number for {path}")
            if nums:
                self.lines[normalize_path(path)] = nums
        self._resolved: dict[str, str | None] = {}

    def __eq__(self, other: object) -> bool:
        if isinstance(other, CoverageMap):
            return self.lines == other.lines
        if isinstance(other, Mapping):
            return self.lines == {k: frozenset(v) for k, v in other.items()}
        return NotImplemented

    def __repr__(self) -> str:
        return f"CoverageMap({ {k: sorted(v) for k, v in self.lines.items()} })"

    def __len__(self) -> int:
        return len(self.lines)

    def _key_for(self, file: str) -> str | None:
        if file in self.lines:
            return file
        if file not in self._resolved:
            hits = [
                k for k in self.lines
                if k.endswith("/" + file) or file.endswith("/" + k)
            ]
            self._resolved[file] = hits[0] if len(hits) == 1 else None
        return self._resolved[file]

    def covered(self, file: str, line: int) -> bool:
        key = self._key_for(file)
        return key is not None and line in self.lines[key]


def parse_coverage(report: bytes | str) -> CoverageMap:
    """Parse an LCOV line-record report, or the simple ``path:line`` format.

    Only ``(file, line)`` pairs with a positive hit count are kept.
    """
    text = report.decode("utf-8") if isinstance(report, bytes) else report
    lines = text.splitlines()
    lcov = any(
        ln.startswith(("SF:", "TN:", "DA:", "end_of_record")) for ln in (l.strip() for l in lines)
    )
    covered: dict[str, set[int]] = {}
    if not lcov:
        for no, raw in enumerate(lines, 1):
            ln = raw.strip()
            if not ln or ln.startswith("#"):
                continue
            path, sep, num = ln.rpartition(":")
            if not sep or not path or not num.isdigit() or int(num) < 1:
                raise CoverageFormatError(no, raw, "expected path:line")
            covered.setdefault(_norm(path, no, raw), set()).add(int(num))
        return CoverageMap(covered)

    current: str | None = None
    for no, raw in enumerate(lines, 1):
        ln = raw.strip()
        if not ln:
            continue
        tag, _, rest = ln.partition(":")
        if ln == "end_of_record":
            current = None
        elif tag == "SF":
            if not rest:
                raise CoverageFormatError(no, raw, "empty source file path")
            current = _norm(rest, no, raw)
        elif tag == "DA":
            if current is None:
                raise CoverageFormatError(no, raw, "DA record outside an SF section")
            fields = rest.split(",")
            if len(fields) < 2 or not fields[0].isdigit():
                raise CoverageFormatError(no, raw, "expected DA:<line>,<count>")
            try:
                count = int(fields[1])
            except ValueError:
                raise CoverageFormatError(no, raw, "non-integer execution count") from None
            line_no = int(fields[0])
            if line_no < 1 or count < 0:
                raise CoverageFormatError(no, raw, "line and count must be positive")
            if count > 0:
                covered.setdefault(current, set()).add(line_no)
        elif tag in ("TN", "FN", "FNDA", "FNF", "FNH", "LF", "LH", "BRDA", "BRF", "BRH", "VER", "FNL", "FNA"):
            continue
        else:
            raise CoverageFormatError(no, raw, "unknown record")
    return CoverageMap(covered)


def _norm(path: str, no: int, raw: str) -> str:
    try:
        return normalize_path(path)
    except ValueError as exc:
        raise CoverageFormatError(no, raw, str(exc)) from None


@dataclass(frozen=True)
class FilterDecision:
    site_id: str
    verdict: str
    reason: str

    @property
    def kept(self) -> bool:
        return self.verdict == KEPT

    def to_json(self) -> dict[str, str]:
        return {"site_id": self.site_id, "verdict": self.verdict, "reason": self.reason}

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> FilterDecision:
        return cls(obj["site_id"], obj["verdict"], obj["reason"])


def _kept(site_id: str) -> FilterDecision:
    return FilterDecision(site_id, KEPT, KEPT_REASON)


def coverage_filter(sites: Iterable[ConstantSite], cov: CoverageMap | None) -> list[FilterDecision]:
    """Drop sites on lines the scenario never executed. ``cov=None`` passes everything."""
    out = []
    for site in sites:
        if cov is None or cov.covered(site.file, site.line):
            out.append(_kept(site.id))
        else:
            out.append(FilterDecision(site.id, DROPPED, "uncovered"))
    return out


def applicable_rules(kind: LiteralKind) -> tuple[SyntaxContext, ...]:
    if kind in (LiteralKind.INT, LiteralKind.FLOAT):
        specific = NUMERIC_RULES
    elif kind is LiteralKind.BOOL:
        specific = BOOL_RULES
    else:
        specific = ENUM_RULES
    return tuple(r for r in RULE_ORDER if r in specific or r in COMMON_RULES)


def matching_rule(site: ConstantSite) -> SyntaxContext | None:
    for rule in applicable_rules(site.kind):
        if rule in site.contexts:
            return rule
    return None


def heuristic_filter(sites: Iterable[ConstantSite]) -> list[FilterDecision]:
    out = []
    for site in sites:
        rule = matching_rule(site)
        if rule is None:
            out.append(_kept(site.id))
        else:
            out.append(FilterDecision(site.id, DROPPED, f"heuristic:{rule.value}"))
    return out


@dataclass(frozen=True)
class Annotation:
    site_id: str
    verdict: str
    note: str = ""


def parse_annotations(text: str) -> list[Annotation]:
    out = []
    for no, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
            ann = Annotation(obj["site_id"], obj["verdict"], obj.get("note", ""))
        except (ValueError, KeyError, TypeError) as exc:
            raise AnnotationError(f"annotation line {no}: {exc}") from None
        if ann.verdict not in (KEPT, DROPPED):
            raise AnnotationError(f"annotation line {no}: verdict must be kept or dropped")
        out.append(ann)
    return out


def dump_annotations(annotations: Iterable[Annotation]) -> str:
    return "".join(
        json.dumps({"site_id": a.site_id, "verdict": a.verdict, "note": a.note}, sort_keys=True) + "\n"
        for a in annotations
    )


def apply_annotations(
    decisions: Sequence[FilterDecision],
    annotations: Iterable[Annotation],
    *,
    force: bool = False,
) -> list[FilterDecision]:
    """Overlay manual verdicts on automatic decisions.

    Only kept candidates are overridden; an automatically dropped site stays
    dropped unless ``force`` is set.
    """
    known = {d.site_id for d in decisions}
    by_site: dict[str, Annotation] = {}
    for ann in annotations:
        if ann.site_id not in known:
            raise AnnotationError(f"annotation for unknown site {ann.site_id}")
        prior = by_site.get(ann.site_id)
        if prior is not None and prior.verdict != ann.verdict:
            raise AnnotationError(f"conflicting annotations for site {ann.site_id}")
        by_site.setdefault(ann.site_id, ann)
    out = []
    for d in decisions:
        ann = by_site.get(d.site_id)
        if ann is None or (not d.kept and not force):
            out.append(d)
        else:
            out.append(FilterDecision(d.site_id, ann.verdict, f"manual:{ann.note}"))
    return out


@dataclass
class PipelineResult:
    candidates: list[ConstantSite]
    decisions: list[FilterDecision]
    stage_drops: dict[str, int]
    coverage_only_kept: int
    heuristic_only_kept: int
    combined_kept: int
    breakdown: dict[str, dict[str, int]] = field(default_factory=dict)

    @property
    def candidate_ids(self) -> list[str]:
        return [s.id for s in self.candidates]

    def summary(self) -> dict[str, Any]:
        return {
            "scanned": len(self.decisions),
            "stage_drops": dict(self.stage_drops),
            "coverage_only_kept": self.coverage_only_kept,
            "heuristic_only_kept": self.heuristic_only_kept,
            "combined_kept": self.combined_kept,
            "candidates": len(self.candidates),
            "breakdown": self.breakdown,
        }


def pipeline(
    sites: Sequence[ConstantSite],
    cov: CoverageMap | None,
    annotations: Iterable[Annotation] = (),
    *,
    force: bool = False,
) -> PipelineResult:
    """Candidates kept by coverage, heuristics and annotations.

    Each site gets exactly one final decision; its reason names the first
    stage that dropped it (coverage, then heuristics, then manual).
    """
    cov_d = coverage_filter(sites, cov)
    heur_d = heuristic_filter(sites)
    auto = [c if not c.kept else h for c, h in zip(cov_d, heur_d)]
    final = apply_annotations(auto, annotations, force=force)

    cov_kept = {d.site_id for d in cov_d if d.kept}
    heur_kept = {d.site_id for d in heur_d if d.kept}
    combined = cov_kept & heur_kept
    drops = Counter()
    for c, h, f in zip(cov_d, heur_d, final):
        if not f.kept:
            if f.reason.startswith("manual:"):
                drops["manual"] += 1
            elif not c.kept:
                drops["coverage"] += 1
            else:
                drops["heuristic"] += 1
    kept_ids = {d.site_id for d in final if d.kept}

    breakdown: dict[str, dict[str, int]] = {}
    for site, c, h in zip(sites, cov_d, heur_d):
        row = breakdown.setdefault(site.param_type, {"none": 0, "coverage": 0, "heuristic": 0, "combined": 0})
        row["none"] += 1
        row["coverage"] += c.kept
        row["heuristic"] += h.kept
        row["combined"] += c.kept and h.kept

    return PipelineResult(
        candidates=[s for s in sites if s.id in kept_ids],
        decisions=final,
        stage_drops={k: drops.get(k, 0) for k in ("coverage", "heuristic", "manual")},
        coverage_only_kept=len(cov_kept),
        heuristic_only_kept=len(heur_kept),
        combined_kept=len(combined),
        breakdown=breakdown,
    )


def dump_decisions(decisions: Iterable[FilterDecision]) -> str:
    return "".join(json.dumps(d.to_json(), sort_keys=True) + "\n" for d in decisions)
