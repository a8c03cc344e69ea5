"""Corpus scanning: constant literal sites with syntactic context tags."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from paramprof.source_model.java import WriteRecord, analyze_java, declared_enums
from paramprof.source_model.lexer import SourceParseError
from paramprof.source_model.model import (
    ConstantSite,
    Enclosure,
    EnumDomain,
    LiteralKind,
    ScanError,
    ScanResult,
    SyntaxContext,
    dump_sites,
    load_sites,
    site_id,
)

__all__ = [
    "AdapterConfig",
    "BUILTIN_ENUMS",
    "ConstantSite",
    "Enclosure",
    "EnumDomain",
    "LiteralKind",
    "ScanError",
    "ScanResult",
    "SourceParseError",
    "SyntaxContext",
    "WriteRecord",
    "classify_context",
    "corpus_enum_domain",
    "detect_multi_write",
    "dump_sites",
    "load_sites",
    "scan_corpus",
    "scan_source",
]

BUILTIN_ENUMS: dict[str, tuple[str, ...]] = {
    "TimeUnit": (
        "NANOSECONDS",
        "MICROSECONDS",
        "MILLISECONDS",
        "SECONDS",
        "MINUTES",
        "HOURS",
        "DAYS",
    ),
    "Locale": (
        "ENGLISH", "FRENCH", "GERMAN", "ITALIAN", "JAPANESE", "KOREAN", "CHINESE",
        "SIMPLIFIED_CHINESE", "TRADITIONAL_CHINESE", "FRANCE", "GERMANY", "ITALY", "JAPAN",
        "KOREA", "CHINA", "PRC", "TAIWAN", "UK", "US", "CANADA", "CANADA_FRENCH", "ROOT",
    ),
    "Bitmap.Config": ("ALPHA_8", "RGB_565", "ARGB_4444", "ARGB_8888", "RGBA_F16", "HARDWARE"),
}


@dataclass(frozen=True)
class AdapterConfig:
    extensions: tuple[str, ...] = (".java",)
    ignored_methods: tuple[str, ...] = ("substring", "charAt", "indexOf", "split#1")
    time_unit_types: tuple[str, ...] = ("TimeUnit",)
    locale_types: tuple[str, ...] = ("Locale",)
    enums: Mapping[str, Sequence[str]] = field(default_factory=dict)
    builtin_enums: bool = True

    @classmethod
    def from_json(cls, obj: Mapping[str, Any] | None) -> AdapterConfig:
        obj = dict(obj or {})
        unknown = set(obj) - {
            "extensions", "ignored_methods", "time_unit_types", "locale_types", "enums", "builtin_enums",
        }
        if unknown:
            raise ValueError(f"unknown adapter settings: {sorted(unknown)}")
        kwargs: dict[str, Any] = {}
        for key in ("extensions", "ignored_methods", "time_unit_types", "locale_types"):
            if key in obj:
                kwargs[key] = tuple(obj[key])
        if "enums" in obj:
            kwargs["enums"] = {k: tuple(v) for k, v in obj["enums"].items()}
        if "builtin_enums" in obj:
            kwargs["builtin_enums"] = bool(obj["builtin_enums"])
        return cls(**kwargs)

    def to_json(self) -> dict[str, Any]:
        return {
            "extensions": list(self.extensions),
            "ignored_methods": list(self.ignored_methods),
            "time_unit_types": list(self.time_unit_types),
            "locale_types": list(self.locale_types),
            "enums": {k: list(v) for k, v in sorted(self.enums.items())},
            "builtin_enums": self.builtin_enums,
        }

    def base_domain(self) -> EnumDomain:
        domain = EnumDomain(BUILTIN_ENUMS if self.builtin_enums else {})
        return domain.merged(self.enums)


def detect_multi_write(writes: Iterable[WriteRecord]) -> frozenset[str]:
    """Variable identities assigned in two or more distinct statements."""
    statements: dict[str, set[int]] = {}
    for w in writes:
        statements.setdefault(w.identity, set()).add(w.statement)
    return frozenset(ident for ident, stmts in statements.items() if len(stmts) >= 2)


def scan_source(
    file: str,
    data: bytes,
    config: AdapterConfig | None = None,
    domain: EnumDomain | None = None,
) -> tuple[list[ConstantSite], list[WriteRecord]]:
    """Sites and variable writes of a single file.

    ``domain`` defaults to the config's enums plus any enums declared in
    ``data`` itself. Raises :class:`SourceParseError` on malformed input.
    """
    config = config or AdapterConfig()
    if domain is None:
        domain = config.base_domain().merged(declared_enums(data))
    analysis = analyze_java(
        data,
        domain,
        ignored_methods=config.ignored_methods,
        time_unit_types=config.time_unit_types,
        locale_types=config.locale_types,
    )
    multi = detect_multi_write(analysis.writes)
    sites = []
    for lit in sorted(analysis.literals, key=lambda l: l.start):
        tags = set(lit.contexts)
        if lit.write_target is not None and lit.write_target in multi:
            tags.add(SyntaxContext.MultiWriteInit)
        if not tags:
            tags.add(SyntaxContext.Other)
        raw = data[lit.start:lit.end].decode("utf-8")
        sites.append(
            ConstantSite(
                id=site_id(file, lit.start, lit.end, raw),
                file=file,
                span=(lit.start, lit.end),
                line=lit.line,
                kind=lit.kind,
                raw_text=raw,
                value=lit.value,  # type: ignore[arg-type]
                radix=lit.radix,
                contexts=frozenset(tags),
                enclosure=lit.enclosure,
                enum_type=lit.enum_type,
            )
        )
    return sites, analysis.writes


def classify_context(site: ConstantSite, data: bytes, config: AdapterConfig | None = None,
                     domain: EnumDomain | None = None) -> frozenset[SyntaxContext]:
    """Context tags of ``site`` recomputed from the file bytes it came from."""
    if data[site.span[0]:site.span[1]] != site.raw_text.encode():
        raise ValueError(f"site {site.id} does not match the given bytes")
    sites, _ = scan_source(site.file, data, config, domain)
    for s in sites:
        if s.span == site.span:
            return s.contexts
    return frozenset({SyntaxContext.Other})


def _source_files(root: Path, extensions: Sequence[str]) -> list[str]:
    files = []
    for dirpath, dirnames, filenames in os.walk(root):
        dirnames.sort()
        for name in filenames:
            if name.endswith(tuple(extensions)):
                files.append(Path(dirpath, name).relative_to(root).as_posix())
    return sorted(files)


def _enums_job(args: tuple[str, str]) -> tuple[str, dict | None, ScanError | None]:
    root, rel = args
    try:
        data = Path(root, rel).read_bytes()
    except OSError as exc:
        return rel, None, ScanError(rel, "read", str(exc))
    try:
        return rel, declared_enums(data), None
    except SourceParseError as exc:
        return rel, None, ScanError(rel, "parse", str(exc))


def _scan_job(args: tuple[str, str, AdapterConfig, EnumDomain]) -> tuple[list[ConstantSite], ScanError | None]:
    root, rel, config, domain = args
    try:
        data = Path(root, rel).read_bytes()
    except OSError as exc:
        return [], ScanError(rel, "read", str(exc))
    try:
        sites, _ = scan_source(rel, data, config, domain)
    except (SourceParseError, ValueError) as exc:
        return [], ScanError(rel, "parse", str(exc))
    return sites, None


def _corpus_enums(root: Path, files, config: AdapterConfig, run) -> tuple[EnumDomain, dict[str, ScanError]]:
    domain = config.base_domain()
    errors: dict[str, ScanError] = {}
    for rel, enums, err in run(_enums_job, [(str(root), f) for f in files]):
        if err is not None:
            errors[rel] = err
        elif enums:
            domain = domain.merged(enums)
    return domain, errors


def corpus_enum_domain(root: str | os.PathLike, config: AdapterConfig | None = None) -> EnumDomain:
    """Configured and built-in enums plus every enum declared under ``root``."""
    config = config or AdapterConfig()
    root = Path(root)
    domain, _ = _corpus_enums(root, _source_files(root, config.extensions), config, lambda fn, jobs: map(fn, jobs))
    return domain


def scan_corpus(root: str | os.PathLike, config: AdapterConfig | None = None, workers: int = 1) -> ScanResult:
    """Every constant literal under ``root``, ordered by (file, span start).

    Files that cannot be read or parsed are reported in ``errors`` and skipped.
    """
    config = config or AdapterConfig()
    root = Path(root)
    if not root.is_dir():
        raise FileNotFoundError(f"corpus root {root} is not a directory")
    files = _source_files(root, config.extensions)

    def run(fn, jobs):
        if workers > 1 and len(jobs) > 1:
            with ProcessPoolExecutor(max_workers=workers) as pool:
                return list(pool.map(fn, jobs))
        return [fn(j) for j in jobs]

    domain, errors = _corpus_enums(root, files, config, run)

    good = [f for f in files if f not in errors]
    sites: list[ConstantSite] = []
    for (file_sites, err), rel in zip(run(_scan_job, [(str(root), f, config, domain) for f in good]), good):
        if err is not None:
            errors[rel] = err
        sites.extend(file_sites)
    sites.sort(key=lambda s: (s.file, s.span[0]))
    return ScanResult(sites=sites, errors=[errors[f] for f in sorted(errors)], files=files)
