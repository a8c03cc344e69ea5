"""Data types produced by the corpus scanner."""

from __future__ import annotations

import enum
import hashlib
import json
from dataclasses import dataclass, field
from typing import Any, Iterable, Mapping, Sequence, Union

LiteralValue = Union[int, float, bool, str]


class SyntaxContext(str, enum.Enum):
    """Syntactic position of a literal occurrence.

    The first eleven members are the negative patterns used by the heuristic
    filter; the remaining ones describe positions where deep parameters
    usually live and never cause a drop on their own.
    """

    ArrayIndex = "ArrayIndex"
    ComparisonWithZeroOrOne = "ComparisonWithZeroOrOne"
    PlusMinusSmall = "PlusMinusSmall"
    ForLoopInit = "ForLoopInit"
    IgnoredMethodArg = "IgnoredMethodArg"
    OneArgBoolCall = "OneArgBoolCall"
    TimeUnitArg = "TimeUnitArg"
    LocaleArg = "LocaleArg"
    Condition = "Condition"
    ReturnValue = "ReturnValue"
    MultiWriteInit = "MultiWriteInit"
    VariableInitializer = "VariableInitializer"
    CallArgument = "CallArgument"
    FieldAssignment = "FieldAssignment"
    Other = "Other"


class LiteralKind(str, enum.Enum):
    INT = "int"
    FLOAT = "float"
    BOOL = "bool"
    ENUM = "enum-ref"


@dataclass(frozen=True)
class Enclosure:
    """What directly consumes a literal: a variable write or a call argument."""

    kind: str  # "variable" | "call"
    name: str
    arg_index: int | None = None
    target: str | None = None  # resolved variable identity for writes

    def to_json(self) -> dict[str, Any]:
        out: dict[str, Any] = {"kind": self.kind, "name": self.name}
        if self.arg_index is not None:
            out["arg_index"] = self.arg_index
        if self.target is not None:
            out["target"] = self.target
        return out

    @classmethod
    def from_json(cls, obj: Mapping[str, Any] | None) -> Enclosure | None:
        if obj is None:
            return None
        return cls(obj["kind"], obj["name"], obj.get("arg_index"), obj.get("target"))


@dataclass(frozen=True)
class ConstantSite:
    id: str
    file: str
    span: tuple[int, int]
    line: int
    kind: LiteralKind
    raw_text: str
    value: LiteralValue
    radix: str | None = None
    contexts: frozenset[SyntaxContext] = field(default_factory=frozenset)
    enclosure: Enclosure | None = None
    enum_type: str | None = None

    @property
    def is_numeric(self) -> bool:
        return self.kind in (LiteralKind.INT, LiteralKind.FLOAT)

    @property
    def param_type(self) -> str:
        """Reporting bucket: Numeric, Boolean or Enum."""
        if self.is_numeric:
            return "Numeric"
        return "Boolean" if self.kind is LiteralKind.BOOL else "Enum"

    @property
    def location(self) -> str:
        return f"{self.file}:{self.line}"

    def to_json(self) -> dict[str, Any]:
        return {
            "id": self.id,
            "file": self.file,
            "span": [self.span[0], self.span[1]],
            "line": self.line,
            "kind": self.kind.value,
            "raw_text": self.raw_text,
            "value": self.value,
            "radix": self.radix,
            "contexts": sorted(c.value for c in self.contexts),
            "enclosure": self.enclosure.to_json() if self.enclosure else None,
            "enum_type": self.enum_type,
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> ConstantSite:
        kind = LiteralKind(obj["kind"])
        value = obj["value"]
        if kind is LiteralKind.FLOAT:
            value = float(value)
        return cls(
            id=obj["id"],
            file=obj["file"],
            span=(int(obj["span"][0]), int(obj["span"][1])),
            line=int(obj["line"]),
            kind=kind,
            raw_text=obj["raw_text"],
            value=value,
            radix=obj.get("radix"),
            contexts=frozenset(SyntaxContext(c) for c in obj.get("contexts", ())),
            enclosure=Enclosure.from_json(obj.get("enclosure")),
            enum_type=obj.get("enum_type"),
        )


def site_id(file: str, start: int, end: int, raw: str) -> str:
    digest = hashlib.blake2b(f"{file}\0{start}\0{end}\0{raw}".encode(), digest_size=8)
    return "c" + digest.hexdigest()


@dataclass(frozen=True)
class ScanError:
    file: str
    kind: str  # "read" | "parse"
    message: str

    def to_json(self) -> dict[str, Any]:
        return {"file": self.file, "kind": self.kind, "message": self.message}


@dataclass
class ScanResult:
    sites: list[ConstantSite]
    errors: list[ScanError] = field(default_factory=list)
    files: list[str] = field(default_factory=list)

    def __iter__(self):
        return iter(self.sites)

    def __len__(self) -> int:
        return len(self.sites)

    def by_id(self) -> dict[str, ConstantSite]:
        return {s.id: s for s in self.sites}


class EnumDomain(Mapping[str, tuple[str, ...]]):
    """Known enum types and their ordered variants.

    Types are keyed by a (possibly dotted) name such as ``TimeUnit`` or
    ``Bitmap.Config``; lookups accept any dotted suffix of the key.
    """

    def __init__(self, types: Mapping[str, Sequence[str]] | None = None):
        self._types: dict[str, tuple[str, ...]] = {}
        for name, variants in (types or {}).items():
            self.add(name, variants)

    def add(self, name: str, variants: Iterable[str]) -> None:
        vs = tuple(variants)
        if not vs:
            raise ValueError(f"enum {name!r} has no variants")
        if len(set(vs)) != len(vs):
            raise ValueError(f"enum {name!r} has duplicate variants")
        self._types[name] = vs

    def __getitem__(self, key: str) -> tuple[str, ...]:
        return self._types[key]

    def __iter__(self):
        return iter(self._types)

    def __len__(self) -> int:
        return len(self._types)

    def merged(self, other: Mapping[str, Sequence[str]]) -> EnumDomain:
        out = EnumDomain(self._types)
        for name, variants in other.items():
            out.add(name, variants)
        return out

    def resolve_qualified(self, qualifier: str, variant: str) -> str | None:
        """Type whose name matches ``qualifier`` on a dot boundary and owns ``variant``."""
        for name, variants in self._types.items():
            if variant not in variants:
                continue
            if name == qualifier or name.endswith("." + qualifier) or qualifier.endswith("." + name):
                return name
        return None

    def resolve_bare(self, variant: str) -> str | None:
        """Type owning ``variant`` when exactly one known type has it."""
        owners = [name for name, vs in self._types.items() if variant in vs]
        return owners[0] if len(owners) == 1 else None

    def to_json(self) -> dict[str, list[str]]:
        return {k: list(v) for k, v in sorted(self._types.items())}


def dump_sites(sites: Iterable[ConstantSite]) -> str:
    return "".join(json.dumps(s.to_json(), sort_keys=True) + "\n" for s in sites)


def load_sites(text: str) -> list[ConstantSite]:
    return [ConstantSite.from_json(json.loads(line)) for line in text.splitlines() if line.strip()]
