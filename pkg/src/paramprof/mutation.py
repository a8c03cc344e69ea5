"""Replacement values for candidate parameters and byte-exact source splicing."""

from __future__ import annotations

import contextlib
import hashlib
import json
import math
import random
import re
import shutil
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Any, Iterator, Mapping, Sequence

from paramprof.source_model import ConstantSite, EnumDomain, LiteralKind
from paramprof.source_model.lexer import float_suffix, is_long_literal, parse_float_literal, parse_int_literal

INT_MAX = 2**31 - 1
LONG_MAX = 2**63 - 1
_IDENT = re.compile(r"[A-Za-z_$][A-Za-z0-9_$]*\Z")


class PlanError(ValueError):
    pass


class StaleSpanError(ValueError):
    pass


@dataclass(frozen=True)
class MutationPolicy:
    factor: int = 8
    zero_int_specials: tuple[str, ...] = ("0xffffff", "255", "8")
    enum_choices: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        if self.factor < 2:
            raise ValueError("factor must be at least 2")
        if self.enum_choices < 1:
            raise ValueError("enum_choices must be at least 1")

    @classmethod
    def from_json(cls, obj: Mapping[str, Any] | None) -> MutationPolicy:
        obj = dict(obj or {})
        if "zero_int_specials" in obj:
            obj["zero_int_specials"] = tuple(obj["zero_int_specials"])
        return cls(**obj)

    def to_json(self) -> dict[str, Any]:
        d = asdict(self)
        d["zero_int_specials"] = list(self.zero_int_specials)
        return d


@dataclass(frozen=True)
class MutationPlan:
    site_id: str
    original_raw: str
    new_values: tuple[str, ...]
    rule: str
    policy_used: MutationPolicy = field(default_factory=MutationPolicy)
    extrapolated: bool = False
    diagnostics: tuple[str, ...] = ()

    def to_json(self) -> dict[str, Any]:
        return {
            "site_id": self.site_id,
            "original": self.original_raw,
            "new_values": list(self.new_values),
            "rule": self.rule,
            "extrapolated": self.extrapolated,
            "diagnostics": list(self.diagnostics),
            "policy": self.policy_used.to_json(),
        }

    @classmethod
    def from_json(cls, obj: Mapping[str, Any]) -> MutationPlan:
        return cls(
            site_id=obj["site_id"],
            original_raw=obj["original"],
            new_values=tuple(obj["new_values"]),
            rule=obj["rule"],
            policy_used=MutationPolicy.from_json(obj.get("policy")),
            extrapolated=bool(obj.get("extrapolated", False)),
            diagnostics=tuple(obj.get("diagnostics", ())),
        )


# ---- literal formatting -----------------------------------------------


def format_int(value: int, radix: str | None, raw: str) -> str:
    """Render ``value`` in the radix and suffix style of ``raw``."""
    suffix = raw[-1] if raw[-1:] in ("l", "L") else ""
    sign = "-" if value < 0 else ""
    mag = abs(value)
    body = raw.lstrip("-")
    if radix == "hex":
        digits = format(mag, "x")
        if any(c in "ABCDEF" for c in body[2:]):
            digits = digits.upper()
        text = body[:2] + digits
    elif radix == "bin":
        text = body[:2] + format(mag, "b")
    elif radix == "oct":
        text = "0" + format(mag, "o") if mag else "0"
    else:
        text = str(mag)
    return sign + text + suffix


def format_float(value: float, raw: str) -> str:
    """Shortest decimal that parses back to exactly ``value``, with ``raw``'s suffix."""
    if not math.isfinite(value):
        raise PlanError(f"cannot emit non-finite float {value}")
    return repr(value) + float_suffix(raw)


def literal_parses(text: str, kind: LiteralKind) -> bool:
    try:
        if kind is LiteralKind.INT:
            parse_int_literal(text)
        elif kind is LiteralKind.FLOAT:
            v = parse_float_literal(text)
            return math.isfinite(v)
        elif kind is LiteralKind.BOOL:
            return text in ("true", "false")
        else:
            return bool(_IDENT.match(text))
    except ValueError:
        return False
    return True


# ---- planning -----------------------------------------------------------


def plan_numeric(site: ConstantSite, policy: MutationPolicy | None = None) -> MutationPlan:
    """Values on both sides of the original, scaled by ``policy.factor``.

    Negative originals follow the rule for their magnitude with the sign kept;
    such plans are marked ``extrapolated``.
    """
    policy = policy or MutationPolicy()
    f = policy.factor
    diags: list[str] = []
    if site.kind is LiteralKind.INT:
        x = int(site.value)
        negative = x < 0
        mag = -x if negative else x
        limit = LONG_MAX if is_long_literal(site.raw_text) else INT_MAX
        if mag == 0:
            values = [s + ("L" if is_long_literal(site.raw_text) and not s.endswith(("l", "L")) else "")
                      for s in policy.zero_int_specials]
            rule = "int-zero"
            negative = False
        else:
            if mag == 1:
                mags, rule = [f, 0], "int-one"
            else:
                mags, rule = [mag * f, max(mag // f, 1)], "int-gt-one"
            values = []
            for m in mags:
                if m > limit:
                    diags.append(f"skipped {m}: exceeds {'long' if limit == LONG_MAX else 'int'} range")
                    continue
                values.append(format_int(-m if negative and m else m, site.radix, site.raw_text))
    elif site.kind is LiteralKind.FLOAT:
        x = float(site.value)
        if not math.isfinite(x):
            raise PlanError(f"site {site.id}: non-finite original {site.raw_text!r}")
        negative = x < 0
        mag = -x if negative else x
        if mag == 0.0:
            raw_vals, rule = [0.5, 1.0], "float-zero"
        elif mag < 1.0:
            raw_vals, rule = [1.0 - (1.0 - mag) / f, mag / f], "float-unit-interval"
        else:
            raw_vals, rule = [mag * f, mag / f], "float-ge-one"
        values = []
        for v in raw_vals:
            if not math.isfinite(v):
                diags.append(f"skipped {v}: overflow")
                continue
            if rule == "float-unit-interval" and not 0.0 < v < 1.0:
                diags.append(f"skipped {v!r}: rounding left the open unit interval")
                continue
            values.append(format_float(-v if negative else v, site.raw_text))
    else:
        raise PlanError(f"site {site.id} is not numeric")

    if negative:
        rule += "-negative-mirror"
    kept = []
    for v in values:
        if v == site.raw_text or v in kept:
            diags.append(f"skipped {v}: duplicates an existing value")
        else:
            kept.append(v)
    if not kept:
        raise PlanError(f"site {site.id}: no usable replacement values ({'; '.join(diags)})")
    return MutationPlan(site.id, site.raw_text, tuple(kept), rule, policy, negative, tuple(diags))


def plan_boolean(site: ConstantSite, policy: MutationPolicy | None = None) -> MutationPlan:
    if site.kind is not LiteralKind.BOOL:
        raise PlanError(f"site {site.id} is not boolean")
    flipped = "false" if site.value else "true"
    return MutationPlan(site.id, site.raw_text, (flipped,), "bool-invert", policy or MutationPolicy())


def _site_rng(policy: MutationPolicy, site_id: str) -> random.Random:
    digest = hashlib.sha256(f"{policy.rng_seed}:{site_id}".encode()).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def plan_enum(site: ConstantSite, domain: EnumDomain, policy: MutationPolicy | None = None) -> MutationPlan:
    """Up to ``enum_choices`` other variants, sampled without replacement.

    The sample depends only on the policy seed and the site id, so plans are
    stable regardless of the order sites are planned in.
    """
    policy = policy or MutationPolicy()
    if site.kind is not LiteralKind.ENUM:
        raise PlanError(f"site {site.id} is not an enum reference")
    if site.enum_type is None or site.enum_type not in domain:
        raise PlanError(f"site {site.id}: unknown enum type {site.enum_type!r}")
    others = [v for v in domain[site.enum_type] if v != site.value]
    if not others:
        raise PlanError(f"site {site.id}: enum {site.enum_type} has a single variant")
    k = min(policy.enum_choices, len(others))
    picks = _site_rng(policy, site.id).sample(others, k)
    return MutationPlan(site.id, site.raw_text, tuple(picks), "enum-sample", policy)


def plan_site(site: ConstantSite, domain: EnumDomain | None = None, policy: MutationPolicy | None = None) -> MutationPlan:
    if site.is_numeric:
        return plan_numeric(site, policy)
    if site.kind is LiteralKind.BOOL:
        return plan_boolean(site, policy)
    return plan_enum(site, domain or EnumDomain(), policy)


def plan_all(
    sites: Sequence[ConstantSite], domain: EnumDomain | None = None, policy: MutationPolicy | None = None
) -> tuple[list[MutationPlan], dict[str, str]]:
    """Plans for every site plus an error message per site that has none."""
    plans, errors = [], {}
    for site in sites:
        try:
            plans.append(plan_site(site, domain, policy))
        except PlanError as exc:
            errors[site.id] = str(exc)
    return plans, errors


def dump_plans(plans: Sequence[MutationPlan]) -> str:
    return "".join(json.dumps(p.to_json(), sort_keys=True) + "\n" for p in plans)


# ---- rewriting ----------------------------------------------------------


def apply_mutation(file_bytes: bytes, site: ConstantSite, new_literal: str) -> tuple[bytes, int]:
    """Splice ``new_literal`` over the site's span.

    Returns the new bytes and the length of the replaced span. Raises
    :class:`StaleSpanError` if the file no longer holds the scanned literal.
    """
    start, end = site.span
    if file_bytes[start:end] != site.raw_text.encode():
        raise StaleSpanError(
            f"{site.file}:{site.line}: expected {site.raw_text!r} at [{start},{end}), "
            f"found {file_bytes[start:end]!r}"
        )
    if not literal_parses(new_literal, site.kind):
        raise PlanError(f"{new_literal!r} is not a valid {site.kind.value} literal")
    new = new_literal.encode()
    return file_bytes[:start] + new + file_bytes[end:], len(new)


def revert_mutation(mutated: bytes, site: ConstantSite, new_literal: str) -> bytes:
    start = site.span[0]
    new = new_literal.encode()
    if mutated[start:start + len(new)] != new:
        raise StaleSpanError(f"{site.file}:{site.line}: mutated literal {new_literal!r} not found")
    return mutated[:start] + site.raw_text.encode() + mutated[start + len(new):]


def materialize_variant(corpus_root: str | Path, dest: str | Path, site: ConstantSite, new_literal: str) -> Path:
    """Copy the corpus to ``dest`` with one literal replaced."""
    dest = Path(dest)
    if dest.exists():
        shutil.rmtree(dest)
    shutil.copytree(corpus_root, dest)
    target = dest / site.file
    data, _ = apply_mutation(target.read_bytes(), site, new_literal)
    target.write_bytes(data)
    return dest


@contextlib.contextmanager
def mutated_in_place(corpus_root: str | Path, site: ConstantSite, new_literal: str) -> Iterator[Path]:
    """Edit the working tree for the duration of the block, then restore it."""
    path = Path(corpus_root) / site.file
    original = path.read_bytes()
    data, _ = apply_mutation(original, site, new_literal)
    path.write_bytes(data)
    try:
        yield Path(corpus_root)
    finally:
        path.write_bytes(original)
