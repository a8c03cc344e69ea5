"""Built-in syntax adapter for a Java-like grammar subset.

The adapter works on the bracket tree from :mod:`lexer`. It splits bodies into
statements, recognises declarations, assignments, calls, array accesses and
control-flow headers, and attaches :class:`SyntaxContext` tags to each literal
as it is found. It is deliberately not a full parser: anything it does not
recognise is walked as a plain expression and tagged ``Other``.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field
from typing import Iterator, Sequence

from paramprof.source_model.lexer import (
    KEYWORDS,
    MODIFIERS,
    PRIMITIVES,
    Group,
    Item,
    Token,
    build_tree,
    parse_float_literal,
    parse_int_literal,
    tokenize,
)
from paramprof.source_model.model import Enclosure, EnumDomain, LiteralKind, SyntaxContext

SC = SyntaxContext

ASSIGN_OPS = frozenset("= += -= *= /= %= &= |= ^= <<= >>= >>>=".split())
COMPARISON_OPS = frozenset("== != < > <= >=".split())
_CLASS_WORDS = frozenset({"class", "interface", "enum", "record"})
_STATEMENT_KEYWORDS = frozenset(
    "if else while do for try catch finally switch case default return throw break continue "
    "synchronized assert yield package import".split()
)


@dataclass(frozen=True)
class RawLiteral:
    """A literal found by the adapter, before ids and multi-write tags are assigned."""

    start: int
    end: int
    line: int
    kind: LiteralKind
    value: object
    radix: str | None
    contexts: frozenset[SyntaxContext]
    enclosure: Enclosure | None
    write_target: str | None
    enum_type: str | None = None


@dataclass(frozen=True)
class WriteRecord:
    """One statement that assigns to a resolved variable identity."""

    identity: str
    statement: int
    line: int


@dataclass(frozen=True)
class _Call:
    name: str
    arg_index: int
    nargs: int


@dataclass(frozen=True)
class _Ctx:
    tags: frozenset[SyntaxContext] = frozenset()
    enclosure: Enclosure | None = None
    call: _Call | None = None
    sole_arg: bool = False
    write_target: str | None = None

    def add(self, *tags: SyntaxContext, **changes) -> _Ctx:
        return dataclasses.replace(self, tags=self.tags | frozenset(tags), **changes)


@dataclass
class AnalysisResult:
    literals: list[RawLiteral] = field(default_factory=list)
    writes: list[WriteRecord] = field(default_factory=list)
    enums: dict[str, list[str]] = field(default_factory=dict)


def _tok(item: Item | None, *texts: str) -> bool:
    return isinstance(item, Token) and item.kind != "string" and item.text in texts


def _group(item: Item | None, bracket: str) -> bool:
    return isinstance(item, Group) and item.bracket == bracket


def _name(item: Item | None) -> bool:
    return isinstance(item, Token) and item.is_name


def _operand_like(item: Item | None) -> bool:
    if isinstance(item, Group):
        return item.bracket in "(["
    if not isinstance(item, Token):
        return False
    if item.kind == "ident":
        return item.text not in KEYWORDS or item.text in ("this", "super", "true", "false", "null")
    return item.is_number or item.kind in ("string", "char")


def _is_cast(group: Group) -> bool:
    kids = group.children
    return (
        len(kids) == 1
        and isinstance(kids[0], Token)
        and kids[0].kind == "ident"
        and kids[0].text in PRIMITIVES
    )


def split_top(items: Sequence[Item], sep: str) -> list[list[Item]]:
    """Split on ``sep`` tokens, ignoring separators inside generic angle brackets."""
    if not items:
        return []
    parts: list[list[Item]] = [[]]
    generic = _generic_positions(items) if sep == "," else frozenset()
    for i, item in enumerate(items):
        if _tok(item, sep) and i not in generic:
            parts.append([])
        else:
            parts[-1].append(item)
    return parts


def _generic_positions(items: Sequence[Item]) -> frozenset[int]:
    """Indices that lie strictly inside ``<...>`` type-argument lists."""
    inside: set[int] = set()
    i = 0
    while i < len(items):
        item = items[i]
        prev = items[i - 1] if i else None
        nxt = items[i + 1] if i + 1 < len(items) else None
        opens = _tok(item, "<") and (
            (_name(prev) and prev.text[:1].isupper()) or _tok(prev, ".")  # type: ignore[union-attr]
        ) and (_name(nxt) or _tok(nxt, "?", ">") or (isinstance(nxt, Token) and nxt.text in PRIMITIVES))
        if not opens:
            i += 1
            continue
        depth = 1
        j = i + 1
        while j < len(items) and depth > 0:
            it = items[j]
            if _tok(it, "<"):
                depth += 1
            elif _tok(it, ">"):
                depth -= 1
            elif _tok(it, ">>"):
                depth -= 2
            elif _tok(it, ">>>"):
                depth -= 3
            elif not (_name(it) or _tok(it, ",", ".", "?", "&", "extends", "super")
                      or _group(it, "[") or (isinstance(it, Token) and it.text in PRIMITIVES)):
                break
            j += 1
        if depth <= 0:
            inside.update(range(i + 1, j - 1))
            i = j
        else:
            i += 1
    return frozenset(inside)


class JavaAnalyzer:
    """Walks one file's bracket tree and collects literals and variable writes."""

    def __init__(
        self,
        data: bytes,
        domain: EnumDomain,
        *,
        ignored_methods: Sequence[str] = (),
        time_unit_types: Sequence[str] = (),
        locale_types: Sequence[str] = (),
    ):
        self.data = data
        self.domain = domain
        self.ignored = _parse_ignore_list(ignored_methods)
        self.time_unit_types = frozenset(time_unit_types)
        self.locale_types = frozenset(locale_types)
        self.result = AnalysisResult()
        self._scopes: list[dict[str, str]] = []
        self._classes: list[str] = []
        self._methods: list[str | None] = []
        self._stmt = 0
        self._anon = 0

    # ---- entry points -------------------------------------------------

    def run(self) -> AnalysisResult:
        tree = build_tree(tokenize(self.data))
        self._body(tree, "file", None)
        return self.result

    def collect_enums(self) -> dict[str, list[str]]:
        """Enum declarations in the file, keyed by (nested) type name."""
        tree = build_tree(tokenize(self.data))
        found: dict[str, list[str]] = {}
        self._find_enums(tree, [], found)
        return found

    def _find_enums(self, items: Sequence[Item], outer: list[str], found: dict) -> None:
        for i, item in enumerate(items):
            if not _group(item, "{"):
                continue
            j = i - 1
            while j >= 0 and not (_tok(items[j], *_CLASS_WORDS) and j + 1 < len(items) and _name(items[j + 1])):
                if _tok(items[j], ";", "=") or isinstance(items[j], Group) and items[j].bracket == "{":
                    j = -1
                    break
                j -= 1
            if j >= 0:
                name = items[j + 1].text  # type: ignore[union-attr]
                qual = outer + [name]
                if _tok(items[j], "enum"):
                    found[".".join(qual)] = _enum_constants(item.children)  # type: ignore[union-attr]
                self._find_enums(item.children, qual, found)  # type: ignore[union-attr]
            else:
                self._find_enums(item.children, outer, found)  # type: ignore[union-attr]

    # ---- scopes -------------------------------------------------------

    @property
    def _cls(self) -> str:
        return self._classes[-1] if self._classes else "<file>"

    @property
    def _method(self) -> str | None:
        return self._methods[-1] if self._methods else None

    def _declare(self, name: str, line: int) -> str:
        method = self._method
        if method is None:
            ident = f"{self._cls}.{name}"
        else:
            ident = f"{self._cls}.{method}.{name}@{line}"
        if self._scopes:
            self._scopes[-1][name] = ident
        return ident

    def _resolve(self, name: str) -> str:
        for scope in reversed(self._scopes):
            if name in scope:
                return scope[name]
        return f"{self._cls}.{name}"

    def _write(self, identity: str | None, line: int) -> None:
        if identity is not None:
            self.result.writes.append(WriteRecord(identity, self._stmt, line))

    def _next_stmt(self) -> None:
        self._stmt += 1

    # ---- bodies and statements ---------------------------------------

    def _body(self, items: Sequence[Item], kind: str, name: str | None, preset: dict[str, str] | None = None) -> None:
        if kind in ("class", "enum"):
            self._classes.append(name or "<anon>")
            self._methods.append(None)
        elif kind == "method":
            self._methods.append(name)
        self._scopes.append(dict(preset or {}))
        try:
            if kind == "enum":
                items = self._enum_constants_section(items)
            for stmt, block in self._statements(items):
                self._next_stmt()
                self._statement(stmt, block)
        finally:
            self._scopes.pop()
            if kind in ("class", "enum"):
                self._classes.pop()
                self._methods.pop()
            elif kind == "method":
                self._methods.pop()

    def _enum_constants_section(self, items: Sequence[Item]) -> Sequence[Item]:
        """Walk enum constant arguments/bodies; return the member section."""
        semi = next((i for i, it in enumerate(items) if _tok(it, ";")), len(items))
        for part in split_top(items[:semi], ","):
            for k, it in enumerate(part):
                if _group(it, "(") and k and _name(part[k - 1]):
                    self._next_stmt()
                    self._call(part[k - 1].text, it, _Ctx())  # type: ignore[union-attr]
                elif _group(it, "{"):
                    self._anon += 1
                    self._body(it.children, "class", f"{self._cls}${part[0].text}")  # type: ignore[union-attr]
        return items[semi + 1:]

    def _statements(self, items: Sequence[Item]) -> Iterator[tuple[list[Item], Group | None]]:
        cur: list[Item] = []
        for item in items:
            if _tok(item, ";"):
                yield cur, None
                cur = []
            elif _group(item, "{") and self._is_block_brace(cur):
                yield cur, item  # type: ignore[misc]
                cur = []
            elif _tok(item, ":") and cur and (
                _tok(cur[0], "case") or (len(cur) == 1 and (_tok(cur[0], "default") or _name(cur[0])))
            ):
                if _tok(cur[0], "case"):
                    yield cur, None
                cur = []
            elif _tok(item, "->") and cur and _tok(cur[0], "case", "default"):
                if _tok(cur[0], "case"):
                    yield cur, None
                cur = []
            else:
                cur.append(item)
        if cur:
            yield cur, None

    @staticmethod
    def _is_block_brace(cur: Sequence[Item]) -> bool:
        if not cur:
            return True
        last = cur[-1]
        if _tok(last, "=", "->", ",", "return", "?", ":") or _group(last, "["):
            return False
        if _group(last, "(") and _new_before(cur, len(cur) - 1):
            return False
        return True

    def _statement(self, items: list[Item], block: Group | None) -> None:
        items = _strip_modifiers(items, self)
        if not items:
            if block is not None:
                self._body(block.children, "block", None)
            return
        head = items[0]
        if isinstance(head, Token) and head.kind == "ident":
            word = head.text
            if word in ("if", "while") and len(items) > 1 and _group(items[1], "("):
                self._expr(items[1].children, _Ctx(frozenset({SC.Condition})))  # type: ignore[union-attr]
                self._next_stmt()
                self._statement(items[2:], block)
                return
            if word in ("else", "do", "finally") or (word == "try" and not _group(items[1] if len(items) > 1 else None, "(")):
                self._statement(items[1:], block)
                return
            if word == "try":
                self._scopes.append({})
                try:
                    for res in split_top(items[1].children, ";"):  # type: ignore[union-attr]
                        self._next_stmt()
                        self._simple(res, frozenset())
                    self._next_stmt()
                    self._statement(items[2:], block)
                finally:
                    self._scopes.pop()
                return
            if word in ("synchronized", "switch") and len(items) > 1 and _group(items[1], "("):
                self._expr(items[1].children, _Ctx())  # type: ignore[union-attr]
                self._statement(items[2:], block)
                return
            if word == "catch" and len(items) > 1 and _group(items[1], "("):
                params = _param_names(items[1].children)  # type: ignore[union-attr]
                preset = {n: self._local_identity(n, line) for n, line in params}
                if block is not None:
                    self._body(block.children, "block", None, preset)
                return
            if word == "for" and len(items) > 1 and _group(items[1], "("):
                self._for(items[1], items[2:], block)  # type: ignore[arg-type]
                return
            if word == "case":
                self._expr(items[1:], _Ctx(frozenset({SC.Condition})))
                return
            if word == "assert":
                self._expr([it for it in items[1:] if not _tok(it, ":")], _Ctx(frozenset({SC.Condition})))
                return
            if word == "return":
                self._expr(items[1:], _Ctx(frozenset({SC.ReturnValue})))
                if block is not None:
                    self._body(block.children, "block", None)
                return
            if word in ("package", "import"):
                return
            if word in ("throw", "yield", "break", "continue"):
                self._expr(items[1:], _Ctx())
                return
        cls_idx = next(
            (i for i, it in enumerate(items) if _tok(it, *_CLASS_WORDS) and i + 1 < len(items) and _name(items[i + 1])),
            None,
        )
        if block is not None and cls_idx is not None:
            name = items[cls_idx + 1].text  # type: ignore[union-attr]
            qual = f"{self._cls}.{name}" if self._classes else name
            kind = "enum" if _tok(items[cls_idx], "enum") else "class"
            self._body(block.children, kind, qual)
            return
        if block is not None:
            call_idx = next(
                (i for i, it in enumerate(items) if _group(it, "(") and i and _name(items[i - 1])),
                None,
            )
            if call_idx is not None and not _contains_assign(items[:call_idx]):
                name = items[call_idx - 1].text  # type: ignore[union-attr]
                self._methods.append(name)
                try:
                    preset = {n: self._local_identity(n, line) for n, line in _param_names(items[call_idx].children)}  # type: ignore[union-attr]
                finally:
                    self._methods.pop()
                self._body(block.children, "method", name, preset)
                return
            self._simple(items, frozenset())
            self._body(block.children, "block", None)
            return
        self._simple(items, frozenset())

    def _local_identity(self, name: str, line: int) -> str:
        return f"{self._cls}.{self._method}.{name}@{line}"

    def _for(self, header: Group, rest: list[Item], block: Group | None) -> None:
        self._scopes.append({})
        try:
            clauses = split_top(header.children, ";")
            if len(clauses) >= 3:
                init, cond, update = clauses[0], clauses[1], clauses[2]
                self._next_stmt()
                self._simple(init, frozenset({SC.ForLoopInit}), multi_expr=True)
                self._next_stmt()
                self._expr(cond, _Ctx(frozenset({SC.Condition})))
                self._next_stmt()
                for part in split_top(update, ","):
                    self._expr(part, _Ctx())
            else:
                colon = next((i for i, it in enumerate(header.children) if _tok(it, ":")), None)
                if colon is not None:
                    var = header.children[colon - 1]
                    if _name(var):
                        self._declare(var.text, var.line)  # type: ignore[union-attr]
                    self._next_stmt()
                    self._expr(header.children[colon + 1:], _Ctx())
                else:
                    self._expr(header.children, _Ctx())
            self._next_stmt()
            self._statement(rest, block)
        finally:
            self._scopes.pop()

    def _simple(self, items: list[Item], extra: frozenset[SyntaxContext], multi_expr: bool = False) -> None:
        items = _strip_modifiers(items, self)
        decl = _match_declaration(items)
        if decl is None:
            parts = split_top(items, ",") if multi_expr else [items]
            for part in parts:
                self._expr(part, _Ctx(extra))
            return
        for name_tok, init in decl:
            ident = self._declare(name_tok.text, name_tok.line)
            if init is None:
                continue
            self._write(ident, name_tok.line)
            enc = Enclosure("variable", name_tok.text, target=ident)
            ctx = _Ctx(extra | {SC.VariableInitializer}, enclosure=enc, write_target=ident)
            self._expr(init, ctx)

    # ---- expressions --------------------------------------------------

    def _expr(self, items: Sequence[Item], ctx: _Ctx) -> None:
        k = next((i for i, it in enumerate(items) if isinstance(it, Token) and it.kind == "op" and it.text in ASSIGN_OPS), None)
        if k is None or k == 0:
            self._seq(items, ctx)
            return
        lhs, rhs = items[:k], items[k + 1:]
        display, identity = self._target(lhs)
        self._write(identity, items[k].line)
        self._seq(lhs, dataclasses.replace(ctx, write_target=None, sole_arg=False))
        enc = Enclosure("variable", display, target=identity)
        self._expr(rhs, ctx.add(SC.FieldAssignment, enclosure=enc, write_target=identity, sole_arg=False, call=None))

    def _target(self, lhs: Sequence[Item]) -> tuple[str, str | None]:
        display = "".join(it.text if isinstance(it, Token) else "[]" for it in lhs)
        if len(lhs) == 1 and _name(lhs[0]):
            return display, self._resolve(lhs[0].text)  # type: ignore[union-attr]
        if len(lhs) == 3 and _tok(lhs[1], ".") and _name(lhs[2]):
            qual = lhs[0]
            if _tok(qual, "this") or (_name(qual) and self._cls.split(".")[-1] == qual.text):  # type: ignore[union-attr]
                return display, f"{self._cls}.{lhs[2].text}"  # type: ignore[union-attr]
        return display, None

    def _seq(self, items: Sequence[Item], ctx: _Ctx) -> None:
        for k, item in enumerate(items):
            if isinstance(item, Group):
                self._group(items, k, item, ctx)
                continue
            if item.text in ("++", "--") and item.kind == "op":
                self._incdec(items, k)
            elif item.is_number or item.is_bool:
                self._literal(items, k, ctx)
            elif item.kind == "ident" and item.text not in KEYWORDS:
                self._maybe_enum(items, k, ctx)

    def _incdec(self, items: Sequence[Item], k: int) -> None:
        prev = items[k - 1] if k else None
        nxt = items[k + 1] if k + 1 < len(items) else None
        if _name(prev):
            before = items[k - 2] if k >= 2 else None
            if before is None or not _tok(before, "."):
                self._write(self._resolve(prev.text), prev.line)  # type: ignore[union-attr]
            elif k >= 3 and _tok(items[k - 3], "this"):
                self._write(f"{self._cls}.{prev.text}", prev.line)  # type: ignore[union-attr]
        elif _name(nxt) and not (k + 2 < len(items) and _tok(items[k + 2], ".")):
            self._write(self._resolve(nxt.text), nxt.line)  # type: ignore[union-attr]

    def _group(self, items: Sequence[Item], k: int, g: Group, ctx: _Ctx) -> None:
        prev = items[k - 1] if k else None
        plain = dataclasses.replace(ctx, sole_arg=False)
        if g.bracket == "(":
            if _name(prev) or _tok(prev, "this", "super"):
                if _annotation_before(items, k):
                    self._expr(g.children, _Ctx())
                    return
                self._call(prev.text, g, ctx)  # type: ignore[union-attr]
                return
            self._expr(g.children, plain)
            return
        if g.bracket == "[":
            if not g.children:
                return
            if _new_before(items, k):
                self._expr(g.children, plain)
            elif _operand_like(prev):
                self._expr(g.children, plain.add(SC.ArrayIndex, write_target=None, call=None))
            else:
                self._expr(g.children, plain)
            return
        # brace
        if _group(prev, "(") and _new_before(items, k - 1):
            self._anon += 1
            self._body(g.children, "class", f"{self._cls}${self._anon}")
        elif _tok(prev, "->"):
            self._body(g.children, "method", f"{self._method or 'lambda'}$lambda")
        elif prev is None or _tok(prev, "=", ",", "{", "(", "return", "?", ":") or _group(prev, "[") or _group(prev, "{"):
            for part in split_top(g.children, ","):
                self._expr(part, plain)
        else:
            self._body(g.children, "block", None)

    def _call(self, name: str, g: Group, ctx: _Ctx) -> None:
        args = split_top(g.children, ",")
        for i, arg in enumerate(args):
            call = _Call(name, i, len(args))
            sub = ctx.add(
                SC.CallArgument,
                enclosure=Enclosure("call", name, arg_index=i),
                call=call,
                sole_arg=len(args) == 1 and len(arg) == 1,
                write_target=None,
            )
            self._expr(arg, sub)

    # ---- literal sites ------------------------------------------------

    def _literal(self, items: Sequence[Item], k: int, ctx: _Ctx) -> None:
        tok = items[k]
        assert isinstance(tok, Token)
        start_idx = k
        start = tok.start
        minus = items[k - 1] if k else None
        if (
            tok.is_number
            and _tok(minus, "-")
            and minus.end == tok.start  # type: ignore[union-attr]
            and _unary_at(items, k - 1)
        ):
            start_idx = k - 1
            start = minus.start  # type: ignore[union-attr]
        raw = self.data[start:tok.end].decode("ascii")
        if tok.is_bool:
            kind, value, radix = LiteralKind.BOOL, tok.text == "true", None
        elif tok.kind == "float":
            kind, value, radix = LiteralKind.FLOAT, parse_float_literal(raw), None
        else:
            kind = LiteralKind.INT
            value, radix = parse_int_literal(raw)

        prev = items[start_idx - 1] if start_idx else None
        prev2 = items[start_idx - 2] if start_idx >= 2 else None
        nxt = items[k + 1] if k + 1 < len(items) else None
        nxt2 = items[k + 2] if k + 2 < len(items) else None
        tags = set(ctx.tags)
        if kind in (LiteralKind.INT, LiteralKind.FLOAT):
            compared = _tok(prev, *COMPARISON_OPS) or _tok(nxt, *COMPARISON_OPS)
            if compared and value in (0, 1):
                tags.add(SC.ComparisonWithZeroOrOne)
            if _tok(prev, *COMPARISON_OPS) and _zero_or_one(prev2, items, start_idx - 2):
                tags.add(SC.ComparisonWithZeroOrOne)
            if _tok(nxt, *COMPARISON_OPS) and _zero_or_one(nxt2, items, k + 2):
                tags.add(SC.ComparisonWithZeroOrOne)
        if kind is LiteralKind.INT and start_idx == k:
            binary_prev = _operand_like(prev2) or _tok(prev2, "++", "--")
            if value in (1, 2) and (
                (_tok(prev, "+") and binary_prev) or _tok(prev, "+=") or (_tok(nxt, "+") and not _tok(prev, "-"))
            ):
                tags.add(SC.PlusMinusSmall)
            if value == 1 and ((_tok(prev, "-") and binary_prev) or _tok(prev, "-=")):
                tags.add(SC.PlusMinusSmall)
        if ctx.call is not None:
            if kind in (LiteralKind.INT, LiteralKind.FLOAT) and self._ignored(ctx.call):
                tags.add(SC.IgnoredMethodArg)
            if kind is LiteralKind.BOOL and ctx.sole_arg and ctx.call.nargs == 1:
                tags.add(SC.OneArgBoolCall)
        self._emit(start, tok.end, tok.line, kind, value, radix, tags, ctx, None)

    def _maybe_enum(self, items: Sequence[Item], k: int, ctx: _Ctx) -> None:
        tok = items[k]
        assert isinstance(tok, Token)
        nxt = items[k + 1] if k + 1 < len(items) else None
        if _group(nxt, "(") or _tok(nxt, *ASSIGN_OPS):
            return
        prev = items[k - 1] if k else None
        if _tok(prev, "."):
            chain: list[str] = []
            j = k - 2
            while True:
                if j < 0 or not _name(items[j]):
                    return
                chain.insert(0, items[j].text)  # type: ignore[union-attr]
                if j >= 1 and _tok(items[j - 1], "."):
                    j -= 2
                    continue
                break
            etype = self.domain.resolve_qualified(".".join(chain), tok.text)
        else:
            if any(tok.text in scope for scope in self._scopes):
                return
            if _name(prev) or _tok(prev, ">", "new") or _group(prev, "["):
                return
            # a qualifier (E.A) or a declared type (E v) rather than a constant
            if _tok(nxt, ".") or _name(nxt):
                return
            etype = self.domain.resolve_bare(tok.text)
        if etype is None:
            return
        tags = set(ctx.tags)
        if ctx.call is not None:
            simple = etype.split(".")[-1]
            if simple in self.time_unit_types or etype in self.time_unit_types:
                tags.add(SC.TimeUnitArg)
            if simple in self.locale_types or etype in self.locale_types:
                tags.add(SC.LocaleArg)
        self._emit(tok.start, tok.end, tok.line, LiteralKind.ENUM, tok.text, None, tags, ctx, etype)

    def _emit(self, start, end, line, kind, value, radix, tags, ctx: _Ctx, etype) -> None:
        self.result.literals.append(
            RawLiteral(
                start=start,
                end=end,
                line=line,
                kind=kind,
                value=value,
                radix=radix,
                contexts=frozenset(tags),
                enclosure=ctx.enclosure,
                write_target=ctx.write_target,
                enum_type=etype,
            )
        )

    def _ignored(self, call: _Call) -> bool:
        rule = self.ignored.get(call.name)
        if rule is None:
            return False
        return rule == "*" or call.arg_index in rule


def _parse_ignore_list(entries: Sequence[str]) -> dict[str, object]:
    """``"substring"`` ignores every argument, ``"split#1"`` only argument 1."""
    out: dict[str, object] = {}
    for entry in entries:
        name, _, idx = entry.partition("#")
        if not idx:
            out[name] = "*"
        else:
            current = out.get(name)
            if current == "*":
                continue
            indices = set(current) if isinstance(current, set) else set()
            indices.add(int(idx))
            out[name] = indices
    return out


def _zero_or_one(item: Item | None, items: Sequence[Item], idx: int) -> bool:
    if not (isinstance(item, Token) and item.is_number):
        return False
    if idx >= 1 and _tok(items[idx - 1], "-") and _unary_at(items, idx - 1):
        return False
    try:
        value = parse_float_literal(item.text) if item.kind == "float" else parse_int_literal(item.text)[0]
    except ValueError:
        return False
    return value in (0, 1)


def _unary_at(items: Sequence[Item], j: int) -> bool:
    if j == 0:
        return True
    prev = items[j - 1]
    if _group(prev, "(") and _is_cast(prev):  # type: ignore[arg-type]
        return True
    return not (_operand_like(prev) or _tok(prev, "++", "--"))


def _new_before(items: Sequence[Item], k: int) -> bool:
    """True if ``items[k]`` closes a ``new Type...`` creation expression."""
    j = k - 1
    while j >= 0 and _group(items[j], "["):
        j -= 1
    depth = 0
    while j >= 0:
        it = items[j]
        if _tok(it, ">"):
            depth += 1
        elif _tok(it, ">>"):
            depth += 2
        elif _tok(it, "<"):
            depth -= 1
        elif _tok(it, "new"):
            return depth <= 0
        elif depth > 0 and (_tok(it, ",", "?", "extends", "super") or _group(it, "[")):
            pass
        elif not (_name(it) or _tok(it, ".") or (isinstance(it, Token) and it.text in PRIMITIVES)):
            return False
        j -= 1
    return False


def _annotation_before(items: Sequence[Item], k: int) -> bool:
    j = k - 1
    while j >= 0 and (_name(items[j]) or _tok(items[j], ".")):
        j -= 1
    return j >= 0 and _tok(items[j], "@")


def _contains_assign(items: Sequence[Item]) -> bool:
    return any(_tok(it, *ASSIGN_OPS) or _tok(it, "->") for it in items)


def _strip_modifiers(items: list[Item], analyzer: JavaAnalyzer | None = None) -> list[Item]:
    i = 0
    while i < len(items):
        it = items[i]
        if isinstance(it, Token) and it.kind == "ident" and it.text in MODIFIERS:
            i += 1
        elif _tok(it, "default") and i + 1 < len(items) and not _tok(items[i + 1], ":", "->"):
            i += 1
        elif _tok(it, "@") and i + 1 < len(items) and _name(items[i + 1]) and not _tok(items[i + 1], "interface"):
            i += 2
            while i + 1 < len(items) and _tok(items[i], ".") and _name(items[i + 1]):
                i += 2
            if i < len(items) and _group(items[i], "("):
                if analyzer is not None:
                    analyzer._expr(items[i].children, _Ctx())  # type: ignore[union-attr]
                i += 1
        else:
            break
    return items[i:]


def _skip_type(items: Sequence[Item], i: int) -> int | None:
    """Index just past a type expression starting at ``i``, or None."""
    it = items[i] if i < len(items) else None
    if not (isinstance(it, Token) and it.kind == "ident" and (it.text in PRIMITIVES or it.text not in KEYWORDS)):
        return None
    i += 1
    while True:
        if i < len(items) and _tok(items[i], "<"):
            depth = 0
            while i < len(items):
                t = items[i]
                if _tok(t, "<"):
                    depth += 1
                elif _tok(t, ">"):
                    depth -= 1
                elif _tok(t, ">>"):
                    depth -= 2
                elif _tok(t, ">>>"):
                    depth -= 3
                elif not (_name(t) or _tok(t, ",", ".", "?", "&", "extends", "super") or _group(t, "[")
                          or (isinstance(t, Token) and t.text in PRIMITIVES)):
                    return None
                i += 1
                if depth <= 0:
                    break
            if depth != 0:
                return None
        if i + 1 < len(items) and _tok(items[i], ".") and _name(items[i + 1]):
            i += 2
            continue
        break
    while i < len(items) and _group(items[i], "[") and not items[i].children:  # type: ignore[union-attr]
        i += 1
    if i < len(items) and _tok(items[i], "..."):
        i += 1
    return i


def _match_declaration(items: Sequence[Item]) -> list[tuple[Token, list[Item] | None]] | None:
    """Declarators ``(name, initializer)`` if ``items`` is a variable declaration."""
    if not items:
        return None
    first = items[0]
    if isinstance(first, Token) and first.text in _STATEMENT_KEYWORDS | {"new", "this", "super"}:
        return None
    i = _skip_type(items, 0)
    if i is None or i >= len(items) or not _name(items[i]):
        return None
    out: list[tuple[Token, list[Item] | None]] = []
    generic = _generic_positions(items)
    while True:
        name = items[i]
        if not _name(name):
            return None
        i += 1
        while i < len(items) and _group(items[i], "[") and not items[i].children:  # type: ignore[union-attr]
            i += 1
        if i == len(items):
            out.append((name, None))  # type: ignore[arg-type]
            return out
        if _tok(items[i], ","):
            out.append((name, None))  # type: ignore[arg-type]
            i += 1
            continue
        if not _tok(items[i], "="):
            return None
        i += 1
        j = i
        while j < len(items):
            if (
                _tok(items[j], ",")
                and j not in generic
                and j + 1 < len(items)
                and _name(items[j + 1])
                and (j + 2 == len(items) or _tok(items[j + 2], "=", ",") or _group(items[j + 2], "["))
            ):
                break
            j += 1
        out.append((name, list(items[i:j])))  # type: ignore[arg-type]
        if j >= len(items):
            return out
        i = j + 1


def _param_names(items: Sequence[Item]) -> list[tuple[str, int]]:
    names = []
    for part in split_top(list(items), ","):
        part = _strip_modifiers(part)
        idents = [it for it in part if _name(it)]
        if idents:
            names.append((idents[-1].text, idents[-1].line))  # type: ignore[union-attr]
    return names


def _enum_constants(items: Sequence[Item]) -> list[str]:
    semi = next((i for i, it in enumerate(items) if _tok(it, ";")), len(items))
    names = []
    for part in split_top(list(items[:semi]), ","):
        part = _strip_modifiers(part)
        if part and _name(part[0]):
            names.append(part[0].text)  # type: ignore[union-attr]
    return names


def analyze_java(
    data: bytes,
    domain: EnumDomain,
    *,
    ignored_methods: Sequence[str] = (),
    time_unit_types: Sequence[str] = (),
    locale_types: Sequence[str] = (),
) -> AnalysisResult:
    analyzer = JavaAnalyzer(
        data,
        domain,
        ignored_methods=ignored_methods,
        time_unit_types=time_unit_types,
        locale_types=locale_types,
    )
    return analyzer.run()


def declared_enums(data: bytes) -> dict[str, list[str]]:
    return JavaAnalyzer(data, EnumDomain()).collect_enums()
