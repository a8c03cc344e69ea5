"""Byte-offset tokenizer and bracket tree for a Java-like grammar subset."""

from __future__ import annotations

import bisect
import re
from dataclasses import dataclass, field
from typing import Union


class SourceParseError(ValueError):
    def __init__(self, message: str, offset: int | None = None, line: int | None = None):
        super().__init__(message if line is None else f"line {line}: {message}")
        self.offset = offset
        self.line = line


_FLOAT = (
    rb"(?:\d(?:[\d_]*\d)?\.(?:\d(?:[\d_]*\d)?)?(?:[eE][+-]?\d+)?[fFdD]?"
    rb"|\.\d(?:[\d_]*\d)?(?:[eE][+-]?\d+)?[fFdD]?"
    rb"|\d(?:[\d_]*\d)?[eE][+-]?\d+[fFdD]?"
    rb"|\d(?:[\d_]*\d)?[fFdD])"
)

_TOKEN_RE = re.compile(
    rb"(?P<ws>\s+)"
    rb"|(?P<comment>//[^\n]*|/\*.*?\*/)"
    rb'|(?P<string>"""(?:\\.|[^\\])*?"""|"(?:\\.|[^"\\\n])*")'
    rb"|(?P<char>'(?:\\.|[^'\\\n])+')"
    rb"|(?P<hex>0[xX][0-9a-fA-F](?:[0-9a-fA-F_]*[0-9a-fA-F])?[lL]?)(?![\w.])"
    rb"|(?P<bin>0[bB][01](?:[01_]*[01])?[lL]?)(?!\w)"
    rb"|(?P<float>" + _FLOAT + rb")(?![\w])"
    rb"|(?P<int>\d(?:[\d_]*\d)?[lL]?)(?![\w])"
    rb"|(?P<ident>[A-Za-z_$\x80-\xff][A-Za-z0-9_$\x80-\xff]*)"
    rb"|(?P<op>>>>=|<<=|>>=|>>>|\.\.\.|->|::|\+\+|--|&&|\|\||[=!<>]=|[-+*/%&|^]=|<<|>>"
    rb"|[-+*/%=<>!~?:&|^.,;@])"
    rb"|(?P<open>[(\[{])"
    rb"|(?P<close>[)\]}])",
    re.DOTALL,
)

KEYWORDS = frozenset(
    """abstract assert boolean break byte case catch char class const continue default do
    double else enum extends final finally float for goto if implements import instanceof int
    interface long native new package private protected public return short static strictfp
    super switch synchronized this throw throws transient try void volatile while true false
    null var record yield""".split()
)
PRIMITIVES = frozenset("boolean byte char short int long float double void var".split())
MODIFIERS = frozenset(
    "public private protected static final abstract synchronized volatile transient native "
    "strictfp sealed non-sealed".split()
)
NUMBER_KINDS = frozenset({"hex", "bin", "float", "int"})
_PAIRS = {b"(": b")", b"[": b"]", b"{": b"}"}


@dataclass(frozen=True)
class Token:
    kind: str
    text: str
    start: int
    end: int
    line: int

    @property
    def is_number(self) -> bool:
        return self.kind in NUMBER_KINDS

    @property
    def is_bool(self) -> bool:
        return self.kind == "ident" and self.text in ("true", "false")

    @property
    def is_name(self) -> bool:
        return self.kind == "ident" and self.text not in KEYWORDS


@dataclass
class Group:
    open: Token
    close: Token
    children: list[Item] = field(default_factory=list)

    @property
    def bracket(self) -> str:
        return self.open.text

    @property
    def start(self) -> int:
        return self.open.start

    @property
    def end(self) -> int:
        return self.close.end

    @property
    def line(self) -> int:
        return self.open.line


Item = Union[Token, Group]


class LineIndex:
    def __init__(self, data: bytes):
        self._starts = [0] + [m.end() for m in re.finditer(rb"\n", data)]

    def line_of(self, offset: int) -> int:
        return bisect.bisect_right(self._starts, offset)


def tokenize(data: bytes) -> list[Token]:
    """Significant tokens of ``data`` (whitespace and comments dropped)."""
    lines = LineIndex(data)
    out: list[Token] = []
    pos = 0
    n = len(data)
    while pos < n:
        m = _TOKEN_RE.match(data, pos)
        if m is None or m.end() == pos:
            raise SourceParseError(
                f"unexpected byte {data[pos:pos + 1]!r}", pos, lines.line_of(pos)
            )
        kind = m.lastgroup
        assert kind is not None
        if kind not in ("ws", "comment"):
            out.append(
                Token(kind, m.group().decode("utf-8", "replace"), pos, m.end(), lines.line_of(pos))
            )
        pos = m.end()
    return out


def build_tree(tokens: list[Token]) -> list[Item]:
    root: list[Item] = []
    stack: list[tuple[Token, list[Item]]] = []
    current = root
    for tok in tokens:
        if tok.kind == "open":
            stack.append((tok, current))
            current = []
        elif tok.kind == "close":
            if not stack:
                raise SourceParseError(f"unbalanced {tok.text!r}", tok.start, tok.line)
            opener, parent = stack.pop()
            if _PAIRS[opener.text.encode()] != tok.text.encode():
                raise SourceParseError(
                    f"{opener.text!r} at line {opener.line} closed by {tok.text!r}",
                    tok.start,
                    tok.line,
                )
            parent.append(Group(opener, tok, current))
            current = parent
        else:
            current.append(tok)
    if stack:
        opener = stack[-1][0]
        raise SourceParseError(f"unclosed {opener.text!r}", opener.start, opener.line)
    return root


def parse_int_literal(raw: str) -> tuple[int, str]:
    """Value and radix of an integer literal, e.g. ``"0x1F"`` -> ``(31, "hex")``.

    A leading ``-`` is accepted so that folded negative sites round-trip.
    """
    text = raw.strip()
    sign = 1
    if text.startswith("-"):
        sign, text = -1, text[1:]
    body = text.rstrip("lL").replace("_", "")
    if not body:
        raise ValueError(f"not an integer literal: {raw!r}")
    low = body.lower()
    if low.startswith("0x"):
        return sign * int(body[2:], 16), "hex"
    if low.startswith("0b"):
        return sign * int(body[2:], 2), "bin"
    if len(body) > 1 and body[0] == "0":
        return sign * int(body[1:], 8), "oct"
    if not body.isdigit():
        raise ValueError(f"not an integer literal: {raw!r}")
    return sign * int(body, 10), "dec"


def parse_float_literal(raw: str) -> float:
    text = raw.strip()
    body = text[:-1] if text[-1:] in ("f", "F", "d", "D") else text
    body = body.replace("_", "")
    if not re.fullmatch(r"-?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?", body):
        raise ValueError(f"not a float literal: {raw!r}")
    return float(body)


def is_long_literal(raw: str) -> bool:
    return raw.rstrip()[-1:] in ("l", "L")


def float_suffix(raw: str) -> str:
    return raw[-1] if raw[-1:] in ("f", "F", "d", "D") else ""
