"""Parser for the libconfig-like syntax used by OAI gNB configuration files.

The parser never rewrites anything: a parsed document keeps the raw bytes
and every node carries byte spans into them, so ``serialize`` is the
identity and edits are splices. Supported constructs are the ones that
appear in real OAI configs: ``name = value;`` / ``name : value;``
assignments, ``{ ... }`` groups, ``( ... )`` lists (of scalars or groups),
``#`` and ``//`` comments, and optional ``;`` / ``,`` terminators.
Anything else is preserved as an opaque scalar span.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterator


class NewlineStyle(Enum):
    LF = "\n"
    CRLF = "\r\n"


class NodeKind(Enum):
    SCALAR = "scalar"
    LIST = "list"
    GROUP = "group"


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass
class ConfigNode:
    """One setting (or list element) with byte spans into the raw text."""

    name: str
    kind: NodeKind
    scalar_value: str = ""
    children: list["ConfigNode"] = field(default_factory=list)
    value_span: tuple[int, int] = (0, 0)
    full_span: tuple[int, int] = (0, 0)
    comments: tuple[str, ...] = ()
    opaque: bool = False

    def child(self, name: str) -> "ConfigNode | None":
        for node in self.children:
            if node.name == name:
                return node
        return None


@dataclass
class ConfigDocument:
    raw: bytes
    root: list[ConfigNode]
    newline_style: NewlineStyle

    def serialize(self) -> bytes:
        return self.raw

    def find(self, path: str) -> ConfigNode | None:
        """Resolve a dotted path; list elements are addressed by ordinal."""
        nodes = self.root
        node: ConfigNode | None = None
        for part in path.split("."):
            node = next((c for c in nodes if c.name == part), None)
            if node is None:
                return None
            nodes = node.children
        return node

    def walk(self) -> Iterator[tuple[str, ConfigNode]]:
        stack = [("", node) for node in reversed(self.root)]
        while stack:
            prefix, node = stack.pop()
            path = f"{prefix}.{node.name}" if prefix else node.name
            yield path, node
            for child in reversed(node.children):
                stack.append((path, child))

    def attribution_path(self, offset: int) -> str | None:
        """Dotted path a byte change at ``offset`` is attributed to.

        Returns the innermost enclosing group; bytes outside any group are
        attributed to the top-level setting they belong to. ``None`` means
        the offset falls between settings (comments, blank lines at the
        document top level).
        """
        best: str | None = None
        nodes, prefix = self.root, ""
        while True:
            hit = next(
                (c for c in nodes if c.full_span[0] <= offset < c.full_span[1]), None
            )
            if hit is None:
                return best
            path = f"{prefix}.{hit.name}" if prefix else hit.name
            if hit.kind is NodeKind.GROUP or best is None:
                best = path
            nodes, prefix = hit.children, path


_IDENT_START = frozenset(b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz_")
_IDENT_CONT = _IDENT_START | frozenset(b"0123456789-")
_SCALAR_STOP = frozenset(b";,)}{(\n# \t\r")


class _Scanner:
    __slots__ = ("raw", "pos", "n")

    def __init__(self, raw: bytes):
        self.raw = raw
        self.pos = 0
        self.n = len(raw)

    def line_col(self, pos: int) -> tuple[int, int]:
        line = self.raw.count(b"\n", 0, pos) + 1
        return line, pos - self.raw.rfind(b"\n", 0, pos)

    def error(self, message: str, pos: int | None = None) -> ParseError:
        line, col = self.line_col(self.pos if pos is None else pos)
        return ParseError(message, line, col)

    def peek(self) -> int:
        return self.raw[self.pos] if self.pos < self.n else -1

    def _at_comment(self) -> bool:
        c = self.peek()
        if c == 0x23:  # '#'
            return True
        return c == 0x2F and self.pos + 1 < self.n and self.raw[self.pos + 1] == 0x2F

    def skip_trivia(self) -> list[tuple[str, bool]]:
        """Advance past whitespace and comments.

        Returns the comments crossed as (text, owns_line) pairs; trailing
        comments that share a line with earlier content have owns_line False.
        """
        comments: list[tuple[str, bool]] = []
        while self.pos < self.n:
            c = self.raw[self.pos]
            if c in b" \t\r\n":
                self.pos += 1
                continue
            if self._at_comment():
                start = self.pos
                line_start = self.raw.rfind(b"\n", 0, start) + 1
                owns_line = self.raw[line_start:start].strip() == b""
                nl = self.raw.find(b"\n", self.pos)
                self.pos = self.n if nl < 0 else nl
                comments.append((self.raw[start : self.pos].decode("utf-8"), owns_line))
                continue
            break
        return comments


def parse_config(text: bytes | str) -> ConfigDocument:
    if isinstance(text, str):
        raw = text.encode("utf-8")
    else:
        raw = bytes(text)
        try:
            raw.decode("utf-8")
        except UnicodeDecodeError as exc:
            line = raw.count(b"\n", 0, exc.start) + 1
            col = exc.start - raw.rfind(b"\n", 0, exc.start)
            raise ParseError("input is not valid UTF-8", line, col) from exc

    scanner = _Scanner(raw)
    root = _parse_statements(scanner, closing=None)

    first_nl = raw.find(b"\n")
    crlf = first_nl > 0 and raw[first_nl - 1 : first_nl] == b"\r"
    return ConfigDocument(raw=raw, root=root, newline_style=NewlineStyle.CRLF if crlf else NewlineStyle.LF)


def _parse_statements(sc: _Scanner, closing: int | None) -> list[ConfigNode]:
    nodes: list[ConfigNode] = []
    while True:
        comments = sc.skip_trivia()
        if sc.pos >= sc.n:
            if closing is not None:
                raise sc.error("unbalanced '{': missing closing brace")
            break
        c = sc.peek()
        if closing is not None and c == closing:
            break
        if c in (0x7D, 0x29):  # stray '}' or ')'
            raise sc.error("unbalanced closing delimiter")
        own_line = tuple(text for text, owns in comments if owns)
        nodes.append(_parse_statement(sc, own_line))
    return nodes


def _parse_statement(sc: _Scanner, comments: tuple[str, ...]) -> ConfigNode:
    start = sc.pos
    if sc.peek() not in _IDENT_START:
        return _parse_opaque(sc, start, comments)

    end = start
    while end < sc.n and sc.raw[end] in _IDENT_CONT:
        end += 1
    name = sc.raw[start:end].decode("utf-8")
    sc.pos = end

    sc.skip_trivia()
    if sc.peek() not in (0x3D, 0x3A):  # '=' or ':'
        sc.pos = start
        return _parse_opaque(sc, start, comments)
    sc.pos += 1
    sc.skip_trivia()

    node = _parse_value(sc, name)
    node.comments = comments

    # Optional ';' or ',' terminator on the same line.
    scan = sc.pos
    while scan < sc.n and sc.raw[scan] in b" \t":
        scan += 1
    if scan < sc.n and sc.raw[scan] in b";,":
        sc.pos = scan + 1
        node.full_span = (start, sc.pos)
    else:
        if scan < sc.n and (sc.raw[scan] in _IDENT_START or sc.raw[scan] == 0x22):
            raise sc.error("missing ';' terminator before next setting", scan)
        node.full_span = (start, node.value_span[1])
    return node


def _parse_value(sc: _Scanner, name: str) -> ConfigNode:
    c = sc.peek()
    if c == 0x28:  # '('
        return _parse_list(sc, name)
    if c == 0x7B:  # '{'
        return _parse_group(sc, name)
    return _parse_scalar(sc, name)


def _parse_group(sc: _Scanner, name: str) -> ConfigNode:
    start = sc.pos
    sc.pos += 1
    children = _parse_statements(sc, closing=0x7D)
    if sc.peek() != 0x7D:
        raise sc.error("unbalanced '{': missing closing brace", start)
    sc.pos += 1
    span = (start, sc.pos)
    return ConfigNode(name=name, kind=NodeKind.GROUP, children=children, value_span=span, full_span=span)


def _parse_list(sc: _Scanner, name: str) -> ConfigNode:
    start = sc.pos
    sc.pos += 1
    children: list[ConfigNode] = []
    sc.skip_trivia()
    if sc.peek() == 0x29:
        sc.pos += 1
    else:
        while True:
            sc.skip_trivia()
            if sc.peek() == 0x29 and children:  # tolerate trailing comma
                sc.pos += 1
                break
            element = _parse_value(sc, str(len(children)))
            element.full_span = element.value_span
            children.append(element)
            sc.skip_trivia()
            c = sc.peek()
            if c == 0x2C:
                sc.pos += 1
                continue
            if c == 0x29:
                sc.pos += 1
                break
            raise sc.error("expected ',' or ')' in list" if c != -1 else "unbalanced '(': missing closing parenthesis", start if c == -1 else None)
    span = (start, sc.pos)
    return ConfigNode(name=name, kind=NodeKind.LIST, children=children, value_span=span, full_span=span)


def _parse_scalar(sc: _Scanner, name: str) -> ConfigNode:
    start = sc.pos
    raw = sc.raw
    if sc.peek() == 0x22:  # quoted string
        i = start + 1
        while i < sc.n:
            b = raw[i]
            if b == 0x5C:  # backslash escape
                i += 2
                continue
            if b == 0x22:
                break
            if b == 0x0A:
                raise sc.error("unterminated string", start)
            i += 1
        if i >= sc.n:
            raise sc.error("unterminated string", start)
        end = i + 1
    else:
        i = start
        while i < sc.n:
            b = raw[i]
            if b in _SCALAR_STOP:
                break
            if b == 0x2F and i + 1 < sc.n and raw[i + 1] == 0x2F:
                break
            i += 1
        end = i
        while end > start and raw[end - 1] in b" \t\r":
            end -= 1
        if end == start:
            raise sc.error("expected a value")
    sc.pos = end
    token = raw[start:end].decode("utf-8")
    span = (start, end)
    return ConfigNode(name=name, kind=NodeKind.SCALAR, scalar_value=token, value_span=span, full_span=span)


def _parse_opaque(sc: _Scanner, start: int, comments: tuple[str, ...]) -> ConfigNode:
    """Preserve an unrecognized construct as a scalar span (up to ';' or EOL)."""
    raw = sc.raw
    i = start
    while i < sc.n and raw[i] not in b";\n":
        i += 1
    end = i + 1 if i < sc.n and raw[i] == 0x3B else i
    if end == start:
        raise sc.error("unexpected character")
    sc.pos = end
    text = raw[start:end].decode("utf-8")
    words = text.split()
    span = (start, end)
    return ConfigNode(
        name=words[0] if words else "",
        kind=NodeKind.SCALAR,
        scalar_value=text,
        value_span=span,
        full_span=span,
        comments=comments,
        opaque=True,
    )
