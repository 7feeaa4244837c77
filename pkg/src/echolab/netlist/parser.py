"""Parser and serializer for the netlist dialect.

The first letter of an element name selects its kind::

    R1 a b 1k                      resistor
    C1 a 0 2n                      capacitor
    L1 a b 10u                     inductor
    V1 a 0 SIN(1 240k 10 0) AC 1   source: DC v | SIN(amp f cycles [start])
                                   | PULSE(v1 v2 [td tr tf pw per])
                                   | CHIRP(f0 f1 dur [amp [start]]) | EXT
    E1 p n cp cn 1                 voltage-controlled voltage source
    F1 p n V1 0.5                  current-controlled current source
    T1 p1 r1 p2 r2 Z=50 TD=5u      lossless line
    O1 p1 p2 ref R=0.12 L=185u C=46m LEN=2m N=32   lossy line ladder
    XPZT e 0 b 0 f 0 preset=pzt-disc piezo macro (optional C0= h= Zc= tau_c=)

Directives are ``.TRAN step stop``, ``.AC start stop points [lin|log]`` and
``.PARAM name=value``; a value written ``{name}`` refers to a parameter.
``*`` at the start of a line and ``;`` anywhere begin a comment, and a line
starting with ``+`` continues the previous statement.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace
from typing import Callable, Optional, Union

from ..circuit.elements import Chirp, Dc, External, Pulse, SineBurst, Waveform
from ..errors import (
    DuplicateName,
    MalformedValue,
    SourceSpan,
    UnknownDirective,
    UnknownElementKind,
    UnresolvedNode,
)
from .values import format_value, parse_value

_TOKEN = re.compile(r"[(),=]|[^\s(),=]+")
_PARAM_REF = re.compile(r"^\{([A-Za-z_][A-Za-z0-9_]*)\}$")
_NAME = re.compile(r"^[A-Za-z_][A-Za-z0-9_.]*$")

MACRO_OVERRIDES = {"c0": "C0", "h": "h", "zc": "Zc", "tau_c": "tau_c"}

ParamValue = Union[float, str]


@dataclass(frozen=True, slots=True)
class Token:
    text: str
    span: SourceSpan


@dataclass(frozen=True, slots=True)
class WaveformSpec:
    kind: str
    args: tuple[float, ...] = ()

    ARITY = {"DC": (1, 1), "SIN": (3, 4), "PULSE": (2, 7), "CHIRP": (3, 5), "EXT": (0, 0)}

    def build(self) -> Waveform:
        match self.kind:
            case "DC":
                return Dc(self.args[0])
            case "SIN":
                return SineBurst(*self.args)
            case "PULSE":
                return Pulse(*self.args)
            case "CHIRP":
                return Chirp(*self.args)
            case _:
                return External()

    def render(self) -> str:
        if self.kind == "EXT":
            return "EXT"
        if self.kind == "DC":
            return f"DC {format_value(self.args[0])}"
        return f"{self.kind}({' '.join(format_value(a) for a in self.args)})"


@dataclass(frozen=True, slots=True)
class ElementDecl:
    kind: str
    name: str
    nodes: tuple[str, ...]
    value: Optional[float] = None
    waveform: Optional[WaveformSpec] = None
    ac: float = 0.0
    sense: Optional[str] = None
    params: tuple[tuple[str, ParamValue], ...] = ()
    span: Optional[SourceSpan] = field(default=None, compare=False)

    def param(self, key: str) -> ParamValue:
        return dict(self.params)[key]


@dataclass(frozen=True, slots=True)
class Directive:
    kind: str
    args: tuple[ParamValue, ...]
    span: Optional[SourceSpan] = field(default=None, compare=False)


@dataclass(frozen=True, slots=True)
class NetlistDocument:
    elements: tuple[ElementDecl, ...] = ()
    directives: tuple[Directive, ...] = ()

    def directive(self, kind: str) -> Optional[Directive]:
        found = [d for d in self.directives if d.kind == kind]
        return found[-1] if found else None

    @property
    def params(self) -> dict[str, float]:
        return {str(d.args[0]): float(d.args[1]) for d in self.directives if d.kind == "PARAM"}

    @property
    def macros(self) -> list[ElementDecl]:
        return [e for e in self.elements if e.kind == "X"]


def _tokenize(text: str) -> list[list[Token]]:
    statements: list[list[Token]] = []
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split(";", 1)[0]
        stripped = line.lstrip()
        if not stripped or stripped.startswith("*"):
            continue
        tokens = [
            Token(m.group(), SourceSpan(number, m.start() + 1, len(m.group())))
            for m in _TOKEN.finditer(line)
        ]
        tokens = [t for t in tokens if t.text != ","]
        if stripped.startswith("+"):
            if not statements:
                raise MalformedValue("continuation line without a statement", span=tokens[0].span)
            first = tokens[0]
            if first.text == "+":
                tokens = tokens[1:]
            else:
                tokens[0] = Token(
                    first.text[1:],
                    SourceSpan(first.span.line, first.span.column + 1, first.span.length - 1),
                )
            statements[-1].extend(tokens)
        else:
            statements.append(tokens)
    return statements


class _Cursor:
    """Sequential reader over the tokens of one statement."""

    def __init__(self, head: Token, tokens: list[Token], params: dict[str, float]) -> None:
        self.head = head
        self.tokens = tokens
        self.pos = 0
        self.params = params

    @property
    def last_span(self) -> SourceSpan:
        if self.pos == 0 or not self.tokens:
            return self.head.span
        return self.tokens[min(self.pos, len(self.tokens)) - 1].span

    def done(self) -> bool:
        return self.pos >= len(self.tokens)

    def peek(self) -> Optional[Token]:
        return None if self.done() else self.tokens[self.pos]

    def next(self, what: str) -> Token:
        if self.done():
            raise MalformedValue(f"{self.head.text}: missing {what}", span=self.last_span)
        token = self.tokens[self.pos]
        self.pos += 1
        return token

    def expect(self, text: str) -> Token:
        token = self.next(repr(text))
        if token.text != text:
            raise MalformedValue(f"expected {text!r}, found {token.text!r}", span=token.span)
        return token

    def word(self, what: str) -> Token:
        token = self.next(what)
        if token.text in ("(", ")", "="):
            raise MalformedValue(f"expected {what}, found {token.text!r}", span=token.span)
        return token

    def node(self) -> str:
        return self.word("node name").text

    def number(self, what: str = "value") -> float:
        return self.resolve(self.word(what))

    def resolve(self, token: Token) -> float:
        ref = _PARAM_REF.match(token.text)
        if ref:
            name = ref.group(1)
            if name not in self.params:
                raise MalformedValue(f"undefined parameter {name!r}", span=token.span)
            return self.params[name]
        return parse_value(token.text, token.span)

    def keywords(self) -> dict[str, tuple[str, Token]]:
        found: dict[str, tuple[str, Token]] = {}
        while not self.done():
            key = self.word("parameter name")
            self.expect("=")
            value = self.word(f"value of {key.text}")
            if key.text.lower() in found:
                raise MalformedValue(f"parameter {key.text!r} given twice", span=key.span)
            found[key.text.lower()] = (key.text, value)
        return found

    def finish(self) -> None:
        token = self.peek()
        if token is not None:
            raise MalformedValue(f"unexpected {token.text!r}", span=token.span)


def _required(cursor: _Cursor, found: dict[str, tuple[str, Token]], key: str) -> float:
    if key not in found:
        raise MalformedValue(f"{cursor.head.text}: missing {key.upper()}=", span=cursor.head.span)
    return cursor.resolve(found.pop(key)[1])


def _reject_unknown(found: dict[str, tuple[str, Token]]) -> None:
    for original, token in found.values():
        raise MalformedValue(f"unknown parameter {original!r}", span=token.span)


def _two_terminal(kind: str, cursor: _Cursor) -> ElementDecl:
    nodes = (cursor.node(), cursor.node())
    value = cursor.number()
    cursor.finish()
    return ElementDecl(kind, cursor.head.text, nodes, value=value)


def _waveform_args(cursor: _Cursor, kind: str, keyword: Token) -> WaveformSpec:
    cursor.expect("(")
    args: list[float] = []
    while True:
        token = cursor.next("')'")
        if token.text == ")":
            break
        args.append(cursor.resolve(token))
    low, high = WaveformSpec.ARITY[kind]
    if not low <= len(args) <= high:
        raise MalformedValue(f"{kind} takes {low}..{high} arguments, got {len(args)}", span=keyword.span)
    return WaveformSpec(kind, tuple(args))


def _source(kind: str, cursor: _Cursor) -> ElementDecl:
    nodes = (cursor.node(), cursor.node())
    waveform: Optional[WaveformSpec] = None
    ac = 0.0
    while not cursor.done():
        token = cursor.word("source waveform")
        keyword = token.text.upper()
        if keyword == "AC":
            ac = cursor.number("AC magnitude")
            continue
        if waveform is not None:
            raise MalformedValue(f"second waveform {token.text!r}", span=token.span)
        if keyword == "DC":
            waveform = WaveformSpec("DC", (cursor.number("DC value"),))
        elif keyword == "EXT":
            waveform = WaveformSpec("EXT")
        elif keyword in ("SIN", "PULSE", "CHIRP"):
            waveform = _waveform_args(cursor, keyword, token)
        else:
            waveform = WaveformSpec("DC", (cursor.resolve(token),))
    return ElementDecl(
        kind, cursor.head.text, nodes, waveform=waveform or WaveformSpec("DC", (0.0,)), ac=ac
    )


def _vcvs(kind: str, cursor: _Cursor) -> ElementDecl:
    nodes = tuple(cursor.node() for _ in range(4))
    gain = cursor.number("gain")
    cursor.finish()
    return ElementDecl(kind, cursor.head.text, nodes, value=gain)


def _cccs(kind: str, cursor: _Cursor) -> ElementDecl:
    nodes = (cursor.node(), cursor.node())
    sense = cursor.word("sensed source").text
    gain = cursor.number("gain")
    cursor.finish()
    return ElementDecl(kind, cursor.head.text, nodes, value=gain, sense=sense)


def _lossless(kind: str, cursor: _Cursor) -> ElementDecl:
    nodes = tuple(cursor.node() for _ in range(4))
    found = cursor.keywords()
    params = (("Z", _required(cursor, found, "z")), ("TD", _required(cursor, found, "td")))
    _reject_unknown(found)
    return ElementDecl(kind, cursor.head.text, nodes, params=params)


def _lossy(kind: str, cursor: _Cursor) -> ElementDecl:
    nodes = tuple(cursor.node() for _ in range(3))
    found = cursor.keywords()
    params = tuple((key.upper(), _required(cursor, found, key)) for key in ("r", "l", "c", "len"))
    segments = _required(cursor, found, "n") if "n" in found else 32.0
    if segments != int(segments) or segments < 1:
        raise MalformedValue("N must be a positive integer", span=cursor.head.span)
    _reject_unknown(found)
    return ElementDecl(kind, cursor.head.text, nodes, params=params + (("N", float(segments)),))


def _macro(kind: str, cursor: _Cursor) -> ElementDecl:
    nodes: list[str] = []
    while not cursor.done():
        following = cursor.tokens[cursor.pos + 1] if cursor.pos + 1 < len(cursor.tokens) else None
        if following is not None and following.text == "=":
            break
        nodes.append(cursor.node())
    found = cursor.keywords()
    if "preset" not in found:
        raise MalformedValue(f"{cursor.head.text}: missing preset=", span=cursor.head.span)
    preset = found.pop("preset")[1].text
    overrides = [
        (MACRO_OVERRIDES[key], cursor.resolve(found.pop(key)[1]))
        for key in list(found)
        if key in MACRO_OVERRIDES
    ]
    _reject_unknown(found)
    params: tuple[tuple[str, ParamValue], ...] = (("preset", preset), *overrides)
    return ElementDecl(kind, cursor.head.text, tuple(nodes), params=params)


_ELEMENT_PARSERS: dict[str, Callable[[str, _Cursor], ElementDecl]] = {
    "R": _two_terminal,
    "C": _two_terminal,
    "L": _two_terminal,
    "V": _source,
    "E": _vcvs,
    "F": _cccs,
    "T": _lossless,
    "O": _lossy,
    "X": _macro,
}


def _directive(head: Token, cursor: _Cursor) -> Directive:
    kind = head.text[1:].upper()
    if kind == "TRAN":
        args: tuple[ParamValue, ...] = (cursor.number("step"), cursor.number("stop"))
    elif kind == "AC":
        start, stop, points = cursor.number("start"), cursor.number("stop"), cursor.number("points")
        if points != int(points) or points < 1:
            raise MalformedValue("point count must be a positive integer", span=cursor.last_span)
        scale = "lin"
        if not cursor.done():
            token = cursor.word("scale")
            scale = token.text.lower()
            if scale not in ("lin", "log"):
                raise MalformedValue(f"scale must be lin or log, got {token.text!r}", span=token.span)
        args = (start, stop, float(int(points)), scale)
    elif kind == "PARAM":
        name = cursor.word("parameter name")
        if not _NAME.match(name.text):
            raise MalformedValue(f"bad parameter name {name.text!r}", span=name.span)
        cursor.expect("=")
        args = (name.text, cursor.number())
    else:
        raise UnknownDirective(f"unknown directive {head.text!r}", span=head.span)
    cursor.finish()
    return Directive(kind, args, head.span)


def parse(text: str) -> NetlistDocument:
    """Parse netlist text; every error carries the span of the offending token."""

    statements = _tokenize(text)
    params: dict[str, float] = {}
    directives: list[Directive] = []
    for tokens in statements:
        head = tokens[0]
        if head.text.startswith("."):
            directive = _directive(head, _Cursor(head, tokens[1:], params))
            if directive.kind == "PARAM":
                params[str(directive.args[0])] = float(directive.args[1])
            directives.append(directive)

    elements: list[ElementDecl] = []
    seen: dict[str, ElementDecl] = {}
    for tokens in statements:
        head = tokens[0]
        if head.text.startswith("."):
            continue
        kind = head.text[0].upper()
        parser = _ELEMENT_PARSERS.get(kind)
        if parser is None or not _NAME.match(head.text):
            raise UnknownElementKind(f"unknown element kind {head.text[0]!r} in {head.text!r}", span=head.span)
        decl = parser(kind, _Cursor(head, tokens[1:], params))
        decl = replace(decl, span=head.span)
        if decl.name in seen:
            first = seen[decl.name].span
            raise DuplicateName(f"element {decl.name!r} already defined at line {first.line}", span=head.span)
        seen[decl.name] = decl
        elements.append(decl)

    _check_references(elements)
    return NetlistDocument(tuple(elements), tuple(directives))


def _check_references(elements: list[ElementDecl]) -> None:
    terminals: set[str] = {"0"}
    for decl in elements:
        own = decl.nodes[:2] if decl.kind == "E" else decl.nodes
        terminals.update(own)
    sources = {decl.name for decl in elements if decl.kind == "V"}
    for decl in elements:
        if decl.kind == "F" and decl.sense not in sources:
            raise UnresolvedNode(f"{decl.name}: sensed source {decl.sense!r} is not declared", span=decl.span)
        if decl.kind == "E":
            for node in decl.nodes[2:]:
                if node not in terminals:
                    raise UnresolvedNode(
                        f"{decl.name}: control node {node!r} is not connected to any element",
                        span=decl.span,
                    )


def _render_element(decl: ElementDecl) -> str:
    parts = [decl.name, *decl.nodes]
    match decl.kind:
        case "R" | "C" | "L" | "E":
            parts.append(format_value(decl.value))
        case "F":
            parts.extend([decl.sense, format_value(decl.value)])
        case "V":
            parts.append(decl.waveform.render())
            if decl.ac:
                parts.extend(["AC", format_value(decl.ac)])
        case "O":
            parts.extend(
                f"{key}={int(value) if key == 'N' else format_value(value)}" for key, value in decl.params
            )
        case _:
            parts.extend(
                f"{key}={value if isinstance(value, str) else format_value(value)}"
                for key, value in decl.params
            )
    return " ".join(parts)


def _render_directive(directive: Directive) -> str:
    match directive.kind:
        case "PARAM":
            return f".PARAM {directive.args[0]}={format_value(directive.args[1])}"
        case "AC":
            start, stop, points, scale = directive.args
            return f".AC {format_value(start)} {format_value(stop)} {int(points)} {scale}"
        case _:
            return f".{directive.kind} " + " ".join(format_value(a) for a in directive.args)


def serialize(doc: NetlistDocument) -> str:
    """Canonical text of ``doc``; ``parse(serialize(doc)) == doc``."""

    lines = [_render_directive(d) for d in doc.directives]
    lines.extend(_render_element(e) for e in doc.elements)
    return "\n".join(lines) + "\n"
