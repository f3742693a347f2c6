"""Recursive-descent parser for the XPath subset.

Axes are spelled out (``child::``, ``ancestor-or-self::`` ...). The arrow
notation used in the literature is accepted as an alias: ``ε`` self, ``↓``
child, ``↓+`` descendant, ``↓*`` descendant-or-self, ``↑`` parent, ``↑+``
ancestor, ``↑*`` ancestor-or-self, plus ``∨``/``∧``/``∪`` for
``or``/``and``/``|``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from ..errors import FragmentError, XPathSyntaxError
from .ast import (
    And,
    Axis,
    Filter,
    Fragment,
    NodeEquals,
    Not,
    Or,
    Path,
    PositionFilter,
    Qualifier,
    Slash,
    Step,
    TextEquals,
    Union,
    XPathExpr,
    fragment_of,
)

_GLYPH_AXES = {
    "ε": Axis.SELF,
    "↓+": Axis.DESCENDANT,
    "↓*": Axis.DESCENDANT_OR_SELF,
    "↓": Axis.CHILD,
    "↑+": Axis.ANCESTOR,
    "↑*": Axis.ANCESTOR_OR_SELF,
    "↑": Axis.PARENT,
}

_TOKEN = re.compile(
    r"""(?P<ws>\s+)
      |(?P<glyph>[↓↑][+*]?|ε)
      |(?P<string>'[^']*'|"[^"]*")
      |(?P<number>\d+)
      |(?P<name>[A-Za-z_][\w.\-]*)
      |(?P<op>::|[/|\[\]()=*∨∧⋁⋀∪])
      |(?P<bad>.)""",
    re.VERBOSE,
)

_OP_ALIASES = {"∨": "or", "⋁": "or", "∧": "and", "⋀": "and", "∪": "|"}


@dataclass(frozen=True)
class _Tok:
    kind: str  # name, string, number, glyph, op, eof
    value: str
    pos: int


def _tokenize(text: str) -> list[_Tok]:
    out = []
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        value = m.group()
        if kind == "ws":
            continue
        if kind == "bad":
            raise XPathSyntaxError(f"unexpected character {value!r}", m.start())
        if kind == "op" and value in _OP_ALIASES:
            value = _OP_ALIASES[value]
            kind = "name" if value in ("or", "and") else "op"
        out.append(_Tok(kind, value, m.start()))
    out.append(_Tok("eof", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.toks = _tokenize(text)
        self.i = 0

    # -- token helpers ----------------------------------------------------

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def ahead(self, k: int = 1) -> _Tok:
        return self.toks[min(self.i + k, len(self.toks) - 1)]

    def at(self, value: str, kind: str | None = None) -> bool:
        t = self.tok
        return t.value == value and (kind is None or t.kind == kind) and t.kind != "string"

    def expect(self, value: str) -> None:
        if not self.at(value):
            found = self.tok.value or "end of input"
            raise XPathSyntaxError(f"expected {value!r}, found {found!r}", self.tok.pos)
        self.i += 1

    def fail(self, what: str) -> XPathSyntaxError:
        found = self.tok.value or "end of input"
        return XPathSyntaxError(f"expected {what}, found {found!r}", self.tok.pos)

    def finish(self) -> None:
        if self.tok.kind != "eof":
            raise XPathSyntaxError(f"unexpected {self.tok.value!r}", self.tok.pos)

    # -- paths --------------------------------------------------------------

    def union(self) -> XPathExpr:
        expr, text = self.slash()
        if text:
            raise XPathSyntaxError("text() is only allowed in a comparison", self.tok.pos)
        return self.union_rest(expr)

    def union_rest(self, expr: XPathExpr) -> XPathExpr:
        while self.at("|", "op"):
            self.i += 1
            right, text = self.slash()
            if text:
                raise XPathSyntaxError(
                    "text() after a union operand is ambiguous; parenthesize the union",
                    self.tok.pos,
                )
            expr = Union(expr, right)
        return expr

    def slash(self, first: XPathExpr | None = None) -> tuple[XPathExpr, bool]:
        """Parse ``a/b/...``; the flag reports a trailing ``/text()``."""
        expr = self.postfix() if first is None else first
        while self.at("/", "op"):
            if self.ahead().value == "text" and self.ahead(2).value == "(":
                self.i += 1
                self.expect("text")
                self.expect("(")
                self.expect(")")
                return expr, True
            self.i += 1
            expr = Slash(expr, self.postfix())
        return expr, False

    def postfix(self) -> XPathExpr:
        if self.at("(", "op"):
            self.i += 1
            inner = self.union()
            self.expect(")")
            return self.predicates(inner, fold=False)
        return self.predicates(self.step(), fold=True)

    def predicates(self, expr: XPathExpr, fold: bool) -> XPathExpr:
        """Attach ``[...]`` suffixes; leading qualifiers fold into a bare step."""
        while self.at("[", "op"):
            self.i += 1
            if self.tok.kind == "number" and self.ahead().value == "]":
                position = int(self.tok.value)
                if position < 1:
                    raise XPathSyntaxError("positions start at 1", self.tok.pos)
                self.i += 1
                expr = PositionFilter(expr, position)
                fold = False
            else:
                q = self.qualifier()
                if fold and isinstance(expr, Step):
                    expr = Step(expr.axis, expr.test, expr.qualifiers + (q,))
                else:
                    expr = Filter(expr, q)
            self.expect("]")
        return expr

    def axis(self) -> Axis:
        t = self.tok
        if t.kind == "glyph":
            self.i += 1
            return _GLYPH_AXES[t.value]
        if t.kind == "name" and self.ahead().value == "::":
            try:
                axis = Axis(t.value)
            except ValueError:
                raise XPathSyntaxError(f"unknown axis {t.value!r}", t.pos) from None
            self.i += 1
            return axis
        raise self.fail("an axis step such as child::name")

    def step(self) -> Step:
        axis = self.axis()
        self.expect("::")
        t = self.tok
        if t.kind == "name" or (t.kind == "op" and t.value == "*"):
            self.i += 1
            return Step(axis, t.value)
        raise self.fail("an element name or '*'")

    # -- qualifiers -----------------------------------------------------------

    def qualifier(self) -> Qualifier:
        items = [self.conjunction()]
        while self.at("or", "name"):
            self.i += 1
            items.append(self.conjunction())
        return items[0] if len(items) == 1 else Or(tuple(items))

    def conjunction(self) -> Qualifier:
        items = [self.negation()]
        while self.at("and", "name"):
            self.i += 1
            items.append(self.negation())
        return items[0] if len(items) == 1 else And(tuple(items))

    def negation(self) -> Qualifier:
        if self.at("not", "name") and self.ahead().value == "(":
            self.i += 2
            q = self.qualifier()
            self.expect(")")
            return Not(q)
        if self.at("(", "op"):
            self.i += 1
            q = self.qualifier()
            self.expect(")")
            if isinstance(q, Path) and (self.at("[", "op") or self.at("/", "op") or self.at("|", "op") or self.at("=", "op")):
                return self.comparison(self.predicates(q.path, fold=False))
            return q
        return self.comparison(None)

    def comparison(self, first: XPathExpr | None) -> Qualifier:
        expr, text = self.slash(first)
        if text:
            self.expect("=")
            if self.tok.kind != "string":
                raise self.fail("a quoted string")
            value = self.tok.value[1:-1]
            self.i += 1
            return TextEquals(expr, value)
        expr = self.union_rest(expr)
        if self.at("=", "op"):
            self.i += 1
            if self.axis() is not Axis.SELF:
                raise XPathSyntaxError("node comparison must compare with self::label", self.tok.pos)
            self.expect("::")
            t = self.tok
            if not (t.kind == "name" or t.value == "*"):
                raise self.fail("an element name or '*'")
            self.i += 1
            return NodeEquals(expr, t.value)
        return Path(expr)


def _check_fragment(node, max_fragment: Fragment | str) -> None:
    limit = Fragment.parse(max_fragment)
    got = fragment_of(node)
    if got > limit:
        raise FragmentError(f"expression is in fragment {got.name}, outside {limit.name}: {node}")


def parse_xpath(text: str, max_fragment: Fragment | str = Fragment.X_UP_POS_EQ) -> XPathExpr:
    """Parse a path expression and check it stays within ``max_fragment``."""
    p = _Parser(text)
    expr = p.union()
    p.finish()
    _check_fragment(expr, max_fragment)
    return expr


def parse_qualifier(text: str, max_fragment: Fragment | str = Fragment.X_UP_POS_EQ) -> Qualifier:
    """Parse the inside of a ``[...]`` qualifier."""
    p = _Parser(text)
    q = p.qualifier()
    p.finish()
    _check_fragment(q, max_fragment)
    return q
