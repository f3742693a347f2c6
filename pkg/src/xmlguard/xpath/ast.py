"""Path and qualifier syntax trees, fragment classification and printing.

Paths::

    Step(axis, test, qualifiers)   axis::test[q1][q2]...
    Slash(left, right)             left/right
    Union(left, right)             left | right
    PositionFilter(path, k)        path[k]
    Filter(path, qualifier)        path[q], for a path that is not a bare step

Qualifiers::

    Path(p) | TextEquals(p, c) | And(items) | Or(items) | Not(q) | NodeEquals(p, lab)

``And``/``Or`` are n-ary so that a disjunction over a thousand annotations is a
flat node rather than a thousand-deep chain.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
import typing
from typing import Iterator


class Axis(str, enum.Enum):
    SELF = "self"
    CHILD = "child"
    DESCENDANT = "descendant"
    DESCENDANT_OR_SELF = "descendant-or-self"
    PARENT = "parent"
    ANCESTOR = "ancestor"
    ANCESTOR_OR_SELF = "ancestor-or-self"

    @property
    def upward(self) -> bool:
        return self in (Axis.PARENT, Axis.ANCESTOR, Axis.ANCESTOR_OR_SELF)


class Fragment(enum.IntEnum):
    """XPath fragments ordered by inclusion."""

    X = 0  # downward axes, qualifiers, union
    X_UP = 1  # + parent / ancestor / ancestor-or-self
    X_UP_POS = 2  # + position filters
    X_UP_POS_EQ = 3  # + node comparison ``p = self::lab``

    @classmethod
    def parse(cls, name: str | Fragment) -> Fragment:
        if isinstance(name, Fragment):
            return name
        key = name.strip().replace("↑", "UP").replace("[", "_").replace("]", "")
        aliases = {
            "X": cls.X,
            "XUP": cls.X_UP,
            "X_UP": cls.X_UP,
            "XUP_N": cls.X_UP_POS,
            "X_UP_POS": cls.X_UP_POS,
            "XUP_N,=": cls.X_UP_POS_EQ,
            "X_UP_POS_EQ": cls.X_UP_POS_EQ,
        }
        try:
            return aliases[key.upper()]
        except KeyError:
            raise ValueError(f"unknown fragment {name!r}") from None


# -- paths -------------------------------------------------------------------


@dataclass(frozen=True)
class Step:
    axis: Axis
    test: str  # element type name or "*"
    qualifiers: tuple[Qualifier, ...] = ()

    def __str__(self) -> str:
        return format_xpath(self)


@dataclass(frozen=True)
class Slash:
    left: XPathExpr
    right: XPathExpr

    def __str__(self) -> str:
        return format_xpath(self)


@dataclass(frozen=True)
class Union:
    left: XPathExpr
    right: XPathExpr

    def __str__(self) -> str:
        return format_xpath(self)


@dataclass(frozen=True)
class PositionFilter:
    path: XPathExpr
    position: int

    def __post_init__(self) -> None:
        if self.position < 1:
            raise ValueError("positions start at 1")

    def __str__(self) -> str:
        return format_xpath(self)


@dataclass(frozen=True)
class Filter:
    path: XPathExpr
    qualifier: Qualifier

    def __str__(self) -> str:
        return format_xpath(self)


XPathExpr = typing.Union[Step, Slash, Union, PositionFilter, Filter]

# -- qualifiers --------------------------------------------------------------


@dataclass(frozen=True)
class Path:
    path: XPathExpr

    def __str__(self) -> str:
        return format_qualifier(self)


@dataclass(frozen=True)
class TextEquals:
    path: XPathExpr
    value: str

    def __str__(self) -> str:
        return format_qualifier(self)


@dataclass(frozen=True)
class And:
    items: tuple[Qualifier, ...]

    def __post_init__(self) -> None:
        if len(self.items) < 2:
            raise ValueError("And needs at least two operands")

    def __str__(self) -> str:
        return format_qualifier(self)


@dataclass(frozen=True)
class Or:
    items: tuple[Qualifier, ...]

    def __post_init__(self) -> None:
        if len(self.items) < 2:
            raise ValueError("Or needs at least two operands")

    def __str__(self) -> str:
        return format_qualifier(self)


@dataclass(frozen=True)
class Not:
    operand: Qualifier

    def __str__(self) -> str:
        return format_qualifier(self)


@dataclass(frozen=True)
class NodeEquals:
    """``path = self::label``: path yields exactly the context node, which matches label."""

    path: XPathExpr
    label: str

    def __str__(self) -> str:
        return format_qualifier(self)


Qualifier = typing.Union[Path, TextEquals, And, Or, Not, NodeEquals]

# -- helpers -----------------------------------------------------------------


def step(axis: Axis | str, test: str = "*", *qualifiers: Qualifier) -> Step:
    return Step(Axis(axis), test, tuple(qualifiers))


def self_is(label: str, *qualifiers: Qualifier) -> Qualifier:
    """The qualifier ``self::label[q...]``."""
    return Path(Step(Axis.SELF, label, tuple(qualifiers)))


#: Holds at every element node.
TRUE: Qualifier = Path(Step(Axis.SELF, "*"))
#: Holds nowhere.
FALSE: Qualifier = Not(TRUE)


def any_of(items: list[Qualifier]) -> Qualifier:
    if not items:
        return FALSE
    return items[0] if len(items) == 1 else Or(tuple(items))


def all_of(items: list[Qualifier]) -> Qualifier:
    if not items:
        return TRUE
    return items[0] if len(items) == 1 else And(tuple(items))


def with_qualifier(expr: XPathExpr, q: Qualifier) -> XPathExpr:
    """``expr[q]``, folded into the last step where that keeps the meaning."""
    if isinstance(expr, Step):
        return Step(expr.axis, expr.test, expr.qualifiers + (q,))
    if isinstance(expr, Slash):
        return Slash(expr.left, with_qualifier(expr.right, q))
    return Filter(expr, q)


def iter_nodes(node: XPathExpr | Qualifier) -> Iterator[XPathExpr | Qualifier]:
    """Pre-order walk over every path and qualifier node."""
    yield node
    if isinstance(node, Step):
        for q in node.qualifiers:
            yield from iter_nodes(q)
    elif isinstance(node, (Slash, Union)):
        yield from iter_nodes(node.left)
        yield from iter_nodes(node.right)
    elif isinstance(node, PositionFilter):
        yield from iter_nodes(node.path)
    elif isinstance(node, Filter):
        yield from iter_nodes(node.path)
        yield from iter_nodes(node.qualifier)
    elif isinstance(node, (Path, TextEquals, NodeEquals)):
        yield from iter_nodes(node.path)
    elif isinstance(node, (And, Or)):
        for q in node.items:
            yield from iter_nodes(q)
    elif isinstance(node, Not):
        yield from iter_nodes(node.operand)


def ast_size(node: XPathExpr | Qualifier) -> int:
    return sum(1 for _ in iter_nodes(node))


def fragment_of(node: XPathExpr | Qualifier) -> Fragment:
    """Smallest fragment containing ``node``."""
    frag = Fragment.X
    for sub in iter_nodes(node):
        if isinstance(sub, NodeEquals):
            return Fragment.X_UP_POS_EQ
        if isinstance(sub, PositionFilter):
            frag = max(frag, Fragment.X_UP_POS)
        elif isinstance(sub, Step) and sub.axis.upward:
            frag = max(frag, Fragment.X_UP)
    return frag


def labels_used(node: XPathExpr | Qualifier) -> set[str]:
    out = set()
    for sub in iter_nodes(node):
        if isinstance(sub, Step) and sub.test != "*":
            out.add(sub.test)
        elif isinstance(sub, NodeEquals) and sub.label != "*":
            out.add(sub.label)
    return out


# -- printing ----------------------------------------------------------------

_UNION, _SLASH, _POSTFIX = 0, 1, 2


def _quote(value: str) -> str:
    if "'" not in value:
        return f"'{value}'"
    if '"' not in value:
        return f'"{value}"'
    raise ValueError(f"string contains both quote characters: {value!r}")


def _path(expr: XPathExpr, level: int) -> str:
    if isinstance(expr, Step):
        quals = "".join(f"[{format_qualifier(q)}]" for q in expr.qualifiers)
        return f"{expr.axis.value}::{expr.test}{quals}"
    if isinstance(expr, Union):
        text = f"{_path(expr.left, _UNION)} | {_path(expr.right, _SLASH)}"
        return f"({text})" if level > _UNION else text
    if isinstance(expr, Slash):
        text = f"{_path(expr.left, _SLASH)}/{_path(expr.right, _POSTFIX)}"
        return f"({text})" if level > _SLASH else text
    if isinstance(expr, PositionFilter):
        return f"{_path(expr.path, _POSTFIX)}[{expr.position}]"
    if isinstance(expr, Filter):
        inner = expr.path
        base = f"({_path(inner, _UNION)})" if isinstance(inner, Step) else _path(inner, _POSTFIX)
        return f"{base}[{format_qualifier(expr.qualifier)}]"
    raise TypeError(f"not a path expression: {expr!r}")


def format_xpath(expr: XPathExpr) -> str:
    """Surface syntax for ``expr``; ``parse_xpath`` reads it back unchanged."""
    return _path(expr, _UNION)


def _qual(q: Qualifier, context: type | None) -> str:
    if isinstance(q, Path):
        return _path(q.path, _UNION)
    if isinstance(q, TextEquals):
        return f"{_path(q.path, _SLASH)}/text()={_quote(q.value)}"
    if isinstance(q, NodeEquals):
        return f"{_path(q.path, _UNION)} = self::{q.label}"
    if isinstance(q, Not):
        return f"not({_qual(q.operand, None)})"
    if isinstance(q, Or):
        text = " or ".join(_qual(i, Or) for i in q.items)
        return f"({text})" if context in (Or, And) else text
    if isinstance(q, And):
        text = " and ".join(_qual(i, And) for i in q.items)
        return f"({text})" if context is And else text
    raise TypeError(f"not a qualifier: {q!r}")


def format_qualifier(q: Qualifier) -> str:
    return _qual(q, None)
