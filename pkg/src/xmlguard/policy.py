"""Update specifications and their compilation into XPath predicates.

An update specification annotates ``(element type, update type)`` pairs with
one of ``Y``, ``N``, ``[Q]``, ``Nh`` or ``[Q]h``. Unannotated types inherit
from the nearest annotated ancestor; the ``h`` values are downward-closed and
cannot be overridden below an element where they do not hold. Anything not
granted is denied.

Policy file format, one annotation per line::

    annot medicalFolder delete[treatment] = Y
    annot dept insertInto[treatment] = [child::dname/text()='cardiology']h
    # comments run to the end of the line
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Iterable

from .dtd import Dtd
from .errors import FragmentError, PolicyError, XPathSyntaxError
from .tree import NodeId, XmlTree
from .xpath import (
    FALSE,
    And,
    Axis,
    Evaluator,
    Filter,
    Fragment,
    Not,
    Or,
    Path,
    PositionFilter,
    Qualifier,
    Step,
    XPathExpr,
    all_of,
    any_of,
    labels_used,
    parse_qualifier,
)

# ---------------------------------------------------------------------------
# Update types and annotation values
# ---------------------------------------------------------------------------


class UpdateKind(str, enum.Enum):
    INSERT_INTO = "insertInto"
    INSERT_AS_FIRST = "insertAsFirst"
    INSERT_AS_LAST = "insertAsLast"
    INSERT_BEFORE = "insertBefore"
    INSERT_AFTER = "insertAfter"
    DELETE = "delete"
    REPLACE = "replace"


POSITIONAL_INSERTS = (
    UpdateKind.INSERT_AS_FIRST,
    UpdateKind.INSERT_AS_LAST,
    UpdateKind.INSERT_BEFORE,
    UpdateKind.INSERT_AFTER,
)


@dataclass(frozen=True)
class UpdateType:
    kind: UpdateKind
    b_i: str
    b_j: str | None = None

    def __post_init__(self) -> None:
        if (self.kind is UpdateKind.REPLACE) != (self.b_j is not None):
            raise ValueError("replace takes two element types, every other kind exactly one")

    def __str__(self) -> str:
        params = self.b_i if self.b_j is None else f"{self.b_i},{self.b_j}"
        return f"{self.kind.value}[{params}]"

    @classmethod
    def parse(cls, text: str) -> UpdateType:
        m = re.fullmatch(r"\s*(\w+)\s*\[\s*([^,\]\s]+)\s*(?:,\s*([^\]\s]+)\s*)?\]\s*", text)
        if not m:
            raise ValueError(f"malformed update type {text!r}")
        try:
            kind = UpdateKind(m.group(1))
        except ValueError:
            raise ValueError(f"unknown update kind {m.group(1)!r}") from None
        return cls(kind, m.group(2), m.group(3))


class Value(str, enum.Enum):
    Y = "Y"
    N = "N"
    Q = "Q"  # [Q]
    NH = "Nh"
    QH = "Qh"  # [Q]h


@dataclass(frozen=True)
class Annotation:
    value: Value
    qualifier: Qualifier | None = None

    def __post_init__(self) -> None:
        if (self.value in (Value.Q, Value.QH)) != (self.qualifier is not None):
            raise ValueError("exactly the conditional values carry a qualifier")

    @property
    def downward_closed(self) -> bool:
        return self.value in (Value.NH, Value.QH)

    @property
    def conditional(self) -> bool:
        return self.qualifier is not None

    def __str__(self) -> str:
        if self.qualifier is None:
            return self.value.value
        suffix = "h" if self.value is Value.QH else ""
        return f"[{self.qualifier}]{suffix}"


Y = Annotation(Value.Y)
N = Annotation(Value.N)
NH = Annotation(Value.NH)


def cond(q: Qualifier, downward_closed: bool = False) -> Annotation:
    return Annotation(Value.QH if downward_closed else Value.Q, q)


def annotation_valid(ann: Annotation, ev: Evaluator, n: NodeId) -> bool:
    """``Y``, or a conditional value whose qualifier holds at ``n``."""
    if ann.value is Value.Y:
        return True
    if ann.qualifier is not None:
        return ev.holds(ann.qualifier, n)
    return False


def parse_value(text: str, dtd: Dtd, line: int | None = None, column: int | None = None) -> Annotation:
    """Parse ``Y | N | Nh | [q] | [q]h`` with ``q`` in fragment X over ``dtd``."""
    text = text.strip()
    if text in ("Y", "N", "Nh"):
        return Annotation(Value(text))
    m = re.fullmatch(r"\[(.*)\](h?)", text, re.DOTALL)
    if not m:
        raise PolicyError(f"bad annotation value {text!r}; expected Y, N, Nh, [q] or [q]h", line, column)
    try:
        q = parse_qualifier(m.group(1), Fragment.X)
    except FragmentError as exc:
        raise PolicyError(f"qualifier must stay in fragment X: {exc}", line, column) from None
    except XPathSyntaxError as exc:
        raise PolicyError(f"bad qualifier: {exc}", line, column) from None
    unknown = sorted(labels_used(q) - dtd.ele)
    if unknown:
        raise PolicyError(f"qualifier mentions unknown element types {unknown}", line, column)
    return cond(q, downward_closed=bool(m.group(2)))


# ---------------------------------------------------------------------------
# Update specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Rule:
    element: str
    update_type: UpdateType
    annotation: Annotation

    def __str__(self) -> str:
        return f"annot {self.element} {self.update_type} = {self.annotation}"


@dataclass(frozen=True)
class UpdateSpec:
    """A DTD plus an ordered, duplicate-free list of update annotations."""

    dtd: Dtd
    rules: tuple[Rule, ...] = ()
    _by_type: dict[UpdateType, tuple[Rule, ...]] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        seen = set()
        grouped: dict[UpdateType, list[Rule]] = {}
        for r in self.rules:
            ut = r.update_type
            for name in (r.element, ut.b_i, ut.b_j):
                if name is not None and name not in self.dtd.ele:
                    raise PolicyError(f"unknown element type {name!r} in {r}")
            key = (r.element, ut)
            if key in seen:
                raise PolicyError(f"duplicate annotation for {r.element} {ut}")
            seen.add(key)
            grouped.setdefault(ut, []).append(r)
        self._by_type.update({ut: tuple(rs) for ut, rs in grouped.items()})

    def __len__(self) -> int:
        return len(self.rules)

    def s_ut(self, ut: UpdateType) -> tuple[Rule, ...]:
        """Annotations of update type ``ut``, in declaration order."""
        return self._by_type.get(ut, ())

    def lookup(self, element: str, ut: UpdateType) -> Annotation | None:
        for r in self.s_ut(ut):
            if r.element == element:
                return r.annotation
        return None

    def update_types(self) -> list[UpdateType]:
        return list(self._by_type)

    def to_text(self) -> str:
        return "".join(f"{r}\n" for r in self.rules)


_ANNOT = re.compile(r"annot\s+(\S+)\s+(\w+\s*\[[^\]]*\])\s*=\s*(.+)")


def _strip_comment(line: str) -> str:
    """Drop a ``#`` comment, ignoring ``#`` inside quoted strings."""
    quote = None
    for i, ch in enumerate(line):
        if quote:
            if ch == quote:
                quote = None
        elif ch in "'\"":
            quote = ch
        elif ch == "#":
            return line[:i]
    return line


def parse_policy(text: str, dtd: Dtd) -> UpdateSpec:
    rules: list[Rule] = []
    seen: dict[tuple[str, UpdateType], int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        m = _ANNOT.fullmatch(line)
        if not m:
            raise PolicyError("expected 'annot <Type> <kind>[<B>] = <value>'", lineno, 1)
        element = m.group(1)
        try:
            ut = UpdateType.parse(m.group(2))
        except ValueError as exc:
            raise PolicyError(str(exc), lineno, m.start(2) + 1) from None
        for name in (element, ut.b_i, ut.b_j):
            if name is not None and name not in dtd.ele:
                raise PolicyError(f"unknown element type {name!r}", lineno, 1)
        key = (element, ut)
        if key in seen:
            raise PolicyError(f"duplicate annotation for {element} {ut} (first on line {seen[key]})", lineno, 1)
        seen[key] = lineno
        rules.append(Rule(element, ut, parse_value(m.group(3), dtd, lineno, m.start(3) + 1)))
    return UpdateSpec(dtd, tuple(rules))


# ---------------------------------------------------------------------------
# Direct semantics (no compiled predicates)
# ---------------------------------------------------------------------------


def _nearest_annotated(spec: UpdateSpec, tree: XmlTree, n: NodeId, ut: UpdateType):
    for m in [n] + tree.ancestors(n):
        ann = spec.lookup(tree.label(m), ut)
        if ann is not None:
            return m, ann
    return None, None


def _closed_ancestor_fails(spec: UpdateSpec, tree: XmlTree, ev: Evaluator, n: NodeId, ut: UpdateType) -> bool:
    for m in tree.ancestors(n):
        ann = spec.lookup(tree.label(m), ut)
        if ann is not None and ann.downward_closed and not annotation_valid(ann, ev, m):
            return True
    return False


def oracle_updatable(
    spec: UpdateSpec, tree: XmlTree, n: NodeId, ut: UpdateType, evaluator: Evaluator | None = None
) -> bool:
    """Updatability by walking the ancestors directly; unannotated means denied."""
    ev = evaluator or Evaluator(tree)
    m, ann = _nearest_annotated(spec, tree, n, ut)
    if ann is None or not annotation_valid(ann, ev, m):
        return False
    return not _closed_ancestor_fails(spec, tree, ev, n, ut)


def oracle_forbidden(
    spec: UpdateSpec, tree: XmlTree, n: NodeId, ut: UpdateType, evaluator: Evaluator | None = None
) -> bool:
    """Explicit prohibition: the governing annotation is invalid, or a closed ancestor fails."""
    ev = evaluator or Evaluator(tree)
    m, ann = _nearest_annotated(spec, tree, n, ut)
    if ann is not None and not annotation_valid(ann, ev, m):
        return True
    return _closed_ancestor_fails(spec, tree, ev, n, ut)


# ---------------------------------------------------------------------------
# Predicate construction
# ---------------------------------------------------------------------------


class Navigator:
    """How compiled predicates move through the tree.

    This default moves through the document itself. A security view supplies
    a subclass that only ever lands on accessible nodes.
    """

    def self_or_ancestors(self, q: Qualifier) -> XPathExpr:
        return Step(Axis.ANCESTOR_OR_SELF, "*", (q,))

    def ancestors(self, test: str, *quals: Qualifier) -> XPathExpr:
        return Step(Axis.ANCESTOR, test, quals)

    def parent(self, q: Qualifier) -> XPathExpr:
        return Step(Axis.PARENT, "*", (q,))

    def condition(self, q: Qualifier) -> Qualifier:
        return q

    def some_child(self, q: Qualifier) -> Qualifier:
        return Path(Step(Axis.CHILD, "*", (q,)))


DOCUMENT = Navigator()


def _is(label: str, *quals: Qualifier) -> Qualifier:
    return Path(Step(Axis.SELF, label, quals))


def _nearest_then(nav: Navigator, concerned: Qualifier, test: Qualifier) -> Qualifier:
    """``ancestor-or-self::*[concerned][1][test]``."""
    return Path(Filter(PositionFilter(nav.self_or_ancestors(concerned), 1), test))


def build_updatability_parts(
    spec: UpdateSpec, ut: UpdateType, nav: Navigator = DOCUMENT
) -> tuple[Qualifier, Qualifier | None]:
    """The pair (nearest-annotation test, downward-closure test).

    The second part is ``None`` when no downward-closed annotation exists.
    Disjuncts and conjuncts follow the order the annotations were declared.
    """
    rules = spec.s_ut(ut)
    if not rules:
        return FALSE, None
    concerned = any_of([_is(r.element) for r in rules])
    valid, closed = [], []
    for r in rules:
        a = r.annotation
        if a.value is Value.Y:
            valid.append(_is(r.element))
        elif a.qualifier is not None:
            valid.append(_is(r.element, nav.condition(a.qualifier)))
        if a.value is Value.NH:
            closed.append(Not(Path(nav.ancestors(r.element))))
        elif a.value is Value.QH:
            closed.append(Not(Path(nav.ancestors(r.element, Not(nav.condition(a.qualifier))))))
    u1 = _nearest_then(nav, concerned, any_of(valid))
    return u1, (all_of(closed) if closed else None)


def build_updatability(spec: UpdateSpec, ut: UpdateType, nav: Navigator = DOCUMENT) -> Qualifier:
    """Qualifier true exactly at nodes updatable w.r.t. ``ut``; constant false if unannotated."""
    u1, u2 = build_updatability_parts(spec, ut, nav)
    return u1 if u2 is None else And((u1, u2))


def build_forbidden(spec: UpdateSpec, ut: UpdateType, nav: Navigator = DOCUMENT) -> Qualifier:
    """Qualifier true exactly where ``ut`` is explicitly forbidden."""
    rules = spec.s_ut(ut)
    if not rules:
        return FALSE
    concerned = any_of([_is(r.element) for r in rules])
    invalid, closed = [], []
    for r in rules:
        a = r.annotation
        if a.value in (Value.N, Value.NH):
            invalid.append(_is(r.element))
        elif a.qualifier is not None:
            invalid.append(_is(r.element, Not(nav.condition(a.qualifier))))
        if a.value is Value.NH:
            closed.append(Path(nav.ancestors(r.element)))
        elif a.value is Value.QH:
            closed.append(Path(nav.ancestors(r.element, Not(nav.condition(a.qualifier)))))
    parts = [_nearest_then(nav, concerned, any_of(invalid))] if invalid else []
    return any_of(parts + closed)


def build_crp(spec: UpdateSpec, b: str, nav: Navigator = DOCUMENT) -> Qualifier:
    """Conflict between ``insertInto[b]`` and the positional insert kinds."""
    parts: list[Qualifier] = []
    for kind in (UpdateKind.INSERT_AS_FIRST, UpdateKind.INSERT_AS_LAST):
        if spec.s_ut(UpdateType(kind, b)):
            parts.append(build_forbidden(spec, UpdateType(kind, b), nav))
    for kind in (UpdateKind.INSERT_BEFORE, UpdateKind.INSERT_AFTER):
        if spec.s_ut(UpdateType(kind, b)):
            parts.append(nav.some_child(build_forbidden(spec, UpdateType(kind, b), nav)))
    return any_of(parts)


def updatable_nodes(spec: UpdateSpec, tree: XmlTree, ut: UpdateType) -> list[NodeId]:
    """Element nodes satisfying the compiled updatability predicate, in document order."""
    q = build_updatability(spec, ut)
    ev = Evaluator(tree)
    return [n for n in tree.preorder() if not tree.is_text(n) and ev.holds(q, n)]


def spec_from_rules(dtd: Dtd, rules: Iterable[tuple[str, UpdateType | str, Annotation]]) -> UpdateSpec:
    """Build a spec in code: ``spec_from_rules(dtd, [("a", "delete[b]", Y)])``."""
    out = []
    for element, ut, ann in rules:
        out.append(Rule(element, ut if isinstance(ut, UpdateType) else UpdateType.parse(ut), ann))
    return UpdateSpec(dtd, tuple(out))
