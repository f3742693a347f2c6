"""Update operations: parsing, policy-driven target rewriting, application.

Surface syntax::

    delete <xpath>
    replace <xpath> with <fragment...>
    insert <fragment...> (into | as first into | as last into | before | after) <xpath>
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field

from .dtd import Dtd, validate
from .errors import DynamicError, FragmentError, UpdateSyntaxError, XmlFormatError, XPathSyntaxError
from .policy import DOCUMENT, Navigator, UpdateKind, UpdateSpec, UpdateType, build_crp, build_updatability
from .tree import (
    DeleteSubtree,
    InsertChildren,
    InsertSiblings,
    NodeId,
    ReplaceSubtree,
    XmlTree,
    mutate,
    parse_fragments,
    serialize,
)
from .xpath import (
    And,
    Axis,
    Evaluator,
    Fragment,
    Not,
    Path,
    Qualifier,
    Step,
    XPathExpr,
    any_of,
    format_xpath,
    parse_xpath,
    with_qualifier,
)


@dataclass(frozen=True)
class UpdateOp:
    kind: UpdateKind
    target: XPathExpr
    source: tuple[XmlTree, ...] = ()
    source_type: str | None = None

    def __post_init__(self) -> None:
        if self.kind is UpdateKind.DELETE:
            if self.source:
                raise ValueError("delete takes no source")
        else:
            if not self.source:
                raise ValueError(f"{self.kind.value} needs at least one source fragment")
            labels = {f.label(f.root) for f in self.source}
            if len(labels) != 1:
                raise UpdateSyntaxError(f"source fragments mix element types {sorted(labels)}")
            (label,) = labels
            if self.source_type is None:
                object.__setattr__(self, "source_type", label)
            elif self.source_type != label:
                raise ValueError("source_type disagrees with the source fragments")

    def __str__(self) -> str:
        return format_update(self)


@dataclass(frozen=True)
class RewrittenOp(UpdateOp):
    """An operation whose target carries the appended safety qualifier."""

    original_target: XPathExpr | None = None


_INSERT_MODES = {
    "into": UpdateKind.INSERT_INTO,
    "as first into": UpdateKind.INSERT_AS_FIRST,
    "as last into": UpdateKind.INSERT_AS_LAST,
    "before": UpdateKind.INSERT_BEFORE,
    "after": UpdateKind.INSERT_AFTER,
}
_MODE_TEXT = {kind: text for text, kind in _INSERT_MODES.items()}
_INSERT_KEYWORD = re.compile(r">\s*(as\s+first\s+into|as\s+last\s+into|into|before|after)\s+")
_REPLACE_KEYWORD = re.compile(r"\s+with\s+(?=<)")


def _target(text: str) -> XPathExpr:
    try:
        return parse_xpath(text.strip(), Fragment.X)
    except FragmentError as exc:
        raise UpdateSyntaxError(f"update targets must be in fragment X: {exc}") from None
    except XPathSyntaxError as exc:
        raise UpdateSyntaxError(f"bad target expression: {exc}") from None


def _source(text: str) -> tuple[XmlTree, ...]:
    try:
        frags = parse_fragments(text)
    except XmlFormatError as exc:
        raise UpdateSyntaxError(f"bad source fragment: {exc}") from None
    if not frags:
        raise UpdateSyntaxError("source must contain at least one element")
    return tuple(frags)


def parse_update(text: str) -> UpdateOp:
    body = text.strip()
    head, _, rest = body.partition(" ")
    rest = rest.strip()
    if head == "delete":
        return UpdateOp(UpdateKind.DELETE, _target(rest))
    if head == "replace":
        parts = _REPLACE_KEYWORD.split(rest, maxsplit=1)
        if len(parts) != 2:
            raise UpdateSyntaxError("expected 'replace <xpath> with <fragment...>'")
        return UpdateOp(UpdateKind.REPLACE, _target(parts[0]), _source(parts[1]))
    if head == "insert":
        # The fragment text may itself contain a keyword, so try every split point.
        last_error: Exception | None = None
        for m in _INSERT_KEYWORD.finditer(rest):
            try:
                source = _source(rest[: m.start() + 1])
                target = _target(rest[m.end() :])
            except UpdateSyntaxError as exc:
                last_error = exc
                continue
            mode = " ".join(m.group(1).split())
            return UpdateOp(_INSERT_MODES[mode], target, source)
        if last_error is not None:
            raise last_error
        raise UpdateSyntaxError(
            "expected 'insert <fragment...> (into|as first into|as last into|before|after) <xpath>'"
        )
    raise UpdateSyntaxError(f"unknown operation {head!r}; expected insert, delete or replace")


def format_update(op: UpdateOp) -> str:
    target = format_xpath(op.target)
    source = "".join(serialize(f, indent=None) for f in op.source)
    if op.kind is UpdateKind.DELETE:
        return f"delete {target}"
    if op.kind is UpdateKind.REPLACE:
        return f"replace {target} with {source}"
    return f"insert {source} {_MODE_TEXT[op.kind]} {target}"


# ---------------------------------------------------------------------------
# Rewriting
# ---------------------------------------------------------------------------


def safety_qualifier(spec: UpdateSpec, op: UpdateOp, nav: Navigator = DOCUMENT) -> Qualifier:
    """The qualifier appended to ``op.target`` so it selects only permitted nodes."""
    kind = op.kind
    if kind in (UpdateKind.DELETE, UpdateKind.REPLACE):
        guards = []
        for a in _removable_types(spec, op):
            ut = UpdateType(kind, a, op.source_type if kind is UpdateKind.REPLACE else None)
            guards.append(Path(Step(Axis.SELF, a, (Path(nav.parent(build_updatability(spec, ut, nav))),))))
        return any_of(guards)
    b = op.source_type
    u = build_updatability(spec, UpdateType(kind, b), nav)
    if kind is UpdateKind.INSERT_INTO:
        return And((u, Not(build_crp(spec, b, nav))))
    return u


def _removable_types(spec: UpdateSpec, op: UpdateOp) -> list[str]:
    """Types ``A`` with a non-empty annotation set for delete[A] / replace[A,B]."""
    out = []
    for ut in spec.update_types():
        if ut.kind is op.kind and (op.kind is UpdateKind.DELETE or ut.b_j == op.source_type):
            if ut.b_i not in out:
                out.append(ut.b_i)
    return out


def rewrite_update(spec: UpdateSpec, op: UpdateOp, nav: Navigator = DOCUMENT) -> RewrittenOp:
    """Append the safety qualifier to the target of ``op``."""
    target = with_qualifier(op.target, safety_qualifier(spec, op, nav))
    return RewrittenOp(op.kind, target, op.source, op.source_type, original_target=op.target)


# ---------------------------------------------------------------------------
# Application
# ---------------------------------------------------------------------------


class ApplyStatus(str, enum.Enum):
    ACCEPTED = "accepted"
    NO_OP = "accepted-no-op"
    DYNAMIC_ERROR = "dynamic-error"
    REJECTED_INVALID = "rejected-invalid"

    @property
    def ok(self) -> bool:
        return self in (ApplyStatus.ACCEPTED, ApplyStatus.NO_OP)


@dataclass(frozen=True)
class ApplyReport:
    status: ApplyStatus
    kind: UpdateKind
    targets: tuple[NodeId, ...] = ()
    inserted: tuple[NodeId, ...] = ()
    denied: int = 0
    messages: tuple[str, ...] = field(default_factory=tuple)

    @property
    def affected(self) -> int:
        return len(self.targets) if self.status is ApplyStatus.ACCEPTED else 0


def _edit(op: UpdateOp, n: NodeId):
    kind = op.kind
    if kind is UpdateKind.DELETE:
        return DeleteSubtree(n)
    if kind is UpdateKind.REPLACE:
        return ReplaceSubtree(n, op.source)
    if kind is UpdateKind.INSERT_INTO or kind is UpdateKind.INSERT_AS_LAST:
        return InsertChildren(n, op.source, "last")
    if kind is UpdateKind.INSERT_AS_FIRST:
        return InsertChildren(n, op.source, "first")
    side = "before" if kind is UpdateKind.INSERT_BEFORE else "after"
    return InsertSiblings(n, op.source, side)


def apply_update(dtd: Dtd, tree: XmlTree, op: UpdateOp) -> tuple[XmlTree, ApplyReport]:
    """Evaluate the target at the root, edit, revalidate.

    Whenever the status is not ``ok`` the input tree itself is returned.
    ``insertInto`` appends as last child.
    """
    ev = Evaluator(tree)
    targets = ev.select(op.target, tree.root)
    denied = 0
    original = getattr(op, "original_target", None)
    if original is not None:
        denied = len(set(ev.select(original, tree.root)) - set(targets))
    base = dict(kind=op.kind, targets=tuple(targets), denied=denied)
    if not targets:
        return tree, ApplyReport(ApplyStatus.NO_OP, **base)
    if op.kind is not UpdateKind.DELETE and len(targets) > 1:
        msg = f"{op.kind.value} needs exactly one target node, got {len(targets)}"
        return tree, ApplyReport(ApplyStatus.DYNAMIC_ERROR, **base, messages=(msg,))
    out = tree
    try:
        for n in targets:
            if n in out:  # an earlier delete may have removed it with an ancestor
                out = mutate(out, _edit(op, n))
    except DynamicError as exc:
        return tree, ApplyReport(ApplyStatus.DYNAMIC_ERROR, **base, messages=(str(exc),))
    inserted = ()
    if op.kind is not UpdateKind.DELETE:
        inserted = tuple(sorted(set(out.nodes()) - set(tree.nodes()), key=out.document_order().__getitem__))
        inserted = tuple(n for n in inserted if out.parent(n) not in inserted)
    report = validate(out, dtd)
    if not report.conforming:
        msgs = tuple(f"{v.condition}: {v.message}" for v in report.violations)
        return tree, ApplyReport(ApplyStatus.REJECTED_INVALID, **base, inserted=inserted, messages=msgs)
    return out, ApplyReport(ApplyStatus.ACCEPTED, **base, inserted=inserted)
