"""Read-access specifications, virtual views and view-to-document rewriting.

An access specification annotates ``(parent type, child type)`` edges with
the same values as update policies. A ``[Q]`` value is checked at the child
node. The root is always accessible; an unannotated child inherits its
parent's accessibility; ``Nh`` and a failed ``[Q]h`` hide the whole subtree
below, with no overriding.

Access file format::

    access hospital/dept = [child::dname/text()='cardiology']h
    access dept/clinical = Nh

Queries written against the view are translated into document queries that
only ever select or inspect accessible nodes. A view child step becomes a
search for accessible descendants whose nearest accessible ancestor is the
context node.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field, replace

from .dtd import Alt, ContentModel, Dtd, Epsilon, Name, Seq, Star, Str, model_names
from .errors import PolicyError, UnsupportedQueryError
from .policy import Annotation, Navigator, UpdateSpec, Value, _strip_comment, annotation_valid, parse_value
from .rewriter import RewrittenOp, UpdateOp, rewrite_update
from .tree import NodeId, XmlTree
from .xpath import (
    TRUE,
    And,
    Axis,
    Evaluator,
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
    all_of,
    any_of,
    fragment_of,
)

# ---------------------------------------------------------------------------
# Access specifications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AccessRule:
    parent: str
    child: str
    annotation: Annotation

    def __str__(self) -> str:
        return f"access {self.parent}/{self.child} = {self.annotation}"


@dataclass(frozen=True)
class AccessSpec:
    dtd: Dtd
    rules: tuple[AccessRule, ...] = ()
    _index: dict[tuple[str, str], Annotation] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        for r in self.rules:
            if r.parent not in self.dtd.ele:
                raise PolicyError(f"unknown element type {r.parent!r} in {r}")
            if r.child not in self.dtd.child_types(r.parent):
                raise PolicyError(f"{r.child!r} does not occur in the content model of {r.parent!r}")
            if (r.parent, r.child) in self._index:
                raise PolicyError(f"duplicate access annotation for {r.parent}/{r.child}")
            self._index[(r.parent, r.child)] = r.annotation

    def __len__(self) -> int:
        return len(self.rules)

    def lookup(self, parent: str, child: str) -> Annotation | None:
        return self._index.get((parent, child))

    def to_text(self) -> str:
        return "".join(f"{r}\n" for r in self.rules)


_ACCESS = re.compile(r"access\s+(\S+?)\s*/\s*(\S+)\s*=\s*(.+)")


def parse_access(text: str, dtd: Dtd) -> AccessSpec:
    rules: list[AccessRule] = []
    seen: dict[tuple[str, str], int] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        m = _ACCESS.fullmatch(line)
        if not m:
            raise PolicyError("expected 'access <Parent>/<Child> = <value>'", lineno, 1)
        parent, child = m.group(1), m.group(2)
        for name in (parent, child):
            if name not in dtd.ele:
                raise PolicyError(f"unknown element type {name!r}", lineno, 1)
        if child not in dtd.child_types(parent):
            raise PolicyError(f"{child!r} does not occur in the content model of {parent!r}", lineno, 1)
        if (parent, child) in seen:
            raise PolicyError(f"duplicate annotation for {parent}/{child} (first on line {seen[parent, child]})", lineno, 1)
        seen[parent, child] = lineno
        rules.append(AccessRule(parent, child, parse_value(m.group(3), dtd, lineno, m.start(3) + 1)))
    return AccessSpec(dtd, tuple(rules))


def _edge(spec: AccessSpec, tree: XmlTree, n: NodeId) -> Annotation | None:
    p = tree.parent(n)
    return None if p is None else spec.lookup(tree.label(p), tree.label(n))


def oracle_accessible(spec: AccessSpec, tree: XmlTree, n: NodeId, evaluator: Evaluator | None = None) -> bool:
    """Accessibility by walking the ancestors of ``n`` directly."""
    ev = evaluator or Evaluator(tree)
    for m in tree.ancestors(n):
        ann = _edge(spec, tree, m)
        if ann is not None and ann.downward_closed and not annotation_valid(ann, ev, m):
            return False
    for m in [n] + tree.ancestors(n):
        ann = _edge(spec, tree, m)
        if ann is not None:
            return annotation_valid(ann, ev, m)
    return True


def accessible_nodes(spec: AccessSpec, tree: XmlTree) -> set[NodeId]:
    """Accessible element nodes, computed top-down in one pass."""
    ev = Evaluator(tree)
    acc: dict[NodeId, bool] = {tree.root: True}
    sealed: dict[NodeId, bool] = {tree.root: False}  # a failed closed annotation at or above
    for n in tree.preorder():
        if tree.is_text(n) or n == tree.root:
            continue
        p = tree.parent(n)
        ann = _edge(spec, tree, n)
        if sealed[p]:
            acc[n], sealed[n] = False, True
        elif ann is None:
            acc[n], sealed[n] = acc[p], False
        else:
            ok = annotation_valid(ann, ev, n)
            acc[n], sealed[n] = ok, ann.downward_closed and not ok
    return {n for n, ok in acc.items() if ok}


# ---------------------------------------------------------------------------
# Accessibility predicates
# ---------------------------------------------------------------------------


def _edge_is(parent: str, child: str, *quals: Qualifier) -> Qualifier:
    """``self::child[parent::parent][q...]``."""
    return Path(Step(Axis.SELF, child, (Path(Step(Axis.PARENT, parent)),) + quals))


def build_accessibility(spec: AccessSpec) -> Qualifier:
    """Qualifier true exactly at accessible element nodes."""
    if not spec.rules:
        return TRUE
    concerned = any_of([_edge_is(r.parent, r.child) for r in spec.rules])
    valid, closed = [], []
    for r in spec.rules:
        a = r.annotation
        if a.value is Value.Y:
            valid.append(_edge_is(r.parent, r.child))
        elif a.qualifier is not None:
            valid.append(_edge_is(r.parent, r.child, a.qualifier))
        if a.value is Value.NH:
            closed.append(Not(Path(Step(Axis.ANCESTOR, r.child, (Path(Step(Axis.PARENT, r.parent)),)))))
        elif a.value is Value.QH:
            guard = (Path(Step(Axis.PARENT, r.parent)), Not(a.qualifier))
            closed.append(Not(Path(Step(Axis.ANCESTOR, r.child, guard))))
    unannotated = Not(Path(Step(Axis.ANCESTOR_OR_SELF, "*", (concerned,))))
    if valid:
        nearest = Path(Filter(PositionFilter(Step(Axis.ANCESTOR_OR_SELF, "*", (concerned,)), 1), any_of(valid)))
        first = Or((unannotated, nearest))
    else:
        first = unannotated
    return all_of([first] + closed)


def build_accessible_ancestors(spec: AccessSpec, acc: Qualifier | None = None) -> XPathExpr:
    """``ancestor::*[acc]``, nearest first."""
    return Step(Axis.ANCESTOR, "*", (build_accessibility(spec) if acc is None else acc,))


# ---------------------------------------------------------------------------
# Views
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ViewMapping:
    accessible: frozenset[NodeId]
    view_parent: dict[NodeId, NodeId | None]


def extract_view(spec: AccessSpec, tree: XmlTree) -> tuple[XmlTree, ViewMapping]:
    """Materialize the accessible part; node ids are the original ones."""
    acc = accessible_nodes(spec, tree)
    anchor = {tree.root: tree.root}  # nearest accessible ancestor-or-self
    parent: dict[NodeId, NodeId | None] = {tree.root: None}
    keep = set(acc)
    for n in tree.preorder():
        if n == tree.root:
            continue
        p = tree.parent(n)
        if tree.is_text(n):
            if p in acc:
                keep.add(n)
                parent[n] = p
            continue
        anchor[n] = n if n in acc else anchor[p]
        if n in acc:
            parent[n] = anchor[p]
    mapping = ViewMapping(frozenset(acc), {n: parent[n] for n in acc})
    return tree.induced(keep, parent), mapping


# ---------------------------------------------------------------------------
# View schema
# ---------------------------------------------------------------------------


def _revealed_below(spec: AccessSpec, hidden: str) -> list[str]:
    """Types that may surface as view children in place of a hidden, unsealed node."""
    dtd = spec.dtd
    found: list[str] = []
    seen = {hidden}
    stack = [hidden]
    while stack:
        x = stack.pop()
        for c in dtd.child_types(x):
            ann = spec.lookup(x, c)
            value = None if ann is None else ann.value
            if value in (Value.Y, Value.Q, Value.QH) and c not in found:
                found.append(c)
            if value in (None, Value.N, Value.Q) and c not in seen:
                seen.add(c)
                stack.append(c)
    return sorted(found)


def _hidden_stand_in(spec: AccessSpec, b: str) -> ContentModel:
    revealed = _revealed_below(spec, b)
    if not revealed:
        return Epsilon()
    alt: ContentModel = Name(revealed[0])
    for name in revealed[1:]:
        alt = Alt(alt, Name(name))
    return Star(alt)


def _view_model(spec: AccessSpec, a: str, m: ContentModel) -> ContentModel:
    if isinstance(m, (Str, Epsilon)):
        return m
    if isinstance(m, Name):
        ann = spec.lookup(a, m.name)
        value = None if ann is None else ann.value
        if value in (None, Value.Y):
            return m
        if value is Value.N:
            return _hidden_stand_in(spec, m.name)
        if value is Value.NH:
            return Epsilon()
        if value is Value.Q:
            return Alt(m, _hidden_stand_in(spec, m.name))
        return Alt(m, Epsilon())
    if isinstance(m, Seq):
        return Seq(_view_model(spec, a, m.left), _view_model(spec, a, m.right))
    if isinstance(m, Alt):
        return Alt(_view_model(spec, a, m.left), _view_model(spec, a, m.right))
    return Star(_view_model(spec, a, m.inner))


def derive_view_dtd(spec: AccessSpec) -> Dtd:
    """Schema of the visible data.

    A hidden child is replaced by the star of everything that may surface
    beneath it, so the schema is wider than the exact view language but
    accepts every view.
    """
    dtd = spec.dtd
    rg: dict[str, ContentModel] = {}
    todo = [dtd.root]
    while todo:
        a = todo.pop()
        if a in rg:
            continue
        rg[a] = _view_model(spec, a, dtd.rg[a])
        todo.extend(n for n in model_names(rg[a]) if n not in rg)
    return Dtd(frozenset(rg), rg, dtd.root)


@dataclass(frozen=True)
class SecurityView:
    dtd_view: Dtd
    spec: AccessSpec
    acc: Qualifier

    @classmethod
    def of(cls, spec: AccessSpec) -> SecurityView:
        return cls(derive_view_dtd(spec), spec, build_accessibility(spec))


# ---------------------------------------------------------------------------
# Query rewriting
# ---------------------------------------------------------------------------

_DOWNWARD = (Axis.SELF, Axis.CHILD, Axis.DESCENDANT, Axis.DESCENDANT_OR_SELF)

Chain = tuple[Step, ...]


def _chains(expr: XPathExpr) -> list[list[Chain]]:
    """Normal form: a concatenation of groups, each group a document-ordered union of chains."""
    if isinstance(expr, Step):
        if expr.axis not in _DOWNWARD:
            raise UnsupportedQueryError(f"axis {expr.axis.value} has no view translation")
        return [[(expr,)]]
    if isinstance(expr, Union):
        return _chains(expr.left) + _chains(expr.right)
    if isinstance(expr, Filter):
        return [[_add_final(c, expr.qualifier) for c in g] for g in _chains(expr.path)]
    if isinstance(expr, Slash):
        lefts = [c for g in _chains(expr.left) for c in g]
        rights = [c for g in _chains(expr.right) for c in g]
        return [[l + r for l in lefts for r in rights]]
    if isinstance(expr, PositionFilter):
        raise UnsupportedQueryError("position filters have no view translation")
    raise TypeError(f"not a path expression: {expr!r}")


def _add_final(chain: Chain, q: Qualifier) -> Chain:
    last = chain[-1]
    return chain[:-1] + (Step(last.axis, last.test, last.qualifiers + (q,)),)


_IS_ROOT = Not(Path(Step(Axis.PARENT, "*")))


class ViewRewriter:
    """Translates fragment-X view queries into document queries."""

    def __init__(self, spec: AccessSpec):
        self.spec = spec
        self.acc = build_accessibility(spec)
        self.view_parent: XPathExpr = PositionFilter(Step(Axis.ANCESTOR, "*", (self.acc,)), 1)

    # -- qualifiers -------------------------------------------------------

    def qualifier(self, q: Qualifier) -> Qualifier:
        """Rewrite ``q`` for evaluation at an accessible document node."""
        if isinstance(q, Path):
            return any_of([self._exists(c) for g in _chains(q.path) for c in g])
        if isinstance(q, TextEquals):
            final = TextEquals(Step(Axis.SELF, "*"), q.value)
            return any_of([self._exists(c, final) for g in _chains(q.path) for c in g])
        if isinstance(q, And):
            return And(tuple(self.qualifier(i) for i in q.items))
        if isinstance(q, Or):
            return Or(tuple(self.qualifier(i) for i in q.items))
        if isinstance(q, Not):
            return Not(self.qualifier(q.operand))
        if isinstance(q, NodeEquals):
            raise UnsupportedQueryError("node comparisons have no view translation")
        raise TypeError(f"not a qualifier: {q!r}")

    def child_exists(self, test: str, quals: tuple[Qualifier, ...]) -> Qualifier:
        """Some view child matches: the first view parent of the matching
        accessible descendants, in document order, is the context node."""
        found = Step(Axis.DESCENDANT, test, (self.acc,) + quals)
        return NodeEquals(PositionFilter(Slash(found, self.view_parent), 1), "*")

    def _exists(self, chain: Chain, final: Qualifier | None = None) -> Qualifier:
        inner: Qualifier | None = final
        for s in reversed(chain):
            quals = tuple(self.qualifier(q) for q in s.qualifiers)
            if inner is not None:
                quals += (inner,)
            if s.axis is Axis.CHILD:
                inner = self.child_exists(s.test, quals)
            elif s.axis is Axis.SELF:
                inner = Path(Step(Axis.SELF, s.test, quals))
            else:
                inner = Path(Step(s.axis, s.test, (self.acc,) + quals))
        return inner

    # -- paths ------------------------------------------------------------

    def query(self, expr: XPathExpr) -> XPathExpr:
        if fragment_of(expr) > Fragment.X:
            raise UnsupportedQueryError("only fragment X queries can be posed over a view")
        parts = []
        for g in _chains(expr):
            translated = [self._chain(c) for c in g]
            if len(translated) == 1:
                parts.append(translated[0])
            else:
                merged = translated[0]
                for t in translated[1:]:
                    merged = Union(merged, t)
                parts.append(Slash(Step(Axis.SELF, "*"), merged))  # restores document order
        out = parts[0]
        for p in parts[1:]:
            out = Union(out, p)
        return out

    def _chain(self, chain: Chain) -> XPathExpr:
        """Chain evaluated from the root, as a single backward-checked step."""
        rw = [tuple(self.qualifier(q) for q in s.qualifiers) for s in chain]
        if all(s.axis is Axis.SELF for s in chain):
            out: XPathExpr = Step(Axis.SELF, chain[0].test, rw[0])
            for s, quals in zip(chain[1:], rw[1:]):
                out = Slash(out, Step(Axis.SELF, s.test, quals))
            return out
        back: Qualifier | None = None
        for i, s in enumerate(chain):
            prev = None if i == 0 else (chain[i - 1].test, rw[i - 1], back)
            back = self._predecessor(s.axis, prev)
        quals = (self.acc,) + rw[-1] + ((back,) if back is not None else ())
        return Step(Axis.DESCENDANT_OR_SELF, chain[-1].test, quals)

    def _predecessor(self, axis: Axis, prev) -> Qualifier | None:
        """Qualifier saying the node reached by ``axis`` comes from a node matching ``prev``.

        ``prev`` is ``(test, qualifiers, certificate)`` of the previous step, or
        ``None`` when the previous node is the root. ``None`` means no check.
        """
        if prev is None:
            if axis is Axis.CHILD:
                return Path(Filter(self.view_parent, _IS_ROOT))
            if axis is Axis.DESCENDANT:
                return Path(Step(Axis.ANCESTOR, self.spec.dtd.root, (_IS_ROOT,)))
            if axis is Axis.SELF:
                return _IS_ROOT
            return None
        test, quals, back = prev
        quals = quals + ((back,) if back is not None else ())
        if axis is Axis.CHILD:
            return Path(Filter(self.view_parent, Path(Step(Axis.SELF, test, quals))))
        if axis is Axis.SELF:
            return Path(Step(Axis.SELF, test, quals))
        up = Axis.ANCESTOR if axis is Axis.DESCENDANT else Axis.ANCESTOR_OR_SELF
        return Path(Step(up, test, (self.acc,) + quals))


def rewrite_query(spec: AccessSpec, q: XPathExpr) -> XPathExpr:
    """Document query selecting, from the root, what ``q`` selects on the view."""
    return ViewRewriter(spec).query(q)


def rewrite_view_qualifier(spec: AccessSpec, q: Qualifier) -> Qualifier:
    """Document qualifier that holds at an accessible node iff ``q`` holds there in the view."""
    return ViewRewriter(spec).qualifier(q)


# ---------------------------------------------------------------------------
# Secure updates
# ---------------------------------------------------------------------------


class ViewNavigator(Navigator):
    """Moves between accessible nodes only, so compiled update predicates
    read the view and never the hidden part of the document."""

    def __init__(self, rewriter: ViewRewriter):
        self.rw = rewriter

    def self_or_ancestors(self, q: Qualifier) -> XPathExpr:
        return Step(Axis.ANCESTOR_OR_SELF, "*", (self.rw.acc, q))

    def ancestors(self, test: str, *quals: Qualifier) -> XPathExpr:
        return Step(Axis.ANCESTOR, test, (self.rw.acc,) + quals)

    def parent(self, q: Qualifier) -> XPathExpr:
        return Filter(self.rw.view_parent, q)

    def condition(self, q: Qualifier) -> Qualifier:
        return self.rw.qualifier(q)

    def some_child(self, q: Qualifier) -> Qualifier:
        return self.rw.child_exists("*", (q,))


def secure_update(access: AccessSpec, upd: UpdateSpec, op: UpdateOp) -> RewrittenOp:
    """Rewrite a view-level operation for safe execution on the document.

    The target is first translated from the view, then guarded with update
    predicates that navigate the view as well, so hidden nodes influence
    neither which nodes are selected nor whether they are updatable.
    """
    rw = ViewRewriter(access)
    target = rw.query(op.target)
    out = rewrite_update(upd, replace(op, target=target), ViewNavigator(rw))
    return replace(out, original_target=target)
