"""Evaluation of path expressions and qualifiers over an :class:`XmlTree`.

Ordering rules:

* a step yields nodes in axis order: document order for ``self``/``child``/
  ``descendant*``, nearest-first for ``parent``/``ancestor*``;
* qualifiers and ``[k]`` attached to a step see that axis order, so
  ``ancestor-or-self::*[q][1]`` picks the nearest node satisfying ``q``;
* ``p/p'`` returns document order (as in XPath 1.0);
* ``p | p'`` concatenates and drops repeats, keeping the first occurrence.

Only element nodes are ever selected; text nodes are reached through
``text()='c'`` comparisons alone.
"""

from __future__ import annotations

from ..tree import TEXT, NodeId, XmlTree
from .ast import (
    And,
    Axis,
    Filter,
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
)


class Evaluator:
    """Evaluates expressions over one tree, memoizing qualifier results.

    The tree must not change while an instance is in use.
    """

    def __init__(self, tree: XmlTree):
        self.tree = tree
        self._order = tree.document_order()
        self._memo: dict[tuple[int, NodeId], bool] = {}
        self._pinned: dict[int, Qualifier] = {}

    # -- paths ------------------------------------------------------------

    def _axis(self, axis: Axis, n: NodeId) -> list[NodeId]:
        t = self.tree
        if axis is Axis.SELF:
            return [n]
        if axis is Axis.CHILD:
            return list(t.children(n))
        if axis is Axis.DESCENDANT:
            return list(t.descendants(n))
        if axis is Axis.DESCENDANT_OR_SELF:
            return list(t.preorder(n))
        if axis is Axis.PARENT:
            p = t.parent(n)
            return [] if p is None else [p]
        if axis is Axis.ANCESTOR:
            return t.ancestors(n)
        if axis is Axis.ANCESTOR_OR_SELF:
            return [n] + t.ancestors(n)
        raise ValueError(f"unknown axis {axis!r}")

    def _step(self, s: Step, n: NodeId) -> list[NodeId]:
        label = self.tree.label
        test = s.test
        out = [
            m
            for m in self._axis(s.axis, n)
            if (label(m) != TEXT if test == "*" else label(m) == test)
        ]
        for q in s.qualifiers:
            out = [m for m in out if self.holds(q, m)]
        return out

    def select(self, expr: XPathExpr, n: NodeId) -> list[NodeId]:
        if isinstance(expr, Step):
            return self._step(expr, n)
        if isinstance(expr, Slash):
            seen: set[NodeId] = set()
            for m in self.select(expr.left, n):
                seen.update(self.select(expr.right, m))
            return sorted(seen, key=self._order.__getitem__)
        if isinstance(expr, Union):
            out = self.select(expr.left, n)
            seen = set(out)
            for m in self.select(expr.right, n):
                if m not in seen:
                    seen.add(m)
                    out.append(m)
            return out
        if isinstance(expr, PositionFilter):
            got = self.select(expr.path, n)
            return got[expr.position - 1 : expr.position]
        if isinstance(expr, Filter):
            return [m for m in self.select(expr.path, n) if self.holds(expr.qualifier, m)]
        raise TypeError(f"not a path expression: {expr!r}")

    # -- qualifiers -------------------------------------------------------

    def holds(self, q: Qualifier, n: NodeId) -> bool:
        key = (id(q), n)
        hit = self._memo.get(key)
        if hit is not None:
            return hit
        value = self._holds(q, n)
        self._memo[key] = value
        self._pinned[id(q)] = q  # keeps id(q) from being reused while memoized
        return value

    def _holds(self, q: Qualifier, n: NodeId) -> bool:
        if isinstance(q, Path):
            return bool(self.select(q.path, n))
        if isinstance(q, And):
            return all(self.holds(i, n) for i in q.items)
        if isinstance(q, Or):
            return any(self.holds(i, n) for i in q.items)
        if isinstance(q, Not):
            return not self.holds(q.operand, n)
        if isinstance(q, TextEquals):
            t = self.tree
            return any(q.value in t.text_children(m) for m in self.select(q.path, n))
        if isinstance(q, NodeEquals):
            label = self.tree.label(n)
            if label == TEXT or (q.label != "*" and q.label != label):
                return False
            return self.select(q.path, n) == [n]
        raise TypeError(f"not a qualifier: {q!r}")


def eval_xpath(expr: XPathExpr, tree: XmlTree, context: NodeId | None = None) -> list[NodeId]:
    """Nodes selected by ``expr`` from ``context`` (the root by default)."""
    n = tree.root if context is None else context
    if n not in tree:
        raise ValueError(f"context node {n} is not in the tree")
    return Evaluator(tree).select(expr, n)


def eval_qualifier(q: Qualifier, tree: XmlTree, context: NodeId) -> bool:
    if context not in tree:
        raise ValueError(f"context node {context} is not in the tree")
    return Evaluator(tree).holds(q, context)
