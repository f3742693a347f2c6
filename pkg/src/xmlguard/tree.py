"""Ordered labeled XML trees with stable node identities.

Only element and text nodes exist. Text nodes carry the label :data:`TEXT`
and a string value; they are always leaves. Node identifiers are plain
integers handed out by a per-tree counter and never reused, so a node keeps
its identity across every edit that does not remove it.
"""

from __future__ import annotations

import xml.etree.ElementTree as ET
from dataclasses import dataclass
from typing import Iterator, Literal, Sequence, Union
from xml.sax.saxutils import escape

from .errors import DynamicError, XmlFormatError

NodeId = int

#: Label of text (``str``/PCDATA) nodes. Not a valid XML name, so it can never
#: collide with an element type.
TEXT = "#text"


class XmlTree:
    """A mutable-by-copy XML tree.

    Public operations never modify a tree in place except through the private
    ``_`` helpers used by :func:`mutate` on a fresh copy.
    """

    __slots__ = ("_label", "_text", "_children", "_parent", "root", "_next_id", "_order")

    def __init__(self, root_label: str):
        self._label: dict[NodeId, str] = {}
        self._text: dict[NodeId, str] = {}
        self._children: dict[NodeId, list[NodeId]] = {}
        self._parent: dict[NodeId, NodeId | None] = {}
        self._next_id = 0
        self._order: dict[NodeId, int] | None = None
        self.root = self._new_node(root_label, None)

    # -- construction -----------------------------------------------------

    def _new_node(self, label: str, parent: NodeId | None, text: str | None = None) -> NodeId:
        nid = self._next_id
        self._next_id += 1
        self._label[nid] = label
        self._children[nid] = []
        self._parent[nid] = parent
        if text is not None:
            self._text[nid] = text
        self._order = None
        return nid

    def add_element(self, parent: NodeId, label: str) -> NodeId:
        """Append a new element child to ``parent`` and return its id."""
        self._require(parent)
        if self._label[parent] == TEXT:
            raise ValueError("text nodes cannot have children")
        nid = self._new_node(label, parent)
        self._children[parent].append(nid)
        return nid

    def add_text(self, parent: NodeId, value: str) -> NodeId:
        self._require(parent)
        if self._label[parent] == TEXT:
            raise ValueError("text nodes cannot have children")
        nid = self._new_node(TEXT, parent, value)
        self._children[parent].append(nid)
        return nid

    def copy(self) -> XmlTree:
        other = XmlTree.__new__(XmlTree)
        other._label = dict(self._label)
        other._text = dict(self._text)
        other._children = {n: list(c) for n, c in self._children.items()}
        other._parent = dict(self._parent)
        other.root = self.root
        other._next_id = self._next_id
        other._order = self._order
        return other

    # -- queries ----------------------------------------------------------

    def _require(self, n: NodeId) -> None:
        if n not in self._label:
            raise DynamicError(f"unknown node id {n}")

    def __contains__(self, n: object) -> bool:
        return n in self._label

    def __len__(self) -> int:
        return len(self._label)

    def nodes(self) -> list[NodeId]:
        """All node ids in document order."""
        return list(self.preorder())

    def label(self, n: NodeId) -> str:
        return self._label[n]

    def text(self, n: NodeId) -> str:
        return self._text[n]

    def is_text(self, n: NodeId) -> bool:
        return self._label[n] == TEXT

    def children(self, n: NodeId) -> tuple[NodeId, ...]:
        return tuple(self._children[n])

    def element_children(self, n: NodeId) -> list[NodeId]:
        return [c for c in self._children[n] if self._label[c] != TEXT]

    def parent(self, n: NodeId) -> NodeId | None:
        return self._parent[n]

    def ancestors(self, n: NodeId) -> list[NodeId]:
        """Strict ancestors, nearest first."""
        out = []
        p = self._parent[n]
        while p is not None:
            out.append(p)
            p = self._parent[p]
        return out

    def preorder(self, start: NodeId | None = None) -> Iterator[NodeId]:
        stack = [self.root if start is None else start]
        while stack:
            n = stack.pop()
            yield n
            stack.extend(reversed(self._children[n]))

    def descendants(self, n: NodeId) -> Iterator[NodeId]:
        it = self.preorder(n)
        next(it)
        return it

    def document_order(self) -> dict[NodeId, int]:
        """Map from node id to its preorder rank (cached until the next edit)."""
        if self._order is None:
            self._order = {n: i for i, n in enumerate(self.preorder())}
        return self._order

    def text_children(self, n: NodeId) -> list[str]:
        return [self._text[c] for c in self._children[n] if self._label[c] == TEXT]

    def structure(self, start: NodeId | None = None) -> tuple:
        """Hashable snapshot of ids, labels, text and order below ``start``."""
        n = self.root if start is None else start
        if self._label[n] == TEXT:
            return (n, TEXT, self._text[n])
        return (n, self._label[n], tuple(self.structure(c) for c in self._children[n]))

    def shape(self, start: NodeId | None = None) -> tuple:
        """Like :meth:`structure` but without node ids (for isomorphism checks)."""
        n = self.root if start is None else start
        if self._label[n] == TEXT:
            return (TEXT, self._text[n])
        return (self._label[n], tuple(self.shape(c) for c in self._children[n]))

    def check_shape(self) -> None:
        """Assert the tree-shape invariants; raises AssertionError on violation."""
        seen = set()
        for n in self.preorder():
            assert n not in seen, f"node {n} reachable twice"
            seen.add(n)
            for c in self._children[n]:
                assert self._parent[c] == n, f"parent link of {c} broken"
            if self._label[n] == TEXT:
                assert not self._children[n], "text node with children"
                assert n in self._text
        assert self._parent[self.root] is None
        assert seen == set(self._label), "unreachable nodes present"

    def path_of(self, n: NodeId) -> str:
        """Positional path such as ``/hospital[1]/dept[2]/dname[1]``."""
        parts = []
        while True:
            p = self._parent[n]
            label = self._label[n]
            step = "text()" if label == TEXT else label
            if p is None:
                parts.append(f"{step}[1]")
                break
            same = [c for c in self._children[p] if self._label[c] == label]
            parts.append(f"{step}[{same.index(n) + 1}]")
            n = p
        return "/" + "/".join(reversed(parts))

    def induced(self, keep: set[NodeId], new_parent: dict[NodeId, NodeId]) -> XmlTree:
        """Tree over ``keep`` (which must contain the root) with the same ids.

        Each kept non-root node hangs under ``new_parent[n]``; children stay in
        document order.
        """
        if self.root not in keep:
            raise ValueError("the root must be kept")
        out = XmlTree.__new__(XmlTree)
        out._label, out._text, out._children, out._parent = {}, {}, {}, {}
        out.root = self.root
        out._next_id = self._next_id
        out._order = None
        for n in self.preorder():
            if n not in keep:
                continue
            out._label[n] = self._label[n]
            out._children[n] = []
            if n in self._text:
                out._text[n] = self._text[n]
            p = None if n == self.root else new_parent[n]
            out._parent[n] = p
            if p is not None:
                out._children[p].append(n)
        return out

    # -- in-place edits (used only on private copies) ---------------------

    def _graft(self, fragment: XmlTree, src: NodeId, parent: NodeId) -> NodeId:
        label = fragment._label[src]
        nid = self._new_node(label, parent, fragment._text.get(src) if label == TEXT else None)
        for c in fragment._children[src]:
            self._children[nid].append(self._graft(fragment, c, nid))
        return nid

    def _detach(self, n: NodeId) -> None:
        p = self._parent[n]
        if p is not None:
            self._children[p].remove(n)
        for d in list(self.preorder(n)):
            del self._label[d], self._children[d], self._parent[d]
            self._text.pop(d, None)
        self._order = None

    def _insert_at(self, parent: NodeId, index: int, fragments: Sequence[XmlTree]) -> list[NodeId]:
        new = [self._graft(f, f.root, parent) for f in fragments]
        self._children[parent][index:index] = new
        self._order = None
        return new


# ---------------------------------------------------------------------------
# Edits
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DeleteSubtree:
    node: NodeId


@dataclass(frozen=True)
class ReplaceSubtree:
    node: NodeId
    fragments: tuple[XmlTree, ...]


@dataclass(frozen=True)
class InsertChildren:
    node: NodeId
    fragments: tuple[XmlTree, ...]
    position: Union[Literal["first", "last"], int] = "last"


@dataclass(frozen=True)
class InsertSiblings:
    node: NodeId
    fragments: tuple[XmlTree, ...]
    side: Literal["before", "after"] = "after"


TreeEdit = Union[DeleteSubtree, ReplaceSubtree, InsertChildren, InsertSiblings]


def mutate(tree: XmlTree, edit: TreeEdit) -> XmlTree:
    """Apply ``edit`` to a copy of ``tree`` and return the copy.

    The input is never modified, so a raised :class:`DynamicError` leaves the
    caller holding the original tree.
    """
    tree._require(edit.node)
    n = edit.node
    parent = tree.parent(n)
    if isinstance(edit, DeleteSubtree):
        if parent is None:
            raise DynamicError("cannot delete the document root")
        out = tree.copy()
        out._detach(n)
        return out
    if isinstance(edit, ReplaceSubtree):
        if parent is None:
            raise DynamicError("replace target has no parent node")
        out = tree.copy()
        index = out._children[parent].index(n)
        out._detach(n)
        out._insert_at(parent, index, edit.fragments)
        return out
    if isinstance(edit, InsertSiblings):
        if parent is None:
            raise DynamicError(f"insert {edit.side} target has no parent node")
        out = tree.copy()
        index = out._children[parent].index(n) + (1 if edit.side == "after" else 0)
        out._insert_at(parent, index, edit.fragments)
        return out
    if isinstance(edit, InsertChildren):
        if tree.is_text(n):
            raise DynamicError("cannot insert children into a text node")
        size = len(tree._children[n])
        if edit.position == "first":
            index = 0
        elif edit.position == "last":
            index = size
        else:
            if not 0 <= edit.position <= size:
                raise DynamicError(f"child index {edit.position} out of range 0..{size}")
            index = edit.position
        out = tree.copy()
        out._insert_at(n, index, edit.fragments)
        return out
    raise TypeError(f"not a tree edit: {edit!r}")


# ---------------------------------------------------------------------------
# XML input / output
# ---------------------------------------------------------------------------


def _check_name(tag: object) -> str:
    if not isinstance(tag, str):
        raise XmlFormatError("comments and processing instructions are not supported")
    if tag.startswith("{") or ":" in tag:
        raise XmlFormatError(f"namespaced element <{tag}> is not supported")
    return tag


def _load(tree: XmlTree, parent: NodeId, elem: ET.Element) -> None:
    if elem.attrib:
        raise XmlFormatError(f"attributes are not supported (on <{elem.tag}>)")
    kids = list(elem)
    if not kids:
        if elem.text:
            tree.add_text(parent, elem.text)
        return
    if elem.text and elem.text.strip():
        tree.add_text(parent, elem.text)
    for kid in kids:
        nid = tree.add_element(parent, _check_name(kid.tag))
        _load(tree, nid, kid)
        if kid.tail and kid.tail.strip():
            tree.add_text(parent, kid.tail)


def _parse_element(text: str) -> ET.Element:
    parser = ET.XMLParser(target=ET.TreeBuilder(insert_comments=True, insert_pis=True))
    try:
        parser.feed(text)
        return parser.close()
    except ET.ParseError as exc:
        raise XmlFormatError(f"malformed XML: {exc}") from None


def parse_xml(text: str) -> XmlTree:
    """Parse a well-formed XML document made of elements and text only.

    Whitespace-only text between element children is ignored; an element with
    no element children keeps its full text as a single text node.
    """
    if "<!DOCTYPE" in text or "<!ENTITY" in text:
        raise XmlFormatError("DOCTYPE declarations and entities are not supported")
    root = _parse_element(text)
    tree = XmlTree(_check_name(root.tag))
    _load(tree, tree.root, root)
    return tree


def parse_fragments(text: str) -> list[XmlTree]:
    """Parse a sequence of sibling elements such as ``<a/><b>x</b>``."""
    if "<!" in text or "<?" in text:
        raise XmlFormatError("only elements and text are allowed in fragments")
    wrapper = _parse_element(f"<xmlguard-fragment>{text}</xmlguard-fragment>")
    if (wrapper.text and wrapper.text.strip()) or any(
        k.tail and k.tail.strip() for k in wrapper
    ):
        raise XmlFormatError("top-level text is not allowed in a fragment sequence")
    out = []
    for kid in wrapper:
        frag = XmlTree(_check_name(kid.tag))
        _load(frag, frag.root, kid)
        out.append(frag)
    return out


def element(label: str, *children: Union[str, XmlTree]) -> XmlTree:
    """Build a small tree: ``element("a", "text")`` or ``element("a", element("b"))``."""
    tree = XmlTree(label)
    for child in children:
        if isinstance(child, str):
            tree.add_text(tree.root, child)
        else:
            tree._insert_at(tree.root, len(tree._children[tree.root]), [child])
    return tree


def _write(tree: XmlTree, n: NodeId, depth: int, indent: str | None, out: list[str]) -> None:
    pad = "" if indent is None else indent * depth
    label = tree.label(n)
    kids = tree.children(n)
    if not kids:
        out.append(f"{pad}<{label}/>")
        return
    if indent is None or any(tree.is_text(k) for k in kids):
        inner: list[str] = []
        for k in kids:
            if tree.is_text(k):
                inner.append(escape(tree.text(k)))
            else:
                _write(tree, k, 0, None, inner)
        out.append(f"{pad}<{label}>{''.join(inner)}</{label}>")
        return
    out.append(f"{pad}<{label}>")
    for k in kids:
        _write(tree, k, depth + 1, indent, out)
    out.append(f"{pad}</{label}>")


def serialize(tree: XmlTree, indent: str | None = "  ", start: NodeId | None = None) -> str:
    """Deterministic XML text for ``tree``; ``indent=None`` gives a single line."""
    out: list[str] = []
    _write(tree, tree.root if start is None else start, 0, indent, out)
    sep = "" if indent is None else "\n"
    return sep.join(out) + ("\n" if indent is not None else "")

