"""Schemas: element types with regular-expression content models.

Source format, one statement per ``;``::

    root hospital;
    hospital -> (dept)*;
    dname -> STR;
    leaf -> EPSILON;

``,`` is sequence, ``|`` alternation, postfix ``*`` Kleene star. ``#`` starts a
comment that runs to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, Iterator, Union

from .errors import DtdError, DtdSyntaxError
from .tree import TEXT, NodeId, XmlTree

# ---------------------------------------------------------------------------
# Content models
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Str:
    def __str__(self) -> str:
        return "STR"


@dataclass(frozen=True)
class Epsilon:
    def __str__(self) -> str:
        return "EPSILON"


@dataclass(frozen=True)
class Name:
    name: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class Seq:
    left: ContentModel
    right: ContentModel

    def __str__(self) -> str:
        return f"{_group(self.left, Seq)}, {_group(self.right, Seq, right=True)}"


@dataclass(frozen=True)
class Alt:
    left: ContentModel
    right: ContentModel

    def __str__(self) -> str:
        return f"{_group(self.left, Alt)} | {_group(self.right, Alt, right=True)}"


@dataclass(frozen=True)
class Star:
    inner: ContentModel

    def __str__(self) -> str:
        return f"({self.inner})*"


ContentModel = Union[Str, Epsilon, Name, Seq, Alt, Star]


def _group(m: ContentModel, parent: type, right: bool = False) -> str:
    if isinstance(m, (Seq, Alt)) and (type(m) is not parent or right):
        return f"({m})"
    return str(m)


def model_names(m: ContentModel) -> Iterator[str]:
    """Element-type names referenced by a content model (may repeat)."""
    if isinstance(m, Name):
        yield m.name
    elif isinstance(m, (Seq, Alt)):
        yield from model_names(m.left)
        yield from model_names(m.right)
    elif isinstance(m, Star):
        yield from model_names(m.inner)


def model_size(m: ContentModel) -> int:
    if isinstance(m, (Seq, Alt)):
        return 1 + model_size(m.left) + model_size(m.right)
    if isinstance(m, Star):
        return 1 + model_size(m.inner)
    return 1


def _mentions_str(m: ContentModel) -> bool:
    if isinstance(m, Str):
        return True
    if isinstance(m, (Seq, Alt)):
        return _mentions_str(m.left) or _mentions_str(m.right)
    if isinstance(m, Star):
        return _mentions_str(m.inner)
    return False


# ---------------------------------------------------------------------------
# Automata
# ---------------------------------------------------------------------------


class Automaton:
    """DFA built by subset construction from a Thompson NFA."""

    def __init__(self, model: ContentModel):
        self._edges: list[list[tuple[str | None, int]]] = []
        start, accept = self._build(model)
        self._nfa_accept = accept
        self.transitions: dict[int, dict[str, int]] = {}
        self.accepting: set[int] = set()
        self._determinize(start)

    def _state(self) -> int:
        self._edges.append([])
        return len(self._edges) - 1

    def _build(self, m: ContentModel) -> tuple[int, int]:
        s, t = self._state(), self._state()
        if isinstance(m, Epsilon):
            self._edges[s].append((None, t))
        elif isinstance(m, Str):
            self._edges[s].append((TEXT, t))
        elif isinstance(m, Name):
            self._edges[s].append((m.name, t))
        elif isinstance(m, Seq):
            a0, a1 = self._build(m.left)
            b0, b1 = self._build(m.right)
            self._edges[s].append((None, a0))
            self._edges[a1].append((None, b0))
            self._edges[b1].append((None, t))
        elif isinstance(m, Alt):
            for part in (m.left, m.right):
                p0, p1 = self._build(part)
                self._edges[s].append((None, p0))
                self._edges[p1].append((None, t))
        elif isinstance(m, Star):
            i0, i1 = self._build(m.inner)
            self._edges[s] += [(None, i0), (None, t)]
            self._edges[i1] += [(None, i0), (None, t)]
        else:
            raise TypeError(f"not a content model: {m!r}")
        return s, t

    def _closure(self, states: Iterable[int]) -> frozenset[int]:
        stack = list(states)
        seen = set(stack)
        while stack:
            for sym, nxt in self._edges[stack.pop()]:
                if sym is None and nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return frozenset(seen)

    def _determinize(self, start: int) -> None:
        ids: dict[frozenset[int], int] = {}
        first = self._closure([start])
        ids[first] = 0
        work = [first]
        while work:
            cur = work.pop()
            cid = ids[cur]
            self.transitions[cid] = {}
            if self._nfa_accept in cur:
                self.accepting.add(cid)
            moves: dict[str, set[int]] = {}
            for st in cur:
                for sym, nxt in self._edges[st]:
                    if sym is not None:
                        moves.setdefault(sym, set()).add(nxt)
            for sym, targets in moves.items():
                dest = self._closure(targets)
                if dest not in ids:
                    ids[dest] = len(ids)
                    work.append(dest)
                self.transitions[cid][sym] = ids[dest]
        del self._edges

    def accepts(self, word: Iterable[str]) -> bool:
        state = 0
        for sym in word:
            nxt = self.transitions[state].get(sym)
            if nxt is None:
                return False
            state = nxt
        return state in self.accepting


# ---------------------------------------------------------------------------
# DTD
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Dtd:
    ele: frozenset[str]
    rg: dict[str, ContentModel]
    root: str
    _automata: dict[str, Automaton] = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if self.root not in self.ele:
            raise DtdError(f"root type {self.root!r} has no production")
        for name, model in self.rg.items():
            if name not in self.ele:
                raise DtdError(f"production for undeclared type {name!r}")
            for ref in model_names(model):
                if ref not in self.ele:
                    raise DtdError(f"type {name!r} references unknown element type {ref!r}")
            if _mentions_str(model) and not isinstance(model, Str):
                raise DtdError(f"mixed content in {name!r}: STR must be the whole content model")
        missing = self.ele - set(self.rg)
        if missing:
            raise DtdError(f"no production for {sorted(missing)}")

    def automaton(self, name: str) -> Automaton:
        if name not in self._automata:
            self._automata[name] = Automaton(self.rg[name])
        return self._automata[name]

    def child_types(self, name: str) -> list[str]:
        """Distinct element types occurring in ``rg(name)``, in first-mention order."""
        return list(dict.fromkeys(model_names(self.rg[name])))

    @cached_property
    def is_recursive(self) -> bool:
        state: dict[str, int] = {}

        def visit(a: str) -> bool:
            state[a] = 1
            for b in self.child_types(a):
                if state.get(b) == 1 or (b not in state and visit(b)):
                    return True
            state[a] = 2
            return False

        return any(visit(a) for a in sorted(self.ele) if a not in state)

    def to_text(self) -> str:
        lines = [f"root {self.root};"]
        for name in sorted(self.ele):
            lines.append(f"{name} -> {self.rg[name]};")
        return "\n".join(lines) + "\n"


_TOKEN = re.compile(
    r"""(?P<ws>[ \t\r]+)|(?P<nl>\n)|(?P<comment>\#[^\n]*)
      |(?P<arrow>->)|(?P<punct>[;,|*()])
      |(?P<name>[A-Za-z_](?:[\w.]|-(?!>))*)
      |(?P<bad>.)""",
    re.VERBOSE,
)


def _tokens(text: str) -> list[tuple[str, str, int, int]]:
    out = []
    line, col0 = 1, 0
    for m in _TOKEN.finditer(text):
        kind = m.lastgroup
        col = m.start() - col0 + 1
        if kind == "nl":
            line += 1
            col0 = m.end()
        elif kind == "bad":
            raise DtdSyntaxError(f"unexpected character {m.group()!r}", line, col)
        elif kind not in ("ws", "comment"):
            value = m.group()
            out.append((kind if kind != "punct" else value, value, line, col))
    out.append(("eof", "", line, 0))
    return out


class _DtdParser:
    def __init__(self, text: str):
        self.toks = _tokens(text)
        self.i = 0

    def peek(self) -> tuple[str, str, int, int]:
        return self.toks[self.i]

    def take(self, kind: str, what: str | None = None) -> str:
        tok = self.toks[self.i]
        if tok[0] != kind:
            raise DtdSyntaxError(f"expected {what or kind!r}, found {tok[1] or 'end of input'!r}", tok[2], tok[3])
        self.i += 1
        return tok[1]

    def parse(self) -> Dtd:
        root = None
        rg: dict[str, ContentModel] = {}
        while self.peek()[0] != "eof":
            kind, value, line, col = self.peek()
            name = self.take("name", "element type or 'root'")
            if name == "root" and self.peek()[0] == "name":
                if root is not None:
                    raise DtdError(f"second root declaration at line {line}")
                root = self.take("name")
            else:
                self.take("arrow", "->")
                if name in rg:
                    raise DtdError(f"duplicate production for {name!r} at line {line}")
                rg[name] = self.alt()
            self.take(";", ";")
        if root is None:
            raise DtdError("missing 'root <name>;' declaration")
        return Dtd(frozenset(rg), rg, root)

    def alt(self) -> ContentModel:
        m = self.seq()
        while self.peek()[0] == "|":
            self.i += 1
            m = Alt(m, self.seq())
        return m

    def seq(self) -> ContentModel:
        m = self.postfix()
        while self.peek()[0] == ",":
            self.i += 1
            m = Seq(m, self.postfix())
        return m

    def postfix(self) -> ContentModel:
        m = self.atom()
        while self.peek()[0] == "*":
            self.i += 1
            m = Star(m)
        return m

    def atom(self) -> ContentModel:
        kind, value, line, col = self.peek()
        if kind == "(":
            self.i += 1
            m = self.alt()
            self.take(")", ")")
            return m
        if kind == "name":
            self.i += 1
            if value == "STR":
                return Str()
            if value == "EPSILON":
                return Epsilon()
            return Name(value)
        raise DtdSyntaxError(f"expected content model, found {value or 'end of input'!r}", line, col)


def parse_dtd(text: str) -> Dtd:
    """Parse the line-based schema format into a :class:`Dtd`."""
    return _DtdParser(text).parse()


# ---------------------------------------------------------------------------
# Validation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Violation:
    node: NodeId
    condition: str  # "root" | "label" | "content" | "text-leaf"
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def conforming(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.conforming


def validate(tree: XmlTree, dtd: Dtd) -> ValidationReport:
    """Check the four conformance conditions and report every violation."""
    found: list[Violation] = []
    if tree.label(tree.root) != dtd.root:
        found.append(
            Violation(tree.root, "root", f"root is <{tree.label(tree.root)}>, expected <{dtd.root}>")
        )
    for n in tree.preorder():
        label = tree.label(n)
        if label == TEXT:
            if tree.children(n):
                found.append(Violation(n, "text-leaf", "text node has children"))
            continue
        if label not in dtd.ele:
            found.append(Violation(n, "label", f"undeclared element type <{label}>"))
            continue
        word = [tree.label(c) for c in tree.children(n)]
        if not dtd.automaton(label).accepts(word):
            shown = " ".join("STR" if w == TEXT else w for w in word) or "(empty)"
            found.append(
                Violation(n, "content", f"children of <{label}> [{shown}] do not match {dtd.rg[label]}")
            )
    return ValidationReport(tuple(found))
