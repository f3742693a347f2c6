"""One-sample property checks shared by the module tests and the acceptance suite.

Each function draws one random instance from ``rng``, compares the library
against an independent oracle and returns ``(comparisons, failures)``.
"""

from __future__ import annotations

import random

from xmlguard import (
    ApplyStatus,
    UpdateKind,
    UpdateOp,
    UpdateType,
    XmlTree,
    apply_update,
    build_accessibility,
    build_forbidden,
    build_updatability,
    extract_view,
    oracle_accessible,
    oracle_forbidden,
    oracle_updatable,
    rewrite_query,
    rewrite_update,
    secure_update,
    serialize,
)
from xmlguard.policy import POSITIONAL_INSERTS
from xmlguard.view import rewrite_view_qualifier
from xmlguard.xpath import Evaluator, format_qualifier, format_xpath

from . import gen


def elements(t: XmlTree) -> list[int]:
    return [n for n in t.preorder() if not t.is_text(n)]


def updatability_sample(
    rng: random.Random, recursive: bool | None = None, max_nodes: int = 40
) -> tuple[int, list[str]]:
    """Compiled updatability and prohibition against the ancestor-walk oracles.

    ``recursive=None`` draws a recursive schema four times out of five.
    """
    if recursive is None:
        recursive = rng.random() < 0.8
    dtd = gen.random_dtd(rng, recursive=recursive)
    tree = gen.random_tree(rng, dtd, max_nodes)
    ut = rng.choice(gen.update_types(dtd))
    spec = gen.random_update_spec(rng, dtd, [ut], extra=2)
    ev = Evaluator(tree)
    u = build_updatability(spec, ut)
    f = build_forbidden(spec, ut)
    failures = []
    nodes = elements(tree)
    for n in nodes:
        want_u = oracle_updatable(spec, tree, n, ut)
        want_f = oracle_forbidden(spec, tree, n, ut)
        if ev.holds(u, n) != want_u or ev.holds(f, n) != want_f:
            failures.append(
                f"{ut} at {tree.path_of(n)}: U={ev.holds(u, n)} want {want_u}, F={ev.holds(f, n)} want {want_f}\n"
                f"  spec:\n{spec.to_text()}  U = {format_qualifier(u)}"
            )
    return len(nodes), failures


def _permitted(spec, tree: XmlTree, op: UpdateOp, n: int, ev: Evaluator) -> bool:
    """Whether ``op`` may act on ``n``, decided node by node with the oracles."""
    kind, b = op.kind, op.source_type
    if kind in (UpdateKind.DELETE, UpdateKind.REPLACE):
        p = tree.parent(n)
        if p is None:
            return False
        ut = UpdateType(kind, tree.label(n), b if kind is UpdateKind.REPLACE else None)
        return oracle_updatable(spec, tree, p, ut, ev)
    if not oracle_updatable(spec, tree, n, UpdateType(kind, b), ev):
        return False
    if kind is not UpdateKind.INSERT_INTO:
        return True
    for k in (UpdateKind.INSERT_AS_FIRST, UpdateKind.INSERT_AS_LAST):
        if oracle_forbidden(spec, tree, n, UpdateType(k, b), ev):
            return False
    for c in tree.element_children(n):
        for k in (UpdateKind.INSERT_BEFORE, UpdateKind.INSERT_AFTER):
            if oracle_forbidden(spec, tree, c, UpdateType(k, b), ev):
                return False
    return True


def relevant_types(rng: random.Random, dtd, op: UpdateOp) -> list[UpdateType]:
    """Update types whose annotations can influence ``op``."""
    if op.kind is UpdateKind.DELETE:
        return [UpdateType(UpdateKind.DELETE, a) for a in rng.sample(sorted(dtd.ele), 2)]
    if op.kind is UpdateKind.REPLACE:
        return [UpdateType(UpdateKind.REPLACE, a, op.source_type) for a in rng.sample(sorted(dtd.ele), 2)]
    out = [UpdateType(op.kind, op.source_type)]
    if op.kind is UpdateKind.INSERT_INTO:
        out += [UpdateType(k, op.source_type) for k in POSITIONAL_INSERTS]
    return out


def rewrite_sample(rng: random.Random) -> tuple[int, list[str]]:
    """The rewritten target selects exactly the permitted part of the original target."""
    dtd = gen.random_dtd(rng, recursive=rng.random() < 0.8)
    tree = gen.random_tree(rng, dtd)
    ev = Evaluator(tree)
    for _ in range(8):  # prefer a target that selects something
        op = gen.random_op(rng, dtd)
        if ev.select(op.target, tree.root):
            break
    spec = gen.random_update_spec(rng, dtd, relevant_types(rng, dtd, op), extra=1)
    rewritten = rewrite_update(spec, op)
    original = ev.select(op.target, tree.root)
    got = ev.select(rewritten.target, tree.root)
    want = [n for n in original if _permitted(spec, tree, op, n, ev)]
    if got == want:
        return 1, []
    return 1, [
        f"{op}\n  rewritten: {format_xpath(rewritten.target)}\n  spec:\n{spec.to_text()}"
        f"  got {[tree.path_of(n) for n in got]}\n  want {[tree.path_of(n) for n in want]}"
    ]


def accessibility_sample(rng: random.Random) -> tuple[int, list[str]]:
    dtd = gen.random_dtd(rng, recursive=rng.random() < 0.8)
    tree = gen.random_tree(rng, dtd)
    spec = gen.random_access_spec(rng, dtd)
    acc = build_accessibility(spec)
    ev = Evaluator(tree)
    failures = []
    nodes = elements(tree)
    for n in nodes:
        want = oracle_accessible(spec, tree, n)
        if ev.holds(acc, n) != want:
            failures.append(f"{tree.path_of(n)}: acc={not want} want {want}\n{spec.to_text()}")
    return len(nodes), failures


def view_query_sample(rng: random.Random) -> tuple[int, list[str]]:
    """A query on the materialized view equals its rewriting on the document."""
    dtd = gen.random_dtd(rng, recursive=rng.random() < 0.8)
    tree = gen.random_tree(rng, dtd)
    spec = gen.random_access_spec(rng, dtd)
    view, _ = extract_view(spec, tree)
    queries = gen.QueryGen(rng, dtd.ele)
    for _ in range(8):  # prefer a query that selects something in the view
        q = queries.path(3)
        got_view = Evaluator(view).select(q, view.root)
        if got_view:
            break
    rewritten = rewrite_query(spec, q)
    got_doc = Evaluator(tree).select(rewritten, tree.root)
    if got_view == got_doc:
        return 1, []
    return 1, [
        f"query {format_xpath(q)}\n  rewritten {format_xpath(rewritten)}\n  spec:\n{spec.to_text()}"
        f"  view: {[view.path_of(n) for n in got_view]}\n  doc: {[tree.path_of(n) for n in got_doc]}"
    ]


def failing_update_sample(rng: random.Random) -> tuple[ApplyStatus, bool, str] | None:
    """Apply a random unguarded update; report only rejected or failed ones.

    Returns the status, whether the input tree is bit-identical afterwards
    and a description of the operation.
    """
    dtd = gen.random_dtd(rng, recursive=rng.random() < 0.8)
    tree = gen.random_tree(rng, dtd)
    op = gen.random_op(rng, dtd, target_depth=1)
    before = serialize(tree)
    structure = tree.structure()
    new, report = apply_update(dtd, tree, op)
    if report.status.ok:
        return None
    unchanged = new is tree and serialize(tree) == before and tree.structure() == structure
    return report.status, unchanged, str(op)


def view_qualifier_sample(rng: random.Random) -> tuple[int, list[str]]:
    """A qualifier holds at a view node iff its rewriting holds there in the document."""
    dtd = gen.random_dtd(rng, recursive=rng.random() < 0.8)
    tree = gen.random_tree(rng, dtd)
    spec = gen.random_access_spec(rng, dtd)
    q = gen.QueryGen(rng, dtd.ele).qualifier(3)
    view, _ = extract_view(spec, tree)
    rewritten = rewrite_view_qualifier(spec, q)
    in_view, in_doc = Evaluator(view), Evaluator(tree)
    failures = []
    nodes = elements(view)
    for n in nodes:
        if in_view.holds(q, n) != in_doc.holds(rewritten, n):
            failures.append(f"[{format_qualifier(q)}] at {view.path_of(n)}\n{spec.to_text()}")
    return len(nodes), failures


def secure_update_sample(rng: random.Random) -> tuple[int, list[str]]:
    """On the document, a secured update selects what the plain rewriting selects on the view."""
    dtd = gen.random_dtd(rng, recursive=rng.random() < 0.8)
    tree = gen.random_tree(rng, dtd)
    access = gen.random_access_spec(rng, dtd)
    view, _ = extract_view(access, tree)
    for _ in range(8):  # prefer a target that selects something in the view
        op = gen.random_op(rng, dtd)
        if Evaluator(view).select(op.target, view.root):
            break
    spec = gen.random_update_spec(rng, dtd, relevant_types(rng, dtd, op), extra=1)
    on_view = Evaluator(view).select(rewrite_update(spec, op).target, view.root)
    secured = secure_update(access, spec, op)
    on_doc = Evaluator(tree).select(secured.target, tree.root)
    if on_view == on_doc:
        return 1, []
    return 1, [
        f"{op}\n  access:\n{access.to_text()}  spec:\n{spec.to_text()}"
        f"  view: {[view.path_of(n) for n in on_view]}\n  doc: {[tree.path_of(n) for n in on_doc]}"
    ]
