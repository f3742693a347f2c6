from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from support import gen, hospital
from xmlguard import TEXT, DynamicError, XmlFormatError, XmlTree, mutate, parse_fragments, parse_xml, serialize
from xmlguard.tree import DeleteSubtree, InsertChildren, InsertSiblings, ReplaceSubtree, element


def small() -> XmlTree:
    return parse_xml("<a><b>x</b><c><d/></c><b>y</b></a>")


def test_parse_builds_elements_and_text():
    t = small()
    assert t.label(t.root) == "a"
    b1, c, b2 = t.children(t.root)
    assert [t.label(n) for n in (b1, c, b2)] == ["b", "c", "b"]
    (x,) = t.children(b1)
    assert t.label(x) == TEXT and t.text(x) == "x"
    assert t.text_children(b2) == ["y"]
    assert t.element_children(c) == [c + 1]


def test_whitespace_between_elements_is_ignored():
    t = parse_xml("<a>\n  <b/>\n  <c> </c>\n</a>")
    assert [t.label(n) for n in t.children(t.root)] == ["b", "c"]
    assert t.text_children(t.children(t.root)[1]) == [" "]


@pytest.mark.parametrize(
    "text",
    [
        '<a x="1"/>',
        "<a><!-- note --></a>",
        "<a><?pi data?></a>",
        '<a xmlns:p="urn:x"><p:b/></a>',
        "<!DOCTYPE a><a/>",
        "<a><b></a>",
        "",
    ],
)
def test_unsupported_or_malformed_input_is_rejected(text):
    with pytest.raises(XmlFormatError):
        parse_xml(text)


def test_fragments_parse_as_siblings():
    frags = parse_fragments("<a/><b>t</b>")
    assert [f.label(f.root) for f in frags] == ["a", "b"]
    with pytest.raises(XmlFormatError):
        parse_fragments("text<a/>")


def test_serialize_round_trips_hospital():
    t = hospital.tree()
    again = parse_xml(serialize(t))
    assert again.shape() == t.shape()
    assert parse_xml(serialize(t, indent=None)).shape() == t.shape()


def test_serialize_escapes_text():
    t = element("a", "x < y & z")
    assert serialize(t, indent=None) == "<a>x &lt; y &amp; z</a>"
    assert parse_xml(serialize(t)).text(1) == "x < y & z"


def test_path_of_counts_same_label_siblings():
    t = small()
    b1, c, b2 = t.children(t.root)
    assert t.path_of(b2) == "/a[1]/b[2]"
    assert t.path_of(t.children(b1)[0]) == "/a[1]/b[1]/text()[1]"
    assert t.path_of(t.root) == "/a[1]"


def test_delete_removes_subtree_and_keeps_other_ids():
    t = small()
    c = t.children(t.root)[1]
    out = mutate(t, DeleteSubtree(c))
    assert c not in out and c + 1 not in out
    assert set(out.nodes()) == set(t.nodes()) - {c, c + 1}
    assert c in t  # input untouched
    out.check_shape()


def test_replace_keeps_position():
    t = small()
    b1 = t.children(t.root)[0]
    out = mutate(t, ReplaceSubtree(b1, (element("e"), element("f"))))
    assert [out.label(n) for n in out.children(out.root)] == ["e", "f", "c", "b"]


@pytest.mark.parametrize(
    "edit_kind, want",
    [
        ("first", ["n", "b", "c", "b"]),
        ("last", ["b", "c", "b", "n"]),
        (1, ["b", "n", "c", "b"]),
    ],
)
def test_insert_children_positions(edit_kind, want):
    t = small()
    out = mutate(t, InsertChildren(t.root, (element("n"),), edit_kind))
    assert [out.label(n) for n in out.children(out.root)] == want


@pytest.mark.parametrize("side, want", [("before", ["b", "n", "c", "b"]), ("after", ["b", "c", "n", "b"])])
def test_insert_siblings(side, want):
    t = small()
    c = t.children(t.root)[1]
    out = mutate(t, InsertSiblings(c, (element("n"),), side))
    assert [out.label(n) for n in out.children(out.root)] == want


@pytest.mark.parametrize(
    "make",
    [
        lambda t: DeleteSubtree(t.root),
        lambda t: ReplaceSubtree(t.root, (element("z"),)),
        lambda t: InsertSiblings(t.root, (element("z"),), "before"),
        lambda t: InsertChildren(2, (element("z"),)),  # node 2 is the text under the first b
        lambda t: InsertChildren(t.root, (element("z"),), 9),
    ],
)
def test_dynamic_errors_leave_input_untouched(make):
    t = small()
    before = t.structure()
    with pytest.raises(DynamicError):
        mutate(t, make(t))
    assert t.structure() == before


def test_induced_tree_reattaches_under_given_parent():
    t = small()
    b1, c, b2 = t.children(t.root)
    d = t.children(c)[0]
    keep = {t.root, d, b2}
    out = t.induced(keep, {d: t.root, b2: t.root})
    assert out.children(out.root) == (d, b2)
    out.check_shape()


def _random_edit(rng: random.Random, t: XmlTree):
    n = rng.choice(t.nodes())
    frag = (element(rng.choice("pq"), "v"),)
    return rng.choice(
        [
            DeleteSubtree(n),
            ReplaceSubtree(n, frag),
            InsertChildren(n, frag, rng.choice(["first", "last"])),
            InsertSiblings(n, frag, rng.choice(["before", "after"])),
        ]
    )


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_random_edits_keep_shape_invariants(seed):
    rng = random.Random(seed)
    dtd = gen.random_dtd(rng)
    t = gen.random_tree(rng, dtd)
    for _ in range(5):
        snapshot = t.structure()
        edit = _random_edit(rng, t)
        try:
            out = mutate(t, edit)
        except DynamicError:
            assert t.structure() == snapshot
            continue
        out.check_shape()
        assert t.structure() == snapshot
        survivors = set(t.nodes()) & set(out.nodes())
        for n in survivors:
            assert out.label(n) == t.label(n)
        t = out
