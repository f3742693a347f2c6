from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from support import checks, gen, hospital
from xmlguard import (
    AccessSpec,
    PolicyError,
    UnsupportedQueryError,
    apply_update,
    build_accessibility,
    derive_view_dtd,
    extract_view,
    oracle_accessible,
    parse_access,
    parse_policy,
    parse_update,
    parse_xml,
    rewrite_query,
    rewrite_update,
    secure_update,
    serialize,
    validate,
)
from xmlguard.tree import ReplaceSubtree, mutate, parse_fragments
from xmlguard.view import accessible_nodes
from xmlguard.xpath import Evaluator, parse_xpath


def test_access_file_parses():
    spec = hospital.access()
    assert [(r.parent, r.child) for r in spec.rules] == [
        ("hospital", "dept"),
        ("dept", "clinical"),
        ("patients", "patient"),
        ("parent", "patient"),
    ]
    assert parse_access(spec.to_text(), hospital.dtd()) == spec


@pytest.mark.parametrize(
    "line",
    [
        "access hospital/patient = Y",  # not a child in the content model
        "access ward/dept = Y",
        "access hospital/dept = [parent::*]",
        "access hospital/dept = Maybe",
        "hospital/dept = Y",
    ],
)
def test_malformed_access_lines_are_rejected(line):
    with pytest.raises(PolicyError):
        parse_access(line, hospital.dtd())


def test_duplicate_access_annotation_is_rejected():
    with pytest.raises(PolicyError, match="duplicate"):
        parse_access("access dept/clinical = N\naccess dept/clinical = Y\n", hospital.dtd())


def test_accessible_nodes_of_the_hospital():
    t = hospital.tree()
    spec = hospital.access()
    acc = accessible_nodes(spec, t)
    visible = hospital.names(t, acc)
    assert {"hospital", "dept1", "dname1", "patients1", "patient3", "medicalFolder3", "patient4"} <= visible
    hidden = {"patient2", "parent1", "medicalFolder2", "clinical1", "patient1", "dept2", "patient5", "patients2"}
    assert not visible & hidden
    ev = Evaluator(t)
    q = build_accessibility(spec)
    for n in t.nodes():
        if not t.is_text(n):
            assert ev.holds(q, n) == (n in acc) == oracle_accessible(spec, t, n)


def test_view_matches_figure_4():
    t = hospital.tree()
    view, mapping = extract_view(hospital.access(), t)
    assert view.shape() == parse_xml(hospital.FIG4).shape()
    patient3 = hospital.node(t, "patient3")
    assert mapping.view_parent[patient3] == hospital.node(t, "patients1")
    assert view.parent(patient3) == hospital.node(t, "patients1")
    assert set(view.nodes()) <= set(t.nodes())


def test_view_conforms_to_derived_schema():
    spec = hospital.access()
    view, _ = extract_view(spec, hospital.tree())
    dtd_view = derive_view_dtd(spec)
    assert validate(view, dtd_view).conforming
    assert "clinical" not in dtd_view.ele


def test_update_policy_over_view_cannot_name_hidden_types():
    dtd_view = derive_view_dtd(hospital.access())
    with pytest.raises(PolicyError):
        parse_policy("annot clinical delete[patient] = Y\n", dtd_view)


def test_empty_access_spec_shows_everything():
    t = hospital.tree()
    spec = AccessSpec(hospital.dtd())
    view, _ = extract_view(spec, t)
    assert view.structure() == t.structure()
    q = parse_xpath("descendant::patient[child::categ/text()='A']/child::pname")
    assert Evaluator(t).select(rewrite_query(spec, q), t.root) == Evaluator(t).select(q, t.root)


def test_view_query_reaches_through_hidden_nodes():
    t = hospital.tree()
    spec = hospital.access()
    q = parse_xpath("descendant::patients/child::patient/child::pname")
    got = Evaluator(t).select(rewrite_query(spec, q), t.root)
    assert [t.text_children(n)[0] for n in got] == ["Margaret", "Olivia"]


@pytest.mark.parametrize("text", ["child::a/parent::*", "(child::a)[1]", "child::a[child::b = self::a]"])
def test_view_queries_outside_fragment_x_are_unsupported(text):
    with pytest.raises(UnsupportedQueryError):
        rewrite_query(hospital.access(), parse_xpath(text))


def test_update_alone_discloses_but_secure_pipeline_does_not():
    t = hospital.tree()
    dtd = hospital.dtd()
    access = hospital.access()
    upd_doc = hospital.policy("example5.policy")
    upd_view = hospital.policy("example5.policy", derive_view_dtd(access))
    nathaniel = hospital.op("example5_nathaniel.op")
    _, plain = apply_update(dtd, t, rewrite_update(upd_doc, nathaniel))
    assert hospital.names(t, plain.targets) == {"result1"}
    for op in (nathaniel, hospital.op("example6_margaret.op")):
        _, report = apply_update(dtd, t, secure_update(access, upd_view, op))
        assert report.affected == 0 and report.targets == ()


def _with_patient2_replaced_by_patient3(t):
    patient2 = hospital.node(t, "patient2")
    frag = parse_fragments(serialize(t, indent=None, start=hospital.node(t, "patient3")))
    return mutate(t, ReplaceSubtree(patient2, tuple(frag)))


def test_documents_with_equal_views_answer_secure_updates_alike():
    dtd = hospital.dtd()
    access = hospital.access()
    upd = hospital.policy("example5.policy", derive_view_dtd(access))
    first = hospital.tree()
    second = _with_patient2_replaced_by_patient3(first)
    assert validate(second, dtd).conforming
    view1, _ = extract_view(access, first)
    view2, _ = extract_view(access, second)
    assert view1.shape() == view2.shape()
    ops = [
        hospital.op("example5_nathaniel.op"),
        hospital.op("example6_margaret.op"),
        parse_update("delete descendant::patients/descendant::result"),
        parse_update("delete descendant::treatment[child::descp/text()='surgery']/descendant::result"),
    ]
    affected = []
    for op in ops:
        results = []
        for t in (first, second):
            new, report = apply_update(dtd, t, secure_update(access, upd, op))
            results.append((report.status, report.affected, extract_view(access, new)[0].shape()))
        assert results[0] == results[1], str(op)
        affected.append(results[0][1])
    assert affected == [0, 0, 1, 0]  # only result1 sits under a deletable parent


# -- properties ---------------------------------------------------------------


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_accessibility_predicate_matches_oracle(seed):
    count, failures = checks.accessibility_sample(random.Random(seed))
    assert not failures, failures[0]


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_rewritten_queries_match_the_materialized_view(seed):
    count, failures = checks.view_query_sample(random.Random(seed))
    assert not failures, failures[0]


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_rewritten_qualifiers_match_at_every_view_node(seed):
    count, failures = checks.view_qualifier_sample(random.Random(seed))
    assert not failures, failures[0]


@settings(max_examples=150, deadline=None)
@given(st.integers(0, 10**6))
def test_secure_update_acts_as_if_posed_on_the_view(seed):
    count, failures = checks.secure_update_sample(random.Random(seed))
    assert not failures, failures[0]


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 10**6))
def test_views_conform_and_hide_nothing_accessible(seed):
    rng = random.Random(seed)
    dtd = gen.random_dtd(rng, recursive=None)
    t = gen.random_tree(rng, dtd)
    spec = gen.random_access_spec(rng, dtd)
    view, mapping = extract_view(spec, t)
    assert validate(view, derive_view_dtd(spec)).conforming
    assert {n for n in view.nodes() if not view.is_text(n)} == set(mapping.accessible)
    for n in mapping.accessible:
        if n != t.root:
            # the view parent is the nearest accessible proper ancestor
            assert view.parent(n) == next(a for a in t.ancestors(n) if a in mapping.accessible)
