"""Atom/rule text format, round-tripping, canonicalization."""

from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kbcomplete import rules as R
from kbcomplete.errors import RuleFormatError
from kbcomplete.rules import Rule, canonical_key, parse_rule


def _ex_rule():
    return Rule(
        body=(
            R.rel_atom("dateOfDeath", "?x", "?y"),
            R.less_than("?x", "placeOfDeath", 1),
        ),
        head=R.head_atom(R.INCOMPLETE, "?x", "placeOfDeath"),
        support=12,
        confidence=Fraction(3, 4),
    )


def test_render():
    text = _ex_rule().render()
    assert text == (
        "dateOfDeath(?x,?y) ∧ lessThan_1(?x,placeOfDeath)"
        " ⇒ incomplete(?x,placeOfDeath)\t12\t3/4"
    )


def test_roundtrip_exact():
    rule = _ex_rule()
    assert parse_rule(rule.render()) == Rule(
        body=rule.body, head=rule.head, support=12, confidence=Fraction(3, 4)
    )


def test_roundtrip_all_atom_kinds():
    rule = Rule(
        body=(
            R.type_atom("?x", "Person"),
            R.notype_atom("?x", "Adult"),
            R.popular_atom("?x"),
            R.not_changed_atom("?x", "hasChild"),
            R.more_than("?x", "hasChild", 0),
            R.rel_atom("marriedTo", "?x", "spouse42"),
        ),
        head=R.head_atom(R.COMPLETE, "?x", "hasChild"),
        support=3,
        confidence=Fraction(1),
    )
    assert parse_rule(rule.render()).body == rule.body


def test_empty_body_roundtrip():
    rule = Rule(body=(), head=R.head_atom(R.COMPLETE, "?x", "r"), support=2,
                confidence=Fraction(2, 3))
    parsed = parse_rule(rule.render())
    assert parsed.body == ()
    assert parsed.confidence == Fraction(2, 3)


def test_fact_rule_roundtrip():
    rule = Rule(
        body=(R.rel_atom("marriedTo", "?x", "?z"), R.rel_atom("livesIn", "?z", "?y")),
        head=R.rel_atom("livesIn", "?x", "?y"),
        support=5,
        confidence=Fraction(1, 2),
    )
    assert parse_rule(rule.render()) == Rule(
        body=rule.body, head=rule.head, support=5, confidence=Fraction(1, 2)
    )


def test_parse_rejects_garbage():
    with pytest.raises(RuleFormatError):
        parse_rule("not a rule at all")
    with pytest.raises(RuleFormatError):
        parse_rule("livesIn(?x) ⇒ complete(?x,r)")


def test_parse_rejects_head_relation_in_body():
    with pytest.raises(RuleFormatError):
        parse_rule("citizenOf(?x,?y) ⇒ complete(?x,citizenOf)\t1\t1")


def test_parse_rejects_unconnected_head_variable():
    with pytest.raises(RuleFormatError):
        parse_rule("livesIn(?a,?b) ⇒ complete(?x,r)\t1\t1")


def test_parse_rejects_open_special_variable():
    with pytest.raises(RuleFormatError):
        parse_rule("isPopular(?q,true) ⇒ complete(?x,r)\t1\t1")


def test_canonical_invariant_under_renaming():
    k1 = canonical_key(
        Rule(
            body=(R.rel_atom("r1", "?x", "?y"), R.rel_atom("r2", "?y", "?z")),
            head=R.head_atom(R.COMPLETE, "?x", "r"),
        )
    )
    k2 = canonical_key(
        Rule(
            body=(R.rel_atom("r1", "?x", "?b"), R.rel_atom("r2", "?b", "?a")),
            head=R.head_atom(R.COMPLETE, "?x", "r"),
        )
    )
    assert k1 == k2


def test_canonical_invariant_under_reordering():
    a1, a2 = R.rel_atom("r1", "?x", "?y"), R.rel_atom("r2", "?x", "?z")
    head = R.head_atom(R.COMPLETE, "?x", "r")
    assert canonical_key(Rule(body=(a1, a2), head=head)) == canonical_key(
        Rule(body=(a2, a1), head=head)
    )


def test_canonical_distinguishes_structure():
    head = R.head_atom(R.COMPLETE, "?x", "r")
    joined = Rule(
        body=(R.rel_atom("r1", "?x", "?y"), R.rel_atom("r2", "?x", "?y")), head=head
    )
    star = Rule(
        body=(R.rel_atom("r1", "?x", "?y"), R.rel_atom("r2", "?x", "?z")), head=head
    )
    assert canonical_key(joined) != canonical_key(star)


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.tuples(
            st.sampled_from(["r1", "r2", "r3"]),
            st.sampled_from(["?x", "?y", "?z"]),
            st.sampled_from(["?y", "?z", "const"]),
        ),
        min_size=1,
        max_size=3,
    ),
    st.permutations(range(3)),
)
def test_canonical_key_permutation_property(atom_specs, perm):
    body = tuple(R.rel_atom(*spec) for spec in atom_specs)
    if not any("?x" in a.variables() for a in body):
        body = body + (R.rel_atom("r0", "?x", "?y"),)
    head = R.head_atom(R.COMPLETE, "?x", "r")
    rule = Rule(body=body, head=head)
    shuffled = tuple(body[i] for i in perm if i < len(body))
    leftover = tuple(a for a in body if a not in shuffled)
    rule2 = Rule(body=shuffled + leftover, head=head)
    if sorted(map(id, rule2.body)) == sorted(map(id, rule.body)):
        assert canonical_key(rule) == canonical_key(rule2)


def test_is_closed():
    open_rule = Rule(
        body=(R.rel_atom("r1", "?x", "?y"),), head=R.rel_atom("r2", "?x", "?z")
    )
    closed_rule = Rule(
        body=(R.rel_atom("r1", "?x", "?y"),), head=R.rel_atom("r2", "?x", "?y")
    )
    assert not open_rule.is_closed()
    assert closed_rule.is_closed()


def test_sort_rules_order():
    head = R.head_atom(R.COMPLETE, "?x", "r")
    r1 = Rule(body=(), head=head, support=5, confidence=Fraction(1, 2))
    r2 = Rule(
        body=(R.more_than("?x", "r", 0),), head=head, support=9, confidence=Fraction(1)
    )
    r3 = Rule(
        body=(R.popular_atom("?x"),), head=head, support=2, confidence=Fraction(1, 2)
    )
    ordered = R.sort_rules([r1, r3, r2])
    assert ordered[0] == r2
    assert ordered[1] == r1  # same confidence as r3, higher support
    assert ordered[2] == r3


def test_rule_file_roundtrip(tmp_path):
    rules = [
        _ex_rule(),
        Rule(body=(), head=R.head_atom(R.COMPLETE, "?x", "r"), support=1,
             confidence=Fraction(1, 3)),
    ]
    path = tmp_path / "rules.tsv"
    R.write_rules(rules, path, header="config test")
    back, headers = R.read_rules(path)
    assert headers == ["config test"]
    assert [r.render() for r in back] == [r.render() for r in rules]
