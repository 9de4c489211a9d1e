"""Refinement operators and the mining loop."""

import random
from fractions import Fraction

import pytest

from kbcomplete import mining as M
from kbcomplete import rules as R
from kbcomplete.engine import AugmentedKB
from kbcomplete.errors import EmptyTrainingError, KbError
from kbcomplete.gold import CompletenessLabel, GoldStandard
from kbcomplete.rules import Rule, canonical_key

from naive import NaiveEvaluator
from util import KBT, make_gold, make_kb


def _seed(polarity, rel):
    return Rule(body=(), head=R.head_atom(polarity, M.HEAD_VAR, rel))


def _kbt_aug(extra=(), golds=(), old_kb=None):
    kb = make_kb(KBT + list(extra))
    return AugmentedKB(kb, old_kb=old_kb, golds=golds)


KBT_GOLD = GoldStandard(
    "citizenOf",
    (
        CompletenessLabel("alice", "citizenOf", True),
        CompletenessLabel("bob", "citizenOf", True),
        CompletenessLabel("carol", "citizenOf", False),
    ),
)


# -- support / confidence -------------------------------------------------------


def test_support_more_than_rule():
    aug = _kbt_aug(golds=[KBT_GOLD])
    rule = _seed(R.COMPLETE, "citizenOf").extended(
        R.more_than("?x", "citizenOf", 0), "add_cardinality"
    )
    assert M.support(aug, rule) == 2
    assert M.confidence(aug, rule) == 1


def test_support_empty_body():
    aug = _kbt_aug(golds=[KBT_GOLD])
    rule = _seed(R.COMPLETE, "citizenOf")
    assert M.support(aug, rule) == 2
    assert M.confidence(aug, rule) == Fraction(2, 3)


def test_support_unsatisfiable_body():
    aug = _kbt_aug(golds=[KBT_GOLD])
    rule = _seed(R.COMPLETE, "citizenOf").extended(
        R.rel_atom("neverSeen", "?x", "?y"), "dangling"
    )
    assert M.support(aug, rule) == 0
    assert M.confidence(aug, rule) is None


def test_labels_of_other_relations_are_inert():
    other = make_gold("hasChild", complete=("alice",))
    aug = _kbt_aug(extra=[("alice", "hasChild", "dan")], golds=[KBT_GOLD, other])
    rule = _seed(R.COMPLETE, "citizenOf")
    assert M.support(aug, rule) == 2  # only citizenOf labels count


# -- classic operators ---------------------------------------------------------


def test_dangling_shapes():
    aug = _kbt_aug(extra=[("alice", "hasChild", "dan")], golds=[KBT_GOLD])
    out = M.refine_dangling(_seed(R.COMPLETE, "citizenOf"), aug, M.MiningConfig())
    rendered = {r.body[0].render() for r in out}
    assert "hasChild(?x,?y)" in rendered
    assert "hasChild(?y,?x)" in rendered
    # never the head relation
    assert not any("citizenOf" in t for t in rendered)


def test_closing_needs_two_variables():
    aug = _kbt_aug(golds=[KBT_GOLD])
    assert M.refine_closing(_seed(R.COMPLETE, "citizenOf"), aug, M.MiningConfig()) == []


def test_closing_joins_existing_variables():
    aug = _kbt_aug(extra=[("alice", "hasChild", "dan"), ("dan", "livesIn", "x")],
                   golds=[KBT_GOLD])
    rule = _seed(R.COMPLETE, "citizenOf").extended(
        R.rel_atom("hasChild", "?x", "?y"), "dangling"
    )
    out = M.refine_closing(rule, aug, M.MiningConfig())
    rendered = {r.body[-1].render() for r in out}
    assert "livesIn(?x,?y)" in rendered
    assert "livesIn(?y,?x)" in rendered
    assert not any(a.target == "citizenOf" for r in out for a in r.body)


def test_instantiated_atoms():
    old_kb = make_kb(KBT)
    aug = _kbt_aug(extra=[("alice", "hasChild", "dan")], golds=[KBT_GOLD], old_kb=old_kb)
    out = M.refine_instantiated(_seed(R.COMPLETE, "citizenOf"), aug, M.MiningConfig())
    rendered = {r.body[-1].render() for r in out}
    assert "isPopular(?x,true)" in rendered
    assert "hasNotChanged(?x,citizenOf)" in rendered  # the no-change signal itself
    assert "hasNotChanged(?x,hasChild)" not in rendered  # not in the old KB
    # no relational atom over the head relation is ever produced
    assert not any(a.kind == R.REL for r in out for a in r.body)


def test_instantiated_without_old_kb():
    aug = _kbt_aug(golds=[KBT_GOLD])
    out = M.refine_instantiated(_seed(R.COMPLETE, "citizenOf"), aug, M.MiningConfig())
    assert {r.body[-1].kind for r in out} == {R.IS_POPULAR}


# -- type operators ----------------------------------------------------------------


TYPED = [
    ("alice", "type", "Adult"),
    ("bob", "type", "Person"),
    ("Adult", "subclassOf", "Person"),
    ("Politician", "subclassOf", "Person"),
    ("Senior", "subclassOf", "Adult"),
    ("p1", "type", "Politician"),
    ("s1", "type", "Senior"),
]


def _typed_aug():
    kb = make_kb(
        KBT + TYPED + [("alice", "hasChild", "dan")],
        relation_domains={"hasChild": "Person"},
    )
    return AugmentedKB(kb, golds=[make_gold("hasChild", complete=("alice",))])


def test_add_type_uses_domain():
    aug = _typed_aug()
    out = M.op_add_type(_seed(R.COMPLETE, "hasChild"), aug)
    assert len(out) == 1
    assert out[0].body[0] == R.type_atom("?x", "Person")


def test_add_type_guard_and_missing_domain():
    aug = _typed_aug()
    with_type = _seed(R.COMPLETE, "hasChild").extended(
        R.type_atom("?x", "Person"), "add_type"
    )
    assert M.op_add_type(with_type, aug) == []
    assert M.op_add_type(_seed(R.COMPLETE, "citizenOf"), aug) == []


def test_specialize_type_direct_subclasses_only():
    aug = _typed_aug()
    rule = _seed(R.COMPLETE, "hasChild").extended(
        R.type_atom("?x", "Person"), "add_type"
    )
    out = M.op_specialize_type(rule, aug)
    classes = {r.body[0].target for r in out}
    assert classes == {"Adult", "Politician"}  # Senior is two steps away
    senior = M.op_specialize_type(out[0] if out[0].body[0].target == "Adult" else out[1], aug)
    assert {r.body[0].target for r in senior} == {"Senior"}


def test_specialize_leaf_class():
    aug = _typed_aug()
    rule = _seed(R.COMPLETE, "hasChild").extended(
        R.type_atom("?x", "Senior"), "add_type"
    )
    assert M.op_specialize_type(rule, aug) == []


def test_add_negated_type_walkthrough():
    aug = _typed_aug()
    rule = _seed(R.COMPLETE, "hasChild").extended(
        R.type_atom("?x", "Person"), "add_type"
    )
    out = M.op_add_negated_type(rule, aug)
    rendered = {r.body[0].render() for r in out}
    assert "notype(?x,Adult)" in rendered
    for r in out:
        if r.body[0] == R.notype_atom("?x", "Adult"):
            assert r.render().split("\t")[0] == (
                "notype(?x,Adult) ∧ type(?x,Person) ⇒ complete(?x,hasChild)"
            )


def test_add_negated_type_idempotent():
    aug = _typed_aug()
    rule = Rule(
        body=(R.notype_atom("?x", "Adult"), R.type_atom("?x", "Person")),
        head=R.head_atom(R.COMPLETE, "?x", "hasChild"),
    )
    out = M.op_add_negated_type(rule, aug)
    assert not any(r.body.count(R.notype_atom("?x", "Adult")) > 1 for r in out)
    assert {r.body[0].target for r in out} == {"Politician"}


# -- cardinality operators ------------------------------------------------------


def test_add_cardinality_candidates():
    triples = [(f"p{i}", "isCitizenOf", c) for i, cs in enumerate(
        [("fr",), ("fr", "de"), ("fr", "de", "us")]) for c in cs]
    kb = make_kb(triples)
    aug = AugmentedKB(kb, golds=[make_gold("isCitizenOf", incomplete=("p0",))])
    out = M.op_add_cardinality(_seed(R.INCOMPLETE, "isCitizenOf"), aug)
    rendered = {r.body[0].render() for r in out}
    # nobody has more than 3 nationalities
    assert rendered == {"moreThan_0(?x,isCitizenOf)", "lessThan_3(?x,isCitizenOf)"}


def test_add_cardinality_guard():
    aug = _kbt_aug(golds=[KBT_GOLD])
    rule = _seed(R.COMPLETE, "citizenOf").extended(
        R.more_than("?x", "citizenOf", 0), "add_cardinality"
    )
    assert M.op_add_cardinality(rule, aug) == []


def test_tighten_more_than_replaces_zero_by_one():
    # two complete-labeled people, one with a single parent, one with two
    triples = [("p1", "hasParent", "m1"), ("p2", "hasParent", "m2"),
               ("p2", "hasParent", "f2")]
    aug = AugmentedKB(
        make_kb(triples), golds=[make_gold("hasParent", complete=("p1", "p2"))]
    )
    rule = _seed(R.COMPLETE, "hasParent").extended(
        R.more_than("?x", "hasParent", 0), "add_cardinality"
    )
    out = M.op_tighten_cardinality(rule, aug)
    assert [a.render() for r in out for a in r.body] == ["moreThan_1(?x,hasParent)"]


def test_tighten_less_than_skips_non_decreasing_bound():
    # incomplete people have 0 or 1 citizenships, never exactly 2, so the
    # scan skips k'=2 and lands on lessThan_1 directly
    triples = [
        ("rich", "isCitizenOf", "fr"),
        ("rich", "isCitizenOf", "de"),
        ("rich", "isCitizenOf", "us"),
        ("one", "isCitizenOf", "fr"),
    ]
    gold = make_gold("isCitizenOf", complete=("rich",), incomplete=("none", "one"))
    aug = AugmentedKB(make_kb(triples), golds=[gold])
    rule = _seed(R.INCOMPLETE, "isCitizenOf").extended(
        R.less_than("?x", "isCitizenOf", 3), "add_cardinality"
    )
    out = M.op_tighten_cardinality(rule, aug)
    assert [a.render() for r in out for a in r.body] == ["lessThan_1(?x,isCitizenOf)"]


def test_tighten_exhausted():
    gold = make_gold("isCitizenOf", incomplete=("none",))
    aug = _kbt_aug(golds=[gold])
    rule = _seed(R.INCOMPLETE, "isCitizenOf").extended(
        R.less_than("?x", "isCitizenOf", 1), "add_cardinality"
    )
    assert M.op_tighten_cardinality(rule, aug) == []


def test_operators_never_increase_support():
    rng = random.Random(3)
    triples = {("e%d" % rng.randrange(8), "r%d" % rng.randrange(3),
                "e%d" % rng.randrange(8)) for _ in range(40)}
    triples |= {("e%d" % i, "type", "C0") for i in range(4)}
    triples.add(("C1", "subclassOf", "C0"))
    kb = make_kb(sorted(triples), relation_domains={"r0": "C0"})
    gold = make_gold("r0", complete=("e0", "e1", "e2"), incomplete=("e3", "e4"))
    aug = AugmentedKB(kb, golds=[gold])
    config = M.MiningConfig(min_support=1, min_confidence=Fraction(0), max_body_atoms=3)
    frontier = [_seed(R.COMPLETE, "r0"), _seed(R.INCOMPLETE, "r0")]
    for _ in range(250):
        if not frontier:
            break
        rule = frontier.pop(0)
        parent_supp = M.support(aug, rule)
        for cand in M.refinements(rule, aug, config):
            assert M.support(aug, cand) <= parent_supp, cand.render()
            if len(cand.body) < 3:
                frontier.append(cand)


# -- the mining loop ---------------------------------------------------------------


def test_mine_requires_training(kb_t):
    with pytest.raises(EmptyTrainingError):
        M.mine(kb_t, None, [], M.MiningConfig(min_support=1))


def test_mine_finds_pca_mimic():
    kb = make_kb(KBT)
    rules = M.mine(kb, None, [KBT_GOLD], M.MiningConfig(min_support=1, min_confidence=Fraction(1, 2), max_body_atoms=2))
    target = canonical_key(
        _seed(R.COMPLETE, "citizenOf").extended(
            R.more_than("?x", "citizenOf", 0), "x"
        )
    )
    mined = {canonical_key(r): r for r in rules}
    assert target in mined
    assert mined[target].support == 2
    assert mined[target].confidence == 1


def test_mine_finds_date_of_death_rule():
    # entities with a death date but no death place are the incomplete ones
    triples, complete, incomplete = [], [], []
    for i in range(5):
        triples += [(f"d{i}", "dateOfDeath", f"y{i}"), (f"d{i}", "placeOfDeath", f"c{i}")]
        complete.append(f"d{i}")
    for i in range(5):
        triples.append((f"m{i}", "dateOfDeath", f"y{i}"))
        incomplete.append(f"m{i}")
    for i in range(5):
        complete.append(f"a{i}")
        triples.append((f"a{i}", "bornIn", f"c{i}"))
    gold = make_gold("placeOfDeath", complete=complete, incomplete=incomplete)
    rules = M.mine(
        make_kb(triples),
        None,
        [gold],
        M.MiningConfig(min_support=3, min_confidence=Fraction(9, 10), max_body_atoms=2),
    )
    target = Rule(
        body=(
            R.rel_atom("dateOfDeath", "?x", "?y"),
            R.less_than("?x", "placeOfDeath", 1),
        ),
        head=R.head_atom(R.INCOMPLETE, "?x", "placeOfDeath"),
    )
    mined = {canonical_key(r) for r in rules}
    assert canonical_key(target) in mined


def test_mine_learns_cwa_type_rule_when_labels_are_uniform():
    # all labels complete regardless of structure -> type(X, domain) mimics CWA
    triples = [(f"e{i}", "type", "Person") for i in range(6)]
    triples += [(f"e{i}", "hasGender", "g") for i in range(3)]
    kb = make_kb(triples, relation_domains={"hasGender": "Person"})
    gold = make_gold("hasGender", complete=[f"e{i}" for i in range(6)])
    rules = M.mine(kb, None, [gold], M.MiningConfig(min_support=2, min_confidence=Fraction(1), max_body_atoms=2))
    target = _seed(R.COMPLETE, "hasGender").extended(
        R.type_atom("?x", "Person"), "add_type"
    )
    assert canonical_key(target) in {canonical_key(r) for r in rules}


def test_mine_respects_thresholds_and_length():
    kb = make_kb(KBT + [("alice", "hasChild", "dan")])
    config = M.MiningConfig(min_support=2, min_confidence=Fraction(2, 3), max_body_atoms=2)
    rules = M.mine(kb, None, [KBT_GOLD], config)
    for rule in rules:
        assert rule.support >= 2
        assert rule.confidence >= Fraction(2, 3)
        assert len(rule.body) <= 2
        assert not any(
            a.kind == R.REL and a.target == "citizenOf" for a in rule.body
        )


def test_mine_deduplicates_by_canonical_form():
    kb = make_kb(KBT + [("alice", "hasChild", "dan"), ("bob", "hasChild", "eve")])
    rules = M.mine(kb, None, [KBT_GOLD], M.MiningConfig(min_support=1, min_confidence=Fraction(0), max_body_atoms=2))
    keys = [canonical_key(r) for r in rules]
    assert len(keys) == len(set(keys))


def test_mine_deterministic_output():
    kb = make_kb(KBT + [("alice", "hasChild", "dan")])
    config = M.MiningConfig(min_support=1, min_confidence=Fraction(1, 3), max_body_atoms=3)
    r1 = M.mine(kb, None, [KBT_GOLD], config)
    r2 = M.mine(kb, None, [KBT_GOLD], config)
    assert [r.render() for r in r1] == [r.render() for r in r2]


def test_mine_empty_body_rule_emittable():
    kb = make_kb(KBT)
    rules = M.mine(kb, None, [KBT_GOLD], M.MiningConfig(min_support=2, min_confidence=Fraction(1, 2), max_body_atoms=1))
    empties = [r for r in rules if not r.body]
    assert len(empties) == 1
    assert empties[0].confidence == Fraction(2, 3)


def test_mining_config_validation():
    with pytest.raises(KbError):
        M.MiningConfig(min_support=0)
    with pytest.raises(KbError):
        M.MiningConfig(min_confidence=Fraction(3, 2))
    with pytest.raises(KbError):
        M.MiningConfig(enabled_operators=frozenset({"warp"}))


def test_config_header_roundtrip():
    config = M.MiningConfig(min_support=7, min_confidence=Fraction(2, 5))
    assert M.parse_config_header(M.config_header(config)) == config


# -- brute-force agreement ---------------------------------------------------------


def test_mined_metrics_match_naive_evaluator():
    rng = random.Random(99)
    for trial in range(6):
        n_ents = rng.randint(6, 12)
        triples = {
            (f"e{rng.randrange(n_ents)}", f"r{rng.randrange(3)}",
             f"e{rng.randrange(n_ents)}")
            for _ in range(rng.randint(15, 60))
        }
        triples |= {(f"e{i}", "type", rng.choice(["C0", "C1"])) for i in range(4)}
        triples.add(("C1", "subclassOf", "C0"))
        triples = sorted(triples)
        kb = make_kb(triples, relation_domains={"r0": "C0"})
        entities = sorted({t for tr in triples for t in (tr[0], tr[2])})
        labeled = rng.sample(entities, min(len(entities), 8))
        gold = GoldStandard(
            "r0",
            tuple(
                CompletenessLabel(e, "r0", rng.random() < 0.5)
                for e in sorted(labeled)
            ),
        )
        old_triples = sorted(rng.sample(triples, len(triples) // 2)) if trial % 2 else None
        old_kb = make_kb(old_triples) if old_triples else None
        rules = M.mine(
            kb,
            old_kb,
            [gold],
            M.MiningConfig(min_support=1, min_confidence=Fraction(0), max_body_atoms=2),
        )
        naive = NaiveEvaluator(triples, old_triples)
        assert rules
        for rule in rules:
            assert rule.support == naive.support(gold.labels, rule), rule.render()
            assert rule.confidence == naive.confidence(gold.labels, rule)
