"""Completeness-rule mining.

Breadth-first refinement search over Horn rules with completeness heads
`complete(?x,r)` / `incomplete(?x,r)`. The classic refinement shapes
(dangling, closing, instantiated atoms) are extended with operators that add
and specialize type atoms, add guarded negated-type atoms, and add and
tighten object-count bounds.

Support of a rule counts the distinct training entities that satisfy both
the body and the head label; confidence is support over support plus the
support of the opposite-polarity head. Candidates whose support already
fell below the threshold are not refined further (refinement never increases
support), which keeps the search space small.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, replace
from fractions import Fraction

from kbcomplete import rules as R
from kbcomplete.engine import AugmentedKB
from kbcomplete.errors import EmptyTrainingError, KbError
from kbcomplete.rules import Rule, canonical_key

OPERATORS = frozenset(
    {
        "dangling",
        "closing",
        "instantiated",
        "add_type",
        "specialize_type",
        "add_negated_type",
        "add_cardinality",
        "tighten_cardinality",
    }
)

VAR_NAMES = ("?x", "?y", "?z") + tuple(f"?v{i}" for i in range(3, 30))
HEAD_VAR = "?x"


@dataclass(frozen=True)
class MiningConfig:
    min_support: int = 10
    min_confidence: Fraction = Fraction(3, 10)
    max_body_atoms: int = 3
    enabled_operators: frozenset[str] = OPERATORS
    star_size: int = 1
    popularity_percentile: Fraction = Fraction(1, 20)
    # dangling atoms restricted to head-var-anchored legs (star-oracle mining)
    star_legs_only: bool = False

    def __post_init__(self):
        if self.min_support < 1:
            raise KbError("min_support must be at least 1")
        if not 0 <= self.min_confidence <= 1:
            raise KbError("min_confidence must be in [0, 1]")
        unknown = self.enabled_operators - OPERATORS
        if unknown:
            raise KbError(f"unknown operators: {sorted(unknown)}")


def star_config(base: MiningConfig) -> MiningConfig:
    """Mining restricted to star-shaped bodies: legs on the head variable."""
    return replace(
        base,
        enabled_operators=frozenset({"dangling"}),
        star_legs_only=True,
        max_body_atoms=base.star_size,
    )


def class_config(base: MiningConfig) -> MiningConfig:
    """Mining restricted to class-expression bodies."""
    return replace(
        base,
        enabled_operators=frozenset(
            {"add_type", "specialize_type", "add_negated_type"}
        ),
    )


def _body_relations(aug) -> list[str]:
    """Relations usable in relational body atoms: everything except the
    type/subclass machinery, which is reached through the class operators."""
    kb = aug.kb
    skip = {kb.type_relation, kb.subclass_relation}
    return [r for r in sorted(kb.relations) if r not in skip]


def _fresh_var(rule: Rule) -> str:
    used = set(rule.variables())
    for name in VAR_NAMES:
        if name not in used:
            return name
    raise KbError("too many variables in rule")


def _head_relation_guard(rule: Rule):
    return rule.head_relation if rule.head.kind in R.HEAD_KINDS else None


# -- classic refinement shapes ----------------------------------------------


def refine_dangling(rule: Rule, aug, config: MiningConfig) -> list[Rule]:
    """One new relational atom joining an existing variable, fresh variable
    in the other position."""
    out = []
    fresh = _fresh_var(rule)
    skip_rel = _head_relation_guard(rule)
    anchors = (rule.head_var,) if config.star_legs_only else rule.variables()
    for rel in _body_relations(aug):
        if rel == skip_rel:
            continue
        for var in anchors:
            out.append(rule.extended(R.rel_atom(rel, var, fresh), "dangling"))
            if not config.star_legs_only:
                out.append(rule.extended(R.rel_atom(rel, fresh, var), "dangling"))
    return out


def refine_closing(rule: Rule, aug, config: MiningConfig) -> list[Rule]:
    """One new relational atom over two existing variables."""
    variables = rule.variables()
    if len(variables) < 2:
        return []
    skip_rel = _head_relation_guard(rule)
    out = []
    for rel in _body_relations(aug):
        if rel == skip_rel:
            continue
        for v1 in variables:
            for v2 in variables:
                if v1 == v2:
                    continue
                atom = R.rel_atom(rel, v1, v2)
                if atom not in rule.body:
                    out.append(rule.extended(atom, "closing"))
    return out


def refine_instantiated(rule: Rule, aug, config: MiningConfig) -> list[Rule]:
    """Instantiated special atoms on the head variable.

    Only the popularity and no-change signals are added here; instantiated
    type/notype atoms are produced by the class operators, which walk the
    hierarchy from the head relation's domain and keep negated types guarded.
    """
    out = []
    x = rule.head_var
    pop = R.popular_atom(x)
    if pop not in rule.body:
        out.append(rule.extended(pop, "instantiated"))
    if aug.old_kb is not None:
        for rel in sorted(aug.kb.relations & aug.old_kb.relations):
            if rel in (aug.kb.type_relation, aug.kb.subclass_relation):
                continue
            atom = R.not_changed_atom(x, rel)
            if atom not in rule.body:
                out.append(rule.extended(atom, "instantiated"))
    return out


# -- completeness-specific operators ------------------------------------------


def _type_atoms_on_head(rule: Rule):
    return [
        a for a in rule.body if a.kind == R.TYPE and a.arg1 == rule.head_var
    ]


def op_add_type(rule: Rule, aug) -> list[Rule]:
    """type(X, domain(r)) when the head relation declares a domain and the
    body has no type atom on X yet."""
    if _type_atoms_on_head(rule):
        return []
    domain = aug.kb.relation_domains.get(rule.head_relation)
    if domain is None:
        return []
    return [rule.extended(R.type_atom(rule.head_var, domain), "add_type", prepend=True)]


def op_specialize_type(rule: Rule, aug) -> list[Rule]:
    """Replace type(X, t) by type(X, t') for each direct subclass t'."""
    out = []
    for atom in _type_atoms_on_head(rule):
        for sub in sorted(aug.kb.subclass_children.get(atom.target, ())):
            body = tuple(
                R.type_atom(rule.head_var, sub) if a == atom else a for a in rule.body
            )
            out.append(
                Rule(
                    body=body,
                    head=rule.head,
                    provenance=(*rule.provenance, "specialize_type"),
                )
            )
    return out


def op_add_negated_type(rule: Rule, aug) -> list[Rule]:
    """Add notype(X, t') for each direct subclass t' of an existing type(X, t)."""
    out = []
    for atom in _type_atoms_on_head(rule):
        for sub in sorted(aug.kb.subclass_children.get(atom.target, ())):
            negated = R.notype_atom(rule.head_var, sub)
            if negated in rule.body:
                continue
            out.append(rule.extended(negated, "add_negated_type", prepend=True))
    return out


def _card_atoms_on_head(rule: Rule):
    return [
        a
        for a in rule.body
        if a.kind in R.CARD_KINDS
        and a.arg1 == rule.head_var
        and a.target == rule.head_relation
    ]


def op_add_cardinality(rule: Rule, aug) -> list[Rule]:
    """moreThan_0(X, r) and lessThan_kmax(X, r) over the head relation, with
    kmax the largest object count any subject has for r."""
    if _card_atoms_on_head(rule):
        return []
    x, rel = rule.head_var, rule.head_relation
    out = [rule.extended(R.more_than(x, rel, 0), "add_cardinality")]
    if aug.kb.has_relation(rel):
        kmax = aug.kb.stats(rel).max_objects_per_subject
        out.append(rule.extended(R.less_than(x, rel, kmax), "add_cardinality"))
    return out


def _rule_support(rule: Rule, aug) -> int:
    sc, si = aug.label_support(rule.head_relation, rule.head_var, rule.body)
    return sc if rule.head.kind == R.COMPLETE else si


def op_tighten_cardinality(rule: Rule, aug) -> list[Rule]:
    """Move a cardinality bound to the nearest value that strictly drops the
    rule's support: largest k' < k for lessThan, smallest k' > k for moreThan.
    Bounds beyond the relation's observed maximum are never satisfiable, so
    the moreThan scan stops there."""
    out = []
    for atom in rule.body:
        if atom.kind not in R.CARD_KINDS:
            continue
        base = _rule_support(rule, aug)

        def with_bound(bound):
            body = tuple(
                replace(a, bound=bound) if a is atom else a for a in rule.body
            )
            return Rule(
                body=body,
                head=rule.head,
                provenance=(*rule.provenance, "tighten_cardinality"),
            )

        if atom.kind == R.LESS_THAN:
            candidates = range(atom.bound - 1, 0, -1)
        else:
            if not aug.kb.has_relation(atom.target):
                continue
            kmax = aug.kb.stats(atom.target).max_objects_per_subject
            candidates = range(atom.bound + 1, kmax + 1)
        for bound in candidates:
            tightened = with_bound(bound)
            if _rule_support(tightened, aug) < base:
                out.append(tightened)
                break
    return out


_OPERATOR_FNS = (
    ("dangling", refine_dangling),
    ("closing", refine_closing),
    ("instantiated", refine_instantiated),
    ("add_type", lambda rule, aug, cfg: op_add_type(rule, aug)),
    ("specialize_type", lambda rule, aug, cfg: op_specialize_type(rule, aug)),
    ("add_negated_type", lambda rule, aug, cfg: op_add_negated_type(rule, aug)),
    ("add_cardinality", lambda rule, aug, cfg: op_add_cardinality(rule, aug)),
    ("tighten_cardinality", lambda rule, aug, cfg: op_tighten_cardinality(rule, aug)),
)


def refinements(rule: Rule, aug, config: MiningConfig) -> list[Rule]:
    out = []
    for name, fn in _OPERATOR_FNS:
        if name in config.enabled_operators:
            out.extend(fn(rule, aug, config))
    return out


# -- the mining loop -----------------------------------------------------------


def support(aug: AugmentedKB, rule: Rule) -> int:
    """Distinct head-variable bindings satisfying body and head label."""
    return _rule_support(rule, aug)


def confidence(aug: AugmentedKB, rule: Rule) -> Fraction | None:
    """support(B => c) / (support(B => c) + support(B => not-c)); None when
    no labeled entity satisfies the body (such rules are discarded)."""
    sc, si = aug.label_support(rule.head_relation, rule.head_var, rule.body)
    own = sc if rule.head.kind == R.COMPLETE else si
    total = sc + si
    if total == 0:
        return None
    return Fraction(own, total)


@dataclass
class MiningStats:
    explored: int = 0
    emitted: int = 0
    pruned: int = 0


def mine(
    kb,
    old_kb,
    golds,
    config: MiningConfig,
    stats: MiningStats | None = None,
) -> list[Rule]:
    """Mine completeness rules for every relation with training labels."""
    aug = AugmentedKB(
        kb,
        old_kb=old_kb,
        golds=golds,
        popularity_percentile=config.popularity_percentile,
    )
    return mine_on(aug, config, stats=stats)


def mine_on(aug: AugmentedKB, config: MiningConfig, stats=None) -> list[Rule]:
    if not any(aug.labels.values()):
        raise EmptyTrainingError("no training labels supplied")
    stats = stats if stats is not None else MiningStats()

    frontier: deque[Rule] = deque()
    seen: set[str] = set()
    for rel in sorted(aug.labels):
        for polarity in (R.COMPLETE, R.INCOMPLETE):
            seed = Rule(body=(), head=R.head_atom(polarity, HEAD_VAR, rel))
            seen.add(canonical_key(seed))
            frontier.append(seed)

    results: dict[str, Rule] = {}
    while frontier:
        rule = frontier.popleft()
        stats.explored += 1
        sc, si = aug.label_support(rule.head_relation, rule.head_var, rule.body)
        supp = sc if rule.head.kind == R.COMPLETE else si
        if supp < config.min_support:
            stats.pruned += 1
            continue
        conf = Fraction(supp, sc + si)
        if conf >= config.min_confidence:
            key = canonical_key(rule)
            if key not in results:
                results[key] = rule.with_metrics(supp, conf)
                stats.emitted += 1
        if len(rule.body) < config.max_body_atoms:
            for cand in refinements(rule, aug, config):
                key = canonical_key(cand)
                if key not in seen:
                    seen.add(key)
                    frontier.append(cand)
    return R.sort_rules(results.values())


def config_header(config: MiningConfig) -> str:
    ops = ",".join(sorted(config.enabled_operators))
    return (
        f"config min_support={config.min_support}"
        f" min_confidence={config.min_confidence}"
        f" max_body_atoms={config.max_body_atoms}"
        f" star_size={config.star_size}"
        f" popularity_percentile={config.popularity_percentile}"
        f" star_legs_only={int(config.star_legs_only)}"
        f" operators={ops}"
    )


def parse_config_header(text: str) -> MiningConfig | None:
    if not text.startswith("config "):
        return None
    fields = dict(part.split("=", 1) for part in text.split()[1:])
    try:
        return MiningConfig(
            min_support=int(fields["min_support"]),
            min_confidence=Fraction(fields["min_confidence"]),
            max_body_atoms=int(fields["max_body_atoms"]),
            enabled_operators=frozenset(fields["operators"].split(",")),
            star_size=int(fields["star_size"]),
            popularity_percentile=Fraction(fields["popularity_percentile"]),
            star_legs_only=bool(int(fields["star_legs_only"])),
        )
    except KeyError:
        return None
