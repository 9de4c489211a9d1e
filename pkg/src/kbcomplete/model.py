"""The learned completeness oracle: mined rules applied as a predictor.

An entity is predicted complete for a relation when some complete-rule fires
and no incomplete-rule fires with higher confidence; on a confidence tie the
higher-support rule wins, and an exact tie predicts false. Restricting the
rule set to star-shaped or class-expression bodies yields the star and class
oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

from kbcomplete import rules as R
from kbcomplete.engine import AugmentedKB
from kbcomplete.errors import RuleFormatError
from kbcomplete.mining import MiningConfig, config_header, parse_config_header
from kbcomplete.oracles import OracleDecision
from kbcomplete.rules import Rule, read_rules, sort_rules, write_rules

STAR_ONLY = "star-only"
CLASS_ONLY = "class-only"


@dataclass(frozen=True)
class RuleModel:
    rules: tuple[Rule, ...]
    config: MiningConfig | None = None

    def __post_init__(self):
        for rule in self.rules:
            if rule.head.kind not in R.HEAD_KINDS:
                raise RuleFormatError(
                    f"model rule head must be a completeness atom: {rule.render()}"
                )
            if rule.support is None or rule.confidence is None:
                raise RuleFormatError(
                    f"model rules need support and confidence: {rule.render()}"
                )

    def rules_for(self, relation: str, polarity: str) -> tuple[Rule, ...]:
        return tuple(
            r
            for r in self.rules
            if r.head_relation == relation and r.head.kind == polarity
        )

    def relations(self) -> tuple[str, ...]:
        return tuple(sorted({r.head_relation for r in self.rules}))


def predict(aug: AugmentedKB, model: RuleModel, entity: str, relation: str) -> bool:
    """Single-pair form of the oracle; see `predict_many` for batches."""
    return predict_many(aug, model, relation, (entity,))[entity]


def predict_many(
    aug: AugmentedKB, model: RuleModel, relation: str, entities
) -> dict[str, bool]:
    """Evaluate the learned oracle for many entities at once.

    Each rule body is evaluated as one kernel pass over all entities, then
    the best firing rule of each polarity is compared per entity.
    """
    entities = tuple(entities)
    best_c: dict[str, Rule] = {}
    best_i: dict[str, Rule] = {}
    for polarity, best in ((R.COMPLETE, best_c), (R.INCOMPLETE, best_i)):
        for rule in model.rules_for(relation, polarity):
            mask = aug.entity_mask(rule.body, rule.head_var, entities)
            for entity, hit in zip(entities, mask):
                if not hit:
                    continue
                cur = best.get(entity)
                if cur is None or (rule.confidence, rule.support) > (
                    cur.confidence,
                    cur.support,
                ):
                    best[entity] = rule
    out = {}
    for entity in entities:
        c = best_c.get(entity)
        i = best_i.get(entity)
        if c is None:
            out[entity] = False
        elif i is None:
            out[entity] = True
        elif c.confidence != i.confidence:
            out[entity] = c.confidence > i.confidence
        else:
            out[entity] = c.support > i.support
    return out


def evaluation_domain(kb, relation: str) -> tuple[str, ...]:
    """Entities the oracle is evaluated over: instances of the relation's
    declared domain class, else every entity that is subject of some fact."""
    domain_class = kb.relation_domains.get(relation)
    if domain_class is not None:
        return tuple(sorted(kb.instances_of(domain_class)))
    return tuple(sorted(kb.subjects))


def predict_all(
    aug: AugmentedKB, model: RuleModel, relation: str, domain=None
) -> list[OracleDecision]:
    entities = tuple(domain) if domain is not None else evaluation_domain(aug.kb, relation)
    decided = predict_many(aug, model, relation, entities)
    return [OracleDecision(e, relation, decided[e]) for e in entities]


# -- restricted oracles ---------------------------------------------------------


def _is_star_body(rule: Rule) -> bool:
    occurrences: dict[str, int] = {}
    for atom in (rule.head, *rule.body):
        for v in atom.variables():
            occurrences[v] = occurrences.get(v, 0) + 1
    for atom in rule.body:
        if atom.kind != R.REL:
            return False
        if atom.arg1 != rule.head_var:
            return False
        if not R.is_var(atom.arg2) or occurrences[atom.arg2] != 1:
            return False
    return True


def _is_class_body(rule: Rule) -> bool:
    return all(atom.kind in R.CLASS_KINDS for atom in rule.body)


def restrict_model(model: RuleModel, mode: str) -> RuleModel:
    """Keep only star-shaped or class-expression rules.

    Star bodies are existential legs anchored on the head variable; class
    bodies are type/notype atoms only. Cardinality, popularity and no-change
    atoms disqualify a rule in both modes, as do mixed bodies.
    """
    if mode == STAR_ONLY:
        keep = _is_star_body
    elif mode == CLASS_ONLY:
        keep = _is_class_body
    else:
        raise ValueError(f"unknown restriction mode {mode!r}")
    return RuleModel(
        rules=tuple(r for r in model.rules if keep(r)), config=model.config
    )


# -- persistence ------------------------------------------------------------------


def save_model(model: RuleModel, path):
    header = config_header(model.config) if model.config else None
    write_rules(sort_rules(model.rules), path, header=header)


def load_model(path) -> RuleModel:
    rules, headers = read_rules(path)
    config = None
    parsed = [parse_config_header(h) for h in headers]
    configs = [c for c in parsed if c is not None]
    if len(configs) == 1:
        config = configs[0]
    return RuleModel(rules=tuple(rules), config=config)


def decisions_tsv(decisions) -> str:
    """Predictions in the gold-standard TSV format; `incomplete` only means
    "not predicted complete"."""
    lines = []
    for d in sorted(decisions, key=lambda d: (d.relation, d.entity)):
        label = "complete" if d.predicted_complete else "incomplete"
        lines.append(f"{d.entity}\t{d.relation}\t{label}")
    return "\n".join(lines) + "\n" if lines else ""
