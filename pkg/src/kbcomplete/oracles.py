"""Completeness oracles and their evaluation against gold standards.

An oracle is a Boolean predicate over (entity, relation) guessing whether the
KB knows all objects of the entity for the relation. The simple oracles (CWA,
PCA, cardinality) look at the entity's own objects; popularity and no-change
look at the KB as a whole or at an older snapshot; star and class oracles are
parameterized by relations/classes. All are pure functions of an immutable
KB, so they can be evaluated concurrently without coordination.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from kbcomplete.errors import CoverageError, InvalidClassExpressionError, KbError
from kbcomplete.gold import HAS_OBJECT, NO_OBJECT, GoldStandard
from kbcomplete.kb import KnowledgeBase


@dataclass(frozen=True)
class OracleDecision:
    entity: str
    relation: str
    predicted_complete: bool


@dataclass(frozen=True)
class OracleReport:
    oracle_name: str
    relation: str
    precision: Fraction | None  # None = undefined (no predicted positives)
    recall: Fraction | None  # None = undefined (no actual positives)
    f1: Fraction | None  # None only for NA rows (oracle not computable)
    # de-biased weighted (true positives, predicted positives, actual positives)
    support_counts: tuple[Fraction, Fraction, Fraction] = (
        Fraction(0),
        Fraction(0),
        Fraction(0),
    )


# -- simple oracles ---------------------------------------------------------


def cwa(entity: str, relation: str) -> bool:
    """Closed-world assumption: everything is complete."""
    return True


def pca(kb: KnowledgeBase, entity: str, relation: str) -> bool:
    """Partial completeness: complete iff at least one object is known."""
    return bool(kb.objects(entity, relation))


def card_k(kb: KnowledgeBase, entity: str, relation: str, k: int) -> bool:
    """Complete iff the entity has at least k distinct objects.

    card_0 coincides with cwa and card_1 with pca.
    """
    if k < 0:
        raise ValueError("k must be non-negative")
    return len(kb.objects(entity, relation)) >= k


def popular_entities(kb: KnowledgeBase, percentile=Fraction(1, 20)) -> frozenset[str]:
    """The top `percentile` of entities by fact count (subject or object).

    Ties at the boundary break by lexicographic entity id, so the set is
    deterministic. Cached on the KB.
    """
    percentile = Fraction(percentile)
    if not 0 < percentile < 1:
        raise ValueError(f"percentile must be in (0, 1), got {percentile}")
    cached = kb._popular_cache.get(percentile)
    if cached is not None:
        return cached
    counts: dict[str, int] = {}
    for f in kb.facts:
        counts[f.subject] = counts.get(f.subject, 0) + 1
        counts[f.object] = counts.get(f.object, 0) + 1
    n = len(kb.entities)
    top = math.ceil(percentile * n)
    ranked = sorted(kb.entities, key=lambda e: (-counts.get(e, 0), e))
    result = frozenset(ranked[:top])
    kb._popular_cache[percentile] = result
    return result


def popularity(kb: KnowledgeBase, entity: str, relation: str, percentile=Fraction(1, 20)) -> bool:
    return entity in popular_entities(kb, percentile)


def no_change(kb: KnowledgeBase, old_kb: KnowledgeBase, entity: str, relation: str) -> bool:
    """Complete iff the entity kept exactly the same objects since `old_kb`.

    Entities the old KB never mentioned count as changed.
    """
    if entity not in old_kb.entities:
        return False
    return kb.objects(entity, relation) == old_kb.objects(entity, relation)


def star(kb: KnowledgeBase, entity: str, relation: str, legs: Iterable[str]) -> bool:
    """Complete iff the entity has at least one object for every leg relation."""
    legs = tuple(legs)
    if not legs:
        raise ValueError("star oracle needs at least one leg relation")
    if relation in legs:
        raise ValueError("star legs must not include the studied relation")
    return all(kb.objects(entity, leg) for leg in legs)


def class_oracle(kb: KnowledgeBase, entity: str, relation: str, expr) -> bool:
    """Class-membership oracle.

    `expr` is either a class name (entity must be an instance) or a
    (base, negated) pair meaning base AND NOT negated, where `negated` must
    be a subclass of `base`.
    """
    if isinstance(expr, str):
        return entity in kb.instances_of(expr)
    base, negated = expr
    if negated not in _descendants(kb, base):
        raise InvalidClassExpressionError(
            f"{negated!r} is not a subclass of {base!r}"
        )
    return entity in kb.instances_of(base) and entity not in kb.instances_of(negated)


def _descendants(kb, cls):
    seen = {cls}
    stack = [cls]
    while stack:
        for child in kb.subclass_children.get(stack.pop(), frozenset()):
            if child not in seen:
                seen.add(child)
                stack.append(child)
    return seen


# -- evaluation ---------------------------------------------------------------


def _decision_map(decisions) -> dict[tuple[str, str], bool]:
    if isinstance(decisions, Mapping):
        return dict(decisions)
    return {(d.entity, d.relation): d.predicted_complete for d in decisions}


def _label_weight(gold: GoldStandard, stratum_sample_share) -> dict[str, Fraction]:
    """Weight per stratum: population share over sample share (1 if uniform)."""
    if gold.sampling == "uniform":
        return {HAS_OBJECT: Fraction(1), NO_OBJECT: Fraction(1), None: Fraction(1)}
    w_has, w_no = gold.stratum_weights
    out = {}
    for stratum, pop_share in ((HAS_OBJECT, w_has), (NO_OBJECT, w_no)):
        share = stratum_sample_share.get(stratum, Fraction(0))
        out[stratum] = pop_share / share if share else Fraction(0)
    return out


def evaluate_oracle(decisions, gold: GoldStandard, oracle_name: str = "oracle") -> OracleReport:
    """De-biased precision/recall/F1 of a set of decisions against a gold standard.

    Every labeled pair must have a decision. For biased samples each pair is
    weighted by (population stratum share / sample stratum share), the
    stratified estimator of the population counts. Undefined precision
    (no predicted positives) is reported as None and forces F1 = 0.
    """
    decided = _decision_map(decisions)
    for lab in gold.labels:
        if (lab.entity, lab.relation) not in decided:
            raise CoverageError(f"no decision for gold pair ({lab.entity}, {lab.relation})")
    if gold.sampling == "biased":
        total = len(gold.labels)
        counts: dict[str, int] = {}
        for lab in gold.labels:
            if lab.stratum is None:
                raise KbError("biased gold labels must carry their stratum")
            counts[lab.stratum] = counts.get(lab.stratum, 0) + 1
        shares = {s: Fraction(c, total) for s, c in counts.items()}
    else:
        shares = {}
    weight = _label_weight(gold, shares)

    tp = pred = actual = Fraction(0)
    for lab in gold.labels:
        w = weight[lab.stratum]
        predicted = decided[(lab.entity, lab.relation)]
        if predicted:
            pred += w
        if lab.complete:
            actual += w
        if predicted and lab.complete:
            tp += w

    precision = tp / pred if pred else None
    recall = tp / actual if actual else None
    if precision is None or recall is None or precision + recall == 0:
        f1 = Fraction(0)
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return OracleReport(
        oracle_name=oracle_name,
        relation=gold.relation,
        precision=precision,
        recall=recall,
        f1=f1,
        support_counts=(tp, pred, actual),
    )


def format_metric(value) -> str:
    return "NA" if value is None else f"{float(value):.4f}"


def write_report_tsv(reports: Iterable[OracleReport], path):
    """`oracle TAB relation TAB precision TAB recall TAB f1`, NA when undefined."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(render_report_tsv(reports))


def render_report_tsv(reports: Iterable[OracleReport]) -> str:
    lines = ["oracle\trelation\tprecision\trecall\tf1"]
    for r in reports:
        lines.append(
            "\t".join(
                (
                    r.oracle_name,
                    r.relation,
                    format_metric(r.precision),
                    format_metric(r.recall),
                    format_metric(r.f1),
                )
            )
        )
    return "\n".join(lines) + "\n"
