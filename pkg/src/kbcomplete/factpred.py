"""Fact prediction and completeness-based filtering.

Closed Horn rules with relational heads are mined with the classic dangling/
closing refinements, applied to predict facts absent from the KB, and the
predictions are then filtered by a learned completeness model: a predicted
fact r(s, o) is dropped when the model asserts complete(s, r). Precision is
reported per confidence bucket against a reference fact set (at desk scale,
the synthetic ideal KB).

Rule confidence uses the PCA-restricted denominator by default: counter-
examples are body instantiations whose subject already has some object for
the head relation. Plain closed-world confidence is available as an option.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from fractions import Fraction

from kbcomplete import rules as R
from kbcomplete.engine import AugmentedKB, body_solutions
from kbcomplete.kb import Fact, KnowledgeBase
from kbcomplete.mining import HEAD_VAR, MiningConfig, refine_closing, refine_dangling
from kbcomplete.model import RuleModel, predict_many
from kbcomplete.rules import Rule, canonical_key, sort_rules

HEAD_VAR_2 = "?y"

PCA_CONFIDENCE = "pca"
CWA_CONFIDENCE = "cwa"


@dataclass(frozen=True)
class Prediction:
    fact: Fact
    confidence: Fraction
    rules: tuple[str, ...] = ()  # rendered rule texts that produced the fact

    def __post_init__(self):
        if not 0 <= self.confidence <= 1:
            raise ValueError(f"confidence {self.confidence} outside [0, 1]")


def _fact_rule_support(aug: AugmentedKB, rule: Rule) -> int:
    """Distinct (x, y) with body satisfied and r(x, y) in the KB."""
    pairs = aug.kb.pairs(rule.head_relation)
    if not pairs:
        return 0
    mask = aug.body_mask(rule.body, (rule.head.arg1, rule.head.arg2), pairs)
    return int(mask.sum())


def _fact_rule_confidence(kb, rule: Rule, supp: int, mode: str) -> Fraction | None:
    """supp over the number of distinct head-variable bindings of the body,
    PCA-restricted to subjects that have some object for the head relation."""
    if supp == 0:
        return None
    bindings = body_solutions(kb, rule.body, (rule.head.arg1, rule.head.arg2))
    if mode == PCA_CONFIDENCE:
        denom = sum(1 for x, _ in bindings if kb.objects(x, rule.head_relation))
    else:
        denom = len(bindings)
    if denom == 0:
        return None
    return Fraction(supp, denom)


def mine_fact_rules(
    kb: KnowledgeBase,
    config: MiningConfig,
    confidence_mode: str = PCA_CONFIDENCE,
) -> list[Rule]:
    """Closed Horn rules r(X, Y) <= body above the support threshold.

    Non-closed intermediates are refined but never emitted; bodies never use
    the head relation. Support is pruned monotonically as in completeness
    mining, confidence only filters the final output.
    """
    aug = AugmentedKB(kb)
    skip = {kb.type_relation, kb.subclass_relation}
    head_rels = [r for r in sorted(kb.relations) if r not in skip]

    frontier: deque[Rule] = deque()
    seen: set[str] = set()
    for rel in head_rels:
        seed = Rule(body=(), head=R.rel_atom(rel, HEAD_VAR, HEAD_VAR_2))
        seen.add(canonical_key(seed))
        frontier.append(seed)

    results: dict[str, Rule] = {}
    while frontier:
        rule = frontier.popleft()
        if rule.head in rule.body:
            # reflexive tautology: satisfied bodies always contain the head
            # fact, so the rule can never predict anything new
            continue
        supp = _fact_rule_support(aug, rule)
        if supp < config.min_support:
            continue
        if rule.body and rule.is_closed():
            conf = _fact_rule_confidence(kb, rule, supp, confidence_mode)
            if conf is not None and conf >= config.min_confidence:
                key = canonical_key(rule)
                if key not in results:
                    results[key] = rule.with_metrics(supp, conf)
        if len(rule.body) < config.max_body_atoms:
            for cand in refinements_for_fact_rules(rule, aug, config):
                key = canonical_key(cand)
                if key not in seen:
                    seen.add(key)
                    frontier.append(cand)
    return sort_rules(results.values())


def refinements_for_fact_rules(rule: Rule, aug, config: MiningConfig) -> list[Rule]:
    out = []
    if "dangling" in config.enabled_operators:
        out.extend(refine_dangling(rule, aug, config))
    if "closing" in config.enabled_operators:
        out.extend(refine_closing(rule, aug, config))
    return out


def predict_facts(kb: KnowledgeBase, rules) -> list[Prediction]:
    """Head instantiations of body matches that are absent from the KB.

    A fact predicted by several rules keeps the maximum confidence and all
    producing rules.
    """
    found: dict[Fact, list[tuple[Fraction, str]]] = {}
    for rule in rules:
        if rule.head.kind != R.REL or rule.confidence is None:
            continue
        rel = rule.head_relation
        for x, y in body_solutions(kb, rule.body, (rule.head.arg1, rule.head.arg2)):
            if y in kb.objects(x, rel):
                continue
            fact = Fact(x, rel, y)
            found.setdefault(fact, []).append((rule.confidence, rule.render()))
    out = []
    for fact in sorted(found, key=lambda f: (f.subject, f.relation, f.object)):
        producers = found[fact]
        conf = max(c for c, _ in producers)
        texts = tuple(sorted({text for _, text in producers}))
        out.append(Prediction(fact, conf, texts))
    return out


def filter_predictions(predictions, aug: AugmentedKB, model: RuleModel) -> list[Prediction]:
    """Keep predictions r(s, o) unless the model predicts complete(s, r).

    Relations the model has no rules for pass through untouched.
    """
    by_rel: dict[str, list[Prediction]] = {}
    for p in predictions:
        by_rel.setdefault(p.fact.relation, []).append(p)
    kept = []
    for rel, preds in sorted(by_rel.items()):
        subjects = sorted({p.fact.subject for p in preds})
        decided = predict_many(aug, model, rel, subjects)
        kept.extend(p for p in preds if not decided[p.fact.subject])
    return sorted(kept, key=lambda p: (p.fact.subject, p.fact.relation, p.fact.object))


# -- bucket report ------------------------------------------------------------


@dataclass(frozen=True)
class BucketRow:
    lo: Fraction  # exclusive
    hi: Fraction  # inclusive
    count: int
    kept_count: int
    precision: Fraction | None
    kept_precision: Fraction | None
    cum_precision: Fraction | None
    cum_kept_precision: Fraction | None


@dataclass(frozen=True)
class BucketReport:
    rows: tuple[BucketRow, ...]
    total: int
    total_kept: int
    correct_total: int | None = None
    correct_removed: int | None = None
    removed_correct_fraction: Fraction | None = None


def bucket_report(predictions, reference=None, kept=None) -> BucketReport:
    """Bucket predictions by confidence, decade buckets from (0.9, 1.0] down.

    `reference` is a fact set treated as ground truth for precision columns;
    without it only counts are reported. `kept` is the post-filter subset;
    the report then also exposes the share of correct predictions the filter
    removed.
    """
    predictions = list(predictions)
    kept_set = set(kept) if kept is not None else set(predictions)

    def correct(p):
        return p.fact in reference

    rows = []
    cum_n = cum_hit = cum_kn = cum_khit = 0
    for k in range(10, 0, -1):
        hi, lo = Fraction(k, 10), Fraction(k - 1, 10)
        bucket = [p for p in predictions if lo < p.confidence <= hi]
        in_kept = [p for p in bucket if p in kept_set]
        n, kn = len(bucket), len(in_kept)
        cum_n += n
        cum_kn += kn
        if reference is not None:
            hit = sum(1 for p in bucket if correct(p))
            khit = sum(1 for p in in_kept if correct(p))
            cum_hit += hit
            cum_khit += khit
            rows.append(
                BucketRow(
                    lo,
                    hi,
                    n,
                    kn,
                    Fraction(hit, n) if n else None,
                    Fraction(khit, kn) if kn else None,
                    Fraction(cum_hit, cum_n) if cum_n else None,
                    Fraction(cum_khit, cum_kn) if cum_kn else None,
                )
            )
        else:
            rows.append(BucketRow(lo, hi, n, kn, None, None, None, None))

    if reference is not None:
        correct_total = sum(1 for p in predictions if correct(p))
        removed_correct = sum(
            1 for p in predictions if correct(p) and p not in kept_set
        )
        fraction = (
            Fraction(removed_correct, correct_total) if correct_total else None
        )
    else:
        correct_total = removed_correct = fraction = None
    return BucketReport(
        rows=tuple(rows),
        total=len(predictions),
        total_kept=len(kept_set & set(predictions)),
        correct_total=correct_total,
        correct_removed=removed_correct,
        removed_correct_fraction=fraction,
    )


def render_bucket_tsv(report: BucketReport) -> str:
    from kbcomplete.oracles import format_metric

    lines = [
        "bucket\tpredictions\tkept\tprecision\tkept_precision\tcum_precision\tcum_kept_precision"
    ]
    for row in report.rows:
        lines.append(
            "\t".join(
                (
                    f"({float(row.lo):.1f},{float(row.hi):.1f}]",
                    str(row.count),
                    str(row.kept_count),
                    format_metric(row.precision),
                    format_metric(row.kept_precision),
                    format_metric(row.cum_precision),
                    format_metric(row.cum_kept_precision),
                )
            )
        )
    lines.append(f"# total\t{report.total}\tkept\t{report.total_kept}")
    if report.correct_total is not None:
        lines.append(
            f"# correct\t{report.correct_total}"
            f"\tcorrect_removed\t{report.correct_removed}"
            f"\tremoved_correct_fraction\t{format_metric(report.removed_correct_fraction)}"
        )
    return "\n".join(lines) + "\n"


# -- prediction TSV -----------------------------------------------------------


def write_predictions(predictions, kept, path):
    """`subject TAB relation TAB object TAB confidence TAB kept|filtered`."""
    kept_set = set(kept)
    with open(path, "w", encoding="utf-8") as fh:
        for p in sorted(
            predictions, key=lambda p: (p.fact.subject, p.fact.relation, p.fact.object)
        ):
            flag = "kept" if p in kept_set else "filtered"
            fh.write(
                f"{p.fact.subject}\t{p.fact.relation}\t{p.fact.object}"
                f"\t{p.confidence}\t{flag}\n"
            )


def read_predictions(path) -> tuple[list[Prediction], list[Prediction]]:
    """Returns (all predictions, kept predictions) from a predictions TSV."""
    preds, kept = [], []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            s, r, o, conf, flag = line.split("\t")
            p = Prediction(Fact(s, r, o), Fraction(conf))
            preds.append(p)
            if flag == "kept":
                kept.append(p)
    return preds, kept
