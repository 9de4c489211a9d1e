"""Experimental protocol: gold generation, sampling, grid search, reports.

Gold standards are auto-generated for relations whose cardinality category
fixes the labels (e.g. everyone has exactly one birth place). Relations where
few subjects have objects get a 50/50 stratified sample whose evaluation is
de-biased back to population proportions. Model selection runs a seeded
80/20 split with k-fold cross-validation over a support x confidence grid.
"""

from __future__ import annotations

import random
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from fractions import Fraction

from kbcomplete import oracles as O
from kbcomplete import rules as R
from kbcomplete.engine import AugmentedKB
from kbcomplete.errors import FactFileError, InsufficientLabelsError, KbError, UnsupportedCategoryError
from kbcomplete.gold import HAS_OBJECT, NO_OBJECT, CompletenessLabel, GoldStandard
from kbcomplete.mining import MiningConfig, mine_on
from kbcomplete.model import (
    CLASS_ONLY,
    STAR_ONLY,
    RuleModel,
    evaluation_domain,
    predict_many,
    restrict_model,
)
from kbcomplete.oracles import OracleReport, evaluate_oracle, format_metric

EXACTLY_ONE = "exactly-one"
AT_LEAST_ONE = "at-least-one"
AT_MOST_ONE = "at-most-one"
ZERO_OR_MORE = "zero-or-more"
EXACTLY_TWO = "exactly-two"
CATEGORIES = (EXACTLY_ONE, AT_LEAST_ONE, AT_MOST_ONE, ZERO_OR_MORE, EXACTLY_TWO)

DEFAULT_SUPPORT_GRID = tuple(range(10, 101, 10))
DEFAULT_CONFIDENCE_GRID = tuple(Fraction(k, 10) for k in range(3, 11))
DEFAULT_SAMPLE_SIZE = 200
BIASED_THRESHOLD = Fraction(1, 10)


@dataclass(frozen=True)
class RelationCategory:
    relation: str
    category: str
    domain: str | None = None

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise KbError(f"unknown relation category {self.category!r}")


def read_relations_config(path) -> dict[str, RelationCategory]:
    """`relation TAB category [TAB domain-class]` per line."""
    out = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line or line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) not in (2, 3):
                raise FactFileError(path, lineno, "expected 2 or 3 fields")
            domain = fields[2] if len(fields) == 3 and fields[2] else None
            out[fields[0]] = RelationCategory(fields[0], fields[1], domain)
    return out


def write_relations_config(categories, path):
    with open(path, "w", encoding="utf-8") as fh:
        for rc in sorted(categories, key=lambda rc: rc.relation):
            if rc.domain:
                fh.write(f"{rc.relation}\t{rc.category}\t{rc.domain}\n")
            else:
                fh.write(f"{rc.relation}\t{rc.category}\n")


# -- gold standards -----------------------------------------------------------


def autogen_gold(kb, relation: str, category: str) -> GoldStandard:
    """Labels derivable from the relation's cardinality category alone.

    exactly-one: an object means complete, none means incomplete.
    at-least-one: no object means incomplete; nothing else derivable.
    at-most-one: exactly one object means complete; nothing else derivable.
    exactly-two: two objects mean complete, fewer mean incomplete.
    """
    if category == ZERO_OR_MORE:
        raise UnsupportedCategoryError(
            f"{relation}: zero-or-more relations need externally supplied labels"
        )
    labels = []
    for entity in evaluation_domain(kb, relation):
        n = len(kb.objects(entity, relation))
        complete = None
        if category == EXACTLY_ONE:
            complete = n >= 1
        elif category == AT_LEAST_ONE:
            complete = False if n == 0 else None
        elif category == AT_MOST_ONE:
            complete = True if n == 1 else None
        elif category == EXACTLY_TWO:
            complete = True if n == 2 else (False if n < 2 else None)
        if complete is not None:
            labels.append(CompletenessLabel(entity, relation, complete))
    return GoldStandard(relation, tuple(labels))


def sample(population: GoldStandard, relation: str, kb, size=DEFAULT_SAMPLE_SIZE, seed=0) -> GoldStandard:
    """Sample a gold standard for annotation-scale evaluation.

    Uniform when at least 10% of the population has an object for the
    relation; otherwise a 50/50 stratified sample over has-object/no-object
    with the population shares recorded for de-biasing. A stratum smaller
    than half the requested size is taken whole.
    """
    if not population.labels:
        raise KbError(f"{relation}: empty population")
    rng = random.Random(seed)
    labels = sorted(population.labels, key=lambda lab: lab.entity)
    has = [lab for lab in labels if kb.objects(lab.entity, relation)]
    no = [lab for lab in labels if not kb.objects(lab.entity, relation)]
    frac_has = Fraction(len(has), len(labels))
    if frac_has >= BIASED_THRESHOLD:
        chosen = rng.sample(labels, min(size, len(labels)))
        return GoldStandard(
            relation, tuple(sorted(chosen, key=lambda lab: lab.entity))
        )
    half = size // 2
    chosen = []
    for stratum, pool in ((HAS_OBJECT, has), (NO_OBJECT, no)):
        take = rng.sample(pool, min(half, len(pool)))
        chosen.extend(replace(lab, stratum=stratum) for lab in take)
    weights = (
        Fraction(len(has), len(labels)),
        Fraction(len(no), len(labels)),
    )
    return GoldStandard(
        relation,
        tuple(sorted(chosen, key=lambda lab: lab.entity)),
        sampling="biased",
        stratum_weights=weights,
    )


# -- model selection -----------------------------------------------------------


@dataclass(frozen=True)
class GridPoint:
    min_support: int
    min_confidence: Fraction
    f1: Fraction | None = None  # mean cross-validation F1


@dataclass
class SelectionResult:
    model: RuleModel
    best: GridPoint
    train_gold: GoldStandard
    test_gold: GoldStandard
    grid: tuple[GridPoint, ...]


def _split_gold(gold: GoldStandard, seed: int, folds: int):
    """Stratified 80/20 split plus round-robin fold assignment on the 80%."""
    rng = random.Random(seed)
    complete = sorted(
        (lab for lab in gold.labels if lab.complete), key=lambda lab: lab.entity
    )
    incomplete = sorted(
        (lab for lab in gold.labels if not lab.complete), key=lambda lab: lab.entity
    )
    for name, pool in (("complete", complete), ("incomplete", incomplete)):
        if len(pool) < folds:
            raise InsufficientLabelsError(
                gold.relation,
                f"{len(pool)} {name} labels < {folds} folds",
            )
    train, test = [], []
    fold_of: dict[str, int] = {}
    for pool in (complete, incomplete):
        pool = list(pool)
        rng.shuffle(pool)
        n_test = max(1, len(pool) // 5)
        test.extend(pool[:n_test])
        rest = pool[n_test:]
        if len(rest) < folds:
            raise InsufficientLabelsError(
                gold.relation, f"too few labels to form {folds} training folds"
            )
        for i, lab in enumerate(rest):
            train.append(lab)
            fold_of[lab.entity] = i % folds
    train_gold = gold.with_labels(sorted(train, key=lambda lab: lab.entity))
    test_gold = gold.with_labels(sorted(test, key=lambda lab: lab.entity))
    return train_gold, test_gold, fold_of


def _fold_f1(aug, train_gold, fold_of, folds, config) -> Fraction:
    scores = []
    for k in range(folds):
        fit = [lab for lab in train_gold.labels if fold_of[lab.entity] != k]
        held = [lab for lab in train_gold.labels if fold_of[lab.entity] == k]
        if not held:
            continue
        fit_gold = train_gold.with_labels(fit)
        held_gold = train_gold.with_labels(held)
        fold_aug = aug.with_labels([fit_gold])
        rules = mine_on(fold_aug, config)
        model = RuleModel(tuple(rules), config=config)
        decided = predict_many(
            fold_aug, model, train_gold.relation, [lab.entity for lab in held]
        )
        decisions = {
            (lab.entity, lab.relation): decided[lab.entity] for lab in held
        }
        report = evaluate_oracle(decisions, held_gold)
        scores.append(report.f1 if report.f1 is not None else Fraction(0))
    if not scores:
        return Fraction(0)
    return sum(scores, Fraction(0)) / len(scores)


def train_and_select(
    kb,
    old_kb,
    gold: GoldStandard,
    folds: int = 4,
    support_grid=DEFAULT_SUPPORT_GRID,
    confidence_grid=DEFAULT_CONFIDENCE_GRID,
    seed: int = 0,
    base_config: MiningConfig | None = None,
    threads: int = 1,
) -> SelectionResult:
    """Grid-search mining thresholds by cross-validated F1 for one relation.

    Ties prefer the stricter configuration (higher support, then higher
    confidence). The model is re-trained on the full training split at the
    selected point; evaluating on the returned held-out split is the
    caller's move.
    """
    base = base_config or MiningConfig()
    train_gold, test_gold, fold_of = _split_gold(gold, seed, folds)
    aug = AugmentedKB(
        kb,
        old_kb=old_kb,
        golds=[gold],
        popularity_percentile=base.popularity_percentile,
    )

    points = [
        GridPoint(s, Fraction(c)) for s in support_grid for c in confidence_grid
    ]

    def evaluate_point(gp: GridPoint) -> GridPoint:
        config = replace(
            base, min_support=gp.min_support, min_confidence=gp.min_confidence
        )
        return replace(gp, f1=_fold_f1(aug, train_gold, fold_of, folds, config))

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            evaluated = list(pool.map(evaluate_point, points))
    else:
        evaluated = [evaluate_point(gp) for gp in points]

    best = max(evaluated, key=lambda gp: (gp.f1, gp.min_support, gp.min_confidence))
    final_config = replace(
        base, min_support=best.min_support, min_confidence=best.min_confidence
    )
    final_aug = aug.with_labels([train_gold])
    rules = mine_on(final_aug, final_config)
    model = RuleModel(tuple(rules), config=final_config)
    return SelectionResult(
        model=model,
        best=best,
        train_gold=train_gold,
        test_gold=test_gold,
        grid=tuple(evaluated),
    )


# -- oracle comparison report -----------------------------------------------------


REPORT_ORACLES = ("cwa", "pca", "card_2", "popularity", "no-change", "star", "class", "amie")


def _gold_decisions(kb, old_kb, aug, gold, oracle, model, percentile):
    """Decision map for one oracle over one gold standard; None marks an
    uncomputable (NA) column."""
    pairs = [(lab.entity, lab.relation) for lab in gold.labels]
    rel = gold.relation
    if oracle == "cwa":
        return {p: True for p in pairs}
    if oracle == "pca":
        return {(e, r): O.pca(kb, e, r) for e, r in pairs}
    if oracle.startswith("card_"):
        k = int(oracle.split("_", 1)[1])
        if max((len(kb.objects(e, rel)) for e, _ in pairs), default=0) < k:
            return None
        return {(e, r): O.card_k(kb, e, r, k) for e, r in pairs}
    if oracle == "popularity":
        return {(e, r): O.popularity(kb, e, r, percentile) for e, r in pairs}
    if oracle == "no-change":
        if old_kb is None:
            return None
        return {(e, r): O.no_change(kb, old_kb, e, r) for e, r in pairs}
    if oracle in ("star", "class", "amie"):
        if model is None:
            return None
        used = model
        if oracle == "star":
            used = restrict_model(model, STAR_ONLY)
        elif oracle == "class":
            used = restrict_model(model, CLASS_ONLY)
        decided = predict_many(aug, used, rel, [e for e, _ in pairs])
        return {(e, r): decided[e] for e, r in pairs}
    raise KbError(f"unknown oracle {oracle!r}")


def report(
    kb,
    old_kb,
    golds: dict[str, GoldStandard],
    models: dict[str, RuleModel] | RuleModel | None = None,
    oracles=REPORT_ORACLES,
    percentile=Fraction(1, 20),
) -> list[OracleReport]:
    """Precision/recall/F1 of every oracle on every gold standard.

    Uncomputable cells (no old KB, no model, no entity with enough objects
    for card_k) become NA rows. Relations evaluated on a biased sample are
    reported de-biased and marked with a trailing `*`.
    """
    aug = AugmentedKB(kb, old_kb=old_kb, golds=list(golds.values()), popularity_percentile=percentile)
    out = []
    for rel in sorted(golds):
        gold = golds[rel]
        model = models.get(rel) if isinstance(models, dict) else models
        display = rel + ("*" if gold.sampling == "biased" else "")
        for oracle in oracles:
            decisions = _gold_decisions(
                kb, old_kb, aug, gold, oracle, model, percentile
            )
            if decisions is None:
                out.append(
                    OracleReport(oracle, display, None, None, None)
                )
                continue
            rep = evaluate_oracle(decisions, gold, oracle_name=oracle)
            out.append(replace(rep, relation=display))
    return out


def render_report_markdown(reports) -> str:
    """One row per relation, precision/recall column pair per oracle."""
    by_rel: dict[str, dict[str, OracleReport]] = {}
    oracles: list[str] = []
    for rep in reports:
        by_rel.setdefault(rep.relation, {})[rep.oracle_name] = rep
        if rep.oracle_name not in oracles:
            oracles.append(rep.oracle_name)
    lines = [
        "| relation | " + " | ".join(f"{o} Pr | {o} Rec" for o in oracles) + " |",
        "|" + "---|" * (1 + 2 * len(oracles)),
    ]
    for rel in sorted(by_rel):
        cells = [rel]
        for o in oracles:
            rep = by_rel[rel].get(o)
            if rep is None or rep.f1 is None and rep.precision is None and rep.recall is None:
                cells.extend(["NA", "NA"])
            else:
                cells.extend([format_metric(rep.precision), format_metric(rep.recall)])
        lines.append("| " + " | ".join(cells) + " |")
    return "\n".join(lines) + "\n"
