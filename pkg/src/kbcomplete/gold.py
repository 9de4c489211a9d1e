"""Gold-standard completeness assertions and their TSV representation.

A gold standard labels (entity, relation) pairs as complete or incomplete.
Biased samples additionally know which stratum each pair came from
(has-object vs no-object) and the population share of each stratum; the
evaluation code uses these to de-bias precision/recall estimates.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from fractions import Fraction

from kbcomplete.errors import FactFileError, KbError

HAS_OBJECT = "has-object"
NO_OBJECT = "no-object"
STRATA_HEADER = "#strata"


@dataclass(frozen=True)
class CompletenessLabel:
    entity: str
    relation: str
    complete: bool
    stratum: str | None = None  # HAS_OBJECT / NO_OBJECT for biased samples

    @property
    def label(self) -> str:
        return "complete" if self.complete else "incomplete"


@dataclass(frozen=True)
class GoldStandard:
    relation: str
    labels: tuple[CompletenessLabel, ...]
    sampling: str = "uniform"  # "uniform" | "biased"
    # population share of (has-object, no-object) strata; required when biased
    stratum_weights: tuple[Fraction, Fraction] | None = None

    def __post_init__(self):
        seen = set()
        for lab in self.labels:
            if lab.relation != self.relation:
                raise KbError(
                    f"label relation {lab.relation!r} != gold relation {self.relation!r}"
                )
            key = (lab.entity, lab.relation)
            if key in seen:
                raise KbError(f"duplicate gold label for {key}")
            seen.add(key)
        if self.sampling == "biased":
            if self.stratum_weights is None:
                raise KbError("biased gold standard requires stratum weights")
            for w in self.stratum_weights:
                if not 0 <= w <= 1:
                    raise KbError(f"stratum weight {w} outside [0, 1]")
        elif self.sampling != "uniform":
            raise KbError(f"unknown sampling kind {self.sampling!r}")

    def entities(self) -> tuple[str, ...]:
        return tuple(lab.entity for lab in self.labels)

    def by_entity(self) -> dict[str, bool]:
        return {lab.entity: lab.complete for lab in self.labels}

    def with_labels(self, labels) -> "GoldStandard":
        return replace(self, labels=tuple(labels))


def assign_strata(gold: GoldStandard, kb) -> GoldStandard:
    """Tag each label with its has-object / no-object stratum from `kb`."""
    labels = tuple(
        replace(lab, stratum=HAS_OBJECT if kb.objects(lab.entity, lab.relation) else NO_OBJECT)
        for lab in gold.labels
    )
    return gold.with_labels(labels)


def write_gold(golds, path):
    """Write gold standards to TSV: `entity TAB relation TAB label`.

    A biased sample is preceded by a `#strata` header with the population
    shares of the has-object and no-object strata. Mixing biased standards
    with different weights in one file is not representable.
    """
    golds = list(golds)
    weights = {g.stratum_weights for g in golds if g.sampling == "biased"}
    if len(weights) > 1:
        raise KbError("cannot write biased gold standards with differing strata to one file")
    with open(path, "w", encoding="utf-8") as fh:
        if weights:
            w_has, w_no = next(iter(weights))
            fh.write(f"{STRATA_HEADER}\t{w_has}\t{w_no}\n")
        rows = []
        for g in golds:
            rows.extend((lab.relation, lab.entity, lab.label) for lab in g.labels)
        for relation, entity, label in sorted(rows):
            fh.write(f"{entity}\t{relation}\t{label}\n")


def read_gold(path, kb=None) -> dict[str, GoldStandard]:
    """Read a gold TSV into one GoldStandard per relation.

    When the file carries a `#strata` header the standards are biased and a
    KB is required to assign each label its stratum.
    """
    weights = None
    per_rel: dict[str, list[CompletenessLabel]] = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            if line.startswith("#"):
                fields = line.split("\t")
                if fields[0] == STRATA_HEADER:
                    if len(fields) != 3:
                        raise FactFileError(path, lineno, "malformed #strata header")
                    weights = (Fraction(fields[1]), Fraction(fields[2]))
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise FactFileError(
                    path, lineno, f"expected 3 tab-separated fields, got {len(fields)}"
                )
            entity, relation, label = fields
            if label not in ("complete", "incomplete"):
                raise FactFileError(path, lineno, f"unknown label {label!r}")
            per_rel.setdefault(relation, []).append(
                CompletenessLabel(entity, relation, label == "complete")
            )

    sampling = "uniform" if weights is None else "biased"
    if sampling == "biased" and kb is None:
        raise KbError(f"{path}: biased gold standard requires a KB to assign strata")
    out = {}
    for relation in sorted(per_rel):
        labels = tuple(sorted(per_rel[relation], key=lambda lab: lab.entity))
        gold = GoldStandard(relation, labels, sampling=sampling, stratum_weights=weights)
        if sampling == "biased":
            gold = assign_strata(gold, kb)
        out[relation] = gold
    return out
