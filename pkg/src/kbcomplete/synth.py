"""Synthetic ideal/observed KB pairs with exact completeness gold.

The generator first draws an ideal KB (all true facts), then erases each
fact independently with a per-relation probability to produce the observed
KB. Because the observed KB is a subset of the ideal one, the gold label of
every (entity, relation) pair is computable exactly: complete iff no object
was erased. Class memberships and the subclass edges are never erased.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field

from kbcomplete.errors import SynthSpecError
from kbcomplete.evaluation import (
    AT_LEAST_ONE,
    AT_MOST_ONE,
    CATEGORIES,
    EXACTLY_ONE,
    EXACTLY_TWO,
    ZERO_OR_MORE,
    RelationCategory,
)
from kbcomplete.gold import CompletenessLabel, GoldStandard
from kbcomplete.kb import Fact, KnowledgeBase


@dataclass(frozen=True)
class ClassSynthSpec:
    name: str
    parent: str | None = None
    fraction: float = 1.0  # membership probability among parent members

    def __post_init__(self):
        if not 0 <= self.fraction <= 1:
            raise SynthSpecError(f"class {self.name!r}: fraction outside [0, 1]")


@dataclass(frozen=True)
class RelationSynthSpec:
    name: str
    category: str
    erasure: float = 0.0
    presence: float = 0.5  # chance of having objects where the category allows none
    object_pool: int = 20
    extra_objects: int = 2  # extra objects beyond the first, where allowed
    absent_for_class: str | None = None  # members get no objects in the ideal KB
    copy_of: str | None = None  # ideal objects copied from this relation
    copy_noise: float = 0.0  # chance a copied value is replaced by a random one
    copy_extra: float = 0.0  # chance of one extra object on top of the copy
    domain: str | None = None

    def __post_init__(self):
        if self.category not in CATEGORIES:
            raise SynthSpecError(f"relation {self.name!r}: bad category {self.category!r}")
        if not 0 <= self.erasure < 1:
            raise SynthSpecError(f"relation {self.name!r}: erasure must be in [0, 1)")
        if not 0 <= self.presence <= 1:
            raise SynthSpecError(f"relation {self.name!r}: presence outside [0, 1]")
        if self.object_pool < 2:
            raise SynthSpecError(f"relation {self.name!r}: object pool too small")
        if not 0 <= self.copy_noise <= 1 or not 0 <= self.copy_extra <= 1:
            raise SynthSpecError(
                f"relation {self.name!r}: copy_noise/copy_extra outside [0, 1]"
            )


@dataclass(frozen=True)
class SynthSpec:
    entities: int
    seed: int = 0
    relations: tuple[RelationSynthSpec, ...] = ()
    classes: tuple[ClassSynthSpec, ...] = ()
    type_relation: str = "type"
    subclass_relation: str = "subclassOf"

    def __post_init__(self):
        if self.entities < 1:
            raise SynthSpecError("entity count must be at least 1")
        class_names = {c.name for c in self.classes}
        for c in self.classes:
            if c.parent is not None and c.parent not in class_names:
                raise SynthSpecError(f"class {c.name!r}: unknown parent {c.parent!r}")
        declared = set()
        for r in self.relations:
            if r.copy_of is not None and r.copy_of not in declared:
                raise SynthSpecError(
                    f"relation {r.name!r}: copy_of must name an earlier relation"
                )
            if r.absent_for_class is not None and r.absent_for_class not in class_names:
                raise SynthSpecError(
                    f"relation {r.name!r}: unknown class {r.absent_for_class!r}"
                )
            declared.add(r.name)


@dataclass
class SynthResult:
    spec: SynthSpec
    ideal_facts: list[Fact] = field(default_factory=list)
    observed_facts: list[Fact] = field(default_factory=list)
    labels: list[CompletenessLabel] = field(default_factory=list)

    def ideal_kb(self, relation_domains=None) -> KnowledgeBase:
        return KnowledgeBase(
            self.ideal_facts,
            type_relation=self.spec.type_relation,
            subclass_relation=self.spec.subclass_relation,
            relation_domains=relation_domains or self.relation_domains(),
        )

    def observed_kb(self, relation_domains=None) -> KnowledgeBase:
        return KnowledgeBase(
            self.observed_facts,
            type_relation=self.spec.type_relation,
            subclass_relation=self.spec.subclass_relation,
            relation_domains=relation_domains or self.relation_domains(),
        )

    def relation_domains(self) -> dict[str, str]:
        return {r.name: r.domain for r in self.spec.relations if r.domain}

    def categories(self) -> list[RelationCategory]:
        return [
            RelationCategory(r.name, r.category, r.domain) for r in self.spec.relations
        ]

    def gold(self, relation: str) -> GoldStandard:
        labels = tuple(
            sorted(
                (lab for lab in self.labels if lab.relation == relation),
                key=lambda lab: lab.entity,
            )
        )
        return GoldStandard(relation, labels)

    def golds(self) -> dict[str, GoldStandard]:
        return {r.name: self.gold(r.name) for r in self.spec.relations}


def _ideal_object_count(rspec: RelationSynthSpec, rng: random.Random) -> int:
    if rspec.category == EXACTLY_ONE:
        return 1
    if rspec.category == EXACTLY_TWO:
        return 2
    if rspec.category == AT_MOST_ONE:
        return 1 if rng.random() < rspec.presence else 0
    if rspec.category == AT_LEAST_ONE:
        return 1 + rng.randint(0, rspec.extra_objects)
    if rspec.category == ZERO_OR_MORE:
        if rng.random() >= rspec.presence:
            return 0
        return 1 + rng.randint(0, rspec.extra_objects)
    raise SynthSpecError(f"bad category {rspec.category!r}")


def generate(spec: SynthSpec) -> SynthResult:
    """Draw the ideal KB, erase facts into the observed one, label exactly."""
    rng = random.Random(spec.seed)
    result = SynthResult(spec)
    entities = [f"e{i:06d}" for i in range(spec.entities)]

    members: dict[str, set[str]] = {}
    for cspec in spec.classes:
        pool = entities if cspec.parent is None else sorted(members[cspec.parent])
        chosen = {e for e in pool if rng.random() < cspec.fraction}
        members[cspec.name] = chosen
    class_facts = []
    for cspec in spec.classes:
        if cspec.parent is not None:
            class_facts.append(Fact(cspec.name, spec.subclass_relation, cspec.parent))
        for e in sorted(members[cspec.name]):
            class_facts.append(Fact(e, spec.type_relation, cspec.name))
    result.ideal_facts.extend(class_facts)
    result.observed_facts.extend(class_facts)

    ideal_objects: dict[str, dict[str, list[str]]] = {}
    pools: dict[str, list[str]] = {}
    for rspec in spec.relations:
        # copies share the source's object vocabulary so values stay joinable
        if rspec.copy_of is not None:
            pool = pools[rspec.copy_of]
        else:
            pool = [f"{rspec.name}_o{i:04d}" for i in range(rspec.object_pool)]
        pools[rspec.name] = pool
        absent = members.get(rspec.absent_for_class, set()) if rspec.absent_for_class else set()
        per_entity: dict[str, list[str]] = {}
        for e in entities:
            if e in absent:
                objs = []
            elif rspec.copy_of is not None:
                objs = list(ideal_objects[rspec.copy_of].get(e, []))
                if objs and rng.random() < rspec.copy_noise:
                    objs = [rng.choice(pool)]
                if rng.random() < rspec.copy_extra:
                    extra = rng.choice(pool)
                    if extra not in objs:
                        objs.append(extra)
            else:
                n = _ideal_object_count(rspec, rng)
                objs = rng.sample(pool, n) if n else []
            per_entity[e] = objs
            kept_objs = []
            for o in objs:
                result.ideal_facts.append(Fact(e, rspec.name, o))
                if rng.random() >= rspec.erasure:
                    kept_objs.append(o)
                    result.observed_facts.append(Fact(e, rspec.name, o))
            result.labels.append(
                CompletenessLabel(e, rspec.name, complete=len(kept_objs) == len(objs))
            )
        ideal_objects[rspec.name] = per_entity
    return result


# -- JSON spec files -------------------------------------------------------------


def spec_from_json(path) -> SynthSpec:
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    try:
        classes = tuple(ClassSynthSpec(**c) for c in raw.get("classes", ()))
        relations = tuple(RelationSynthSpec(**r) for r in raw.get("relations", ()))
        return SynthSpec(
            entities=raw["entities"],
            seed=raw.get("seed", 0),
            relations=relations,
            classes=classes,
            type_relation=raw.get("type_relation", "type"),
            subclass_relation=raw.get("subclass_relation", "subclassOf"),
        )
    except (KeyError, TypeError) as exc:
        raise SynthSpecError(f"bad synthetic spec {path}: {exc}") from None


def write_facts_tsv(facts, path):
    with open(path, "w", encoding="utf-8") as fh:
        for f in sorted(facts, key=lambda f: (f.subject, f.relation, f.object)):
            fh.write(f"{f.subject}\t{f.relation}\t{f.object}\n")
