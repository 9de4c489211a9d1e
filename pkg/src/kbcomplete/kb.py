"""Immutable, multi-indexed in-memory knowledge base.

Facts are (subject, relation, object) triples with set semantics. The store
keeps subject-relation and relation-object indexes, per-relation statistics,
the type assertions and the subclass graph. After construction the object is
never mutated, so it can be shared freely across threads.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping

from kbcomplete.errors import FactFileError, SubclassCycleError, UndefinedRelationError

log = logging.getLogger("kbcomplete")

DEFAULT_TYPE_RELATION = "type"
DEFAULT_SUBCLASS_RELATION = "subclassOf"

_EMPTY = frozenset()


@dataclass(frozen=True)
class Fact:
    subject: str
    relation: str
    object: str

    def __post_init__(self):
        if not (self.subject and self.relation and self.object):
            raise ValueError(f"fact fields must be non-empty: {self!r}")


@dataclass(frozen=True)
class RelationStats:
    relation: str
    distinct_subjects: int
    pair_count: int
    functionality: Fraction
    max_objects_per_subject: int


class KnowledgeBase:
    """Indexed fact collection; read-only after construction."""

    def __init__(
        self,
        facts: Iterable[Fact],
        type_relation: str = DEFAULT_TYPE_RELATION,
        subclass_relation: str = DEFAULT_SUBCLASS_RELATION,
        relation_domains: Mapping[str, str] | None = None,
    ):
        self.type_relation = type_relation
        self.subclass_relation = subclass_relation
        self.relation_domains = dict(relation_domains or {})

        self._facts = frozenset(facts)
        by_sr: dict[tuple[str, str], set[str]] = {}
        by_ro: dict[tuple[str, str], set[str]] = {}
        pairs: dict[str, list[tuple[str, str]]] = {}
        types: dict[str, set[str]] = {}
        parents: dict[str, set[str]] = {}
        subjects: set[str] = set()
        entities: set[str] = set()
        for f in self._facts:
            by_sr.setdefault((f.subject, f.relation), set()).add(f.object)
            by_ro.setdefault((f.relation, f.object), set()).add(f.subject)
            pairs.setdefault(f.relation, []).append((f.subject, f.object))
            subjects.add(f.subject)
            entities.add(f.subject)
            entities.add(f.object)
            if f.relation == type_relation:
                types.setdefault(f.subject, set()).add(f.object)
            elif f.relation == subclass_relation:
                parents.setdefault(f.subject, set()).add(f.object)

        self._by_sr = {k: frozenset(v) for k, v in by_sr.items()}
        self._by_ro = {k: frozenset(v) for k, v in by_ro.items()}
        self._pairs = {r: tuple(sorted(v)) for r, v in pairs.items()}
        self.type_assertions = {e: frozenset(c) for e, c in types.items()}
        self.subclass_parents = {c: frozenset(p) for c, p in parents.items()}
        children: dict[str, set[str]] = {}
        for child, ps in self.subclass_parents.items():
            for p in ps:
                children.setdefault(p, set()).add(child)
        self.subclass_children = {c: frozenset(v) for c, v in children.items()}
        self.subjects = frozenset(subjects)
        self.entities = frozenset(entities)

        self._stats = {}
        for rel, rel_pairs in self._pairs.items():
            subj_counts: dict[str, int] = {}
            for s, _ in rel_pairs:
                subj_counts[s] = subj_counts.get(s, 0) + 1
            n_subj = len(subj_counts)
            n_pairs = len(rel_pairs)
            self._stats[rel] = RelationStats(
                relation=rel,
                distinct_subjects=n_subj,
                pair_count=n_pairs,
                functionality=Fraction(n_subj, n_pairs),
                max_objects_per_subject=max(subj_counts.values()),
            )

        self._check_subclass_acyclic()
        self._instances_cache: dict[str, frozenset[str]] = {}
        self._popular_cache: dict[Fraction, frozenset[str]] = {}

    # -- construction checks -------------------------------------------------

    def _check_subclass_acyclic(self):
        # iterative 3-color DFS; a grey->grey edge is a cycle
        WHITE, GREY, BLACK = 0, 1, 2
        color = {c: WHITE for c in self.subclass_parents}
        for root in sorted(self.subclass_parents):
            if color[root] != WHITE:
                continue
            stack = [(root, iter(sorted(self.subclass_parents.get(root, _EMPTY))))]
            color[root] = GREY
            while stack:
                node, it = stack[-1]
                advanced = False
                for nxt in it:
                    state = color.get(nxt, WHITE)
                    if state == GREY:
                        raise SubclassCycleError(nxt)
                    if state == WHITE:
                        color[nxt] = GREY
                        stack.append(
                            (nxt, iter(sorted(self.subclass_parents.get(nxt, _EMPTY))))
                        )
                        advanced = True
                        break
                if not advanced:
                    color[node] = BLACK
                    stack.pop()

    # -- queries ---------------------------------------------------------------

    @property
    def facts(self) -> frozenset[Fact]:
        return self._facts

    @property
    def n_facts(self) -> int:
        return len(self._facts)

    @property
    def relations(self) -> frozenset[str]:
        return frozenset(self._pairs)

    def has_relation(self, relation: str) -> bool:
        return relation in self._pairs

    def pairs(self, relation: str) -> tuple[tuple[str, str], ...]:
        """All (subject, object) pairs of a relation, sorted."""
        return self._pairs.get(relation, ())

    def objects(self, subject: str, relation: str) -> frozenset[str]:
        return self._by_sr.get((subject, relation), _EMPTY)

    def subjects_for(self, relation: str, obj: str) -> frozenset[str]:
        return self._by_ro.get((relation, obj), _EMPTY)

    def stats(self, relation: str) -> RelationStats:
        try:
            return self._stats[relation]
        except KeyError:
            raise UndefinedRelationError(f"relation {relation!r} has no facts") from None

    def functionality(self, relation: str) -> Fraction:
        return self.stats(relation).functionality

    def instances_of(self, cls: str) -> frozenset[str]:
        """Entities typed with `cls` or any of its (transitive) subclasses."""
        cached = self._instances_cache.get(cls)
        if cached is not None:
            return cached
        # collect cls plus all descendants in the subclass graph
        seen = {cls}
        stack = [cls]
        while stack:
            for child in self.subclass_children.get(stack.pop(), _EMPTY):
                if child not in seen:
                    seen.add(child)
                    stack.append(child)
        out = set()
        for entity, classes in self.type_assertions.items():
            if classes & seen:
                out.add(entity)
        result = frozenset(out)
        self._instances_cache[cls] = result
        return result

    def save_tsv(self, path):
        """Write the facts back out as sorted TSV (comment-free dump)."""
        with open(path, "w", encoding="utf-8") as fh:
            for f in sorted(self._facts, key=lambda f: (f.subject, f.relation, f.object)):
                fh.write(f"{f.subject}\t{f.relation}\t{f.object}\n")


# -- module-level forms of the spec operations ----------------------------------


def functionality(kb: KnowledgeBase, relation: str) -> Fraction:
    return kb.functionality(relation)


def objects(kb: KnowledgeBase, subject: str, relation: str) -> frozenset[str]:
    return kb.objects(subject, relation)


def instances_of(kb: KnowledgeBase, cls: str) -> frozenset[str]:
    return kb.instances_of(cls)


# -- loading ---------------------------------------------------------------------


def parse_facts(path, invert: Iterable[str] = (), encoding: str = "utf-8") -> list[Fact]:
    """Parse a TSV fact file: `subject TAB relation TAB object`, `#` comments.

    Relations listed in `invert` have subject and object swapped as they are
    read; blank lines are skipped, any other malformed line is an error.
    """
    inverted = set(invert)
    facts = []
    lineno = 0
    with open(path, encoding=encoding) as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n").rstrip("\r")
            if not line:
                continue
            if line.startswith("#"):
                continue
            fields = line.split("\t")
            if len(fields) != 3:
                raise FactFileError(
                    path, lineno, f"expected 3 tab-separated fields, got {len(fields)}"
                )
            s, r, o = fields
            if not (s and r and o):
                raise FactFileError(path, lineno, "empty field")
            if r in inverted:
                s, o = o, s
            try:
                facts.append(Fact(s, r, o))
            except ValueError as exc:
                raise FactFileError(path, lineno, str(exc)) from None
    log.info("parsed %s: %d lines, %d fact rows", path, lineno, len(facts))
    return facts


def load_kb(
    facts_file,
    old_facts_file=None,
    *,
    type_relation: str = DEFAULT_TYPE_RELATION,
    subclass_relation: str = DEFAULT_SUBCLASS_RELATION,
    relation_domains: Mapping[str, str] | None = None,
    invert: Iterable[str] = (),
):
    """Load a KB (and optionally an older snapshot) from fact TSV files.

    Returns a KnowledgeBase, or a (current, old) pair when `old_facts_file`
    is given. Both files are parsed with the same configuration.
    """

    def _load(path):
        facts = parse_facts(path, invert=invert)
        kb = KnowledgeBase(
            facts,
            type_relation=type_relation,
            subclass_relation=subclass_relation,
            relation_domains=relation_domains,
        )
        log.info(
            "loaded %s: %d facts, %d entities, %d relations",
            path,
            kb.n_facts,
            len(kb.entities),
            len(kb.relations),
        )
        return kb

    kb = _load(facts_file)
    if old_facts_file is None:
        return kb
    return kb, _load(old_facts_file)
