"""Shared test helpers."""

from kbcomplete.gold import CompletenessLabel, GoldStandard
from kbcomplete.kb import Fact, KnowledgeBase


def make_kb(triples, **kwargs) -> KnowledgeBase:
    return KnowledgeBase([Fact(*t) for t in triples], **kwargs)


def make_gold(relation, complete=(), incomplete=()) -> GoldStandard:
    labels = [CompletenessLabel(e, relation, True) for e in complete]
    labels += [CompletenessLabel(e, relation, False) for e in incomplete]
    return GoldStandard(relation, tuple(sorted(labels, key=lambda lab: lab.entity)))


def write_tsv(path, triples):
    with open(path, "w", encoding="utf-8") as fh:
        for t in triples:
            fh.write("\t".join(t) + "\n")


KBT = [
    ("alice", "citizenOf", "fr"),
    ("bob", "citizenOf", "fr"),
    ("bob", "citizenOf", "de"),
]
