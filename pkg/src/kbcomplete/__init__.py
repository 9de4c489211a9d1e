"""Predicting where a knowledge base is complete.

Completeness oracles over (entity, relation) pairs, an extended Horn-rule
miner that learns combined completeness rules from labeled examples, an
evaluation harness with de-biased precision/recall, and completeness-based
filtering of predicted facts.
"""

from kbcomplete.kb import Fact, KnowledgeBase, load_kb
from kbcomplete.gold import CompletenessLabel, GoldStandard

__all__ = [
    "Fact",
    "KnowledgeBase",
    "load_kb",
    "CompletenessLabel",
    "GoldStandard",
]

__version__ = "0.1.0"
