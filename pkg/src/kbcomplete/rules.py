"""Horn-rule representation for completeness and fact rules.

Atoms are binary: relational atoms join entities, class atoms test type
membership, cardinality atoms compare an entity's object count for a fixed
relation against a bound, and the popularity / no-change atoms test the
derived completeness signals. Rule heads are either completeness assertions
`complete(?x,rel)` / `incomplete(?x,rel)` or plain relational atoms.

The text format round-trips exactly:

    dateOfDeath(?x,?y) ∧ lessThan_1(?x,placeOfDeath) ⇒ incomplete(?x,placeOfDeath)\t12\t3/4

Identifiers must not contain tabs, commas, parentheses, or the rule
connectives; variables start with `?`.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from fractions import Fraction
from itertools import permutations

from kbcomplete.errors import RuleFormatError

REL = "rel"
TYPE = "type"
NOTYPE = "notype"
LESS_THAN = "lessThan"
MORE_THAN = "moreThan"
IS_POPULAR = "isPopular"
HAS_NOT_CHANGED = "hasNotChanged"
COMPLETE = "complete"
INCOMPLETE = "incomplete"

HEAD_KINDS = (COMPLETE, INCOMPLETE)
CLASS_KINDS = (TYPE, NOTYPE)
CARD_KINDS = (LESS_THAN, MORE_THAN)
SPECIAL_KINDS = (IS_POPULAR, HAS_NOT_CHANGED)

BODY_SEP = " ∧ "  # ∧
IMPLIES = "⇒"  # ⇒

_CARD_NAME = re.compile(r"^(lessThan|moreThan)_(\d+)$")
_ATOM = re.compile(r"^([^()\s]+)\(([^(),]+),([^(),]+)\)$")


def is_var(token: str) -> bool:
    return token.startswith("?")


@dataclass(frozen=True)
class Atom:
    kind: str
    target: str  # relation or class constrained by the atom; "" for isPopular
    arg1: str  # variable or constant
    arg2: str | None = None  # second argument of relational atoms only
    bound: int | None = None  # cardinality bound of lessThan/moreThan atoms

    def __post_init__(self):
        if self.kind == REL and self.arg2 is None:
            raise ValueError("relational atom needs two arguments")
        if self.kind in CARD_KINDS and (self.bound is None or self.bound < 0):
            raise ValueError("cardinality atom needs a non-negative bound")

    def variables(self) -> tuple[str, ...]:
        out = [a for a in (self.arg1, self.arg2) if a is not None and is_var(a)]
        return tuple(out)

    def render(self) -> str:
        return self.render_renamed({})

    def render_renamed(self, mapping) -> str:
        def r(tok):
            return mapping.get(tok, tok) if is_var(tok) else tok

        if self.kind == REL:
            return f"{self.target}({r(self.arg1)},{r(self.arg2)})"
        if self.kind in CLASS_KINDS:
            return f"{self.kind}({r(self.arg1)},{self.target})"
        if self.kind in CARD_KINDS:
            return f"{self.kind}_{self.bound}({r(self.arg1)},{self.target})"
        if self.kind == IS_POPULAR:
            return f"isPopular({r(self.arg1)},true)"
        if self.kind == HAS_NOT_CHANGED:
            return f"hasNotChanged({r(self.arg1)},{self.target})"
        if self.kind in HEAD_KINDS:
            return f"{self.kind}({r(self.arg1)},{self.target})"
        raise ValueError(f"unknown atom kind {self.kind!r}")


def rel_atom(relation, arg1, arg2) -> Atom:
    return Atom(REL, relation, arg1, arg2)


def type_atom(var, cls) -> Atom:
    return Atom(TYPE, cls, var)


def notype_atom(var, cls) -> Atom:
    return Atom(NOTYPE, cls, var)


def less_than(var, relation, bound) -> Atom:
    return Atom(LESS_THAN, relation, var, bound=bound)


def more_than(var, relation, bound) -> Atom:
    return Atom(MORE_THAN, relation, var, bound=bound)


def popular_atom(var) -> Atom:
    return Atom(IS_POPULAR, "", var)


def not_changed_atom(var, relation) -> Atom:
    return Atom(HAS_NOT_CHANGED, relation, var)


def head_atom(polarity, var, relation) -> Atom:
    if polarity not in HEAD_KINDS:
        raise ValueError(f"bad head polarity {polarity!r}")
    return Atom(polarity, relation, var)


def parse_atom(text: str) -> Atom:
    m = _ATOM.match(text.strip())
    if not m:
        raise RuleFormatError(f"cannot parse atom {text!r}")
    name, a1, a2 = m.group(1), m.group(2).strip(), m.group(3).strip()
    card = _CARD_NAME.match(name)
    if card:
        return Atom(card.group(1), a2, a1, bound=int(card.group(2)))
    if name in CLASS_KINDS or name in HEAD_KINDS:
        return Atom(name, a2, a1)
    if name == IS_POPULAR:
        if a2 != "true":
            raise RuleFormatError(f"isPopular second argument must be 'true': {text!r}")
        return Atom(IS_POPULAR, "", a1)
    if name == HAS_NOT_CHANGED:
        return Atom(HAS_NOT_CHANGED, a2, a1)
    return Atom(REL, name, a1, a2)


@dataclass(frozen=True)
class Rule:
    body: tuple[Atom, ...]
    head: Atom
    support: int | None = None
    confidence: Fraction | None = None
    provenance: tuple[str, ...] = ()

    @property
    def head_relation(self) -> str:
        return self.head.target

    @property
    def head_var(self) -> str:
        return self.head.arg1

    def variables(self) -> tuple[str, ...]:
        seen: list[str] = []
        for atom in (self.head, *self.body):
            for v in atom.variables():
                if v not in seen:
                    seen.append(v)
        return tuple(seen)

    def with_metrics(self, support, confidence) -> "Rule":
        return replace(self, support=support, confidence=confidence)

    def extended(self, atom, operator, prepend=False) -> "Rule":
        body = (atom, *self.body) if prepend else (*self.body, atom)
        return Rule(body=body, head=self.head, provenance=(*self.provenance, operator))

    def is_closed(self) -> bool:
        """True when every variable appears in at least two atoms."""
        counts: dict[str, int] = {}
        for atom in (self.head, *self.body):
            for v in atom.variables():
                counts[v] = counts.get(v, 0) + 1
        return all(c >= 2 for c in counts.values())

    def render(self) -> str:
        head = self.head.render()
        if self.body:
            text = BODY_SEP.join(a.render() for a in self.body) + f" {IMPLIES} {head}"
        else:
            text = f"{IMPLIES} {head}"
        supp = "" if self.support is None else str(self.support)
        conf = "" if self.confidence is None else str(self.confidence)
        return f"{text}\t{supp}\t{conf}"


def canonical_key(rule: Rule) -> str:
    """Identity of a rule up to variable renaming and body reordering.

    Bodies are short, so the minimum over body permutations is affordable.
    """
    best = None
    for perm in permutations(rule.body):
        mapping: dict[str, str] = {}
        for atom in (rule.head, *perm):
            for v in atom.variables():
                if v not in mapping:
                    mapping[v] = f"?v{len(mapping)}"
        text = "|".join(a.render_renamed(mapping) for a in (rule.head, *perm))
        if best is None or text < best:
            best = text
    return best


def validate_rule(rule: Rule):
    """Enforce the structural rule invariants.

    The head variable must occur in a non-empty body; no relational body atom
    may use the head's relation as its predicate (special atoms may carry it
    as their constant parameter); popularity/no-change atoms take a single
    already-used variable.
    """
    if rule.head.kind not in HEAD_KINDS and rule.head.kind != REL:
        raise RuleFormatError(f"bad head atom kind {rule.head.kind!r}")
    head_vars = set(rule.head.variables())
    if rule.body and rule.head.kind in HEAD_KINDS:
        body_vars = {v for a in rule.body for v in a.variables()}
        if not head_vars <= body_vars:
            raise RuleFormatError("head variable missing from rule body")
    if rule.head.kind in HEAD_KINDS:
        for atom in rule.body:
            if atom.kind == REL and atom.target == rule.head_relation:
                raise RuleFormatError(
                    f"body uses the head relation {rule.head_relation!r}"
                )
            if atom.kind in HEAD_KINDS:
                raise RuleFormatError("completeness atoms are only allowed in heads")
    for atom in rule.body:
        if atom.kind in SPECIAL_KINDS:
            var_count = sum(
                atom.arg1 in a.variables() for a in (rule.head, *rule.body)
            )
            if var_count < 2:
                raise RuleFormatError(
                    f"non-closed variable {atom.arg1!r} in {atom.kind} atom"
                )


def parse_rule(line: str) -> Rule:
    parts = line.rstrip("\n").split("\t")
    if not parts or IMPLIES not in parts[0]:
        raise RuleFormatError(f"not a rule line: {line!r}")
    text = parts[0]
    body_text, head_text = text.split(IMPLIES, 1)
    head = parse_atom(head_text)
    body = tuple(
        parse_atom(chunk)
        for chunk in body_text.split("∧")
        if chunk.strip()
    )
    support = None
    confidence = None
    if len(parts) > 1 and parts[1]:
        support = int(parts[1])
    if len(parts) > 2 and parts[2]:
        confidence = Fraction(parts[2])
    rule = Rule(body=body, head=head, support=support, confidence=confidence)
    validate_rule(rule)
    return rule


def sort_rules(rules) -> list[Rule]:
    """Deterministic order: confidence desc, support desc, canonical text asc."""
    return sorted(
        rules,
        key=lambda r: (
            -(r.confidence if r.confidence is not None else Fraction(-1)),
            -(r.support or 0),
            canonical_key(r),
        ),
    )


def write_rules(rules, path, header: str | None = None):
    with open(path, "w", encoding="utf-8") as fh:
        if header:
            fh.write(f"# {header}\n")
        for rule in rules:
            fh.write(rule.render() + "\n")


def read_rules(path) -> tuple[list[Rule], list[str]]:
    """Parse a rule file; returns (rules, header comment lines)."""
    rules = []
    headers = []
    with open(path, encoding="utf-8") as fh:
        for raw in fh:
            line = raw.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                headers.append(line[1:].strip())
                continue
            rules.append(parse_rule(line))
    return rules, headers
