"""Rule-body evaluation engine.

Mining spends almost all of its time deciding, for a candidate entity,
whether a rule body has a satisfying assignment. This module dictionary-
encodes the KB into flat CSR-style integer arrays once, compiles rule bodies
into small integer plans, and dispatches the per-candidate search to the
selected kernel backend (`kbcomplete._kernels`: Cython when built, pure
Python otherwise — both implement identical semantics).

`AugmentedKB` is the KB plus everything completeness mining adds on top:
training labels, the materialized popularity set, and the per-relation
no-change sets derived from an older KB snapshot.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from kbcomplete import _kernels
from kbcomplete import rules as R
from kbcomplete.errors import KbError, RuleFormatError
from kbcomplete.oracles import popular_entities

K_REL, K_COUNT, K_SET, K_BIND = 0, 1, 2, 3
OP_LESS, OP_MORE = 0, 1

_I64 = np.int64


class EncodedKB:
    """Flat integer encoding of a KB for the satisfaction kernels.

    Term ids follow lexicographic order, so CSR value segments come out
    sorted by construction. One extra phantom slot (the last id) stands in
    for entities the KB has never seen: it has no facts and no memberships,
    which is exactly their semantics.
    """

    def __init__(self, kb, extra_terms=()):
        self.kb = kb
        terms = sorted(set(kb.entities) | set(extra_terms))
        self.terms = terms
        self.term_id = {t: i for i, t in enumerate(terms)}
        self.phantom = len(terms)
        self.n_slots = len(terms) + 1
        rels = sorted(kb.relations)
        self.rels = rels
        self.rel_id = {r: i for i, r in enumerate(rels)}

        n = self.n_slots
        sp_counts = np.zeros(len(rels) * n, dtype=_I64)
        op_counts = np.zeros(len(rels) * n, dtype=_I64)
        sp_chunks = []
        op_chunks = []
        rs_chunks = []
        rs_indptr = [0]
        for ri, rel in enumerate(rels):
            prs = kb.pairs(rel)
            sids = np.fromiter((self.term_id[s] for s, _ in prs), _I64, len(prs))
            oids = np.fromiter((self.term_id[o] for _, o in prs), _I64, len(prs))
            sp_counts[ri * n : ri * n + n - 1] = np.bincount(sids, minlength=n - 1)
            op_counts[ri * n : ri * n + n - 1] = np.bincount(oids, minlength=n - 1)
            # pairs are sorted by (s, o) strings == by (s, o) ids
            sp_chunks.append(oids)
            order = np.lexsort((sids, oids))
            op_chunks.append(sids[order])
            subs = np.unique(sids)
            rs_chunks.append(subs)
            rs_indptr.append(rs_indptr[-1] + len(subs))

        self.sp_indptr = np.zeros(len(rels) * n + 1, dtype=_I64)
        np.cumsum(sp_counts, out=self.sp_indptr[1:])
        self.op_indptr = np.zeros(len(rels) * n + 1, dtype=_I64)
        np.cumsum(op_counts, out=self.op_indptr[1:])
        self.sp_vals = (
            np.concatenate(sp_chunks) if sp_chunks else np.zeros(0, dtype=_I64)
        )
        self.op_vals = (
            np.concatenate(op_chunks) if op_chunks else np.zeros(0, dtype=_I64)
        )
        self.rs_indptr = np.asarray(rs_indptr, dtype=_I64)
        self.rs_vals = (
            np.concatenate(rs_chunks) if rs_chunks else np.zeros(0, dtype=_I64)
        )

    def encode_terms(self, names) -> np.ndarray:
        """Sorted id array for a set of term names; unknown names drop out."""
        ids = sorted(self.term_id[t] for t in names if t in self.term_id)
        return np.asarray(ids, dtype=_I64)

    def encode_rows(self, rows) -> np.ndarray:
        """Encode candidate bindings (tuples of term names) for the kernel."""
        width = len(rows[0]) if rows else 1
        out = np.empty((len(rows), width), dtype=_I64)
        for i, row in enumerate(rows):
            for j, name in enumerate(row):
                out[i, j] = self.term_id.get(name, self.phantom)
        return out


@dataclass
class BodyPlan:
    atoms: np.ndarray
    set_indptr: np.ndarray
    set_vals: np.ndarray
    n_vars: int
    unsat: bool = False


def compile_plan(enc: EncodedKB, body, head_vars, membership) -> BodyPlan:
    """Translate a rule body into kernel atom rows.

    `membership(atom)` maps type/notype/popularity/no-change atoms to the
    frozenset of entity names satisfying them positively. Atoms whose truth
    is independent of the data (e.g. cardinality atoms over a relation with
    no facts) are folded away; an unsatisfiable atom short-circuits the plan.
    """
    var_id: dict[str, int] = {}
    for v in head_vars:
        var_id[v] = len(var_id)
    for atom in body:
        for v in atom.variables():
            if v not in var_id:
                var_id[v] = len(var_id)

    def code(tok):
        if R.is_var(tok):
            return -(var_id[tok] + 1)
        return enc.term_id.get(tok, enc.phantom)

    records = []  # (kind, p1, c1, c2_or_flag, extra)
    sets: list[np.ndarray] = []
    for atom in body:
        if atom.kind == R.REL:
            rid = enc.rel_id.get(atom.target)
            if rid is None:
                return _unsat_plan(len(var_id))
            records.append((K_REL, rid, code(atom.arg1), code(atom.arg2), 0))
        elif atom.kind in R.CARD_KINDS:
            rid = enc.rel_id.get(atom.target)
            if rid is None:
                # zero objects for everyone: lessThan_n holds iff n > 0
                if atom.kind == R.LESS_THAN and atom.bound > 0:
                    continue
                return _unsat_plan(len(var_id))
            op = OP_LESS if atom.kind == R.LESS_THAN else OP_MORE
            records.append((K_COUNT, rid, code(atom.arg1), op, atom.bound))
        else:
            members = membership(atom)
            negate = 1 if atom.kind == R.NOTYPE else 0
            sets.append(enc.encode_terms(members))
            records.append((K_SET, len(sets) - 1, code(atom.arg1), negate, 0))

    ordered = _order_records(records, n_bound=len(head_vars))
    atoms_arr = np.zeros((len(ordered), 6), dtype=_I64)
    for i, rec in enumerate(ordered):
        atoms_arr[i, :5] = rec
    set_indptr = np.zeros(len(sets) + 1, dtype=_I64)
    if sets:
        np.cumsum([len(s) for s in sets], out=set_indptr[1:])
        set_vals = np.concatenate(sets)
    else:
        set_vals = np.zeros(0, dtype=_I64)
    return BodyPlan(atoms_arr, set_indptr, set_vals, n_vars=max(len(var_id), 1))


def _unsat_plan(n_vars):
    return BodyPlan(
        np.zeros((0, 6), dtype=_I64),
        np.zeros(1, dtype=_I64),
        np.zeros(0, dtype=_I64),
        n_vars=max(n_vars, 1),
        unsat=True,
    )


def _order_records(records, n_bound):
    """Dependency-order atoms: checks wait for their variable, relational
    atoms need one bound side, and a bind-subject row is inserted before a
    relational atom whose sides are both unbound."""
    bound = set(range(n_bound))

    def vars_of_code(c):
        return {-c - 1} if c < 0 else set()

    def ready(rec):
        kind, _, c1, c2, _ = rec
        if kind == K_REL:
            return not vars_of_code(c1) - bound or not vars_of_code(c2) - bound
        return not vars_of_code(c1) - bound

    pending = list(records)
    ordered = []
    while pending:
        pick = next((rec for rec in pending if ready(rec)), None)
        if pick is None:
            pick = next((rec for rec in pending if rec[0] == K_REL), None)
            if pick is None:
                raise RuleFormatError("special atom over a variable bound nowhere")
            ordered.append((K_BIND, pick[1], pick[2], 0, 0))
            bound |= vars_of_code(pick[2])
        pending.remove(pick)
        ordered.append(pick)
        bound |= vars_of_code(pick[2]) | (
            vars_of_code(pick[3]) if pick[0] == K_REL else set()
        )
    return ordered


class AugmentedKB:
    """KB plus training labels and materialized completeness signals.

    Evaluation state (encoded arrays, per-class membership caches, compiled
    plans) is shared between instances created through `with_labels`, so a
    grid search re-trains on label subsets without re-encoding the KB.
    """

    def __init__(
        self,
        kb,
        old_kb=None,
        golds=(),
        popularity_percentile=Fraction(1, 20),
        extra_entities=(),
        kernel=None,
    ):
        self.kb = kb
        self.old_kb = old_kb
        self.percentile = Fraction(popularity_percentile)
        self.kernel = kernel or _kernels
        self._set_labels(golds)

        extras = set(extra_entities) | {e for ents in self.labels.values() for e in ents}
        if old_kb is not None:
            extras |= old_kb.entities
        self.popular = popular_entities(kb, self.percentile)
        self.encoded = EncodedKB(kb, extra_terms=extras)
        self._members: dict = {}
        self._plans: dict = {}
        self._support: dict = {}

    def _set_labels(self, golds):
        labels: dict[str, dict[str, bool]] = {}
        for g in golds:
            per = labels.setdefault(g.relation, {})
            for lab in g.labels:
                if per.get(lab.entity, lab.complete) != lab.complete:
                    raise KbError(
                        f"conflicting labels for ({lab.entity}, {lab.relation})"
                    )
                per[lab.entity] = lab.complete
        self.labels = labels
        self._label_entities = {
            rel: tuple(sorted(per)) for rel, per in labels.items()
        }

    def with_labels(self, golds) -> "AugmentedKB":
        """Same KB and caches, different training labels."""
        clone = object.__new__(AugmentedKB)
        clone.kb = self.kb
        clone.old_kb = self.old_kb
        clone.percentile = self.percentile
        clone.kernel = self.kernel
        clone.popular = self.popular
        clone.encoded = self.encoded
        clone._members = self._members
        clone._plans = self._plans
        clone._support = {}
        clone._set_labels(golds)
        return clone

    # -- completeness signal membership sets ---------------------------------

    def unchanged_entities(self, relation) -> frozenset[str]:
        """Entities with identical object sets in both KB versions.

        Entities absent from the old KB count as changed; the set is empty
        when no old KB was supplied or the relation is not in both versions.
        """
        if self.old_kb is None:
            return frozenset()
        if not (self.kb.has_relation(relation) and self.old_kb.has_relation(relation)):
            return frozenset()
        out = set()
        for e in self.old_kb.entities:
            if self.kb.objects(e, relation) == self.old_kb.objects(e, relation):
                out.add(e)
        return frozenset(out)

    def _membership(self, atom):
        key = (atom.kind, atom.target)
        if atom.kind in R.CLASS_KINDS:
            key = ("class", atom.target)
        if key in self._members:
            return self._members[key]
        if atom.kind in R.CLASS_KINDS:
            members = self.kb.instances_of(atom.target)
        elif atom.kind == R.IS_POPULAR:
            members = self.popular
        elif atom.kind == R.HAS_NOT_CHANGED:
            members = self.unchanged_entities(atom.target)
        else:
            raise RuleFormatError(f"atom kind {atom.kind!r} not allowed in a body")
        self._members[key] = members
        return members

    # -- evaluation ------------------------------------------------------------

    def plan(self, body, head_vars) -> BodyPlan:
        key = (body, head_vars)
        plan = self._plans.get(key)
        if plan is None:
            plan = compile_plan(self.encoded, body, head_vars, self._membership)
            self._plans[key] = plan
        return plan

    def body_mask(self, body, head_vars, rows) -> np.ndarray:
        """uint8 mask: for each candidate binding of `head_vars`, does the
        body have a satisfying assignment of its remaining variables?"""
        out = np.zeros(len(rows), dtype=np.uint8)
        if not len(rows):
            return out
        plan = self.plan(tuple(body), tuple(head_vars))
        if plan.unsat:
            return out
        enc = self.encoded
        self.kernel.satisfy_mask(
            enc.n_slots,
            enc.sp_indptr,
            enc.sp_vals,
            enc.op_indptr,
            enc.op_vals,
            enc.rs_indptr,
            enc.rs_vals,
            plan.set_indptr,
            plan.set_vals,
            plan.atoms,
            plan.n_vars,
            enc.encode_rows(rows),
            out,
        )
        return out

    def entity_mask(self, body, head_var, entities) -> np.ndarray:
        return self.body_mask(body, (head_var,), [(e,) for e in entities])

    def label_entities(self, relation) -> tuple[str, ...]:
        return self._label_entities.get(relation, ())

    def label_support(self, relation, head_var, body) -> tuple[int, int]:
        """(complete-labeled, incomplete-labeled) entities satisfying `body`."""
        key = (relation, head_var, tuple(body))
        cached = self._support.get(key)
        if cached is not None:
            return cached
        ents = self.label_entities(relation)
        per = self.labels.get(relation, {})
        mask = self.entity_mask(tuple(body), head_var, ents)
        sc = si = 0
        for e, hit in zip(ents, mask):
            if hit:
                if per[e]:
                    sc += 1
                else:
                    si += 1
        result = (sc, si)
        self._support[key] = result
        return result


# -- explicit enumeration (fact rules) ------------------------------------------


def body_solutions(kb, body, out_vars):
    """Distinct bindings of `out_vars` over all satisfying assignments of a
    relational body. Used for fact-rule confidence denominators and fact
    prediction, where the projection itself is needed, not just existence."""
    for atom in body:
        if atom.kind != R.REL:
            raise RuleFormatError("fact-rule bodies must be purely relational")
    order = _solution_order(body)
    results = set()
    binding: dict[str, str] = {}

    def resolve(tok):
        return binding.get(tok) if R.is_var(tok) else tok

    def rec(i):
        if i == len(order):
            results.add(tuple(binding[v] for v in out_vars))
            return
        atom = order[i]
        s = resolve(atom.arg1)
        o = resolve(atom.arg2)
        if s is not None and o is not None:
            if o in kb.objects(s, atom.target):
                rec(i + 1)
        elif s is not None:
            for obj in sorted(kb.objects(s, atom.target)):
                binding[atom.arg2] = obj
                rec(i + 1)
            binding.pop(atom.arg2, None)
        elif o is not None:
            for subj in sorted(kb.subjects_for(atom.target, o)):
                binding[atom.arg1] = subj
                rec(i + 1)
            binding.pop(atom.arg1, None)
        else:
            for subj, obj in kb.pairs(atom.target):
                binding[atom.arg1] = subj
                binding[atom.arg2] = obj
                rec(i + 1)
            binding.pop(atom.arg1, None)
            binding.pop(atom.arg2, None)

    for v in out_vars:
        if not any(v in a.variables() for a in body):
            raise RuleFormatError(f"projection variable {v!r} not in body")
    rec(0)
    return results


def _solution_order(body):
    bound: set[str] = set()
    pending = list(body)
    ordered = []
    while pending:
        pick = next(
            (
                a
                for a in pending
                if (not R.is_var(a.arg1) or a.arg1 in bound)
                or (not R.is_var(a.arg2) or a.arg2 in bound)
            ),
            pending[0],
        )
        pending.remove(pick)
        ordered.append(pick)
        bound.update(pick.variables())
    return ordered
