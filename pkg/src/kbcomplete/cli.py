"""Command-line entry point.

Subcommands: gen-synth, mine, eval, grid, predict-facts, filter-facts,
report, ref-gold. All randomness is controlled by --seed; running any
command twice with identical inputs and seed produces byte-identical
outputs.
"""

from __future__ import annotations

import argparse
import os
import sys
from dataclasses import replace
from fractions import Fraction
from pathlib import Path

from kbcomplete import evaluation, factpred, synth
from kbcomplete.engine import AugmentedKB
from kbcomplete.errors import KbError
from kbcomplete.gold import CompletenessLabel, GoldStandard, read_gold, write_gold
from kbcomplete.kb import load_kb
from kbcomplete.mining import MiningConfig, config_header, mine
from kbcomplete.model import load_model, predict_many
from kbcomplete.oracles import evaluate_oracle, format_metric, render_report_tsv
from kbcomplete.rules import sort_rules, write_rules


def _add_kb_flags(p, old=True):
    p.add_argument("--kb", required=True, help="facts TSV")
    if old:
        p.add_argument("--old-kb", help="older KB snapshot TSV (no-change signal)")
    p.add_argument("--relations", help="relations config TSV (category, domain)")
    p.add_argument(
        "--invert",
        action="append",
        default=[],
        metavar="REL",
        help="swap subject/object of REL at load (repeatable)",
    )
    p.add_argument("--type-relation", default="type")
    p.add_argument("--subclass-relation", default="subclassOf")


def _add_mining_flags(p):
    p.add_argument("--support", type=int, default=10, help="minimum support")
    p.add_argument(
        "--confidence", type=Fraction, default=Fraction(3, 10), help="minimum confidence"
    )
    p.add_argument("--max-body-atoms", type=int, default=3)
    p.add_argument("--star-size", type=int, default=1)
    p.add_argument(
        "--percentile", type=Fraction, default=Fraction(1, 20), help="popularity percentile"
    )
    p.add_argument(
        "--operators",
        help="comma-separated operator subset (default: all)",
    )


def _load_kbs(args):
    domains = None
    if args.relations:
        cats = evaluation.read_relations_config(args.relations)
        domains = {rel: rc.domain for rel, rc in cats.items() if rc.domain}
    old = getattr(args, "old_kb", None)
    loaded = load_kb(
        args.kb,
        old,
        type_relation=args.type_relation,
        subclass_relation=args.subclass_relation,
        relation_domains=domains,
        invert=args.invert,
    )
    return loaded if old else (loaded, None)


def _mining_config(args) -> MiningConfig:
    config = MiningConfig(
        min_support=args.support,
        min_confidence=Fraction(args.confidence),
        max_body_atoms=args.max_body_atoms,
        star_size=args.star_size,
        popularity_percentile=Fraction(args.percentile),
    )
    if args.operators:
        config = replace(
            config, enabled_operators=frozenset(args.operators.split(","))
        )
    return config


# -- subcommands ----------------------------------------------------------------


def cmd_gen_synth(args):
    spec = synth.spec_from_json(args.spec)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    result = synth.generate(spec)
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    synth.write_facts_tsv(result.ideal_facts, out / "ideal.tsv")
    synth.write_facts_tsv(result.observed_facts, out / "observed.tsv")
    write_gold(result.golds().values(), out / "gold.tsv")
    evaluation.write_relations_config(result.categories(), out / "relations.tsv")
    print(
        f"gen-synth: {len(set(result.ideal_facts))} ideal facts,"
        f" {len(set(result.observed_facts))} observed facts,"
        f" {len(result.labels)} gold labels -> {out}"
    )
    return 0


def cmd_mine(args):
    kb, old_kb = _load_kbs(args)
    golds = read_gold(args.gold, kb)
    config = _mining_config(args)
    rules = mine(kb, old_kb, golds.values(), config)
    write_rules(rules, args.out, header=config_header(config))
    print(f"mine: {len(rules)} rules -> {args.out}")
    return 0


def cmd_eval(args):
    kb, old_kb = _load_kbs(args)
    golds = read_gold(args.gold, kb)
    model = load_model(args.model) if args.model else None
    oracles = (
        evaluation.REPORT_ORACLES if args.oracle == "all" else tuple(args.oracle.split(","))
    )
    reports = evaluation.report(
        kb,
        old_kb,
        golds,
        models=model,
        oracles=oracles,
        percentile=Fraction(args.percentile),
    )
    if args.format == "md":
        text = evaluation.render_report_markdown(reports)
    else:
        text = render_report_tsv(reports)
    _write_text(args.out, text)
    return 0


def cmd_grid(args):
    kb, old_kb = _load_kbs(args)
    golds = read_gold(args.gold, kb)
    supports = (
        tuple(int(x) for x in args.support_grid.split(","))
        if args.support_grid
        else evaluation.DEFAULT_SUPPORT_GRID
    )
    confidences = (
        tuple(Fraction(x) for x in args.confidence_grid.split(","))
        if args.confidence_grid
        else evaluation.DEFAULT_CONFIDENCE_GRID
    )
    threads = args.threads or os.cpu_count() or 1
    all_rules = []
    lines = [
        "relation\tmin_support\tmin_confidence\tcv_f1\ttest_precision\ttest_recall\ttest_f1"
    ]
    for rel in sorted(golds):
        sel = evaluation.train_and_select(
            kb,
            old_kb,
            golds[rel],
            folds=args.folds,
            support_grid=supports,
            confidence_grid=confidences,
            seed=args.seed,
            threads=threads,
        )
        aug = AugmentedKB(kb, old_kb=old_kb, golds=[golds[rel]])
        decided = predict_many(
            aug, sel.model, rel, [lab.entity for lab in sel.test_gold.labels]
        )
        decisions = {
            (lab.entity, rel): decided[lab.entity] for lab in sel.test_gold.labels
        }
        rep = evaluate_oracle(decisions, sel.test_gold, oracle_name="amie")
        lines.append(
            "\t".join(
                (
                    rel,
                    str(sel.best.min_support),
                    str(sel.best.min_confidence),
                    format_metric(sel.best.f1),
                    format_metric(rep.precision),
                    format_metric(rep.recall),
                    format_metric(rep.f1),
                )
            )
        )
        all_rules.extend(sel.model.rules)
        print(
            f"grid: {rel}: support>={sel.best.min_support}"
            f" confidence>={sel.best.min_confidence} cv_f1={format_metric(sel.best.f1)}"
        )
    write_rules(sort_rules(all_rules), args.out_model)
    _write_text(args.out, "\n".join(lines) + "\n")
    return 0


def cmd_predict_facts(args):
    kb, _ = _load_kbs(args)
    config = MiningConfig(
        min_support=args.support,
        min_confidence=Fraction(args.confidence),
        max_body_atoms=args.max_body_atoms,
    )
    mode = factpred.CWA_CONFIDENCE if args.cwa_confidence else factpred.PCA_CONFIDENCE
    rules = factpred.mine_fact_rules(kb, config, confidence_mode=mode)
    if args.rules_out:
        write_rules(rules, args.rules_out, header=config_header(config))
    predictions = factpred.predict_facts(kb, rules)
    factpred.write_predictions(predictions, predictions, args.out)
    print(f"predict-facts: {len(rules)} rules, {len(predictions)} predictions -> {args.out}")
    return 0


def cmd_filter_facts(args):
    kb, old_kb = _load_kbs(args)
    predictions, _ = factpred.read_predictions(args.predictions)
    model = load_model(args.model)
    aug = AugmentedKB(
        kb, old_kb=old_kb, popularity_percentile=Fraction(args.percentile)
    )
    kept = factpred.filter_predictions(predictions, aug, model)
    factpred.write_predictions(predictions, kept, args.out)
    print(
        f"filter-facts: kept {len(kept)} of {len(predictions)} predictions -> {args.out}"
    )
    return 0


def cmd_report(args):
    predictions, kept = factpred.read_predictions(args.predictions)
    reference = None
    if args.reference:
        ref_kb = load_kb(args.reference)
        reference = ref_kb.facts
    rep = factpred.bucket_report(predictions, reference=reference, kept=kept)
    _write_text(args.out, factpred.render_bucket_tsv(rep))
    return 0


def cmd_ref_gold(args):
    kb, _ = _load_kbs(args)
    ref_kb = load_kb(args.reference)
    labels = []
    for subject in sorted(ref_kb.subjects):
        ref_objs = ref_kb.objects(subject, args.relation)
        if not ref_objs:
            continue
        kb_objs = kb.objects(subject, args.relation)
        if args.drop_kb_superset and kb_objs - ref_objs:
            continue
        labels.append(
            CompletenessLabel(subject, args.relation, complete=kb_objs >= ref_objs)
        )
    gold = GoldStandard(args.relation, tuple(labels))
    write_gold([gold], args.out)
    print(f"ref-gold: {len(labels)} labels -> {args.out}")
    return 0


def _write_text(path, text):
    if path:
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="kbcomplete",
        description="Predict where a knowledge base is complete.",
    )
    parser.add_argument("--seed", type=int, default=None, help="random seed")
    parser.add_argument("--threads", type=int, default=None, help="worker cap")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-synth", help="generate an ideal/observed KB pair with exact gold")
    p.add_argument("--spec", required=True, help="synthetic spec JSON")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(fn=cmd_gen_synth)

    p = sub.add_parser("mine", help="mine completeness rules")
    _add_kb_flags(p)
    p.add_argument("--gold", required=True, help="training labels TSV")
    p.add_argument("--out", required=True, help="rule file to write")
    _add_mining_flags(p)
    p.set_defaults(fn=cmd_mine)

    p = sub.add_parser("eval", help="evaluate oracles against a gold standard")
    _add_kb_flags(p)
    p.add_argument("--gold", required=True)
    p.add_argument("--model", help="mined rule file for star/class/amie oracles")
    p.add_argument("--oracle", default="all", help="all or comma-separated oracle names")
    p.add_argument("--percentile", type=Fraction, default=Fraction(1, 20))
    p.add_argument("--out", help="report path (default stdout)")
    p.add_argument("--format", choices=("tsv", "md"), default="tsv")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("grid", help="cross-validated grid search per relation")
    _add_kb_flags(p)
    p.add_argument("--gold", required=True)
    p.add_argument("--support-grid", help="comma-separated support thresholds")
    p.add_argument("--confidence-grid", help="comma-separated confidence thresholds")
    p.add_argument("--folds", type=int, default=4)
    p.add_argument("--out-model", required=True)
    p.add_argument("--out", help="selection report path (default stdout)")
    p.set_defaults(fn=cmd_grid)

    p = sub.add_parser("predict-facts", help="mine fact rules and predict new facts")
    _add_kb_flags(p, old=False)
    p.add_argument("--support", type=int, default=10)
    p.add_argument("--confidence", type=Fraction, default=Fraction(0))
    p.add_argument("--max-body-atoms", type=int, default=3)
    p.add_argument("--cwa-confidence", action="store_true", help="plain instead of PCA confidence")
    p.add_argument("--rules-out")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_predict_facts)

    p = sub.add_parser("filter-facts", help="drop predictions asserted complete")
    _add_kb_flags(p)
    p.add_argument("--predictions", required=True)
    p.add_argument("--model", required=True)
    p.add_argument("--percentile", type=Fraction, default=Fraction(1, 20))
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_filter_facts)

    p = sub.add_parser("report", help="bucketed precision report for predictions")
    p.add_argument("--predictions", required=True)
    p.add_argument("--reference", help="reference fact TSV (e.g. the ideal KB)")
    p.add_argument("--out", help="report path (default stdout)")
    p.set_defaults(fn=cmd_report)

    p = sub.add_parser("ref-gold", help="gold standard from an external reference fact set")
    _add_kb_flags(p, old=False)
    p.add_argument("--reference", required=True)
    p.add_argument("--relation", required=True)
    p.add_argument("--drop-kb-superset", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_ref_gold)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.seed is None:
        args.seed = 0
    try:
        return args.fn(args)
    except KbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
