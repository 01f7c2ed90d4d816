"""End-to-end acceptance checks, one test per criterion.

Each test records a verdict through the ``criterion`` fixture; the terminal
summary lists all seven in order.
"""

import itertools
import random
import re

import pytest

from bpvar.cepc import apply_configuration, validate_configuration
from bpvar.corpus import cross_check, load_manifest, run_matrix
from bpvar.errors import (ChangeError, ConditionRejectsCase, InvalidConfiguration, OptionFailed,
                          OrderConflict, RedundantRule)
from bpvar.graph import enumerate_traces, isomorphic, validate_structure
from bpvar.graph.blocks import block_tree
from bpvar.lexer import VarDLSyntaxError
from bpvar.pesoa import resolve, validate_selection
from bpvar.provop import Option, apply_operation, apply_option, delete, derive_variant
from bpvar.rules import Compare
from bpvar.vardl import load_document, parse_document, serialize
from bpvar.worklet import (RdrNode, RdrTree, add_rule, enumerate_cases, replay_cornerstones,
                           select_worklet)

from conftest import CORPUS, corpus_doc, corpus_files, golden
from oracles import eval_decision_predicate, token_game_traces
from strategies import random_operation

CASES = ("vehicle", "healthcare", "ebusiness")


def all_variants():
    m = load_manifest()
    return [(c, v) for c in CASES for v in sorted(m["cases"][c]["goldens"])]


def test_criterion_1_matrix(criterion):
    report = run_matrix()
    good = sum(v.ok for v in report.verdicts)
    ok = report.ok and report.seconds < 10.0
    criterion(1, ok, f"{good}/{len(report.verdicts)} match, {len(report.skipped)} skipped, "
                     f"{report.seconds:.2f}s")
    assert ok, "\n".join(report.lines())


def test_criterion_2_cross_approach_equivalence(criterion):
    problems = []
    pairs = all_variants()
    for case, variant in pairs:
        reference = token_game_traces(golden(case, variant))
        check = cross_check(case, variant)
        if not check.equivalent:
            problems.append(f"{case}/{variant}: {check.asymmetric()}")
        for approach, traces in check.traces.items():
            if traces != reference:
                problems.append(f"{case}/{variant}/{approach} differs from the golden")
    # knee base: three parallel examinations, then rupture treatment or not
    tests = ("X-ray", "MRT", "Sonography")
    tail = ("Initial Treatment and Operation planning", "Operative Treatment")
    head = ("Admission of the patient", "Anamnesis and Clinical Examination")
    by_hand = {head + p + t for p in itertools.permutations(tests) for t in ((), tail)}
    base = enumerate_traces(golden("healthcare", "V0")).traces
    if base != by_hand or len(base) != 12:
        problems.append(f"healthcare base has {len(base)} traces, expected 12")
    ok = not problems
    criterion(2, ok, f"{len(pairs)} (case, variant) pairs, healthcare base {len(base)} traces")
    assert ok, problems


def test_criterion_3_provop_properties(criterion):
    docs = {c: corpus_doc(c, "provop") for c in CASES}
    problems = []
    for case, doc in docs.items():
        if not isomorphic(derive_variant(doc.base, []), doc.base):
            problems.append(f"{case}: empty derivation changed the base")
        for opt in doc.options:
            try:
                apply_option(doc.base, opt)
            except OptionFailed:
                continue  # anchored on tasks another option introduces
            broken = Option(opt.name, opt.operations + (delete("No such task"),))
            try:
                apply_option(doc.base, broken)
                problems.append(f"{case}/{opt.name}: broken option applied")
            except OptionFailed as exc:
                if exc.index != len(opt.operations):
                    problems.append(f"{case}/{opt.name}: failed at {exc.index}")
    shop = docs["ebusiness"]
    named = {o.name: o for o in shop.options}
    if not isomorphic(derive_variant(shop.base, [named["Option3"], named["Option5"]]),
                      golden("ebusiness", "V4")):
        problems.append("Option3 then Option5 does not give V4")
    with pytest.raises(OrderConflict):
        derive_variant(shop.base, [named["Option5"], named["Option3"]])

    rnd = random.Random(20240501)
    seeds = [d.base for d in docs.values()] + [golden(c, v) for c, v in all_variants()]
    applied = 0
    for _ in range(1000):
        model = rnd.choice(seeds)
        op = random_operation(model, rnd)
        try:
            out = apply_operation(model, op)
        except ChangeError:
            continue
        applied += 1
        if validate_structure(out):
            problems.append(f"{op} broke {model.id}: {validate_structure(out)}")
        block_tree(out)
        if rnd.random() < 0.5:
            seeds.append(out)
    ok = not problems and applied > 0
    criterion(3, ok, f"1000 random operations, {applied} applied, all valid")
    assert ok, problems[:10]


def decision_env(cm, cfg):
    env = {}
    for node_id, ref in cm.configurable.items():
        for key in (ref, node_id, cm.base.node(node_id).label):
            env[key] = cfg[ref]
    return env


def requirement_texts(path):
    text = "\n".join(line.split("#", 1)[0] for line in path.read_text().splitlines())
    return [" ".join(m.split()) for m in re.findall(r"\brequirement\s+(.*?);", text, re.S)]


def test_criterion_4_cepc_configurations(criterion):
    details, problems = [], []
    for case in CASES:
        path = CORPUS / case / "cepc.vardl"
        cm = load_document(path).local("cepc")[0]
        reqs = requirement_texts(path)
        refs = sorted(cm.configurable.values())
        choices = [cm.choices(cm.node_id(r)) for r in refs]
        total = valid = 0
        for combo in itertools.product(*choices):
            cfg = dict(zip(refs, combo))
            env = decision_env(cm, cfg)
            expected = all(eval_decision_predicate(r, env) for r in reqs)
            report = validate_configuration(cm, cfg)
            if report.ok != expected or len(report.errors) != sum(
                    not eval_decision_predicate(r, env) for r in reqs):
                problems.append(f"{case} {cfg}: report {report.lines()}")
            try:
                model = apply_configuration(cm, cfg)
                applied = True
                if validate_structure(model):
                    problems.append(f"{case} {cfg}: invalid result")
            except InvalidConfiguration:
                applied = False
            if applied != expected:
                problems.append(f"{case} {cfg}: apply={applied} expected={expected}")
            total += 1
            valid += expected
        details.append(f"{case} k={len(refs)} {valid}/{total} valid")
    ok = not problems
    criterion(4, ok, "; ".join(details))
    assert ok, problems[:10]


VARS = ("p", "q", "r")
GRID = [dict(zip(VARS, bits)) for bits in itertools.product(("yes", "no"), repeat=3)]


def test_criterion_5_worklet_properties(criterion):
    problems = []
    trees = 0
    for case in CASES:
        for tree in corpus_doc(case, "worklet").visible("rdr"):
            trees += 1
            problems += [f"{case}/{tree.task}/{e.node}" for e in replay_cornerstones(tree)
                         if not e.ok]
            # rebuild the tree rule by rule from its own cornerstones
            grown = RdrTree(tree.task, RdrNode("root", tree.root.conclusion))
            for node in tree.nodes()[1:]:
                grown = add_rule(grown, node.cornerstone, node.condition, node.conclusion)
                if not all(e.ok for e in replay_cornerstones(grown)):
                    problems.append(f"{case}/{tree.task}: replay broke after {node.id}")
                if select_worklet(grown, node.cornerstone).worklet != node.conclusion:
                    problems.append(f"{case}/{tree.task}: rebuilt tree misroutes {node.id}")
    rnd = random.Random(7)
    added = 0
    for _ in range(300):
        tree = RdrTree("T", RdrNode("root", "W0"))
        for _ in range(6):
            case = rnd.choice(GRID)
            cond = Compare(rnd.choice(VARS), rnd.choice(["=", "!="]), rnd.choice(["yes", "no"]))
            worklet = rnd.choice(["W1", "W2", "W3"])
            try:
                new = add_rule(tree, case, cond, worklet)
            except (RedundantRule, ConditionRejectsCase):
                continue
            added += 1
            new_id = ({n.id for n in new.nodes()} - {n.id for n in tree.nodes()}).pop()
            for data in GRID:
                before, after = select_worklet(tree, data), select_worklet(new, data)
                changed = after.worklet != before.worklet
                if changed and after.path[-1] != new_id:
                    problems.append(f"rule {new_id} changed an unrelated case {data}")
            if not all(e.ok for e in replay_cornerstones(new)):
                problems.append("cornerstone broken after add_rule")
            tree = new
    doc = corpus_doc("healthcare", "worklet")
    run = enumerate_cases(doc.base, doc.visible("repertoire")[0], doc.visible("rdr"),
                          {"Pacemaker": "yes"})
    if any("MRT" in t for t in run.traces) or not run.traces:
        problems.append("pacemaker case can still run MRT")
    ok = not problems
    criterion(5, ok, f"{trees} corpus trees replay cleanly, {added} grid rules local, "
                     f"{len(run.traces)} pacemaker traces without MRT")
    assert ok, problems[:10]


FEATURE_OPTIONS = {"pictures_reviews": "Option1", "persistent_cart": "Option2",
                   "personalized": "Option3", "give10": "Option4", "invoice": "Option5",
                   "anonymous": "Option6"}
CART_TASKS = {"Compose personalized shopping cart", "Compose anonymous shopping cart"}


def test_criterion_6_pesoa_against_provop(criterion):
    pesoa = corpus_doc("ebusiness", "pesoa")
    sm, fm = pesoa.local("stereotypes")[0], pesoa.local("features")[0]
    provop = corpus_doc("ebusiness", "provop")
    declared = [o for o in provop.options if o.resolution == "design"]
    features = sorted(fm.features - {fm.root})
    problems, valid = [], 0
    for bits in itertools.product((False, True), repeat=len(features)):
        sel = {fm.root} | {f for f, b in zip(features, bits) if b}
        if validate_selection(fm, sel):
            continue
        valid += 1
        if {"personalized", "anonymous"} <= sel:
            problems.append(f"both cart types accepted: {sorted(sel)}")
        wanted = {FEATURE_OPTIONS[f] for f in sel if f in FEATURE_OPTIONS}
        expected = derive_variant(provop.base, [o for o in declared if o.name in wanted])
        got = resolve(sm, fm, sel)
        carts = {n.label for n in got.nodes} & CART_TASKS
        if len(carts) > 1:
            problems.append(f"{sorted(sel)}: resolved model has {sorted(carts)}")
        if enumerate_traces(got).traces != enumerate_traces(expected).traces:
            problems.append(f"{sorted(sel)}: traces differ")
    ok = not problems and valid == 24
    criterion(6, ok, f"{valid} valid selections, all trace-equivalent to option derivations")
    assert ok, problems[:10]


STATEMENT_KEYWORDS = {
    "process", "task", "worklet", "start", "end", "gateway", "option", "context", "cepc",
    "cepc-config", "configurable", "requirement", "guideline", "rdr", "node", "repertoire",
    "features", "root", "stereotypes", "varpoint", "variant", "optional", "parameterized",
    "null", "bind", "INSERT", "DELETE", "MOVE", "MODIFY", "import", "base",
}
LEAD = re.compile(r"^(\s*)([A-Za-z][A-Za-z-]*)\b(?!\s*->)")


def test_criterion_7_round_trip_and_error_lines(criterion):
    problems, files, typos = [], 0, 0
    for path in corpus_files():
        files += 1
        doc = load_document(path)
        text = serialize(doc)
        if parse_document(text, file=str(path), base_dir=path.parent) != doc:
            problems.append(f"{path}: round trip changed the document")
        lines = path.read_text().splitlines()
        for i, line in enumerate(lines):
            m = LEAD.match(line)
            if not m or m.group(2) not in STATEMENT_KEYWORDS:
                continue
            typos += 1
            broken = line[:m.end(2)] + "q" + line[m.end(2):]
            source = "\n".join(lines[:i] + [broken] + lines[i + 1:])
            try:
                parse_document(source, file=str(path), base_dir=path.parent)
                problems.append(f"{path}:{i + 1}: typo accepted")
            except VarDLSyntaxError as exc:
                if exc.line != i + 1:
                    problems.append(f"{path}:{i + 1}: reported line {exc.line}")
    ok = not problems
    criterion(7, ok, f"{files} files round-trip, {typos} injected typos located")
    assert ok, problems[:10]
