import itertools
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bpvar.errors import (ConditionRejectsCase, CornerstoneConflict, MissingTree,
                          RedundantRule, UnknownWorklet)
from bpvar.graph import enumerate_traces, isomorphic
from bpvar.graph.rewrite import delete_node
from bpvar.rules import Compare, evaluate, parse_rule
from bpvar.worklet import (EMPTY_WORKLET, RdrNode, RdrTree, Repertoire, add_rule,
                           bind_worklets, enumerate_cases, execute_case, replay_cornerstones,
                           select_worklet)

from conftest import corpus_doc, golden


@pytest.fixture(scope="module")
def health():
    return corpus_doc("healthcare", "worklet")


def tree_for(doc, task):
    return next(t for t in doc.visible("rdr") if t.task == task)


def run_args(doc):
    return doc.base, doc.visible("repertoire")[0], doc.visible("rdr")


# -- selection -----------------------------------------------------------------

def test_pacemaker_selects_non_mrt(health):
    assert tuple(select_worklet(tree_for(health, "MRT"), {"Pacemaker": "yes"})) == (
        "NonMRT", ["root", "n1"])


def test_root_default(health):
    sel = select_worklet(tree_for(health, "MRT"), {"Pacemaker": "no"})
    assert sel.worklet == "MRT_default" and sel.path == ("root", "n1")
    assert select_worklet(tree_for(health, "MRT"), {}).worklet == "MRT_default"


def test_vehicle_repair_type2():
    doc = corpus_doc("vehicle", "worklet")
    assert select_worklet(tree_for(doc, "Repair process"),
                          {"Checklist": "type2"}).worklet == "Repair2"


def test_nested_exception_rules():
    doc = corpus_doc("ebusiness", "worklet")
    tree = tree_for(doc, "Compose shopping cart")
    pick = lambda **d: select_worklet(tree, d).worklet
    assert pick() == "ComposeShoppingCart"
    assert pick(CartType="personalized") == "ComposePersonalizedShoppingCart"
    assert pick(CartType="personalized", Give10="yes") == "Give10Purchase"
    assert pick(CartType="anonymous", Give10="yes") == "ComposeAnonymousShoppingCart"


# -- add_rule ------------------------------------------------------------------

def root_only():
    return RdrTree("MRT", RdrNode("root", "MRT_default"))


def test_add_rule_example():
    case = {"Pacemaker": "yes"}
    tree = add_rule(root_only(), case, parse_rule('Pacemaker = "yes"'), "NonMRT")
    assert len(tree.nodes()) == 2
    assert select_worklet(tree, case).worklet == "NonMRT"
    assert tree.nodes()[1].cornerstone == case
    with pytest.raises(RedundantRule):
        add_rule(tree, case, parse_rule('Pacemaker = "yes"'), "NonMRT")


def test_add_rule_errors(health):
    rep = health.visible("repertoire")[0]
    with pytest.raises(ConditionRejectsCase):
        add_rule(root_only(), {"Pacemaker": "no"}, parse_rule('Pacemaker = "yes"'), "NonMRT")
    with pytest.raises(UnknownWorklet):
        add_rule(root_only(), {"Pacemaker": "yes"}, parse_rule('Pacemaker = "yes"'),
                 "Teleport", repertoire=rep)


def test_condition_must_separate_cornerstones():
    tree = add_rule(root_only(), {"a": "1", "b": "1"}, parse_rule('a = "1"'), "W1")
    with pytest.raises(CornerstoneConflict) as info:
        add_rule(tree, {"a": "1", "b": "2"}, parse_rule('a = "1"'), "W2")
    assert info.value.nodes == ("n1",)
    tree = add_rule(tree, {"a": "1", "b": "2"}, parse_rule('b = "2"'), "W2")
    assert select_worklet(tree, {"a": "1", "b": "1"}).worklet == "W1"


def test_false_branch_attachment():
    tree = add_rule(root_only(), {"a": "1"}, parse_rule('a = "1"'), "W1")
    tree = add_rule(tree, {"a": "2"}, parse_rule('a = "2"'), "W2")
    assert tree.root.true_child.false_child.conclusion == "W2"
    assert all(e.ok for e in replay_cornerstones(tree))


def test_replay_examples(health):
    for tree in health.visible("rdr"):
        assert all(e.ok for e in replay_cornerstones(tree))
    assert [e.ok for e in replay_cornerstones(root_only())] == [True]
    tree = tree_for(health, "MRT")
    broken = replace(tree, root=replace(tree.root, true_child=replace(
        tree.root.true_child, condition=parse_rule('Pacemaker = "no"'))))
    bad = [e for e in replay_cornerstones(broken) if not e.ok]
    assert [(e.node, e.expected, e.actual) for e in bad] == [("n1", "NonMRT", "MRT_default")]


def test_tree_invariants():
    with pytest.raises(ValueError):
        RdrTree("T", RdrNode("root", "W", condition=parse_rule('a = "1"')))
    with pytest.raises(ValueError):
        RdrTree("T", RdrNode("root", "W", true_child=RdrNode("n1", "V", parse_rule('a = "1"'))))


VARS = ("p", "q", "r")
GRID = [dict(zip(VARS, bits)) for bits in itertools.product(("yes", "no"), repeat=3)]
conditions = st.builds(Compare, st.sampled_from(VARS), st.sampled_from(["=", "!="]),
                       st.sampled_from(["yes", "no"]))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.sampled_from(range(len(GRID))), conditions,
                          st.sampled_from(["W1", "W2", "W3"])), max_size=8))
def test_rdr_locality_over_grid(steps):
    tree = root_only()
    for case_idx, cond, worklet in steps:
        case = GRID[case_idx]
        try:
            new = add_rule(tree, case, cond, worklet)
        except (RedundantRule, ConditionRejectsCase):
            continue
        added = next(n for n in new.nodes() if n.id not in {m.id for m in tree.nodes()})
        for data in GRID:
            before, after = select_worklet(tree, data), select_worklet(new, data)
            fires = added.id in after.path and bool(evaluate(cond, data))
            assert after.worklet == (worklet if fires else before.worklet)
        assert select_worklet(new, case).worklet == worklet
        assert all(e.ok for e in replay_cornerstones(new))
        tree = new


# -- simulation ----------------------------------------------------------------

def test_pacemaker_case_never_runs_mrt(health):
    data = {"Pacemaker": "yes", "EffusionInKnee": "no", "CruciateRupture": "no"}
    for seed in range(20):
        trace = execute_case(*run_args(health), data, seed).trace
        assert "X-ray" in trace and "Sonography" in trace and "MRT" not in trace


def test_long_purchase_finishes_early():
    doc = corpus_doc("ebusiness", "worklet")
    log = execute_case(*run_args(doc), {"PurchaseDuration": "long"}, 0)
    assert "Deliver products" not in log.trace and "Receive products" not in log.trace
    assert log.trace[-1] in ("Pay by credit card", "Checkout")


def test_plain_parent_runs_like_its_trace_set():
    model = golden("healthcare", "V0")
    rep = Repertoire("none")
    run = enumerate_cases(model, rep, (), {})
    assert run.traces == enumerate_traces(model).traces
    assert execute_case(model, rep, (), {}, 7).trace in enumerate_traces(model).traces


def test_guards_evaluated_against_case_data():
    model = golden("healthcare", "V0")
    run = enumerate_cases(model, Repertoire("none"), (), {"CruciateRupture": "yes"})
    assert all("Operative Treatment" in t for t in run.traces) and len(run.traces) == 6


def test_execute_case_is_deterministic(health):
    data = {"EffusionInKnee": "yes"}
    a = execute_case(*run_args(health), data, 42)
    b = execute_case(*run_args(health), data, 42)
    assert a == b and a.lines() == b.lines()


def test_case_log_pairs_subcases(health):
    log = execute_case(*run_args(health), {"EffusionInKnee": "yes"}, 3)
    # subcase markers carry the inner depth; worklet bodies may reuse the
    # parent task's label, so the owning task is matched one level up
    open_ = []
    for ev in log.events:
        if ev.kind == "subcase-started":
            open_.append((ev.task, ev.depth - 1))
        elif ev.kind == "subcase-completed":
            assert open_.pop() == (ev.task, ev.depth - 1)
        elif ev.kind == "task-completed":
            assert (ev.task, ev.depth) not in open_
    assert not open_
    selected = [ev for ev in log.events if ev.kind == "worklet-selected"]
    assert {ev.task for ev in selected} == {"MRT", "Puncture"}


def test_missing_tree(health):
    parent, rep, trees = run_args(health)
    with pytest.raises(MissingTree):
        execute_case(parent, rep, [t for t in trees if t.task != "MRT"], {}, 0)


def test_empty_worklet_equals_deletion(health):
    parent, rep, trees = run_args(health)
    data = {"Pacemaker": "yes"}
    bound = bind_worklets(parent, rep, trees, data)
    assert isomorphic(bound, golden("healthcare", "V1"))
    assert rep.entries["NonMRT"] == EMPTY_WORKLET
    runs = enumerate_cases(parent, rep, trees, data).traces
    assert runs == enumerate_traces(golden("healthcare", "V1")).traces
    v0 = golden("healthcare", "V0")
    mrt = v0.nodes_by_label("MRT")[0]
    assert runs == enumerate_traces(delete_node(v0, mrt.id)).traces
