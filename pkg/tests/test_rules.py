import pytest
from hypothesis import given
from hypothesis import strategies as st

from bpvar.lexer import VarDLSyntaxError
from bpvar.rules import And, Compare, Not, Or, evaluate, format_expr, free_variables, parse_rule

VARS = ["a", "b", "c"]
VALUES = ["x", "y"]

exprs = st.recursive(
    st.builds(Compare, st.sampled_from(VARS), st.sampled_from(["=", "!="]),
              st.sampled_from(VALUES)),
    lambda inner: st.one_of(
        st.builds(Not, inner),
        st.builds(lambda xs: And(tuple(xs)), st.lists(inner, min_size=2, max_size=3)),
        st.builds(lambda xs: Or(tuple(xs)), st.lists(inner, min_size=2, max_size=3)),
    ),
    max_leaves=8,
)
envs = st.dictionaries(st.sampled_from(VARS), st.sampled_from(VALUES))


def reference(e, env):
    if isinstance(e, Compare):
        if e.var not in env:
            return False
        return (env[e.var] == e.value) == (e.op == "=")
    if isinstance(e, Not):
        return not reference(e.operand, env)
    if isinstance(e, And):
        return all(reference(x, env) for x in e.operands)
    return any(reference(x, env) for x in e.operands)


def test_effusion_rule_true():
    assert evaluate(parse_rule('EffusionInKnee = "yes"'), {"EffusionInKnee": "yes"})


def test_unset_variable_is_false_with_warning():
    result = evaluate(parse_rule('EffusionInKnee = "yes"'), {})
    assert not result
    assert len(result.warnings) == 1 and "EffusionInKnee" in result.warnings[0]


def test_negation():
    assert evaluate(parse_rule('not Pacemaker = "yes"'), {"Pacemaker": "no"})
    assert evaluate(parse_rule('not (Pacemaker = "yes")'), {"Pacemaker": "no"})


def test_precedence():
    e = parse_rule('a = "x" or b = "x" and c = "x"')
    assert isinstance(e, Or)
    assert evaluate(e, {"a": "x", "b": "y"})


def test_free_variables_sorted_unique():
    assert free_variables(parse_rule('b = "1" and (a = "2" or b != "3")')) == ["a", "b"]


def test_single_quotes_accepted():
    assert evaluate(parse_rule("CruciateRupture = 'yes'"), {"CruciateRupture": "yes"})


@pytest.mark.parametrize("text", ['a = ', 'a "x"', '(a = "x"', 'a = "x" b = "y"'])
def test_malformed_rules(text):
    with pytest.raises(VarDLSyntaxError):
        parse_rule(text)


@given(exprs, envs)
def test_evaluation_matches_reference(e, env):
    assert bool(evaluate(e, env)) == reference(e, env)


@given(exprs)
def test_format_parse_round_trip(e):
    again = parse_rule(format_expr(e))
    assert format_expr(again) == format_expr(e)
    for env in ({}, {"a": "x", "b": "y", "c": "x"}, {"a": "y", "c": "y"}):
        assert bool(evaluate(again, env)) == reference(e, env)
