"""Boolean rule expressions over named string facts.

One small language serves three purposes: PROVOP context rules
(``EffusionInKnee = "yes"``), RDR conditions over case data, and C-EPC
requirement predicates (``decision("MRT") = on implies ...``).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Union

from .lexer import TokenStream, VarDLSyntaxError, quote, tokenize

KEYWORDS = {"and", "or", "not", "implies", "true", "false", "decision"}


@dataclass(frozen=True)
class Const:
    value: bool


@dataclass(frozen=True)
class Compare:
    var: str
    op: str  # "=" | "!="
    value: str


@dataclass(frozen=True)
class Decision:
    target: str
    op: str
    choice: str


@dataclass(frozen=True)
class Not:
    operand: "Expr"


@dataclass(frozen=True)
class And:
    operands: tuple


@dataclass(frozen=True)
class Or:
    operands: tuple


@dataclass(frozen=True)
class Implies:
    premise: "Expr"
    conclusion: "Expr"


Expr = Union[Const, Compare, Decision, Not, And, Or, Implies]
TRUE = Const(True)


@dataclass(frozen=True)
class Evaluation:
    value: bool
    unset: tuple = ()  # variables compared while absent from the environment

    def __bool__(self):
        return self.value

    @property
    def warnings(self) -> list:
        return [f"variable {v!r} is not set; comparison evaluates to false"
                for v in self.unset]


def _eval(expr: Expr, env: Mapping[str, str], unset: set) -> bool:
    if isinstance(expr, Const):
        return expr.value
    if isinstance(expr, (Compare, Decision)):
        key = expr.var if isinstance(expr, Compare) else expr.target
        want = expr.value if isinstance(expr, Compare) else expr.choice
        if key not in env:
            unset.add(key)
            return False
        return (env[key] == want) == (expr.op == "=")
    if isinstance(expr, Not):
        return not _eval(expr.operand, env, unset)
    if isinstance(expr, And):
        return all([_eval(x, env, unset) for x in expr.operands])
    if isinstance(expr, Or):
        return any([_eval(x, env, unset) for x in expr.operands])
    if isinstance(expr, Implies):
        premise = _eval(expr.premise, env, unset)
        conclusion = _eval(expr.conclusion, env, unset)
        return (not premise) or conclusion
    raise TypeError(f"not a rule expression: {expr!r}")


def evaluate(expr: Expr, env: Mapping[str, str]) -> Evaluation:
    """Evaluate ``expr``; any comparison on an unset variable is false."""
    unset: set = set()
    value = _eval(expr, env, unset)
    return Evaluation(value, tuple(sorted(unset)))


def free_variables(expr: Expr) -> list:
    found = set()

    def visit(e):
        if isinstance(e, Compare):
            found.add(e.var)
        elif isinstance(e, Decision):
            found.add(e.target)
        elif isinstance(e, Not):
            visit(e.operand)
        elif isinstance(e, (And, Or)):
            for x in e.operands:
                visit(x)
        elif isinstance(e, Implies):
            visit(e.premise)
            visit(e.conclusion)

    visit(expr)
    return sorted(found)


# -- text form --------------------------------------------------------------

_PREC = {Implies: 1, Or: 2, And: 3, Not: 4}


def _atom_value(text: str) -> str:
    return text if text.isidentifier() and text not in KEYWORDS else quote(text)


def format_expr(expr: Expr, parent: int = 0) -> str:
    """Canonical text; parses back to an equal expression."""
    mine = _PREC.get(type(expr), 5)
    if isinstance(expr, Const):
        text = "true" if expr.value else "false"
    elif isinstance(expr, Compare):
        text = f"{expr.var} {expr.op} {quote(expr.value)}"
    elif isinstance(expr, Decision):
        text = f"decision({quote(expr.target)}) {expr.op} {_atom_value(expr.choice)}"
    elif isinstance(expr, Not):
        text = f"not {format_expr(expr.operand, mine)}"
    elif isinstance(expr, And):
        text = " and ".join(format_expr(x, mine + 1) for x in expr.operands)
    elif isinstance(expr, Or):
        text = " or ".join(format_expr(x, mine + 1) for x in expr.operands)
    else:
        text = f"{format_expr(expr.premise, mine + 1)} implies {format_expr(expr.conclusion, mine)}"
    return f"({text})" if mine < parent else text


# -- parsing ----------------------------------------------------------------

def parse_expr(ts: TokenStream) -> Expr:
    """Parse one expression from ``ts``, stopping before ``{``, ``;`` or ``)``."""
    left = _parse_or(ts)
    if ts.accept("implies"):
        return Implies(left, parse_expr(ts))
    return left


def _parse_or(ts: TokenStream) -> Expr:
    items = [_parse_and(ts)]
    while ts.accept("or"):
        items.append(_parse_and(ts))
    return items[0] if len(items) == 1 else Or(tuple(items))


def _parse_and(ts: TokenStream) -> Expr:
    items = [_parse_unary(ts)]
    while ts.accept("and"):
        items.append(_parse_unary(ts))
    return items[0] if len(items) == 1 else And(tuple(items))


def _parse_unary(ts: TokenStream) -> Expr:
    if ts.accept("not"):
        return Not(_parse_unary(ts))
    if ts.accept("("):
        inner = parse_expr(ts)
        ts.expect(")")
        return inner
    if ts.accept("true"):
        return Const(True)
    if ts.accept("false"):
        return Const(False)
    if ts.accept("decision"):
        ts.expect("(")
        target = ts.name_or_string("configurable node").text
        ts.expect(")")
        op = ts.expect("=", "!=").text
        choice = ts.name_or_string("choice").text
        return Decision(target, op, choice)
    tok = ts.peek
    if tok.kind != "IDENT" or tok.text in KEYWORDS:
        ts.fail("expected a condition", "variable", "'not'", "'('", "'decision'")
    var = ts.next().text
    op = ts.expect("=", "!=").text
    value = ts.name_or_string("value").text
    return Compare(var, op, value)


def parse_rule(text: str, file: str = "<rule>") -> Expr:
    ts = TokenStream(tokenize(text, file))
    expr = parse_expr(ts)
    if ts.peek.kind != "EOF":
        ts.fail("trailing input after expression")
    return expr


def try_parse_rule(text: str):
    """Parse ``text`` or return ``None`` when it is not a rule (opaque label)."""
    try:
        return parse_rule(text)
    except VarDLSyntaxError:
        return None
