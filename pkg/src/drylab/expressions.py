"""Arithmetic expression trees for reaction rate laws.

An :class:`Expression` is an immutable AST with three node kinds: numeric
constants, symbol references (species, parameters, compartments), and calls
(operators, functions, relations, piecewise). Two evaluation paths are
provided: a reference tree-walking interpreter (:func:`evaluate`) and a
compiler to plain Python/numpy source (:func:`compile_rate`) used by the
simulator's hot loop. Both must agree; the test suite checks this.
"""

from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "Expression",
    "ExpressionError",
    "UnboundSymbolError",
    "EvaluationError",
    "num",
    "sym",
    "call",
    "evaluate",
    "free_symbols",
    "compile_rate",
    "OPERATORS",
    "FUNCTIONS",
    "RELATIONS",
    "LOGICALS",
]

OPERATORS = frozenset({"plus", "minus", "times", "divide", "power"})
FUNCTIONS = frozenset({"exp", "ln", "log10", "sqrt", "abs", "floor", "ceiling"})
RELATIONS = frozenset({"lt", "leq", "gt", "geq", "eq", "neq"})
LOGICALS = frozenset({"and", "or", "not"})

_KNOWN_CALLS = OPERATORS | FUNCTIONS | RELATIONS | LOGICALS | {"piecewise"}


class ExpressionError(Exception):
    """Base class for expression construction and evaluation failures."""


class UnboundSymbolError(ExpressionError):
    """A symbol reference had no binding at evaluation time."""

    def __init__(self, name: str):
        super().__init__(f"unbound symbol {name!r}")
        self.name = name


class EvaluationError(ExpressionError):
    """Evaluation produced a non-finite value or hit an undefined case."""


@dataclass(frozen=True)
class Expression:
    """One node of a rate-law expression tree.

    kind is "num" (constant, ``value`` set), "sym" (reference, ``name`` set)
    or "call" (``name`` is the operator/function, ``args`` the children).
    """

    kind: str
    value: float = 0.0
    name: str = ""
    args: tuple["Expression", ...] = field(default=())

    def __post_init__(self):
        if self.kind not in ("num", "sym", "call"):
            raise ExpressionError(f"unknown node kind {self.kind!r}")
        if self.kind == "num" and not math.isfinite(self.value):
            raise ExpressionError(f"non-finite constant {self.value!r}")
        if self.kind == "sym" and not self.name:
            raise ExpressionError("symbol node requires a name")
        if self.kind == "call" and self.name not in _KNOWN_CALLS:
            raise ExpressionError(f"unsupported operator or function {self.name!r}")


def num(value: float) -> Expression:
    return Expression("num", value=float(value))


def sym(name: str) -> Expression:
    return Expression("sym", name=name)


def call(op: str, *args: Expression) -> Expression:
    return Expression("call", name=op, args=tuple(args))


def free_symbols(expr: Expression) -> set[str]:
    """All symbol names referenced anywhere in the tree."""
    if expr.kind == "sym":
        return {expr.name}
    out: set[str] = set()
    for a in expr.args:
        out |= free_symbols(a)
    return out


def _check_finite(x: float, expr: Expression) -> float:
    if not math.isfinite(x):
        raise EvaluationError(f"non-finite result {x!r} from {expr.name or expr.kind}")
    return x


def evaluate(expr: Expression, bindings: Mapping[str, float]) -> float:
    """Evaluate the tree under the given symbol bindings.

    Pure and deterministic. Raises :class:`UnboundSymbolError` for a missing
    binding and :class:`EvaluationError` for division by zero, domain errors,
    or any non-finite intermediate, so blow-ups are reported rather than
    propagated as inf/nan.
    """
    if expr.kind == "num":
        return expr.value
    if expr.kind == "sym":
        try:
            v = float(bindings[expr.name])
        except KeyError:
            raise UnboundSymbolError(expr.name) from None
        if not math.isfinite(v):
            raise EvaluationError(f"binding for {expr.name!r} is not finite: {v!r}")
        return v

    op = expr.name
    if op == "piecewise":
        return _evaluate_piecewise(expr, bindings)

    vals = [evaluate(a, bindings) for a in expr.args]
    try:
        if op == "plus":
            return _check_finite(math.fsum(vals), expr)
        if op == "minus":
            if len(vals) == 1:
                return -vals[0]
            if len(vals) == 2:
                return _check_finite(vals[0] - vals[1], expr)
            raise ExpressionError("minus takes one or two arguments")
        if op == "times":
            out = 1.0
            for v in vals:
                out *= v
            return _check_finite(out, expr)
        if op == "divide":
            if len(vals) != 2:
                raise ExpressionError("divide takes exactly two arguments")
            if vals[1] == 0.0:
                raise EvaluationError("division by zero")
            return _check_finite(vals[0] / vals[1], expr)
        if op == "power":
            if len(vals) != 2:
                raise ExpressionError("power takes exactly two arguments")
            return _check_finite(float(vals[0] ** vals[1]), expr)
        if op == "exp":
            return _check_finite(math.exp(vals[0]), expr)
        if op == "ln":
            return _check_finite(math.log(vals[0]), expr)
        if op == "log10":
            return _check_finite(math.log10(vals[0]), expr)
        if op == "sqrt":
            return _check_finite(math.sqrt(vals[0]), expr)
        if op == "abs":
            return abs(vals[0])
        if op == "floor":
            return math.floor(vals[0])
        if op == "ceiling":
            return math.ceil(vals[0])
        if op in RELATIONS:
            a, b = vals
            result = {
                "lt": a < b,
                "leq": a <= b,
                "gt": a > b,
                "geq": a >= b,
                "eq": a == b,
                "neq": a != b,
            }[op]
            return 1.0 if result else 0.0
        if op == "and":
            return 1.0 if all(v != 0.0 for v in vals) else 0.0
        if op == "or":
            return 1.0 if any(v != 0.0 for v in vals) else 0.0
        if op == "not":
            return 1.0 if vals[0] == 0.0 else 0.0
    except (ValueError, OverflowError, ZeroDivisionError) as exc:
        raise EvaluationError(f"{op} failed: {exc}") from exc
    raise ExpressionError(f"unsupported operator or function {op!r}")


def _evaluate_piecewise(expr: Expression, bindings: Mapping[str, float]) -> float:
    # args are (value, condition) pairs, optionally followed by a default
    args = expr.args
    n_pairs = len(args) // 2
    for i in range(n_pairs):
        if evaluate(args[2 * i + 1], bindings) != 0.0:
            return evaluate(args[2 * i], bindings)
    if len(args) % 2 == 1:
        return evaluate(args[-1], bindings)
    raise EvaluationError("piecewise: no condition held and no otherwise branch")


# ---------------------------------------------------------------------------
# Compilation to Python source


def _emit(expr: Expression, names: Mapping[str, str]) -> str:
    if expr.kind == "num":
        return repr(expr.value)
    if expr.kind == "sym":
        try:
            return names[expr.name]
        except KeyError:
            raise UnboundSymbolError(expr.name) from None

    op = expr.name
    parts = [_emit(a, names) for a in expr.args]
    if op == "plus":
        return "(" + " + ".join(parts) + ")" if parts else "0.0"
    if op == "minus":
        if len(parts) == 1:
            return f"(-{parts[0]})"
        return f"({parts[0]} - {parts[1]})"
    if op == "times":
        return "(" + " * ".join(parts) + ")" if parts else "1.0"
    if op == "divide":
        return f"({parts[0]} / {parts[1]})"
    if op == "power":
        return f"({parts[0]} ** {parts[1]})"
    if op in ("exp", "sqrt", "abs", "floor", "ceiling"):
        fn = {"ceiling": "ceil", "abs": "abs"}.get(op, op)
        prefix = "" if op == "abs" else "_np."
        return f"{prefix}{fn}({parts[0]})"
    if op == "ln":
        return f"_np.log({parts[0]})"
    if op == "log10":
        return f"_np.log10({parts[0]})"
    if op in RELATIONS:
        sign = {"lt": "<", "leq": "<=", "gt": ">", "geq": ">=", "eq": "==", "neq": "!="}[op]
        return f"({parts[0]} {sign} {parts[1]})"
    if op == "and":
        return "(" + " & ".join(f"({p} != 0.0)" for p in parts) + ")"
    if op == "or":
        return "(" + " | ".join(f"({p} != 0.0)" for p in parts) + ")"
    if op == "not":
        return f"({parts[0]} == 0.0)"
    if op == "piecewise":
        n_pairs = len(parts) // 2
        default = parts[-1] if len(parts) % 2 == 1 else "_np.nan"
        out = default
        # fold right-to-left so the first true condition wins
        for i in reversed(range(n_pairs)):
            out = f"_np.where({parts[2 * i + 1]}, {parts[2 * i]}, {out})"
        return out
    raise ExpressionError(f"unsupported operator or function {op!r}")


def compile_rate(expr: Expression, names: Mapping[str, str]):
    """Compile the tree into a callable evaluating it with numpy semantics.

    ``names`` maps every free symbol to a Python expression over the compiled
    function's single argument ``y`` (e.g. ``{"S": "y[0]", "k": "2.5"}``).
    The result broadcasts over arrays of states; non-finite outputs are the
    caller's responsibility to detect (the simulator checks every derivative).
    """
    source = f"lambda y: {_emit(expr, names)}"
    return eval(source, {"_np": np, "abs": np.abs}), source
