"""Symbolic expressions: parsing, evaluation, differentiation, normal forms, zero tests."""
from .core import (
    ONE, ZERO, Add, Apply, Const, Expr, Func, Mul, Param, Pow, Symbol, Var,
    add, count_nodes, free_symbols, func, mul, neg, power, simplify, substitute, to_expr,
)
from .diff import diff, gradient
from .evaluate import (
    EvalDivisionByZero, EvalDomainError, EvalError, UnboundSymbolError,
    compile_expr, compile_exprs, evaluate, magnitude,
)
from .parse import MalformedExponentError, ParseError, UnknownIdentifierError, parse
from .poly import NonRationalError, Polynomial, RationalBuilder, rational_expr, to_polynomial
from .printing import to_string
from .zero import (
    EXACT_ZERO, NON_ZERO, PROBABLY_ZERO, IndeterminateError, ZeroVerdict,
    exact_zero, is_identically_zero, sample_points,
)
