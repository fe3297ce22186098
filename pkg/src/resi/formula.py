"""Model formulas, nonlinear expressions, and design matrices.

Linear model formulas follow the Wilkinson notation subset

    response ~ a + b*c + d:e        (`*` crosses, `:` interacts)
    response ~ 0 + a                (drop the intercept)
    response ~ 1                    (intercept only)

`:` binds tighter than `*`, which binds tighter than `+`. Terms hold
column names only; arithmetic belongs to nonlinear expressions, parsed
separately with :func:`parse_nls_expression`.

Categorical columns are expanded with treatment coding: the
lexicographically smallest level is the reference and each remaining
level contributes one dummy column labeled ``<column><level>``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .errors import DesignError, FormulaError
from .frames import CATEGORICAL, NUMERIC, DataFrame

# ---------------------------------------------------------------------------
# linear formulas


@dataclass(frozen=True)
class Term:
    """A main effect (one factor) or interaction (several factors)."""

    factors: tuple[str, ...]

    def __post_init__(self):
        if not self.factors:
            raise FormulaError("a term needs at least one factor")
        if len(set(self.factors)) != len(self.factors):
            raise FormulaError(f"repeated factor in term {':'.join(self.factors)}")

    @property
    def order(self) -> int:
        return len(self.factors)

    def label(self) -> str:
        return ":".join(self.factors)

    def key(self) -> frozenset:
        return frozenset(self.factors)


@dataclass(frozen=True)
class FormulaAST:
    response: str
    terms: tuple[Term, ...]
    has_intercept: bool

    def __str__(self) -> str:
        rhs = [t.label() for t in self.terms]
        if not self.has_intercept:
            rhs.insert(0, "0")
        elif not rhs:
            rhs = ["1"]
        return f"{self.response} ~ {' + '.join(rhs)}"


_IDENT = re.compile(r"[A-Za-z_.][A-Za-z0-9_.]*")


def _tokenize_formula(text: str) -> list[str]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+*:()~":
            tokens.append(ch)
            i += 1
            continue
        if ch in "01":  # identifiers cannot start with a digit
            tokens.append(ch)
            i += 1
            continue
        match = _IDENT.match(text, i)
        if match:
            tokens.append(match.group())
            i = match.end()
            continue
        raise FormulaError(f"unknown token {ch!r} in formula")
    return tokens


class _FormulaParser:
    """Recursive-descent parser producing lists of candidate terms."""

    def __init__(self, tokens: list[str]):
        self.tokens = tokens
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise FormulaError("unexpected end of formula")
        self.pos += 1
        return tok

    def parse_sum(self) -> list:
        items = [self.parse_cross()]
        while self.peek() == "+":
            self.take()
            items.append(self.parse_cross())
        out = []
        for item in items:
            out.extend(item)
        return out

    def parse_cross(self) -> list:
        left = self.parse_interaction()
        while self.peek() == "*":
            self.take()
            right = self.parse_interaction()
            left = left + right + _interact(left, right)
        return left

    def parse_interaction(self) -> list:
        left = self.parse_primary()
        while self.peek() == ":":
            self.take()
            left = _interact(left, self.parse_primary())
        return left

    def parse_primary(self) -> list:
        tok = self.take()
        if tok == "(":
            inner = self.parse_sum()
            if self.take() != ")":
                raise FormulaError("unbalanced parentheses in formula")
            return inner
        if tok in ("0", "1"):
            return [tok]
        if _IDENT.fullmatch(tok):
            return [Term((tok,))]
        raise FormulaError(f"unknown token {tok!r} in formula")


def _interact(left: list, right: list) -> list:
    for side in (left, right):
        if any(isinstance(t, str) for t in side):
            raise FormulaError("0/1 cannot take part in an interaction")
    out = []
    for a in left:
        for b in right:
            factors = list(a.factors)
            for f in b.factors:
                if f not in factors:
                    factors.append(f)
            out.append(Term(tuple(factors)))
    return out


def parse_formula(text: str) -> FormulaAST:
    """Parse a Wilkinson-style formula into response, terms, intercept.

    Crossings expand (``a*b`` becomes ``a + b + a:b``), duplicates
    collapse, and terms are ordered with main effects first in
    appearance order followed by interactions of ascending order.
    """
    parts = text.split("~")
    if len(parts) != 2:
        raise FormulaError("formula must contain exactly one '~'")
    response = parts[0].strip()
    if not response:
        raise FormulaError("formula has an empty response")
    if not _IDENT.fullmatch(response):
        raise FormulaError(f"invalid response name {response!r}")

    tokens = _tokenize_formula(parts[1])
    if not tokens:
        raise FormulaError("formula has an empty right-hand side")
    parser = _FormulaParser(tokens)
    raw = parser.parse_sum()
    if parser.peek() is not None:
        raise FormulaError(f"unexpected token {parser.peek()!r} in formula")

    has_intercept = True
    candidates: list[Term] = []
    for item in raw:
        if item == "0":
            has_intercept = False
        elif item == "1":
            continue
        else:
            candidates.append(item)

    seen: set[frozenset] = set()
    unique: list[Term] = []
    for term in candidates:
        if term.key() not in seen:
            seen.add(term.key())
            unique.append(term)
    ordered = sorted(unique, key=lambda t: t.order)  # stable: keeps appearance order
    return FormulaAST(response, tuple(ordered), has_intercept)


# ---------------------------------------------------------------------------
# nonlinear model expressions


@dataclass(frozen=True)
class Const:
    value: float

    def __str__(self):
        return repr(self.value)


@dataclass(frozen=True)
class Param:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Col:
    name: str

    def __str__(self):
        return self.name


@dataclass(frozen=True)
class Neg:
    operand: object

    def __str__(self):
        return f"-({self.operand})"


@dataclass(frozen=True)
class Call:
    func: str
    operand: object

    def __str__(self):
        return f"{self.func}({self.operand})"


@dataclass(frozen=True)
class BinOp:
    op: str
    left: object
    right: object

    def __str__(self):
        return f"({self.left} {self.op} {self.right})"


ExpressionAST = Const | Param | Col | Neg | Call | BinOp

_FUNCTIONS = ("exp", "log")
_NUMBER = re.compile(r"\d+\.?\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?")


def _tokenize_expression(text: str) -> list[str]:
    tokens = []
    i = 0
    while i < len(text):
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch in "+-*/^()":
            tokens.append(ch)
            i += 1
            continue
        match = _NUMBER.match(text, i)
        if match:
            tokens.append(match.group())
            i = match.end()
            continue
        match = _IDENT.match(text, i)
        if match:
            tokens.append(match.group())
            i = match.end()
            continue
        raise FormulaError(f"unknown token {ch!r} in expression")
    return tokens


class _ExpressionParser:
    """Precedence: ``^`` (right assoc.) > unary minus > ``* /`` > ``+ -``."""

    def __init__(self, tokens: list[str], params: frozenset[str]):
        self.tokens = tokens
        self.params = params
        self.pos = 0

    def peek(self) -> str | None:
        return self.tokens[self.pos] if self.pos < len(self.tokens) else None

    def take(self) -> str:
        tok = self.peek()
        if tok is None:
            raise FormulaError("unexpected end of expression")
        self.pos += 1
        return tok

    def parse_sum(self):
        node = self.parse_product()
        while self.peek() in ("+", "-"):
            op = self.take()
            node = BinOp(op, node, self.parse_product())
        return node

    def parse_product(self):
        node = self.parse_unary()
        while self.peek() in ("*", "/"):
            op = self.take()
            node = BinOp(op, node, self.parse_unary())
        return node

    def parse_unary(self):
        if self.peek() == "-":
            self.take()
            return Neg(self.parse_unary())
        if self.peek() == "+":
            self.take()
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self):
        base = self.parse_atom()
        if self.peek() == "^":
            self.take()
            return BinOp("^", base, self.parse_unary())  # right associative
        return base

    def parse_atom(self):
        tok = self.take()
        if tok == "(":
            inner = self.parse_sum()
            if self.peek() != ")":
                raise FormulaError("unbalanced parentheses in expression")
            self.take()
            return inner
        if _NUMBER.fullmatch(tok):
            return Const(float(tok))
        if _IDENT.fullmatch(tok):
            if self.peek() == "(":
                if tok not in _FUNCTIONS:
                    raise FormulaError(f"unknown function name {tok!r}")
                self.take()
                inner = self.parse_sum()
                if self.peek() != ")":
                    raise FormulaError("unbalanced parentheses in expression")
                self.take()
                return Call(tok, inner)
            return Param(tok) if tok in self.params else Col(tok)
        raise FormulaError(f"unknown token {tok!r} in expression")


def parse_nls_expression(text: str, parameter_names) -> ExpressionAST:
    """Parse the right-hand side of a nonlinear model.

    Identifiers in *parameter_names* become parameter nodes; every other
    identifier refers to a data column.
    """
    tokens = _tokenize_expression(text)
    if not tokens:
        raise FormulaError("empty expression")
    parser = _ExpressionParser(tokens, frozenset(parameter_names))
    node = parser.parse_sum()
    if parser.peek() is not None:
        extra = parser.peek()
        if extra == ")":
            raise FormulaError("unbalanced parentheses in expression")
        raise FormulaError(f"unexpected token {extra!r} in expression")
    return node


def evaluate_expression(node, columns: dict[str, np.ndarray], params: dict[str, float]):
    """Evaluate an expression tree over column arrays and parameter values."""
    if isinstance(node, Const):
        return node.value
    if isinstance(node, Param):
        return params[node.name]
    if isinstance(node, Col):
        return columns[node.name]
    if isinstance(node, Neg):
        return -evaluate_expression(node.operand, columns, params)
    if isinstance(node, Call):
        arg = evaluate_expression(node.operand, columns, params)
        return np.exp(arg) if node.func == "exp" else np.log(arg)
    left = evaluate_expression(node.left, columns, params)
    right = evaluate_expression(node.right, columns, params)
    if node.op == "+":
        return left + right
    if node.op == "-":
        return left - right
    if node.op == "*":
        return left * right
    if node.op == "/":
        return left / right
    return np.float_power(left, right)


def expression_columns(node) -> list[str]:
    """Data column names referenced by an expression, in first-use order."""
    out: list[str] = []

    def walk(n):
        if isinstance(n, Col):
            if n.name not in out:
                out.append(n.name)
        elif isinstance(n, Neg) or isinstance(n, Call):
            walk(n.operand)
        elif isinstance(n, BinOp):
            walk(n.left)
            walk(n.right)

    walk(node)
    return out


def expression_params(node) -> list[str]:
    """Parameter names referenced by an expression, in first-use order."""
    out: list[str] = []

    def walk(n):
        if isinstance(n, Param):
            if n.name not in out:
                out.append(n.name)
        elif isinstance(n, Neg) or isinstance(n, Call):
            walk(n.operand)
        elif isinstance(n, BinOp):
            walk(n.left)
            walk(n.right)

    walk(node)
    return out


# ---------------------------------------------------------------------------
# design matrices


@dataclass(frozen=True)
class DesignMatrix:
    """Numeric model matrix with term bookkeeping.

    ``term_map`` gives each term's half-open column range; with an
    intercept, column 0 is all ones. ``factor_levels`` records the
    ordered level list (reference first) used to code each categorical
    column, and ``retained`` the original row indices that survived
    listwise deletion.
    """

    X: np.ndarray
    labels: tuple[str, ...]
    terms: tuple[Term, ...]
    term_map: dict[Term, tuple[int, int]]
    factor_levels: dict[str, list[str]]
    has_intercept: bool
    retained: np.ndarray
    response_name: str

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def columns_of(self, term: Term) -> list[int]:
        start, stop = self.term_map[term]
        return list(range(start, stop))


def _term_blocks(term: Term, data: DataFrame, rows: np.ndarray,
                 levels: dict[str, list[str]]):
    """Per-factor (label, column) pieces of one term, reference level dropped."""
    blocks = []
    for factor in term.factors:
        col = data[factor]
        if col.kind == NUMERIC:
            blocks.append([(factor, col.values[rows].astype(float))])
        else:
            lv = levels[factor]
            values = col.values[rows]
            blocks.append(
                [(f"{factor}{level}", (values == level).astype(float)) for level in lv[1:]]
            )
    return blocks


def build_design(formula: FormulaAST, data: DataFrame, *, rows=None,
                 factor_levels: dict[str, list[str]] | None = None):
    """Build the design matrix and response vector for a formula.

    Rows with a missing value in any referenced column are dropped
    before coding; factor levels come from the retained rows unless
    *factor_levels* pins them (used when re-coding new data against an
    existing fit). *rows* restricts construction to given row indices.
    Returns ``(DesignMatrix, y)``.
    """
    referenced = [formula.response]
    for term in formula.terms:
        for factor in term.factors:
            if factor not in referenced:
                referenced.append(factor)
    for name in referenced:
        data[name]  # raises DataError for unknown columns

    if rows is None:
        keep = np.ones(data.row_count, dtype=bool)
        for name in referenced:
            keep &= ~data[name].missing
        retained = np.flatnonzero(keep)
    else:
        retained = np.asarray(rows, dtype=int)
        for name in referenced:
            if data[name].missing[retained].any():
                raise DesignError(
                    f"column {name!r} has missing values on the requested rows"
                )
    if retained.size == 0:
        raise DesignError("no rows left after dropping missing values")

    response_col = data[formula.response]
    if response_col.kind != NUMERIC:
        raise DesignError(f"response {formula.response!r} is not numeric")
    y = response_col.values[retained].astype(float)

    levels: dict[str, list[str]] = {}
    for term in formula.terms:
        for factor in term.factors:
            if data[factor].kind == CATEGORICAL and factor not in levels:
                if factor_levels is not None and factor in factor_levels:
                    levels[factor] = list(factor_levels[factor])
                else:
                    observed = data[factor].values[retained]
                    levels[factor] = sorted(set(observed.tolist()))
                if len(levels[factor]) < 2:
                    raise DesignError(
                        f"categorical column {factor!r} has a single level"
                    )

    n = retained.size
    columns: list[np.ndarray] = []
    labels: list[str] = []
    term_map: dict[Term, tuple[int, int]] = {}
    if formula.has_intercept:
        columns.append(np.ones(n))
        labels.append("(Intercept)")
    for term in formula.terms:
        start = len(columns)
        blocks = _term_blocks(term, data, retained, levels)
        # leftmost factor varies fastest, matching treatment-coded output
        combos = [([], np.ones(n))]
        for block in reversed(blocks):
            combos = [
                ([lbl] + parts, col * vec)
                for parts, vec in combos
                for lbl, col in block
            ]
        for parts, vec in combos:
            labels.append(":".join(parts))
            columns.append(vec)
        term_map[term] = (start, len(columns))

    if not columns:
        raise DesignError("model has no columns (empty formula without intercept)")
    X = np.column_stack(columns)
    design = DesignMatrix(
        X=X,
        labels=tuple(labels),
        terms=formula.terms,
        term_map=term_map,
        factor_levels=levels,
        has_intercept=formula.has_intercept,
        retained=retained,
        response_name=formula.response,
    )
    return design, y
