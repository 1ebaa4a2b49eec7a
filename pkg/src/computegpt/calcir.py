"""CalcIR: a tiny deterministic expression language with exact arithmetic.

Programs are straight-line sequences of `name = expr` assignments (plus bare
expressions). Integers and rationals are arbitrary precision; division of two
exact values yields an exact rational, and any float operand makes the whole
operation binary64. Builtins cover polynomial calculus (polyderiv, polyint)
and exact determinants (det). The grammar is documented in docs/calcir.md.
"""

from __future__ import annotations

import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Union

__all__ = [
    "CalcError",
    "CalcSyntaxError",
    "DivisionByZero",
    "LimitExceeded",
    "Matrix",
    "NotSquare",
    "Program",
    "TypeMismatch",
    "UseBeforeDefine",
    "Value",
    "canonicalize",
    "det_exact",
    "evaluate",
    "parse_program",
    "polyderiv",
    "polyint",
]

DEFAULT_STEP_LIMIT = 10_000_000

# Exact pow guard: cap the result size of integer exponentiation so a single
# expression cannot stall the evaluator (the language has no loops).
_MAX_POW_BITS = 100_000_000


class CalcError(Exception):
    """Base class for all CalcIR parse and evaluation errors."""


class CalcSyntaxError(CalcError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, col {col})")
        self.line = line
        self.col = col


class UseBeforeDefine(CalcError):
    def __init__(self, name: str, line: int, col: int):
        super().__init__(f"variable '{name}' used before definition (line {line}, col {col})")
        self.name = name
        self.line = line
        self.col = col


class DivisionByZero(CalcError):
    pass


class TypeMismatch(CalcError):
    pass


class LimitExceeded(CalcError):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind  # "steps" | "time" | "size"


class NotSquare(CalcError):
    pass


@dataclass(frozen=True)
class Matrix:
    """Rectangular matrix of values; rows all have equal length."""

    rows: tuple[tuple["Value", ...], ...]

    def __post_init__(self):
        if not self.rows or not self.rows[0]:
            raise TypeMismatch("matrix must have at least one row and one column")
        width = len(self.rows[0])
        if any(len(r) != width for r in self.rows):
            raise TypeMismatch("matrix rows must all have equal length")

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def n_cols(self) -> int:
        return len(self.rows[0])

    def is_square(self) -> bool:
        return self.n_rows == self.n_cols


Value = Union[int, Fraction, float, bool, str, list, Matrix, None]


def canonicalize(v: Value) -> Value:
    """Collapse rationals with denominator 1 into plain integers."""
    if isinstance(v, Fraction) and v.denominator == 1:
        return int(v)
    return v


def is_number(v: Value) -> bool:
    return isinstance(v, (int, Fraction, float)) and not isinstance(v, bool)


def is_exact(v: Value) -> bool:
    return isinstance(v, (int, Fraction)) and not isinstance(v, bool)


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Lit:
    value: Value
    pos: tuple[int, int]


@dataclass(frozen=True)
class Var:
    name: str
    pos: tuple[int, int]


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Expr"
    pos: tuple[int, int]


@dataclass(frozen=True)
class Binary:
    op: str
    left: "Expr"
    right: "Expr"
    pos: tuple[int, int]


@dataclass(frozen=True)
class Call:
    func: str
    args: tuple["Expr", ...]
    pos: tuple[int, int]


@dataclass(frozen=True)
class ListLit:
    items: tuple["Expr", ...]
    pos: tuple[int, int]


Expr = Union[Lit, Var, Unary, Binary, Call, ListLit]


@dataclass(frozen=True)
class Stmt:
    target: Optional[str]  # None for a bare expression statement
    expr: Expr
    pos: tuple[int, int]


@dataclass(frozen=True)
class Program:
    statements: tuple[Stmt, ...]


# ---------------------------------------------------------------------------
# Lexer

_KEYWORDS = {"true": True, "false": False, "null": None}


@dataclass(frozen=True)
class _Token:
    kind: str  # NUMBER NAME STRING OP NEWLINE EOF
    text: str
    value: Value
    line: int
    col: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    line, col = 1, 1
    i = 0
    n = len(source)
    while i < n:
        ch = source[i]
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < n and source[i] != "\n":
                i += 1
            continue
        if ch == "\n" or ch == ";":
            tokens.append(_Token("NEWLINE", ch, None, line, col))
            i += 1
            if ch == "\n":
                line += 1
                col = 1
            else:
                col += 1
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and source[i + 1].isdigit()):
            start = i
            start_col = col
            while i < n and source[i].isdigit():
                i += 1
            is_float = False
            if i < n and source[i] == "." and i + 1 < n and source[i + 1].isdigit():
                is_float = True
                i += 1
                while i < n and source[i].isdigit():
                    i += 1
            if i < n and source[i] in "eE":
                j = i + 1
                if j < n and source[j] in "+-":
                    j += 1
                if j < n and source[j].isdigit():
                    is_float = True
                    i = j
                    while i < n and source[i].isdigit():
                        i += 1
            text = source[start:i]
            value: Value = float(text) if is_float else int(text)
            tokens.append(_Token("NUMBER", text, value, line, start_col))
            col += i - start
            continue
        if ch.isalpha() or ch == "_":
            start = i
            start_col = col
            while i < n and (source[i].isalnum() or source[i] == "_"):
                i += 1
            text = source[start:i]
            tokens.append(_Token("NAME", text, None, line, start_col))
            col += i - start
            continue
        if ch == '"':
            start_col = col
            i += 1
            col += 1
            buf = []
            while i < n and source[i] != '"':
                if source[i] == "\n":
                    raise CalcSyntaxError("unterminated string", line, start_col)
                if source[i] == "\\" and i + 1 < n:
                    esc = source[i + 1]
                    buf.append({"n": "\n", "t": "\t", '"': '"', "\\": "\\"}.get(esc, esc))
                    i += 2
                    col += 2
                else:
                    buf.append(source[i])
                    i += 1
                    col += 1
            if i >= n:
                raise CalcSyntaxError("unterminated string", line, start_col)
            i += 1
            col += 1
            tokens.append(_Token("STRING", "".join(buf), "".join(buf), line, start_col))
            continue
        if ch in "+-*/^()[],=":
            tokens.append(_Token("OP", ch, None, line, col))
            i += 1
            col += 1
            continue
        raise CalcSyntaxError(f"unexpected character {ch!r}", line, col)
    tokens.append(_Token("EOF", "", None, line, col))
    return tokens


# ---------------------------------------------------------------------------
# Parser: precedence  ^  >  unary -  >  * /  >  + -  with ^ right-associative.

_MAX_NESTING = 100


class _Parser:
    def __init__(self, tokens: list[_Token]):
        self.tokens = tokens
        self.i = 0
        self.depth = 0

    def _enter(self, tok: _Token) -> None:
        self.depth += 1
        if self.depth > _MAX_NESTING:
            raise CalcSyntaxError("expression nested too deeply", tok.line, tok.col)

    def peek(self) -> _Token:
        return self.tokens[self.i]

    def next(self) -> _Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def expect_op(self, text: str) -> _Token:
        tok = self.peek()
        if tok.kind != "OP" or tok.text != text:
            raise CalcSyntaxError(f"expected '{text}'", tok.line, tok.col)
        return self.next()

    def at_op(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind == "OP" and tok.text in texts

    def parse_program(self) -> Program:
        statements: list[Stmt] = []
        while True:
            while self.peek().kind == "NEWLINE":
                self.next()
            if self.peek().kind == "EOF":
                break
            statements.append(self.parse_statement())
            tok = self.peek()
            if tok.kind not in ("NEWLINE", "EOF"):
                raise CalcSyntaxError(f"unexpected {tok.text!r}", tok.line, tok.col)
        return Program(tuple(statements))

    def parse_statement(self) -> Stmt:
        tok = self.peek()
        if tok.kind == "NAME" and tok.text not in _KEYWORDS:
            nxt = self.tokens[self.i + 1]
            if nxt.kind == "OP" and nxt.text == "=":
                self.next()
                self.next()
                expr = self.parse_expr()
                return Stmt(tok.text, expr, (tok.line, tok.col))
        expr = self.parse_expr()
        return Stmt(None, expr, (tok.line, tok.col))

    def parse_expr(self) -> Expr:
        left = self.parse_term()
        while self.at_op("+", "-"):
            op = self.next()
            right = self.parse_term()
            left = Binary(op.text, left, right, (op.line, op.col))
        return left

    def parse_term(self) -> Expr:
        left = self.parse_unary()
        while self.at_op("*", "/"):
            op = self.next()
            right = self.parse_unary()
            left = Binary(op.text, left, right, (op.line, op.col))
        return left

    def parse_unary(self) -> Expr:
        ops: list[_Token] = []
        while self.at_op("-", "+"):
            ops.append(self.next())
        expr = self.parse_power()
        for op in reversed(ops):
            expr = Unary(op.text, expr, (op.line, op.col))
        return expr

    def parse_power(self) -> Expr:
        base = self.parse_atom()
        if self.at_op("^"):
            op = self.next()
            self._enter(op)
            # Exponent re-enters at unary level so `2^-3` and `2^3^2` (right
            # associative) both parse.
            exponent = self.parse_unary()
            self.depth -= 1
            return Binary("^", base, exponent, (op.line, op.col))
        return base

    def parse_atom(self) -> Expr:
        tok = self.peek()
        if tok.kind == "NUMBER" or tok.kind == "STRING":
            self.next()
            return Lit(tok.value, (tok.line, tok.col))
        if tok.kind == "NAME":
            self.next()
            if tok.text in _KEYWORDS:
                return Lit(_KEYWORDS[tok.text], (tok.line, tok.col))
            if self.at_op("("):
                self._enter(tok)
                self.next()
                args: list[Expr] = []
                if not self.at_op(")"):
                    args.append(self.parse_expr())
                    while self.at_op(","):
                        self.next()
                        args.append(self.parse_expr())
                self.expect_op(")")
                self.depth -= 1
                if tok.text not in BUILTINS:
                    raise CalcSyntaxError(f"unknown function '{tok.text}'", tok.line, tok.col)
                return Call(tok.text, tuple(args), (tok.line, tok.col))
            return Var(tok.text, (tok.line, tok.col))
        if tok.kind == "OP" and tok.text == "(":
            self._enter(tok)
            self.next()
            expr = self.parse_expr()
            self.expect_op(")")
            self.depth -= 1
            return expr
        if tok.kind == "OP" and tok.text == "[":
            self._enter(tok)
            self.next()
            items: list[Expr] = []
            if not self.at_op("]"):
                items.append(self.parse_expr())
                while self.at_op(","):
                    self.next()
                    items.append(self.parse_expr())
            self.expect_op("]")
            self.depth -= 1
            return ListLit(tuple(items), (tok.line, tok.col))
        raise CalcSyntaxError(f"unexpected {tok.text or tok.kind!r}", tok.line, tok.col)


def _check_defined(program: Program) -> None:
    defined: set[str] = set()
    for stmt in program.statements:
        stack: list[Expr] = [stmt.expr]
        while stack:
            expr = stack.pop()
            if isinstance(expr, Var):
                if expr.name not in defined:
                    raise UseBeforeDefine(expr.name, expr.pos[0], expr.pos[1])
            elif isinstance(expr, Unary):
                stack.append(expr.operand)
            elif isinstance(expr, Binary):
                stack.append(expr.left)
                stack.append(expr.right)
            elif isinstance(expr, Call):
                stack.extend(expr.args)
            elif isinstance(expr, ListLit):
                stack.extend(expr.items)
        if stmt.target is not None:
            defined.add(stmt.target)


def parse_program(source: str) -> Program:
    """Parse CalcIR source into a Program, checking variables are defined before use."""
    program = _Parser(_tokenize(source)).parse_program()
    _check_defined(program)
    return program


# ---------------------------------------------------------------------------
# Evaluation

def _arith(op: str, a: Value, b: Value) -> Value:
    if not is_number(a) or not is_number(b):
        raise TypeMismatch(f"operator '{op}' requires numeric operands")
    if isinstance(a, float) or isinstance(b, float):
        x, y = float(a), float(b)
        if op == "+":
            return x + y
        if op == "-":
            return x - y
        if op == "*":
            return x * y
        if y == 0.0:
            raise DivisionByZero("division by zero")
        return x / y
    if op == "+":
        return canonicalize(a + b)
    if op == "-":
        return canonicalize(a - b)
    if op == "*":
        return canonicalize(a * b)
    if b == 0:
        raise DivisionByZero("division by zero")
    return canonicalize(Fraction(a) / Fraction(b))


def _power(a: Value, b: Value) -> Value:
    if not is_number(a) or not is_number(b):
        raise TypeMismatch("operator '^' requires numeric operands")
    if isinstance(a, float) or isinstance(b, float):
        if float(a) == 0.0 and float(b) < 0.0:
            raise DivisionByZero("zero raised to a negative power")
        try:
            result = float(a) ** float(b)
        except OverflowError:
            raise LimitExceeded("size", "float exponentiation overflowed")
        if isinstance(result, complex):
            raise TypeMismatch("fractional power of a negative base")
        return result
    if not isinstance(b, int):
        raise TypeMismatch("exact base requires an integer exponent")
    if a == 0:
        if b < 0:
            raise DivisionByZero("zero raised to a negative power")
        return 1 if b == 0 else 0
    base_bits = a.numerator.bit_length() + a.denominator.bit_length() if isinstance(a, Fraction) else a.bit_length()
    if base_bits * abs(b) > _MAX_POW_BITS:
        raise LimitExceeded("size", "integer exponentiation result too large")
    if b >= 0:
        return canonicalize(a**b)
    return canonicalize(Fraction(1) / Fraction(a) ** (-b))


class _Evaluator:
    def __init__(self, step_limit: int, deadline: Optional[float]):
        self.steps = 0
        self.step_limit = step_limit
        self.deadline = deadline

    def tick(self) -> None:
        self.steps += 1
        if self.steps > self.step_limit:
            raise LimitExceeded("steps", f"evaluation exceeded {self.step_limit} steps")
        if self.deadline is not None and self.steps % 256 == 0:
            if time.monotonic() > self.deadline:
                raise LimitExceeded("time", "evaluation exceeded the wall-time limit")

    def eval(self, expr: Expr, env: dict[str, Value]) -> Value:
        # Iterative post-order evaluation: generated programs can contain very
        # long operator chains, which would overflow the Python call stack.
        work: list[tuple[Expr, bool]] = [(expr, False)]
        values: list[Value] = []
        while work:
            node, ready = work.pop()
            if not ready:
                self.tick()
                if isinstance(node, Lit):
                    values.append(node.value)
                elif isinstance(node, Var):
                    if node.name not in env:
                        raise UseBeforeDefine(node.name, node.pos[0], node.pos[1])
                    values.append(env[node.name])
                elif isinstance(node, Unary):
                    work.append((node, True))
                    work.append((node.operand, False))
                elif isinstance(node, Binary):
                    work.append((node, True))
                    work.append((node.right, False))
                    work.append((node.left, False))
                elif isinstance(node, ListLit):
                    work.append((node, True))
                    for item in reversed(node.items):
                        work.append((item, False))
                elif isinstance(node, Call):
                    work.append((node, True))
                    for arg in reversed(node.args):
                        work.append((arg, False))
                else:
                    raise TypeMismatch(f"cannot evaluate {type(node).__name__}")
                continue
            if isinstance(node, Unary):
                v = values.pop()
                if not is_number(v):
                    raise TypeMismatch(f"unary '{node.op}' requires a numeric operand")
                values.append(v if node.op == "+" else canonicalize(-v))
            elif isinstance(node, Binary):
                right = values.pop()
                left = values.pop()
                if node.op == "^":
                    values.append(_power(left, right))
                else:
                    values.append(_arith(node.op, left, right))
            elif isinstance(node, ListLit):
                n = len(node.items)
                items = values[len(values) - n:]
                del values[len(values) - n:]
                values.append(items)
            elif isinstance(node, Call):
                n = len(node.args)
                args = values[len(values) - n:]
                del values[len(values) - n:]
                values.append(BUILTINS[node.func](*args))
        assert len(values) == 1
        return values[0]


def evaluate(program: Program, limits=None, step_limit: int = DEFAULT_STEP_LIMIT) -> dict[str, Value]:
    """Evaluate a parsed program, returning the final name -> value environment.

    `limits` may be an executor ResourceLimits (only wall_ms is consulted);
    the step limit keeps evaluation total even without a wall clock.
    """
    deadline = None
    if limits is not None:
        deadline = time.monotonic() + limits.wall_ms / 1000.0
    ev = _Evaluator(step_limit, deadline)
    env: dict[str, Value] = {}
    for stmt in program.statements:
        value = ev.eval(stmt.expr, env)
        if stmt.target is not None:
            env[stmt.target] = value
    return env


# ---------------------------------------------------------------------------
# Builtins

def polyderiv(coeffs: list) -> list:
    """Differentiate a polynomial given as ascending-power coefficients.

    [c0, c1, ..., cn] -> [1*c1, 2*c2, ..., n*cn]; constants yield [0].
    """
    if isinstance(coeffs, Matrix) or not isinstance(coeffs, (list, tuple)):
        raise TypeMismatch("polyderiv expects a list of coefficients")
    for c in coeffs:
        if not is_number(c):
            raise TypeMismatch("polyderiv coefficients must be numeric")
    if len(coeffs) <= 1:
        return [0]
    return [canonicalize(i * c) for i, c in enumerate(coeffs) if i >= 1]


def polyint(coeffs: list, a: Value, b: Value) -> Value:
    """Definite integral of an ascending-power polynomial from a to b.

    Exact inputs give an exact result: sum of c_i * (b^(i+1) - a^(i+1)) / (i+1).
    """
    if isinstance(coeffs, Matrix) or not isinstance(coeffs, (list, tuple)):
        raise TypeMismatch("polyint expects a list of coefficients")
    if not is_number(a) or not is_number(b):
        raise TypeMismatch("polyint bounds must be numeric")
    for c in coeffs:
        if not is_number(c):
            raise TypeMismatch("polyint coefficients must be numeric")
    exact = is_exact(a) and is_exact(b) and all(is_exact(c) for c in coeffs)
    if exact:
        total = Fraction(0)
        for i, c in enumerate(coeffs):
            total += Fraction(c) * (Fraction(b) ** (i + 1) - Fraction(a) ** (i + 1)) / (i + 1)
        return canonicalize(total)
    fa, fb = float(a), float(b)
    return sum(float(c) * (fb ** (i + 1) - fa ** (i + 1)) / (i + 1) for i, c in enumerate(coeffs))


def _matrix_rows(m) -> list[list[Value]]:
    if isinstance(m, Matrix):
        return [list(r) for r in m.rows]
    if isinstance(m, (list, tuple)) and m and all(isinstance(r, (list, tuple)) for r in m):
        width = len(m[0])
        if width == 0 or any(len(r) != width for r in m):
            raise TypeMismatch("matrix rows must all have equal length")
        return [list(r) for r in m]
    raise TypeMismatch("expected a matrix (list of equal-length rows)")


def _det_float(rows: list[list[float]]) -> float:
    n = len(rows)
    a = [[float(x) for x in row] for row in rows]
    det = 1.0
    for k in range(n):
        pivot_row = max(range(k, n), key=lambda r: abs(a[r][k]))
        if a[pivot_row][k] == 0.0:
            return 0.0
        if pivot_row != k:
            a[k], a[pivot_row] = a[pivot_row], a[k]
            det = -det
        det *= a[k][k]
        for i in range(k + 1, n):
            factor = a[i][k] / a[k][k]
            for j in range(k, n):
                a[i][j] -= factor * a[k][j]
    return det


def det_exact(m) -> Value:
    """Determinant of a square matrix.

    Exact entries use fraction-free (Bareiss) elimination with row pivoting;
    any float entry switches to partial-pivot elimination in binary64.
    """
    rows = _matrix_rows(m)
    n = len(rows)
    if n != len(rows[0]):
        raise NotSquare(f"determinant requires a square matrix, got {n}x{len(rows[0])}")
    for row in rows:
        for x in row:
            if not is_number(x):
                raise TypeMismatch("matrix entries must be numeric")
    if any(isinstance(x, float) for row in rows for x in row):
        return _det_float(rows)
    all_int = all(isinstance(x, int) for row in rows for x in row)
    a: list[list] = [list(row) for row in rows] if all_int else [[Fraction(x) for x in row] for row in rows]
    sign = 1
    prev = 1
    for k in range(n - 1):
        if a[k][k] == 0:
            for i in range(k + 1, n):
                if a[i][k] != 0:
                    a[k], a[i] = a[i], a[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = a[i][j] * a[k][k] - a[i][k] * a[k][j]
                # Bareiss guarantees this division is exact over the integers.
                a[i][j] = num // prev if all_int else num / prev
            a[i][k] = 0
        prev = a[k][k]
    return canonicalize(sign * a[n - 1][n - 1])


BUILTINS = {
    "polyderiv": polyderiv,
    "polyint": polyint,
    "det": det_exact,
}
