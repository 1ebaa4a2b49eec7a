"""Detect LaTeX math inside a question, parse it, and rewrite it as plain prose.

The supported subset is deliberately small: definite/indefinite integrals,
fractions, powers, subscripts, \\times / \\cdot products, scientific products
like 2\\times10^{21} (collapsed to one exact number), single-letter symbols,
and bracketed matrices. Anything else raises UnsupportedConstruct so raw
control sequences never reach the code model.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional, Union

__all__ = [
    "BinOp",
    "Derivative",
    "Frac",
    "Integral",
    "LatexError",
    "LatexSyntaxError",
    "MathAst",
    "MathSegment",
    "MatrixNode",
    "NormalizedQuestion",
    "Number",
    "ProseSegment",
    "Symbol",
    "UnsupportedConstruct",
    "ast_to_natural_language",
    "normalize_question",
    "parse_math",
]


class LatexError(Exception):
    """Base class for math-parsing failures; may carry the offending span."""

    span: Optional[tuple[int, int]] = None


class UnsupportedConstruct(LatexError):
    def __init__(self, command: str):
        super().__init__(f"unsupported LaTeX construct '{command}'")
        self.command = command


class LatexSyntaxError(LatexError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at position {position})")
        self.position = position


# ---------------------------------------------------------------------------
# AST

@dataclass(frozen=True)
class Number:
    """Exact decimal literal. `sci` keeps the source form (mantissa, exponent)
    when the number came from a product like 2\\times10^{21}."""

    value: str
    sci: Optional[tuple[str, str]] = None


@dataclass(frozen=True)
class Symbol:
    name: str


@dataclass(frozen=True)
class BinOp:
    op: str  # + - * / ^
    left: "MathAst"
    right: "MathAst"


@dataclass(frozen=True)
class Frac:
    num: "MathAst"
    den: "MathAst"


@dataclass(frozen=True)
class Integral:
    lower: Optional["MathAst"]
    upper: Optional["MathAst"]
    body: "MathAst"
    var: str


@dataclass(frozen=True)
class Derivative:
    body: "MathAst"
    var: str


@dataclass(frozen=True)
class MatrixNode:
    rows: tuple[tuple["MathAst", ...], ...]


MathAst = Union[Number, Symbol, BinOp, Frac, Integral, Derivative, MatrixNode]


# ---------------------------------------------------------------------------
# Lexer

_IGNORED_COMMANDS = {"displaystyle", "limits"}
_SPACING = {",", ";", "!", " ", "quad", "qquad"}
_KNOWN_COMMANDS = {"int", "frac", "times", "cdot"}


@dataclass(frozen=True)
class _Tok:
    kind: str  # NUM SYM CMD OP EOF
    text: str
    pos: int


def _lex(src: str) -> list[_Tok]:
    tokens: list[_Tok] = []
    i = 0
    n = len(src)
    while i < n:
        ch = src[i]
        if ch.isspace():
            i += 1
            continue
        if ch == "\\":
            j = i + 1
            if j < n and not src[j].isalpha():
                name = src[j]
                j += 1
            else:
                while j < n and src[j].isalpha():
                    j += 1
                name = src[i + 1 : j]
            if name in _SPACING or name in _IGNORED_COMMANDS:
                i = j
                continue
            if name not in _KNOWN_COMMANDS:
                raise UnsupportedConstruct("\\" + name)
            tokens.append(_Tok("CMD", name, i))
            i = j
            continue
        if ch.isdigit() or (ch == "." and i + 1 < n and src[i + 1].isdigit()):
            j = i
            while j < n and src[j].isdigit():
                j += 1
            if j < n and src[j] == "." and j + 1 < n and src[j + 1].isdigit():
                j += 1
                while j < n and src[j].isdigit():
                    j += 1
            tokens.append(_Tok("NUM", src[i:j], i))
            i = j
            continue
        if ch.isalpha():
            tokens.append(_Tok("SYM", ch, i))
            i += 1
            continue
        if ch in "+-*/^_{}()[],=":
            if ch == "=":
                raise UnsupportedConstruct("=")
            tokens.append(_Tok("OP", ch, i))
            i += 1
            continue
        raise LatexSyntaxError(f"unexpected character {ch!r}", i)
    tokens.append(_Tok("EOF", "", n))
    return tokens


# ---------------------------------------------------------------------------
# Parser

def _decimal_times_pow10(mantissa: str, exponent: str) -> str:
    """Exact decimal string for mantissa * 10^exponent (pure digit shifting)."""
    sign = "-" if mantissa.startswith("-") else ""
    m = mantissa.lstrip("+-")
    int_part, _, frac_part = m.partition(".")
    digits = (int_part + frac_part).lstrip("0") or "0"
    shift = int(exponent) - len(frac_part)
    if digits == "0":
        return "0"
    if shift >= 0:
        return sign + digits + "0" * shift
    whole = digits.rjust(-shift + 1, "0")
    head, tail = whole[:shift], whole[shift:]
    tail = tail.rstrip("0")
    return sign + (head + "." + tail if tail else head)


class _MathParser:
    def __init__(self, src: str):
        self.src = src
        self.tokens = _lex(src)
        self.i = 0

    def peek(self, offset: int = 0) -> _Tok:
        return self.tokens[min(self.i + offset, len(self.tokens) - 1)]

    def next(self) -> _Tok:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at_op(self, *texts: str) -> bool:
        tok = self.peek()
        return tok.kind == "OP" and tok.text in texts

    def expect_op(self, text: str) -> None:
        tok = self.next()
        if tok.kind != "OP" or tok.text != text:
            raise LatexSyntaxError(f"expected '{text}'", tok.pos)

    def parse(self) -> MathAst:
        ast = self.parse_expr()
        tok = self.peek()
        if tok.kind != "EOF":
            raise LatexSyntaxError(f"unexpected {tok.text!r}", tok.pos)
        return ast

    def parse_expr(self, in_integral: bool = False) -> MathAst:
        left = self.parse_term(in_integral)
        while self.at_op("+", "-"):
            op = self.next().text
            right = self.parse_term(in_integral)
            left = BinOp(op, left, right)
        return left

    def _at_differential(self, in_integral: bool) -> bool:
        return in_integral and self.peek().kind == "SYM" and self.peek().text == "d" and self.peek(1).kind == "SYM"

    def _starts_factor(self) -> bool:
        tok = self.peek()
        if tok.kind in ("NUM", "SYM"):
            return True
        if tok.kind == "CMD" and tok.text in ("int", "frac"):
            return True
        return tok.kind == "OP" and tok.text in ("(", "[", "{")

    def parse_term(self, in_integral: bool = False) -> MathAst:
        left = self.parse_factor(in_integral)
        while True:
            explicit = False
            if self.at_op("*") or (self.peek().kind == "CMD" and self.peek().text in ("times", "cdot")):
                self.next()
                explicit = True
            elif self.at_op("/"):
                self.next()
                right = self.parse_factor(in_integral)
                left = BinOp("/", left, right)
                continue
            elif self._at_differential(in_integral) or not self._starts_factor():
                break
            right = self.parse_factor(in_integral)
            collapsed = self._collapse_scientific(left, right) if explicit else None
            left = collapsed if collapsed is not None else BinOp("*", left, right)
        return left

    @staticmethod
    def _collapse_scientific(left: MathAst, right: MathAst) -> Optional[MathAst]:
        if (
            isinstance(left, Number)
            and left.sci is None
            and isinstance(right, BinOp)
            and right.op == "^"
            and right.left == Number("10")
            and isinstance(right.right, Number)
            and "." not in right.right.value
        ):
            mantissa, exponent = left.value, right.right.value
            return Number(_decimal_times_pow10(mantissa, exponent), sci=(mantissa, exponent))
        return None

    def parse_factor(self, in_integral: bool = False) -> MathAst:
        if self.at_op("-"):
            self.next()
            operand = self.parse_factor(in_integral)
            if isinstance(operand, Number) and operand.sci is None:
                return Number("-" + operand.value)
            return BinOp("*", Number("-1"), operand)
        if self.at_op("+"):
            self.next()
            return self.parse_factor(in_integral)
        base = self.parse_primary(in_integral)
        while self.at_op("^", "_"):
            op = self.next().text
            script = self.parse_group_or_atom()
            if op == "^":
                base = BinOp("^", base, script)
            else:
                base = self._subscript(base, script)
        return base

    @staticmethod
    def _subscript(base: MathAst, script: MathAst) -> MathAst:
        if isinstance(base, Symbol) and isinstance(script, (Symbol, Number)):
            suffix = script.name if isinstance(script, Symbol) else script.value
            return Symbol(f"{base.name}_{suffix}")
        raise UnsupportedConstruct("_")

    def parse_group_or_atom(self) -> MathAst:
        if self.at_op("{"):
            self.next()
            ast = self.parse_expr()
            self.expect_op("}")
            return ast
        return self.parse_primary(False)

    def parse_primary(self, in_integral: bool) -> MathAst:
        tok = self.peek()
        if tok.kind == "NUM":
            self.next()
            return Number(tok.text)
        if tok.kind == "SYM":
            self.next()
            return Symbol(tok.text)
        if tok.kind == "CMD" and tok.text == "frac":
            self.next()
            num = self.parse_braced()
            den = self.parse_braced()
            derivative = self._try_derivative(num, den)
            if derivative is not None:
                return derivative
            return Frac(num, den)
        if tok.kind == "CMD" and tok.text == "int":
            self.next()
            return self.parse_integral()
        if tok.kind == "OP" and tok.text == "(":
            self.next()
            ast = self.parse_expr(in_integral)
            self.expect_op(")")
            return ast
        if tok.kind == "OP" and tok.text == "{":
            self.next()
            ast = self.parse_expr(in_integral)
            self.expect_op("}")
            return ast
        if tok.kind == "OP" and tok.text == "[":
            return self.parse_matrix()
        raise LatexSyntaxError(f"unexpected {tok.text or 'end of input'!r}", tok.pos)

    def parse_braced(self) -> MathAst:
        self.expect_op("{")
        ast = self.parse_expr()
        self.expect_op("}")
        return ast

    def _try_derivative(self, num: MathAst, den: MathAst) -> Optional[MathAst]:
        # \frac{d}{dx} <factor>  ->  Derivative(factor, x)
        if num != Symbol("d"):
            return None
        if not (isinstance(den, BinOp) and den.op == "*" and den.left == Symbol("d") and isinstance(den.right, Symbol)):
            return None
        if not self._starts_factor():
            return None
        body = self.parse_factor(False)
        return Derivative(body, den.right.name)

    def parse_integral(self) -> MathAst:
        lower: Optional[MathAst] = None
        upper: Optional[MathAst] = None
        while self.at_op("_", "^"):
            op = self.next().text
            script = self.parse_group_or_atom()
            if op == "_":
                lower = script
            else:
                upper = script
        if (lower is None) != (upper is None):
            raise LatexSyntaxError("integral needs both bounds or neither", self.peek().pos)
        body = self.parse_expr(in_integral=True)
        tok = self.peek()
        if not (tok.kind == "SYM" and tok.text == "d" and self.peek(1).kind == "SYM"):
            raise LatexSyntaxError("integral body must end with a differential like dx", tok.pos)
        self.next()
        var = self.next().text
        return Integral(lower, upper, body, var)

    def parse_matrix(self) -> MathAst:
        start = self.peek().pos
        self.expect_op("[")
        rows: list[tuple[MathAst, ...]] = []
        if self.at_op("["):
            while True:
                rows.append(self.parse_matrix_row())
                if self.at_op(","):
                    self.next()
                    continue
                break
        else:
            rows.append(self.parse_row_items("]"))
            self.expect_op("]")
            width = len(rows[0])
            if any(len(r) != width for r in rows):
                raise LatexSyntaxError("matrix rows must have equal length", start)
            return MatrixNode(tuple(rows))
        self.expect_op("]")
        width = len(rows[0])
        if any(len(r) != width for r in rows):
            raise LatexSyntaxError("matrix rows must have equal length", start)
        return MatrixNode(tuple(rows))

    def parse_matrix_row(self) -> tuple[MathAst, ...]:
        self.expect_op("[")
        items = self.parse_row_items("]")
        self.expect_op("]")
        return items

    def parse_row_items(self, closer: str) -> tuple[MathAst, ...]:
        items: list[MathAst] = [self.parse_expr()]
        while self.at_op(","):
            self.next()
            items.append(self.parse_expr())
        return tuple(items)


def parse_math(latex: str) -> MathAst:
    """Parse a math-mode fragment (delimiters already stripped) into a MathAst."""
    return _MathParser(latex).parse()


# ---------------------------------------------------------------------------
# Natural-language rendering

_PREC_ATOM = 4
_PREC_POW = 3
_PREC_MUL = 2
_PREC_ADD = 1


def _prec(ast: MathAst) -> int:
    if isinstance(ast, Number):
        if ast.sci is not None:
            return _PREC_MUL
        return _PREC_ATOM if not ast.value.startswith("-") else _PREC_ADD
    if isinstance(ast, Symbol):
        return _PREC_ATOM
    if isinstance(ast, Frac):
        return _PREC_MUL
    if isinstance(ast, BinOp):
        return {"+": _PREC_ADD, "-": _PREC_ADD, "*": _PREC_MUL, "/": _PREC_MUL, "^": _PREC_POW}[ast.op]
    return _PREC_ATOM


def _render(ast: MathAst, parent_prec: int = 0, right_side: bool = False) -> str:
    if isinstance(ast, Number):
        text = f"{ast.sci[0]}*10^{ast.sci[1]}" if ast.sci is not None else ast.value
    elif isinstance(ast, Symbol):
        text = ast.name
    elif isinstance(ast, Frac):
        text = f"{_render(ast.num, _PREC_MUL)}/{_render(ast.den, _PREC_MUL, right_side=True)}"
    elif isinstance(ast, BinOp):
        prec = _prec(ast)
        sep = f" {ast.op} " if ast.op in "+-" else ast.op
        text = f"{_render(ast.left, prec)}{sep}{_render(ast.right, prec, right_side=True)}"
    elif isinstance(ast, Integral):
        body = _render(ast.body)
        if ast.lower is not None and ast.upper is not None:
            text = (
                f"the definite integral of {body} with respect to {ast.var}"
                f" from {_render(ast.lower)} to {_render(ast.upper)}"
            )
        else:
            text = f"the integral of {body} with respect to {ast.var}"
        return text
    elif isinstance(ast, Derivative):
        return f"the derivative of {_render(ast.body)} with respect to {ast.var}"
    elif isinstance(ast, MatrixNode):
        rows = ", ".join("[" + ", ".join(_render(item) for item in row) + "]" for row in ast.rows)
        return f"[{rows}]"
    else:
        raise TypeError(f"unknown node {type(ast).__name__}")

    prec = _prec(ast)
    if prec < parent_prec or (prec == parent_prec and right_side and parent_prec in (_PREC_MUL, _PREC_ADD)):
        return f"({text})"
    return text


def ast_to_natural_language(ast: MathAst) -> str:
    """Deterministic English rendering of a MathAst; numerals kept verbatim."""
    return _render(ast)


# ---------------------------------------------------------------------------
# Question normalization

@dataclass(frozen=True)
class ProseSegment:
    text: str


@dataclass(frozen=True)
class MathSegment:
    ast: MathAst
    source: str  # original span, delimiters included


Segment = Union[ProseSegment, MathSegment]


@dataclass(frozen=True)
class NormalizedQuestion:
    original_text: str
    segments: tuple[Segment, ...]
    nl_text: str


_DELIMITED = re.compile(r"\$\$(.+?)\$\$|\\\[(.+?)\\\]|\$(.+?)\$", re.DOTALL)
_COMMAND = re.compile(r"\\[a-zA-Z]+")


def _parse_span(fragment: str, start: int, end: int) -> MathAst:
    try:
        return parse_math(fragment)
    except LatexError as exc:
        exc.span = (start, end)
        raise


def normalize_question(text: str) -> NormalizedQuestion:
    """Split a question into prose and math segments and render it as plain prose.

    Math is recognized inside $...$, $$...$$, \\[...\\], or when the whole
    input is a bare math fragment. A single-dollar span that fails to parse
    and carries no control sequence is kept as prose (currency amounts like
    "$50 USD" would otherwise be mistaken for math); unparseable spans with
    control sequences propagate their error. Prose-only input passes through
    unchanged.
    """
    segments: list[Segment] = []
    parts: list[str] = []
    saw_math = False
    last = 0
    for match in _DELIMITED.finditer(text):
        fragment = next(g for g in match.groups() if g is not None)
        single_dollar = match.group(3) is not None
        try:
            ast = _parse_span(fragment, match.start(), match.end())
        except LatexError:
            if single_dollar and not _COMMAND.search(fragment):
                prose = text[last:match.end()]
                segments.append(ProseSegment(prose))
                parts.append(prose)
                last = match.end()
                continue
            raise
        if match.start() > last:
            prose = text[last:match.start()]
            segments.append(ProseSegment(prose))
            parts.append(prose)
        segments.append(MathSegment(ast, text[match.start() : match.end()]))
        parts.append(ast_to_natural_language(ast))
        saw_math = True
        last = match.end()
    if saw_math:
        if last < len(text):
            segments.append(ProseSegment(text[last:]))
            parts.append(text[last:])
        return NormalizedQuestion(text, tuple(segments), "".join(parts))

    stripped = text.strip()
    if stripped and "$" not in text and _COMMAND.search(stripped):
        ast = _parse_span(stripped, 0, len(text))
        return NormalizedQuestion(text, (MathSegment(ast, text),), ast_to_natural_language(ast))
    if not text:
        return NormalizedQuestion("", (), "")
    return NormalizedQuestion(text, (ProseSegment(text),), text)
