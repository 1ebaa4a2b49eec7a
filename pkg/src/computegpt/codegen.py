"""Turn a rendered prompt into a runnable program.

Two backends: a remote chat-completion service (configurable endpoint, key
from the environment) and a deterministic rule-based generator that compiles
a fixed grammar of question families straight to CalcIR. The deterministic
backend is what the benchmark and test suite run against; it answers NoMatch
for anything outside its grammar so the pipeline can report NULL.
"""

from __future__ import annotations

import hashlib
import os
import re
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Optional

import requests

from . import calcir
from .latex import NormalizedQuestion
from .prompts import SENTINEL, FinetunedPrompt, render_prompt

__all__ = [
    "AuthMissing",
    "BackendConfig",
    "GeneratedProgram",
    "GenerationTimeout",
    "NoCodeBlock",
    "NoMatch",
    "RemoteUnavailable",
    "extract_code_block",
    "generate",
    "generate_deterministic",
]


class AuthMissing(RuntimeError):
    pass


class RemoteUnavailable(RuntimeError):
    def __init__(self, status: int, detail: str = ""):
        super().__init__(f"remote backend unavailable (status {status}): {detail}")
        self.status = status


class NoCodeBlock(ValueError):
    pass


class GenerationTimeout(RuntimeError):
    pass


class NoMatch(LookupError):
    """The deterministic grammar has no rule for this question."""


@dataclass(frozen=True)
class GeneratedProgram:
    dialect: str
    source: str
    result_var: str
    backend_id: str
    prompt_hash: str

    def __post_init__(self):
        if not self.source.strip():
            raise ValueError("generated program source must be non-empty")


@dataclass(frozen=True)
class BackendConfig:
    kind: str = "deterministic"  # "deterministic" | "remote"
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-3.5-turbo"
    temperature: float = 0.0
    max_retries: int = 2
    timeout_s: float = 30.0
    api_key_env: str = "COMPUTEGPT_API_KEY"

    def __post_init__(self):
        if self.kind not in ("deterministic", "remote"):
            raise ValueError(f"unknown backend kind {self.kind!r}")
        if self.temperature < 0:
            raise ValueError("temperature must be >= 0")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


_CORRECTIVE = "Return only code. Assign the final answer to `{var}`."


def _sha256(text: str) -> str:
    return hashlib.sha256(text.encode("utf-8")).hexdigest()


# ---------------------------------------------------------------------------
# Code extraction

_FENCE = re.compile(r"```[ \t]*[a-zA-Z0-9_+-]*[ \t]*\r?\n(.*?)```", re.DOTALL)


def _parses_as(source: str, dialect: str) -> bool:
    if dialect == "calcir":
        try:
            calcir.parse_program(source)
            return True
        except calcir.CalcError:
            return False
    try:
        compile(source, "<generated>", "exec")
        return True
    except (SyntaxError, ValueError):
        return False


def extract_code_block(response_text: str, dialect: str = "py3") -> str:
    """Pull the code out of a model response.

    Prefers the first fenced block; without fences, returns the suffix
    starting at the first line from which the rest parses as code. An echoed
    prompt (everything up to the last sentinel) is stripped first.
    """
    text = response_text
    if SENTINEL in text:
        text = text[text.rindex(SENTINEL) + len(SENTINEL):]
    fenced = _FENCE.search(text)
    if fenced:
        body = fenced.group(1).strip("\n")
        if body.strip():
            return body
    lines = text.splitlines()
    for i, line in enumerate(lines):
        if not line.strip():
            continue
        suffix = "\n".join(lines[i:]).strip()
        if _parses_as(suffix, dialect):
            return suffix
    raise NoCodeBlock("response contains no extractable code")


# ---------------------------------------------------------------------------
# Number and polynomial parsing for the deterministic grammar

_UNITS = {
    "zero": 0, "one": 1, "two": 2, "three": 3, "four": 4, "five": 5, "six": 6,
    "seven": 7, "eight": 8, "nine": 9, "ten": 10, "eleven": 11, "twelve": 12,
    "thirteen": 13, "fourteen": 14, "fifteen": 15, "sixteen": 16,
    "seventeen": 17, "eighteen": 18, "nineteen": 19,
}
_TENS = {
    "twenty": 20, "thirty": 30, "forty": 40, "fifty": 50, "sixty": 60,
    "seventy": 70, "eighty": 80, "ninety": 90,
}

_NUM = r"(?:-?\d+(?:\.\d+)?|[a-z]+(?:[-\s][a-z]+)?)"


def _word_to_int(word: str) -> Optional[int]:
    word = word.lower().strip()
    if word in _UNITS:
        return _UNITS[word]
    if word in _TENS:
        return _TENS[word]
    if word == "hundred":
        return 100
    parts = re.split(r"[-\s]+", word)
    if len(parts) == 2 and parts[0] in _TENS and parts[1] in _UNITS and _UNITS[parts[1]] < 10:
        return _TENS[parts[0]] + _UNITS[parts[1]]
    return None


def _number_literal(token: str) -> Optional[str]:
    """CalcIR literal text for a digit or number-word token, or None."""
    token = token.strip()
    if re.fullmatch(r"-?\d+(?:\.\d+)?", token):
        return token
    value = _word_to_int(token)
    return str(value) if value is not None else None


def _frac_literal(value: Fraction) -> str:
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


_TERM = re.compile(
    r"(?:(?P<coef>\d+(?:\.\d+)?)(?:\*10\^(?P<sci>-?\d+))?\s*\*?\s*)?"
    r"(?:(?P<var>[a-zA-Z])(?:\^(?P<exp>\d+))?)?\s*"
)


def _parse_poly(text: str) -> Optional[tuple[list[Fraction], str]]:
    """Parse '2*10^21*x^3 + 200x^2' style text to ascending coefficients."""
    text = text.strip()
    if not text:
        return None
    # Split into signed terms; +/- directly after ^ or * belongs to the term.
    pieces = re.split(r"(?<![\^*/e])\s*([+-])\s*", text)
    terms: list[tuple[str, str]] = []
    sign = "+"
    for piece in pieces:
        if piece in ("+", "-"):
            sign = piece
            continue
        if piece.strip():
            terms.append((sign, piece.strip()))
            sign = "+"
    if not terms:
        return None
    coeffs: dict[int, Fraction] = {}
    var_name = ""
    for sign, term in terms:
        m = _TERM.fullmatch(term)
        if not m or (m.group("coef") is None and m.group("var") is None):
            return None
        coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
        if m.group("sci"):
            coef *= Fraction(10) ** int(m.group("sci"))
        if sign == "-":
            coef = -coef
        if m.group("var"):
            if var_name and m.group("var") != var_name:
                return None
            var_name = m.group("var")
            degree = int(m.group("exp")) if m.group("exp") else 1
        else:
            degree = 0
        coeffs[degree] = coeffs.get(degree, Fraction(0)) + coef
    top = max(coeffs)
    if top > 64:
        return None
    return [coeffs.get(i, Fraction(0)) for i in range(top + 1)], var_name or "x"


class _ExprBuilder:
    """Builds CalcIR expression text with minimal parentheses."""

    _ADD, _MUL, _ATOM = 1, 2, 3

    def __init__(self, text: str, prec: Optional[int] = None):
        self.text = text
        self.prec = self._ATOM if prec is None else prec

    def apply(self, op: str, operand: str) -> "_ExprBuilder":
        if op in "*/":
            left = f"({self.text})" if self.prec < self._MUL else self.text
            return _ExprBuilder(f"{left}{op}{operand}", self._MUL)
        return _ExprBuilder(f"{self.text} {op} {operand}", self._ADD)


# ---------------------------------------------------------------------------
# Question families

_POLY_CHARS = r"[0-9a-zA-Z^*/. +\-]+?"


def _family_derivative(text: str) -> Optional[str]:
    m = re.search(
        rf"derivative of\s+(?P<poly>{_POLY_CHARS})"
        rf"(?:\s+at\s+(?P<pvar>[a-zA-Z])\s*=\s*(?P<point>-?\d+(?:\.\d+)?))?"
        rf"\s*(?:[?.!,;]|$)",
        text,
        re.IGNORECASE,
    )
    if not m:
        return None
    parsed = _parse_poly(m.group("poly"))
    if not parsed:
        return None
    coeffs, _ = parsed
    derived = [i * c for i, c in enumerate(coeffs)][1:] or [Fraction(0)]
    if m.group("point"):
        point = m.group("point")
        expr = _ExprBuilder(_frac_literal(derived[-1]))
        for c in reversed(derived[:-1]):
            expr = expr.apply("*", point).apply("+", _frac_literal(c))
        return f"result = {expr.text}"
    if len(derived) == 1:
        return f"result = {_frac_literal(derived[0])}"
    return "result = polyderiv([" + ", ".join(_frac_literal(c) for c in coeffs) + "])"


def _family_integral(text: str) -> Optional[str]:
    m = re.search(
        rf"(?:definite\s+)?integral of\s+(?P<poly>{_POLY_CHARS})"
        rf"(?:\s+with respect to\s+(?P<var>[a-zA-Z]))?"
        rf"\s+from\s+(?P<a>{_NUM})\s+to\s+(?P<b>{_NUM})",
        text,
        re.IGNORECASE,
    )
    if not m:
        return None
    parsed = _parse_poly(m.group("poly"))
    if not parsed:
        return None
    coeffs, _ = parsed
    a = _number_literal(m.group("a"))
    b = _number_literal(m.group("b"))
    if a is None or b is None:
        return None
    body = ", ".join(_frac_literal(c) for c in coeffs)
    return f"result = polyint([{body}], {a}, {b})"


def _family_sum_range(text: str) -> Optional[str]:
    m = re.search(
        rf"sum of\s+(?:all\s+)?(?:the\s+)?(?P<kind>even|odd)?\s*(?:whole\s+|natural\s+)?"
        rf"numbers?\s+(?:from|between)\s+(?P<a>{_NUM})\s+(?:to|and)\s+(?P<b>{_NUM})",
        text,
        re.IGNORECASE,
    )
    if not m:
        return None
    a_lit, b_lit = _number_literal(m.group("a")), _number_literal(m.group("b"))
    if a_lit is None or b_lit is None or "." in a_lit or "." in b_lit:
        return None
    a, b = int(a_lit), int(b_lit)
    if b - a > 10_000_000 or b < a:
        return None
    kind = (m.group("kind") or "").lower()
    step = 2 if kind in ("even", "odd") else 1
    first = a
    if kind == "even" and first % 2 != 0:
        first += 1
    if kind == "odd" and first % 2 == 0:
        first += 1
    if first > b:
        return "result = 0"
    last = first + ((b - first) // step) * step
    count = (last - first) // step + 1
    if count <= 64:
        return "result = " + " + ".join(str(v) for v in range(first, last + 1, step))
    # Long runs use the arithmetic-series form instead of a huge term chain.
    return f"result = {count}*({first} + {last})/2"


def _family_age_equation(text: str) -> Optional[str]:
    m = re.search(
        rf"(?P<x>[a-z]+)'s age is (?P<k>{_NUM}) times (?:the age of )?"
        rf"(?:his|her|their) (?P<y>[a-z]+),?\s*(?P<op>plus|minus) (?P<c>{_NUM})\.\s*"
        rf"(?:his|her|their) (?P=y) is (?P<v>{_NUM})\.?\s*how old is (?P=x)\b",
        text,
        re.IGNORECASE,
    )
    if not m:
        return None
    k = _number_literal(m.group("k"))
    c = _number_literal(m.group("c"))
    v = _number_literal(m.group("v"))
    if k is None or c is None or v is None:
        return None
    op = "+" if m.group("op").lower() == "plus" else "-"
    return f"result = {k}*{v} {op} {c}"


_OP_PATTERNS = [
    (re.compile(rf"multiplying (?:(?:a|the) number |it )?by ({_NUM})", re.I), "*"),
    (re.compile(rf"adding ({_NUM})", re.I), "+"),
    (re.compile(rf"subtracting ({_NUM})", re.I), "-"),
    (re.compile(rf"dividing (?:(?:it|that|the result) )?by ({_NUM})", re.I), "/"),
]


def _family_custom_operation(text: str) -> Optional[str]:
    m = re.search(
        rf"'(?P<name>\w+)'.*?by (?P<ops>(?:multiplying|adding|subtracting|dividing).*?)[.!]"
        rf".*?what(?:'s| is) the (?P=name) of (?P<x>{_NUM})",
        text,
        re.IGNORECASE | re.DOTALL,
    )
    if not m:
        return None
    x = _number_literal(m.group("x"))
    if x is None:
        return None
    steps: list[tuple[str, str]] = []
    for clause in re.split(r"\s+and\s+(?:then\s+)?", m.group("ops")):
        for pattern, op in _OP_PATTERNS:
            hit = pattern.search(clause)
            if hit:
                literal = _number_literal(hit.group(1))
                if literal is None:
                    return None
                steps.append((op, literal))
                break
        else:
            return None
    if not steps:
        return None
    expr = _ExprBuilder(x)
    for op, literal in steps:
        expr = expr.apply(op, literal)
    return f"result = {expr.text}"


def _family_conversion(text: str) -> Optional[str]:
    m = re.search(
        rf"needs? \$?(?P<amount>{_NUM}) (?P<target>[A-Z]{{2,5}})\b"
        rf".*?\bfrom (?P<src>[A-Z]{{2,5}})\b"
        rf".*?\bworth \$?(?P<rate>{_NUM}) (?P=target)\b"
        rf".*?\b[Hh]ow (?:much|many) (?P=src)\b",
        text,
        re.DOTALL,
    )
    if not m:
        return None
    amount = _number_literal(m.group("amount"))
    rate = _number_literal(m.group("rate"))
    if amount is None or rate is None:
        return None
    return f"result = {amount}/{rate}"


_MATRIX_LITERAL = r"\[\s*\[[-0-9.,\s]+\](?:\s*,\s*\[[-0-9.,\s]+\])*\s*\]"


def _family_determinant(text: str) -> Optional[str]:
    m = re.search(rf"matrix\s*(?P<m>{_MATRIX_LITERAL})", text, re.IGNORECASE | re.DOTALL)
    if not m:
        return None
    det_at = re.search(r"determinant", text, re.IGNORECASE)
    if not det_at:
        return None
    expr = _ExprBuilder(f"det({m.group('m')})")
    tail = text[det_at.end():]
    for hit in re.finditer(
        rf"(multiplied by|times|divided by|plus|minus) ({_NUM})", tail, re.IGNORECASE
    ):
        literal = _number_literal(hit.group(2))
        if literal is None:
            return None
        op = {"multiplied by": "*", "times": "*", "divided by": "/", "plus": "+", "minus": "-"}[
            hit.group(1).lower()
        ]
        expr = expr.apply(op, literal)
    return f"result = {expr.text}"


_FAMILIES: list[Callable[[str], Optional[str]]] = [
    _family_determinant,
    _family_integral,
    _family_derivative,
    _family_age_equation,
    _family_custom_operation,
    _family_conversion,
    _family_sum_range,
]


def _deterministic_source(question: str, result_var: str) -> str:
    text = " ".join(question.split())
    for family in _FAMILIES:
        source = family(text)
        if source is not None:
            if result_var != "result":
                source = re.sub(r"^result = ", f"{result_var} = ", source)
            return source
    raise NoMatch(f"no deterministic rule matches: {question[:80]!r}")


def generate_deterministic(q: NormalizedQuestion, result_var: str = "result") -> GeneratedProgram:
    """Compile a question to CalcIR via the fixed family grammar.

    Raises NoMatch when no family applies; the pipeline reports NULL then.
    """
    source = _deterministic_source(q.nl_text, result_var)
    return GeneratedProgram(
        dialect="calcir",
        source=source,
        result_var=result_var,
        backend_id="deterministic",
        prompt_hash=_sha256(q.nl_text),
    )


# ---------------------------------------------------------------------------
# Remote backend

def _remote_generate(prompt: FinetunedPrompt, cfg: BackendConfig) -> GeneratedProgram:
    api_key = os.environ.get(cfg.api_key_env, "")
    if not api_key:
        raise AuthMissing(f"no API key in environment variable {cfg.api_key_env}")
    rendered = render_prompt(prompt)
    messages = [{"role": "system", "content": rendered}]
    for _ in range(cfg.max_retries + 1):
        payload = {"model": cfg.model, "temperature": cfg.temperature, "messages": messages}
        try:
            resp = requests.post(
                cfg.endpoint,
                json=payload,
                timeout=cfg.timeout_s,
                headers={"Authorization": f"Bearer {api_key}"},
            )
        except requests.Timeout as exc:
            raise GenerationTimeout(f"no response within {cfg.timeout_s}s") from exc
        except requests.RequestException as exc:
            raise RemoteUnavailable(0, str(exc)) from exc
        if resp.status_code != 200:
            raise RemoteUnavailable(resp.status_code, resp.text[:200])
        try:
            content = resp.json()["choices"][0]["message"]["content"]
        except (ValueError, KeyError, IndexError, TypeError) as exc:
            raise RemoteUnavailable(resp.status_code, f"malformed response body: {exc}") from exc
        try:
            source = extract_code_block(content, dialect=prompt.dialect)
        except NoCodeBlock:
            messages.append({"role": "assistant", "content": content})
            messages.append({"role": "user", "content": _CORRECTIVE.format(var=prompt.result_var)})
            continue
        return GeneratedProgram(
            dialect=prompt.dialect,
            source=source,
            result_var=prompt.result_var,
            backend_id=f"remote:{cfg.model}",
            prompt_hash=_sha256(rendered),
        )
    raise NoCodeBlock(f"no code block after {cfg.max_retries} retries")


def generate(prompt: FinetunedPrompt, cfg: BackendConfig) -> GeneratedProgram:
    """Generate a program for a prompt with the configured backend."""
    if cfg.kind == "deterministic":
        source = _deterministic_source(prompt.question, prompt.result_var)
        return GeneratedProgram(
            dialect="calcir",
            source=source,
            result_var=prompt.result_var,
            backend_id="deterministic",
            prompt_hash=_sha256(render_prompt(prompt)),
        )
    return _remote_generate(prompt, cfg)
