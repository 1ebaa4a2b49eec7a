"""Assemble the chat response: code, rendered value, optional explanation."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional

from . import calcir
from .calcir import Matrix, Value
from .codegen import GeneratedProgram
from .executor import ExecutionOutcome, ResourceLimits

__all__ = ["ChatAnswer", "compose", "parse_exact", "render_value"]

# Past this magnitude a 7-digit decimal preview of a rational would go through
# an inexact float conversion, so only the exact p/q form is shown.
_DECIMAL_PREVIEW_LIMIT = 2**53


@dataclass(frozen=True)
class ChatAnswer:
    code: str
    status: str  # mirrors ExecutionOutcome.status
    value_exact: Optional[str] = None
    value_decimal: Optional[str] = None
    explanation: Optional[str] = None


def _render_item(v: Value) -> str:
    if v is None:
        return "NULL"
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, Fraction):
        return f"{v.numerator}/{v.denominator}"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, Matrix):
        return "[" + ", ".join("[" + ", ".join(_render_item(x) for x in row) + "]" for row in v.rows) + "]"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_render_item(x) for x in v) + "]"
    return str(v)


def render_value(v: Value) -> tuple[Optional[str], Optional[str]]:
    """Render a Value as (exact, decimal) strings; either side may be absent.

    Integers are exact only. Rationals show p/q, plus a 7-significant-digit
    decimal when numerator and denominator fit in 2^53. Floats are decimal
    only (shortest round-trip form).
    """
    if v is None:
        return "NULL", None
    if isinstance(v, bool):
        return ("true" if v else "false"), None
    if isinstance(v, int):
        return str(v), None
    if isinstance(v, Fraction):
        exact = f"{v.numerator}/{v.denominator}"
        if abs(v.numerator) > _DECIMAL_PREVIEW_LIMIT or v.denominator > _DECIMAL_PREVIEW_LIMIT:
            return exact, None
        return exact, f"{float(v):.7g}"
    if isinstance(v, float):
        return None, repr(v)
    if isinstance(v, str):
        return v, None
    return _render_item(v), None


def parse_exact(text: str) -> Optional[Value]:
    """Parse a rendered exact value ('p/q', integer, or decimal) back to a number."""
    text = text.strip()
    if not text:
        return None
    try:
        if "/" in text:
            num, _, den = text.partition("/")
            return calcir.canonicalize(Fraction(int(num.strip()), int(den.strip())))
        if text.lower() in ("true", "false"):
            return text.lower() == "true"
        return calcir.canonicalize(Fraction(text))
    except (ValueError, ZeroDivisionError):
        return None


def _explain(prog: GeneratedProgram) -> Optional[str]:
    if prog.dialect != "calcir":
        return None
    try:
        program = calcir.parse_program(prog.source)
    except calcir.CalcError:
        return None
    lines = []
    for i, stmt in enumerate(program.statements, start=1):
        target = f"{stmt.target} = " if stmt.target else ""
        source_line = prog.source.splitlines()[stmt.pos[0] - 1].strip()
        lines.append(f"step {i}: compute {target.strip(' =') or 'expression'} as `{source_line}`")
    return "\n".join(lines) if lines else None


def compose(
    prog: Optional[GeneratedProgram],
    out: ExecutionOutcome,
    limits: Optional[ResourceLimits] = None,
    explain: bool = False,
) -> ChatAnswer:
    """Map an execution outcome onto a displayable answer. Never raises."""
    code = prog.source if prog is not None else ""
    if out.status == "ok":
        exact, decimal = render_value(out.value)
        explanation = _explain(prog) if (explain and prog is not None) else None
        return ChatAnswer(code, "ok", exact, decimal, explanation)
    if out.status == "no_result":
        return ChatAnswer(code, "no_result", value_exact="NULL")
    if out.status == "timeout":
        wall = f"{limits.wall_ms} ms" if limits is not None else f"about {out.duration_ms} ms"
        return ChatAnswer(code, "timeout", explanation=f"Execution timed out at the wall limit of {wall}.")
    if out.status == "limit":
        return ChatAnswer(code, "limit", explanation=f"Execution exceeded resource limits: {out.stderr[:200]}")
    return ChatAnswer(code, "error", explanation=f"Execution failed: {out.stderr[:300]}")
