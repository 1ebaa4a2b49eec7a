"""Sandbox worker shim: run one py3 snippet, answer one wire-protocol line.

The policy layers restricted builtins, an import whitelist (math and array
libraries only), and a source screen that rejects underscore attribute access,
on top of the OS resource limits the supervisor sets. That blocks network,
subprocess, and filesystem access from generated numeric code; it is defense
in depth for untrusted-but-unprivileged snippets, not a substitute for
process-level isolation around a determined adversary.
"""

from __future__ import annotations

import ast
import io
import json
import sys
import traceback
from contextlib import redirect_stderr, redirect_stdout
from dataclasses import dataclass
from fractions import Fraction

__all__ = ["SandboxViolation", "WorkerPolicy", "run_request"]

DIALECT = "py3"


class SandboxViolation(RuntimeError):
    pass


_ALLOWED_MODULES = frozenset(
    {
        "array",
        "bisect",
        "cmath",
        "decimal",
        "fractions",
        "functools",
        "itertools",
        "math",
        "numbers",
        "numpy",
        "operator",
        "random",
        "statistics",
    }
)

_SAFE_BUILTIN_NAMES = (
    "abs", "all", "any", "bin", "bool", "bytearray", "bytes", "callable",
    "chr", "complex", "dict", "divmod", "enumerate", "filter", "float",
    "format", "frozenset", "hash", "hex", "int", "isinstance", "issubclass",
    "iter", "len", "list", "map", "max", "min", "next", "oct", "ord", "pow",
    "print", "range", "repr", "reversed", "round", "set", "slice", "sorted",
    "str", "sum", "tuple", "zip",
    "ArithmeticError", "AssertionError", "AttributeError", "Exception",
    "IndexError", "KeyError", "LookupError", "NameError", "OverflowError",
    "RuntimeError", "StopIteration", "TypeError", "ValueError",
    "ZeroDivisionError",
)

_DENIED_CAPABILITIES = (
    "open", "input", "eval", "exec", "compile", "getattr", "setattr",
    "delattr", "vars", "globals", "locals", "breakpoint", "exit", "quit",
    "help", "memoryview", "object", "super", "type", "id", "dir",
)


@dataclass(frozen=True)
class WorkerPolicy:
    allowed_modules: frozenset[str] = _ALLOWED_MODULES
    builtin_names: tuple[str, ...] = _SAFE_BUILTIN_NAMES
    denied_names: tuple[str, ...] = _DENIED_CAPABILITIES

    def guarded_import(self, name, globals=None, locals=None, fromlist=(), level=0):
        root = name.split(".")[0]
        if level != 0 or root not in self.allowed_modules:
            raise SandboxViolation(f"sandbox violation: module '{root}' is not allowed")
        # Transitive imports inside the allowed module resolve with the real
        # machinery; only the snippet's own import statements pass through here.
        return __import__(name, globals, locals, fromlist, level)

    def make_builtins(self) -> dict:
        import builtins as real

        safe = {name: getattr(real, name) for name in self.builtin_names}
        safe["__import__"] = self.guarded_import
        safe["True"], safe["False"], safe["None"] = True, False, None
        for name in self.denied_names:
            safe[name] = _denied(name)
        return safe

    def screen(self, source: str) -> ast.Module:
        """Reject imports outside the whitelist and underscore attribute access."""
        tree = ast.parse(source)
        for node in ast.walk(tree):
            if isinstance(node, ast.Import):
                for alias in node.names:
                    root = alias.name.split(".")[0]
                    if root not in self.allowed_modules:
                        raise SandboxViolation(f"sandbox violation: module '{root}' is not allowed")
            elif isinstance(node, ast.ImportFrom):
                root = (node.module or "").split(".")[0]
                if node.level != 0 or root not in self.allowed_modules:
                    raise SandboxViolation(f"sandbox violation: module '{root}' is not allowed")
            elif isinstance(node, ast.Attribute) and node.attr.startswith("_"):
                raise SandboxViolation(
                    f"sandbox violation: access to attribute '{node.attr}' is not allowed"
                )
            elif isinstance(node, ast.Name) and node.id == "__builtins__":
                raise SandboxViolation("sandbox violation: access to '__builtins__' is not allowed")
        return tree


def _denied(name: str):
    def guard(*args, **kwargs):
        raise SandboxViolation(f"sandbox violation: '{name}' is not allowed")

    return guard


# ---------------------------------------------------------------------------
# Native value -> tagged encoding

def _is_scalar_number(v) -> bool:
    # Runs on _to_plain output, so numpy scalars and Decimal are already gone.
    return isinstance(v, (int, float, Fraction)) and not isinstance(v, bool)


def _numpy_kind(v):
    np = sys.modules.get("numpy")
    if np is None:
        return None
    if isinstance(v, np.bool_):
        return "bool"
    if isinstance(v, np.integer):
        return "int"
    if isinstance(v, np.floating):
        return "float"
    if isinstance(v, np.ndarray):
        return "array"
    return None


def _to_plain(v):
    """Normalize numpy scalars/arrays and Decimal onto plain Python values."""
    kind = _numpy_kind(v)
    if kind == "bool":
        return bool(v)
    if kind == "int":
        return int(v)
    if kind == "float":
        return float(v)
    if kind == "array":
        return [_to_plain(x) for x in v.tolist()]
    try:
        import decimal

        if isinstance(v, decimal.Decimal):
            return Fraction(v)
    except (ImportError, ValueError):
        pass
    if isinstance(v, tuple):
        return [_to_plain(x) for x in v]
    if isinstance(v, list):
        return [_to_plain(x) for x in v]
    return v


def _is_matrix_shaped(v) -> bool:
    if not isinstance(v, list) or not v:
        return False
    if not all(isinstance(row, list) and row for row in v):
        return False
    width = len(v[0])
    if any(len(row) != width for row in v):
        return False
    return all(_is_scalar_number(x) for row in v for x in row)


def encode_tagged(v) -> dict:
    """Map a snippet's native result onto the shared tagged encoding."""
    v = _to_plain(v)
    if v is None:
        return {"type": "null"}
    if isinstance(v, bool):
        return {"type": "bool", "value": v}
    if isinstance(v, int):
        return {"type": "int", "value": str(v)}
    if isinstance(v, Fraction):
        if v.denominator == 1:
            return {"type": "int", "value": str(v.numerator)}
        return {"type": "rat", "num": str(v.numerator), "den": str(v.denominator)}
    if isinstance(v, float):
        return {"type": "float", "value": repr(v)}
    if isinstance(v, str):
        return {"type": "str", "value": v}
    if _is_matrix_shaped(v):
        return {"type": "matrix", "rows": [[encode_tagged(x) for x in row] for row in v]}
    if isinstance(v, list):
        return {"type": "list", "items": [encode_tagged(x) for x in v]}
    raise TypeError(f"result of type {type(v).__name__} has no tagged encoding")


# ---------------------------------------------------------------------------
# Request handling

def run_request(line: str, policy: WorkerPolicy | None = None) -> str:
    """Execute one wire-protocol request line; return the response line."""
    policy = policy or WorkerPolicy()
    try:
        request = json.loads(line)
        request_id = request.get("id") if isinstance(request, dict) else None
    except json.JSONDecodeError as exc:
        return json.dumps(
            {"id": None, "status": "error", "stdout": "", "stderr": f"malformed request: {exc}"}
        )
    if not isinstance(request, dict) or not isinstance(request.get("source"), str):
        return json.dumps(
            {"id": request_id, "status": "error", "stdout": "", "stderr": "malformed request: missing source"}
        )
    if request.get("dialect") != DIALECT:
        return json.dumps(
            {
                "id": request_id,
                "status": "error",
                "stdout": "",
                "stderr": f"dialect mismatch: this worker runs {DIALECT!r}",
            }
        )
    result_var = request.get("result_var") or "result"
    limits = request.get("limits") or {}
    cap = int(limits.get("stdout_cap_bytes", 65536))

    out_buffer = io.StringIO()
    err_buffer = io.StringIO()
    namespace = {"__builtins__": policy.make_builtins(), "__name__": "__main__"}
    status, value = "ok", None
    try:
        tree = policy.screen(request["source"])
        code = compile(tree, "<snippet>", "exec")
        with redirect_stdout(out_buffer), redirect_stderr(err_buffer):
            exec(code, namespace)  # noqa: S102 - the whole point, under policy
    except SandboxViolation as exc:
        status = "error"
        err_buffer.write(str(exc))
    except SyntaxError as exc:
        status = "error"
        err_buffer.write(f"syntax error: {exc}")
    except BaseException as exc:  # noqa: BLE001 - any snippet failure is an error outcome
        status = "error"
        err_buffer.write("".join(traceback.format_exception_only(type(exc), exc)).strip())

    response = {
        "id": request_id,
        "status": status,
        "stdout": out_buffer.getvalue()[:cap],
        "stderr": err_buffer.getvalue()[:cap],
    }
    if status == "ok":
        if result_var not in namespace:
            response["status"] = "no_result"
        else:
            try:
                response["value"] = encode_tagged(namespace[result_var])
            except TypeError as exc:
                response["status"] = "error"
                response["stderr"] = str(exc)
    return json.dumps(response, ensure_ascii=False)
