"""Run generated programs in a closed environment and extract the result.

CalcIR programs evaluate in-process. Any other dialect is dispatched to a
single-use sandbox worker process over a line-delimited JSON protocol:

    request:  {"id", "dialect", "source", "result_var", "limits"}
    response: {"id", "status", "value"?, "stdout", "stderr"}

Values cross the wire as tagged JSON so integer magnitude is unbounded:
{"type":"int","value":"<decimal>"}, {"type":"rat","num":"...","den":"..."},
{"type":"float","value":"<shortest round-trip>"}, {"type":"bool"|"str", ...},
{"type":"list","items":[...]}, {"type":"matrix","rows":[[...]]}, {"type":"null"}.
"""

from __future__ import annotations

import itertools
import json
import os
import signal
import subprocess
import threading
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from . import calcir
from .calcir import Matrix, Value
from .codegen import GeneratedProgram

__all__ = [
    "DecodeError",
    "ExecutionOutcome",
    "ResourceLimits",
    "UnknownDialect",
    "WorkerCrashed",
    "WorkerSupervisor",
    "decode_value",
    "encode_value",
    "execute",
]


class UnknownDialect(ValueError):
    pass


class WorkerCrashed(RuntimeError):
    pass


class DecodeError(ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{message} (at {path})")
        self.path = path


@dataclass(frozen=True)
class ResourceLimits:
    wall_ms: int = 5000
    cpu_ms: int = 5000
    mem_bytes: int = 256 * 2**20
    stdout_cap_bytes: int = 64 * 2**10

    def __post_init__(self):
        for name in ("wall_ms", "cpu_ms", "mem_bytes", "stdout_cap_bytes"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    def to_dict(self) -> dict:
        return {
            "wall_ms": self.wall_ms,
            "cpu_ms": self.cpu_ms,
            "mem_bytes": self.mem_bytes,
            "stdout_cap_bytes": self.stdout_cap_bytes,
        }


@dataclass(frozen=True)
class ExecutionOutcome:
    status: str  # ok | timeout | error | no_result | limit
    value: Optional[Value] = None
    stdout: str = ""
    stderr: str = ""
    duration_ms: int = 0
    worker_id: str = "builtin"


# ---------------------------------------------------------------------------
# Tagged-JSON value encoding

def _encode(v: Value, path: str) -> dict:
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
    if isinstance(v, Matrix):
        return {
            "type": "matrix",
            "rows": [[_encode(x, f"{path}.rows[{i}][{j}]") for j, x in enumerate(row)]
                     for i, row in enumerate(v.rows)],
        }
    if isinstance(v, (list, tuple)):
        return {"type": "list", "items": [_encode(x, f"{path}[{i}]") for i, x in enumerate(v)]}
    raise TypeError(f"cannot encode {type(v).__name__} at {path}")


def encode_value(v: Value) -> str:
    """Serialize a Value as tagged JSON text (round-trips via decode_value)."""
    return json.dumps(_encode(v, "$"), ensure_ascii=False)


def _decode(obj, path: str) -> Value:
    if not isinstance(obj, dict) or "type" not in obj:
        raise DecodeError(path, "expected a tagged object with a 'type' field")
    kind = obj["type"]
    if kind == "null":
        return None
    if kind == "bool":
        if not isinstance(obj.get("value"), bool):
            raise DecodeError(path, "bool value must be true or false")
        return obj["value"]
    if kind == "int":
        raw = obj.get("value")
        if not isinstance(raw, str):
            raise DecodeError(path, "int value must be a decimal string")
        try:
            return int(raw)
        except ValueError:
            raise DecodeError(path, f"invalid integer literal {raw!r}")
    if kind == "rat":
        num, den = obj.get("num"), obj.get("den")
        if not isinstance(num, str) or not isinstance(den, str):
            raise DecodeError(path, "rat num/den must be decimal strings")
        try:
            numerator, denominator = int(num), int(den)
        except ValueError:
            raise DecodeError(path, "invalid rational literal")
        if denominator == 0:
            raise DecodeError(path, "rational denominator must be non-zero")
        return calcir.canonicalize(Fraction(numerator, denominator))
    if kind == "float":
        raw = obj.get("value")
        if isinstance(raw, (int, float)) and not isinstance(raw, bool):
            return float(raw)
        if isinstance(raw, str):
            try:
                return float(raw)
            except ValueError:
                raise DecodeError(path, f"invalid float literal {raw!r}")
        raise DecodeError(path, "float value must be a number or string")
    if kind == "str":
        if not isinstance(obj.get("value"), str):
            raise DecodeError(path, "str value must be a string")
        return obj["value"]
    if kind == "list":
        items = obj.get("items")
        if not isinstance(items, list):
            raise DecodeError(path, "list items must be an array")
        return [_decode(x, f"{path}[{i}]") for i, x in enumerate(items)]
    if kind == "matrix":
        rows = obj.get("rows")
        if not isinstance(rows, list) or not rows or not all(isinstance(r, list) for r in rows):
            raise DecodeError(path, "matrix rows must be a non-empty array of arrays")
        decoded = [
            tuple(_decode(x, f"{path}.rows[{i}][{j}]") for j, x in enumerate(row))
            for i, row in enumerate(rows)
        ]
        try:
            return Matrix(tuple(decoded))
        except calcir.TypeMismatch as exc:
            raise DecodeError(path, str(exc))
    raise DecodeError(path, f"unknown value type {kind!r}")


def decode_value(text: str) -> Value:
    """Parse tagged-JSON text back into a Value."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DecodeError("$", f"invalid JSON: {exc}")
    return _decode(obj, "$")


# ---------------------------------------------------------------------------
# In-process CalcIR execution

def _execute_calcir(prog: GeneratedProgram, limits: ResourceLimits) -> ExecutionOutcome:
    start = time.monotonic()

    def done(status: str, value: Value = None, stderr: str = "") -> ExecutionOutcome:
        return ExecutionOutcome(
            status=status,
            value=value,
            stderr=stderr[: limits.stdout_cap_bytes],
            duration_ms=int((time.monotonic() - start) * 1000),
            worker_id="builtin",
        )

    try:
        program = calcir.parse_program(prog.source)
    except calcir.CalcError as exc:
        return done("error", stderr=str(exc))
    try:
        env = calcir.evaluate(program, limits)
    except calcir.LimitExceeded as exc:
        return done("timeout" if exc.kind == "time" else "limit", stderr=str(exc))
    except calcir.CalcError as exc:
        return done("error", stderr=str(exc))
    if prog.result_var not in env:
        return done("no_result", stderr=f"program never assigned '{prog.result_var}'")
    return done("ok", value=env[prog.result_var])


# ---------------------------------------------------------------------------
# Worker pool

def _make_preexec(limits: ResourceLimits):
    def _apply():
        os.setsid()
        try:
            import resource

            cpu_s = max(1, (limits.cpu_ms + 999) // 1000)
            resource.setrlimit(resource.RLIMIT_CPU, (cpu_s, cpu_s + 1))
            resource.setrlimit(resource.RLIMIT_AS, (limits.mem_bytes, limits.mem_bytes))
            resource.setrlimit(resource.RLIMIT_CORE, (0, 0))
        except Exception:
            pass  # limits are best effort on platforms without resource

    return _apply


def _kill_group(proc: subprocess.Popen) -> None:
    try:
        os.killpg(os.getpgid(proc.pid), signal.SIGKILL)
    except (ProcessLookupError, PermissionError, OSError):
        try:
            proc.kill()
        except OSError:
            pass


class WorkerSupervisor:
    """Dispatches one request per single-use worker process.

    The pool bound caps concurrent workers; each request spawns a fresh
    process, so a crashing or killed worker never poisons later requests.
    """

    def __init__(self, worker_cmd: Sequence[str], dialect: str = "py3", pool_size: int = 4):
        if not worker_cmd:
            raise ValueError("worker_cmd must name an executable")
        self.worker_cmd = list(worker_cmd)
        self.dialect = dialect
        self.pool_size = pool_size
        self._slots = threading.BoundedSemaphore(pool_size)
        self._ids = itertools.count(1)

    def execute(self, prog: GeneratedProgram, limits: ResourceLimits) -> ExecutionOutcome:
        with self._slots:
            return self._run_once(prog, limits)

    def _run_once(self, prog: GeneratedProgram, limits: ResourceLimits) -> ExecutionOutcome:
        request_id = next(self._ids)
        worker_id = f"worker-{request_id}"
        request = {
            "id": request_id,
            "dialect": prog.dialect,
            "source": prog.source,
            "result_var": prog.result_var,
            "limits": limits.to_dict(),
        }
        start = time.monotonic()

        def done(status: str, value: Value = None, stdout: str = "", stderr: str = "") -> ExecutionOutcome:
            return ExecutionOutcome(
                status=status,
                value=value,
                stdout=stdout[: limits.stdout_cap_bytes],
                stderr=stderr[: limits.stdout_cap_bytes],
                duration_ms=int((time.monotonic() - start) * 1000),
                worker_id=worker_id,
            )

        try:
            proc = subprocess.Popen(
                self.worker_cmd,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                text=True,
                preexec_fn=_make_preexec(limits),
            )
        except OSError as exc:
            return done("error", stderr=f"failed to spawn worker: {exc}")
        try:
            out, err = proc.communicate(json.dumps(request) + "\n", timeout=limits.wall_ms / 1000.0)
        except subprocess.TimeoutExpired:
            _kill_group(proc)
            try:
                out, err = proc.communicate(timeout=0.4)
            except subprocess.TimeoutExpired:
                out, err = "", ""
            return done("timeout", stdout=out or "", stderr=f"killed after {limits.wall_ms} ms")

        line = (out or "").strip().splitlines()
        payload = line[-1] if line else ""
        if not payload:
            return done(
                "error",
                stderr=f"worker crashed with exit code {proc.returncode}: {(err or '')[:500]}",
            )
        try:
            response = json.loads(payload)
        except json.JSONDecodeError:
            return done("error", stderr=f"worker produced invalid response: {payload[:200]}")
        if not isinstance(response, dict) or response.get("id") != request_id:
            return done("error", stderr="worker response id mismatch")
        status = response.get("status")
        stdout = str(response.get("stdout", ""))
        stderr = str(response.get("stderr", ""))
        if status == "ok":
            raw = response.get("value")
            if raw is None:
                return done("error", stdout=stdout, stderr="ok response missing value")
            try:
                value = _decode(raw, "$") if not isinstance(raw, str) else decode_value(raw)
            except DecodeError as exc:
                return done("error", stdout=stdout, stderr=f"undecodable value: {exc}")
            return done("ok", value=value, stdout=stdout, stderr=stderr)
        if status in ("no_result", "error", "limit", "timeout"):
            return done(status, stdout=stdout, stderr=stderr)
        return done("error", stdout=stdout, stderr=f"unknown worker status {status!r}")


def execute(
    prog: GeneratedProgram,
    limits: Optional[ResourceLimits] = None,
    supervisor: Optional[WorkerSupervisor] = None,
) -> ExecutionOutcome:
    """Run a program under resource limits and extract its result variable.

    CalcIR runs in-process; other dialects need a configured WorkerSupervisor.
    Raises UnknownDialect for dialects nothing is configured to run.
    """
    limits = limits or ResourceLimits()
    if prog.dialect == "calcir":
        return _execute_calcir(prog, limits)
    if supervisor is not None and prog.dialect == supervisor.dialect:
        return supervisor.execute(prog, limits)
    raise UnknownDialect(f"no executor configured for dialect {prog.dialect!r}")
