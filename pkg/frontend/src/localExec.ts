// In-browser execution: run a py3 snippet in a WASM Python runtime under the
// same policy and value mapping as the server-side sandbox worker, so both
// modes produce identical tagged values (pinned by the golden corpus).

import { asTaggedValue, type TaggedValue } from "./values.js";

export interface PythonRuntime {
  /** Run a Python program whose final expression is a JSON string. */
  runJson(program: string): Promise<string>;
}

export interface LocalOutcome {
  status: string; // ok | no_result | error | timeout
  value: TaggedValue | null;
  stdout: string;
  stderr: string;
  duration_ms: number;
  worker_id: string;
}

// Mirrors the sandbox worker: restricted builtins, import whitelist, source
// screen, tagged value mapping. Parity is enforced by tests, not by sharing
// code, since this copy must travel to the browser.
const RUNNER_PROGRAM = `
def __cg_run(source, result_var, cap):
    import ast, io, json, traceback
    from contextlib import redirect_stdout, redirect_stderr
    from fractions import Fraction

    ALLOWED = {"array", "bisect", "cmath", "decimal", "fractions", "functools",
               "itertools", "math", "numbers", "numpy", "operator", "random",
               "statistics"}
    SAFE = ("abs", "all", "any", "bin", "bool", "bytearray", "bytes", "callable",
            "chr", "complex", "dict", "divmod", "enumerate", "filter", "float",
            "format", "frozenset", "hash", "hex", "int", "isinstance",
            "issubclass", "iter", "len", "list", "map", "max", "min", "next",
            "oct", "ord", "pow", "print", "range", "repr", "reversed", "round",
            "set", "slice", "sorted", "str", "sum", "tuple", "zip",
            "ArithmeticError", "AssertionError", "AttributeError", "Exception",
            "IndexError", "KeyError", "LookupError", "NameError",
            "OverflowError", "RuntimeError", "StopIteration", "TypeError",
            "ValueError", "ZeroDivisionError")
    DENIED = ("open", "input", "eval", "exec", "compile", "getattr", "setattr",
              "delattr", "vars", "globals", "locals", "breakpoint", "exit",
              "quit", "help", "memoryview", "object", "super", "type", "id",
              "dir")

    class SandboxViolation(RuntimeError):
        pass

    def screen(text):
        tree = ast.parse(text)
        for node in ast.walk(tree):
            if isinstance(node, ast.Import):
                for alias in node.names:
                    if alias.name.split(".")[0] not in ALLOWED:
                        raise SandboxViolation(
                            "sandbox violation: module '%s' is not allowed"
                            % alias.name.split(".")[0])
            elif isinstance(node, ast.ImportFrom):
                root = (node.module or "").split(".")[0]
                if node.level != 0 or root not in ALLOWED:
                    raise SandboxViolation(
                        "sandbox violation: module '%s' is not allowed" % root)
            elif isinstance(node, ast.Attribute) and node.attr.startswith("_"):
                raise SandboxViolation(
                    "sandbox violation: access to attribute '%s' is not allowed"
                    % node.attr)
            elif isinstance(node, ast.Name) and node.id == "__builtins__":
                raise SandboxViolation(
                    "sandbox violation: access to '__builtins__' is not allowed")
        return tree

    def guarded_import(name, globals=None, locals=None, fromlist=(), level=0):
        root = name.split(".")[0]
        if level != 0 or root not in ALLOWED:
            raise SandboxViolation(
                "sandbox violation: module '%s' is not allowed" % root)
        return __import__(name, globals, locals, fromlist, level)

    def denied(name):
        def guard(*args, **kwargs):
            raise SandboxViolation("sandbox violation: '%s' is not allowed" % name)
        return guard

    import builtins as real
    safe = {name: getattr(real, name) for name in SAFE}
    safe["__import__"] = guarded_import
    for name in DENIED:
        safe[name] = denied(name)

    def to_plain(v):
        import sys
        np = sys.modules.get("numpy")
        if np is not None:
            if isinstance(v, np.bool_):
                return bool(v)
            if isinstance(v, np.integer):
                return int(v)
            if isinstance(v, np.floating):
                return float(v)
            if isinstance(v, np.ndarray):
                return [to_plain(x) for x in v.tolist()]
        import decimal
        if isinstance(v, decimal.Decimal):
            return Fraction(v)
        if isinstance(v, (list, tuple)):
            return [to_plain(x) for x in v]
        return v

    def is_scalar(v):
        return isinstance(v, (int, float, Fraction)) and not isinstance(v, bool)

    def is_matrix(v):
        if not isinstance(v, list) or not v:
            return False
        if not all(isinstance(r, list) and r for r in v):
            return False
        width = len(v[0])
        if any(len(r) != width for r in v):
            return False
        return all(is_scalar(x) for r in v for x in r)

    def tag(v):
        v = to_plain(v)
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
        if is_matrix(v):
            return {"type": "matrix", "rows": [[tag(x) for x in r] for r in v]}
        if isinstance(v, list):
            return {"type": "list", "items": [tag(x) for x in v]}
        raise TypeError("result of type %s has no tagged encoding" % type(v).__name__)

    out, err = io.StringIO(), io.StringIO()
    namespace = {"__builtins__": safe, "__name__": "__main__"}
    status = "ok"
    try:
        code = compile(screen(source), "<snippet>", "exec")
        with redirect_stdout(out), redirect_stderr(err):
            exec(code, namespace)
    except SandboxViolation as exc:
        status = "error"
        err.write(str(exc))
    except SyntaxError as exc:
        status = "error"
        err.write("syntax error: %s" % exc)
    except BaseException as exc:
        status = "error"
        err.write("".join(traceback.format_exception_only(type(exc), exc)).strip())

    response = {"status": status, "stdout": out.getvalue()[:cap],
                "stderr": err.getvalue()[:cap]}
    if status == "ok":
        if result_var not in namespace:
            response["status"] = "no_result"
        else:
            try:
                response["value"] = tag(namespace[result_var])
            except TypeError as exc:
                response["status"] = "error"
                response["stderr"] = str(exc)
    return json.dumps(response)


__cg_run(__CG_SOURCE__, __CG_RESULT_VAR__, __CG_CAP__)
`;

export function buildRunnerProgram(source: string, resultVar: string, stdoutCap = 65536): string {
  return RUNNER_PROGRAM.replace("__CG_SOURCE__", JSON.stringify(source))
    .replace("__CG_RESULT_VAR__", JSON.stringify(resultVar))
    .replace("__CG_CAP__", String(stdoutCap));
}

/** Run a snippet in the page's Python runtime with a wall timer. */
export async function executeInBrowser(
  source: string,
  dialect: string,
  resultVar: string,
  runtime: PythonRuntime,
  wallMs = 20000,
): Promise<LocalOutcome> {
  const started = Date.now();
  const base = { stdout: "", stderr: "", worker_id: "browser" };
  if (dialect !== "py3") {
    return {
      ...base,
      status: "error",
      value: null,
      stderr: `the browser runtime cannot run dialect '${dialect}'`,
      duration_ms: Date.now() - started,
    };
  }
  let timer: ReturnType<typeof setTimeout> | undefined;
  const timedOut = new Promise<"timeout">((resolve) => {
    timer = setTimeout(() => resolve("timeout"), wallMs);
  });
  try {
    const raced = await Promise.race([runtime.runJson(buildRunnerProgram(source, resultVar)), timedOut]);
    if (raced === "timeout") {
      return {
        ...base,
        status: "timeout",
        value: null,
        stderr: `execution exceeded the ${wallMs} ms wall limit`,
        duration_ms: Date.now() - started,
      };
    }
    const parsed = JSON.parse(raced) as Record<string, unknown>;
    return {
      status: String(parsed.status),
      value: parsed.value == null ? null : asTaggedValue(parsed.value),
      stdout: String(parsed.stdout ?? ""),
      stderr: String(parsed.stderr ?? ""),
      duration_ms: Date.now() - started,
      worker_id: "browser",
    };
  } catch (error) {
    return {
      ...base,
      status: "error",
      value: null,
      stderr: error instanceof Error ? error.message : String(error),
      duration_ms: Date.now() - started,
    };
  } finally {
    if (timer !== undefined) clearTimeout(timer);
  }
}
