"""Command-line interface: ask a question, run the benchmark, or serve HTTP."""

from __future__ import annotations

import argparse
import json
import os
import shlex
import sys
from typing import Optional

from .bench import fixture_path, load_dataset, run_benchmark
from .codegen import BackendConfig
from .executor import ResourceLimits, WorkerSupervisor
from .pipeline import BackendUnavailable, Pipeline
from .prompts import EmptyQuestion, PromptTemplate


def _add_common_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--backend", choices=["deterministic", "remote"], default=None)
    parser.add_argument("--endpoint", default=None, help="remote chat-completion URL")
    parser.add_argument("--model", default=None, help="remote model name")
    parser.add_argument("--timeout-ms", type=int, default=None, help="execution wall limit")
    parser.add_argument("--worker-cmd", default=None, help="sandbox worker command for non-CalcIR dialects")
    parser.add_argument("--template", default=None, help="prompt rules file (JSON)")
    parser.add_argument("--config", default=None, help="JSON config file")


def _load_config(path: Optional[str]) -> dict:
    if not path:
        return {}
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)


def _setting(args, config: dict, flag: str, env: str, default=None):
    value = getattr(args, flag, None)
    if value is not None:
        return value
    if os.environ.get(env):
        return os.environ[env]
    return config.get(flag, default)


def build_pipeline(args) -> Pipeline:
    config = _load_config(args.config)
    kind = _setting(args, config, "backend", "COMPUTEGPT_BACKEND", "deterministic")
    backend_kwargs = {"kind": kind}
    endpoint = _setting(args, config, "endpoint", "COMPUTEGPT_ENDPOINT")
    if endpoint:
        backend_kwargs["endpoint"] = endpoint
    model = _setting(args, config, "model", "COMPUTEGPT_MODEL")
    if model:
        backend_kwargs["model"] = model
    backend = BackendConfig(**backend_kwargs)

    limits_kwargs = dict(config.get("limits", {}))
    timeout_ms = _setting(args, config, "timeout_ms", "COMPUTEGPT_TIMEOUT_MS")
    if timeout_ms:
        limits_kwargs["wall_ms"] = int(timeout_ms)
        limits_kwargs.setdefault("cpu_ms", int(timeout_ms))
    limits = ResourceLimits(**limits_kwargs)

    supervisor = None
    worker_cmd = _setting(args, config, "worker_cmd", "COMPUTEGPT_WORKER_CMD")
    if worker_cmd:
        cmd = shlex.split(worker_cmd) if isinstance(worker_cmd, str) else list(worker_cmd)
        supervisor = WorkerSupervisor(cmd, dialect=config.get("worker_dialect", "py3"))

    template = PromptTemplate.load(args.template) if args.template else PromptTemplate.default()
    return Pipeline(backend=backend, template=template, limits=limits, supervisor=supervisor)


def cmd_ask(args) -> int:
    pipeline = build_pipeline(args)
    pipeline.explain = args.explain
    try:
        result = pipeline.ask(args.question)
    except EmptyQuestion:
        print("error: question must be non-empty", file=sys.stderr)
        return 2
    except BackendUnavailable as exc:
        print(f"error: backend unavailable: {exc}", file=sys.stderr)
        return 3
    answer = result.answer
    if answer.code:
        print(answer.code)
        print()
    if answer.value_exact and answer.value_decimal:
        print(f"= {answer.value_exact} ({answer.value_decimal})")
    elif answer.value_exact or answer.value_decimal:
        print(f"= {answer.value_exact or answer.value_decimal}")
    if answer.explanation:
        print(answer.explanation)
    if answer.status not in ("ok", "no_result"):
        print(f"[{answer.status}]", file=sys.stderr)
        return 1
    return 0


def cmd_bench(args) -> int:
    pipeline = build_pipeline(args)
    dataset = args.dataset or fixture_path()
    items = load_dataset(dataset)
    report = run_benchmark(items, pipeline, parallelism=args.parallelism, report_path=args.report)
    print(report.render_table())
    if args.report:
        print(f"\nreport written to {args.report}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    pipeline = build_pipeline(args)
    app = create_app(pipeline, transcript_path=args.transcript)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="computegpt", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    ask = sub.add_parser("ask", help="answer one question")
    ask.add_argument("question")
    ask.add_argument("--explain", action="store_true", help="add a step-by-step template explanation")
    _add_common_flags(ask)
    ask.set_defaults(func=cmd_ask)

    bench = sub.add_parser("bench", help="run a benchmark dataset")
    bench.add_argument("dataset", nargs="?", default=None, help="JSONL dataset (default: packaged fixture)")
    bench.add_argument("--report", default=None, help="write a JSON report here")
    bench.add_argument("--parallelism", type=int, default=4)
    _add_common_flags(bench)
    bench.set_defaults(func=cmd_bench)

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--transcript", default=None, help="append question/answer JSONL here")
    _add_common_flags(serve)
    serve.set_defaults(func=cmd_serve)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
