"""HTTP surface for the pipeline: /v1/ask, /v1/execute, /healthz."""

from __future__ import annotations

import json
import threading
import time
from dataclasses import asdict
from typing import Optional

from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from .codegen import BackendConfig
from .executor import ResourceLimits, UnknownDialect, execute
from .pipeline import BackendUnavailable, Pipeline
from .prompts import EmptyQuestion

__all__ = ["AskRequest", "ExecuteRequest", "create_app"]

DEFAULT_MAX_SOURCE_BYTES = 1_000_000


class LimitsModel(BaseModel):
    wall_ms: Optional[int] = Field(default=None, gt=0)
    cpu_ms: Optional[int] = Field(default=None, gt=0)
    mem_bytes: Optional[int] = Field(default=None, gt=0)
    stdout_cap_bytes: Optional[int] = Field(default=None, gt=0)

    def merged_with(self, base: ResourceLimits) -> ResourceLimits:
        values = {k: v for k, v in self.model_dump().items() if v is not None}
        return ResourceLimits(**{**base.to_dict(), **values})


class AskRequest(BaseModel):
    question: str = ""
    backend: Optional[str] = None  # "deterministic" | "remote"
    limits: Optional[LimitsModel] = None


class ExecuteRequest(BaseModel):
    dialect: str
    source: str
    result_var: str = "result"
    limits: Optional[LimitsModel] = None


class _TranscriptLog:
    """Append-only JSONL log of question/answer pairs, opt-in."""

    def __init__(self, path):
        self.path = path
        self._lock = threading.Lock()

    def append(self, entry: dict) -> None:
        line = json.dumps(entry, ensure_ascii=False)
        with self._lock, open(self.path, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")


def create_app(
    pipeline: Optional[Pipeline] = None,
    max_source_bytes: int = DEFAULT_MAX_SOURCE_BYTES,
    transcript_path=None,
) -> FastAPI:
    pipeline = pipeline or Pipeline()
    transcript = _TranscriptLog(transcript_path) if transcript_path else None
    app = FastAPI(title="computegpt", version="0.1.0")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )

    @app.exception_handler(Exception)
    async def internal_error(request, exc):  # never leak sandbox internals
        return JSONResponse(status_code=500, content={"detail": "internal error"})

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/v1/ask")
    def ask(body: AskRequest):
        if not body.question.strip():
            raise HTTPException(status_code=400, detail="question must be non-empty")
        limits = body.limits.merged_with(pipeline.limits) if body.limits else None
        backend = None
        if body.backend is not None:
            if body.backend not in ("deterministic", "remote"):
                raise HTTPException(status_code=400, detail=f"unknown backend {body.backend!r}")
            if body.backend == pipeline.backend.kind:
                backend = pipeline.backend
            elif body.backend == "deterministic":
                backend = BackendConfig(kind="deterministic")
            else:
                backend = BackendConfig(
                    kind="remote",
                    endpoint=pipeline.backend.endpoint,
                    model=pipeline.backend.model,
                    api_key_env=pipeline.backend.api_key_env,
                )
        try:
            result = pipeline.ask(body.question, limits=limits, backend=backend)
        except EmptyQuestion:
            raise HTTPException(status_code=400, detail="question must be non-empty")
        except BackendUnavailable as exc:
            raise HTTPException(status_code=503, detail=str(exc))
        response = {
            "answer": asdict(result.answer),
            "code": result.answer.code,
            "status": result.answer.status,
            "timing_ms": result.duration_ms,
        }
        if transcript is not None:
            transcript.append(
                {
                    "ts": time.time(),
                    "question": body.question,
                    "status": result.answer.status,
                    "value_exact": result.answer.value_exact,
                    "value_decimal": result.answer.value_decimal,
                }
            )
        return response

    @app.post("/v1/execute")
    def run_source(body: ExecuteRequest):
        if len(body.source.encode("utf-8")) > max_source_bytes:
            raise HTTPException(status_code=413, detail=f"source exceeds {max_source_bytes} bytes")
        from .codegen import GeneratedProgram
        from .executor import encode_value

        limits = body.limits.merged_with(pipeline.limits) if body.limits else pipeline.limits
        try:
            prog = GeneratedProgram(
                dialect=body.dialect,
                source=body.source,
                result_var=body.result_var,
                backend_id="api",
                prompt_hash="",
            )
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        try:
            outcome = execute(prog, limits, pipeline.supervisor)
        except UnknownDialect as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        return {
            "status": outcome.status,
            "value": json.loads(encode_value(outcome.value)) if outcome.status == "ok" else None,
            "stdout": outcome.stdout,
            "stderr": outcome.stderr,
            "duration_ms": outcome.duration_ms,
            "worker_id": outcome.worker_id,
        }

    return app
