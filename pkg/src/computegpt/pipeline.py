"""End-to-end flow: normalize -> build prompt -> generate -> execute -> compose."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Optional

from .answers import ChatAnswer, compose
from .codegen import (
    AuthMissing,
    BackendConfig,
    GeneratedProgram,
    GenerationTimeout,
    NoCodeBlock,
    NoMatch,
    RemoteUnavailable,
    generate,
)
from .executor import ExecutionOutcome, ResourceLimits, WorkerSupervisor, execute
from .latex import LatexError, normalize_question
from .prompts import EmptyQuestion, PromptTemplate, build_prompt

__all__ = ["AskResult", "BackendUnavailable", "Pipeline"]


class BackendUnavailable(RuntimeError):
    """Remote generation failed and no fallback was allowed."""


@dataclass(frozen=True)
class AskResult:
    answer: ChatAnswer
    program: Optional[GeneratedProgram]
    outcome: Optional[ExecutionOutcome]
    duration_ms: int


class Pipeline:
    """Holds the configured backend, template, limits, and worker pool."""

    def __init__(
        self,
        backend: Optional[BackendConfig] = None,
        template: Optional[PromptTemplate] = None,
        limits: Optional[ResourceLimits] = None,
        supervisor: Optional[WorkerSupervisor] = None,
        fallback_to_deterministic: bool = True,
        explain: bool = False,
    ):
        self.backend = backend or BackendConfig()
        self.template = template or PromptTemplate.default()
        self.limits = limits or ResourceLimits()
        self.supervisor = supervisor
        self.fallback_to_deterministic = fallback_to_deterministic
        self.explain = explain

    def ask(
        self,
        question: str,
        limits: Optional[ResourceLimits] = None,
        backend: Optional[BackendConfig] = None,
    ) -> AskResult:
        start = time.monotonic()
        limits = limits or self.limits
        backend = backend or self.backend

        def finish(answer: ChatAnswer, program=None, outcome=None) -> AskResult:
            return AskResult(answer, program, outcome, int((time.monotonic() - start) * 1000))

        try:
            normalized = normalize_question(question)
        except LatexError as exc:
            return finish(ChatAnswer("", "error", explanation=f"Could not parse the math in the question: {exc}"))

        prompt = build_prompt(normalized, self.template)  # EmptyQuestion propagates to callers

        try:
            program = generate(prompt, backend)
        except NoMatch:
            return finish(compose(None, ExecutionOutcome("no_result")), None, None)
        except (RemoteUnavailable, GenerationTimeout, NoCodeBlock, AuthMissing) as exc:
            if not (backend.kind == "remote" and self.fallback_to_deterministic):
                raise BackendUnavailable(str(exc)) from exc
            try:
                program = generate(prompt, BackendConfig(kind="deterministic"))
            except NoMatch:
                return finish(compose(None, ExecutionOutcome("no_result")), None, None)

        outcome = execute(program, limits, self.supervisor)
        answer = compose(program, outcome, limits, explain=self.explain)
        return finish(answer, program, outcome)
