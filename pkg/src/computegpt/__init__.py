"""Numerical question answering by generating, executing, and grading small programs."""

from .answers import ChatAnswer, compose, render_value
from .bench import BenchItem, BenchReport, grade_answer, load_dataset, run_benchmark
from .codegen import BackendConfig, GeneratedProgram, generate, generate_deterministic
from .executor import ExecutionOutcome, ResourceLimits, WorkerSupervisor, decode_value, encode_value, execute
from .latex import MathAst, NormalizedQuestion, ast_to_natural_language, normalize_question, parse_math
from .pipeline import AskResult, Pipeline
from .prompts import FinetunedPrompt, PromptTemplate, build_prompt, render_prompt

__version__ = "0.1.0"

__all__ = [
    "AskResult",
    "BackendConfig",
    "BenchItem",
    "BenchReport",
    "ChatAnswer",
    "ExecutionOutcome",
    "FinetunedPrompt",
    "GeneratedProgram",
    "MathAst",
    "NormalizedQuestion",
    "Pipeline",
    "PromptTemplate",
    "ResourceLimits",
    "WorkerSupervisor",
    "ast_to_natural_language",
    "build_prompt",
    "compose",
    "decode_value",
    "encode_value",
    "execute",
    "generate",
    "generate_deterministic",
    "grade_answer",
    "load_dataset",
    "normalize_question",
    "parse_math",
    "render_prompt",
    "render_value",
    "run_benchmark",
]
