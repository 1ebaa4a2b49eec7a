"""Build the cleaned code prompt a generation backend receives.

A prompt is a triple-quoted docstring restating the problem and naming the
function to implement, followed by library imports chosen from data-driven
keyword rules, and a fixed sentinel line marking the end of the prompt.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from importlib import resources
from typing import Optional

from .latex import NormalizedQuestion

__all__ = [
    "EmptyQuestion",
    "FinetunedPrompt",
    "HintRule",
    "PromptTemplate",
    "SENTINEL",
    "build_prompt",
    "derive_function_name",
    "render_prompt",
]

SENTINEL = "---- END OF CODE PROMPT ----"

_STOPWORDS = {
    "a", "an", "all", "and", "any", "compute", "evaluate", "find", "for", "get",
    "given", "how", "is", "it", "me", "much", "many", "of", "old", "out", "per",
    "please", "s", "tell", "that", "the", "then", "this", "to", "what", "whats",
    "which", "work", "would", "you",
}
_BOUNDARY_WORDS = {"from", "in", "between", "where", "with", "when", "if", "on", "at", "by"}


class EmptyQuestion(ValueError):
    pass


@dataclass(frozen=True)
class FinetunedPrompt:
    docstring: str
    imports: tuple[str, ...]
    result_var: str = "result"
    sentinel: str = SENTINEL
    dialect: str = "py3"

    def __post_init__(self):
        if not self.docstring.strip():
            raise EmptyQuestion("prompt docstring must restate a non-empty problem")
        if not re.fullmatch(r"[A-Za-z_][A-Za-z0-9_]*", self.result_var):
            raise ValueError(f"result_var {self.result_var!r} is not a valid identifier")

    @property
    def question(self) -> str:
        """The restated problem (first docstring line)."""
        return self.docstring.splitlines()[0]


@dataclass(frozen=True)
class HintRule:
    keywords: tuple[str, ...]
    imports: tuple[str, ...]
    description: str

    def matches(self, text: str) -> bool:
        lowered = text.lower()
        return any(re.search(rf"\b{re.escape(k)}\b", lowered) for k in self.keywords)


@dataclass(frozen=True)
class PromptTemplate:
    """Priority-ordered library hint rules plus the function-name fallback."""

    rules: tuple[HintRule, ...] = ()
    fallback_name: str = "solve"

    @classmethod
    def load(cls, path) -> "PromptTemplate":
        with open(path, encoding="utf-8") as fh:
            raw = json.load(fh)
        return cls._from_dict(raw)

    @classmethod
    def default(cls) -> "PromptTemplate":
        raw = json.loads(resources.files("computegpt.data").joinpath("prompt_rules.json").read_text())
        return cls._from_dict(raw)

    @classmethod
    def _from_dict(cls, raw: dict) -> "PromptTemplate":
        rules = tuple(
            HintRule(tuple(r["keywords"]), tuple(r["imports"]), r["description"])
            for r in raw.get("rules", [])
        )
        return cls(rules=rules, fallback_name=raw.get("fallback_name", "solve"))

    def first_match(self, text: str) -> Optional[HintRule]:
        for rule in self.rules:
            if rule.matches(text):
                return rule
        return None


def derive_function_name(text: str, fallback: str = "solve") -> str:
    """Snake-case name from the main verb-object phrase of the question."""
    lowered = text.lower()
    lowered = re.sub(r"[^a-z0-9\s]", " ", lowered)
    words = lowered.split()
    picked: list[str] = []
    for word in words:
        if word in _BOUNDARY_WORDS and picked:
            break
        if word in _STOPWORDS or word.isdigit():
            continue
        picked.append(word)
        if len(picked) == 5:
            break
    name = "_".join(picked)
    name = re.sub(r"_+", "_", name).strip("_")
    if not name:
        return fallback
    if not name[0].isalpha():
        name = "compute_" + name
    return name[:48]


def build_prompt(
    q: NormalizedQuestion,
    template: PromptTemplate,
    result_var: str = "result",
    dialect: str = "py3",
) -> FinetunedPrompt:
    """Turn a normalized question into the docstring/imports/sentinel prompt."""
    problem = q.nl_text.strip()
    if not problem:
        raise EmptyQuestion("cannot build a prompt from an empty question")
    # Keep the restatement to a single line so it can be recovered verbatim.
    problem = " ".join(problem.split())
    if SENTINEL in problem:
        problem = problem.replace(SENTINEL, " ")

    fn_name = derive_function_name(problem, template.fallback_name)
    rule = template.first_match(problem)
    description = rule.description if rule else "solves the problem and returns the computed value"
    imports = rule.imports if rule else ()

    docstring = "\n".join(
        [
            problem,
            f"Implement a function called '{fn_name}' that {description}.",
            f"Store the final answer in a variable named '{result_var}' "
            f"(end with: {result_var} = ...).",
        ]
    )
    return FinetunedPrompt(docstring=docstring, imports=tuple(imports), result_var=result_var, dialect=dialect)


def render_prompt(p: FinetunedPrompt) -> str:
    """Deterministic prompt layout: docstring block, imports, sentinel line."""
    parts = ['"""\n' + p.docstring + '\n"""', ""]
    if p.imports:
        parts.extend(["\n".join(p.imports), ""])
    parts.append(p.sentinel)
    return "\n".join(parts) + "\n"
