"""Benchmark harness: load a dataset, run the pipeline, grade, and report.

Datasets are newline-delimited JSON with fields exactly
`id, category, question, question_latex?, expected:{kind, value, rel_tol?}`.
Expected kinds: "exact" (integer or p/q string), "decimal" (float with a
relative tolerance), "null" (the pipeline should answer NULL). Grading of
exact answers is pure rational arithmetic; no float path is involved.
"""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from importlib import resources
from typing import Optional

from .answers import ChatAnswer, parse_exact
from .pipeline import Pipeline

__all__ = [
    "BenchItem",
    "BenchReport",
    "Expected",
    "ItemVerdict",
    "SchemaError",
    "fixture_path",
    "grade_answer",
    "load_dataset",
    "run_benchmark",
]

CATEGORIES = ("word", "straightforward")
_CATEGORY_LABELS = {"word": "Word Problems", "straightforward": "Straightforward"}


class SchemaError(ValueError):
    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


@dataclass(frozen=True)
class Expected:
    kind: str  # exact | decimal | null
    value: Optional[str] = None  # exact string or decimal literal
    rel_tol: float = 1e-6


@dataclass(frozen=True)
class BenchItem:
    id: str
    category: str
    question: str
    expected: Expected
    question_latex: Optional[str] = None

    @property
    def pipeline_input(self) -> str:
        return self.question_latex if self.question_latex else self.question


@dataclass(frozen=True)
class ItemVerdict:
    item_id: str
    category: str
    correct: bool
    status: str
    value_exact: Optional[str]
    value_decimal: Optional[str]


@dataclass
class BenchReport:
    verdicts: list[ItemVerdict] = field(default_factory=list)

    def counts(self, category: Optional[str] = None) -> tuple[int, int]:
        rows = [v for v in self.verdicts if category is None or v.category == category]
        return sum(v.correct for v in rows), len(rows)

    def accuracy(self, category: Optional[str] = None) -> Optional[float]:
        correct, total = self.counts(category)
        return correct / total if total else None

    def render_table(self) -> str:
        def row(label: str, category: Optional[str]) -> str:
            correct, total = self.counts(category)
            accuracy = self.accuracy(category)
            shown = f"{100 * accuracy:.1f}%" if accuracy is not None else "—"
            return f"| {label:<16} | {correct:>7} | {total:>5} | {shown:>8} |"

        lines = [
            "| Category         | Correct | Total | Accuracy |",
            "|------------------|---------|-------|----------|",
            row("Overall", None),
            row("Word Problems", "word"),
            row("Straightforward", "straightforward"),
        ]
        return "\n".join(lines)

    def to_dict(self) -> dict:
        def cell(category: Optional[str]) -> dict:
            correct, total = self.counts(category)
            return {"correct": correct, "total": total, "accuracy": self.accuracy(category)}

        return {
            "overall": cell(None),
            "categories": {c: cell(c) for c in CATEGORIES},
            "items": [
                {
                    "id": v.item_id,
                    "category": v.category,
                    "correct": v.correct,
                    "status": v.status,
                    "value_exact": v.value_exact,
                    "value_decimal": v.value_decimal,
                }
                for v in self.verdicts
            ],
        }

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")


# ---------------------------------------------------------------------------
# Dataset loading

_ITEM_FIELDS = {"id", "category", "question", "question_latex", "expected"}
_EXPECTED_FIELDS = {"kind", "value", "rel_tol"}


def _parse_expected(raw, line: int) -> Expected:
    if not isinstance(raw, dict):
        raise SchemaError(line, "expected must be an object")
    unknown = set(raw) - _EXPECTED_FIELDS
    if unknown:
        raise SchemaError(line, f"unknown expected fields: {sorted(unknown)}")
    kind = raw.get("kind")
    if kind not in ("exact", "decimal", "null"):
        raise SchemaError(line, f"expected.kind must be exact|decimal|null, got {kind!r}")
    rel_tol = raw.get("rel_tol", 1e-6)
    if not isinstance(rel_tol, (int, float)) or rel_tol < 0:
        raise SchemaError(line, "rel_tol must be a non-negative number")
    if kind == "null":
        if "value" in raw:
            raise SchemaError(line, "null expectation carries no value")
        return Expected("null", None, float(rel_tol))
    value = raw.get("value")
    if kind == "exact":
        if not isinstance(value, str) or parse_exact(value) is None:
            raise SchemaError(line, f"exact value must be an integer or p/q string, got {value!r}")
        return Expected("exact", value, float(rel_tol))
    if not isinstance(value, (int, float)) or isinstance(value, bool):
        raise SchemaError(line, "decimal value must be a number")
    return Expected("decimal", repr(float(value)), float(rel_tol))


def load_dataset(path) -> list[BenchItem]:
    """Load and validate a JSONL dataset; unknown fields are rejected."""
    items: list[BenchItem] = []
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                raw = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SchemaError(line_no, f"invalid JSON: {exc}")
            if not isinstance(raw, dict):
                raise SchemaError(line_no, "item must be an object")
            unknown = set(raw) - _ITEM_FIELDS
            if unknown:
                raise SchemaError(line_no, f"unknown fields: {sorted(unknown)}")
            for required in ("id", "category", "question", "expected"):
                if required not in raw:
                    raise SchemaError(line_no, f"missing field {required!r}")
            if raw["category"] not in CATEGORIES:
                raise SchemaError(line_no, f"category must be one of {CATEGORIES}")
            if not isinstance(raw["question"], str) or not isinstance(raw["id"], str):
                raise SchemaError(line_no, "id and question must be strings")
            latex = raw.get("question_latex")
            if latex is not None and not isinstance(latex, str):
                raise SchemaError(line_no, "question_latex must be a string")
            items.append(
                BenchItem(
                    id=raw["id"],
                    category=raw["category"],
                    question=raw["question"],
                    expected=_parse_expected(raw["expected"], line_no),
                    question_latex=latex,
                )
            )
    return items


def fixture_path():
    """Path to the packaged 8-item fixture dataset."""
    return resources.files("computegpt.data").joinpath("fixture.jsonl")


# ---------------------------------------------------------------------------
# Grading

def _produced_number(produced: ChatAnswer) -> tuple[Optional[Fraction], bool]:
    """Parse the produced answer to an exact rational.

    Returns (value, from_exact_field); decimal strings parse to the exact
    rational they denote, so all comparisons stay in rational arithmetic.
    """
    if produced.value_exact is not None and produced.value_exact != "NULL":
        v = parse_exact(produced.value_exact)
        if isinstance(v, (int, Fraction)) and not isinstance(v, bool):
            return Fraction(v), True
    if produced.value_decimal is not None:
        try:
            return Fraction(produced.value_decimal), False
        except (ValueError, ZeroDivisionError):
            return None, False
    return None, False


def _within_rel_tol(produced: Fraction, expected: Fraction, rel_tol: float) -> bool:
    tolerance = Fraction(rel_tol)
    if expected == 0:
        return abs(produced) <= tolerance
    return abs(produced - expected) <= tolerance * abs(expected)


def grade_answer(produced: ChatAnswer, item: BenchItem) -> bool:
    """Grade one answer; unparseable output is simply wrong, never an error."""
    expected = item.expected
    is_null = produced.value_exact == "NULL"
    if expected.kind == "null":
        return is_null
    if is_null:
        return False
    value, from_exact = _produced_number(produced)
    if value is None:
        return False
    if expected.kind == "exact":
        target = parse_exact(expected.value)
        if target is None or isinstance(target, bool):
            return False
        target = Fraction(target)
        if from_exact:
            return value == target
        return _within_rel_tol(value, target, expected.rel_tol)
    target = Fraction(expected.value)
    return _within_rel_tol(value, target, expected.rel_tol)


# ---------------------------------------------------------------------------
# Running

def run_benchmark(
    items: list[BenchItem],
    pipeline: Pipeline,
    backend=None,
    parallelism: int = 4,
    report_path=None,
) -> BenchReport:
    """Run every item through the pipeline and aggregate per-category accuracy.

    Item failures never abort the run; they grade as incorrect verdicts.
    """

    def run_item(item: BenchItem) -> ItemVerdict:
        try:
            result = pipeline.ask(item.pipeline_input, backend=backend)
            answer = result.answer
            correct = grade_answer(answer, item)
            return ItemVerdict(
                item.id, item.category, correct, answer.status, answer.value_exact, answer.value_decimal
            )
        except Exception as exc:  # noqa: BLE001 - per-item isolation is the contract
            return ItemVerdict(item.id, item.category, False, f"error: {exc}", None, None)

    verdicts: list[ItemVerdict]
    if not items:
        verdicts = []
    elif parallelism <= 1 or len(items) == 1:
        verdicts = [run_item(item) for item in items]
    else:
        with ThreadPoolExecutor(max_workers=min(parallelism, len(items))) as pool:
            verdicts = list(pool.map(run_item, items))

    report = BenchReport(sorted(verdicts, key=lambda v: v.item_id))
    if report_path is not None:
        report.write(report_path)
    return report
