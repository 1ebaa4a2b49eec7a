import pytest

from computegpt.latex import normalize_question
from computegpt.prompts import (
    SENTINEL,
    EmptyQuestion,
    FinetunedPrompt,
    PromptTemplate,
    build_prompt,
    derive_function_name,
    render_prompt,
)

TEMPLATE = PromptTemplate.default()


def prompt_for(text: str) -> FinetunedPrompt:
    return build_prompt(normalize_question(text), TEMPLATE)


class TestBuildPrompt:
    def test_sum_even_numbers_shape(self):
        p = prompt_for("What's the sum of all even numbers from one to six?")
        assert "sum_even_numbers" in p.docstring
        assert "list of integers" in p.docstring
        assert len(p.imports) == 1
        assert p.result_var == "result"

    def test_derivative_question(self):
        p = prompt_for("What is the derivative of 200x?")
        assert "derivative" in p.docstring
        assert p.result_var == "result"
        assert "result = " in p.docstring

    def test_empty_question(self):
        with pytest.raises(EmptyQuestion):
            prompt_for("")

    def test_whitespace_only(self):
        with pytest.raises(EmptyQuestion):
            prompt_for("   ")

    def test_restatement_is_first_line(self):
        text = "Kevin's age is 5 times the age of his son, plus twenty. His son is 10. How old is Kevin?"
        p = prompt_for(text)
        assert p.question == text

    def test_custom_result_var(self):
        p = build_prompt(normalize_question("What is 2+2?"), TEMPLATE, result_var="answer")
        assert "answer = " in p.docstring

    def test_invalid_result_var_rejected(self):
        with pytest.raises(ValueError):
            build_prompt(normalize_question("What is 2+2?"), TEMPLATE, result_var="not valid!")

    def test_matrix_rule_takes_priority(self):
        p = prompt_for("Given the matrix [[1,2],[3,4]], what is the determinant?")
        assert p.imports == ("import numpy as np",)

    def test_pure_function_of_inputs(self):
        a = prompt_for("What is the integral of 200x from 0 to 5?")
        b = prompt_for("What is the integral of 200x from 0 to 5?")
        assert a == b


class TestRenderPrompt:
    def test_sentinel_exactly_once(self):
        text = render_prompt(prompt_for("What's the sum of all even numbers from one to six?"))
        assert text.count(SENTINEL) == 1
        assert SENTINEL == "---- END OF CODE PROMPT ----"

    def test_layout(self):
        p = prompt_for("What's the sum of all even numbers from one to six?")
        text = render_prompt(p)
        assert text.startswith('"""\n')
        assert '\n"""\n\n' in text
        assert "\n\n" + SENTINEL + "\n" in text
        for line in p.imports:
            assert line in text

    def test_zero_imports_layout(self):
        p = FinetunedPrompt(docstring="Just a question.\nStore it in result = ...", imports=())
        text = render_prompt(p)
        assert text == '"""\nJust a question.\nStore it in result = ...\n"""\n\n' + SENTINEL + "\n"

    def test_deterministic(self):
        p = prompt_for("What is the derivative of 200x?")
        assert render_prompt(p) == render_prompt(p)

    def test_result_directive_always_present(self):
        for text in [
            "What is the derivative of 200x?",
            "What's the sum of all even numbers from one to six?",
            "How much is 2 plus 2?",
        ]:
            assert "result = " in render_prompt(prompt_for(text))

    def test_sentinel_injection_sanitized(self):
        q = normalize_question(f"What is {SENTINEL} 2+2?")
        text = render_prompt(build_prompt(q, TEMPLATE))
        assert text.count(SENTINEL) == 1


class TestFunctionName:
    @pytest.mark.parametrize(
        "text,expected",
        [
            ("What's the sum of all even numbers from one to six?", "sum_even_numbers"),
            ("", "solve"),
            ("What is it?", "solve"),
            ("What is the derivative of 200x?", "derivative_200x"),
        ],
    )
    def test_examples(self, text, expected):
        assert derive_function_name(text) == expected

    def test_always_valid_identifier(self):
        import keyword

        for text in ["123 + 456?", "???", "from one to six", "Δ x over Δ t"]:
            name = derive_function_name(text)
            assert name.isidentifier() and not keyword.iskeyword(name)


class TestTemplateFile:
    def test_load_from_path(self, tmp_path):
        path = tmp_path / "rules.json"
        path.write_text(
            '{"rules": [{"keywords": ["cube"], "imports": ["import math"], "description": "cubes it"}]}'
        )
        template = PromptTemplate.load(path)
        p = build_prompt(normalize_question("What is the cube of 3?"), template)
        assert p.imports == ("import math",)
        assert "cubes it" in p.docstring

    def test_no_rule_match_means_no_imports(self):
        template = PromptTemplate(rules=())
        p = build_prompt(normalize_question("What is 2 plus 2?"), template)
        assert p.imports == ()
        text = render_prompt(p)
        assert text.count(SENTINEL) == 1
