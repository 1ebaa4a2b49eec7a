import json
import threading
from fractions import Fraction
from http.server import BaseHTTPRequestHandler, HTTPServer

import pytest

from computegpt import calcir
from computegpt.codegen import (
    AuthMissing,
    BackendConfig,
    GeneratedProgram,
    NoCodeBlock,
    NoMatch,
    RemoteUnavailable,
    extract_code_block,
    generate,
    generate_deterministic,
)
from computegpt.latex import normalize_question
from computegpt.prompts import PromptTemplate, build_prompt

TEMPLATE = PromptTemplate.default()


def det_source(text: str) -> str:
    return generate_deterministic(normalize_question(text)).source


def det_value(text: str):
    source = det_source(text)
    return calcir.evaluate(calcir.parse_program(source)).get("result")


class TestDeterministicFamilies:
    def test_kevin_exact_source(self):
        assert det_source(
            "Kevin's age is 5 times the age of his son, plus twenty. "
            "His son is 10. How old is Kevin?"
        ) == "result = 5*10 + 20"

    def test_kevin_value(self):
        assert det_value(
            "Kevin's age is 5 times the age of his son, plus twenty. "
            "His son is 10. How old is Kevin?"
        ) == 70

    def test_ant_trick_question_no_match(self):
        with pytest.raises(NoMatch):
            det_source(
                "An ant travels at 3 m/s on a rubber band. The rubber band is "
                "stretched at 2 m/s. How fast is the ant moving relative to the ground?"
            )

    def test_rendered_definite_integral(self):
        value = det_value("the definite integral of 200*x with respect to x from 0 to 5")
        assert value == 2500

    def test_plain_integral_question(self):
        assert det_value("What is the integral of 200x from 0 to 5?") == 2500

    def test_big_latex_integral_end_to_end(self):
        q = normalize_question(r"\displaystyle\int_{-20}^{50} 2\times10^{21}x^3 + 200x^2 \, dx")
        prog = generate_deterministic(q)
        env = calcir.evaluate(calcir.parse_program(prog.source))
        assert env["result"] == Fraction(9135000000000000000026600000, 3)

    def test_derivative_constant_answer(self):
        assert det_source("What is the derivative of 200x?") == "result = 200"

    def test_derivative_nonconstant_answer(self):
        value = det_value("What is the derivative of x^2?")
        assert value == [0, 2]

    def test_derivative_at_point(self):
        assert det_value("What is the derivative of x^2 at x = 3?") == 6

    def test_jamulti(self):
        value = det_value(
            "A new technique, called 'jamulti' is invented by multiplying a number "
            "by five and then adding 2 and dividing by 3. What's the jamulti of 7?"
        )
        assert value == Fraction(37, 3)

    def test_alien_conversion(self):
        value = det_value(
            "An alien needs $50 USD to buy a spaceship. He needs to convert from ASD, "
            "which is worth $1.352 USD. How much ASD does he need?"
        )
        assert value == pytest.approx(36.9822485, rel=1e-6)

    def test_sum_of_evens(self):
        assert det_source("What's the sum of all even numbers from one to six?") == "result = 2 + 4 + 6"

    def test_sum_of_odds(self):
        assert det_value("What is the sum of odd numbers from 1 to 9?") == 25

    def test_determinant_with_post_operations(self):
        value = det_value(
            "Given the matrix [[1, 2, 9, 3, 3], [9, 0, 1, 2, 4], [0, 0, 0, 3, 9], "
            "[1, 1, 1, 1, 1], [3, 4484, 456, 9, 6]], what is the determinant "
            "multiplied by 5 and then divided by twenty-three?"
        )
        assert value == Fraction(-6574140, 23)

    def test_plain_determinant(self):
        assert det_value("Given the matrix [[1, 2], [3, 4]], what is the determinant?") == -2

    def test_deterministic_is_hash_stable(self):
        text = "What is the integral of 200x from 0 to 5?"
        a = generate_deterministic(normalize_question(text))
        b = generate_deterministic(normalize_question(text))
        assert a == b

    def test_assigns_result_var_once(self):
        for text in [
            "What is the derivative of 200x?",
            "What's the sum of all even numbers from one to six?",
            "Kevin's age is 5 times the age of his son, plus twenty. His son is 10. How old is Kevin?",
        ]:
            source = det_source(text)
            program = calcir.parse_program(source)
            targets = [s.target for s in program.statements if s.target == "result"]
            assert targets == ["result"]

    def test_custom_result_var(self):
        prog = generate_deterministic(
            normalize_question("What is the derivative of 200x?"), result_var="answer"
        )
        assert prog.source.startswith("answer = ")
        assert prog.result_var == "answer"


class TestExtractCodeBlock:
    def test_plain_fence(self):
        assert extract_code_block("```\nresult = 1\n```") == "result = 1"

    def test_fence_with_language_and_prose(self):
        assert extract_code_block("Here you go:\n```py\nresult = 2+2\n```\nEnjoy!") == "result = 2+2"

    def test_refusal_raises(self):
        with pytest.raises(NoCodeBlock):
            extract_code_block("I cannot help with that.")

    def test_unfenced_code(self):
        assert extract_code_block("result = 40 + 2") == "result = 40 + 2"

    def test_unfenced_with_leading_prose(self):
        text = "Sure thing, here it is!\nresult = 40 + 2\nresult = result"
        assert extract_code_block(text) == "result = 40 + 2\nresult = result"

    def test_echoed_prompt_stripped(self):
        from computegpt.prompts import SENTINEL

        text = f'"""\nquestion\n"""\n\n{SENTINEL}\n```\nresult = 7\n```'
        assert extract_code_block(text) == "result = 7"

    def test_calcir_dialect(self):
        assert extract_code_block("result = polyint([0, 200], 0, 5)", dialect="calcir") \
            == "result = polyint([0, 200], 0, 5)"

    def test_empty_input(self):
        with pytest.raises(NoCodeBlock):
            extract_code_block("")


class _FakeChatHandler(BaseHTTPRequestHandler):
    responses: list = []
    requests_seen: list = []

    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        body = json.loads(self.rfile.read(length))
        type(self).requests_seen.append(body)
        status, content = self.responses[min(len(self.requests_seen) - 1, len(self.responses) - 1)]
        payload = json.dumps({"choices": [{"message": {"role": "assistant", "content": content}}]})
        self.send_response(status)
        self.send_header("Content-Type", "application/json")
        self.end_headers()
        self.wfile.write(payload.encode() if status == 200 else b"error")

    def log_message(self, *args):
        pass


@pytest.fixture
def fake_server():
    server = HTTPServer(("127.0.0.1", 0), _FakeChatHandler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    _FakeChatHandler.responses = []
    _FakeChatHandler.requests_seen = []
    yield f"http://127.0.0.1:{server.server_address[1]}/v1/chat/completions"
    server.shutdown()


@pytest.fixture
def prompt():
    return build_prompt(normalize_question("What is 2 + 2?"), TEMPLATE)


def remote_cfg(endpoint: str, **kw) -> BackendConfig:
    return BackendConfig(kind="remote", endpoint=endpoint, **kw)


class TestRemoteBackend:
    def test_missing_api_key(self, fake_server, prompt, monkeypatch):
        monkeypatch.delenv("COMPUTEGPT_API_KEY", raising=False)
        with pytest.raises(AuthMissing):
            generate(prompt, remote_cfg(fake_server))

    def test_successful_generation(self, fake_server, prompt, monkeypatch):
        monkeypatch.setenv("COMPUTEGPT_API_KEY", "test-key")
        _FakeChatHandler.responses = [(200, "```py\nresult = 2 + 2\n```")]
        prog = generate(prompt, remote_cfg(fake_server))
        assert prog.source == "result = 2 + 2"
        assert prog.dialect == "py3"
        assert prog.backend_id.startswith("remote:")
        assert len(prog.prompt_hash) == 64

    def test_retry_then_success(self, fake_server, prompt, monkeypatch):
        monkeypatch.setenv("COMPUTEGPT_API_KEY", "test-key")
        _FakeChatHandler.responses = [
            (200, "I will not produce code today."),
            (200, "```\nresult = 4\n```"),
        ]
        prog = generate(prompt, remote_cfg(fake_server))
        assert prog.source == "result = 4"
        assert len(_FakeChatHandler.requests_seen) == 2
        retry_messages = _FakeChatHandler.requests_seen[1]["messages"]
        assert "Return only code" in retry_messages[-1]["content"]

    def test_no_code_after_retries(self, fake_server, prompt, monkeypatch):
        monkeypatch.setenv("COMPUTEGPT_API_KEY", "test-key")
        _FakeChatHandler.responses = [(200, "Nope."), (200, "Still nope.")]
        with pytest.raises(NoCodeBlock):
            generate(prompt, remote_cfg(fake_server, max_retries=1))
        assert len(_FakeChatHandler.requests_seen) == 2

    def test_server_error(self, fake_server, prompt, monkeypatch):
        monkeypatch.setenv("COMPUTEGPT_API_KEY", "test-key")
        _FakeChatHandler.responses = [(503, "")]
        with pytest.raises(RemoteUnavailable) as exc:
            generate(prompt, remote_cfg(fake_server))
        assert exc.value.status == 503

    def test_unreachable_endpoint(self, prompt, monkeypatch):
        monkeypatch.setenv("COMPUTEGPT_API_KEY", "test-key")
        with pytest.raises(RemoteUnavailable):
            generate(prompt, remote_cfg("http://127.0.0.1:1/nope", timeout_s=2))

    def test_temperature_zero_sent(self, fake_server, prompt, monkeypatch):
        monkeypatch.setenv("COMPUTEGPT_API_KEY", "test-key")
        _FakeChatHandler.responses = [(200, "```\nresult = 1\n```")]
        generate(prompt, remote_cfg(fake_server))
        assert _FakeChatHandler.requests_seen[0]["temperature"] == 0


class TestConfig:
    def test_negative_temperature_rejected(self):
        with pytest.raises(ValueError):
            BackendConfig(temperature=-1)

    def test_negative_retries_rejected(self):
        with pytest.raises(ValueError):
            BackendConfig(max_retries=-1)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            BackendConfig(kind="psychic")

    def test_empty_source_rejected(self):
        with pytest.raises(ValueError):
            GeneratedProgram("calcir", "   ", "result", "x", "y")


class TestGenerateWithDeterministicBackend:
    def test_even_sum_prompt(self):
        q = normalize_question("What's the sum of all even numbers from one to six?")
        prog = generate(build_prompt(q, TEMPLATE), BackendConfig(kind="deterministic"))
        assert prog.dialect == "calcir"
        env = calcir.evaluate(calcir.parse_program(prog.source))
        assert env["result"] == 12

    def test_no_match_propagates(self):
        q = normalize_question("Why is the sky blue?")
        with pytest.raises(NoMatch):
            generate(build_prompt(q, TEMPLATE), BackendConfig(kind="deterministic"))
