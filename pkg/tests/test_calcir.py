from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from computegpt import calcir
from computegpt.calcir import (
    CalcSyntaxError,
    DivisionByZero,
    LimitExceeded,
    Matrix,
    NotSquare,
    TypeMismatch,
    UseBeforeDefine,
    det_exact,
    evaluate,
    parse_program,
    polyderiv,
    polyint,
)


def run(source: str) -> dict:
    return evaluate(parse_program(source))


def det_cofactor(rows):
    # Independent oracle: naive cofactor expansion along the first row.
    n = len(rows)
    if n == 1:
        return rows[0][0]
    total = 0
    for j in range(n):
        minor = [row[:j] + row[j + 1 :] for row in rows[1:]]
        total += (-1) ** j * rows[0][j] * det_cofactor(minor)
    return total


class TestParse:
    def test_single_assignment(self):
        program = parse_program("result = 5*10 + 20")
        assert len(program.statements) == 1
        assert program.statements[0].target == "result"

    def test_division_over_ints(self):
        program = parse_program("result = (7*5+2)/3")
        stmt = program.statements[0]
        assert isinstance(stmt.expr, calcir.Binary)
        assert stmt.expr.op == "/"

    def test_use_before_define(self):
        with pytest.raises(UseBeforeDefine) as exc:
            parse_program("result = x + 1")
        assert exc.value.name == "x"

    def test_defined_across_statements(self):
        program = parse_program("x = 3; result = x + 1")
        assert evaluate(program)["result"] == 4

    def test_syntax_error_has_position(self):
        with pytest.raises(CalcSyntaxError) as exc:
            parse_program("result = 1 +")
        assert exc.value.line == 1

    def test_unknown_function_rejected(self):
        with pytest.raises(CalcSyntaxError):
            parse_program("result = frobnicate(1)")

    def test_statement_separators(self):
        env = run("a = 1\nb = 2; c = a + b")
        assert env["c"] == 3

    def test_power_right_associative(self):
        assert run("result = 2^3^2")["result"] == 512

    def test_power_binds_tighter_than_unary_minus(self):
        assert run("result = -2^2")["result"] == -4

    def test_precedence(self):
        assert run("result = 2 + 3 * 4 ^ 2")["result"] == 50


class TestEvaluate:
    def test_kevin(self):
        assert run("result = 5*10 + 20")["result"] == 70

    def test_jamulti_exact_rational(self):
        value = run("result = (7*5+2)/3")["result"]
        assert value == Fraction(37, 3)
        assert isinstance(value, Fraction)

    def test_int_division_canonicalizes_to_int(self):
        value = run("result = 6/3")["result"]
        assert value == 2 and isinstance(value, int)

    def test_division_by_zero(self):
        with pytest.raises(DivisionByZero):
            run("result = 1/0")

    def test_float_contagion(self):
        value = run("result = 50/1.352")["result"]
        assert isinstance(value, float)
        assert value == pytest.approx(36.9822485, rel=1e-6)

    def test_negative_exponent_gives_rational(self):
        assert run("result = 2^-3")["result"] == Fraction(1, 8)

    def test_zero_power_zero(self):
        assert run("result = 0^0")["result"] == 1

    def test_fractional_exponent_on_exact_base(self):
        with pytest.raises(TypeMismatch):
            run("result = 2^(1/2)")

    def test_float_power_ok(self):
        assert run("result = 2.0^0.5")["result"] == pytest.approx(2**0.5)

    def test_strings_and_bools(self):
        env = run('greeting = "hi"\nflag = true')
        assert env["greeting"] == "hi"
        assert env["flag"] is True

    def test_arith_on_string_rejected(self):
        with pytest.raises(TypeMismatch):
            run('result = "a" + 1')

    def test_bool_arith_rejected(self):
        with pytest.raises(TypeMismatch):
            run("result = true + 1")

    def test_bare_expression_not_bound(self):
        env = run("3 + 4\nresult = 1")
        assert env == {"result": 1}

    def test_step_limit(self):
        program = parse_program("result = " + "+".join(["1"] * 100))
        with pytest.raises(LimitExceeded):
            evaluate(program, step_limit=10)

    def test_huge_exponent_rejected(self):
        with pytest.raises(LimitExceeded):
            run("result = 10^(10^9)")

    def test_big_integers_exact(self):
        assert run("result = 2*10^21")["result"] == 2 * 10**21

    def test_determinism(self):
        src = "m = [[1,2],[3,4]]\nresult = det(m) * 3 / 7"
        assert run(src) == run(src)


class TestPolyderiv:
    def test_derivative_of_200x(self):
        assert polyderiv([0, 200]) == [200]

    def test_constant(self):
        assert polyderiv([5]) == [0]

    def test_square(self):
        assert polyderiv([0, 0, 1]) == [0, 2]

    def test_empty(self):
        assert polyderiv([]) == [0]

    def test_non_numeric_entry(self):
        with pytest.raises(TypeMismatch):
            polyderiv([1, "x"])

    @given(
        st.lists(st.integers(-50, 50), max_size=9),
        st.lists(st.integers(-50, 50), max_size=9),
        st.integers(-9, 9),
    )
    def test_linearity(self, p, q, alpha):
        size = max(len(p), len(q), 1)
        p = p + [0] * (size - len(p))
        q = q + [0] * (size - len(q))
        combined = polyderiv([alpha * a + b for a, b in zip(p, q)])
        dp, dq = polyderiv(p), polyderiv(q)
        assert combined == [alpha * a + b for a, b in zip(dp, dq)]


def poly_eval(coeffs, x):
    return sum(Fraction(c) * Fraction(x) ** i for i, c in enumerate(coeffs))


class TestPolyint:
    def test_integral_200x_from_0_to_5(self):
        assert polyint([0, 200], 0, 5) == 2500

    def test_big_coefficient_integral(self):
        coeffs = [0, 0, 200, 2 * 10**21]
        value = polyint(coeffs, -20, 50)
        assert value == Fraction(9135000000000000000026600000, 3)

    def test_zero_width_interval(self):
        value = polyint([7], 3, 3)
        assert value == 0 and isinstance(value, int)

    def test_float_bounds_give_float(self):
        assert polyint([0, 200], 0.0, 5.0) == pytest.approx(2500.0)

    def test_non_numeric_rejected(self):
        with pytest.raises(TypeMismatch):
            polyint([None], 0, 1)

    @given(
        st.lists(st.integers(-50, 50), min_size=1, max_size=9),
        st.integers(-50, 50),
        st.integers(-50, 50),
    )
    @settings(max_examples=100)
    def test_fundamental_theorem(self, coeffs, a, b):
        derived = polyderiv(coeffs)
        lhs = polyint(derived, a, b)
        rhs = poly_eval(coeffs, b) - poly_eval(coeffs, a)
        assert lhs == rhs


class TestDet:
    def test_reference_matrix(self):
        rows = [[1, 2, 9, 3, 3], [9, 0, 1, 2, 4], [0, 0, 0, 3, 9], [1, 1, 1, 1, 1], [3, 4484, 456, 9, 6]]
        assert det_exact(rows) == -1314828
        assert det_cofactor(rows) == -1314828

    def test_identity(self):
        assert det_exact([[1, 0, 0], [0, 1, 0], [0, 0, 1]]) == 1

    def test_equal_rows_zero(self):
        assert det_exact([[1, 2, 3], [4, 5, 6], [1, 2, 3]]) == 0

    def test_not_square(self):
        with pytest.raises(NotSquare):
            det_exact([[1, 2, 3], [4, 5, 6]])

    def test_rational_entries(self):
        rows = [[Fraction(1, 2), Fraction(1, 3)], [Fraction(1, 5), Fraction(1, 7)]]
        assert det_exact(rows) == Fraction(1, 14) - Fraction(1, 15)

    def test_float_entries_fall_back(self):
        value = det_exact([[1.0, 2.0], [3.0, 4.0]])
        assert isinstance(value, float)
        assert value == pytest.approx(-2.0)

    def test_zero_pivot_needs_swap(self):
        rows = [[0, 1, 2], [1, 0, 3], [4, 5, 0]]
        assert det_exact(rows) == det_cofactor(rows)

    def test_matrix_value_accepted(self):
        m = Matrix(((1, 2), (3, 4)))
        assert det_exact(m) == -2

    @given(
        st.integers(1, 4).flatmap(
            lambda n: st.lists(
                st.lists(st.integers(-9, 9), min_size=n, max_size=n), min_size=n, max_size=n
            )
        )
    )
    @settings(max_examples=150)
    def test_matches_cofactor_oracle(self, rows):
        assert det_exact(rows) == det_cofactor(rows)


class TestMatrixType:
    def test_ragged_rejected(self):
        with pytest.raises(TypeMismatch):
            Matrix(((1, 2), (3,)))

    def test_empty_rejected(self):
        with pytest.raises(TypeMismatch):
            Matrix(())


class TestCanonicalization:
    @given(st.integers(-10**6, 10**6), st.integers(1, 10**6))
    def test_rationals_always_reduced(self, p, q):
        env = evaluate(parse_program(f"result = {p}/{q}"))
        value = env["result"]
        if isinstance(value, Fraction):
            import math

            assert math.gcd(abs(value.numerator), value.denominator) == 1
            assert value.denominator > 1
        else:
            assert isinstance(value, int)
