import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import polynomials
from qcanon.expr import (ExprSyntaxError, FuncRegistry, I_EXPR, MissingEvaluatorError, ONE_EXPR,
                         SingularLocusError, UnknownSymbolError, ZERO_EXPR, abs_, compose_funcs,
                         cos, differentiate, eval_numeric, exp, func, hbar, parse, sgn, sin,
                         sqrtabs, substitute, to_string, var)

x, p = var("x"), var("p")
NAMES = ["x", "p"]


def num(e, **pt):
    return complex(eval_numeric(e, pt, hbar=0.7))


class TestCanonicalForm:
    def test_collects_like_terms(self):
        assert x * p + p * x - 2 * x * p == ZERO_EXPR

    def test_sign_and_abs_rules(self):
        assert sgn(x) ** 2 == ONE_EXPR
        assert abs_(x) * sgn(x) == x
        assert sqrtabs(x) ** 2 == abs_(x)
        assert sqrtabs(4 * x * x) == 2 * abs_(x)

    def test_trig_identity(self):
        assert sin(x) ** 2 + cos(x) ** 2 == ONE_EXPR

    def test_inverse_of_monomial(self):
        m = (x ** 3 * p).scale(Fraction(2, 3))
        assert m * m.inverse() == ONE_EXPR

    def test_hbar_split_and_truncate(self):
        e = x + hbar * p + hbar ** 3 * x * p
        assert e.hbar_split() == {0: x, 1: p, 3: x * p}
        assert e.truncate_hbar(2) == x + hbar * p

    def test_conjugate_flips_imaginary_unit(self):
        e = I_EXPR * x + 3
        assert e.conjugate() == -I_EXPR * x + 3


class TestDifferentiation:
    def test_special_atoms(self):
        assert differentiate(abs_(x), "x") == sgn(x)
        assert differentiate(sgn(x), "x") == ZERO_EXPR
        # d/dx sqrt|x| = sgn(x) / (2 sqrt|x|)
        d = differentiate(sqrtabs(x), "x")
        for v in (-2.3, 0.4, 5.0):
            assert num(d, x=v) == pytest.approx(math.copysign(1, v) / (2 * math.sqrt(abs(v))))

    def test_chain_rule_for_abstract_function(self):
        assert differentiate(func("phi", x * x), "x") == 2 * x * func("phi", x * x, 1)

    def test_exp(self):
        assert differentiate(exp(2 * x), "x") == 2 * exp(2 * x)

    @given(polynomials(NAMES), polynomials(NAMES))
    def test_leibniz(self, f, g):
        assert differentiate(f * g, "x") == differentiate(f, "x") * g + f * differentiate(g, "x")

    @given(polynomials(NAMES, max_degree=4))
    def test_mixed_partials_commute(self, f):
        assert differentiate(differentiate(f, "x"), "p") == differentiate(differentiate(f, "p"), "x")

    @given(polynomials(NAMES), st.floats(-2, 2), st.floats(-2, 2))
    def test_derivative_matches_finite_difference(self, f, a, b):
        h = 1e-4
        fd = (num(f, x=a + h, p=b) - num(f, x=a - h, p=b)) / (2 * h)
        assert num(differentiate(f, "x"), x=a, p=b) == pytest.approx(fd, rel=1e-5, abs=1e-5)


class TestRingAxioms:
    @given(polynomials(NAMES, complex_coeffs=True), polynomials(NAMES), polynomials(NAMES))
    def test_distributive_and_commutative(self, f, g, h):
        assert f * (g + h) == f * g + f * h
        assert f * g == g * f

    @given(polynomials(NAMES), polynomials(NAMES), st.floats(-3, 3), st.floats(-3, 3))
    def test_numeric_homomorphism(self, f, g, a, b):
        assert num(f * g, x=a, p=b) == pytest.approx(num(f, x=a, p=b) * num(g, x=a, p=b), rel=1e-9, abs=1e-9)


class TestSubstitution:
    def test_simultaneous(self):
        assert substitute(x * p * p, {"x": p, "p": x}) == p * x * x

    def test_into_special_atoms(self):
        assert substitute(abs_(x), {"x": -2 * p}) == 2 * abs_(p)

    def test_compose_concrete_definition(self):
        assert compose_funcs(func("phi", x, 1), {"phi": var("u") ** 3}) == 3 * x * x

    @given(polynomials(NAMES), polynomials(NAMES), st.floats(-2, 2), st.floats(-2, 2))
    def test_substitute_agrees_with_evaluation(self, f, g, a, b):
        inner = num(g, x=a, p=b)
        lhs = num(substitute(f, {"x": g}), x=a, p=b)
        rhs = complex(eval_numeric(f, {"x": inner, "p": b}, hbar=0.7))
        assert lhs == pytest.approx(rhs, rel=1e-8, abs=1e-8)


class TestParser:
    @given(polynomials(NAMES, complex_coeffs=True))
    def test_roundtrip(self, f):
        assert parse(to_string(f), symbols=("hbar",)) == f

    def test_grammar(self):
        assert parse("phi(x)^2 + phi''(x)") == func("phi", x) ** 2 + func("phi", x, 2)
        assert parse("I*hbar*x/2") == (I_EXPR * hbar * x).scale(Fraction(1, 2))
        assert parse("abs(x)*sgn(x)") == x
        assert parse("x^-2") == x ** -2

    @pytest.mark.parametrize("text,pos", [("x +", 3), ("x^(1/2)", 4), ("2**3", 2), ("phi(x", 5)])
    def test_syntax_errors_carry_position(self, text, pos):
        with pytest.raises(ExprSyntaxError, match=f"position {pos}"):
            parse(text)

    def test_unknown_symbol(self):
        with pytest.raises(UnknownSymbolError):
            parse("y*x")
        assert parse("omega*x", symbols=("omega",)) == var("omega") * x


class TestNumericEvaluation:
    def test_singular_locus(self):
        with pytest.raises(SingularLocusError):
            eval_numeric(x ** -1, {"x": 0.0})

    def test_missing_evaluator(self):
        with pytest.raises(MissingEvaluatorError):
            eval_numeric(func("phi", x), {"x": 1.0})

    def test_registry_derivatives(self):
        reg = FuncRegistry({"phi": var("u") ** 3})
        assert eval_numeric(func("phi", x, 2), {"x": 2.0}, funcs=reg) == pytest.approx(12.0)

    def test_vectorized(self):
        xs = np.linspace(-1, 1, 5)
        np.testing.assert_allclose(eval_numeric(abs_(x) + x * x, {"x": xs}), np.abs(xs) + xs ** 2)
