from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from conftest import polynomials
from qcanon.catalog import shift_family_exponent
from qcanon.diffop import (DiffOp, DiffOpError, apply, commutator, compose, exp_graded,
                           hadamard_conjugate, power, vector_field)
from qcanon.expr import I_EXPR, ONE_EXPR, hbar, var

x, p = var("x"), var("p")
VS = ("x", "p")
IH2 = (I_EXPR * hbar).scale(Fraction(1, 2))
DX = DiffOp.partial(VS, "x")
DP = DiffOp.partial(VS, "p")


def mult(f):
    return DiffOp.multiplication(VS, f)


@st.composite
def operators(draw, max_order=2, graded=False):
    """Small random operator with polynomial coefficients."""
    terms = {}
    for _ in range(draw(st.integers(1, 3))):
        alpha = (draw(st.integers(0, max_order)), draw(st.integers(0, max_order)))
        c = draw(polynomials(list(VS), max_degree=2, max_terms=2))
        if graded:
            c = c * hbar ** draw(st.integers(1, 2))
        terms[alpha] = c
    return DiffOp(VS, terms)


class TestComposition:
    def test_leibniz(self):
        assert compose(DX, mult(x)) == mult(x) @ DX + DiffOp.identity(VS)

    def test_canonical_commutator(self):
        q = mult(x) + DP.scale(IH2)
        pm = mult(p) - DX.scale(IH2)
        assert commutator(q, pm) == DiffOp.identity(VS).scale(I_EXPR * hbar)

    @given(operators())
    def test_self_commutator_vanishes(self, A):
        assert commutator(A, A).is_zero()

    @given(operators(), operators(), operators())
    def test_associative(self, A, B, C):
        assert compose(compose(A, B), C) == compose(A, compose(B, C))

    @given(operators(1), operators(1), operators(1))
    def test_jacobi(self, A, B, C):
        total = (commutator(A, commutator(B, C)) + commutator(B, commutator(C, A))
                 + commutator(C, commutator(A, B)))
        assert total.is_zero()

    @given(operators(), operators(), polynomials(list(VS), max_degree=4))
    def test_apply_respects_composition(self, A, B, f):
        assert apply(compose(A, B), f) == apply(A, apply(B, f))

    def test_truncation(self):
        A = DiffOp(VS, {(0, 1): hbar})
        assert power(A, 3, K=2).is_zero()
        assert power(A, 2, K=2) == DiffOp(VS, {(0, 2): hbar * hbar})

    def test_variable_mismatch(self):
        with pytest.raises(DiffOpError):
            compose(DX, DiffOp.partial(("y",), "y"))
        with pytest.raises(DiffOpError):
            DiffOp(VS, {(1,): ONE_EXPR})


class TestApply:
    def test_values(self):
        assert apply(mult(x) @ DP, p * p) == 2 * x * p
        assert apply(DX @ DP, x * p) == ONE_EXPR
        q = mult(x) + DP.scale(IH2)
        assert apply(q, p) == x * p + IH2

    def test_vector_field(self):
        V = vector_field(VS, {"x": p, "p": -x})
        assert apply(V, x * x + p * p).is_zero()


class TestExponential:
    def test_zero_exponent(self):
        assert exp_graded(DiffOp.zero(VS), 4) == DiffOp.identity(VS, 4)

    def test_rejects_ungraded(self):
        with pytest.raises(DiffOpError, match="grade 0"):
            exp_graded(DX, 4)
        with pytest.raises(DiffOpError):
            hadamard_conjugate(DX, mult(x), 3)

    def test_cubic_shift_exponent(self):
        A = shift_family_exponent(var("u") ** 3, K=5)
        VP = ("xp", "pp")
        assert A == DiffOp(VP, {(0, 3): (hbar * hbar).scale(Fraction(1, 4))}, 5)
        want = DiffOp(VP, {(0, 0): ONE_EXPR, (0, 3): (hbar * hbar).scale(Fraction(1, 4)),
                           (0, 6): (hbar ** 4).scale(Fraction(1, 32))}, 5)
        assert exp_graded(A, 5) == want

    @given(operators(1, graded=True))
    def test_exponential_inverse(self, A):
        K = 4
        assert compose(exp_graded(A, K), exp_graded(-A, K), K) == DiffOp.identity(VS, K)

    @given(operators(1, graded=True), operators(1))
    def test_hadamard_matches_conjugation(self, A, B):
        K = 4
        direct = compose(compose(exp_graded(A, K), B.with_K(K), K), exp_graded(-A, K), K)
        assert hadamard_conjugate(A, B, K) == direct


class TestHadamard:
    def test_shift_by_commutator(self):
        A = DX.scale(I_EXPR * hbar)
        assert hadamard_conjugate(A, mult(x), 4) == mult(x + I_EXPR * hbar).with_K(4)

    def test_commuting_operand(self):
        A = DP.scale(hbar * hbar)
        assert hadamard_conjugate(A, mult(x), 4) == mult(x).with_K(4)

    def test_shift_exponent_fixes_position(self):
        VP = ("xp", "pp")
        A = shift_family_exponent("phi", K=6)
        q = DiffOp(VP, {(0, 0): var("xp"), (0, 1): IH2}, 6)
        assert hadamard_conjugate(A, q, 6) == q
