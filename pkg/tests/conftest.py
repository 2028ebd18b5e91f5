import time
from fractions import Fraction

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from qcanon.coeff import GaussRat
from qcanon.expr import I_EXPR, ZERO_EXPR, Expr, as_expr, const, var

settings.register_profile("default", deadline=None, max_examples=40,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")


def names_for(n: int) -> list:
    if n == 1:
        return ["x", "p"]
    return [f"x{i}" for i in range(1, n + 1)] + [f"p{i}" for i in range(1, n + 1)]


def expr_to_poly(e: Expr, names: list) -> dict:
    """Expr with plain-variable monomials -> oracle dict keyed by ``(exps..., hbar)``."""
    out = {}
    order = list(names) + ["hbar"]
    for mono, c in e.terms.items():
        key = [0] * len(order)
        for atom, k in mono:
            key[order.index(atom.name)] = k
        out[tuple(key)] = (c.re, c.im)
    return out


def poly_to_expr(poly: dict, names: list) -> Expr:
    order = list(names) + ["hbar"]
    out = ZERO_EXPR
    for key, (re, im) in poly.items():
        term = as_expr(GaussRat(re, im))
        for name, k in zip(order, key):
            term = term * var(name) ** k
        out = out + term
    return out


small_frac = st.fractions(min_value=-5, max_value=5, max_denominator=4)


@st.composite
def polynomials(draw, names, max_degree=3, max_terms=4, complex_coeffs=False):
    """Random polynomial expression in ``names`` with small rational coefficients."""
    out = ZERO_EXPR
    for _ in range(draw(st.integers(1, max_terms))):
        deg = draw(st.integers(0, max_degree))
        term = const(draw(small_frac))
        if complex_coeffs:
            term = term + const(draw(small_frac)) * I_EXPR
        for _ in range(deg):
            term = term * var(draw(st.sampled_from(names)))
        out = out + term
    return out


@pytest.fixture
def rng():
    import numpy as np
    return np.random.default_rng(20240607)


def F(a, b=1):
    return Fraction(a, b)


ACCEPTANCE: dict = {}


class Criterion:
    """Collects named sub-checks of one acceptance criterion without stopping at the first miss."""

    def __init__(self, number: int, budget: float):
        self.number, self.budget = number, budget
        self.checks: dict = {}
        self.start = time.perf_counter()

    def check(self, name: str, ok, detail: str = "") -> bool:
        self.checks[name] = (bool(ok), detail)
        return bool(ok)

    def failed(self) -> list:
        return [f"{k} {d}".strip() for k, (ok, d) in self.checks.items() if not ok]

    def finish(self):
        elapsed = time.perf_counter() - self.start
        if self.budget is not None:
            self.check("runtime", elapsed < self.budget, f"{elapsed:.1f}s / {self.budget:g}s")
        ACCEPTANCE[self.number] = (not self.failed(), elapsed, self.failed())
        assert not self.failed(), "; ".join(self.failed())


@pytest.fixture
def criterion():
    return Criterion


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE):
        ok, elapsed, failed = ACCEPTANCE[n]
        tail = "" if ok else "  [" + "; ".join(failed) + "]"
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} ({elapsed:.1f}s){tail}")
