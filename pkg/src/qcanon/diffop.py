"""Linear differential operators with expression coefficients.

A :class:`DiffOp` is ``sum_alpha c_alpha * d^alpha`` over a fixed tuple of
variables, coefficients on the left.  Coefficients may contain ``hbar``; the
grade of a term is its lowest hbar power.  Every operation truncates at
``hbar**K`` (``K=None`` keeps everything).
"""

from __future__ import annotations

from fractions import Fraction
from math import comb, factorial
from typing import Iterable, Mapping, Sequence

from .expr import ONE_EXPR, ZERO_EXPR, Expr, as_expr, differentiate


class DiffOpError(ValueError):
    pass


def _min_k(a, b):
    if a is None:
        return b
    if b is None:
        return a
    return min(a, b)


class DiffOp:
    __slots__ = ("vars", "terms", "K")

    def __init__(self, variables: Sequence[str], terms: "Mapping | None" = None, K: "int | None" = None):
        self.vars = tuple(variables)
        self.K = K
        clean = {}
        for alpha, c in (terms or {}).items():
            alpha = tuple(alpha)
            if len(alpha) != len(self.vars) or min(alpha, default=0) < 0:
                raise DiffOpError(f"bad multi-index {alpha} for variables {self.vars}")
            c = as_expr(c).truncate_hbar(K)
            if c.terms:
                prev = clean.get(alpha)
                c = c if prev is None else prev + c
                if c.terms:
                    clean[alpha] = c
                else:
                    del clean[alpha]
        self.terms = dict(sorted(clean.items()))

    # -- constructors ------------------------------------------------------
    @classmethod
    def identity(cls, variables, K=None) -> "DiffOp":
        return cls(variables, {(0,) * len(variables): ONE_EXPR}, K)

    @classmethod
    def zero(cls, variables, K=None) -> "DiffOp":
        return cls(variables, {}, K)

    @classmethod
    def multiplication(cls, variables, f, K=None) -> "DiffOp":
        return cls(variables, {(0,) * len(variables): as_expr(f)}, K)

    @classmethod
    def partial(cls, variables, name: str, order: int = 1, K=None) -> "DiffOp":
        variables = tuple(variables)
        alpha = [0] * len(variables)
        alpha[variables.index(name)] = order
        return cls(variables, {tuple(alpha): ONE_EXPR}, K)

    # -- structure ------------------------------------------------------------
    def _check(self, other: "DiffOp"):
        if self.vars != other.vars:
            raise DiffOpError(f"variable mismatch: {self.vars} vs {other.vars}")

    def with_K(self, K) -> "DiffOp":
        return DiffOp(self.vars, self.terms, K)

    def truncate(self, K) -> "DiffOp":
        return DiffOp(self.vars, self.terms, _min_k(self.K, K))

    def is_zero(self) -> bool:
        return not self.terms

    def order(self) -> int:
        return max((sum(a) for a in self.terms), default=0)

    def grade(self) -> "int | None":
        """Lowest hbar power over all terms (None for the zero operator)."""
        degs = [min(c.hbar_degrees()) for c in self.terms.values()]
        return min(degs) if degs else None

    def __eq__(self, other):
        if not isinstance(other, DiffOp):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        return hash((self.vars, tuple(self.terms.items())))

    def coefficient(self, alpha) -> Expr:
        return self.terms.get(tuple(alpha), ZERO_EXPR)

    def map_coefficients(self, fn) -> "DiffOp":
        return DiffOp(self.vars, {a: fn(c) for a, c in self.terms.items()}, self.K)

    def hbar_part(self, k: int) -> "DiffOp":
        """The hbar**k slice, with hbar-free coefficients."""
        return DiffOp(self.vars, {a: c.hbar_split().get(k, ZERO_EXPR) for a, c in self.terms.items()})

    def conjugate(self) -> "DiffOp":
        return self.map_coefficients(lambda c: c.conjugate())

    # -- linear structure -----------------------------------------------------
    def __add__(self, other):
        if not isinstance(other, DiffOp):
            other = DiffOp.multiplication(self.vars, other)
        self._check(other)
        terms = dict(self.terms)
        for a, c in other.terms.items():
            terms[a] = terms[a] + c if a in terms else c
        return DiffOp(self.vars, terms, _min_k(self.K, other.K))

    __radd__ = __add__

    def __neg__(self):
        return DiffOp(self.vars, {a: -c for a, c in self.terms.items()}, self.K)

    def __sub__(self, other):
        if not isinstance(other, DiffOp):
            other = DiffOp.multiplication(self.vars, other)
        return self + (-other)

    def __rsub__(self, other):
        return (-self) + other

    def scale(self, f) -> "DiffOp":
        """Left multiplication by a scalar expression."""
        f = as_expr(f)
        return DiffOp(self.vars, {a: f * c for a, c in self.terms.items()}, self.K)

    def __mul__(self, other):
        if isinstance(other, DiffOp):
            return compose(self, other)
        return self.scale(other)

    def __rmul__(self, other):
        return self.scale(other)

    def __matmul__(self, other):
        return compose(self, other)

    def __call__(self, f):
        return apply(self, f)

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for alpha, c in self.terms.items():
            d = "*".join(f"d_{v}" + (f"^{k}" if k > 1 else "") for v, k in zip(self.vars, alpha) if k)
            parts.append(f"({c})" + (f"*{d}" if d else ""))
        return " + ".join(parts)

    __repr__ = __str__


def _deriv(f: Expr, variables, gamma, cache: dict) -> Expr:
    key = (f, gamma)
    got = cache.get(key)
    if got is not None:
        return got
    if not any(gamma):
        return f
    i = next(j for j, g in enumerate(gamma) if g)
    lower = list(gamma)
    lower[i] -= 1
    got = differentiate(_deriv(f, variables, tuple(lower), cache), variables[i])
    cache[key] = got
    return got


def _sub_indices(alpha):
    if not alpha:
        yield ()
        return
    for g in range(alpha[0] + 1):
        for rest in _sub_indices(alpha[1:]):
            yield (g,) + rest


def compose(A: DiffOp, B: DiffOp, K="inherit") -> DiffOp:
    """``A o B`` with Leibniz reordering of derivatives past coefficients."""
    A._check(B)
    K = _min_k(A.K, B.K) if K == "inherit" else K
    cache: dict = {}
    out: dict = {}
    for alpha, a in A.terms.items():
        for beta, b in B.terms.items():
            for gamma in _sub_indices(alpha):
                db = _deriv(b, A.vars, gamma, cache)
                if db.is_zero():
                    continue
                mult = 1
                for al, ga in zip(alpha, gamma):
                    mult *= comb(al, ga)
                c = (a * db).truncate_hbar(K)
                if c.is_zero():
                    continue
                idx = tuple(al - ga + be for al, ga, be in zip(alpha, gamma, beta))
                c = c.scale(mult)
                out[idx] = out[idx] + c if idx in out else c
    return DiffOp(A.vars, out, K)


def commutator(A: DiffOp, B: DiffOp, K="inherit") -> DiffOp:
    return compose(A, B, K) - compose(B, A, K)


def apply(A: DiffOp, f) -> Expr:
    """Action of the operator on an expression (truncated at ``hbar**K``)."""
    f = as_expr(f)
    cache: dict = {}
    out = ZERO_EXPR
    for alpha, a in A.terms.items():
        d = _deriv(f, A.vars, alpha, cache)
        if d.terms:
            out = out + a * d
    return out.truncate_hbar(A.K)


def power(A: DiffOp, n: int, K="inherit") -> DiffOp:
    out = DiffOp.identity(A.vars, A.K if K == "inherit" else K)
    for _ in range(n):
        out = compose(out, A, K)
    return out


def _require_graded(A: DiffOp):
    for alpha, c in A.terms.items():
        if 0 in c.hbar_degrees() or min(c.hbar_degrees()) < 0:
            raise DiffOpError(f"exponent term at {alpha} has hbar-grade 0; exponential would not truncate")


def exp_graded(A: DiffOp, K: int) -> DiffOp:
    """``sum_j A^j / j!`` for an exponent whose terms all carry hbar."""
    _require_graded(A)
    A = A.with_K(K)
    out = DiffOp.identity(A.vars, K)
    term = DiffOp.identity(A.vars, K)
    for j in range(1, K + 1):
        term = compose(term, A, K).scale(Fraction(1, j))
        if term.is_zero():
            break
        out = out + term
    return out


def hadamard_conjugate(A: DiffOp, B: DiffOp, K: int) -> DiffOp:
    """``e^A B e^-A`` as ``sum_j ad_A^j(B) / j!`` truncated at ``hbar**K``."""
    _require_graded(A)
    A = A.with_K(K)
    out = B.with_K(K)
    term = B.with_K(K)
    for j in range(1, K + 1):
        term = commutator(A, term, K).scale(Fraction(1, j))
        if term.is_zero():
            break
        out = out + term
    return out


def vector_field(variables: Sequence[str], components: Mapping[str, Expr], K=None) -> DiffOp:
    """``sum_v components[v] * d_v``."""
    variables = tuple(variables)
    terms = {}
    for v, c in components.items():
        alpha = [0] * len(variables)
        alpha[variables.index(v)] = 1
        terms[tuple(alpha)] = as_expr(c)
    return DiffOp(variables, terms, K)


def from_terms(variables: Sequence[str], items: Iterable, K=None) -> DiffOp:
    """Build from ``(coefficient, {var: order})`` pairs."""
    variables = tuple(variables)
    terms: dict = {}
    for c, orders in items:
        alpha = tuple(orders.get(v, 0) for v in variables)
        terms[alpha] = terms[alpha] + as_expr(c) if alpha in terms else as_expr(c)
    return DiffOp(variables, terms, K)


def factorial_fraction(n: int) -> Fraction:
    return Fraction(1, factorial(n))
