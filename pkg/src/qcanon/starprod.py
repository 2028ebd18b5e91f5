"""hbar-graded Moyal algebra and star products built from commuting derivations.

A star product is fixed by ``N`` pairs of commuting vector fields
``(Dx[i], Dp[i])``::

    f * g = sum_k (i hbar / 2)^k sum_{|alpha| = k} sign(alpha) / alpha!
            (L^alpha f) (R^alpha g)

where the ``2N`` slots of ``alpha`` pair ``Dx[i]`` on the left with ``Dp[i]``
on the right (sign +) and ``Dp[i]`` on the left with ``Dx[i]`` on the right
(sign -).  With plain partial derivatives this is the Moyal product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Sequence

from .coeff import GaussRat
from .diffop import DiffOp, apply, compose, commutator as op_commutator
from .expr import (HBAR, ZERO_EXPR, Expr, I_EXPR, as_expr, differentiate, hbar)

DEFAULT_K = 6
_EXACT_CAP = 64


class StarError(ValueError):
    pass


# -- hbar series ---------------------------------------------------------------

class HbarSeries:
    """Truncated power series ``sum_{k<=K} c_k hbar^k`` with hbar-free ``c_k``.

    ``K=None`` marks an exact (terminating) series.
    """

    __slots__ = ("coeffs", "K")

    def __init__(self, value=0, K: "int | None" = DEFAULT_K):
        self.K = K
        if isinstance(value, HbarSeries):
            value = value.to_expr()
        parts = as_expr(value).hbar_split()
        if parts and min(parts) < 0:
            raise StarError("negative hbar power in series")
        self.coeffs = {k: c for k, c in parts.items() if (K is None or k <= K) and c.terms}

    @classmethod
    def from_coeffs(cls, coeffs, K=DEFAULT_K) -> "HbarSeries":
        total = ZERO_EXPR
        for k, c in (coeffs.items() if isinstance(coeffs, dict) else enumerate(coeffs)):
            total = total + as_expr(c) * hbar ** k
        return cls(total, K)

    def coeff(self, k: int) -> Expr:
        return self.coeffs.get(k, ZERO_EXPR)

    def __getitem__(self, k):
        return self.coeff(k)

    def to_expr(self) -> Expr:
        out = ZERO_EXPR
        for k, c in self.coeffs.items():
            out = out + c * hbar ** k
        return out

    def degrees(self) -> list:
        return sorted(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def _k(self, other):
        ko = other.K if isinstance(other, HbarSeries) else None
        if self.K is None:
            return ko
        return self.K if ko is None else min(self.K, ko)

    def __add__(self, other):
        return HbarSeries(self.to_expr() + _as_plain(other), self._k(other))

    __radd__ = __add__

    def __sub__(self, other):
        return HbarSeries(self.to_expr() - _as_plain(other), self._k(other))

    def __rsub__(self, other):
        return HbarSeries(_as_plain(other) - self.to_expr(), self._k(other))

    def __neg__(self):
        return HbarSeries(-self.to_expr(), self.K)

    def __mul__(self, other):
        """Pointwise product (not the star product)."""
        return HbarSeries((self.to_expr() * _as_plain(other)).truncate_hbar(self._k(other)), self._k(other))

    __rmul__ = __mul__

    def conjugate(self) -> "HbarSeries":
        return HbarSeries(self.to_expr().conjugate(), self.K)

    def truncate(self, K) -> "HbarSeries":
        return HbarSeries(self.to_expr(), K if self.K is None else min(K, self.K))

    def __eq__(self, other):
        if isinstance(other, (HbarSeries, Expr, int, Fraction, GaussRat)):
            return self.coeffs == HbarSeries(_as_plain(other), self.K).coeffs
        return NotImplemented

    def __hash__(self):
        return hash(tuple(self.coeffs.items()))

    def __str__(self):
        return str(self.to_expr())

    __repr__ = __str__


def _as_plain(v) -> Expr:
    return v.to_expr() if isinstance(v, HbarSeries) else as_expr(v)


# -- star products ----------------------------------------------------------

def phase_variables(n: int, primed: bool = False) -> tuple:
    """``(xs, ps)`` name tuples: ``x, p`` for one degree of freedom, ``x1.., p1..`` otherwise."""
    xs, ps = ("xp", "pp") if primed else ("x", "p")
    if n == 1:
        return (xs,), (ps,)
    return tuple(f"{xs}{i}" for i in range(1, n + 1)), tuple(f"{ps}{i}" for i in range(1, n + 1))


@dataclass(frozen=True)
class StarProduct:
    """Star product on the phase variables ``xs + ps`` defined by commuting fields."""

    xs: tuple
    ps: tuple
    dx: tuple
    dp: tuple
    label: str = "transformed"
    _moyal: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        n = len(self.xs)
        if not (len(self.ps) == len(self.dx) == len(self.dp) == n):
            raise StarError("dimension mismatch between variables and derivation fields")
        fields = list(self.dx) + list(self.dp)
        for f in fields:
            if f.vars != self.variables:
                raise StarError(f"derivation over {f.vars}, expected {self.variables}")
            if f.grade() not in (None, 0) or any(c.hbar_degrees() != {0} for c in f.terms.values()):
                raise StarError("derivation fields must be hbar-free")
        if not self._moyal:
            for i in range(len(fields)):
                for j in range(i + 1, len(fields)):
                    if not op_commutator(fields[i], fields[j], None).is_zero():
                        raise StarError(f"derivation fields {i} and {j} do not commute")

    @property
    def n(self) -> int:
        return len(self.xs)

    @property
    def variables(self) -> tuple:
        return tuple(self.xs) + tuple(self.ps)

    @classmethod
    def moyal(cls, n: int = 1, primed: bool = False, xs=None, ps=None) -> "StarProduct":
        if xs is None:
            xs, ps = phase_variables(n, primed)
        vs = tuple(xs) + tuple(ps)
        return cls(tuple(xs), tuple(ps),
                   tuple(DiffOp.partial(vs, v) for v in xs),
                   tuple(DiffOp.partial(vs, v) for v in ps), "moyal", True)

    @property
    def is_moyal(self) -> bool:
        return self._moyal

    def field_list(self) -> list:
        """The ``2N`` fields in index order ``Dx[0..N-1], Dp[0..N-1]``."""
        return list(self.dx) + list(self.dp)


class _Derivs:
    """Memoized ``D^beta f`` over the ``2N`` fields of a star product."""

    def __init__(self, sp: StarProduct, f: Expr):
        self.sp = sp
        self.cache = {(0,) * (2 * sp.n): f}
        self.fields = sp.field_list()

    def _one(self, i: int, f: Expr) -> Expr:
        if self.sp.is_moyal:
            return differentiate(f, self.sp.variables[i])
        return apply(self.fields[i], f)

    def get(self, beta: tuple) -> Expr:
        got = self.cache.get(beta)
        if got is not None:
            return got
        i = next(j for j, b in enumerate(beta) if b)
        lower = list(beta)
        lower[i] -= 1
        prev = self.get(tuple(lower))
        got = ZERO_EXPR if prev.is_zero() else self._one(i, prev)
        self.cache[beta] = got
        return got


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _k_factor(alpha: tuple, n: int) -> GaussRat:
    """``(i/2)^k * sign / alpha!`` for slot multi-index ``alpha`` (plus slots then minus slots)."""
    k = sum(alpha)
    c = GaussRat(0, Fraction(1, 2)) ** k
    den = 1
    for a in alpha:
        den *= factorial(a)
    if sum(alpha[n:]) % 2:
        c = -c
    return c * Fraction(1, den)


def _level_terms(sp: StarProduct, k: int):
    """Yield ``(alpha, left_beta, right_beta)`` for all slot indices of order ``k``."""
    n = sp.n
    for alpha in _compositions(k, 2 * n):
        plus, minus = alpha[:n], alpha[n:]
        yield alpha, plus + minus, minus + plus


def _max_k(K, f: Expr, g: Expr):
    if K is None:
        return None
    # each order carries hbar^k on top of the operands' own lowest hbar powers
    low = min(f.hbar_degrees()) + min(g.hbar_degrees())
    return K - low


def star_product(sp: StarProduct, f, g, K: "int | None" = DEFAULT_K) -> HbarSeries:
    """Bidifferential series of ``sp``, exact when the derivatives run out, else cut at ``hbar**K``."""
    f, g = _as_plain(f), _as_plain(g)
    if f.is_zero() or g.is_zero():
        return HbarSeries(0, K)
    df, dg = _Derivs(sp, f), _Derivs(sp, g)
    kmax = _max_k(K, f, g)
    total = {}
    k = 0
    while kmax is None or k <= kmax:
        if kmax is None and k > _EXACT_CAP:
            raise StarError("series does not terminate; pass a truncation order K")
        level = ZERO_EXPR
        alive = False
        for alpha, lb, rb in _level_terms(sp, k):
            a = df.get(lb)
            if a.is_zero():
                continue
            b = dg.get(rb)
            if b.is_zero():
                continue
            alive = True
            level = level + (a * b).scale(_k_factor(alpha, sp.n))
        if not alive and _exhausted(sp, df, dg, k):
            break
        if not level.is_zero():
            total[k] = level
        k += 1
    out = ZERO_EXPR
    for k, level in total.items():
        out = out + level * hbar ** k
    return HbarSeries(out.truncate_hbar(K), K)


def _exhausted(sp: StarProduct, df: _Derivs, dg: _Derivs, k: int) -> bool:
    """True once every order-``k`` derivative of one operand vanishes (so all higher ones do)."""
    n2 = 2 * sp.n
    return all(df.get(b).is_zero() for b in _compositions(k, n2)) or \
        all(dg.get(b).is_zero() for b in _compositions(k, n2))


def moyal_product(f, g, K: "int | None" = DEFAULT_K, n: "int | None" = None) -> HbarSeries:
    """Moyal product on ``x, p`` (or ``x1.., p1..``) inferred from the free variables."""
    return star_product(StarProduct.moyal(n or _infer_n(f, g)), f, g, K)


def _infer_n(*items) -> int:
    names = set()
    for it in items:
        names |= _as_plain(it).free_vars()
    names.discard(HBAR)
    n = 1
    for v in names:
        digits = v.lstrip("xp")
        if digits.isdigit():
            n = max(n, int(digits))
    return n


def star_commutator(sp: StarProduct, f, g, K: "int | None" = DEFAULT_K) -> HbarSeries:
    return star_product(sp, f, g, K) - star_product(sp, g, f, K)


def moyal_bracket(sp: StarProduct, f, g, K: "int | None" = DEFAULT_K) -> HbarSeries:
    """``[f, g] / (i hbar)``, accurate through ``hbar**K``."""
    c = star_commutator(sp, f, g, None if K is None else K + 1).to_expr()
    if 0 in c.hbar_degrees() and not c.hbar_split()[0].is_zero():
        raise StarError("commutator has a classical part")
    return HbarSeries(c * (I_EXPR * hbar).inverse(), K)


def poisson_bracket(f, g, xs: Sequence[str], ps: Sequence[str]) -> Expr:
    f, g = as_expr(f), as_expr(g)
    out = ZERO_EXPR
    for x, p in zip(xs, ps):
        out = out + differentiate(f, x) * differentiate(g, p) - differentiate(f, p) * differentiate(g, x)
    return out


def field_bracket(sp: StarProduct, f, g) -> Expr:
    """Classical bracket ``sum_i Dx_i f Dp_i g - Dp_i f Dx_i g`` of the star product."""
    f, g = as_expr(f), as_expr(g)
    out = ZERO_EXPR
    for dx, dp in zip(sp.dx, sp.dp):
        out = out + apply(dx, f) * apply(dp, g) - apply(dp, f) * apply(dx, g)
    return out


# -- left multiplication -----------------------------------------------------------

def left_mult_operator(sp: StarProduct, f, K: "int | None" = DEFAULT_K) -> DiffOp:
    """The differential operator ``g -> f * g``."""
    f = _as_plain(f)
    vs = sp.variables
    fields = sp.field_list()
    n2 = 2 * sp.n
    df = _Derivs(sp, f)
    ops: dict = {(0,) * n2: DiffOp.identity(vs, K)}

    def right_op(beta):
        got = ops.get(beta)
        if got is None:
            i = next(j for j, b in enumerate(beta) if b)
            lower = list(beta)
            lower[i] -= 1
            got = compose(fields[i].with_K(K), right_op(tuple(lower)), K)
            ops[beta] = got
        return got

    out = DiffOp.zero(vs, K)
    kmax = None if K is None else K - min(f.hbar_degrees() or {0})
    k = 0
    while kmax is None or k <= kmax:
        if kmax is None and k > _EXACT_CAP:
            raise StarError("series does not terminate; pass a truncation order K")
        if all(df.get(b).is_zero() for b in _compositions(k, n2)):
            break
        for alpha, lb, rb in _level_terms(sp, k):
            a = df.get(lb)
            if a.is_zero():
                continue
            coef = a.scale(_k_factor(alpha, sp.n)) * hbar ** k
            out = out + right_op(rb).scale(coef)
        k += 1
    return out.with_K(K)


def heisenberg_rhs(H, A, K: "int | None" = None, n: "int | None" = None) -> HbarSeries:
    """``[[A, H]]`` for the Moyal product (the Heisenberg-picture time derivative of ``A``)."""
    sp = StarProduct.moyal(n or _infer_n(H, A))
    return moyal_bracket(sp, A, H, K)


# -- star monomials ----------------------------------------------------------------

def _ordered_coeff(n: int, m: int, k: int) -> GaussRat:
    """Coefficient of ``hbar^k x^(n-k) p^(m-k)`` in ``x^{*n} * p^{*m}``."""
    return GaussRat(0, Fraction(1, 2)) ** k * (factorial(k) * comb(n, k) * comb(m, k))


def star_monomial(n: int, m: int, K: "int | None" = None, x: str = "x", p: str = "p") -> HbarSeries:
    """``x * ... * x * p * ... * p`` (``n`` and ``m`` factors) as a pointwise polynomial."""
    if n < 0 or m < 0:
        raise StarError("negative exponent")
    X, P = as_expr(_var(x)), as_expr(_var(p))
    out = ZERO_EXPR
    for k in range(min(n, m) + 1):
        out = out + (X ** (n - k) * P ** (m - k) * hbar ** k).scale(_ordered_coeff(n, m, k))
    return HbarSeries(out, K)


def star_monomial_direct(n: int, m: int, K=None, x: str = "x", p: str = "p") -> HbarSeries:
    """Same as :func:`star_monomial` by repeated star multiplication."""
    sp = StarProduct.moyal(xs=(x,), ps=(p,))
    acc = HbarSeries(1, K)
    for v in [x] * n + [p] * m:
        acc = star_product(sp, acc, _var(v), K)
    return acc


def _var(name):
    from .expr import var
    return var(name)


def to_star_basis(f, x: str = "x", p: str = "p") -> dict:
    """Coefficients ``c[(n, m)]`` (hbar-dependent Exprs) with ``f = sum c x^{*n} * p^{*m}``.

    Peels off leading monomials by descending total degree; each correction
    from the ordering recurrence has strictly lower degree.
    """
    rest = _as_plain(f)
    if not rest.is_polynomial_in([x, p]):
        raise StarError("to_star_basis needs a polynomial in the phase variables")
    out: dict = {}
    while not rest.is_zero():
        n, m, c = _leading(rest, x, p)
        out[(n, m)] = out.get((n, m), ZERO_EXPR) + c
        rest = rest - star_monomial(n, m, None, x, p).to_expr() * c
    return {k: v for k, v in sorted(out.items()) if not v.is_zero()}


def _leading(e: Expr, x: str, p: str):
    """Highest ``(n + m, n)`` exponent pair and its (hbar-dependent) coefficient."""
    best = None
    for mono in e.terms:
        d = dict((a.name, k) for a, k in mono if a.kind == 0)
        n, m = d.get(x, 0), d.get(p, 0)
        key = (n + m, n, m)
        if best is None or key > best:
            best = key
    _, n, m = best
    c = e
    for _ in range(n):
        c = differentiate(c, x)
    for _ in range(m):
        c = differentiate(c, p)
    # every surviving term is x^n p^m itself, since (n + m) is maximal
    return n, m, c.scale(Fraction(1, factorial(n) * factorial(m)))


def from_star_basis(coeffs: dict, K=None, x: str = "x", p: str = "p") -> HbarSeries:
    out = ZERO_EXPR
    for (n, m), c in coeffs.items():
        out = out + star_monomial(n, m, None, x, p).to_expr() * as_expr(c)
    return HbarSeries(out, K)
