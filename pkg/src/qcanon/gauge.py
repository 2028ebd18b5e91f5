"""Gauge isomorphisms between the Moyal product and transformed star products.

``S`` is a graded differential operator ``1 + sum_k hbar^k S_k`` in the primed
variables with ``S o q_M = q'_T o S`` (and likewise for momenta), where
``q_M, p_M`` are Moyal left multiplications and ``q'_T, p'_T`` those of the
transformed product.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from math import comb, factorial
from typing import Callable, Sequence

import numpy as np

from .cantrans import Transformation, primed_operators, transformed_star
from .coeff import GaussRat, ONE as C_ONE, ZERO as C_ZERO
from .diffop import DiffOp, apply, compose, exp_graded
from .expr import (ONE_EXPR, ZERO_EXPR, Expr, I_EXPR, abs_, as_expr, differentiate, func, hbar,
                   sgn, to_string, var)
from .starprod import DEFAULT_K, StarProduct, left_mult_operator, phase_variables, star_product


class GaugeError(ValueError):
    pass


class GaugeSolveError(GaugeError):
    def __init__(self, message: str, order: int, residual: str = ""):
        super().__init__(message)
        self.order = order
        self.residual = residual


# -- gauge isomorphisms ------------------------------------------------------------

def series_inverse(S: DiffOp, K: int) -> DiffOp:
    """``(1 + R)^-1 = sum_j (-R)^j`` for graded ``R``."""
    one = DiffOp.identity(S.vars, K)
    R = (S.with_K(K) - one)
    if R.grade() is not None and R.grade() < 1:
        raise GaugeError("S must reduce to the identity at hbar^0")
    out = one
    term = one
    for _ in range(K):
        term = compose(term, -R, K)
        if term.is_zero():
            break
        out = out + term
    return out


def series_log(S: DiffOp, K: int) -> DiffOp:
    """``log(1 + R) = sum_j (-1)^(j+1) R^j / j`` for graded ``R``."""
    one = DiffOp.identity(S.vars, K)
    R = S.with_K(K) - one
    out = DiffOp.zero(S.vars, K)
    term = one
    for j in range(1, K + 1):
        term = compose(term, R, K)
        if term.is_zero():
            break
        out = out + term.scale(Fraction((-1) ** (j + 1), j))
    return out


@dataclass(frozen=True)
class GaugeIso:
    S: DiffOp
    S_inv: DiffOp
    T: "Transformation | None"
    K: int
    exponent: "DiffOp | None" = None

    @classmethod
    def from_exponent(cls, A: DiffOp, T=None, K: int = DEFAULT_K) -> "GaugeIso":
        return cls(exp_graded(A, K), exp_graded(-A, K), T, K, A.with_K(K))

    @classmethod
    def from_operator(cls, S: DiffOp, T=None, K: int = DEFAULT_K) -> "GaugeIso":
        return cls(S.with_K(K), series_inverse(S, K), T, K)

    @classmethod
    def identity(cls, T=None, K: int = DEFAULT_K, n: int = 1) -> "GaugeIso":
        n = T.n if T is not None else n
        xs, ps = phase_variables(n, True)
        one = DiffOp.identity(xs + ps, K)
        return cls(one, one, T, K, DiffOp.zero(xs + ps, K))

    @property
    def variables(self) -> tuple:
        return self.S.vars

    def log(self) -> DiffOp:
        return self.exponent if self.exponent is not None else series_log(self.S, self.K)

    def __call__(self, f):
        return apply(self.S, f)

    def inverse_apply(self, f):
        return apply(self.S_inv, f)


@dataclass
class GaugeReport:
    conjugation: dict
    homomorphism: bool
    fixed_points: bool
    reality: bool
    inverse: bool
    residuals: dict = field(default_factory=dict)

    @property
    def all_pass(self) -> bool:
        return all(self.conjugation.values()) and self.homomorphism and self.fixed_points \
            and self.reality and self.inverse

    def to_json(self) -> dict:
        return {"conjugation": dict(self.conjugation), "homomorphism": self.homomorphism,
                "fixed_points": self.fixed_points, "reality": self.reality,
                "inverse": self.inverse, "all_pass": self.all_pass,
                "residuals": dict(self.residuals)}


def moyal_operators(n: int, K: int) -> tuple:
    sp = StarProduct.moyal(n, primed=True)
    xs, ps = phase_variables(n, True)
    return ([left_mult_operator(sp, var(v), K) for v in xs],
            [left_mult_operator(sp, var(v), K) for v in ps])


def random_polynomial(rng, names: Sequence[str], degree: int, terms: int = 3,
                      complex_coeffs: bool = False, coeff_range: int = 5) -> Expr:
    out = ZERO_EXPR
    for _ in range(terms):
        d = int(rng.integers(0, degree + 1))
        mono = ONE_EXPR
        for _ in range(d):
            mono = mono * var(names[int(rng.integers(0, len(names)))])
        c = GaussRat(int(rng.integers(-coeff_range, coeff_range + 1)),
                     int(rng.integers(-coeff_range, coeff_range + 1)) if complex_coeffs else 0)
        out = out + mono.scale(c)
    return out


def verify_gauge(S: GaugeIso, T: Transformation, K: int = DEFAULT_K, seed: int = 0,
                 pairs: int = 3, degree: int = 3, sp=None, ops=None) -> GaugeReport:
    """Check the intertwining conditions up to ``hbar**K``."""
    K = min(K, S.K)
    sp = sp or transformed_star(T)
    qT, pT = ops or primed_operators(T, K, sp)
    qM, pM = moyal_operators(T.n, K)
    Sop, Sinv = S.S.with_K(K), S.S_inv.with_K(K)
    xs, ps = phase_variables(T.n, True)
    conj, res = {}, {}
    for name, m, t in zip(list(xs) + list(ps), list(qM) + list(pM), list(qT) + list(pT)):
        diff = compose(Sop, compose(m, Sinv, K), K) - t
        conj[name] = diff.is_zero()
        if not diff.is_zero():
            res[f"conj[{name}]"] = str(diff)
    inv_ok = (compose(Sop, Sinv, K) - DiffOp.identity(Sop.vars, K)).is_zero()
    fixed = all((apply(Sop, var(v)) - var(v)).is_zero() for v in xs + ps) and \
        (apply(Sop, ONE_EXPR) - ONE_EXPR).is_zero()
    rng = np.random.default_rng(seed)
    names = list(xs + ps)
    moy = StarProduct.moyal(T.n, primed=True)
    homo = True
    real = True
    for i in range(pairs):
        f = random_polynomial(rng, names, degree)
        g = random_polynomial(rng, names, degree)
        lhs = apply(Sop, star_product(moy, f, g, K).to_expr())
        rhs = star_product(sp, apply(Sop, f), apply(Sop, g), K).to_expr()
        d = (lhs - rhs).truncate_hbar(K)
        if not d.is_zero():
            homo = False
            res[f"homomorphism[{i}]"] = str(d)
        Sf = apply(Sop, f)
        if not (Sf.conjugate() - apply(Sop, f.conjugate())).is_zero():
            real = False
    return GaugeReport(conj, homo, fixed, real, inv_ok, res)


# -- order-by-order solver -----------------------------------------------------------

@dataclass(frozen=True)
class AnsatzTerm:
    """Candidate term ``coeff * d^alpha`` with unknown constant multiplier."""

    coeff: Expr
    alpha: tuple

    def op(self, variables) -> DiffOp:
        return DiffOp(variables, {self.alpha: self.coeff})


def default_ansatz(T: Transformation, order: int, family: "Callable | str" = "auto",
                   max_p: "int | None" = None) -> list:
    """Term shapes ``f(x') p'^a d_x'^b d_p'^(order + a)`` for one degree of freedom.

    ``family(order, b)`` returns candidate coefficient functions of ``x'``.
    ``"abstract:<name>"`` builds products of derivatives of an abstract function
    with total weight ``order - b``; ``"powers"`` uses ``x'^(b - order)`` times
    ``1`` or ``sgn(x')``; ``"poly:<d>"`` uses ``x'^j`` for ``j <= d``.
    """
    if T.n != 1:
        raise GaugeError("default ansatz covers one degree of freedom")
    P = var("pp")
    if family == "auto":
        fnames = sorted({name for t in T.forward for name in t.functions()})
        family = f"abstract:{fnames[0]}" if fnames else "powers"
    fam = _family(family) if isinstance(family, str) else family
    max_p = max(1, order // 2) if max_p is None else max_p
    out = []
    for a in range(max_p + 1):
        for b in range(order + 1):
            c = order + a
            for f in fam(order, b):
                out.append(AnsatzTerm(f * P ** a, (b, c)))
    return out


def _family(spec: str) -> Callable:
    if spec.startswith("abstract:"):
        name = spec.split(":", 1)[1]
        return lambda order, b: _phi_products(name, order - b)
    if spec == "powers":
        X = var("xp")
        return lambda order, b: [X ** (b - order), X ** (b - order) * sgn(X)]
    if spec.startswith("poly:"):
        deg = int(spec.split(":", 1)[1])
        X = var("xp")
        return lambda order, b: [X ** j for j in range(deg + 1)]
    raise GaugeError(f"unknown ansatz family {spec!r}")


def _phi_products(name: str, weight: int) -> list:
    """``prod phi^(k)^m_k / phi'^(sum m_k)`` over ``sum (k - 1) m_k = weight``, ``k >= 2``."""
    X = var("xp")
    d1 = func(name, X, 1)
    out = []

    def rec(k, remaining, acc, count):
        if remaining == 0:
            out.append(acc * d1 ** (-count))
            return
        if k - 1 > remaining:
            return
        m = 0
        while (k - 1) * m <= remaining:
            rec(k + 1, remaining - (k - 1) * m, acc * func(name, X, k) ** m, count + m)
            m += 1

    if weight < 0:
        return []
    rec(2, weight, ONE_EXPR, 0)
    return out


def _solve_linear(rows: list, rhs: list, nvars: int):
    """Exact Gaussian elimination; returns (solution, rank, consistent)."""
    m = [list(r) + [b] for r, b in zip(rows, rhs)]
    piv_cols = []
    r = 0
    for c in range(nvars):
        pr = next((i for i in range(r, len(m)) if not m[i][c].is_zero()), None)
        if pr is None:
            continue
        m[r], m[pr] = m[pr], m[r]
        inv = m[r][c].inverse()
        m[r] = [v * inv for v in m[r]]
        for i in range(len(m)):
            if i != r and not m[i][c].is_zero():
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        piv_cols.append(c)
        r += 1
    consistent = all(row[-1].is_zero() for row in m[r:])
    sol = [C_ZERO] * nvars
    for i, c in enumerate(piv_cols):
        sol[c] = m[i][-1]
    return sol, r, consistent


def _residual_ops(S: DiffOp, qM, pM, qT, pT, K) -> list:
    return [compose(S, m, K) - compose(t, S, K) for m, t in zip(list(qM) + list(pM), list(qT) + list(pT))]


def _equation_keys(ops: list, k: int) -> dict:
    out = {}
    for i, op in enumerate(ops):
        sl = op.hbar_part(k)
        for alpha, c in sl.terms.items():
            for mono, v in c.terms.items():
                out[(i, alpha, mono)] = v
    return out


@dataclass
class SolveResult:
    gauge: GaugeIso
    coefficients: dict
    ranks: dict


def solve_gauge(T: Transformation, K: int = 4, ansatz: "Callable | None" = None,
                family=None, sp=None) -> SolveResult:
    """Solve ``S o q_M = q'_T o S`` (and momenta) order by order in hbar.

    At order ``k`` the unknown slice ``S_k`` enters only through the
    commutators ``[S_k, z']``, and commuting with multiplication by ``x'^i``
    acts on ``c * d^alpha`` as the formal derivative in the ``i``-th slot of
    ``alpha``.  Without an ansatz the slice is integrated directly from the
    residual (the complete ansatz of all shapes); the result is unique since
    ``S_k`` has no zeroth-order part.  With an ``ansatz(T, k)`` or a coefficient
    ``family`` the slice is restricted to the span of the given terms and
    found by exact linear algebra.  Either way the order-``k`` residual is
    recomputed and a nonzero remainder raises :class:`GaugeSolveError`.
    """
    sp = sp or transformed_star(T)
    qT, pT = primed_operators(T, K, sp)
    qM, pM = moyal_operators(T.n, K)
    vs = qM[0].vars
    S = DiffOp.identity(vs, K)
    coeffs: dict = {}
    ranks: dict = {}
    for k in range(1, K + 1):
        resid = _residual_ops(S, qM, pM, qT, pT, K)
        if ansatz is None and family is None:
            Sk = _integrate_slice([r.hbar_part(k) for r in resid], vs)
            for alpha, c in Sk.terms.items():
                coeffs[(k, alpha)] = c
            ranks[k] = len(Sk.terms)
        else:
            terms = ansatz(T, k) if ansatz else default_ansatz(T, k, family)
            Sk, sol, rank = _ansatz_slice(resid, k, terms, vs)
            ranks[k] = rank
            for c, term in zip(sol, terms):
                if not c.is_zero():
                    coeffs[(k, to_string(term.coeff), term.alpha)] = c
        S = S + DiffOp(vs, {a: c * hbar ** k for a, c in Sk.terms.items()}, K)
        left = _equation_keys(_residual_ops(S, qM, pM, qT, pT, K), k)
        if any(not v.is_zero() for v in left.values()):
            what = "no gauge slice exists" if ansatz is None and family is None else "ansatz insufficient"
            raise GaugeSolveError(f"{what} at order hbar^{k}", k, _fmt_residual(left))
    return SolveResult(GaugeIso.from_operator(S, T, K), coeffs, ranks)


def _integrate_slice(resid: list, vs: tuple) -> DiffOp:
    """``S_k`` with ``[S_k, x^i] = -R_i`` read off slot by slot (first nonzero slot)."""
    n = len(vs)
    wanted: dict = {}
    for i in range(n):
        for beta, c in resid[i].terms.items():
            alpha = list(beta)
            alpha[i] += 1
            alpha = tuple(alpha)
            first = next(j for j, a in enumerate(alpha) if a)
            if first == i:
                wanted[alpha] = -c.scale(Fraction(1, alpha[i]))
    return DiffOp(vs, wanted)


def _ansatz_slice(resid: list, k: int, terms: list, vs: tuple):
    known = _equation_keys(resid, k)
    if not terms:
        return DiffOp.zero(vs), [], 0
    cols = []
    for term in terms:
        B = term.op(vs)
        E = [compose(B, DiffOp.multiplication(vs, var(v)), None)
             - compose(DiffOp.multiplication(vs, var(v)), B, None) for v in vs]
        cols.append(_equation_keys(E, 0))
    keys = sorted(set(known) | {key for c in cols for key in c}, key=_key_sort)
    rows = [[c.get(key, C_ZERO) for c in cols] for key in keys]
    rhs = [-known.get(key, C_ZERO) for key in keys]
    sol, rank, ok = _solve_linear(rows, rhs, len(terms))
    if not ok:
        raise GaugeSolveError(f"ansatz insufficient at order hbar^{k}", k, _fmt_residual(known))
    if rank < len(terms):
        raise GaugeSolveError(f"degenerate ansatz at order hbar^{k}: rank {rank} < {len(terms)}", k)
    Sk = DiffOp.zero(vs)
    for c, term in zip(sol, terms):
        if not c.is_zero():
            Sk = Sk + DiffOp(vs, {term.alpha: term.coeff.scale(c)})
    return Sk, sol, rank


def _key_sort(key):
    i, alpha, mono = key
    return (i, alpha, tuple((a.key, e) for a, e in mono))


def _fmt_residual(known: dict) -> str:
    parts = []
    for (i, alpha, mono), v in sorted(known.items(), key=lambda kv: _key_sort(kv[0]))[:6]:
        parts.append(f"eq{i} d^{alpha}: {v} * {Expr._raw({mono: C_ONE})}")
    return "; ".join(parts)


# -- the sqrt point transformation constants -----------------------------------------

def anbn_constants(nmax: int) -> tuple:
    """Rational constants ``A_n, B_n`` (``n = 1..nmax``) of the sqrt point-map gauge."""
    if nmax < 1:
        raise GaugeError("nmax must be >= 1")
    A = {}
    B = {}
    # Ak[k][n] = A^(k)_{2n-1}
    Ak: dict = {}
    Bk: dict = {}
    for n in range(1, nmax + 1):
        for k in range(2, n + 1):
            sa = Fraction(0)
            sb = Fraction(0)
            for m in range(1, n):
                sa += 4 * (n - 2 * m) * A[n - m] * Ak.get((k - 1, m), Fraction(0))
                sb += 4 * (n - m) * B[n - m] * Ak.get((k - 1, m), Fraction(0)) \
                    - 4 * m * A[n - m] * Bk.get((k - 1, m), Fraction(0))
            Ak[(k, n)] = sa
            Bk[(k, n)] = sb
        A[n] = Fraction(1, 2 * n) * (1 - sum((Ak[(k, n)] / factorial(k) for k in range(2, n + 1)), Fraction(0)))
        B[n] = Fraction(1, 2 * n) * (2 * n - 1 - sum((Bk[(k, n)] / factorial(k) for k in range(2, n + 1)), Fraction(0)))
        Ak[(1, n)] = 2 * n * A[n]
        Bk[(1, n)] = 2 * n * B[n]
    return [A[n] for n in range(1, nmax + 1)], [B[n] for n in range(1, nmax + 1)]


def sqrt_map_exponent(K: int, constants=None) -> DiffOp:
    """Exponent ``sum (-1)^n (hbar/2)^(2n) (A_n sgn|2x'|^(1-2n) d_x' d_p'^2n - B_n |2x'|^(-2n) d_p'^2n)``."""
    nmax = max(1, K // 2)
    A, B = constants or anbn_constants(nmax)
    X = var("xp")
    absx = abs_(2 * X)
    vs = ("xp", "pp")
    out = DiffOp.zero(vs, K)
    for n in range(1, nmax + 1):
        pref = (hbar ** (2 * n)).scale(Fraction((-1) ** n, 4 ** n))
        out = out + DiffOp(vs, {(1, 2 * n): pref * sgn(X) * absx ** (1 - 2 * n) * as_expr(A[n - 1]),
                                (0, 2 * n): -pref * absx ** (-2 * n) * as_expr(B[n - 1])}, K)
    return out


def exponent_sqrt_coefficients(L: DiffOp, n: int) -> tuple:
    """Read ``(A_n, B_n)`` back from an exponent ``L`` (inverse of :func:`sqrt_map_exponent`)."""
    X = var("xp")
    pref = Fraction((-1) ** n, 4 ** n)
    ca = L.coefficient((1, 2 * n)).hbar_split().get(2 * n, ZERO_EXPR)
    cb = L.coefficient((0, 2 * n)).hbar_split().get(2 * n, ZERO_EXPR)
    shape_a = sgn(X) * abs_(2 * X) ** (1 - 2 * n)
    shape_b = -abs_(2 * X) ** (-2 * n)
    a = (ca * shape_a.inverse()).scale(1 / pref) if not ca.is_zero() else ZERO_EXPR
    b = (cb * shape_b.inverse()).scale(1 / pref) if not cb.is_zero() else ZERO_EXPR
    if not (a.is_constant() and b.is_constant()):
        raise GaugeError("exponent is not of the sqrt-map shape")
    return a.constant_value().re, b.constant_value().re


# -- operator orderings ------------------------------------------------------------------

class OperatorPoly:
    """Normal-ordered operator ``sum_beta c_beta(q) p^beta`` (positions left of momenta).

    Coefficients are expressions in the position variable and ``hbar`` (abs,
    sgn and negative powers allowed).  One degree of freedom.
    """

    __slots__ = ("terms", "pos")

    def __init__(self, terms=None, pos: str = "x"):
        self.pos = pos
        clean = {}
        for b, c in (terms or {}).items():
            c = as_expr(c)
            if not c.is_zero():
                clean[int(b)] = clean[int(b)] + c if int(b) in clean else c
        self.terms = {b: c for b, c in sorted(clean.items()) if not c.is_zero()}

    @classmethod
    def position(cls, f, pos: str = "x") -> "OperatorPoly":
        """``f(q)`` for an expression ``f`` in the position variable."""
        return cls({0: f}, pos)

    @classmethod
    def momentum(cls, power: int = 1, pos: str = "x") -> "OperatorPoly":
        return cls({power: ONE_EXPR}, pos)

    def __add__(self, other):
        other = other if isinstance(other, OperatorPoly) else OperatorPoly.position(other, self.pos)
        terms = dict(self.terms)
        for b, c in other.terms.items():
            terms[b] = terms[b] + c if b in terms else c
        return OperatorPoly(terms, self.pos)

    __radd__ = __add__

    def __neg__(self):
        return OperatorPoly({b: -c for b, c in self.terms.items()}, self.pos)

    def __sub__(self, other):
        return self + (-other if isinstance(other, OperatorPoly) else -as_expr(other))

    def scale(self, c) -> "OperatorPoly":
        c = as_expr(c)
        return OperatorPoly({b: c * v for b, v in self.terms.items()}, self.pos)

    def __mul__(self, other):
        if not isinstance(other, OperatorPoly):
            return self.scale(other)
        # p^beta g(q) = sum_d C(beta, d) (-i hbar)^d g^(d)(q) p^(beta - d)
        out: dict = {}
        for b, f in self.terms.items():
            for g_b, g in other.terms.items():
                dg = g
                for d in range(b + 1):
                    if dg.is_zero():
                        break
                    c = f * dg * (-I_EXPR * hbar) ** d
                    c = c.scale(comb(b, d))
                    key = b - d + g_b
                    out[key] = out[key] + c if key in out else c
                    dg = differentiate(dg, self.pos)
        return OperatorPoly(out, self.pos)

    def __rmul__(self, other):
        return self.scale(other)

    def __eq__(self, other):
        if not isinstance(other, OperatorPoly):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        return hash(tuple(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def apply(self, psi) -> Expr:
        """Schrodinger action with ``q = pos`` and ``p = -i hbar d/d pos``."""
        psi = as_expr(psi)
        out = ZERO_EXPR
        for b, c in self.terms.items():
            d = psi
            for _ in range(b):
                d = differentiate(d, self.pos) * (-I_EXPR * hbar)
            out = out + c * d
        return out

    def realize(self, K: "int | None" = DEFAULT_K, mom: "str | None" = None) -> DiffOp:
        """Phase-space operator with ``q -> q_M`` and ``p -> p_M`` (Moyal left multiplications).

        ``f(q_M) = sum_k f^(k)(x) (i hbar / 2)^k d_p^k / k!`` since the two
        parts of ``q_M`` commute.
        """
        mom = mom or ("pp" if self.pos == "xp" else "p")
        vs = (self.pos, mom)
        half = I_EXPR * hbar * Fraction(1, 2)
        pM = DiffOp(vs, {(0, 0): var(mom), (1, 0): -half}, K)
        out = DiffOp.zero(vs, K)
        for b, c in self.terms.items():
            fq = {}
            d = c
            k = 0
            while not d.is_zero() and (K is None or k <= K):
                fq[(0, k)] = d * half ** k * Fraction(1, factorial(k))
                d = differentiate(d, self.pos)
                k += 1
                if K is None and k > 64:
                    raise GaugeError("position function has infinitely many derivatives; pass K")
            op = DiffOp(vs, fq, K)
            for _ in range(b):
                op = compose(op, pM, K)
            out = out + op
        return out

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for b, c in self.terms.items():
            mom = "" if b == 0 else ("P" if b == 1 else f"P^{b}")
            parts.append(f"({to_string(c)})" + (f"*{mom}" if mom else ""))
        return " + ".join(parts)

    __repr__ = __str__

    def to_json(self) -> dict:
        return {str(b): to_string(c) for b, c in self.terms.items()}


def normal_symbol(A, pos: str = "x", mom: str = "p") -> Expr:
    """``exp(-(i hbar / 2) d_pos d_mom) A``: the normal-ordered symbol of a Weyl symbol."""
    A = as_expr(A)
    if not A.is_polynomial_in([mom]):
        raise GaugeError("symbol must be polynomial in momentum")
    out = ZERO_EXPR
    term = A
    k = 0
    c = -I_EXPR * hbar * Fraction(1, 2)
    while not term.is_zero():
        out = out + term * c ** k * Fraction(1, factorial(k))
        term = differentiate(differentiate(term, pos), mom)
        k += 1
    return out


def weyl_order(A, pos: str = "x", mom: str = "p") -> OperatorPoly:
    """Symmetrically ordered operator of the symbol ``A``, in normal-ordered form."""
    A = A.to_expr() if hasattr(A, "to_expr") else as_expr(A)
    N = normal_symbol(A, pos, mom)
    terms: dict = {}
    for b in range(N.degree_in([mom]) + 1 if not N.is_zero() else 0):
        c = N
        for _ in range(b):
            c = differentiate(c, mom)
        c = c.scale(Fraction(1, factorial(b)))
        c = _drop_var(c, mom)
        if not c.is_zero():
            terms[b] = c
    return OperatorPoly(terms, pos)


def _drop_var(e: Expr, name: str) -> Expr:
    return Expr._raw({m: c for m, c in e.terms.items() if not any(a.kind == 0 and a.name == name for a, _ in m)})


def s_order(S: GaugeIso, A, pos: str = "xp", mom: str = "pp") -> OperatorPoly:
    """``(S^-1 A)`` in Weyl order."""
    return weyl_order(S.inverse_apply(A), pos, mom)


def transform_observable(A, T: Transformation, S: GaugeIso) -> tuple:
    """``(A o T, S-ordered operator of A o T)``."""
    Ap = T.pullback(A)
    return Ap, s_order(S, Ap)


def mccoy_weyl(n: int, m: int, pos: str = "x") -> OperatorPoly:
    """Weyl order of ``x^n p^m`` as ``2^-n sum_k C(n,k) q^k p^m q^(n-k)``."""
    X = var(pos)
    out = OperatorPoly({}, pos)
    pm = OperatorPoly.momentum(m, pos)
    for k in range(n + 1):
        term = OperatorPoly.position(X ** k, pos) * pm * OperatorPoly.position(X ** (n - k), pos)
        out = out + term.scale(Fraction(comb(n, k), 2 ** n))
    return out
