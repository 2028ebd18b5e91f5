"""Worked transformations with their closed-form operators and gauge exponents."""

from __future__ import annotations

from fractions import Fraction
from math import factorial

from .cantrans import GeneratingFunction, Transformation, build_transformation
from .diffop import DiffOp
from .expr import (ONE_EXPR, Expr, FuncRegistry, I_EXPR, abs_, as_expr, func, hbar, parse, sgn,
                   sqrtabs, var, variables_for)
from .gauge import GaugeIso, sqrt_map_exponent

P1 = ("xp", "pp")
P2 = ("xp1", "xp2", "pp1", "pp2")


def _ih2():
    return I_EXPR * hbar * Fraction(1, 2)


# -- linear maps -------------------------------------------------------------------

def linear_map(a=2, b=1, c=1, d=1) -> Transformation:
    return build_transformation(GeneratingFunction("linear", a=a, b=b, c=c, d=d))


# -- nonlinear shift family: T = (-a p' - a phi'(x'), x'/a) ---------------------------

def shift_family(phi="phi", a=None) -> Transformation:
    """``phi`` abstract name or expression in ``u``; ``a`` defaults to the symbol ``a``."""
    a = var("a") if a is None else as_expr(a)
    return build_transformation(GeneratingFunction("F1", var("u") * a.inverse(), phi))


def _phi_deriv(phi, order: int, arg: Expr) -> Expr:
    if isinstance(phi, str):
        return func(phi, arg, order)
    from .cantrans import _fn
    return _fn(phi, order, arg)


def shift_family_momentum(phi="phi", K: int = 6) -> DiffOp:
    """``p' - (i hbar/2) d_x' - sum_{n>=2} (i hbar/2)^n / n! phi^(n+1) d_p'^n``."""
    X = var("xp")
    out = DiffOp(P1, {(0, 0): var("pp"), (1, 0): -_ih2()}, K)
    for n in range(2, K + 1):
        c = -(_ih2() ** n) * _phi_deriv(phi, n + 1, X) * Fraction(1, factorial(n))
        out = out + DiffOp(P1, {(0, n): c}, K)
    return out


def shift_family_position(K: int = 6) -> DiffOp:
    return DiffOp(P1, {(0, 0): var("xp"), (0, 1): _ih2()}, K)


def shift_family_exponent(phi="phi", K: int = 6) -> DiffOp:
    """``-sum_{n>=1} (-1)^n (hbar/2)^(2n) phi^(2n+1) d_p'^(2n+1) / (2n+1)!``."""
    X = var("xp")
    out = DiffOp.zero(P1, K)
    for n in range(1, K // 2 + 1):
        c = (hbar ** (2 * n)).scale(Fraction(-((-1) ** n), 4 ** n * factorial(2 * n + 1))) * _phi_deriv(phi, 2 * n + 1, X)
        out = out + DiffOp(P1, {(0, 2 * n + 1): c}, K)
    return out


# -- point transformations T = (phi(x'), p'/phi'(x')) ---------------------------------

def point_map(phi="phi") -> Transformation:
    return build_transformation(GeneratingFunction("F4", phi))


def point_map_printed(K: int = 3) -> tuple:
    """Printed expansions of ``q'_T``, ``p'_T`` (to hbar^3) and ``S_T`` (to hbar^2), abstract ``phi``."""
    X = var("xp")
    P = var("pp")
    d = [func("phi", X, k) for k in range(5)]
    ih2 = _ih2()
    q = DiffOp(P1, {(0, 0): X, (0, 1): ih2,
                    (0, 2): ih2 ** 2 * Fraction(1, 2) * d[1] ** -1 * (-d[2]),
                    (0, 3): ih2 ** 3 * Fraction(1, 6) * d[1] ** -2 * (3 * d[2] ** 2 - d[1] * d[3])}, K)
    A2 = -3 * d[2] ** 2 + d[1] * d[3]
    A3 = 3 * d[2] ** 2 - 3 * d[1] * d[3]
    p = DiffOp(P1, {(0, 0): P, (1, 0): -ih2,
                    (0, 2): ih2 ** 2 * Fraction(1, 2) * d[1] ** -2 * A2 * P,
                    (1, 1): ih2 ** 2 * Fraction(1, 2) * d[1] ** -2 * (-2 * d[2]) * d[1],
                    (0, 1): ih2 ** 2 * Fraction(1, 2) * d[1] ** -2 * (-2 * d[2]) * d[2],
                    (0, 3): ih2 ** 3 * Fraction(1, 6) * d[1] ** -3
                    * (6 * d[2] ** 3 - 7 * d[1] * d[2] * d[3] + d[1] ** 2 * func("phi", X, 4)) * P,
                    (1, 2): ih2 ** 3 * Fraction(1, 6) * d[1] ** -3 * A3 * d[1]}, K)
    p = p + DiffOp(P1, {(0, 2): ih2 ** 3 * Fraction(1, 6) * d[1] ** -3 * 2 * A3 * d[2]}, K)
    h2 = (hbar ** 2).scale(Fraction(1, 24)) * d[1] ** -2
    S = DiffOp(P1, {(0, 0): ONE_EXPR,
                    (0, 3): h2 * (3 * d[2] ** 2 - d[1] * d[3]) * P,
                    (1, 2): h2 * 3 * d[2] * d[1],
                    (0, 2): h2 * 3 * d[2] * d[2]}, K)
    return q, p, S


def sqrt_phi() -> Expr:
    """``sgn(u) sqrt|2u|`` in the dummy variable."""
    u = var("u")
    return sgn(u) * sqrtabs(2 * u)


def sqrt_map() -> Transformation:
    """``T(x', p') = (sgn(x') sqrt|2x'|, p' sqrt|2x'|)``."""
    u = var("u")
    return build_transformation(GeneratingFunction("F4", sqrt_phi(), phi1_inverse=sgn(u) * u * u * Fraction(1, 2)))


def sqrt_map_printed(K: int = 6) -> tuple:
    """Closed forms of ``q'_T`` and ``p'_T`` for the sqrt point map."""
    X = var("xp")
    ab = abs_(2 * X)
    s = sgn(X)
    q = DiffOp(P1, {(0, 0): X, (0, 1): _ih2(), (0, 2): -(hbar ** 2).scale(Fraction(1, 8)) * s * ab ** -1}, K)
    p = DiffOp(P1, {(0, 0): var("pp"), (1, 0): -_ih2()}, K)
    mih2 = -_ih2()
    for n in range(1, K):
        c = mih2 ** (n + 1)
        p = p + DiffOp(P1, {(1, n): c * s ** n * ab ** (-n), (0, n): -c * n * s ** (n + 1) * ab ** (-n - 1)}, K)
    return q, p


def sqrt_gauge(K: int = 6) -> GaugeIso:
    return GaugeIso.from_exponent(sqrt_map_exponent(K), sqrt_map(), K)


def oscillator_hamiltonian(pos="x", mom="p") -> Expr:
    w = var("omega")
    return (var(mom) ** 2 + w ** 2 * var(pos) ** 2) * Fraction(1, 2)


def oscillator_printed_operator():
    """``|q|p^2/2 + p^2|q|/2 + omega^2|q| + hbar^2/(16|q|)`` in normal order."""
    from .gauge import OperatorPoly
    X = var("xp")
    absq = OperatorPoly.position(abs_(X), "xp")
    p2 = OperatorPoly.momentum(2, "xp")
    w = var("omega")
    return (absq * p2).scale(Fraction(1, 2)) + (p2 * absq).scale(Fraction(1, 2)) \
        + absq.scale(w ** 2) + OperatorPoly.position((hbar ** 2).scale(Fraction(1, 16)) * abs_(X) ** -1, "xp")


# -- four-dimensional example ------------------------------------------------------------

FOUR_SYMBOLS = ("m1", "m2", "k", "t")


def _p2(text: str) -> Expr:
    return parse(text, variables=variables_for(2), symbols=FOUR_SYMBOLS)


def four_dim_map() -> Transformation:
    fwd = (_p2("xp1 - t*pp1/m1 - k*t^2*pp2^2/(2*m1)"),
           _p2("xp2 - t*pp2/m2 - 2*k*t*xp1*pp2 + k*t^2*pp1*pp2/m1 + k^2*t^3*pp2^3/(3*m1)"),
           _p2("pp1 + k*t*pp2^2"),
           _p2("pp2"))
    inv = (_p2("x1 + t*p1/m1 - k*t^2*p2^2/(2*m1)"),
           _p2("x2 + t*p2/m2 + 2*k*t*x1*p2 + k*t^2*p1*p2/m1 - k^2*t^3*p2^3/(3*m1)"),
           _p2("p1 - k*t*p2^2"),
           _p2("p2"))
    return Transformation(2, fwd, inv, "four-dim")


def four_dim_hamiltonian() -> Expr:
    return _p2("p1^2/(2*m1) + p2^2/(2*m2) + k*x1*p2^2")


def four_dim_fields() -> tuple:
    """Printed ``D_x', D_y', D_p1', D_p2'``."""
    v = P2
    return (DiffOp(v, {(1, 0, 0, 0): 1, (0, 1, 0, 0): _p2("2*k*t*pp2")}),
            DiffOp(v, {(0, 1, 0, 0): 1}),
            DiffOp(v, {(0, 0, 1, 0): 1, (1, 0, 0, 0): _p2("t/m1"), (0, 1, 0, 0): _p2("k*t^2*pp2/m1")}),
            DiffOp(v, {(0, 0, 0, 1): 1, (0, 0, 1, 0): _p2("-2*k*t*pp2"), (1, 0, 0, 0): _p2("-k*t^2*pp2/m1"),
                       (0, 1, 0, 0): _p2("t/m2 + 2*k*t*xp1 - k*t^2*pp1/m1 - k^2*t^3*pp2^2/m1")}))


def four_dim_printed(K: int = 4) -> tuple:
    """Printed ``q'^1, q'^2, p'_1, p'_2``."""
    v = P2
    ih2 = _ih2()
    q1 = DiffOp(v, {(0, 0, 0, 0): var("xp1"), (0, 0, 1, 0): ih2,
                    (0, 2, 0, 0): -ih2 ** 2 * Fraction(1, 2) * _p2("k*t^2/m1")}, K)
    q2 = DiffOp(v, {(0, 0, 0, 0): var("xp2"), (0, 0, 0, 1): ih2,
                    (0, 2, 0, 0): -ih2 ** 2 * _p2("k^2*t^3*pp2/m1"),
                    (1, 1, 0, 0): -ih2 ** 2 * _p2("k*t^2/m1"),
                    (0, 1, 1, 0): -ih2 ** 2 * _p2("2*k*t"),
                    (0, 3, 0, 0): ih2 ** 3 * Fraction(1, 3) * _p2("k^2*t^3/m1")}, K)
    p1 = DiffOp(v, {(0, 0, 0, 0): var("pp1"), (1, 0, 0, 0): -ih2, (0, 2, 0, 0): -ih2 ** 2 * _p2("k*t")}, K)
    p2 = DiffOp(v, {(0, 0, 0, 0): var("pp2"), (0, 1, 0, 0): -ih2}, K)
    return (q1, q2), (p1, p2)


def four_dim_exponent(K: int = 4) -> DiffOp:
    v = P2
    h2 = hbar ** 2
    return DiffOp(v, {(1, 2, 0, 0): h2 * _p2("k*t^2/(8*m1)"),
                      (0, 2, 1, 0): h2 * _p2("k*t/4"),
                      (0, 3, 0, 0): h2 * _p2("k^2*t^3*pp2/(12*m1)")}, K)


def registry_for_sqrt() -> FuncRegistry:
    return FuncRegistry({"phi": sqrt_phi()})

