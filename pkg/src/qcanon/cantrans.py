"""Phase-space coordinate maps, generating functions and transformed star products.

A :class:`Transformation` gives old coordinates ``(x, p) = T(x', p')`` as
expressions in the primed variables (``xp, pp`` or ``xp1.., pp1..``), and
optionally the inverse as expressions in ``x, p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Mapping, Sequence

import numpy as np

from .diffop import apply, vector_field
from .expr import (ONE_EXPR, ZERO_EXPR, Expr, FuncRegistry, as_expr, cos, differentiate,
                   eval_numeric, func, sin, substitute, var)
from .starprod import (DEFAULT_K, StarProduct, field_bracket, moyal_bracket, phase_variables,
                       star_product)

DUMMY = "u"


class TransformError(ValueError):
    pass


# -- small symbolic matrix helpers ---------------------------------------------

def det(m: list) -> Expr:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    out = ZERO_EXPR
    for j in range(n):
        if m[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in m[1:]]
        term = m[0][j] * det(minor)
        out = out + term if j % 2 == 0 else out - term
    return out


def inverse_matrix(m: list) -> list:
    """Adjugate over determinant; the determinant must be an invertible monomial."""
    n = len(m)
    d = det(m)
    if d.is_zero():
        raise TransformError("singular Jacobian")
    if not d.is_monomial():
        raise TransformError(f"Jacobian determinant {d} is not a monomial; cannot invert symbolically")
    dinv = d.inverse()
    if n == 1:
        return [[dinv]]
    out = [[ZERO_EXPR] * n for _ in range(n)]
    for i in range(n):
        for j in range(n):
            minor = [row[:j] + row[j + 1:] for k, row in enumerate(m) if k != i]
            c = det(minor)
            out[j][i] = (c if (i + j) % 2 == 0 else -c) * dinv
    return out


# -- transformations ----------------------------------------------------------------

@dataclass(frozen=True)
class Transformation:
    """``(x, p) = T(x', p')`` with optional closed-form inverse."""

    n: int
    forward: tuple
    inverse: "tuple | None" = None
    name: str = ""
    singular: str = ""
    fields: "tuple | None" = None
    registry: FuncRegistry = field(default_factory=FuncRegistry, compare=False)

    def __post_init__(self):
        if len(self.forward) != 2 * self.n:
            raise TransformError("forward map needs 2N components")
        if self.inverse is not None and len(self.inverse) != 2 * self.n:
            raise TransformError("inverse map needs 2N components")
        object.__setattr__(self, "forward", tuple(as_expr(e) for e in self.forward))
        if self.inverse is not None:
            object.__setattr__(self, "inverse", tuple(as_expr(e) for e in self.inverse))

    @property
    def primed(self) -> tuple:
        xs, ps = phase_variables(self.n, True)
        return xs + ps

    @property
    def unprimed(self) -> tuple:
        xs, ps = phase_variables(self.n)
        return xs + ps

    def pullback(self, f) -> Expr:
        """``f o T`` as an expression in the primed variables."""
        return substitute(as_expr(f), dict(zip(self.unprimed, self.forward)))

    def pushforward(self, f) -> Expr:
        """``f o T^-1`` as an expression in the unprimed variables."""
        if self.inverse is None:
            raise TransformError("no closed-form inverse")
        return substitute(as_expr(f), dict(zip(self.primed, self.inverse)))

    def jacobian(self) -> list:
        """``J[b][a] = dT^b / dz'^a``."""
        return [[differentiate(t, v) for v in self.primed] for t in self.forward]

    def jacobian_det(self) -> Expr:
        return det(self.jacobian())

    def compose(self, other: "Transformation") -> "Transformation":
        """``self o other``: first apply ``other``, then ``self``."""
        if self.n != other.n:
            raise TransformError("dimension mismatch")
        fwd = tuple(substitute(t, dict(zip(self.primed, other.forward))) for t in self.forward)
        inv = None
        if self.inverse is not None and other.inverse is not None:
            inv = tuple(substitute(t, dict(zip(other.unprimed, self.inverse))) for t in other.inverse)
        reg = FuncRegistry({**other.registry.definitions, **self.registry.definitions})
        return Transformation(self.n, fwd, inv, f"{self.name}o{other.name}", registry=reg)

    def inverted(self) -> "Transformation":
        if self.inverse is None:
            raise TransformError("no closed-form inverse")
        ren_in = {u: var(p) for u, p in zip(self.unprimed, self.primed)}
        ren_out = {p: var(u) for u, p in zip(self.unprimed, self.primed)}
        fwd = tuple(substitute(t, ren_in) for t in self.inverse)
        inv = tuple(substitute(t, ren_out) for t in self.forward)
        return Transformation(self.n, fwd, inv, f"{self.name}^-1", registry=self.registry)

    def substitute_params(self, values: Mapping) -> "Transformation":
        vals = {k: as_expr(v) for k, v in values.items()}
        fwd = tuple(substitute(t, vals) for t in self.forward)
        inv = None if self.inverse is None else tuple(substitute(t, vals) for t in self.inverse)
        return Transformation(self.n, fwd, inv, self.name, self.singular, registry=self.registry)

    def concrete(self) -> "Transformation":
        """Replace registered abstract functions by their definitions."""
        c = self.registry.concretize
        fwd = tuple(c(t) for t in self.forward)
        inv = None if self.inverse is None else tuple(c(t) for t in self.inverse)
        return Transformation(self.n, fwd, inv, self.name, self.singular, registry=self.registry)

    def check_inverse(self, rng=None, points: int = 100, params: "Mapping | None" = None,
                      tol: float = 1e-9) -> bool:
        """``T(T^-1(z)) = z``, symbolically when it normalizes, else numerically."""
        if self.inverse is None:
            raise TransformError("no closed-form inverse")
        back = [substitute(t, dict(zip(self.primed, self.inverse))) for t in self.forward]
        if all((b - var(u)).is_zero() for b, u in zip(back, self.unprimed)):
            return True
        rng = rng or np.random.default_rng(0)
        for _ in range(points):
            pt = {v: float(rng.uniform(0.3, 2.0)) * rng.choice([-1, 1]) for v in self.unprimed}
            pt.update(params or {})
            for b, u in zip(back, self.unprimed):
                val = complex(eval_numeric(b, pt, funcs=self.registry))
                if abs(val - pt[u]) > tol * max(1.0, abs(pt[u])):
                    return False
        return True


def identity_transformation(n: int = 1) -> Transformation:
    xs, ps = phase_variables(n, True)
    ux, up = phase_variables(n)
    return Transformation(n, tuple(var(v) for v in xs + ps), tuple(var(v) for v in ux + up), "id")


def interchange(n: int = 1) -> Transformation:
    """``I(x', p') = (-p', x')``."""
    xs, ps = phase_variables(n, True)
    ux, up = phase_variables(n)
    fwd = tuple(-var(p) for p in ps) + tuple(var(x) for x in xs)
    inv = tuple(var(p) for p in up) + tuple(-var(x) for x in ux)
    return Transformation(n, fwd, inv, "I")


# -- generating functions --------------------------------------------------------

@dataclass(frozen=True)
class GeneratingFunction:
    """Generating-function data.

    ``phi1``/``phi2`` are abstract function names (``"phi"``) or expressions in
    the dummy variable ``u``.  ``phi1_inverse`` (also in ``u``) enables the
    closed-form inverse map.  For ``n = 2`` with kind ``F1``, ``phi1`` is a pair
    of expressions and ``phi2`` an expression in ``xp1, xp2``.
    """

    kind: str
    phi1: object = None
    phi2: object = 0
    phi1_inverse: object = None
    a: object = None
    b: object = None
    c: object = None
    d: object = None
    n: int = 1
    forward: "tuple | None" = None
    inverse: "tuple | None" = None

    def __post_init__(self):
        kind = self.kind.upper() if self.kind[0] in "fF" else self.kind.lower()
        object.__setattr__(self, "kind", kind)
        if kind not in {"F1", "F2", "F3", "F4", "linear", "explicit"}:
            raise TransformError(f"unknown generating-function kind {self.kind!r}")
        if kind == "linear":
            vals = [as_expr(v) for v in (self.a, self.b, self.c, self.d)]
            if not (vals[0] * vals[3] - vals[1] * vals[2] - 1).is_zero():
                raise TransformError("linear generating function needs ad - bc = 1")
            if vals[1].is_zero():
                raise TransformError("linear generating function needs b != 0")


def _fn(spec, order: int, arg: Expr) -> Expr:
    if isinstance(spec, str):
        return func(spec, arg, order)
    e = as_expr(spec)
    for _ in range(order):
        e = differentiate(e, DUMMY)
    return substitute(e, {DUMMY: arg})


def build_transformation(g: GeneratingFunction) -> Transformation:
    """Closed-form ``T`` for the generating-function kinds."""
    if g.kind == "explicit":
        return Transformation(g.n, tuple(g.forward), None if g.inverse is None else tuple(g.inverse), "explicit")
    if g.kind == "linear":
        a, b, c, d = (as_expr(v) for v in (g.a, g.b, g.c, g.d))
        X, P, x, p = var("xp"), var("pp"), var("x"), var("p")
        return Transformation(1, (d * X - b * P, -c * X + a * P), (a * x + b * p, c * x + d * p), "linear")
    if g.n != 1:
        if g.kind != "F1":
            raise TransformError("only F1 generating functions are supported for N > 1")
        return _build_f1_multi(g)
    X, P, x, p = var("xp"), var("pp"), var("x"), var("p")
    if g.kind in ("F1", "F4"):
        phi1, d1, d2 = _fn(g.phi1, 0, X), _fn(g.phi1, 1, X), _fn(g.phi2, 1, X)
    else:
        phi1, d1, d2 = _fn(g.phi1, 0, P), _fn(g.phi1, 1, P), _fn(g.phi2, 1, P)
    _check_invertible(d1)
    inv1 = d1.inverse()
    if g.kind == "F1":
        fwd = (-inv1 * P - inv1 * d2, phi1)
    elif g.kind == "F2":
        fwd = (phi1, -inv1 * X - inv1 * d2)
    elif g.kind == "F3":
        fwd = (inv1 * X - inv1 * d2, phi1)
    else:
        fwd = (phi1, inv1 * P - inv1 * d2)
    inv = None
    if g.phi1_inverse is not None:
        inv = _closed_inverse(g, x, p)
    return Transformation(1, fwd, inv, g.kind)


def _closed_inverse(g: GeneratingFunction, x: Expr, p: Expr) -> tuple:
    # solve the defining relations for (x', p') given phi1^-1
    if g.kind == "F1":
        xp = substitute(as_expr(g.phi1_inverse), {DUMMY: p})
        return (xp, -x * _fn(g.phi1, 1, xp) - _fn(g.phi2, 1, xp))
    if g.kind == "F4":
        xp = substitute(as_expr(g.phi1_inverse), {DUMMY: x})
        return (xp, p * _fn(g.phi1, 1, xp) + _fn(g.phi2, 1, xp))
    if g.kind == "F2":
        pp = substitute(as_expr(g.phi1_inverse), {DUMMY: x})
        return (-p * _fn(g.phi1, 1, pp) - _fn(g.phi2, 1, pp), pp)
    pp = substitute(as_expr(g.phi1_inverse), {DUMMY: p})
    return (x * _fn(g.phi1, 1, pp) + _fn(g.phi2, 1, pp), pp)


def _check_invertible(d1: Expr):
    if d1.is_zero():
        raise TransformError("phi1 has vanishing derivative; not bijective")
    if not d1.is_monomial():
        raise TransformError(f"phi1' = {d1} is not an invertible monomial expression")


def _build_f1_multi(g: GeneratingFunction) -> Transformation:
    xs, ps = phase_variables(g.n, True)
    phi1 = [as_expr(c) for c in g.phi1]
    phi2 = as_expr(g.phi2)
    # jac[i][j] = d phi1^j / d x'^i
    jac = [[differentiate(phi1[j], xs[i]) for j in range(g.n)] for i in range(g.n)]
    jinv = inverse_matrix(jac)
    grad2 = [differentiate(phi2, v) for v in xs]
    xcomp = []
    for k in range(g.n):
        e = ZERO_EXPR
        for i in range(g.n):
            e = e - jinv[k][i] * (var(ps[i]) + grad2[i])
        xcomp.append(e)
    return Transformation(g.n, tuple(xcomp) + tuple(phi1), None, "F1")


def generating_function_expr(g: GeneratingFunction) -> Expr:
    """The generating function itself, in its mixed variables (``x, xp`` for F1)."""
    x, X, p, P = var("x"), var("xp"), var("p"), var("pp")
    if g.kind == "F1":
        return x * _fn(g.phi1, 0, X) + _fn(g.phi2, 0, X)
    if g.kind == "F2":
        return -p * _fn(g.phi1, 0, P) - _fn(g.phi2, 0, P)
    if g.kind == "F3":
        return x * _fn(g.phi1, 0, P) + _fn(g.phi2, 0, P)
    if g.kind == "F4":
        return -p * _fn(g.phi1, 0, X) - _fn(g.phi2, 0, X)
    if g.kind == "linear":
        a, b, d = (as_expr(v) for v in (g.a, g.b, g.d))
        binv = b.inverse() if b.is_monomial() else None
        if binv is None:
            raise TransformError("b must be a monomial for the symbolic generating function")
        return binv * x * X - (a * binv * x * x).scale(Fraction(1, 2)) - (d * binv * X * X).scale(Fraction(1, 2))
    raise TransformError(f"no generating function for kind {g.kind}")


def check_generating_relations(g: GeneratingFunction) -> bool:
    """The defining relations hold identically after substituting ``T``."""
    T = build_transformation(g)
    F = generating_function_expr(g)
    X, P = var("xp"), var("pp")
    xT, pT = T.forward
    if g.kind in ("F1", "linear"):
        at = {"x": xT}
        return ((substitute(differentiate(F, "x"), at) - pT).is_zero()
                and (substitute(-differentiate(F, "xp"), at) - P).is_zero())
    if g.kind == "F2":
        at = {"p": pT}
        return ((substitute(-differentiate(F, "p"), at) - xT).is_zero()
                and (substitute(differentiate(F, "pp"), at) - X).is_zero())
    if g.kind == "F3":
        at = {"x": xT}
        return ((substitute(differentiate(F, "x"), at) - pT).is_zero()
                and (substitute(differentiate(F, "pp"), at) - X).is_zero())
    at = {"p": pT}
    return ((substitute(-differentiate(F, "p"), at) - xT).is_zero()
            and (substitute(-differentiate(F, "xp"), at) - P).is_zero())


def composition_partner(g: GeneratingFunction) -> Transformation:
    """Build F2/F3/F4 maps from F1 and the interchange map.

    The printed F2 and F4 families match the composites only after flipping
    signs of the generating data: ``T2[f1, f2] = I o T1[-f1, -f2] o I^-1`` and
    ``T4[f1, f2] = I^-1 o T1[f1, -f2]``; ``T3[f1, f2] = T1[f1, f2] o I^-1``.
    """
    I = interchange(1)
    Iinv = I.inverted()
    neg = _negate_fn
    if g.kind == "F2":
        t1 = build_transformation(GeneratingFunction("F1", neg(g.phi1), neg(g.phi2)))
        return I.compose(t1).compose(Iinv)
    if g.kind == "F3":
        t1 = build_transformation(GeneratingFunction("F1", g.phi1, g.phi2))
        return t1.compose(Iinv)
    if g.kind == "F4":
        t1 = build_transformation(GeneratingFunction("F1", g.phi1, neg(g.phi2)))
        return Iinv.compose(t1)
    raise TransformError("composition partner defined for F2, F3, F4")


def _negate_fn(spec):
    if isinstance(spec, str):
        return -func(spec, var(DUMMY), 0)
    return -as_expr(spec)


# -- pushforward derivations and transformed star products ---------------------------

def pushforward_derivations(T: Transformation) -> tuple:
    """``(Dx, Dp)`` with ``(d_b f) o T = D_b (f o T)``."""
    if T.fields is not None:
        return tuple(T.fields[: T.n]), tuple(T.fields[T.n:])
    if T.n > 2:
        raise TransformError("symbolic Jacobian inversion is limited to N <= 2; supply fields")
    jinv = inverse_matrix(T.jacobian())
    prim = T.primed
    out = []
    for b in range(2 * T.n):
        comps = {prim[a]: jinv[a][b] for a in range(2 * T.n) if not jinv[a][b].is_zero()}
        out.append(vector_field(prim, comps))
    return tuple(out[: T.n]), tuple(out[T.n:])


def check_pushforward(T: Transformation, degree: int = 3) -> bool:
    """Defining rule on all monomials of total degree <= ``degree``."""
    dx, dp = pushforward_derivations(T)
    fields = list(dx) + list(dp)
    for mono in _monomials(T.unprimed, degree):
        fT = T.pullback(mono)
        for v, D in zip(T.unprimed, fields):
            lhs = T.pullback(differentiate(mono, v))
            if not (lhs - apply(D, fT)).is_zero():
                return False
    return True


def _monomials(names, degree):
    out = [ONE_EXPR]
    frontier = [(ONE_EXPR, 0)]
    for _ in range(degree):
        nxt = []
        for m, start in frontier:
            for i in range(start, len(names)):
                e = m * var(names[i])
                out.append(e)
                nxt.append((e, i))
        frontier = nxt
    return out


def transformed_star(T: Transformation) -> StarProduct:
    dx, dp = pushforward_derivations(T)
    xs, ps = phase_variables(T.n, True)
    return StarProduct(xs, ps, dx, dp, "transformed")


def star_compatibility(T: Transformation, f, g, K: "int | None" = DEFAULT_K, sp=None) -> bool:
    """``(f * g) o T = (f o T) *'_T (g o T)`` up to ``hbar**K``."""
    sp = sp or transformed_star(T)
    moy = StarProduct.moyal(T.n)
    lhs = T.pullback(star_product(moy, f, g, K).to_expr())
    rhs = star_product(sp, T.pullback(f), T.pullback(g), K).to_expr()
    return (lhs - rhs).truncate_hbar(K).is_zero()


@dataclass(frozen=True)
class CanonicityReport:
    classical: bool
    quantum: bool
    jacobian_det: str
    brackets: dict

    def to_json(self) -> dict:
        return {"classical": self.classical, "quantum": self.quantum,
                "jacobian_det": self.jacobian_det, "brackets": self.brackets}


def canonicity_check(T: Transformation, K: int = DEFAULT_K, sp=None) -> CanonicityReport:
    sp = sp or transformed_star(T)
    xs, ps = phase_variables(T.n, True)
    J = T.jacobian_det()
    classical = (J - 1).is_zero()
    quantum = True
    brackets = {}
    for i, xi in enumerate(xs):
        for j, pj in enumerate(ps):
            want = ONE_EXPR if i == j else ZERO_EXPR
            cl = field_bracket(sp, var(xi), var(pj))
            classical = classical and (cl - want).is_zero()
            qb = moyal_bracket(sp, var(xi), var(pj), K).to_expr()
            ok = (qb - want).is_zero()
            quantum = quantum and ok
            brackets[f"[[{xi},{pj}]]"] = str(qb)
    pairs = [(a, b) for grp in (xs, ps) for k, a in enumerate(grp) for b in grp[k + 1:]]
    for a, b in pairs:
        qb = moyal_bracket(sp, var(a), var(b), K).to_expr()
        classical = classical and field_bracket(sp, var(a), var(b)).is_zero()
        quantum = quantum and qb.is_zero()
        brackets[f"[[{a},{b}]]"] = str(qb)
    return CanonicityReport(classical, quantum, str(J), brackets)


def primed_operators(T: Transformation, K: int = DEFAULT_K, sp=None) -> tuple:
    """Left star-multiplication by ``x'^i`` and ``p'_j`` under the transformed product."""
    from .starprod import left_mult_operator
    sp = sp or transformed_star(T)
    xs, ps = phase_variables(T.n, True)
    return ([left_mult_operator(sp, var(v), K) for v in xs],
            [left_mult_operator(sp, var(v), K) for v in ps])


# -- quantum flows ------------------------------------------------------------------

TIME = "t"
_LIE_CAP = 40


def _lie_series(f: Expr, H: Expr, sp: StarProduct, t: Expr) -> "Expr | None":
    """``sum_k t^k/k! ad^k f`` with ``ad = [[., H]]``, or None if it does not terminate."""
    out = ZERO_EXPR
    term = f
    fact = 1
    for k in range(_LIE_CAP):
        if term.is_zero():
            return out
        out = out + (term * t ** k).scale(Fraction(1, fact))
        term = moyal_bracket(sp, term, H, None).to_expr()
        fact *= k + 1
    return None


def _quadratic_matrix(H: Expr, names: Sequence[str]):
    """Hamilton vector field ``z -> A z + b`` of a quadratic ``H`` (or None)."""
    if not H.is_polynomial_in(names) or H.degree_in(names) > 2:
        return None
    n = len(names) // 2
    grads = []
    for i in range(n):
        grads.append(differentiate(H, names[n + i]))       # xdot = dH/dp
    for i in range(n):
        grads.append(-differentiate(H, names[i]))          # pdot = -dH/dx
    A = [[differentiate(g, v) for v in names] for g in grads]
    zero = {v: ZERO_EXPR for v in names}
    b = [substitute(g, zero) for g in grads]
    return A, b


def _matmul(A, B):
    n, m, k = len(A), len(B[0]), len(B)
    return [[sum((A[i][l] * B[l][j] for l in range(k)), ZERO_EXPR) for j in range(m)] for i in range(n)]


def _oscillator_flow(A, b, names, t: Expr):
    """Closed form for one degree of freedom with ``A^2 = -Omega^2``."""
    A2 = _matmul(A, A)
    if not (A2[0][1].is_zero() and A2[1][0].is_zero() and (A2[0][0] - A2[1][1]).is_zero()):
        return None
    w2 = -A2[0][0]
    omega = _monomial_sqrt(w2)
    if omega is None:
        return None
    c, s = cos(omega * t), sin(omega * t)
    winv = omega.inverse()
    z = [var(v) for v in names]
    out = []
    for i in range(2):
        e = c * z[i] + s * winv * (A[i][0] * z[0] + A[i][1] * z[1])
        # affine part: (sin/omega) b + ((1 - cos)/omega^2) A b
        Ab = A[i][0] * b[0] + A[i][1] * b[1]
        e = e + s * winv * b[i] + (ONE_EXPR - c) * winv * winv * Ab
        out.append(e)
    return tuple(out)


def _monomial_sqrt(e: Expr) -> "Expr | None":
    if not e.is_monomial() or e.is_zero():
        return None
    (mono, coef), = e.terms.items()
    if not coef.is_real() or coef.re <= 0:
        return None
    from .expr import _exact_sqrt
    r = _exact_sqrt(coef.re)
    if r is None or any(k % 2 for _, k in mono):
        return None
    out = as_expr(r)
    for atom, k in mono:
        if atom.kind != 0:
            return None
        out = out * var(atom.name) ** (k // 2)
    return out


def quantum_flow(H, n: "int | None" = None, t: str = TIME) -> Transformation:
    """Flow of ``H`` as a coordinate change.

    ``inverse`` holds ``Phi_t(x, p)`` (the Heisenberg trajectories); ``forward``
    is ``Phi_{-t}`` in primed variables, the convention under which the
    generating-function form of the flow is written.
    """
    from .starprod import _infer_n
    H = as_expr(H)
    n = n or _infer_n(H)
    ux, up = phase_variables(n)
    names = ux + up
    sp = StarProduct.moyal(n)
    tt = var(t)
    comps = [_lie_series(var(v), H, sp, tt) for v in names]
    if any(c is None for c in comps):
        comps = None
        quad = _quadratic_matrix(H, names)
        if quad is not None and n == 1:
            comps = _oscillator_flow(quad[0], quad[1], names, tt)
        if comps is None:
            raise TransformError("Hamiltonian outside the supported flow catalog")
    inv = tuple(comps)
    prim = phase_variables(n, True)
    ren = {u: var(p) for u, p in zip(names, prim[0] + prim[1])}
    ren[t] = -tt
    fwd = tuple(substitute(c, ren) for c in inv)
    return Transformation(n, fwd, inv, "flow")


def verify_flow(T: Transformation, H, t: str = TIME) -> bool:
    """Exact check that ``T`` is ``Phi_{-t}`` (and its inverse ``Phi_t``) for ``H``."""
    H = as_expr(H)
    sp = StarProduct.moyal(T.n)
    spp = StarProduct.moyal(T.n, primed=True)
    Hp = substitute(H, {u: var(p) for u, p in zip(T.unprimed, T.primed)})
    for c in T.forward:
        rhs = moyal_bracket(spp, c, Hp, None).to_expr()
        if not (differentiate(c, t) + rhs).is_zero():
            return False
    if T.inverse is not None:
        for c in T.inverse:
            rhs = moyal_bracket(sp, c, H, None).to_expr()
            if not (differentiate(c, t) - rhs).is_zero():
                return False
    at0 = [substitute(c, {t: ZERO_EXPR}) for c in T.forward]
    return all((a - var(v)).is_zero() for a, v in zip(at0, T.primed))
