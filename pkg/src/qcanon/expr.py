"""Minimal exact computer-algebra core.

An :class:`Expr` is a finite sum of monomials with exact Gaussian-rational
coefficients.  A monomial is a product of atoms raised to integer (possibly
negative) powers.  Atoms are variables, applications of named smooth
functions, ``sgn``, ``abs`` and ``sqrtabs`` (the value ``sqrt(|u|)``).

Every constructor returns the canonical form, so structural equality is
equality under the rewrite system::

    sgn(u)^2 -> 1            abs(u)*sgn(u) -> u        abs(u)^2 -> u^2
    sqrtabs(u)^2 -> |u|      sin(u)^2 -> 1 - cos(u)^2

For monomial ``u`` the absolute value is always written as ``u*sgn(u)``.
All rules hold away from ``u = 0``; distributional terms are dropped.
"""

from __future__ import annotations

from fractions import Fraction
from functools import lru_cache
from math import isqrt
from types import MappingProxyType
from typing import Callable, Iterable, Mapping

import numpy as np

from .coeff import GaussRat, ONE, ZERO

HBAR = "hbar"

VAR, FUNC, SGN, ABS, SQRTABS = range(5)
KNOWN_FUNCS = frozenset({"sin", "cos", "exp"})


class ExprError(Exception):
    pass


class UnknownSymbolError(ExprError):
    pass


class SingularLocusError(ExprError, ZeroDivisionError):
    pass


class MissingEvaluatorError(ExprError):
    pass


class Atom:
    __slots__ = ("kind", "name", "order", "arg", "key", "_hash")

    def __init__(self, kind: int, name: str = "", order: int = 0, arg: "Expr | None" = None):
        self.kind = kind
        self.name = name
        self.order = order
        self.arg = arg
        if kind == VAR:
            self.key = (0, name)
        elif kind == FUNC:
            self.key = (1, name, order, arg.key())
        else:
            self.key = (kind, arg.key())
        self._hash = hash(self.key)

    def __eq__(self, other):
        return isinstance(other, Atom) and self._hash == other._hash and self.key == other.key

    def __hash__(self):
        return self._hash

    def __repr__(self):
        return f"Atom({_atom_str(self)})"


def _sort_mono(factors: dict) -> tuple:
    return tuple(sorted(factors.items(), key=lambda t: t[0].key))


def _is_special(atom: Atom) -> bool:
    return atom.kind >= SGN or (atom.kind == FUNC and atom.name == "sin")


def _canon(factors: dict, coef: GaussRat) -> list:
    """Canonicalize a product of atom powers; returns ``[(mono, coef), ...]``."""
    if not any(_is_special(a) for a in factors):
        return [(_sort_mono({a: e for a, e in factors.items() if e}), coef)]
    extra = []
    f = {}
    for atom, e in factors.items():
        if not e:
            continue
        k = atom.kind
        if k == SGN:
            if e % 2:
                f[atom] = 1
        elif k == SQRTABS and not 0 <= e <= 1:
            q, r = divmod(e, 2)
            if r:
                f[atom] = 1
            extra.append(abs_(atom.arg) ** q)
        elif k == ABS and e >= 2:
            q, r = divmod(e, 2)
            if r:
                f[atom] = 1
            extra.append(atom.arg ** (2 * q))
        elif k == FUNC and atom.name == "sin" and e >= 2:
            if e > 2:
                f[atom] = e - 2
            extra.append(ONE_EXPR - func("cos", atom.arg) ** 2)
        else:
            f[atom] = e
    for atom in [a for a in f if a.kind == ABS]:
        s = Atom(SGN, arg=atom.arg)
        if f.get(atom, 0) >= 1 and s in f:
            f[atom] -= 1
            del f[s]
            if not f[atom]:
                del f[atom]
            extra.append(atom.arg)
    mono = _sort_mono(f)
    if not extra:
        return [(mono, coef)]
    out = Expr._raw({mono: coef})
    for x in extra:
        out = out * x
    return list(out.terms.items())


class Expr:
    """Canonical sum of monomials; immutable."""

    __slots__ = ("terms", "_key", "_hash")

    def __init__(self, value=0):
        if isinstance(value, Expr):
            self.terms = value.terms
        else:
            c = GaussRat.coerce(value)
            self.terms = {} if c.is_zero() else {(): c}
        self._key = None
        self._hash = None

    @classmethod
    def _raw(cls, terms: dict) -> "Expr":
        e = cls.__new__(cls)
        e.terms = terms
        e._key = None
        e._hash = None
        return e

    @classmethod
    def _collect(cls, pairs: Iterable) -> "Expr":
        acc: dict = {}
        for mono, c in pairs:
            prev = acc.get(mono)
            acc[mono] = c if prev is None else prev + c
        return cls._raw({m: c for m, c in acc.items() if not c.is_zero()})

    # -- structure -------------------------------------------------------
    def key(self):
        if self._key is None:
            self._key = tuple(sorted(
                (tuple((a.key, e) for a, e in m), c.re, c.im) for m, c in self.terms.items()))
        return self._key

    def __hash__(self):
        if self._hash is None:
            self._hash = hash(self.key())
        return self._hash

    def __eq__(self, other):
        if not isinstance(other, Expr):
            try:
                other = as_expr(other)
            except TypeError:
                return NotImplemented
        if self.terms.keys() != other.terms.keys():
            return False
        return all(c == other.terms[m] for m, c in self.terms.items())

    def is_zero(self) -> bool:
        return not self.terms

    def is_constant(self) -> bool:
        return not self.terms or (len(self.terms) == 1 and () in self.terms)

    def constant_value(self) -> GaussRat:
        return self.terms.get((), ZERO)

    def is_monomial(self) -> bool:
        return len(self.terms) == 1

    def atoms(self) -> set:
        out = set()
        for m in self.terms:
            for a, _ in m:
                out.add(a)
        return out

    def free_vars(self) -> set:
        out = set()
        for a in self.atoms():
            if a.kind == VAR:
                out.add(a.name)
            else:
                out |= a.arg.free_vars()
        return out

    def functions(self) -> set:
        out = set()
        for a in self.atoms():
            if a.kind == FUNC:
                out.add(a.name)
            if a.arg is not None:
                out |= a.arg.functions()
        return out

    # -- arithmetic ------------------------------------------------------
    def __add__(self, other):
        other = as_expr(other)
        if not other.terms:
            return self
        if not self.terms:
            return other
        acc = dict(self.terms)
        for m, c in other.terms.items():
            prev = acc.get(m)
            if prev is None:
                acc[m] = c
            else:
                s = prev + c
                if s.is_zero():
                    del acc[m]
                else:
                    acc[m] = s
        return Expr._raw(acc)

    __radd__ = __add__

    def __neg__(self):
        return Expr._raw({m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-as_expr(other))

    def __rsub__(self, other):
        return as_expr(other) - self

    def scale(self, c) -> "Expr":
        c = GaussRat.coerce(c)
        if c.is_zero():
            return ZERO_EXPR
        return Expr._raw({m: v * c for m, v in self.terms.items()})

    def __mul__(self, other):
        if not isinstance(other, Expr):
            try:
                return self.scale(other)
            except TypeError:
                return NotImplemented
        if not self.terms or not other.terms:
            return ZERO_EXPR
        pairs = []
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                c = c1 * c2
                if not m1:
                    pairs.append((m2, c))
                    continue
                if not m2:
                    pairs.append((m1, c))
                    continue
                for m, k in _mono_mul(m1, m2):
                    pairs.append((m, k * c if k is not ONE else c))
        return Expr._collect(pairs)

    def __rmul__(self, other):
        return self.__mul__(other)

    def __pow__(self, n: int):
        if not isinstance(n, int):
            raise ExprError("only integer powers are supported")
        if n < 0:
            return self.inverse() ** (-n)
        out = ONE_EXPR
        base = self
        while n:
            if n & 1:
                out = out * base
            n >>= 1
            if n:
                base = base * base
        return out

    def inverse(self) -> "Expr":
        if len(self.terms) != 1:
            raise ExprError(f"cannot invert non-monomial expression {self}")
        (mono, c), = self.terms.items()
        return Expr._collect(_canon({a: -e for a, e in mono}, c.inverse()))

    def __truediv__(self, other):
        other = as_expr(other)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return as_expr(other) * self.inverse()

    def conjugate(self) -> "Expr":
        """Complex conjugate; variables and atoms are real-valued."""
        return Expr._raw({m: c.conjugate() for m, c in self.terms.items()})

    # -- hbar grading ----------------------------------------------------
    def hbar_split(self) -> dict:
        """Map ``k -> coefficient of hbar**k`` (hbar-free Exprs)."""
        h = var_atom(HBAR)
        parts: dict = {}
        for m, c in self.terms.items():
            k = 0
            rest = []
            for a, e in m:
                if a == h:
                    k = e
                else:
                    rest.append((a, e))
            parts.setdefault(k, {})[tuple(rest)] = c
        return {k: Expr._raw(t) for k, t in sorted(parts.items())}

    def hbar_degrees(self) -> set:
        h = var_atom(HBAR)
        return {dict(m).get(h, 0) for m in self.terms}

    def truncate_hbar(self, K: "int | None") -> "Expr":
        if K is None:
            return self
        h = var_atom(HBAR)
        return Expr._raw({m: c for m, c in self.terms.items() if dict(m).get(h, 0) <= K})

    # -- calculus and substitution ----------------------------------------
    def diff(self, v: str) -> "Expr":
        return differentiate(self, v)

    def subs(self, mapping: Mapping) -> "Expr":
        return substitute(self, mapping)

    def is_polynomial_in(self, names: Iterable[str]) -> bool:
        names = set(names)
        for m in self.terms:
            for a, e in m:
                if a.kind == VAR:
                    if a.name in names and e < 0:
                        return False
                elif a.arg.free_vars() & names:
                    return False
        return True

    def degree_in(self, names: Iterable[str]) -> int:
        names = set(names)
        best = -1 if not self.terms else 0
        for m in self.terms:
            best = max(best, sum(e for a, e in m if a.kind == VAR and a.name in names))
        return best

    def __str__(self):
        return to_string(self)

    def __repr__(self):
        return f"Expr({to_string(self)!r})"

    def __bool__(self):
        return bool(self.terms)


@lru_cache(maxsize=400_000)
def _mono_mul(m1: tuple, m2: tuple) -> list:
    factors = dict(m1)
    for a, e in m2:
        factors[a] = factors.get(a, 0) + e
    return _canon(factors, ONE)


ZERO_EXPR = Expr._raw({})
ONE_EXPR = Expr._raw({(): ONE})


def as_expr(value) -> Expr:
    if isinstance(value, Expr):
        return value
    return Expr(GaussRat.coerce(value))


@lru_cache(maxsize=None)
def var_atom(name: str) -> Atom:
    return Atom(VAR, name=name)


def var(name: str) -> Expr:
    return Expr._raw({((var_atom(name), 1),): ONE})


def const(value) -> Expr:
    return as_expr(value)


hbar = var(HBAR)
I_EXPR = Expr(GaussRat(0, 1))


def _atom_expr(atom: Atom, e: int = 1) -> Expr:
    return Expr._collect(_canon({atom: e}, ONE))


def _leading(u: Expr) -> GaussRat:
    return min(u.terms.items(), key=lambda t: tuple((a.key, e) for a, e in t[0]))[1]


def func(name: str, arg, order: int = 0) -> Expr:
    """Application of a named smooth function (``order`` = derivative order)."""
    arg = as_expr(arg)
    if name in KNOWN_FUNCS:
        if order:
            raise ExprError(f"{name} has no derivative-order atoms")
        if arg.is_zero():
            return ONE_EXPR if name in ("cos", "exp") else ZERO_EXPR
        if name in ("sin", "cos"):
            lead = _leading(arg)
            if lead.is_real() and lead.re < 0:
                inner = _atom_expr(Atom(FUNC, name=name, arg=-arg))
                return -inner if name == "sin" else inner
    return _atom_expr(Atom(FUNC, name=name, order=order, arg=arg))


def _sgn_of_atom_power(a: Atom, e: int) -> Expr:
    if a.kind in (SQRTABS, ABS):
        return ONE_EXPR
    if a.kind == FUNC and a.name == "exp":
        return ONE_EXPR
    if e % 2 == 0:
        return ONE_EXPR
    if a.kind == SGN:
        return _atom_expr(a)
    return _atom_expr(Atom(SGN, arg=_atom_expr(a)))


def sgn(u) -> Expr:
    u = as_expr(u)
    if u.is_zero():
        return ZERO_EXPR
    if u.is_constant():
        c = u.constant_value()
        if not c.is_real():
            raise ExprError("sgn of a complex constant")
        return Expr(1 if c.re > 0 else -1)
    if u.is_monomial():
        (mono, c), = u.terms.items()
        if not c.is_real():
            raise ExprError("sgn of a complex monomial")
        out = Expr(1 if c.re > 0 else -1)
        for a, e in mono:
            out = out * _sgn_of_atom_power(a, e)
        return out
    lead = _leading(u)
    if not lead.is_real():
        raise ExprError("sgn of a complex expression")
    s = 1 if lead.re > 0 else -1
    return _atom_expr(Atom(SGN, arg=u.scale(lead.inverse()))).scale(s)


def abs_(u) -> Expr:
    u = as_expr(u)
    if u.is_zero():
        return ZERO_EXPR
    if u.is_constant():
        c = u.constant_value()
        if not c.is_real():
            raise ExprError("abs of a complex constant")
        return Expr(abs(c.re))
    if u.is_monomial():
        return u * sgn(u)
    lead = _leading(u)
    if not lead.is_real():
        raise ExprError("abs of a complex expression")
    return _atom_expr(Atom(ABS, arg=u.scale(lead.inverse()))).scale(abs(lead.re))


def _exact_sqrt(q: Fraction) -> "Fraction | None":
    n, d = isqrt(q.numerator), isqrt(q.denominator)
    if n * n == q.numerator and d * d == q.denominator:
        return Fraction(n, d)
    return None


def sqrtabs(u) -> Expr:
    """``sqrt(|u|)`` as a dedicated atom."""
    u = as_expr(u)
    if u.is_zero():
        return ZERO_EXPR
    lead = _leading(u)
    if not lead.is_real():
        raise ExprError("sqrtabs of a complex expression")
    if u.is_constant():
        r = _exact_sqrt(abs(lead.re))
        if r is not None:
            return Expr(r)
    if lead.re < 0:
        u = -u
    if u.is_monomial():
        # |sgn| = 1 and even powers leave the root as absolute values
        (mono, c), = u.terms.items()
        outside = ONE_EXPR
        inside = {}
        for a, e in mono:
            if a.kind == SGN:
                continue
            if e // 2:
                outside = outside * abs_(_atom_expr(a) ** (e // 2))
            if e % 2:
                inside[a] = 1
        r = _exact_sqrt(c.re)
        if r is not None:
            outside, c = outside.scale(r), ONE
        if inside or c != ONE:
            rest = Expr._raw({_sort_mono(inside): c})
            outside = outside * _atom_expr(Atom(SQRTABS, arg=rest))
        return outside
    return _atom_expr(Atom(SQRTABS, arg=u))


def sin(u) -> Expr:
    return func("sin", u)


def cos(u) -> Expr:
    return func("cos", u)


def exp(u) -> Expr:
    return func("exp", u)


# -- differentiation -----------------------------------------------------------

@lru_cache(maxsize=100_000)
def _atom_diff(a: Atom, v: str) -> Expr:
    if a.kind == VAR:
        return ONE_EXPR if a.name == v else ZERO_EXPR
    du = differentiate(a.arg, v)
    if du.is_zero() or a.kind == SGN:
        return ZERO_EXPR
    if a.kind == FUNC:
        if a.name == "sin":
            return cos(a.arg) * du
        if a.name == "cos":
            return -sin(a.arg) * du
        if a.name == "exp":
            return _atom_expr(a) * du
        return func(a.name, a.arg, a.order + 1) * du
    if a.kind == ABS:
        return sgn(a.arg) * du
    # SQRTABS: d sqrt|u| = sgn(u) u' / (2 sqrt|u|)
    return (sgn(a.arg) * du * _atom_expr(a, -1)).scale(Fraction(1, 2))


@lru_cache(maxsize=200_000)
def _mono_diff(mono: tuple, v: str) -> Expr:
    out = ZERO_EXPR
    for i, (a, e) in enumerate(mono):
        da = _atom_diff(a, v)
        if da.is_zero():
            continue
        rest = dict(mono)
        rest[a] = e - 1
        out = out + Expr._collect(_canon(rest, GaussRat(e))) * da
    return out


def differentiate(e: Expr, v: str, variables: "Iterable[str] | None" = None) -> Expr:
    """Exact derivative of ``e`` with respect to the variable ``v``."""
    if variables is not None and v not in set(variables):
        raise UnknownSymbolError(f"unknown variable {v!r}")
    if not isinstance(v, str) or not v.isidentifier():
        raise UnknownSymbolError(f"invalid variable name {v!r}")
    e = as_expr(e)
    out = ZERO_EXPR
    for m, c in e.terms.items():
        if not m:
            continue
        d = _mono_diff(m, v)
        if d.terms:
            out = out + d.scale(c)
    return out


def normalize(e) -> Expr:
    """Canonical form.  Constructors already canonicalize; this rebuilds from atoms."""
    e = as_expr(e)
    out = ZERO_EXPR
    for m, c in e.terms.items():
        term = Expr(c)
        for a, k in m:
            term = term * (_rebuild_atom(a) ** k)
        out = out + term
    return out


def _rebuild_atom(a: Atom) -> Expr:
    if a.kind == VAR:
        return var(a.name)
    arg = normalize(a.arg)
    return _make_atom_like(a, arg)


def _make_atom_like(a: Atom, arg: Expr) -> Expr:
    if a.kind == FUNC:
        return func(a.name, arg, a.order)
    if a.kind == SGN:
        return sgn(arg)
    if a.kind == ABS:
        return abs_(arg)
    return sqrtabs(arg)


# -- substitution ------------------------------------------------------------------

def substitute(e: Expr, mapping: Mapping) -> Expr:
    """Replace variables by expressions (simultaneously)."""
    mapping = {k: as_expr(v) for k, v in mapping.items()}
    cache: dict = {}

    def atom_value(a: Atom) -> Expr:
        got = cache.get(a)
        if got is not None:
            return got
        if a.kind == VAR:
            got = mapping.get(a.name)
            if got is None:
                got = _atom_expr(a)
        else:
            arg = sub(a.arg)
            got = _atom_expr(a) if arg == a.arg else _make_atom_like(a, arg)
        cache[a] = got
        return got

    def sub(x: Expr) -> Expr:
        out = ZERO_EXPR
        for m, c in x.terms.items():
            term = Expr(c)
            for a, k in m:
                term = term * (atom_value(a) ** k)
            out = out + term
        return out

    return sub(as_expr(e))


def compose_funcs(e: Expr, definitions: Mapping) -> Expr:
    """Replace applications of named functions by concrete definitions.

    ``definitions`` maps a function name to an Expr in the dummy variable
    ``u``; derivative-order atoms are replaced by symbolic derivatives.
    """
    cache: dict = {}

    def deriv(name: str, order: int) -> Expr:
        key = (name, order)
        if key not in cache:
            cache[key] = definitions[name] if order == 0 else differentiate(deriv(name, order - 1), "u")
        return cache[key]

    def atom_value(a: Atom) -> Expr:
        if a.kind == VAR:
            return _atom_expr(a)
        arg = walk(a.arg)
        if a.kind == FUNC and a.name in definitions:
            return substitute(deriv(a.name, a.order), {"u": arg})
        return _make_atom_like(a, arg)

    def walk(x: Expr) -> Expr:
        out = ZERO_EXPR
        for m, c in x.terms.items():
            term = Expr(c)
            for a, k in m:
                term = term * (atom_value(a) ** k)
            out = out + term
        return out

    return walk(as_expr(e))


# -- function registry ---------------------------------------------------------------

class FuncRegistry:
    """Frozen map from function names to concrete definitions.

    A definition is an Expr in the dummy variable ``u`` (derivatives are then
    symbolic), or a numeric callable ``f(order, values) -> values``.
    """

    def __init__(self, definitions: "Mapping[str, Expr] | None" = None,
                 numeric: "Mapping[str, Callable] | None" = None):
        self.definitions = MappingProxyType(dict(definitions or {}))
        self.numeric = MappingProxyType(dict(numeric or {}))

    def concretize(self, e: Expr) -> Expr:
        return compose_funcs(e, self.definitions) if self.definitions else as_expr(e)

    def evaluator(self, name: str, order: int) -> Callable:
        if name in self.definitions:
            d = self.definitions[name]
            for _ in range(order):
                d = differentiate(d, "u")
            return lambda values, _d=d: eval_numeric(_d, {"u": values}, funcs=self)
        if name in self.numeric:
            f = self.numeric[name]
            return lambda values: f(order, values)
        raise MissingEvaluatorError(f"no numeric evaluator for function {name!r}")


EMPTY_REGISTRY = FuncRegistry()


# -- numeric evaluation -------------------------------------------------------------

_NUMERIC_KNOWN = {"sin": np.sin, "cos": np.cos, "exp": np.exp}


def eval_numeric(e, point: Mapping, hbar: "float | None" = None,
                 funcs: "FuncRegistry | None" = None):
    """Evaluate at a point (scalars or numpy arrays).

    Raises :class:`SingularLocusError` when an atom with a negative power
    vanishes at the point.
    """
    e = as_expr(e)
    funcs = funcs or EMPTY_REGISTRY
    env = dict(point)
    if hbar is not None:
        env[HBAR] = hbar
    cache: dict = {}

    def atom_val(a: Atom):
        if a in cache:
            return cache[a]
        if a.kind == VAR:
            if a.name not in env:
                raise UnknownSymbolError(f"unassigned variable {a.name!r}")
            val = env[a.name]
        else:
            u = ev(a.arg)
            if a.kind == SGN:
                val = np.sign(np.real(u))
            elif a.kind == ABS:
                val = np.abs(u)
            elif a.kind == SQRTABS:
                val = np.sqrt(np.abs(u))
            elif a.name in _NUMERIC_KNOWN:
                val = _NUMERIC_KNOWN[a.name](u)
            else:
                val = funcs.evaluator(a.name, a.order)(u)
        cache[a] = val
        return val

    def ev(x: Expr):
        total = 0
        for m, c in x.terms.items():
            term = complex(c)
            for a, k in m:
                v = atom_val(a)
                if k < 0:
                    if np.any(np.asarray(v) == 0):
                        raise SingularLocusError(f"{_atom_str(a)} vanishes at the evaluation point")
                    term = term / (v ** (-k) if not isinstance(v, np.ndarray) else np.power(v.astype(complex), -k))
                else:
                    term = term * (v ** k)
            total = total + term
        return total

    out = ev(e)
    if isinstance(out, np.ndarray):
        return out.astype(complex)
    return complex(out)


# -- printing ------------------------------------------------------------------

def _atom_str(a: Atom) -> str:
    if a.kind == VAR:
        return a.name
    inner = to_string(a.arg)
    if a.kind == FUNC:
        return f"{a.name}{chr(39) * a.order}({inner})"
    return {SGN: "sgn", ABS: "abs", SQRTABS: "sqrtabs"}[a.kind] + f"({inner})"


def _mono_str(mono: tuple) -> str:
    parts = []
    for a, e in mono:
        s = _atom_str(a)
        parts.append(s if e == 1 else f"{s}^{e}" if e > 0 else f"{s}^({e})")
    return "*".join(parts)


def to_string(e: Expr) -> str:
    """Text form accepted by :func:`parse`."""
    if not e.terms:
        return "0"
    items = sorted(e.terms.items(), key=lambda t: (
        -sum(k for _, k in t[0]), tuple((a.key, k) for a, k in t[0])))
    out = []
    for i, (m, c) in enumerate(items):
        neg = c.re < 0 if c.re else c.im < 0
        cc = -c if neg else c
        if not m:
            body = str(cc)
        elif cc == ONE:
            body = _mono_str(m)
        else:
            cs = str(cc)
            if "/" in cs and (cc.is_real() or cc.re):
                cs = f"({cs})"
            body = f"{cs}*{_mono_str(m)}"
        if i == 0:
            out.append(("-" if neg else "") + body)
        else:
            out.append((" - " if neg else " + ") + body)
    return "".join(out)


# -- parsing -----------------------------------------------------------------------

DEFAULT_VARIABLES = frozenset({"x", "p", "xp", "pp"})
DEFAULT_FUNCTIONS = frozenset({"phi", "phi1", "phi2"})
_BUILTINS = {"abs": abs_, "sgn": sgn, "sqrtabs": sqrtabs}


class ExprSyntaxError(ExprError):
    def __init__(self, message: str, position: int):
        super().__init__(f"{message} at position {position}")
        self.position = position


def variables_for(n: int) -> frozenset:
    """Phase-space variable names for dimension ``n``."""
    if n == 1:
        return DEFAULT_VARIABLES
    names = set()
    for i in range(1, n + 1):
        names |= {f"x{i}", f"p{i}", f"xp{i}", f"pp{i}"}
    return frozenset(names)


class _Parser:
    def __init__(self, text: str, variables, functions):
        self.text = text
        self.pos = 0
        self.variables = variables
        self.functions = functions

    def error(self, msg):
        raise ExprSyntaxError(msg, self.pos)

    def skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def eat(self, ch: str):
        if self.peek() != ch:
            self.error(f"expected {ch!r}")
        self.pos += 1

    def parse(self) -> Expr:
        e = self.expr()
        if self.peek():
            self.error(f"unexpected {self.peek()!r}")
        return e

    def expr(self) -> Expr:
        out = self.term()
        while self.peek() in ("+", "-"):
            op = self.text[self.pos]
            self.pos += 1
            t = self.term()
            out = out + t if op == "+" else out - t
        return out

    def term(self) -> Expr:
        out = self.factor()
        while self.peek() in ("*", "/"):
            op = self.text[self.pos]
            self.pos += 1
            f = self.factor()
            if op == "*":
                out = out * f
            else:
                try:
                    out = out / f
                except ExprError:
                    self.error("division by a non-monomial")
        return out

    def factor(self) -> Expr:
        if self.peek() == "-":
            self.pos += 1
            return -self.factor()
        base = self.atom()
        if self.peek() == "^":
            self.pos += 1
            k = self.integer()
            try:
                base = base ** k
            except ExprError:
                self.error("negative power of a non-monomial")
        return base

    def integer(self) -> int:
        if self.peek() == "(":
            self.pos += 1
            k = self.integer()
            self.eat(")")
            return k
        sign = 1
        if self.peek() == "-":
            self.pos += 1
            sign = -1
        self.skip()
        start = self.pos
        while self.pos < len(self.text) and self.text[self.pos].isdigit():
            self.pos += 1
        if start == self.pos:
            self.error("expected integer exponent")
        return sign * int(self.text[start:self.pos])

    def atom(self) -> Expr:
        ch = self.peek()
        if ch == "(":
            self.pos += 1
            e = self.expr()
            self.eat(")")
            return e
        if ch.isdigit() or ch == ".":
            start = self.pos
            while self.pos < len(self.text) and (self.text[self.pos].isdigit() or self.text[self.pos] == "."):
                self.pos += 1
            try:
                return Expr(Fraction(self.text[start:self.pos]))
            except ValueError:
                self.pos = start
                self.error("malformed number")
        if ch.isalpha() or ch == "_":
            start = self.pos
            while self.pos < len(self.text) and (self.text[self.pos].isalnum() or self.text[self.pos] == "_"):
                self.pos += 1
            name = self.text[start:self.pos]
            order = 0
            while self.pos < len(self.text) and self.text[self.pos] == "'":
                order += 1
                self.pos += 1
            if self.peek() == "(":
                if name in _BUILTINS and not order:
                    self.pos += 1
                    arg = self.expr()
                    self.eat(")")
                    return _BUILTINS[name](arg)
                if name in self.functions or name in KNOWN_FUNCS:
                    self.pos += 1
                    arg = self.expr()
                    self.eat(")")
                    try:
                        return func(name, arg, order)
                    except ExprError as exc:
                        self.pos = start
                        self.error(str(exc))
                self.pos = start
                raise UnknownSymbolError(f"unknown function {name!r} at position {start}")
            if order:
                self.pos = start
                self.error("primes are only allowed on function names")
            if name == "hbar":
                return hbar
            if name == "I":
                return I_EXPR
            if name in self.variables:
                return var(name)
            raise UnknownSymbolError(f"unknown symbol {name!r} at position {start}")
        if not ch:
            self.error("unexpected end of input")
        self.error(f"unexpected {ch!r}")


def parse(text: str, variables: "Iterable[str] | None" = None,
          functions: "Iterable[str] | None" = None, symbols: Iterable[str] = ()) -> Expr:
    """Parse the expression grammar.

    ``variables`` defaults to ``x, p, xp, pp``; ``symbols`` adds parameter
    names (e.g. ``omega``); ``functions`` declares abstract function names.
    """
    vs = set(DEFAULT_VARIABLES if variables is None else variables) | set(symbols)
    fs = set(DEFAULT_FUNCTIONS if functions is None else functions)
    return _Parser(text, vs, fs).parse()
