"""Numerical Hilbert-space layer: grid wavefunctions, Wigner-type products and kernel unitaries.

States live on a uniform periodic grid over ``[-L, L)`` (optionally shifted by
half a step so that ``x = 0`` is never a node).  The phase-space product of two
states is computed by an FFT in the relative coordinate; operators act through
spectral derivatives or, near singular points, through 8th-order finite
differences.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Mapping

import numpy as np

from .cantrans import (GeneratingFunction, TransformError, build_transformation,
                       generating_function_expr)
from .diffop import DiffOp
from .expr import Expr, SingularLocusError, as_expr, differentiate, eval_numeric, var
from .gauge import GaugeIso, OperatorPoly
from .starprod import DEFAULT_K, StarProduct, left_mult_operator

DUMMY = "u"


class GridError(ValueError):
    pass


# -- grids and states ---------------------------------------------------------------

def grid_points(L: float, M: int, shifted: bool = False) -> np.ndarray:
    dx = 2.0 * L / M
    return -L + dx * (np.arange(M) + (0.5 if shifted else 0.0))


@dataclass(frozen=True, eq=False)
class GridState:
    """Samples of a wavefunction on ``grid_points(L, M, shifted)``.

    ``source`` optionally keeps an exact evaluator, used when the state has to
    be read off the grid (otherwise trigonometric interpolation is used).
    """

    samples: np.ndarray
    L: float
    M: int
    hbar: float = 1.0
    shifted: bool = False
    source: "Callable | None" = field(default=None, repr=False)

    def __post_init__(self):
        s = np.asarray(self.samples, dtype=complex)
        if s.shape != (self.M,):
            raise GridError(f"expected {self.M} samples, got shape {s.shape}")
        object.__setattr__(self, "samples", s)

    @classmethod
    def from_function(cls, f: Callable, L: float, M: int, hbar: float = 1.0,
                      shifted: bool = False) -> "GridState":
        return cls(f(grid_points(L, M, shifted)), L, M, hbar, shifted, f)

    @property
    def x(self) -> np.ndarray:
        return grid_points(self.L, self.M, self.shifted)

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.M

    def same_grid(self, other: "GridState") -> bool:
        return (self.M == other.M and self.shifted == other.shifted
                and math.isclose(self.L, other.L) and math.isclose(self.hbar, other.hbar))

    def with_samples(self, samples) -> "GridState":
        return replace(self, samples=np.asarray(samples, dtype=complex), source=None)

    def inner(self, other: "GridState") -> complex:
        """``<self, other>`` by the (spectrally accurate) periodic trapezoid rule."""
        if not self.same_grid(other):
            raise GridError("grid mismatch")
        return complex(np.sum(np.conj(self.samples) * other.samples) * self.dx)

    def norm(self) -> float:
        return math.sqrt(max(self.inner(self).real, 0.0))

    def edge_ratio(self) -> float:
        a = np.abs(self.samples)
        return float(max(a[0], a[-1]) / a.max()) if a.max() > 0 else 0.0

    def evaluate(self, points) -> np.ndarray:
        pts = np.asarray(points, dtype=float)
        if self.source is not None:
            return np.asarray(self.source(pts), dtype=complex)
        return trig_interpolate(self.samples, self.L, self.shifted, pts)

    def to_text(self) -> str:
        head = f"# L={self.L!r} M={self.M} hbar={self.hbar!r} shifted={int(self.shifted)}"
        rows = [f"{v.real:.17g} {v.imag:.17g}" for v in self.samples]
        return "\n".join([head] + rows) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "GridState":
        lines = text.strip().splitlines()
        meta = dict(tok.split("=") for tok in lines[0].lstrip("#").split())
        vals = np.array([complex(float(a), float(b)) for a, b in (ln.split() for ln in lines[1:])])
        return cls(vals, float(meta["L"]), int(meta["M"]), float(meta["hbar"]), bool(int(meta["shifted"])))


def trig_interpolate(samples: np.ndarray, L: float, shifted: bool, points: np.ndarray,
                     chunk: int = 2048) -> np.ndarray:
    M = len(samples)
    x0 = grid_points(L, M, shifted)[0]
    coef = np.fft.fft(samples) / M
    k = 2 * np.pi * np.fft.fftfreq(M, d=2 * L / M)
    if M % 2 == 0:
        # split the Nyquist mode symmetrically so real data stays real
        coef = coef.copy()
        nyq = coef[M // 2] / 2
        coef[M // 2] = nyq
        coef = np.append(coef, nyq)
        k = np.append(k, -k[M // 2])
    flat = points.ravel()
    out = np.empty(flat.shape, dtype=complex)
    for s in range(0, len(flat), chunk):
        d = flat[s:s + chunk, None] - x0
        out[s:s + chunk] = np.exp(1j * d * k[None, :]) @ coef
    return out.reshape(points.shape)


@dataclass(frozen=True)
class Gaussian:
    """``exp(-A x^2/2 + B x + C)`` with complex ``A`` (``Re A > 0``), ``B``, ``C``."""

    A: complex
    B: complex = 0j
    C: complex = 0j

    def __post_init__(self):
        if complex(self.A).real <= 0:
            raise GridError("Gaussian needs Re A > 0")

    @classmethod
    def coherent(cls, x0: float = 0.0, p0: float = 0.0, sigma: float = 1.0,
                 hbar: float = 1.0) -> "Gaussian":
        A = 1.0 / sigma ** 2
        return cls(A, x0 * A + 1j * p0 / hbar, -0.5 * A * x0 ** 2 + 0.25 * math.log(A / math.pi))

    @classmethod
    def ground_state(cls, omega: float = 1.0, hbar: float = 1.0) -> "Gaussian":
        return cls.coherent(0.0, 0.0, math.sqrt(hbar / omega), hbar)

    def __call__(self, x):
        x = np.asarray(x)
        return np.exp(-0.5 * self.A * x * x + self.B * x + self.C)

    def sample(self, L: float, M: int, hbar: float = 1.0, shifted: bool = False) -> GridState:
        return GridState.from_function(self, L, M, hbar, shifted)

    def norm(self) -> float:
        a = self.A.real if isinstance(self.A, complex) else float(self.A)
        b = complex(self.B).real
        return math.sqrt(math.sqrt(math.pi / a) * math.exp(b * b / a + 2 * complex(self.C).real))

    def cross_wigner(self, other: "Gaussian", X, P, hbar: float = 1.0):
        """``(self* (x)_M other)(X, P)`` in closed form."""
        X = np.asarray(X, dtype=float)
        P = np.asarray(P, dtype=float)
        Ab, Bb, Cb = np.conj(self.A), np.conj(self.B), np.conj(self.C)
        A, B, C = other.A, other.B, other.C
        alpha = (A + Ab) / 4
        beta = (Ab - A) * X / 2 + (B - Bb) / 2 - 1j * P / hbar
        const = -(A + Ab) * X * X / 2 + (Bb + B) * X + Cb + C
        return np.sqrt(2 * np.pi / alpha) * np.exp(beta * beta / (2 * alpha) + const) / math.sqrt(2 * math.pi * hbar)

    def linear_image(self, a, b, c, d, hbar: float = 1.0) -> "Gaussian":
        """Closed-form image under the kernel unitary of the linear map."""
        A1 = self.A - 1j * a / (b * hbar)
        A2 = 1 / (b * b * hbar * hbar * A1) - 1j * d / (b * hbar)
        B2 = -1j * self.B / (b * hbar * A1)
        C2 = self.C + self.B ** 2 / (2 * A1) + cmath.log(cmath.sqrt(2 * math.pi / A1)) \
            - 0.5 * math.log(2 * math.pi * hbar * abs(b))
        return Gaussian(A2, B2, C2)


# -- phase-space grids ----------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class PhaseGrid:
    values: np.ndarray
    x: np.ndarray
    p: np.ndarray
    hbar: float = 1.0
    names: tuple = ("x", "p")

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dp(self) -> float:
        return float(self.p[1] - self.p[0])

    def mesh(self) -> tuple:
        return np.meshgrid(self.x, self.p, indexing="ij")

    def integral(self) -> complex:
        return complex(np.sum(self.values) * self.dx * self.dp)

    def imag_residual(self) -> float:
        return float(np.abs(self.values.imag).max() / np.abs(self.values).max())

    def with_values(self, values) -> "PhaseGrid":
        return replace(self, values=np.asarray(values))


def _correlation(phi: GridState, psi: GridState) -> np.ndarray:
    """``C[i, m] = phi*(x_i - m dx) psi(x_i + m dx)`` for ``m`` in ``[-M/2, M/2)``."""
    if not phi.same_grid(psi):
        raise GridError("grid mismatch")
    M = phi.M
    i = np.arange(M)[:, None]
    m = np.arange(-(M // 2), M - M // 2)[None, :]
    lo, hi = i - m, i + m
    ok = (lo >= 0) & (lo < M) & (hi >= 0) & (hi < M)
    a = np.where(ok, np.conj(phi.samples)[np.clip(lo, 0, M - 1)], 0)
    b = np.where(ok, psi.samples[np.clip(hi, 0, M - 1)], 0)
    return a * b


def _momentum_axis(M: int, dx: float, hbar: float) -> np.ndarray:
    dy = 2 * dx
    return 2 * np.pi * hbar / (M * dy) * np.arange(-(M // 2), M - M // 2)


def _correlation_to_phase(C: np.ndarray, dx: float, hbar: float) -> np.ndarray:
    dy = 2 * dx
    F = np.fft.fftshift(np.fft.fft(np.fft.ifftshift(C, axes=1), axis=1), axes=1)
    return F * dy / math.sqrt(2 * math.pi * hbar)


def wigner_product(phi: GridState, psi: GridState, names=("x", "p")) -> PhaseGrid:
    """``(phi* (x)_M psi)(x, p) = (2 pi hbar)^(-1/2) int dy e^(-ipy/hbar) phi*(x - y/2) psi(x + y/2)``."""
    C = _correlation(phi, psi)
    W = _correlation_to_phase(C, phi.dx, phi.hbar)
    return PhaseGrid(W, phi.x, _momentum_axis(phi.M, phi.dx, phi.hbar), phi.hbar, tuple(names))


# -- symbolic objects evaluated on grids ---------------------------------------------

def _eval(e: Expr, env: Mapping, hbar: float, funcs=None, shape=None):
    val = eval_numeric(e, env, hbar=hbar, funcs=funcs)
    val = np.asarray(val, dtype=complex)
    if shape is not None and val.shape != shape:
        val = np.broadcast_to(val, shape)
    return val


def _spectral_multipliers(grid: PhaseGrid) -> tuple:
    kx = 2 * np.pi * np.fft.fftfreq(len(grid.x), d=grid.dx)
    kp = 2 * np.pi * np.fft.fftfreq(len(grid.p), d=grid.dp)
    return 1j * kx[:, None], 1j * kp[None, :]


def apply_phase_operator(op: DiffOp, grid: PhaseGrid, params: "Mapping | None" = None,
                         funcs=None) -> PhaseGrid:
    """Apply a differential operator with spectral derivatives on both axes."""
    if set(op.vars) != set(grid.names):
        raise GridError(f"operator variables {op.vars} do not match grid {grid.names}")
    X, P = grid.mesh()
    env = dict(params or {})
    env[grid.names[0]], env[grid.names[1]] = X, P
    ix = op.vars.index(grid.names[0])
    ikx, ikp = _spectral_multipliers(grid)
    F = np.fft.fft2(grid.values)
    out = np.zeros_like(grid.values, dtype=complex)
    for alpha, c in op.terms.items():
        bx, bp = alpha[ix], alpha[1 - ix]
        d = grid.values if bx == bp == 0 else np.fft.ifft2(F * ikx ** bx * ikp ** bp)
        out = out + _eval(c, env, grid.hbar, funcs, X.shape) * d
    return grid.with_values(out)


def apply_gauge(S: GaugeIso, grid: PhaseGrid, params: "Mapping | None" = None, funcs=None) -> PhaseGrid:
    """Apply ``S`` on a phase grid.

    When ``log S`` involves only momentum derivatives with position-dependent
    coefficients it is exponentiated exactly in the conjugate variable;
    otherwise the truncated operator ``S`` is applied term by term.
    """
    A = S.log()
    pos, mom = grid.names
    ip = A.vars.index(mom)
    pure = all(all(a == 0 for j, a in enumerate(alpha) if j != ip) for alpha in A.terms) and \
        all(mom not in c.free_vars() for c in A.terms.values())
    if not pure:
        return apply_phase_operator(S.S, grid, params, funcs)
    env = dict(params or {})
    env[pos] = grid.x[:, None]
    _, ikp = _spectral_multipliers(grid)
    expo = np.zeros((len(grid.x), len(grid.p)), dtype=complex)
    for alpha, c in A.terms.items():
        expo = expo + _eval(c, env, grid.hbar, funcs) * ikp ** alpha[ip]
    G = np.fft.fft(grid.values, axis=1)
    return grid.with_values(np.fft.ifft(G * np.exp(expo), axis=1))


def expectation(A, Psi: PhaseGrid, K: int = DEFAULT_K, params: "Mapping | None" = None,
                funcs=None) -> complex:
    """``<A> = (2 pi hbar)^(-1/2) int (A * Psi) dx dp`` with the Moyal product."""
    A = as_expr(A)
    pos, mom = Psi.names
    sp = StarProduct.moyal(1, xs=(pos,), ps=(mom,))
    op = left_mult_operator(sp, A, K)
    star = apply_phase_operator(op, Psi, params, funcs)
    return star.integral() / math.sqrt(2 * math.pi * Psi.hbar)


# -- kernel unitaries ---------------------------------------------------------------------

def _kernel(gen: GeneratingFunction, xs, xps, hbar: float, params, funcs):
    F = generating_function_expr(gen)
    Fmix = differentiate(differentiate(F, "x"), "xp")
    X, XP = np.meshgrid(xs, xps, indexing="ij")
    env = dict(params or {})
    env["x"], env["xp"] = X, XP
    Fv = _eval(F, env, hbar, funcs, X.shape)
    Jv = _eval(Fmix, env, hbar, funcs, X.shape)
    if not np.all(np.isfinite(Jv)) or np.any(np.abs(Jv) == 0):
        raise GridError("kernel is singular inside the domain")
    return np.sqrt(np.abs(Jv)), Fv


def _check_kind(gen: GeneratingFunction):
    if gen.kind not in ("F1", "linear") or gen.n != 1:
        raise TransformError("kernel unitary needs an F1 or linear generating function with N = 1")


def apply_UT1(gen: GeneratingFunction, phi: GridState, out: "GridState | None" = None,
              params=None, funcs=None) -> GridState:
    """``(U phi)(x') = (2 pi hbar)^(-1/2) int phi(x) |F_xx'|^(1/2) e^(-iF(x,x')/hbar) dx`` by quadrature."""
    _check_kind(gen)
    grid = out or phi
    amp, F = _kernel(gen, phi.x, grid.x, phi.hbar, params, funcs)
    K = amp * np.exp(-1j * F / phi.hbar) * phi.dx / math.sqrt(2 * math.pi * phi.hbar)
    return replace(grid, samples=phi.samples @ K, hbar=phi.hbar, source=None)


def apply_UT1_inverse(gen: GeneratingFunction, phi: GridState, out: "GridState | None" = None,
                      params=None, funcs=None) -> GridState:
    _check_kind(gen)
    grid = out or phi
    amp, F = _kernel(gen, grid.x, phi.x, phi.hbar, params, funcs)
    K = amp * np.exp(1j * F / phi.hbar) * phi.dx / math.sqrt(2 * math.pi * phi.hbar)
    return replace(grid, samples=K @ phi.samples, hbar=phi.hbar, source=None)


def fourier() -> GeneratingFunction:
    """``F(x, x') = x x'``: the kernel unitary is the Fourier transform."""
    return GeneratingFunction("F1", var(DUMMY))


def spectral_fourier(phi: GridState) -> GridState:
    """``(2 pi hbar)^(-1/2) int phi(x) e^(-ikx/hbar) dx`` by FFT, on the dual grid."""
    M, dx, hb = phi.M, phi.dx, phi.hbar
    dk = 2 * np.pi * hb / (M * dx)
    Lk = M * dk / 2
    k = grid_points(Lk, M, phi.shifted)
    x0 = phi.x[0]
    n = np.arange(M)
    vals = np.fft.fft(phi.samples * np.exp(-1j * k[0] * n * dx / hb))
    vals = vals * np.exp(-1j * k * x0 / hb) * dx / math.sqrt(2 * math.pi * hb)
    return GridState(vals, Lk, M, hb, phi.shifted)


def self_dual_half_width(M: int, hbar: float = 1.0) -> float:
    """``L`` for which the FFT momentum grid coincides with the position grid."""
    return math.sqrt(math.pi * hbar * M / 2)


def _as_callable(f, funcs=None) -> tuple:
    """Return ``(f, f')`` as numpy callables from an expression in ``u`` or a pair of callables."""
    if callable(f):
        raise GridError("pass callables as a (f, f') pair")
    if isinstance(f, tuple):
        return f
    e = as_expr(f)
    de = differentiate(e, DUMMY)
    return (lambda u: _eval(e, {DUMMY: u}, 0.0, funcs, np.shape(u)),
            lambda u: _eval(de, {DUMMY: u}, 0.0, funcs, np.shape(u)))


def apply_UT4(phi1, phi2, phi: GridState, points=None, funcs=None) -> "GridState | np.ndarray":
    """``(U phi)(x') = |phi1'(x')|^(1/2) e^(-i phi2(x')/hbar) phi(phi1(x'))``.

    ``phi1``, ``phi2`` are expressions in ``u`` or ``(f, f')`` callable pairs.
    With ``points`` the transformed function is returned at those points
    instead of on the grid of ``phi``.
    """
    f1, d1 = _as_callable(phi1, funcs)
    f2, _ = _as_callable(phi2, funcs)
    xs = phi.x if points is None else np.asarray(points, dtype=float)
    img = np.real(f1(xs))
    order = np.argsort(xs)
    steps = np.diff(img[order])
    if not (np.all(steps > 0) or np.all(steps < 0)):
        raise GridError("phi1 is not strictly monotone on the grid")
    vals = np.sqrt(np.abs(d1(xs))) * np.exp(-1j * f2(xs) / phi.hbar) * phi.evaluate(img)
    if points is not None:
        return vals
    return phi.with_samples(vals)


# -- operators on wavefunctions ---------------------------------------------------------

_FD1 = np.array([1 / 280, -4 / 105, 1 / 5, -4 / 5, 0, 4 / 5, -1 / 5, 4 / 105, -1 / 280])
_FD2 = np.array([-1 / 560, 8 / 315, -1 / 5, 8 / 5, -205 / 72, 8 / 5, -1 / 5, 8 / 315, -1 / 560])


def _fd(samples: np.ndarray, dx: float, order: int) -> np.ndarray:
    out = samples
    while order > 0:
        stencil, step = (_FD2, 2) if order >= 2 else (_FD1, 1)
        out = np.convolve(out, stencil[::-1], mode="same") / dx ** step
        order -= step
    return out


def _spectral_derivative(samples: np.ndarray, dx: float, order: int) -> np.ndarray:
    k = 2 * np.pi * np.fft.fftfreq(len(samples), d=dx)
    return np.fft.ifft(np.fft.fft(samples) * (1j * k) ** order)


def exclusion_mask(state: GridState, eps: float = 0.0, stencil: int = 0) -> np.ndarray:
    """Nodes with ``|x| >= eps`` that are at least ``stencil`` nodes away from the edges."""
    ok = np.abs(state.x) >= eps
    if stencil:
        ok[:stencil] = False
        ok[-stencil:] = False
    return ok


def apply_operator_poly(op: OperatorPoly, phi: GridState, method: str = "spectral",
                        eps: float = 0.0, params: "Mapping | None" = None,
                        funcs=None) -> GridState:
    """Apply ``sum_beta c_beta(q) p^beta`` with ``p = -i hbar d/dx``.

    Nodes with ``|x| < eps`` are excluded (set to zero); ``method="fd8"``
    uses centred 8th-order differences, which keep errors local near
    singular points where spectral derivatives would not.
    """
    if method not in ("spectral", "fd8"):
        raise GridError(f"unknown method {method!r}")
    mask = np.abs(phi.x) >= eps
    env = dict(params or {})
    env[op.pos] = np.where(mask, phi.x, 1.0)
    out = np.zeros(phi.M, dtype=complex)
    for beta, c in op.terms.items():
        if beta == 0:
            d = phi.samples
        elif method == "spectral":
            d = _spectral_derivative(phi.samples, phi.dx, beta)
        else:
            d = _fd(phi.samples, phi.dx, beta)
        try:
            coef = _eval(c, env, phi.hbar, funcs, (phi.M,))
        except SingularLocusError as exc:
            raise GridError(f"singular coefficient inside the admitted region: {exc}") from exc
        out = out + coef * (-1j * phi.hbar) ** beta * d
    if not np.all(np.isfinite(out[mask])):
        raise GridError("singular coefficient inside the admitted region")
    return phi.with_samples(np.where(mask, out, 0))


def rayleigh_quotient(op: OperatorPoly, phi: GridState, eps: float = 0.05,
                      params: "Mapping | None" = None, funcs=None) -> complex:
    """``<phi, op phi> / <phi, phi>`` over ``|x| >= eps`` using 8th-order differences."""
    Hphi = apply_operator_poly(op, phi, "fd8", eps, params, funcs)
    mask = exclusion_mask(phi, eps, stencil=4)
    num = np.sum(np.conj(phi.samples[mask]) * Hphi.samples[mask])
    den = np.sum(np.abs(phi.samples[mask]) ** 2)
    return complex(num / den)


def _simpson(y: np.ndarray, dx: float) -> complex:
    n = len(y)
    if n < 4:
        return complex(np.sum(y[1:] + y[:-1]) * dx / 2)
    if n % 2 == 0:
        # 3/8 rule on the last three intervals
        tail = 3 * dx / 8 * (y[-4] + 3 * y[-3] + 3 * y[-2] + y[-1])
        y = y[:-3]
        n -= 3
    else:
        tail = 0
    w = np.ones(n)
    w[1:-1:2] = 4
    w[2:-1:2] = 2
    return complex(dx / 3 * np.dot(w, y) + tail)


def singular_norm(phi1, phi2, phi: GridState, L: float, M: int, eps: float = 0.05,
                  inner_nodes: int = 2001, funcs=None) -> float:
    """``||U phi||`` for a point transform singular at ``x' = 0``.

    The integral over ``|x'| >= eps`` uses Simpson's rule on a uniform grid
    starting exactly at ``eps``; the excluded zone is integrated in the
    variable ``s = phi1(x')`` with the Jacobian ``dx'/ds`` as weight.
    """
    f1, d1 = _as_callable(phi1, funcs)
    total = 0.0
    outer = np.linspace(eps, L, M)
    for sgn in (1, -1):
        xs = sgn * outer
        vals = apply_UT4(phi1, phi2, phi, points=xs, funcs=funcs)
        total += _simpson(np.abs(vals) ** 2, outer[1] - outer[0]).real
        s_edge = float(np.real(f1(np.array([sgn * eps])))[0])
        s = np.linspace(0.0, s_edge, inner_nodes)[1:]
        xp = _invert_monotone(f1, s, 0.0, sgn * eps)
        jac = 1.0 / np.abs(np.real(d1(xp)))
        vals = apply_UT4(phi1, phi2, phi, points=xp, funcs=funcs)
        integrand = np.concatenate([[0.0], np.abs(vals) ** 2 * jac])
        integrand[0] = _limit_at_zero(integrand[1:4], s[:3])
        total += abs(_simpson(integrand, abs(s[1] - s[0])).real)
    return math.sqrt(total)


def _limit_at_zero(vals: np.ndarray, s: np.ndarray) -> float:
    # quadratic extrapolation of a smooth integrand to s = 0
    c = np.polyfit(np.abs(s), vals, 2)
    return float(c[-1])


def _invert_monotone(f: Callable, targets: np.ndarray, lo: float, hi: float, iters: int = 80) -> np.ndarray:
    a = np.full(targets.shape, min(lo, hi), dtype=float)
    b = np.full(targets.shape, max(lo, hi), dtype=float)
    inc = np.real(f(np.array([max(lo, hi)])))[0] > np.real(f(np.array([min(lo, hi)])))[0]
    for _ in range(iters):
        mid = (a + b) / 2
        fm = np.real(f(mid))
        go_right = (fm < targets) if inc else (fm > targets)
        a = np.where(go_right, mid, a)
        b = np.where(go_right, b, mid)
    return (a + b) / 2


# -- tensor intertwining ----------------------------------------------------------------

def relative_l2(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(a - b) / np.linalg.norm(b))


def check_tensor_intertwining(gen: "GeneratingFunction | None", S: "GaugeIso | None",
                              phi: Gaussian, psi: Gaussian, L: float = 20.0, M: int = 1024,
                              hbar: float = 1.0, params: "Mapping | None" = None,
                              funcs=None) -> float:
    """Relative L2 residual of ``(phi* (x)_M psi) o T = S[(U phi)* (x)_M U psi]`` on the phase grid.

    The left side is the closed-form product of the Gaussians resampled at
    ``T(x', p')``; the right side transforms sampled states by kernel
    quadrature, forms the product by FFT and applies ``S`` spectrally.
    ``gen=None`` is the identity map.
    """
    if gen is not None:
        _check_kind(gen)
    a = phi.sample(L, M, hbar)
    b = psi.sample(L, M, hbar)
    if gen is None:
        Ua, Ub = a, b
    else:
        Ua, Ub = apply_UT1(gen, a, params=params, funcs=funcs), apply_UT1(gen, b, params=params, funcs=funcs)
    right = wigner_product(Ua, Ub, names=("xp", "pp"))
    if S is not None:
        right = apply_gauge(S, right, params, funcs)
    XP, PP = right.mesh()
    if gen is None:
        X, P = XP, PP
    else:
        T = build_transformation(gen)
        env = dict(params or {})
        env["xp"], env["pp"] = XP, PP
        X = np.real(_eval(T.forward[0], env, hbar, funcs, XP.shape))
        P = np.real(_eval(T.forward[1], env, hbar, funcs, XP.shape))
    left = phi.cross_wigner(psi, X, P, hbar)
    return relative_l2(right.values, left)


# -- oscillator helpers ----------------------------------------------------------------

def transformed_ground_state(omega: float = 1.0, hbar: float = 1.0, power: float = -0.25) -> Callable:
    """``(omega/pi hbar)^(1/4) |2x'|^power exp(-omega |x'|/hbar)``."""
    def f(x):
        x = np.asarray(x, dtype=float)
        return (omega / (math.pi * hbar)) ** 0.25 * np.abs(2 * x) ** power * np.exp(-omega * np.abs(x) / hbar)
    return f
