"""End-to-end acceptance checks, one test per criterion.

Each test records named sub-checks and a runtime budget; the terminal summary
prints one PASS/FAIL line per criterion.
"""
import subprocess
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from qcanon import catalog
from qcanon.cantrans import GeneratingFunction, primed_operators, transformed_star, verify_flow
from qcanon.diffop import DiffOp, commutator
from qcanon.expr import I_EXPR, ONE_EXPR, ZERO_EXPR, func, hbar, var
from qcanon.gauge import (GaugeIso, anbn_constants, exponent_sqrt_coefficients, s_order, series_log,
                          solve_gauge, transform_observable, verify_gauge)
from qcanon.numhilbert import (Gaussian, apply_operator_poly, apply_UT1, apply_UT4,
                               check_tensor_intertwining, expectation, fourier, rayleigh_quotient,
                               self_dual_half_width, singular_norm, transformed_ground_state,
                               wigner_product)
from qcanon.starprod import (StarProduct, from_star_basis, moyal_bracket, star_commutator,
                             star_monomial, star_product, to_star_basis)

F = Fraction
u = var("u")
IHBAR = I_EXPR * hbar
ROOT = Path(__file__).resolve().parents[1]


def random_polynomial(rng, names, max_degree=6, terms=3):
    out = ZERO_EXPR
    for _ in range(terms):
        d = int(rng.integers(0, max_degree + 1))
        cuts = np.sort(rng.integers(0, d + 1, len(names) - 1))
        exps = np.diff(np.concatenate([[0], cuts, [d]]))
        mono = ONE_EXPR
        for name, k in zip(names, exps):
            mono = mono * var(name) ** int(k)
        out = out + mono.scale(F(int(rng.integers(-9, 10)), int(rng.integers(1, 5))))
    return out


def random_packets(rng, count=20):
    return [Gaussian.coherent(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.6, 1.4))
            for _ in range(count)]


def ih_identity(variables, K):
    return DiffOp.identity(variables, K).scale(IHBAR)


def test_criterion_1_exact_algebra(criterion):
    c = criterion(1, budget=30)
    x, p = var("x"), var("p")
    moyal = StarProduct.moyal(1)
    c.check("commutator", star_commutator(moyal, x, p, None) == IHBAR)
    c.check("bracket", moyal_bracket(moyal, x, p, None) == ONE_EXPR)
    rng = np.random.default_rng(7)
    for n, names in ((1, ["x", "p"]), (2, ["x1", "x2", "p1", "p2"])):
        sp = StarProduct.moyal(n)
        bad = 0
        for _ in range(200):
            f, g, h = (random_polynomial(rng, names) for _ in range(3))
            lhs = star_product(sp, star_product(sp, f, g, None), h, None)
            bad += lhs != star_product(sp, f, star_product(sp, g, h, None), None)
        c.check(f"associativity N={n}", bad == 0, f"{bad}/200 triples differ")
    c.finish()


def test_criterion_2_star_basis_roundtrip(criterion):
    c = criterion(2, budget=5)
    for n in range(6):
        for m in range(6):
            mono = star_monomial(n, m)
            c.check(f"x^{n} p^{m}", to_star_basis(mono.to_expr()) == {(n, m): ONE_EXPR})
            c.check(f"x^{n} p^{m} back", from_star_basis({(n, m): ONE_EXPR}) == mono)
    c.finish()


def test_criterion_3_linear(criterion):
    c = criterion(3, budget=60)
    T = catalog.linear_map(2, 1, 1, 1)
    S = GaugeIso.identity(T, 6)
    c.check("identity gauge verifies", verify_gauge(S, T, 6).all_pass)
    c.check("solver returns identity", solve_gauge(T, 6).gauge.S == DiffOp.identity(("xp", "pp"), 6))
    sp, moyal = transformed_star(T), StarProduct.moyal(1, primed=True)
    rng = np.random.default_rng(3)
    bad = 0
    for _ in range(40):
        f, g = (random_polynomial(rng, ["xp", "pp"], 5) for _ in range(2))
        bad += star_product(sp, f, g, None) != star_product(moyal, f, g, None)
    c.check("product is primed Moyal", bad == 0, f"{bad}/40 pairs differ")
    gen = GeneratingFunction("linear", a=2, b=1, c=1, d=1)
    pairs = [(Gaussian.coherent(0.3, 0.2), Gaussian.coherent(-0.5, 0.1, 1.2)),
             (Gaussian.ground_state(), Gaussian.coherent(1.0, -0.7, 0.8)),
             (Gaussian.coherent(-0.6, 0.9, 1.1), Gaussian.coherent(-0.6, 0.9, 1.1))]
    worst = max(check_tensor_intertwining(gen, S, g, h, 20.0, 1024) for g, h in pairs)
    c.check("grid residual", worst < 1e-8, f"{worst:.2e}")
    c.finish()


SHIFT_POTENTIALS = ["phi", u, u * u * F(3, 2), u ** 3 - u, u ** 4 * F(1, 3) + u ** 2,
                    u ** 5 - u ** 3 * F(2, 3) + u * u, u ** 6 * F(-1, 2) + u ** 3, u ** 7 - u ** 4 * F(2, 3) + u]


def test_criterion_4_shift_family(criterion):
    c = criterion(4, budget=60)
    VP = ("xp", "pp")
    for k, phi in enumerate(SHIFT_POTENTIALS):
        tag = phi if isinstance(phi, str) else f"degree {max(m.get('u', 0) for m in _degrees(phi))}"
        T = catalog.shift_family(phi, None if k % 2 == 0 else F(3, 2))
        q, pm = primed_operators(T, 6)
        c.check(f"position {tag}", q[0] == catalog.shift_family_position(6))
        c.check(f"momentum {tag}", pm[0] == catalog.shift_family_momentum(phi, 6))
        c.check(f"commutator {tag}", commutator(q[0], pm[0]) == ih_identity(VP, 6))
        S = GaugeIso.from_exponent(catalog.shift_family_exponent(phi, 6), T, 6)
        c.check(f"gauge {tag}", verify_gauge(S, T, 6).all_pass)
    c.finish()


def _degrees(e):
    return [{a.name: k for a, k in mono} for mono in e.terms]


def test_criterion_5_point_maps(criterion):
    c = criterion(5, budget=120)
    VP = ("xp", "pp")
    q, pm = primed_operators(catalog.point_map("phi"), 3)
    pq, ppm, _ = catalog.point_map_printed(3)
    c.check("position through hbar^3", q[0] == pq)
    c.check("momentum through hbar^3", pm[0] == ppm)
    X = var("xp")
    d = [func("phi", X, k) for k in range(5)]
    want = ((IHBAR.scale(F(1, 2))) ** 3).scale(F(1, 6)) * d[1] ** -3 \
        * (6 * d[2] ** 3 - 7 * d[1] * d[2] * d[3] + d[1] ** 2 * d[4]) * var("pp")
    c.check("third-order momentum coefficient", pm[0].coefficient((0, 3)) == want)
    c.check("commutator", commutator(q[0], pm[0]) == ih_identity(VP, 3))
    A, B = anbn_constants(4)
    c.check("A(4)", A == [F(1, 2), F(1, 4), F(1, 4), F(7, 24)], str(A))
    c.check("B(4)", B == [F(1, 2), F(3, 4), F(5, 4), F(49, 24)], str(B))
    A8, B8 = anbn_constants(8)
    L = series_log(solve_gauge(catalog.sqrt_map(), 4).gauge.S, 4)
    for n in (1, 2):
        c.check(f"solver hbar^{2 * n}", exponent_sqrt_coefficients(L, n) == (A8[n - 1], B8[n - 1]))
    c.finish()


def test_criterion_6_four_dim(criterion):
    c = criterion(6, budget=60)
    T = catalog.four_dim_map()
    q, pm = primed_operators(T, 4)
    (q1, q2), (p1, p2) = catalog.four_dim_printed(4)
    for name, got, want in (("q1", q[0], q1), ("q2", q[1], q2), ("p1", pm[0], p1), ("p2", pm[1], p2)):
        c.check(name, got == want)
    VP = q1.vars
    zero = DiffOp.zero(VP, 4)
    for i in range(2):
        for j in range(2):
            want = ih_identity(VP, 4) if i == j else zero
            c.check(f"[q{i + 1}, p{j + 1}]", commutator(q[i], pm[j]) == want)
    c.check("[q1, q2]", commutator(q[0], q[1]) == zero)
    c.check("[p1, p2]", commutator(pm[0], pm[1]) == zero)
    S = GaugeIso.from_exponent(catalog.four_dim_exponent(4), T, 4)
    c.check("gauge", verify_gauge(S, T, 4, pairs=3, degree=2).all_pass)
    c.check("flow", verify_flow(T, catalog.four_dim_hamiltonian()))
    c.finish()


def test_criterion_7_oscillator(criterion):
    c = criterion(7, budget=60)
    omega = {"omega": 1.0}
    S = catalog.sqrt_gauge(4)
    Ht, op = transform_observable(catalog.oscillator_hamiltonian(), catalog.sqrt_map(), S)
    c.check("ordering", op == catalog.oscillator_printed_operator() and s_order(S, Ht) == op)
    st = Gaussian.ground_state().sample(12.0, 4096, shifted=True)
    U = apply_UT4(catalog.sqrt_phi(), 0, st)
    mask = np.abs(U.x) >= 0.05
    for power, label in ((-0.5, "inverse square root prefactor"), (-0.25, "inverse fourth root prefactor")):
        ref = transformed_ground_state(power=power)(U.x[mask])
        dev = float(np.max(np.abs(U.samples[mask] - ref) / ref))
        c.check(f"ground state, {label}", dev < 1e-6, f"max rel dev {dev:.3g}")
    rq = rayleigh_quotient(op, U, 0.05, omega).real
    c.check("rayleigh quotient", abs(rq / 0.5 - 1) < 1e-4, f"{rq:.8f}")
    HU = apply_operator_poly(op, U, "fd8", 0.05, omega)
    inner = (np.abs(U.x) >= 0.1) & (np.abs(U.x) < 8)
    c.check("eigenfunction", np.max(np.abs(HU.samples[inner] - 0.5 * U.samples[inner])) < 1e-6)
    g0 = Gaussian.ground_state().sample(12.0, 512)
    e = expectation(catalog.oscillator_hamiltonian(), wigner_product(g0, g0), params=omega)
    c.check("phase-space energy", abs(e - 0.5) < 1e-6, f"{e.real:.10f}")
    c.finish()


def test_criterion_8_unitarity(criterion):
    c = criterion(8, budget=60)
    rng = np.random.default_rng(11)
    M = 512
    L = self_dual_half_width(M)
    packets = random_packets(rng)
    states = [g.sample(L, M) for g in packets]
    for name, gen in (("fourier", fourier()), ("linear", GeneratingFunction("linear", a=2, b=1, c=1, d=1))):
        dev = max(abs(apply_UT1(gen, s).norm() / s.norm() - 1) for s in states)
        c.check(name, dev < 1e-8, f"{dev:.2e}")
    dev = max(abs(singular_norm(catalog.sqrt_phi(), 0, g.sample(10.0, 64), 40.0, 8001, 0.05) / g.norm() - 1)
              for g in packets)
    c.check("sqrt point map", dev < 1e-4, f"{dev:.2e}")
    c.finish()


def test_criterion_9_determinism(criterion, tmp_path):
    c = criterion(9, budget=None)
    scenarios = [ROOT / "scenarios" / "showcase.json", ROOT / "scenarios" / "examples.json"]
    for path in scenarios:
        outs = []
        for k in range(2):
            out = tmp_path / f"{path.stem}-{k}.json"
            proc = subprocess.run([sys.executable, "-m", "qcanon", "run", str(path), "--out", str(out)],
                                  capture_output=True, text=True)
            c.check(f"{path.stem} run {k} exit", proc.returncode == 0, proc.stderr[-200:])
            outs.append(out.read_bytes() if out.exists() else b"")
        c.check(f"{path.stem} byte-identical", outs[0] == outs[1] and outs[0])
    c.finish()
