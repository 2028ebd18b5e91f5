"""Scenario runner.

    qcanon run scenario.json [--out report.json] [--k K] [--seed N] [--timing]
    qcanon example 5.3
    qcanon plot report.json task-id

Scenario files and reports are JSON; see ``docs/scenario.md``.  Exit codes:
0 all golden checks pass, 1 a golden check failed (or a task errored),
2 usage or parse error.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable

import numpy as np

from . import catalog
from .cantrans import (GeneratingFunction, Transformation, build_transformation, canonicity_check,
                       pushforward_derivations, star_compatibility, transformed_star, verify_flow,
                       primed_operators)
from .diffop import DiffOp
from .expr import ExprError, as_expr, parse, to_string, var, variables_for
from .gauge import (GaugeIso, anbn_constants, exponent_sqrt_coefficients, random_polynomial,
                    series_log, solve_gauge, transform_observable, verify_gauge)
from .numhilbert import (Gaussian, apply_UT1, apply_UT1_inverse, apply_UT4, check_tensor_intertwining,
                         expectation, rayleigh_quotient, relative_l2, singular_norm,
                         transformed_ground_state, wigner_product)
from .starprod import StarProduct, moyal_bracket, star_commutator, star_product

MAX_K = 12
EXAMPLES = ("5.1", "5.2", "5.3", "5.4", "intro-oscillator")
TASK_TYPES = ("star-eval", "canonicity", "solve-st", "verify-st", "transform-observable",
              "uop-apply", "example")
PRINTED_A = ["1/2", "1/4", "1/4", "7/24"]
PRINTED_B = ["1/2", "3/4", "5/4", "49/24"]


class ScenarioError(ValueError):
    pass


@dataclass
class Outcome:
    values: dict = field(default_factory=dict)
    checks: dict = field(default_factory=dict)
    residuals: dict = field(default_factory=dict)
    grid: "dict | None" = None

    def check(self, name: str, ok) -> bool:
        self.checks[name] = bool(ok)
        return bool(ok)

    @property
    def status(self) -> str:
        if not self.checks:
            return "value"
        return "pass" if all(self.checks.values()) else "fail"


@dataclass
class Context:
    K: int
    seed: int
    symbols: tuple
    params: dict

    def expr(self, text, n: int = 1) -> "object":
        if not isinstance(text, str):
            return as_expr(Fraction(str(text)))
        return parse(text, variables=variables_for(n) | {"u"}, symbols=self.symbols)

    def number(self, name: str, default: float) -> float:
        return float(self.params.get(name, default))


# -- serialization -------------------------------------------------------------------------

def op_json(op: DiffOp) -> list:
    return [{"alpha": list(a), "coeff": to_string(c)} for a, c in sorted(op.terms.items())]


def series_json(series) -> dict:
    return {str(k): to_string(series.coeff(k)) for k in series.degrees()}


def _num(z):
    z = complex(z)
    return [z.real, z.imag] if z.imag else z.real


def _op_from_json(terms: list, variables: tuple, ctx: Context, K: int) -> DiffOp:
    n = len(variables) // 2
    return DiffOp(variables, {tuple(t["alpha"]): ctx.expr(t["coeff"], n) for t in terms}, K)


# -- transformations from scenario specs --------------------------------------------------

CATALOG: dict = {
    "linear": lambda spec, ctx: catalog.linear_map(*(Fraction(str(spec.get(k, d))) for k, d in
                                                   zip("abcd", (2, 1, 1, 1)))),
    "shift-family": lambda spec, ctx: catalog.shift_family(
        ctx.expr(spec["phi"]) if "phi" in spec else "phi",
        ctx.expr(spec["a"]) if "a" in spec else None),
    "point-map": lambda spec, ctx: catalog.point_map(ctx.expr(spec["phi"]) if "phi" in spec else "phi"),
    "sqrt-map": lambda spec, ctx: catalog.sqrt_map(),
    "four-dim": lambda spec, ctx: catalog.four_dim_map(),
}


def generating_function(spec: dict, ctx: Context) -> GeneratingFunction:
    kind = spec["kind"]
    n = int(spec.get("n", 1))
    if kind == "linear":
        return GeneratingFunction("linear", **{k: ctx.expr(spec[k]) for k in "abcd"})
    if kind == "explicit":
        return GeneratingFunction("explicit", n=n, forward=tuple(ctx.expr(e, n) for e in spec["forward"]),
                                  inverse=None if "inverse" not in spec else
                                  tuple(ctx.expr(e, n) for e in spec["inverse"]))
    def fn(key):
        v = spec.get(key)
        if v is None:
            return None
        return v if v in ("phi", "phi1", "phi2") else ctx.expr(v)
    return GeneratingFunction(kind, fn("phi1"), fn("phi2") if "phi2" in spec else 0,
                              phi1_inverse=fn("phi1_inverse"), n=n)


def transformation(spec: dict, ctx: Context) -> Transformation:
    if "catalog" in spec:
        name = spec["catalog"]
        if name not in CATALOG:
            raise ScenarioError(f"unknown catalog transformation {name!r}")
        return CATALOG[name](spec, ctx)
    return build_transformation(generating_function(spec, ctx))


def gauge_for(task: dict, T: Transformation, ctx: Context, K: int) -> GaugeIso:
    if "exponent" in task:
        A = _op_from_json(task["exponent"], T.primed, ctx, K)
        return GaugeIso.from_exponent(A, T, K)
    return solve_gauge(T, K, family=task.get("family")).gauge


# -- tasks ---------------------------------------------------------------------------------

def task_star_eval(task: dict, ctx: Context, K: int) -> Outcome:
    n = int(task.get("n", 1))
    f, g = ctx.expr(task["f"], n), ctx.expr(task["g"], n)
    sp = StarProduct.moyal(n, primed=bool(task.get("primed", False)))
    kind = task.get("op", "product")
    fn = {"product": star_product, "commutator": star_commutator, "bracket": moyal_bracket}.get(kind)
    if fn is None:
        raise ScenarioError(f"unknown star operation {kind!r}")
    out = fn(sp, f, g, K)
    res = Outcome({"series": series_json(out), "result": to_string(out.to_expr())})
    if "expect" in task:
        res.check("expect", (out.to_expr() - ctx.expr(task["expect"], n)).is_zero())
    return res


def task_canonicity(task: dict, ctx: Context, K: int) -> Outcome:
    T = transformation(task["transformation"], ctx)
    rep = canonicity_check(T, K)
    res = Outcome(rep.to_json())
    for key, want in (task.get("expect") or {}).items():
        res.check(key, getattr(rep, key) == want)
    return res


def task_solve(task: dict, ctx: Context, K: int) -> Outcome:
    T = transformation(task["transformation"], ctx)
    sol = solve_gauge(T, K, family=task.get("family"))
    L = series_log(sol.gauge.S, K)
    res = Outcome({"exponent": op_json(L), "ranks": {str(k): v for k, v in sorted(sol.ranks.items())}})
    if T.name == "F4" and task["transformation"].get("catalog") == "sqrt-map":
        res.values["A"], res.values["B"] = [], []
        for m in range(1, K // 2 + 1):
            a, b = exponent_sqrt_coefficients(L, m)
            res.values["A"].append(str(a))
            res.values["B"].append(str(b))
    if "expect_exponent" in task:
        want = _op_from_json(task["expect_exponent"], T.primed, ctx, K)
        res.check("exponent", (L - want).is_zero())
    return res


def task_verify(task: dict, ctx: Context, K: int) -> Outcome:
    T = transformation(task["transformation"], ctx)
    S = gauge_for(task, T, ctx, K)
    rep = verify_gauge(S, T, K, seed=ctx.seed)
    res = Outcome(rep.to_json())
    res.check("all_pass", rep.all_pass)
    return res


def task_transform_observable(task: dict, ctx: Context, K: int) -> Outcome:
    T = transformation(task["transformation"], ctx)
    S = gauge_for(task, T, ctx, K)
    A = ctx.expr(task["observable"], T.n)
    At, op = transform_observable(A, T, S)
    res = Outcome({"transformed": to_string(At), "operator": op.to_json()})
    if "expect" in task:
        res.check("operator", op.to_json() == {str(k): to_string(ctx.expr(v)) for k, v in task["expect"].items()})
    return res


def _state(spec, hbar: float) -> Gaussian:
    spec = spec or {}
    if spec.get("kind", "coherent") == "ground":
        return Gaussian.ground_state(float(spec.get("omega", 1.0)), hbar)
    return Gaussian.coherent(float(spec.get("x0", 0.0)), float(spec.get("p0", 0.0)),
                             float(spec.get("sigma", 1.0)), hbar)


def _grid_rows(x, vals, stride: int = 1, mask=None) -> dict:
    idx = np.arange(len(x))[::stride]
    if mask is not None:
        idx = idx[mask[idx]]
    return {"columns": ["xp", "re", "im"],
            "rows": [[float(x[i]), float(vals[i].real), float(vals[i].imag)] for i in idx]}


def task_uop(task: dict, ctx: Context, K: int) -> Outcome:
    hb = ctx.number("hbar", 1.0)
    grid = task.get("grid", {})
    L, M = float(grid.get("L", 12.0)), int(grid.get("M", 1024))
    shifted = bool(grid.get("shifted", False))
    phi = _state(task.get("state"), hb)
    st = phi.sample(L, M, hb, shifted)
    tol = float(task.get("tol", 1e-8))
    if task.get("kernel", "UT1") == "UT1":
        gen = generating_function(task["generating_function"], ctx)
        out = apply_UT1(gen, st, params=ctx.params)
        back = apply_UT1_inverse(gen, out, params=ctx.params)
        res = Outcome({"norm_in": st.norm(), "norm_out": out.norm(),
                       "inverse_residual": relative_l2(back.samples, st.samples)})
        res.check("unitary", abs(out.norm() / st.norm() - 1) < tol)
    else:
        phi1 = ctx.expr(task["phi1"])
        phi2 = ctx.expr(task.get("phi2", "0"))
        out = apply_UT4(phi1, phi2, st)
        eps = float(task.get("eps", 0.05))
        nrm = singular_norm(phi1, phi2, st, float(task.get("L_out", L)), int(task.get("M_out", 20001)), eps)
        res = Outcome({"norm_in": phi.norm(), "norm_out": nrm})
        res.check("unitary", abs(nrm / phi.norm() - 1) < float(task.get("tol", 1e-4)))
    res.grid = _grid_rows(out.x, out.samples, stride=max(1, M // 512))
    return res


# -- examples ------------------------------------------------------------------------------

def example_5_1(task: dict, ctx: Context, K: int) -> Outcome:
    a, b, c, d = (Fraction(str(task.get(k, v))) for k, v in zip("abcd", (2, 1, 1, 1)))
    T = catalog.linear_map(a, b, c, d)
    res = Outcome({"transformation": [to_string(e) for e in T.forward]})
    res.check("canonical", canonicity_check(T, K).quantum)
    res.check("gauge_identity", verify_gauge(GaugeIso.identity(T, K), T, K, seed=ctx.seed).all_pass)
    rng = np.random.default_rng(ctx.seed)
    pairs = [(random_polynomial(rng, ["x", "p"], 3), random_polynomial(rng, ["x", "p"], 3)) for _ in range(3)]
    res.check("star_compatible", all(star_compatibility(T, f, g, None) for f, g in pairs))
    hb = ctx.number("hbar", 1.0)
    M = int(task.get("M", 1024))
    gen = GeneratingFunction("linear", a=a, b=b, c=c, d=d)
    r = check_tensor_intertwining(gen, None, Gaussian.coherent(0.5, -0.3, 1.0, hb),
                                  Gaussian.coherent(-0.4, 0.6, 1.0, hb), float(task.get("L", 20.0)), M, hb)
    res.residuals["tensor"] = r
    res.check("tensor", r < 1e-8)
    g0 = Gaussian.ground_state(ctx.number("omega", 1.0), hb)
    W = wigner_product(g0.sample(8.0, 128, hb), g0.sample(8.0, 128, hb))
    X, P = W.mesh()
    sub = slice(32, 96, 2)
    res.grid = {"columns": ["x", "p", "W"],
                "rows": [[float(x), float(p), float(w.real)] for x, p, w in
                         zip(X[sub, sub].ravel(), P[sub, sub].ravel(), W.values[sub, sub].ravel())]}
    return res


def example_5_2(task: dict, ctx: Context, K: int) -> Outcome:
    phi = ctx.expr(task.get("phi", "u^5/7 - 2*u^3/3 + u^2"))
    a = Fraction(str(task.get("a", "3/2")))
    T = catalog.shift_family(phi, a)
    q, p = primed_operators(T, K)
    res = Outcome({"momentum_operator": op_json(p[0])})
    res.check("position_operator", (q[0] - catalog.shift_family_position(K)).is_zero())
    res.check("momentum_operator", (p[0] - catalog.shift_family_momentum(phi, K)).is_zero())
    res.check("canonical", canonicity_check(T, K).quantum)
    E = catalog.shift_family_exponent(phi, K)
    res.check("printed_gauge", verify_gauge(GaugeIso.from_exponent(E, T, K), T, K, seed=ctx.seed).all_pass)
    solved = series_log(solve_gauge(T, K).gauge.S, K)
    res.values["exponent"] = op_json(solved)
    res.check("solved_gauge", (solved - E.with_K(K)).is_zero())
    hb = ctx.number("hbar", 1.0)
    cubic = GeneratingFunction("F1", var("u") * Fraction(2), var("u") ** 3)
    Tc = catalog.shift_family(var("u") ** 3, Fraction(1, 2))
    Sc = GaugeIso.from_exponent(catalog.shift_family_exponent(var("u") ** 3, 4), Tc, 4)
    r = check_tensor_intertwining(cubic, Sc, Gaussian.coherent(0.5, -0.3, 1.0, hb),
                                  Gaussian.coherent(-0.4, 0.6, 1.0, hb), 8.0, 1024, hb)
    res.residuals["tensor_cubic"] = r
    res.check("tensor_cubic", r < 1e-6)
    return res


def example_5_3(task: dict, ctx: Context, K: int) -> Outcome:
    nmax = int(task.get("nmax", 4))
    A, B = anbn_constants(nmax)
    res = Outcome({"A": [str(v) for v in A], "B": [str(v) for v in B]})
    m = min(nmax, 4)
    res.check("A", res.values["A"][:m] == PRINTED_A[:m])
    res.check("B", res.values["B"][:m] == PRINTED_B[:m])
    T = catalog.point_map()
    q, p = primed_operators(T, 3)
    pq, pp, pS = catalog.point_map_printed(3)
    res.check("position_operator", (q[0] - pq).is_zero())
    res.check("momentum_operator", (p[0] - pp).is_zero())
    S = solve_gauge(T, 3, family="abstract:phi").gauge.S
    res.check("gauge_h2", (S.with_K(2) - pS.with_K(2)).is_zero())
    Ks = 4
    L = series_log(solve_gauge(catalog.sqrt_map(), Ks).gauge.S, Ks)
    oracle = [exponent_sqrt_coefficients(L, j) for j in range(1, Ks // 2 + 1)]
    res.values["oracle"] = [[str(a), str(b)] for a, b in oracle]
    res.check("oracle", all((A[j], B[j]) == oracle[j] for j in range(min(len(oracle), nmax))))
    return res


def example_5_4(task: dict, ctx: Context, K: int) -> Outcome:
    K = min(K, 4)
    T = catalog.four_dim_map()
    sp = transformed_star(T)
    dx, dp = pushforward_derivations(T)
    fx, fy, fp1, fp2 = catalog.four_dim_fields()
    res = Outcome()
    res.check("fields", all((u - v).is_zero() for u, v in zip(dx + dp, (fx, fy, fp1, fp2))))
    q, p = primed_operators(T, K, sp)
    (q1, q2), (p1, p2) = catalog.four_dim_printed(K)
    res.check("operators", all((u - v).is_zero() for u, v in zip(q + p, (q1, q2, p1, p2))))
    res.check("canonical", canonicity_check(T, K, sp).quantum)
    G = GaugeIso.from_exponent(catalog.four_dim_exponent(K), T, K)
    res.check("printed_gauge", verify_gauge(G, T, K, seed=ctx.seed, pairs=2, degree=2, sp=sp).all_pass)
    res.check("flow", verify_flow(T, catalog.four_dim_hamiltonian()))
    res.values["exponent"] = op_json(G.exponent)
    return res


def example_oscillator(task: dict, ctx: Context, K: int) -> Outcome:
    hb, w = ctx.number("hbar", 1.0), ctx.number("omega", 1.0)
    eps = ctx.number("eps", 0.05)
    L, M = ctx.number("L", 12.0), int(ctx.number("M", 4096))
    T = catalog.sqrt_map()
    S = catalog.sqrt_gauge(max(K, 2))
    Ht, op = transform_observable(catalog.oscillator_hamiltonian(), T, S)
    res = Outcome({"transformed_hamiltonian": to_string(Ht), "operator": op.to_json()})
    res.check("ordering", op == catalog.oscillator_printed_operator())
    g0 = Gaussian.ground_state(w, hb)
    st = g0.sample(L, M, hb, shifted=True)
    U = apply_UT4(catalog.sqrt_phi(), 0, st)
    mask = np.abs(U.x) >= eps
    ref = transformed_ground_state(w, hb)(U.x)
    dev = float(np.max(np.abs(U.samples[mask] - ref[mask]) / np.abs(ref[mask])))
    printed = transformed_ground_state(w, hb, power=-0.5)(U.x)
    res.residuals["ground_state"] = dev
    res.values["printed_form_max_rel_dev"] = float(np.max(np.abs(U.samples[mask] - printed[mask]) / np.abs(printed[mask])))
    res.check("ground_state", dev < 1e-6)
    params = {"omega": w}
    rq = rayleigh_quotient(op, U, eps, params)
    res.values["eigenvalue"] = _num(rq)
    res.residuals["eigenvalue"] = abs(rq / (0.5 * hb * w) - 1)
    res.check("eigenvalue", res.residuals["eigenvalue"] < 1e-4)
    W = wigner_product(g0.sample(L, 512, hb), g0.sample(L, 512, hb))
    e = expectation(catalog.oscillator_hamiltonian(), W, params=params)
    res.values["phase_space_energy"] = _num(e)
    res.residuals["phase_space_energy"] = abs(e - 0.5 * hb * w)
    res.check("phase_space_energy", res.residuals["phase_space_energy"] < 1e-6)
    res.grid = _grid_rows(U.x, U.samples, stride=8, mask=mask)
    return res


EXAMPLE_RUNNERS: dict = {"5.1": example_5_1, "5.2": example_5_2, "5.3": example_5_3,
                         "5.4": example_5_4, "intro-oscillator": example_oscillator}


def task_example(task: dict, ctx: Context, K: int) -> Outcome:
    eid = str(task.get("example"))
    if eid not in EXAMPLE_RUNNERS:
        raise ScenarioError(f"unknown example id {eid!r}")
    return EXAMPLE_RUNNERS[eid](task, ctx, K)


RUNNERS: "dict[str, Callable]" = {
    "star-eval": task_star_eval, "canonicity": task_canonicity, "solve-st": task_solve,
    "verify-st": task_verify, "transform-observable": task_transform_observable,
    "uop-apply": task_uop, "example": task_example,
}


# -- scenario driver -----------------------------------------------------------------------

def load_scenario(text: str, source: str = "<scenario>") -> dict:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{source}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ScenarioError(f"{source}: top level must be an object")
    tasks = data.get("tasks", [])
    if not isinstance(tasks, list):
        raise ScenarioError(f"{source}: 'tasks' must be a list")
    for i, t in enumerate(tasks):
        if not isinstance(t, dict) or t.get("type") not in TASK_TYPES:
            raise ScenarioError(f"{source}: task {i}: type must be one of {', '.join(TASK_TYPES)}")
    return data


def run_scenario(data: dict, K: "int | None" = None, seed: int = 0, timing: bool = False) -> dict:
    K = int(K if K is not None else data.get("K", 4))
    if not 0 <= K <= MAX_K:
        raise ScenarioError(f"truncation order K={K} outside [0, {MAX_K}]")
    ctx = Context(K, seed, tuple(data.get("symbols", ())), dict(data.get("params", {})))
    results = []
    for i, task in enumerate(data.get("tasks", [])):
        tid = str(task.get("id", f"task{i}"))
        t0 = time.perf_counter()
        entry = {"id": tid, "type": task["type"]}
        try:
            kt = int(task.get("K", K))
            if kt > MAX_K:
                raise ScenarioError(f"truncation order K={kt} exceeds {MAX_K}")
            out = RUNNERS[task["type"]](task, ctx, kt)
            entry.update(status=out.status, checks=out.checks, values=out.values, residuals=out.residuals)
            if out.grid is not None:
                entry["grid"] = out.grid
        except (ExprError, ScenarioError, ValueError, KeyError, TypeError, ZeroDivisionError) as exc:
            entry.update(status="error", error=f"{type(exc).__name__}: {exc}")
        if timing:
            entry["wall_time"] = time.perf_counter() - t0
        results.append(entry)
    counts = {s: sum(r["status"] == s for r in results) for s in ("pass", "fail", "error", "value")}
    return {"scenario": data.get("name", ""), "K": K, "seed": seed, "tasks": results, "summary": counts}


def report_failed(report: dict) -> bool:
    return any(t["status"] in ("fail", "error") for t in report["tasks"])


def dumps(report: dict) -> str:
    return json.dumps(report, indent=2, allow_nan=False) + "\n"


def emit_plotdata(report: dict, task_id: str) -> str:
    for t in report.get("tasks", []):
        if t["id"] == task_id:
            if "grid" not in t:
                raise ScenarioError(f"task {task_id!r} has no grid output")
            g = t["grid"]
            lines = [",".join(g["columns"])] + [",".join(repr(float(v)) for v in row) for row in g["rows"]]
            return "\n".join(lines) + "\n"
    raise ScenarioError(f"no task {task_id!r} in report")


def _write(text: str, out: "str | None"):
    if out:
        with open(out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="qcanon", description="Quantum canonical transformation scenarios")
    sub = ap.add_subparsers(dest="cmd", required=True)
    r = sub.add_parser("run", help="run a scenario file")
    r.add_argument("file")
    r.add_argument("--out")
    r.add_argument("--k", type=int)
    r.add_argument("--seed", type=int, default=0)
    r.add_argument("--timing", action="store_true", help="include wall-time per task")
    e = sub.add_parser("example", help="run a built-in example")
    e.add_argument("id", choices=EXAMPLES)
    e.add_argument("--k", type=int)
    e.add_argument("--nmax", type=int, default=4)
    e.add_argument("--out")
    e.add_argument("--timing", action="store_true")
    pl = sub.add_parser("plot", help="extract CSV plot data from a report")
    pl.add_argument("report")
    pl.add_argument("task_id")
    pl.add_argument("--out")
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return 2 if exc.code else 0
    try:
        if args.cmd == "run":
            try:
                with open(args.file) as fh:
                    text = fh.read()
            except OSError as exc:
                raise ScenarioError(str(exc)) from None
            report = run_scenario(load_scenario(text, args.file), args.k, args.seed, args.timing)
        elif args.cmd == "example":
            task = {"id": args.id, "type": "example", "example": args.id, "nmax": args.nmax}
            report = run_scenario({"name": f"example {args.id}", "K": args.k if args.k is not None else 6,
                                   "tasks": [task]}, timing=args.timing)
        else:
            with open(args.report) as fh:
                _write(emit_plotdata(json.load(fh), args.task_id), args.out)
            return 0
    except (ScenarioError, OSError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    _write(dumps(report), args.out)
    return 1 if report_failed(report) else 0


if __name__ == "__main__":
    sys.exit(main())
