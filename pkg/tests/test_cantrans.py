from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from conftest import polynomials
from qcanon import catalog
from qcanon.cantrans import (GeneratingFunction, Transformation, TransformError, build_transformation,
                             canonicity_check, check_generating_relations, check_pushforward,
                             composition_partner, identity_transformation, interchange,
                             primed_operators, pushforward_derivations, quantum_flow,
                             star_compatibility, transformed_star, verify_flow)
from qcanon.diffop import DiffOp
from qcanon.expr import ONE_EXPR, cos, func, sgn, sin, sqrtabs, var
from qcanon.starprod import StarProduct, moyal_bracket, poisson_bracket, star_product

x, p, xp, pp, u = var("x"), var("p"), var("xp"), var("pp"), var("u")
a = var("a")
VP = ("xp", "pp")
MOYAL_PRIMED = StarProduct.moyal(1, primed=True)


class TestBuild:
    def test_interchange_from_f1(self):
        T = build_transformation(GeneratingFunction("F1", u, 0))
        assert T.forward == (-pp, xp)
        assert T.forward == interchange().forward

    def test_sqrt_point_map(self):
        T = catalog.sqrt_map()
        assert T.forward == (sgn(xp) * sqrtabs(2 * xp), pp * sqrtabs(2 * xp))

    def test_linear(self):
        T = catalog.linear_map(2, 1, 1, 1)
        assert T.forward == (xp - pp, -xp + 2 * pp)
        assert T.jacobian_det() == ONE_EXPR

    @pytest.mark.parametrize("kind", ["F1", "F2", "F3", "F4"])
    def test_generating_relations(self, kind):
        assert check_generating_relations(GeneratingFunction(kind, "phi", "chi"))
        assert check_generating_relations(GeneratingFunction(kind, 3 * u ** 2, u ** 4 - u))

    def test_generating_relations_linear(self):
        assert check_generating_relations(GeneratingFunction("linear", a=2, b=1, c=1, d=1))

    def test_inverse(self):
        assert catalog.sqrt_map().check_inverse()
        assert catalog.linear_map(3, 2, 1, 1).check_inverse()
        assert catalog.four_dim_map().check_inverse()
        T = catalog.shift_family(u ** 3, 2)
        assert T.check_inverse() if T.inverse is not None else True

    @pytest.mark.parametrize("g", [GeneratingFunction("F1", "phi", "chi"),
                                   GeneratingFunction("F4", "phi", "chi"),
                                   GeneratingFunction("linear", a=1, b=2, c=0, d=1)])
    def test_classical_canonical_has_unit_jacobian(self, g):
        assert build_transformation(g).jacobian_det() == ONE_EXPR

    def test_errors(self):
        with pytest.raises(TransformError, match="bijective"):
            build_transformation(GeneratingFunction("F1", ONE_EXPR, u))
        with pytest.raises(TransformError, match="b != 0"):
            GeneratingFunction("linear", a=1, b=0, c=0, d=1)
        with pytest.raises(TransformError, match="ad - bc"):
            GeneratingFunction("linear", a=1, b=1, c=1, d=1)
        with pytest.raises(TransformError):
            GeneratingFunction("F7", "phi")
        with pytest.raises(TransformError):
            Transformation(1, (xp,))


class TestComposition:
    @given(st.fractions(1, 4, max_denominator=3), st.integers(1, 3),
           polynomials(["u"], max_degree=4))
    @settings(max_examples=20)
    def test_partners_match_direct_construction(self, c, k, chi):
        phi = (u ** k).scale(c)
        for kind in ("F2", "F3", "F4"):
            g = GeneratingFunction(kind, phi, chi)
            assert composition_partner(g).forward == build_transformation(g).forward

    def test_abstract_partners(self):
        for kind in ("F2", "F3", "F4"):
            g = GeneratingFunction(kind, "phi", "chi")
            assert composition_partner(g).forward == build_transformation(g).forward

    def test_compose_with_inverse(self):
        T = catalog.linear_map(2, 3, 1, 2)
        both = T.compose(T.inverted())
        assert both.forward == identity_transformation().forward


class TestDerivations:
    def test_identity(self):
        dx, dp = pushforward_derivations(identity_transformation())
        assert dx[0] == DiffOp.partial(VP, "xp")
        assert dp[0] == DiffOp.partial(VP, "pp")

    def test_shift_family(self):
        dx, dp = pushforward_derivations(catalog.shift_family("phi"))
        # x o T = -a pp - a phi'(xp) forces the minus sign
        assert dx[0] == DiffOp(VP, {(0, 1): -a.inverse()})
        assert dp[0] == DiffOp(VP, {(1, 0): a, (0, 1): -a * func("phi", xp, 2)})

    def test_point_map(self):
        dx, dp = pushforward_derivations(catalog.point_map("phi"))
        d1, d2 = func("phi", xp, 1), func("phi", xp, 2)
        assert dx[0] == DiffOp(VP, {(1, 0): d1.inverse(), (0, 1): d1 ** -2 * d2 * pp})
        assert dp[0] == DiffOp(VP, {(0, 1): d1})

    def test_four_dim(self):
        dx, dp = pushforward_derivations(catalog.four_dim_map())
        assert dx + dp == catalog.four_dim_fields()

    @pytest.mark.parametrize("T", [catalog.sqrt_map(), catalog.shift_family("phi"),
                                   catalog.point_map("phi"), catalog.four_dim_map()],
                             ids=["sqrt", "shift", "point", "four-dim"])
    def test_defining_rule(self, T):
        assert check_pushforward(T, degree=2 if T.n == 2 else 3)

    @given(polynomials(list(VP), max_degree=4), polynomials(list(VP), max_degree=4))
    def test_linear_product_is_moyal(self, f, g):
        sp = transformed_star(TRANSFORMS["linear"])
        assert star_product(sp, f, g, None) == star_product(MOYAL_PRIMED, f, g, None)


TRANSFORMS = {
    "linear": catalog.linear_map(2, 1, 1, 1),
    "shift": catalog.shift_family("phi"),
    "shift-quintic": catalog.shift_family(u ** 5 - u ** 2, Fraction(3, 2)),
    "point": catalog.point_map("phi"),
    "sqrt": catalog.sqrt_map(),
}
SPS = {k: transformed_star(T) for k, T in TRANSFORMS.items()}


class TestCompatibility:
    @pytest.mark.parametrize("name", sorted(TRANSFORMS))
    @given(data=st.data())
    @settings(max_examples=10)
    def test_star_is_intertwined(self, name, data):
        f = data.draw(polynomials(["x", "p"], max_degree=4, max_terms=3))
        g = data.draw(polynomials(["x", "p"], max_degree=4, max_terms=3))
        assert star_compatibility(TRANSFORMS[name], f, g, K=3, sp=SPS[name])

    def test_shift_family_position_momentum(self):
        T = catalog.shift_family("phi")
        assert T.pullback(x) == -a * pp - a * func("phi", xp, 1)
        assert T.pullback(p) == a.inverse() * xp
        assert star_compatibility(T, x, p, K=6)

    @pytest.mark.parametrize("name", sorted(TRANSFORMS))
    @given(data=st.data())
    @settings(max_examples=10)
    def test_classical_bracket_is_poisson(self, name, data):
        f = data.draw(polynomials(["xp", "pp"], max_degree=3, max_terms=3))
        g = data.draw(polynomials(["xp", "pp"], max_degree=3, max_terms=3))
        lead = moyal_bracket(SPS[name], f, g, K=0).coeff(0)
        assert lead == poisson_bracket(f, g, ["xp"], ["pp"])


class TestCanonicity:
    @pytest.mark.parametrize("T", [catalog.shift_family("phi"), catalog.point_map("phi"),
                                   catalog.sqrt_map()], ids=["shift", "point", "sqrt"])
    def test_canonical(self, T):
        rep = canonicity_check(T, 4)
        assert rep.classical and rep.quantum

    def test_four_dim(self):
        assert canonicity_check(catalog.four_dim_map(), 4).quantum

    def test_scaling_is_not_canonical(self):
        T = Transformation(1, (2 * xp, pp), (x * Fraction(1, 2), p))
        rep = canonicity_check(T, 2)
        assert not rep.classical and not rep.quantum
        assert rep.jacobian_det == "2"


class TestPrimedOperators:
    def test_shift_family(self):
        q, pm = primed_operators(catalog.shift_family("phi"), 6)
        assert q[0] == catalog.shift_family_position(6)
        assert pm[0] == catalog.shift_family_momentum("phi", 6)

    def test_point_map_to_third_order(self):
        q, pm = primed_operators(catalog.point_map("phi"), 3)
        pq, ppm, _ = catalog.point_map_printed(3)
        assert q[0] == pq and pm[0] == ppm

    def test_four_dim(self):
        q, pm = primed_operators(catalog.four_dim_map(), 4)
        (q1, q2), (p1, p2) = catalog.four_dim_printed(4)
        assert list(q) == [q1, q2] and list(pm) == [p1, p2]

    def test_sqrt_map(self):
        q, pm = primed_operators(catalog.sqrt_map(), 5)
        pq, ppm = catalog.sqrt_map_printed(5)
        assert q[0] == pq and pm[0] == ppm


class TestFlows:
    w, t = var("omega"), var("t")

    def test_oscillator(self):
        T = quantum_flow(catalog.oscillator_hamiltonian())
        w, t = self.w, self.t
        assert T.inverse[0] == x * cos(w * t) + w.inverse() * p * sin(w * t)
        assert T.inverse[1] == p * cos(w * t) - w * x * sin(w * t)
        assert verify_flow(T, catalog.oscillator_hamiltonian())
        assert not verify_flow(T, (p * p).scale(Fraction(1, 2)))
        assert canonicity_check(T, 2).quantum

    def test_zero_time_is_identity(self):
        T = quantum_flow(catalog.oscillator_hamiltonian()).substitute_params({"t": 0})
        assert T.forward == identity_transformation().forward

    def test_four_dim(self):
        H = catalog.four_dim_hamiltonian()
        T = quantum_flow(H, n=2)
        assert T.forward == catalog.four_dim_map().forward
        assert verify_flow(catalog.four_dim_map(), H)

    @pytest.mark.parametrize("tval", [Fraction(-3, 2), Fraction(-1, 3), Fraction(1, 5), 1, Fraction(7, 3)])
    def test_sampled_times_are_canonical(self, tval):
        T = catalog.four_dim_map().substitute_params({"t": tval})
        assert canonicity_check(T, 3).quantum

    def test_unsupported(self):
        with pytest.raises(TransformError, match="catalog"):
            quantum_flow(x ** 4 + p * p)

