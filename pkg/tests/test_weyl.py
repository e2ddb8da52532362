"""
Differential Operator Tests
===========================
Normal-ordered operators, Leibniz composition, commutators and the lift
rho to operator matrices on Omega.

Run:  pytest tests/test_weyl.py -v
"""

import pytest


@pytest.fixture(scope="module")
def sphere_ops(sphere_fields):
    from weyl import from_tangent_field
    return [from_tangent_field(f) for f in sphere_fields]


# =====================================================
# 1. OPERATORS (unit)
# =====================================================

class TestDiffOperator:

    def test_unit_bad_multi_index(self, sphere):
        from weyl import DiffOperator
        from errors import InputError
        with pytest.raises(InputError):
            DiffOperator(sphere, {(1, 0): sphere.ctx.one()})
        with pytest.raises(InputError):
            DiffOperator(sphere, {(-1, 0, 0): sphere.ctx.one()})

    def test_unit_zero_coefficients_dropped(self, sphere):
        from weyl import DiffOperator
        T = DiffOperator(sphere, {(1, 0, 0): sphere.H})
        assert T.is_zero(), f"H*d1 should reduce to 0, got {T.format()}"
        assert T.order() == -1

    def test_unit_orders(self, sphere, sphere_ops):
        from weyl import compose, identity_operator, zero_operator
        d12, d13, _ = sphere_ops
        assert zero_operator(sphere).order() == -1
        assert identity_operator(sphere).order() == 0
        assert d12.order() == 1
        assert compose(d12, d13).order() == 2

    def test_unit_field_operator_acts_like_field(self, sphere_fields, sphere_ops, poly):
        f = poly("x1^2*x3 - x2 + 4")
        for delta, op in zip(sphere_fields, sphere_ops):
            assert op(f) == delta(f), f"{delta.name} disagrees with its operator"

    def test_unit_format(self, sphere_ops):
        assert sphere_ops[0].format() == "x2*d1 - x1*d2"

    def test_unit_left_scaling(self, sphere, sphere_ops, poly):
        a = poly("x3 + 1")
        T = sphere_ops[0].scale(a)
        f = poly("x1*x2")
        assert T(f) == sphere.reduce(a * sphere_ops[0](f))

    def test_unit_operators_on_different_rings(self, sphere_ops, ellipsoid_232):
        from weyl import compose, from_tangent_field
        from ellipsoid import tangent_generators
        from errors import InputError
        other = from_tangent_field(tangent_generators(ellipsoid_232)[0])
        with pytest.raises(InputError):
            compose(sphere_ops[0], other)


# =====================================================
# 2. COMPOSITION (unit)
# =====================================================

class TestComposition:

    def test_unit_canonical_commutation(self, sphere):
        from weyl import compose, identity_operator, multiplication, partial
        d1, x1 = partial(sphere, 0), multiplication(sphere, sphere.x(0))
        assert compose(d1, x1) - compose(x1, d1) == identity_operator(sphere)

    def test_unit_sphere_d12_d13(self, sphere, sphere_ops, poly):
        from weyl import DiffOperator, compose
        d12, d13, _ = sphere_ops
        expected = DiffOperator(sphere, {
            (2, 0, 0): poly("x2*x3"),
            (0, 0, 1): poly("-x2"),
            (1, 0, 1): poly("-x1*x2"),
            (1, 1, 0): poly("-x1*x3"),
            (0, 1, 1): poly("x1^2"),
        })
        got = compose(d12, d13)
        assert got == expected, f"Got {got.format()}"
        assert got.format() == "x2*x3*d1^2 - x1*x3*d1*d2 - x1*x2*d1*d3 + (-x2^2 - x3^2 + 1)*d2*d3 - x2*d3"

    def test_unit_composition_acts_as_composite(self, sphere_ops, poly):
        from weyl import compose
        d12, _, d23 = sphere_ops
        f = poly("x1^3 + x2*x3^2")
        assert compose(d12, d23)(f) == d12(d23(f))

    def test_unit_commutator_is_bracket(self, sphere_fields, sphere_ops):
        from weyl import compose, from_tangent_field
        from ellipsoid import lie_bracket
        d12, d13, _ = sphere_ops
        bracket = compose(d12, d13) - compose(d13, d12)
        assert bracket == from_tangent_field(lie_bracket(sphere_fields[0], sphere_fields[1]))

    def test_unit_associative(self, sphere, sphere_ops, poly):
        from weyl import compose, multiplication
        R = sphere_ops[0] + multiplication(sphere, poly("x3"))
        S, T = sphere_ops[1], sphere_ops[2].scale(poly("x1"))
        assert compose(compose(R, S), T) == compose(R, compose(S, T))


# =====================================================
# 3. COMMUTATORS AND ORDER (unit)
# =====================================================

class TestCommutators:

    def test_unit_subset_sum_matches_iterated(self, sphere_ops, poly):
        from weyl import compose, iterated_commutator, subset_sum_commutator
        T = compose(sphere_ops[0], sphere_ops[2])
        aa = [poly("x1 + 2"), poly("x2*x3")]
        f = poly("x3^2 - x1")
        assert iterated_commutator(T, aa)(f) == subset_sum_commutator(T, aa, f)

    def test_unit_order_drops_under_commutator(self, sphere_ops, poly):
        from weyl import compose, iterated_commutator
        T = compose(sphere_ops[0], sphere_ops[1])
        assert iterated_commutator(T, [poly("x1")]).order() <= 1
        assert iterated_commutator(T, [poly("x1"), poly("x2")]).order() <= 0
        assert iterated_commutator(T, [poly("x1"), poly("x2"), poly("x3")]).is_zero()

    def test_unit_commutator_with_scalar_is_zero(self, sphere, sphere_ops):
        from weyl import iterated_commutator
        assert iterated_commutator(sphere_ops[0], [sphere.ctx.const(5)]).is_zero()


# =====================================================
# 4. RHO (unit)
# =====================================================

class TestRho:

    def test_unit_rho_of_field_is_nabla(self, sphere_omega, sphere_fields, sphere_ops):
        from weyl import opmatrix_apply, rho_lift
        from connection import apply_nabla
        for delta, op in zip(sphere_fields, sphere_ops):
            TM = rho_lift(op, sphere_omega)
            for e in sphere_omega.generators():
                assert opmatrix_apply(TM, e) == apply_nabla(delta, e, sphere_omega), f"rho({delta.name})"

    def test_unit_rho_of_field_descends(self, sphere_omega, sphere_ops):
        from weyl import opmatrix_descends, rho_lift
        assert all(opmatrix_descends(rho_lift(op, sphere_omega)) for op in sphere_ops)

    def test_unit_ambient_partial_does_not_descend(self, sphere, sphere_omega):
        from weyl import opmatrix_descends, partial, rho_lift
        assert not opmatrix_descends(rho_lift(partial(sphere, 0), sphere_omega))

    def test_unit_rho_of_one_is_identity(self, sphere, sphere_omega, rng):
        from weyl import identity_operator, opmatrix_apply, rho_lift
        from ellipsoid import canonical_rep, random_lift
        v = random_lift(sphere_omega, rng)
        assert opmatrix_apply(rho_lift(identity_operator(sphere), sphere_omega), v) == canonical_rep(v, sphere_omega)

    def test_unit_sphere_rho_not_multiplicative(self, sphere_omega, sphere_ops):
        from weyl import multiplicativity_defect, opmatrix_apply
        d12, d13, _ = sphere_ops
        defect = multiplicativity_defect(d12, d13, sphere_omega)
        assert not opmatrix_apply(defect, sphere_omega.generator(0)).is_zero()

    def test_unit_free_module_rho_multiplicative(self, sphere, sphere_ops):
        from weyl import multiplicativity_defect, opmatrix_zero_on_module
        from ellipsoid import free_module
        free = free_module(sphere, 2)
        assert opmatrix_zero_on_module(multiplicativity_defect(sphere_ops[0], sphere_ops[2], free))

    def test_unit_module_mismatch(self, sphere_ops, ellipsoid_232):
        from weyl import rho_lift
        from ellipsoid import build_kaehler
        from errors import InputError
        with pytest.raises(InputError):
            rho_lift(sphere_ops[0], build_kaehler(ellipsoid_232))

    def test_unit_operator_matrix_shape(self, sphere_omega, sphere_ops):
        from weyl import OperatorMatrix
        from errors import InputError
        with pytest.raises(InputError):
            OperatorMatrix(sphere_omega, ((sphere_ops[0],),))


# =====================================================
# 5. PRINTED SPHERE VALUES (unit)
# =====================================================

class TestPrintedComparison:

    def test_unit_composition_differs_in_two_terms(self, sphere_omega):
        from weyl import printed_comparison
        rows = printed_comparison(sphere_omega)
        assert len(rows) == 4
        first = rows[0]
        assert not first["agree"]
        assert first["differing_terms"] == ["d3", "d1*d3"], f"Got {first['differing_terms']}"

    def test_unit_non_multiplicativity_confirmed(self, sphere_omega):
        from weyl import printed_comparison
        assert printed_comparison(sphere_omega)[3]["agree"] is True

    def test_unit_printed_rho_values_disagree(self, sphere_omega):
        from weyl import PRINTED_COMPOSITION_OF_RHO, PRINTED_RHO_OF_COMPOSITION, printed_comparison
        rows = printed_comparison(sphere_omega)
        assert rows[1]["printed_text"] == list(PRINTED_RHO_OF_COMPOSITION)
        assert rows[2]["printed_text"] == list(PRINTED_COMPOSITION_OF_RHO)
        assert rows[1]["agree"] is False and rows[2]["agree"] is False
        assert len(rows[1]["printed_canonical"]) == 3

    def test_unit_needs_sphere(self, ellipsoid_232):
        from weyl import printed_comparison
        from ellipsoid import build_kaehler
        from errors import InputError
        with pytest.raises(InputError):
            printed_comparison(build_kaehler(ellipsoid_232))
