"""
Principal Parts and Infinity-Connection Tests
==============================================
Jet rings P^l and their tensor products, the jet map, projections,
comultiplication, the l-connections of the projective basis, their pairing
with operators and the K^{l,k} curvature of infinity-connections.

Run:  pytest tests/test_jets.py -v
      pytest tests/test_jets.py -v -k "integration"   # stratification runs only
"""

import pytest


# =====================================================
# 1. JET RINGS (unit)
# =====================================================

class TestJetRings:

    def test_unit_variables(self, sphere_p1):
        assert sphere_p1.ctx.variables == ("x1", "x2", "x3", "t1", "t2", "t3")
        assert sphere_p1.blocks == ("t",)
        assert sphere_p1.l == 1

    def test_unit_relations_vanish(self, sphere_p1):
        for text in ("x1^2 + x2^2 + x3^2 - 1", "t1^2", "t2*t3", "x1*t1 + x2*t2 + x3*t3"):
            assert sphere_p1.reduce(sphere_p1.parse(text)).is_zero(), f"{text} survives in P^1"

    def test_unit_first_order_survives(self, sphere_p1, sphere_p2):
        assert not sphere_p1.reduce(sphere_p1.parse("t1")).is_zero()
        assert not sphere_p2.reduce(sphere_p2.parse("t1*t2")).is_zero()
        assert sphere_p2.reduce(sphere_p2.parse("t1^2*t2")).is_zero()

    def test_unit_ring_is_cached(self, sphere, sphere_p1):
        from jets import build_jet_ring
        assert build_jet_ring(sphere, 1) is sphere_p1

    def test_unit_tensor_ring_blocks(self, sphere):
        from jets import JetTensorRing, build_jet_tensor_ring
        jr = build_jet_tensor_ring(sphere, (1, 1))
        assert isinstance(jr, JetTensorRing)
        assert jr.orders == (1, 1) and jr.blocks == ("t", "u")
        assert jr.reduce(jr.parse("u1^2")).is_zero()
        assert jr.reduce(jr.parse("x1*u1 + x2*u2 + x3*u3 + t1*u1 + t2*u2 + t3*u3")).is_zero()

    @pytest.mark.parametrize("orders", [(), (1, 1, 1, 1), (-1,), (1, 2.0)])
    def test_unit_bad_orders(self, sphere, orders):
        from jets import build_jet_tensor_ring
        from errors import InputError
        with pytest.raises(InputError):
            build_jet_tensor_ring(sphere, orders)


# =====================================================
# 2. JET MAP AND PROJECTION (unit)
# =====================================================

class TestJetMap:

    def test_unit_jet_of_variable(self, sphere):
        from jets import jet
        assert jet(sphere.x(0), 1, sphere).format() == "x1 + t1"

    def test_unit_jet_of_one(self, sphere, sphere_p2):
        from jets import jet
        assert jet(sphere.ctx.one(), 2, sphere).poly == sphere_p2.ctx.one()

    def test_unit_jet_is_multiplicative(self, sphere, poly):
        from jets import jet
        a, b = poly("x1*x2 + 3"), poly("x3^2 - x1")
        assert jet(a * b, 2, sphere) == jet(a, 2, sphere) * jet(b, 2, sphere)

    def test_unit_jet_of_H_is_zero(self, sphere):
        from jets import jet
        assert jet(sphere.H, 2, sphere).is_zero()

    def test_unit_projection_commutes(self, sphere, poly):
        from jets import jet, project
        a = poly("x1^2*x3 - 2*x2")
        for l in (1, 2, 3):
            assert project(jet(a, l, sphere)) == jet(a, l - 1, sphere), f"l = {l}"

    def test_unit_order_zero(self, sphere, poly):
        from jets import jet, project, to_base
        from errors import InputError
        a = poly("x2*x3 + 1")
        assert to_base(jet(a, 0, sphere)) == a
        with pytest.raises(InputError):
            project(jet(a, 0, sphere))
        with pytest.raises(InputError):
            to_base(jet(a, 1, sphere))

    def test_unit_difference_products_vanish(self, sphere, sphere_p1, poly):
        from jets import JetElement, jet
        a, b = poly("x1 + x2"), poly("x3^2")
        da = jet(a, 1, sphere) - JetElement(sphere_p1, sphere_p1.x(a))
        db = jet(b, 1, sphere) - JetElement(sphere_p1, sphere_p1.x(b))
        assert not da.is_zero()
        assert (da * db).is_zero(), "two differences survive in P^1"

    def test_unit_difference_product_expansion(self, sphere, poly):
        from jets import subset_sum_tensor, tensor_difference_product
        aa = [poly("x1"), poly("x2 + 1"), poly("x1*x3")]
        assert tensor_difference_product(aa) == subset_sum_tensor(aa)

    def test_unit_empty_difference_product(self):
        from jets import tensor_difference_product
        from errors import InputError
        with pytest.raises(InputError):
            tensor_difference_product([])


# =====================================================
# 3. COMULTIPLICATION (unit)
# =====================================================

class TestComultiplication:

    def test_unit_comultiply_variable(self, sphere):
        from jets import comultiply, jet
        assert comultiply(jet(sphere.x(0), 2, sphere), 1, 1).format() == "x1 + t1 + u1"

    def test_unit_comultiply_order_mismatch(self, sphere):
        from jets import comultiply, jet
        from errors import InputError
        with pytest.raises(InputError):
            comultiply(jet(sphere.x(0), 1, sphere), 1, 1)

    def test_unit_coassociative(self, sphere, poly):
        from jets import coassociativity_sides
        left, right = coassociativity_sides(poly("x1*x2 - x3^2"), sphere)
        assert left.poly == right.poly

    def test_unit_left_linear(self, sphere, poly):
        from jets import comultiply, jet
        a, xi = poly("x2 + 2"), jet(poly("x1*x3"), 2, sphere)
        assert comultiply(xi.scale(a), 1, 1) == comultiply(xi, 1, 1).scale(a)

    def test_unit_checked_maps_stay_bounded(self, sphere, poly, monkeypatch):
        import jets
        from collections import OrderedDict
        monkeypatch.setattr(jets, "_checked_maps", OrderedDict())
        monkeypatch.setattr(jets, "CHECKED_MAPS_LIMIT", 1)
        jets.comultiply(jets.jet(poly("x1"), 2, sphere), 1, 1)
        jets.comultiply(jets.jet(poly("x1"), 3, sphere), 1, 2)
        assert len(jets._checked_maps) == 1

    def test_unit_ill_defined_map_rejected(self, sphere, sphere_p1):
        from jets import jet, tensor_map
        from errors import VerificationFailure
        with pytest.raises(VerificationFailure) as exc_info:
            tensor_map(jet(sphere.x(0), 1, sphere), sphere_p1, {"x": ("t",)})
        assert exc_info.value.witness, "no witness generator reported"


# =====================================================
# 4. L-CONNECTIONS (unit)
# =====================================================

class TestLConnections:

    def test_unit_zeroth_order_is_identity(self, sphere_omega, rng):
        from jets import JetElement, nabla_l, to_base
        from ellipsoid import canonical_rep, random_lift
        v = random_lift(sphere_omega, rng)
        got = nabla_l(v, 0, sphere_omega)
        assert [to_base(JetElement(got.ring, e)) for e in got.entries] == list(canonical_rep(v, sphere_omega))

    def test_unit_tower_is_coherent(self, sphere_omega, rng):
        from jets import nabla_l, project
        from ellipsoid import random_lift
        v = random_lift(sphere_omega, rng)
        for l in (1, 2):
            assert project(nabla_l(v, l, sphere_omega)) == nabla_l(v, l - 1, sphere_omega), f"l = {l}"

    def test_unit_relation_is_killed(self, sphere_omega):
        from jets import nabla_l
        assert nabla_l(sphere_omega.G, 2, sphere_omega).is_zero()

    def test_unit_t_linear_part_is_omega_form(self, sphere_omega, rng):
        from jets import nabla_l, t_linear_part
        from connection import OmegaValuedElement, omega_valued_nabla
        from ellipsoid import random_lift
        v = random_lift(sphere_omega, rng)
        C = t_linear_part(nabla_l(v, 2, sphere_omega))
        assert OmegaValuedElement(sphere_omega, C).C == omega_valued_nabla(v, sphere_omega).C

    def test_unit_t_linear_part_needs_order_one(self, sphere_omega):
        from jets import nabla_l, t_linear_part
        from errors import InputError
        with pytest.raises(InputError):
            t_linear_part(nabla_l(sphere_omega.generator(0), 0, sphere_omega))

    def test_unit_membership_evidence(self, sphere_omega):
        from jets import diff_membership_test, nabla_l
        assert diff_membership_test(lambda v: nabla_l(v, 1, sphere_omega), 1, sphere_omega, samples=3)
        assert not diff_membership_test(lambda v: nabla_l(v, 1, sphere_omega), 0, sphere_omega, samples=3)

    def test_unit_membership_arguments(self, sphere_omega):
        from jets import diff_membership_test, nabla_l
        from errors import InputError
        with pytest.raises(InputError):
            diff_membership_test(lambda v: nabla_l(v, 0, sphere_omega), -2, sphere_omega)
        with pytest.raises(InputError):
            diff_membership_test(lambda v: nabla_l(v, 0, sphere_omega), 0, sphere_omega, samples=0)

    def test_unit_text_entries(self, sphere_omega, sphere_p1):
        from jets import jet_module_element
        xi = jet_module_element(sphere_omega, sphere_p1, ["t1", "0", "0"])
        assert len(xi) == 3
        assert not xi.is_zero()


# =====================================================
# 5. INFINITY-CONNECTIONS (unit)
# =====================================================

class TestInfinityConnection:

    def test_unit_projective_basis_orders(self, sphere_omega):
        from jets import projective_basis_connection
        conn = projective_basis_connection(sphere_omega, 2)
        assert conn.L == 2
        assert conn.ring(1).l == 1

    def test_unit_theta_matches_nabla(self, sphere_omega, rng):
        from jets import nabla_l, projective_basis_connection
        from ellipsoid import random_lift
        conn = projective_basis_connection(sphere_omega, 2)
        v = random_lift(sphere_omega, rng)
        assert conn.theta(2, v) == nabla_l(v, 2, sphere_omega)

    def test_unit_corrupted_theta0_rejected(self, sphere_omega):
        from jets import InfinityConnection, projective_basis_connection
        from errors import InputError
        conn = projective_basis_connection(sphere_omega, 1)
        zero0 = tuple(tuple(e * 0 for e in row) for row in conn.matrices[0])
        with pytest.raises(InputError):
            InfinityConnection(sphere_omega, (zero0,) + conn.matrices[1:])

    def test_unit_order_out_of_range(self, sphere_omega):
        from jets import projective_basis_connection
        from errors import InputError
        conn = projective_basis_connection(sphere_omega, 1)
        with pytest.raises(InputError):
            conn.apply(2, sphere_omega.generator(0))

    def test_unit_free_connection_needs_free_module(self, sphere_omega):
        from jets import free_connection
        from errors import InputError
        with pytest.raises(InputError):
            free_connection(sphere_omega, 2)

    def test_unit_lk_curvature_arguments(self, sphere_omega):
        from jets import lk_curvature, projective_basis_connection
        from errors import InputError
        conn = projective_basis_connection(sphere_omega, 2)
        with pytest.raises(InputError):
            lk_curvature(conn, 0, 2, sphere_omega.generator(0))
        with pytest.raises(InputError):
            lk_curvature(conn, 2, 1, sphere_omega.generator(0))

    def test_unit_free_module_curvature_vanishes(self, sphere):
        from jets import free_connection, lk_curvature
        from ellipsoid import free_module
        free = free_module(sphere, 2)
        conn = free_connection(free, 2)
        for e in free.generators():
            assert lk_curvature(conn, 1, 1, e).is_zero()

    def test_unit_stratification_needs_two_orders(self, sphere_omega):
        from jets import projective_basis_connection, stratification_probe
        from errors import InputError
        conn = projective_basis_connection(sphere_omega, 2)
        with pytest.raises(InputError):
            stratification_probe(conn, 1)
        with pytest.raises(InputError):
            stratification_probe(conn, 3)


# =====================================================
# 6. PAIRING WITH OPERATORS (unit)
# =====================================================

class TestOperatorPairing:

    @pytest.mark.parametrize("l", [1, 2])
    def test_unit_pairing_with_jet_applies_operator(self, sphere, sphere_fields, poly, l):
        from jets import jet, operator_pairing
        from weyl import apply_operator, from_tangent_field
        a = poly("x1^2*x2 - 3*x3 + x2*x3")
        for f in sphere_fields:
            T = from_tangent_field(f)
            assert operator_pairing(T, jet(a, l, sphere)) == apply_operator(T, a), f"{f.name} at l = {l}"

    def test_unit_second_order_pairing(self, sphere, sphere_fields, poly):
        from jets import jet, operator_pairing
        from weyl import apply_operator, compose, from_tangent_field
        T = compose(from_tangent_field(sphere_fields[0]), from_tangent_field(sphere_fields[1]))
        a = poly("x1*x2*x3 + x1^3")
        assert operator_pairing(T, jet(a, 2, sphere)) == apply_operator(T, a)

    @pytest.mark.parametrize("l", [1, 2])
    def test_unit_rho_is_contraction_of_nabla(self, sphere_omega, sphere_fields, rng, l):
        from jets import contract_operator, nabla_l
        from ellipsoid import random_lift
        from weyl import compose, from_tangent_field, opmatrix_apply, rho_lift
        ops = [from_tangent_field(f) for f in sphere_fields]
        if l == 2:
            ops.append(compose(ops[0], ops[1]))
        for _ in range(3):
            v = random_lift(sphere_omega, rng)
            for T in ops:
                expected = opmatrix_apply(rho_lift(T, sphere_omega), v)
                assert contract_operator(T, nabla_l(v, l, sphere_omega)) == expected, T.format()

    def test_unit_generators_pair_to_rho_columns(self, sphere_omega, sphere_fields):
        from jets import contract_operator, nabla_l
        from connection import apply_nabla
        from weyl import from_tangent_field
        for f in sphere_fields:
            for e in sphere_omega.generators():
                got = contract_operator(from_tangent_field(f), nabla_l(e, 1, sphere_omega))
                assert got == apply_nabla(f, e, sphere_omega)

    def test_unit_order_above_jet_order_rejected(self, sphere, sphere_fields, sphere_p1):
        from jets import JetElement, operator_pairing
        from weyl import compose, from_tangent_field
        from errors import InputError
        T = compose(from_tangent_field(sphere_fields[0]), from_tangent_field(sphere_fields[0]))
        with pytest.raises(InputError):
            operator_pairing(T, JetElement(sphere_p1, sphere_p1.ctx.one()))

    def test_unit_tensor_ring_rejected(self, sphere, sphere_fields):
        from jets import JetElement, build_jet_tensor_ring, operator_pairing
        from weyl import from_tangent_field
        from errors import InputError
        jr = build_jet_tensor_ring(sphere, (1, 1))
        with pytest.raises(InputError):
            operator_pairing(from_tangent_field(sphere_fields[0]), JetElement(jr, jr.ctx.one()))

# =====================================================
# 7. STRATIFICATION (integration)
# =====================================================

class TestStratification:

    def test_integration_free_module_is_flat(self, sphere):
        from jets import free_connection, stratification_probe
        from ellipsoid import free_module
        result = stratification_probe(free_connection(free_module(sphere, 2), 3))
        assert result["flat"] is True
        assert result["witness"] is None
        assert len(result["checked"]) == 2 * (1 + 2), f"Got {len(result['checked'])} checks"

    def test_integration_sphere_omega_is_not_flat(self, sphere_omega):
        from jets import lk_curvature, projective_basis_connection, stratification_probe
        conn = projective_basis_connection(sphere_omega, 2)
        assert not lk_curvature(conn, 1, 1, sphere_omega.generator(0)).is_zero()
        result = stratification_probe(conn)
        assert result["flat"] is False
        assert result["witness"]["l"] == 1 and result["witness"]["k"] == 1
        assert len(result["witness"]["value"]) == 3
