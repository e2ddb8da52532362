"""
Ring Matrix Tests
=================
Vectors and matrices over a quotient ring, determinants and the 3x3
characteristic-polynomial invariants, checked against sympy.

Run:  pytest tests/test_linalg.py -v
"""

import pytest
import sympy


@pytest.fixture(scope="module")
def free_xy():
    """Q[x, y] with no relations, so sympy can act as the oracle."""
    from exactpoly import RingContext
    return RingContext(("x", "y"))


def _matrix(ctx, rows):
    from linalg import RingMatrix
    return RingMatrix.of(ctx, [[ctx.parse(e) if isinstance(e, str) else e for e in row] for row in rows])


def _sympy_matrix(A):
    return sympy.Matrix([[sympy.sympify(e.replace("^", "**")) for e in row] for row in A.to_text()])


A3 = [["x", "y^2", "1"], ["2", "x*y", "-x"], ["y", "0", "x + 1"]]
B3 = [["1", "x", "0"], ["y", "1", "x"], ["0", "y", "2"]]


# =====================================================
# 1. CONSTRUCTION (unit)
# =====================================================

class TestConstruction:

    def test_unit_entries_are_reduced(self, sphere):
        from linalg import RingMatrix
        A = RingMatrix.of(sphere.ctx, [[sphere.parse("x1^2"), 0], [0, 1]])
        assert sphere.format(A[0, 0]) == "-x2^2 - x3^2 + 1"

    def test_unit_ragged_rows_rejected(self, free_xy):
        from linalg import RingMatrix
        from errors import InputError
        with pytest.raises(InputError):
            RingMatrix.of(free_xy, [[1, 2], [3]])

    def test_unit_empty_matrix_rejected(self, free_xy):
        from linalg import RingMatrix
        from errors import InputError
        with pytest.raises(InputError):
            RingMatrix.of(free_xy, [])

    def test_unit_shape_mismatch_in_product(self, free_xy):
        from linalg import zero_matrix
        from errors import InputError
        with pytest.raises(InputError):
            zero_matrix(free_xy, 2, 3) * zero_matrix(free_xy, 2, 3)

    def test_unit_unit_vectors(self, free_xy):
        from linalg import RingVector
        e = RingVector.unit(free_xy, 3, 1)
        assert [free_xy.format(c) for c in e] == ["0", "1", "0"]


# =====================================================
# 2. PRODUCTS AND TRACES (unit)
# =====================================================

class TestProducts:

    def test_unit_product_matches_sympy(self, free_xy):
        A, B = _matrix(free_xy, A3), _matrix(free_xy, B3)
        expected = (_sympy_matrix(A) * _sympy_matrix(B)).expand()
        assert (_sympy_matrix(A * B) - expected).expand() == sympy.zeros(3, 3)

    def test_unit_trace_of_commutator_vanishes(self, free_xy):
        from linalg import commutator, matrix_trace
        A, B = _matrix(free_xy, A3), _matrix(free_xy, B3)
        assert matrix_trace(commutator(A, B)).is_zero()

    def test_unit_dot_matvec_vecmat(self, free_xy):
        from linalg import RingVector, dot, matvec, vecmat
        A = _matrix(free_xy, A3)
        v = RingVector.of(free_xy, [free_xy.parse("x"), 1, free_xy.parse("y")])
        y = RingVector.of(free_xy, [1, free_xy.parse("y"), 0])
        assert dot(y, matvec(A, v)) == dot(vecmat(y, A), v), "y.(Av) != (yA).v"

    def test_unit_outer_is_rank_one(self, free_xy):
        from linalg import RingVector, det, outer
        v = RingVector.of(free_xy, [free_xy.parse("x"), 1, free_xy.parse("y")])
        y = RingVector.of(free_xy, [1, 2, free_xy.parse("x*y")])
        assert det(outer(v, y)).is_zero()


# =====================================================
# 3. DETERMINANT AND CHARACTERISTIC POLYNOMIAL (unit)
# =====================================================

class TestDeterminant:

    def test_unit_det_matches_sympy(self, free_xy):
        from linalg import det
        A = _matrix(free_xy, A3)
        ours = sympy.sympify(free_xy.format(det(A)).replace("^", "**"))
        assert sympy.expand(ours - _sympy_matrix(A).det()) == 0

    def test_unit_det_is_multiplicative(self, free_xy):
        from linalg import det
        A, B = _matrix(free_xy, A3), _matrix(free_xy, B3)
        assert det(A * B) == det(A) * det(B)

    def test_unit_det_of_identity(self, sphere):
        from linalg import det, identity
        assert det(identity(sphere.ctx, 4)) == 1

    def test_unit_det_size_limit(self, free_xy):
        from linalg import det, identity
        from errors import UnsupportedSizeError
        with pytest.raises(UnsupportedSizeError):
            det(identity(free_xy, 5))

    def test_unit_charpoly3_numeric(self, free_xy):
        from linalg import charpoly3
        cp = charpoly3(_matrix(free_xy, [[1, 2, 0], [3, 4, 0], [0, 0, 5]]))
        assert cp.trace == 10
        assert cp.det == -10
        assert cp.minor_sum == 23, f"Expected 23, got {free_xy.format(cp.minor_sum)}"
        assert cp.p_A == 35, f"Expected 35, got {free_xy.format(cp.p_A)}"

    def test_unit_charpoly3_matches_sympy(self, free_xy):
        from linalg import charpoly3
        A = _matrix(free_xy, A3)
        cp = charpoly3(A)
        lam = sympy.Symbol("lam")
        expected = _sympy_matrix(A).charpoly(lam).as_expr()
        as_sympy = [sympy.sympify(free_xy.format(p).replace("^", "**")) for p in (cp.trace, cp.minor_sum, cp.det)]
        ours = lam ** 3 - as_sympy[0] * lam ** 2 + as_sympy[1] * lam - as_sympy[2]
        assert sympy.expand(ours - expected) == 0

    def test_unit_charpoly3_shape(self, free_xy):
        from linalg import charpoly3, identity
        from errors import InputError
        with pytest.raises(InputError):
            charpoly3(identity(free_xy, 2))


# =====================================================
# 4. JSON (unit)
# =====================================================

class TestMatrixJson:

    def test_unit_json_layout(self, free_xy):
        from linalg import matrix_to_json
        data = matrix_to_json(_matrix(free_xy, B3))
        assert data["rows"] == 3 and data["cols"] == 3
        assert data["entries"][1] == ["y", "1", "x"]

    def test_unit_json_shape_checked(self, free_xy):
        from linalg import matrix_from_json
        from errors import InputError
        with pytest.raises(InputError):
            matrix_from_json({"rows": 2, "cols": 2, "entries": [["1", "0"]]}, free_xy)
        with pytest.raises(InputError):
            matrix_from_json({"rows": 1}, free_xy)
