"""
Differential Operators on Ellipsoid Rings
==========================================
Operators are stored normal-ordered, T = sum_alpha c_alpha d^alpha, with the
coefficients reduced mod H. They act on A through any representative:
f -> sum c_alpha d^alpha f, reduced. Tangent fields and multiplications
generate everything that can be built here, and both preserve (H), so the
action is well defined on A.

Composition uses the Leibniz rule

    d^alpha o c = sum_{gamma <= alpha} binom(alpha, gamma) d^gamma(c) d^(alpha - gamma)

which is the iterated form of d_i o c = c d_i + dc/dx_i.

rho lifts an operator on A to an operator matrix on Omega:
row i of rho(T) is T composed with multiplication by row i of M.
"""

import logging
from dataclasses import dataclass
from itertools import product
from math import comb
from types import MappingProxyType
from typing import Dict, List, Mapping, Sequence, Tuple

from errors import InputError
from exactpoly import Polynomial
from linalg import RingVector
from ellipsoid import EllipsoidRing, ProjectiveModule, TangentField, canonical_rep, tangent_generators

logger = logging.getLogger("weyl")

MultiIndex = Tuple[int, ...]


# =====================================================
# OPERATORS
# =====================================================

class DiffOperator:
    """sum c_alpha d^alpha with nonzero reduced coefficients."""

    __slots__ = ("ring", "_terms")

    def __init__(self, ring: EllipsoidRing, terms: Mapping[MultiIndex, Polynomial] = None):
        self.ring = ring
        clean: Dict[MultiIndex, Polynomial] = {}
        for alpha, c in (terms or {}).items():
            if len(alpha) != ring.k or any(a < 0 for a in alpha):
                raise InputError(f"bad multi-index {alpha} for {ring.k} variables")
            c = ring.reduce(ring.ctx.check(c))
            if not c.is_zero():
                clean[tuple(alpha)] = c
        self._terms = clean

    @property
    def terms(self) -> Mapping[MultiIndex, Polynomial]:
        return MappingProxyType(self._terms)

    def _same(self, other: "DiffOperator"):
        if other.ring is not self.ring:
            raise InputError("operators live on different rings")

    def __eq__(self, other) -> bool:
        if not isinstance(other, DiffOperator):
            return NotImplemented
        return self.ring is other.ring and self._terms == other._terms

    def __hash__(self) -> int:
        return hash(frozenset(self._terms.items()))

    def __add__(self, other: "DiffOperator") -> "DiffOperator":
        self._same(other)
        out = dict(self._terms)
        for alpha, c in other._terms.items():
            out[alpha] = out.get(alpha, Polynomial.zero(self.ring.k)) + c
        return DiffOperator(self.ring, out)

    def __neg__(self) -> "DiffOperator":
        return DiffOperator(self.ring, {a: -c for a, c in self._terms.items()})

    def __sub__(self, other: "DiffOperator") -> "DiffOperator":
        return self + (-other)

    def __call__(self, f: Polynomial) -> Polynomial:
        return apply_operator(self, f)

    def is_zero(self) -> bool:
        return not self._terms

    def order(self) -> int:
        return max((sum(a) for a in self._terms), default=-1)

    def scale(self, a: Polynomial) -> "DiffOperator":
        """Left multiplication a*T."""
        return DiffOperator(self.ring, {alpha: a * c for alpha, c in self._terms.items()})

    def format(self) -> str:
        return format_operator(self)

    def __repr__(self) -> str:
        return f"DiffOperator({self.format()})"


def zero_operator(ring: EllipsoidRing) -> DiffOperator:
    return DiffOperator(ring)


def multiplication(ring: EllipsoidRing, a: Polynomial) -> DiffOperator:
    return DiffOperator(ring, {(0,) * ring.k: a})


def identity_operator(ring: EllipsoidRing) -> DiffOperator:
    return multiplication(ring, Polynomial.constant(ring.k, 1))


def from_tangent_field(delta: TangentField) -> DiffOperator:
    k = delta.ring.k
    terms = {}
    for i, c in enumerate(delta.coefficients):
        alpha = [0] * k
        alpha[i] = 1
        terms[tuple(alpha)] = c
    return DiffOperator(delta.ring, terms)


def partial(ring: EllipsoidRing, i: int) -> DiffOperator:
    """The ambient d/dx_{i+1}; not tangent on its own."""
    alpha = [0] * ring.k
    alpha[i] = 1
    return DiffOperator(ring, {tuple(alpha): Polynomial.constant(ring.k, 1)})


def _derivative(f: Polynomial, gamma: MultiIndex) -> Polynomial:
    for i, g in enumerate(gamma):
        for _ in range(g):
            f = f.diff(i)
    return f


def apply_operator(T: DiffOperator, f: Polynomial) -> Polynomial:
    total = Polynomial.zero(T.ring.k)
    for alpha, c in T.terms.items():
        total = total + c * _derivative(f, alpha)
    return T.ring.reduce(total)


def compose(S: DiffOperator, T: DiffOperator) -> DiffOperator:
    """S o T in normal order."""
    S._same(T)
    k = S.ring.k
    out: Dict[MultiIndex, Polynomial] = {}
    for alpha, s in S.terms.items():
        for beta, t in T.terms.items():
            for gamma in product(*(range(a + 1) for a in alpha)):
                dt = _derivative(t, gamma)
                if dt.is_zero():
                    continue
                weight = 1
                for a, g in zip(alpha, gamma):
                    weight *= comb(a, g)
                index = tuple(a - g + b for a, g, b in zip(alpha, gamma, beta))
                out[index] = out.get(index, Polynomial.zero(k)) + s * dt * weight
    return DiffOperator(S.ring, out)


def iterated_commutator(T: DiffOperator, multipliers: Sequence[Polynomial]) -> DiffOperator:
    """[...[T, a_1]..., a_m]."""
    for a in multipliers:
        phi = multiplication(T.ring, a)
        T = compose(T, phi) - compose(phi, T)
    return T


def subset_sum_commutator(T: DiffOperator, multipliers: Sequence[Polynomial], f: Polynomial) -> Polynomial:
    """sum over H of (-1)^|H| (prod_{H} a_i) T((prod_{not H} a_i) f)."""
    k = T.ring.k
    m = len(multipliers)
    total = Polynomial.zero(k)
    for mask in range(1 << m):
        inside = Polynomial.constant(k, 1)
        outside = Polynomial.constant(k, 1)
        for i, a in enumerate(multipliers):
            if mask >> i & 1:
                inside = inside * a
            else:
                outside = outside * a
        sign = -1 if bin(mask).count("1") % 2 else 1
        total = total + inside * apply_operator(T, outside * f) * sign
    return T.ring.reduce(total)


def format_operator(T: DiffOperator) -> str:
    """coeff*d1^a1*d2^a2*... terms, highest order first."""
    if T.is_zero():
        return "0"
    pieces = []
    for alpha in sorted(T.terms, key=lambda a: (sum(a), a), reverse=True):
        c = T.terms[alpha]
        coeff = T.ring.format(c)
        parts = [f"d{i + 1}" if e == 1 else f"d{i + 1}^{e}" for i, e in enumerate(alpha) if e]
        if not parts:
            body = coeff
        elif coeff == "1":
            body = "*".join(parts)
        elif coeff == "-1":
            body = "-" + "*".join(parts)
        else:
            body = (f"({coeff})" if len(c) > 1 else coeff) + "*" + "*".join(parts)
        if pieces and body.startswith("-"):
            pieces.append(" - " + body[1:])
        elif pieces:
            pieces.append(" + " + body)
        else:
            pieces.append(body)
    return "".join(pieces)


# =====================================================
# OPERATOR MATRICES AND RHO
# =====================================================

@dataclass(frozen=True)
class OperatorMatrix:
    """Square grid of operators acting on lifts of module elements."""
    module: ProjectiveModule
    entries: Tuple[Tuple[DiffOperator, ...], ...]

    def __post_init__(self):
        n = self.module.rank
        if len(self.entries) != n or any(len(r) != n for r in self.entries):
            raise InputError(f"operator matrix must be {n}x{n}")

    def __sub__(self, other: "OperatorMatrix") -> "OperatorMatrix":
        if other.module is not self.module:
            raise InputError("operator matrices over different modules")
        return OperatorMatrix(self.module, tuple(
            tuple(a - b for a, b in zip(r1, r2)) for r1, r2 in zip(self.entries, other.entries)
        ))

    def is_zero(self) -> bool:
        return all(op.is_zero() for row in self.entries for op in row)

    def to_text(self) -> List[List[str]]:
        return [[format_operator(op) for op in row] for row in self.entries]


def _check_module(T: DiffOperator, km: ProjectiveModule):
    if T.ring is not km.ring:
        raise InputError("operator and module live on different rings")


def rho_lift(T: DiffOperator, km: ProjectiveModule) -> OperatorMatrix:
    _check_module(T, km)
    ring = km.ring
    return OperatorMatrix(km, tuple(
        tuple(compose(T, multiplication(ring, km.M[i, j])) for j in range(km.rank))
        for i in range(km.rank)
    ))


def opmatrix_apply(TM: OperatorMatrix, v: RingVector) -> RingVector:
    km = TM.module
    if len(v) != km.rank:
        raise InputError(f"expected a vector of length {km.rank}, got {len(v)}")
    k = km.ring.k
    out = []
    for row in TM.entries:
        total = Polynomial.zero(k)
        for op, x in zip(row, v.entries):
            total = total + apply_operator(op, x)
        out.append(total)
    return canonical_rep(RingVector.of(km.ctx, out), km)


def opmatrix_compose(TM1: OperatorMatrix, TM2: OperatorMatrix) -> OperatorMatrix:
    if TM1.module is not TM2.module:
        raise InputError("operator matrices over different modules")
    n = TM1.module.rank
    ring = TM1.module.ring
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            total = zero_operator(ring)
            for l in range(n):
                total = total + compose(TM1.entries[i][l], TM2.entries[l][j])
            row.append(total)
        rows.append(tuple(row))
    return OperatorMatrix(TM1.module, tuple(rows))


def multiplicativity_defect(S: DiffOperator, T: DiffOperator, km: ProjectiveModule) -> OperatorMatrix:
    return rho_lift(compose(S, T), km) - opmatrix_compose(rho_lift(S, km), rho_lift(T, km))


def _multiplication_matrix(km: ProjectiveModule) -> OperatorMatrix:
    return OperatorMatrix(km, tuple(
        tuple(multiplication(km.ring, km.M[i, j]) for j in range(km.rank)) for i in range(km.rank)
    ))


def opmatrix_zero_on_module(TM: OperatorMatrix) -> bool:
    """M o TM o M has only zero entries."""
    mult = _multiplication_matrix(TM.module)
    return opmatrix_compose(opmatrix_compose(mult, TM), mult).is_zero()


def opmatrix_descends(TM: OperatorMatrix) -> bool:
    """The image of the relation lift G lies in A*G."""
    return opmatrix_apply(TM, TM.module.G).is_zero()


# =====================================================
# TWO-SPHERE COMPARISON
# =====================================================

def _sphere_vector(km: ProjectiveModule, texts: Sequence[str]) -> RingVector:
    return RingVector.of(km.ctx, [km.ring.parse(t) for t in texts])


PRINTED_COMPOSITION = {
    (2, 0, 0): "x2*x3",
    (0, 0, 1): "x2",
    (1, 0, 1): "x1*x2",
    (1, 1, 0): "-x1*x3",
    (0, 1, 1): "x1^2",
}
PRINTED_RHO_OF_COMPOSITION = ("-2*x1*x3", "x1*x3", "-2*x1*x2")
PRINTED_COMPOSITION_OF_RHO = ("x1^2*x2*x3 + 3*x2*x3", "3*x1*x2^2*x3 - x1*x3", "x1*x2*x3^2 + 2*x1*x2")


def printed_comparison(km: ProjectiveModule) -> List[Dict[str, object]]:
    """Printed two-sphere values next to the computed ones.

    Vectors are compared through their canonical representatives; the row
    keeps the printed text as well. Only meaningful on Omega of the sphere
    x1^2 + x2^2 + x3^2 = 1.
    """
    ring = km.ring
    if ring.exponents != (2, 2, 2) or km.rank != 3:
        raise InputError("the two-sphere comparison needs Omega of the (2,2,2) ring")
    d12, d13, _ = (from_tangent_field(f) for f in tangent_generators(ring))
    composed = compose(d12, d13)
    printed = DiffOperator(ring, {a: ring.parse(t) for a, t in PRINTED_COMPOSITION.items()})
    mismatched = sorted(a for a in set(composed.terms) | set(printed.terms)
                        if composed.terms.get(a) != printed.terms.get(a))

    dx1 = km.generator(0)
    rho_comp = opmatrix_apply(rho_lift(composed, km), dx1)
    comp_rho = opmatrix_apply(opmatrix_compose(rho_lift(d12, km), rho_lift(d13, km)), dx1)
    printed_1 = canonical_rep(_sphere_vector(km, PRINTED_RHO_OF_COMPOSITION), km)
    printed_2 = canonical_rep(_sphere_vector(km, PRINTED_COMPOSITION_OF_RHO), km)

    return [
        {
            "item": "d12 o d13",
            "computed": format_operator(composed),
            "printed_text": format_operator(printed),
            "agree": not mismatched,
            "differing_terms": [format_operator(DiffOperator(ring, {a: Polynomial.constant(ring.k, 1)}))
                                for a in mismatched],
        },
        {
            "item": "rho(d12 o d13)(dx1)",
            "computed": rho_comp.to_text(),
            "printed_text": list(PRINTED_RHO_OF_COMPOSITION),
            "printed_canonical": printed_1.to_text(),
            "agree": rho_comp == printed_1,
        },
        {
            "item": "rho(d12) o rho(d13)(dx1)",
            "computed": comp_rho.to_text(),
            "printed_text": list(PRINTED_COMPOSITION_OF_RHO),
            "printed_canonical": printed_2.to_text(),
            "agree": comp_rho == printed_2,
        },
        {
            "item": "rho(d12 o d13) != rho(d12) o rho(d13) on dx1",
            "computed": not (rho_comp - comp_rho).is_zero(),
            "printed_claim": True,
            "agree": not (rho_comp - comp_rho).is_zero(),
        },
    ]
