"""
Ellipsoid Rings and their Kähler Modules
=========================================
A = Q[x1..xk] / (H),  H = x1^p1 + ... + xk^pk - 1.

Omega(A) is presented as the free module on dx1..dxk modulo the single
relation G = (p1*x1^(p1-1), ..., pk*xk^(pk-1)). The section
s(dx_j) = e_j - (1/p_j) x_j G splits the presentation; its fundamental matrix

    M[i][j] = delta_ij - (p_i/p_j) * x_i^(p_i-1) * x_j

is an idempotent with M*G = 0. Classes of Omega are compared through
canonical_rep(v) = M*v, so no module Gröbner bases are needed.

Tangent fields are derivations sum f_i d/dx_i of the ambient ring that
preserve (H). The generators

    d_ij = p_j x_j^(p_j-1) d_i - p_i x_i^(p_i-1) d_j      (i < j)

have the common factor p divided out when every exponent equals p, which
gives x2*d1 - x1*d2 and friends on the sphere.
"""

import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from typing import List, Optional, Sequence, Tuple

import numpy as np

from cache import cached
from errors import InputError
from exactpoly import MonomialOrder, Polynomial, RingContext, monomials_of_degree
from linalg import RingMatrix, RingVector, dot, identity, matvec

logger = logging.getLogger("ellipsoid")


# =====================================================
# RING
# =====================================================

@dataclass(frozen=True)
class EllipsoidRing:
    exponents: Tuple[int, ...]
    H: Polynomial
    ctx: RingContext

    @property
    def k(self) -> int:
        return len(self.exponents)

    @property
    def label(self) -> str:
        return ",".join(str(p) for p in self.exponents)

    def x(self, i: int) -> Polynomial:
        """The variable x_{i+1}."""
        return Polynomial.variable(self.k, i)

    def reduce(self, f: Polynomial) -> Polynomial:
        return self.ctx.reduce(f)

    def parse(self, text: str) -> Polynomial:
        return self.ctx.parse(text)

    def format(self, f: Polynomial) -> str:
        return self.ctx.format(f)


def validate_exponents(exponents: Sequence[int]) -> Tuple[int, ...]:
    exps = tuple(exponents)
    if len(exps) < 2:
        raise InputError(f"an ellipsoid needs at least two variables, got {len(exps)}")
    for p in exps:
        if isinstance(p, bool) or not isinstance(p, int) or p < 1:
            raise InputError(f"exponents must be integers >= 1, got {exps}")
    return exps


def build_ring(exponents: Sequence[int], degree_cap: Optional[int] = None) -> EllipsoidRing:
    """Q[x1..xk]/(x1^p1 + ... + xk^pk - 1) under graded-lex with x1 > ... > xk."""
    exps = validate_exponents(exponents)

    def build() -> EllipsoidRing:
        k = len(exps)
        H = sum((Polynomial.variable(k, i) ** p for i, p in enumerate(exps)), Polynomial.constant(k, -1))
        ctx = RingContext(
            [f"x{i + 1}" for i in range(k)],
            relations=[H],
            order=MonomialOrder.graded_lex(k),
            degree_cap=degree_cap,
        )
        logger.info("Built ellipsoid ring", extra={'ring': ",".join(map(str, exps))})
        return EllipsoidRing(exps, H, ctx)

    return cached("ellipsoid_ring", {"exponents": list(exps), "cap": degree_cap}, build)


# =====================================================
# PROJECTIVE MODULES
# =====================================================

@dataclass(frozen=True)
class ProjectiveModule:
    """A^n modulo the span of G, with fundamental matrix M.

    The unit vectors are lifts of the generators; the rows of M are the dual
    functionals. A free module has G = 0 and M = I.
    """
    ring: EllipsoidRing
    G: RingVector
    M: RingMatrix
    label: str

    @property
    def ctx(self) -> RingContext:
        return self.ring.ctx

    @property
    def rank(self) -> int:
        return self.M.rows

    def generator(self, j: int) -> RingVector:
        return RingVector.unit(self.ctx, self.rank, j)

    def generators(self) -> List[RingVector]:
        return [self.generator(j) for j in range(self.rank)]

    def dual_basis(self) -> List[RingVector]:
        return [self.M.row(i) for i in range(self.rank)]

    def vector(self, entries) -> RingVector:
        v = RingVector.of(self.ctx, entries)
        if len(v) != self.rank:
            raise InputError(f"expected a vector of length {self.rank}, got {len(v)}")
        return v

    def perturbed(self, row: int = 0, col: int = 0, amount=1) -> "ProjectiveModule":
        """Copy with M[row][col] shifted by `amount`; negative control only."""
        entries = [list(r) for r in self.M.entries]
        entries[row][col] = entries[row][col] + amount
        return replace(self, M=RingMatrix.of(self.ctx, entries), label=f"{self.label} (perturbed)")


@dataclass(frozen=True)
class KaehlerModule(ProjectiveModule):
    """Omega(A) for an ellipsoid ring, presented through dx1..dxk."""


def build_kaehler(ring: EllipsoidRing) -> KaehlerModule:
    def build() -> KaehlerModule:
        k, ps = ring.k, ring.exponents
        x = [ring.x(i) for i in range(k)]
        G = RingVector.of(ring.ctx, [x[i] ** (p - 1) * p for i, p in enumerate(ps)])
        rows = []
        for i in range(k):
            row = []
            for j in range(k):
                entry = x[i] ** (ps[i] - 1) * x[j] * Fraction(-ps[i], ps[j])
                if i == j:
                    entry = entry + 1
                row.append(entry)
            rows.append(row)
        return KaehlerModule(ring, G, RingMatrix.of(ring.ctx, rows), f"Omega({ring.label})")

    return cached("kaehler_module", {"exponents": list(ring.exponents), "ring": id(ring)}, build)


def free_module(ring: EllipsoidRing, n: int) -> ProjectiveModule:
    """A^n with the standard projective basis."""
    if n < 1:
        raise InputError(f"free module rank must be >= 1, got {n}")
    return ProjectiveModule(ring, RingVector.zero(ring.ctx, n), identity(ring.ctx, n), f"A^{n}")


def canonical_rep(v: RingVector, km: ProjectiveModule) -> RingVector:
    """M*v: the canonical lift of the class of v."""
    if len(v) != km.rank:
        raise InputError(f"expected a vector of length {km.rank}, got {len(v)}")
    return matvec(km.M, v)


def same_class(v: RingVector, w: RingVector, km: ProjectiveModule) -> bool:
    return canonical_rep(v - w, km).is_zero()


def is_functional(y: RingVector, km: ProjectiveModule) -> bool:
    """A row is a functional on the module iff it annihilates the relation."""
    if len(y) != km.rank:
        raise InputError(f"expected a row of length {km.rank}, got {len(y)}")
    return dot(y, km.G).is_zero()


def evaluate_functional(y: RingVector, v: RingVector, km: ProjectiveModule) -> Polynomial:
    if not is_functional(y, km):
        raise InputError("row does not annihilate G, so it is not a functional on the module")
    return dot(y, v)


# =====================================================
# TANGENT FIELDS
# =====================================================

@dataclass(frozen=True)
class TangentField:
    """delta = sum f_i d/dx_i with delta(H) in (H)."""
    ring: EllipsoidRing
    coefficients: Tuple[Polynomial, ...]
    name: str = ""

    def __post_init__(self):
        if len(self.coefficients) != self.ring.k:
            raise InputError(f"a tangent field on {self.ring.k} variables needs {self.ring.k} coefficients")
        coeffs = tuple(self.ring.reduce(self.ring.ctx.check(c)) for c in self.coefficients)
        object.__setattr__(self, "coefficients", coeffs)
        if not self.ring.reduce(self.ambient(self.ring.H)).is_zero():
            raise InputError(f"field {self.name or coeffs} does not preserve (H)")

    def ambient(self, f: Polynomial) -> Polynomial:
        """delta(f) on the polynomial ring, unreduced."""
        out = Polynomial.zero(self.ring.k)
        for i, c in enumerate(self.coefficients):
            if not c.is_zero():
                out = out + c * f.diff(i)
        return out

    def __call__(self, f: Polynomial) -> Polynomial:
        return self.ring.reduce(self.ambient(f))

    def is_zero(self) -> bool:
        return all(c.is_zero() for c in self.coefficients)

    def format(self) -> str:
        parts = []
        for i, c in enumerate(self.coefficients):
            if c.is_zero():
                continue
            text = self.ring.format(c)
            if len(c) > 1:
                text = f"({text})"
            parts.append(f"{text}*d{i + 1}")
        return " + ".join(parts).replace("+ -", "- ") if parts else "0"


def apply_field_vector(delta: TangentField, v: RingVector) -> RingVector:
    return v.map_entries(delta)


def apply_field_matrix(delta: TangentField, A: RingMatrix) -> RingMatrix:
    """delta applied entrywise."""
    return A.map_entries(delta)


def tangent_generators(ring: EllipsoidRing) -> List[TangentField]:
    k, ps = ring.k, ring.exponents
    common = ps[0] if len(set(ps)) == 1 else 1
    fields = []
    for i in range(k):
        for j in range(i + 1, k):
            coeffs = [Polynomial.zero(k) for _ in range(k)]
            coeffs[i] = ring.x(j) ** (ps[j] - 1) * Fraction(ps[j], common)
            coeffs[j] = ring.x(i) ** (ps[i] - 1) * Fraction(-ps[i], common)
            fields.append(TangentField(ring, tuple(coeffs), f"d{i + 1}{j + 1}"))
    return fields


def lie_bracket(delta: TangentField, eta: TangentField) -> TangentField:
    """[delta, eta] = sum (delta(g_i) - eta(f_i)) d_i."""
    if delta.ring is not eta.ring:
        raise InputError("tangent fields live on different rings")
    coeffs = tuple(delta(g) - eta(f) for f, g in zip(delta.coefficients, eta.coefficients))
    return TangentField(delta.ring, coeffs, f"[{delta.name},{eta.name}]")


# =====================================================
# SEEDED SAMPLES
# =====================================================

def random_element(ring: EllipsoidRing, rng: np.random.Generator, max_degree: int = 2, coeff_bound: int = 3) -> Polynomial:
    """Reduced element with small integer coefficients on monomials of degree <= max_degree."""
    terms = {}
    for d in range(max_degree + 1):
        for mono in monomials_of_degree(range(ring.k), d, ring.k):
            if rng.random() < 0.5:
                terms[mono] = int(rng.integers(-coeff_bound, coeff_bound + 1))
    return ring.reduce(Polynomial(ring.k, terms))


def random_lift(km: ProjectiveModule, rng: np.random.Generator, max_degree: int = 2) -> RingVector:
    return RingVector.of(km.ctx, [random_element(km.ring, rng, max_degree) for _ in range(km.rank)])
