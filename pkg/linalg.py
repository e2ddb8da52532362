"""
Matrices and Vectors over a RingContext
=========================================
Small dense matrices whose entries are normal forms in a quotient ring:
products, commutators, traces, Laplace determinants (n <= 4) and the
invariants of a 3x3 characteristic polynomial.

JSON shape: {"rows": n, "cols": m, "entries": [["poly", ...], ...]}
"""

import logging
from dataclasses import dataclass
from itertools import permutations
from typing import Callable, Iterable, List, NamedTuple, Sequence, Union

from errors import InputError, UnsupportedSizeError
from exactpoly import Polynomial, RingContext, Scalar

logger = logging.getLogger("linalg")

Entry = Union[Polynomial, Scalar]


def _as_poly(ctx: RingContext, value: Entry) -> Polynomial:
    if isinstance(value, Polynomial):
        return ctx.reduce(value)
    return ctx.const(value)


# =====================================================
# VECTORS
# =====================================================

@dataclass(frozen=True)
class RingVector:
    """Column of reduced ring elements."""
    ctx: RingContext
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "entries", tuple(_as_poly(self.ctx, e) for e in self.entries))

    @classmethod
    def of(cls, ctx: RingContext, entries: Iterable[Entry]) -> "RingVector":
        return cls(ctx, tuple(entries))

    @classmethod
    def zero(cls, ctx: RingContext, n: int) -> "RingVector":
        return cls(ctx, tuple(ctx.zero() for _ in range(n)))

    @classmethod
    def unit(cls, ctx: RingContext, n: int, i: int) -> "RingVector":
        return cls(ctx, tuple(ctx.one() if j == i else ctx.zero() for j in range(n)))

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> Polynomial:
        return self.entries[i]

    def __iter__(self):
        return iter(self.entries)

    def _same(self, other: "RingVector"):
        if other.ctx is not self.ctx:
            raise InputError("vectors live in different rings")
        if len(other) != len(self):
            raise InputError(f"length mismatch: {len(self)} vs {len(other)}")

    def __add__(self, other: "RingVector") -> "RingVector":
        self._same(other)
        return RingVector(self.ctx, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "RingVector") -> "RingVector":
        self._same(other)
        return RingVector(self.ctx, tuple(a - b for a, b in zip(self.entries, other.entries)))

    def __neg__(self) -> "RingVector":
        return RingVector(self.ctx, tuple(-a for a in self.entries))

    def scale(self, a: Entry) -> "RingVector":
        a = _as_poly(self.ctx, a)
        return RingVector(self.ctx, tuple(a * e for e in self.entries))

    def map_entries(self, fn: Callable[[Polynomial], Polynomial]) -> "RingVector":
        return RingVector(self.ctx, tuple(fn(e) for e in self.entries))

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries)

    def to_text(self) -> List[str]:
        return [self.ctx.format(e) for e in self.entries]


# =====================================================
# MATRICES
# =====================================================

@dataclass(frozen=True)
class RingMatrix:
    """Row-major grid of reduced ring elements."""
    ctx: RingContext
    entries: tuple

    def __post_init__(self):
        rows = tuple(tuple(_as_poly(self.ctx, e) for e in row) for row in self.entries)
        if not rows or not rows[0]:
            raise InputError("matrices must have at least one row and column")
        if any(len(row) != len(rows[0]) for row in rows):
            raise InputError("ragged matrix rows")
        object.__setattr__(self, "entries", rows)

    @classmethod
    def of(cls, ctx: RingContext, rows: Iterable[Iterable[Entry]]) -> "RingMatrix":
        return cls(ctx, tuple(tuple(r) for r in rows))

    @property
    def rows(self) -> int:
        return len(self.entries)

    @property
    def cols(self) -> int:
        return len(self.entries[0])

    @property
    def shape(self):
        return self.rows, self.cols

    def is_square(self) -> bool:
        return self.rows == self.cols

    def __getitem__(self, ij) -> Polynomial:
        i, j = ij
        return self.entries[i][j]

    def row(self, i: int) -> RingVector:
        return RingVector(self.ctx, self.entries[i])

    def col(self, j: int) -> RingVector:
        return RingVector(self.ctx, tuple(r[j] for r in self.entries))

    def _same(self, other: "RingMatrix"):
        if other.ctx is not self.ctx:
            raise InputError("matrices live in different rings")
        if other.shape != self.shape:
            raise InputError(f"shape mismatch: {self.shape} vs {other.shape}")

    def __add__(self, other: "RingMatrix") -> "RingMatrix":
        self._same(other)
        return RingMatrix(self.ctx, tuple(
            tuple(a + b for a, b in zip(r1, r2)) for r1, r2 in zip(self.entries, other.entries)
        ))

    def __sub__(self, other: "RingMatrix") -> "RingMatrix":
        self._same(other)
        return RingMatrix(self.ctx, tuple(
            tuple(a - b for a, b in zip(r1, r2)) for r1, r2 in zip(self.entries, other.entries)
        ))

    def __neg__(self) -> "RingMatrix":
        return self.map_entries(lambda e: -e)

    def __mul__(self, other) -> "RingMatrix":
        if isinstance(other, RingMatrix):
            if other.ctx is not self.ctx:
                raise InputError("matrices live in different rings")
            if self.cols != other.rows:
                raise InputError(f"cannot multiply {self.shape} by {other.shape}")
            cols = [[other.entries[l][j] for l in range(other.rows)] for j in range(other.cols)]
            zero = self.ctx.zero()
            return RingMatrix(self.ctx, tuple(
                tuple(sum((a * b for a, b in zip(row, col)), zero) for col in cols)
                for row in self.entries
            ))
        return self.scale(other)

    def scale(self, a: Entry) -> "RingMatrix":
        a = _as_poly(self.ctx, a)
        return self.map_entries(lambda e: a * e)

    def map_entries(self, fn: Callable[[Polynomial], Polynomial]) -> "RingMatrix":
        return RingMatrix(self.ctx, tuple(tuple(fn(e) for e in row) for row in self.entries))

    def transpose(self) -> "RingMatrix":
        return RingMatrix(self.ctx, tuple(zip(*self.entries)))

    def is_zero(self) -> bool:
        return all(e.is_zero() for row in self.entries for e in row)

    def nonzero_entries(self):
        return [(i, j, e) for i, row in enumerate(self.entries) for j, e in enumerate(row) if not e.is_zero()]

    def to_text(self) -> List[List[str]]:
        return [[self.ctx.format(e) for e in row] for row in self.entries]


def identity(ctx: RingContext, n: int) -> RingMatrix:
    return RingMatrix(ctx, tuple(tuple(1 if i == j else 0 for j in range(n)) for i in range(n)))


def zero_matrix(ctx: RingContext, rows: int, cols: int = None) -> RingMatrix:
    cols = rows if cols is None else cols
    return RingMatrix(ctx, tuple(tuple(0 for _ in range(cols)) for _ in range(rows)))


def dot(y: RingVector, v: RingVector) -> Polynomial:
    """Row times column, reduced."""
    y._same(v)
    return y.ctx.reduce(sum((a * b for a, b in zip(y.entries, v.entries)), y.ctx.zero()))


def matvec(A: RingMatrix, v: RingVector) -> RingVector:
    if A.ctx is not v.ctx or A.cols != len(v):
        raise InputError(f"cannot apply {A.shape} matrix to a vector of length {len(v)}")
    return RingVector(A.ctx, tuple(
        sum((a * b for a, b in zip(row, v.entries)), A.ctx.zero()) for row in A.entries
    ))


def vecmat(y: RingVector, A: RingMatrix) -> RingVector:
    """Row vector times matrix."""
    if A.ctx is not y.ctx or A.rows != len(y):
        raise InputError(f"cannot multiply a row of length {len(y)} into a {A.shape} matrix")
    return matvec(A.transpose(), y)


def outer(v: RingVector, y: RingVector) -> RingMatrix:
    """Column v times row y."""
    if v.ctx is not y.ctx:
        raise InputError("vectors live in different rings")
    return RingMatrix(v.ctx, tuple(tuple(a * b for b in y.entries) for a in v.entries))


def commutator(A: RingMatrix, B: RingMatrix) -> RingMatrix:
    """AB - BA."""
    if not A.is_square():
        raise InputError(f"commutator needs square matrices, got {A.shape}")
    A._same(B)
    return A * B - B * A


def matrix_trace(A: RingMatrix) -> Polynomial:
    if not A.is_square():
        raise InputError(f"trace needs a square matrix, got {A.shape}")
    return A.ctx.reduce(sum((A.entries[i][i] for i in range(A.rows)), A.ctx.zero()))


def _sign(perm: Sequence[int]) -> int:
    sign = 1
    seen = list(perm)
    for i in range(len(seen)):
        while seen[i] != i:
            j = seen[i]
            seen[i], seen[j] = seen[j], seen[i]
            sign = -sign
    return sign


def det(A: RingMatrix) -> Polynomial:
    """Determinant by full expansion; n <= 4."""
    if not A.is_square():
        raise InputError(f"determinant needs a square matrix, got {A.shape}")
    n = A.rows
    if n > 4:
        raise UnsupportedSizeError(f"determinant only supported for n <= 4, got n = {n}")
    total = A.ctx.zero()
    for perm in permutations(range(n)):
        term = A.ctx.const(_sign(perm))
        for i, j in enumerate(perm):
            term = term * A.entries[i][j]
            if term.is_zero():
                break
        total = total + term
    return A.ctx.reduce(total)


class CharPoly3(NamedTuple):
    """Invariants of det(lambda*I - A) = lambda^3 - trace*lambda^2 + minor_sum*lambda - det.

    p_A is the explicit sum a11a22 + a11a33 + a22a33 + a21a12 + a31a13 + a32a23,
    which differs from minor_sum in the sign of the off-diagonal products.
    """
    trace: Polynomial
    p_A: Polynomial
    det: Polynomial
    minor_sum: Polynomial


def charpoly3(A: RingMatrix) -> CharPoly3:
    if A.shape != (3, 3):
        raise InputError(f"charpoly3 needs a 3x3 matrix, got {A.shape}")
    a = A.entries
    diag = a[0][0] * a[1][1] + a[0][0] * a[2][2] + a[1][1] * a[2][2]
    cross = a[1][0] * a[0][1] + a[2][0] * a[0][2] + a[2][1] * a[1][2]
    reduce = A.ctx.reduce
    return CharPoly3(
        trace=matrix_trace(A),
        p_A=reduce(diag + cross),
        det=det(A),
        minor_sum=reduce(diag - cross),
    )


# =====================================================
# JSON
# =====================================================

def matrix_to_json(A: RingMatrix) -> dict:
    return {"rows": A.rows, "cols": A.cols, "entries": A.to_text()}


def matrix_from_json(data: dict, ctx: RingContext) -> RingMatrix:
    try:
        rows, cols, entries = data["rows"], data["cols"], data["entries"]
    except (KeyError, TypeError) as exc:
        raise InputError(f"matrix JSON needs rows, cols and entries: {exc}") from exc
    if len(entries) != rows or any(len(r) != cols for r in entries):
        raise InputError(f"matrix JSON entries do not match the declared {rows}x{cols} shape")
    return RingMatrix(ctx, tuple(tuple(ctx.parse(e) for e in row) for row in entries))
