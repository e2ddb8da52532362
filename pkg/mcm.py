"""
Matrix Factorizations of x^m + y^n + z^2
=========================================
The 4x4 pair (phi, psi) over Q[x,y,z] with phi*psi = psi*phi = f*I gives a
two-periodic resolution of a maximal Cohen-Macaulay module over
Q[x,y,z]/(f). Only the factorization identities are checked here.
"""

import logging
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Optional

from errors import InputError, VerificationFailure
from exactpoly import Polynomial, RingContext
from linalg import RingMatrix, identity
from reports import VerificationReport

logger = logging.getLogger("mcm")


@lru_cache(maxsize=1)
def mcm_context() -> RingContext:
    """Q[x,y,z] with no relations."""
    return RingContext(("x", "y", "z"))


def f_polynomial(m: int, n: int) -> Polynomial:
    ctx = mcm_context()
    return ctx.var("x") ** m + ctx.var("y") ** n + ctx.var("z") ** 2


@dataclass(frozen=True)
class FactorizationPair:
    m: int
    n: int
    k: int
    l: int
    f: Polynomial
    phi: RingMatrix
    psi: RingMatrix

    @property
    def label(self) -> str:
        return f"m={self.m} n={self.n} k={self.k} l={self.l}"

    def perturbed(self, row: int = 0, col: int = 0, amount=1) -> "FactorizationPair":
        """Copy with phi[row][col] shifted; negative control only."""
        entries = [list(r) for r in self.phi.entries]
        entries[row][col] = entries[row][col] + amount
        return replace(self, phi=RingMatrix.of(self.phi.ctx, entries))


def _check_ranges(m: int, n: int, k: int, l: int):
    for name, value in (("m", m), ("n", n), ("k", k), ("l", l)):
        if isinstance(value, bool) or not isinstance(value, int):
            raise InputError(f"{name} must be an integer, got {value!r}")
    if m < 2 or n < 2:
        raise InputError(f"m and n must be >= 2, got m={m} n={n}")
    if not 0 <= k <= m - 1:
        raise InputError(f"k must lie in [0, {m - 1}], got {k}")
    if not 0 <= l <= n - 1:
        raise InputError(f"l must lie in [0, {n - 1}], got {l}")


def build_factorization(m: int, n: int, k: int, l: int) -> FactorizationPair:
    _check_ranges(m, n, k, l)
    ctx = mcm_context()
    x, y, z = ctx.var("x"), ctx.var("y"), ctx.var("z")
    O = ctx.zero()

    phi = RingMatrix.of(ctx, [
        [x ** (m - k), y ** (n - l), O, z],
        [y ** l, -x ** k, z, O],
        [z, O, -y ** (n - l), -x ** k],
        [O, z, x ** (m - k), -y ** l],
    ])
    psi = RingMatrix.of(ctx, [
        [x ** k, y ** (n - l), z, O],
        [y ** l, -x ** (m - k), O, z],
        [O, z, -y ** l, x ** k],
        [z, O, -x ** (m - k), -y ** (n - l)],
    ])
    pair = FactorizationPair(m, n, k, l, f_polynomial(m, n), phi, psi)

    report = verify_factorization(pair)
    if not report.success:
        bad = report.failures()[0]
        raise VerificationFailure(f"factorization {pair.label} failed: {bad.name}", witness=bad.witness)
    return pair


def _first_difference(A: RingMatrix, B: RingMatrix) -> Optional[str]:
    ctx = A.ctx
    for i in range(A.rows):
        for j in range(A.cols):
            if A[i, j] != B[i, j]:
                return f"entry ({i + 1},{j + 1}): {ctx.format(A[i, j])} vs {ctx.format(B[i, j])}"
    return None


def verify_factorization(pair: FactorizationPair) -> VerificationReport:
    """phi*psi = psi*phi = f*I and the periodicity phi*psi*phi = f*phi."""
    report = VerificationReport(suite=f"mcm {pair.label}")
    fI = identity(pair.phi.ctx, 4).scale(pair.f)
    phipsi = pair.phi * pair.psi
    psiphi = pair.psi * pair.phi

    for name, lhs, rhs in (
        ("phi*psi = f*I", phipsi, fI),
        ("psi*phi = f*I", psiphi, fI),
        ("phi*psi*phi = f*phi", phipsi * pair.phi, pair.phi.scale(pair.f)),
    ):
        diff = _first_difference(lhs, rhs)
        report.add(name, diff is None, witness=diff or "")
    return report


def factorization_sweep(ms: Iterable[int] = (2, 3), ns: Iterable[int] = (2, 3)) -> VerificationReport:
    """Every in-range (k, l) for each (m, n)."""
    report = VerificationReport(suite="mcm sweep")
    for m in ms:
        for n in ns:
            for k in range(m):
                for l in range(n):
                    try:
                        pair = build_factorization(m, n, k, l)
                    except VerificationFailure as exc:
                        report.add(f"m={m} n={n} k={k} l={l}", False, witness=exc.witness)
                        continue
                    report.add(pair.label, True)
    logger.info("Factorization sweep finished", extra={'check': "sweep", 'passed': report.success})
    return report
