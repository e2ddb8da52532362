"""
Verification Suites
===================
Every identity the library relies on, rechecked on concrete rings with
seeded samples. A suite never raises on a failed identity; it records a
CheckResult with a witness instead. ResourceError from the Gröbner kernel
does propagate, so the CLI can exit with its own code.

Suites are independent and run concurrently through asyncio.to_thread; the
reports come back in the order they were requested.
"""

import asyncio
import logging
import time
from dataclasses import dataclass
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from errors import InputError, KaehlerError, ResourceError
from exactpoly import Polynomial, monomials_of_degree, s_polynomial, taylor_shift
from linalg import RingMatrix, charpoly3, commutator, det, dot, identity, matrix_trace, matvec, vecmat, zero_matrix
from ellipsoid import (
    EllipsoidRing, KaehlerModule, ProjectiveModule, TangentField, build_kaehler, build_ring,
    canonical_rep, free_module, is_functional, lie_bracket, random_element, random_lift, tangent_generators,
)
from connection import (
    EndoTensor, OmegaValuedElement, ad_apply, ad_curvature, apply_nabla, bullet, chern_report,
    curvature, d_tensor, dual_apply, endo_equal, module_trace, omega_valued_nabla, projectivity_report,
    rho_endo, tensor_nabla,
)
from weyl import (
    DiffOperator, compose, from_tangent_field, identity_operator, iterated_commutator, multiplication,
    multiplicativity_defect, opmatrix_apply, opmatrix_descends, opmatrix_zero_on_module, printed_comparison,
    partial, rho_lift, subset_sum_commutator,
)
from jets import (
    InfinityConnection, JetElement, build_jet_ring, coassociativity_sides, comultiply, contract_operator,
    diff_membership_test, free_connection, jet, nabla_l, project, projective_basis_connection,
    stratification_probe, subset_sum_tensor, t_linear_part, tensor_difference_product, to_base,
)
from mcm import build_factorization, factorization_sweep, verify_factorization
from observability import log_check_complete, log_check_start
from reports import VerificationReport

logger = logging.getLogger("verification")

SPHERE = (2, 2, 2)


@dataclass(frozen=True)
class SuiteConfig:
    exponents: Tuple[int, ...] = SPHERE
    seed: int = 0
    samples: int = 20
    degree_cap: Optional[int] = None
    corrupt: bool = False

    @property
    def heavy_samples(self) -> int:
        """Sample count for auxiliary checks that build jet or operator products."""
        return max(1, self.samples // 4)

    @property
    def matrices_per_pair(self) -> int:
        """Random endomorphisms tried for every generator pair; 5 at the default."""
        return max(1, min(5, self.samples // 4))

    @property
    def tower_lifts(self) -> int:
        """Seeded lifts pushed through the jet tower; 10 at the default."""
        return max(1, min(10, self.samples // 2))


def load_module(config: SuiteConfig) -> Tuple[EllipsoidRing, KaehlerModule]:
    """The ring and Omega for the config; --corrupt shifts M[1][1] by one."""
    ring = build_ring(config.exponents, config.degree_cap)
    km = build_kaehler(ring)
    if config.corrupt:
        km = km.perturbed(0, 0, 1)
    return ring, km


class SuiteRun:
    """Collects timed, logged checks into one report."""

    def __init__(self, suite: str, config: SuiteConfig):
        self.suite = suite
        self.config = config
        self.rng = np.random.default_rng(config.seed)
        self.report = VerificationReport(suite=suite, seed=config.seed, samples=config.samples)

    def check(self, name: str, fn: Callable[[], tuple]) -> bool:
        """fn returns (passed, witness) or (passed, witness, detail)."""
        start = log_check_start(logger, self.suite, name)
        try:
            result = fn()
        except ResourceError:
            raise
        except KaehlerError as exc:
            result = (False, f"{type(exc).__name__}: {exc}")
        passed, witness = bool(result[0]), result[1]
        detail = result[2] if len(result) > 2 else {}
        log_check_complete(logger, self.suite, name, start, passed, witness)
        self.report.add(name, passed, witness, **detail)
        return passed


def _first_failure(count: int, predicate: Callable[[int], Optional[str]]) -> Tuple[bool, str]:
    """Run predicate(s) for each sample; it returns a witness on failure."""
    for s in range(count):
        witness = predicate(s)
        if witness:
            return False, f"sample {s}: {witness}"
    return True, ""


def _ambient_poly(nvars: int, rng: np.random.Generator, max_degree: int = 4) -> Polynomial:
    terms = {}
    for d in range(max_degree + 1):
        for mono in monomials_of_degree(range(nvars), d, nvars):
            if rng.random() < 0.3:
                terms[mono] = int(rng.integers(-5, 6))
    return Polynomial(nvars, terms)


def _random_matrix(ring: EllipsoidRing, rng: np.random.Generator, n: int) -> RingMatrix:
    return RingMatrix.of(ring.ctx, [[random_element(ring, rng, 1) for _ in range(n)] for _ in range(n)])


def _random_functional(km: ProjectiveModule, rng: np.random.Generator):
    return vecmat(random_lift(km, rng, 1), km.M)


def _random_tensor(km: ProjectiveModule, rng: np.random.Generator, pairs: int = 2) -> EndoTensor:
    return EndoTensor(km, tuple((_random_functional(km, rng), random_lift(km, rng, 1)) for _ in range(pairs)))


def _pairs(fields: Sequence[TangentField]):
    return [(fields[a], fields[b]) for a in range(len(fields)) for b in range(a + 1, len(fields))]


def _vec_text(ring: EllipsoidRing, v) -> str:
    return "(" + ", ".join(ring.format(e) for e in v) + ")"


# =====================================================
# EXACTPOLY
# =====================================================

def suite_exactpoly(config: SuiteConfig) -> VerificationReport:
    ring, _ = load_module(config)
    ctx = ring.ctx
    run = SuiteRun("exactpoly", config)
    rng = run.rng

    def idempotent():
        def one(s):
            r = ctx.reduce(_ambient_poly(ring.k, rng))
            return None if ctx.reduce(r) == r else ring.format(r)
        return _first_failure(config.samples, one)

    def ring_map():
        def one(s):
            f, g = _ambient_poly(ring.k, rng), _ambient_poly(ring.k, rng)
            rf, rg = ctx.reduce(f), ctx.reduce(g)
            if ctx.reduce(f + g) != ctx.reduce(rf + rg):
                return "sum"
            if ctx.reduce(f * g) != ctx.reduce(rf * rg):
                return "product"
            return None
        return _first_failure(config.samples, one)

    def confluent():
        jr = build_jet_ring(ring, 1)
        for name, c in (("base", ctx), ("P^1", jr.ctx)):
            G = c.groebner
            for i in range(len(G)):
                for j in range(i + 1, len(G)):
                    r = c.reduce(s_polynomial(G[i], G[j], c.order))
                    if not r.is_zero():
                        return False, f"{name}: S({i},{j}) reduces to {c.format(r)}"
        return True, "", {"basis_size": len(ctx.groebner), "jet_basis_size": len(jr.ctx.groebner)}

    def division():
        def one(s):
            f = _ambient_poly(ring.k, rng)
            quotients, r = ctx.reduce_with_quotients(f)
            total = r
            for q, g in zip(quotients, ctx.groebner):
                total = total + q * g
            if total != f:
                return f"quotients do not rebuild {ring.format(f)}"
            return None if r == ctx.reduce(f) else "remainder differs from reduce"
        return _first_failure(config.samples, one)

    def taylor_multiplicative():
        jr = build_jet_ring(ring, 2)
        t = jr.ctx.block("t")

        def one(s):
            a, b = random_element(ring, rng), random_element(ring, rng)
            lhs = taylor_shift(jr.x(a * b), 2, jr.ctx)
            rhs = (taylor_shift(jr.x(a), 2, jr.ctx) * taylor_shift(jr.x(b), 2, jr.ctx)).truncate(t, 2)
            return None if lhs == rhs else f"a = {ring.format(a)}, b = {ring.format(b)}"
        return _first_failure(config.samples, one)

    def first_order_relation():
        jr = build_jet_ring(ring, 1)
        dH = sum((jr.x(ring.H.diff(i)) * jr.ctx.var(f"t{i + 1}") for i in range(ring.k)), jr.ctx.zero())
        r = jr.reduce(dH)
        if not r.is_zero():
            return False, f"sum dH/dx_i t_i reduces to {jr.format(r)}"
        for i in range(ring.k):
            for j in range(i, ring.k):
                r = jr.reduce(jr.ctx.var(f"t{i + 1}") * jr.ctx.var(f"t{j + 1}"))
                if not r.is_zero():
                    return False, f"t{i + 1}*t{j + 1} reduces to {jr.format(r)}"
        return True, ""

    run.check("reduce is idempotent", idempotent)
    run.check("reduce respects sums and products", ring_map)
    run.check("S-polynomials of the basis reduce to 0", confluent)
    run.check("quotients rebuild the dividend", division)
    run.check("taylor_shift is multiplicative up to truncation", taylor_multiplicative)
    run.check("P^1 kills dH(t) and quadratic t-monomials", first_order_relation)
    return run.report


# =====================================================
# LINALG
# =====================================================

def suite_linalg(config: SuiteConfig) -> VerificationReport:
    ring, km = load_module(config)
    ctx = ring.ctx
    run = SuiteRun("linalg", config)
    rng = run.rng

    def trace_of_commutator():
        def one(s):
            A, B = _random_matrix(ring, rng, 3), _random_matrix(ring, rng, 3)
            tr = matrix_trace(commutator(A, B))
            return None if tr.is_zero() else ring.format(tr)
        return _first_failure(config.samples, one)

    def det_multiplicative():
        def one(s):
            A, B = _random_matrix(ring, rng, 3), _random_matrix(ring, rng, 3)
            return None if ctx.equal(det(A * B), det(A) * det(B)) else "det(AB) != det(A)det(B)"
        return _first_failure(config.samples, one)

    def charpoly():
        def one(s):
            A = _random_matrix(ring, rng, 3)
            cp = charpoly3(A)
            for lam in (-1, 0, 1, 2, 3):
                lhs = det(identity(ctx, 3).scale(lam) - A)
                rhs = cp.det * -1 + cp.minor_sum * lam - cp.trace * lam ** 2 + lam ** 3
                if not ctx.equal(lhs, rhs):
                    return f"lambda = {lam}"
            return None
        passed, witness = _first_failure(config.samples, one)
        detail = {}
        fields = tangent_generators(ring)
        if ring.k == 3 and len(fields) >= 2:
            cp = charpoly3(curvature(fields[0], fields[1], km))
            detail = {"curvature_p_A": ring.format(cp.p_A), "curvature_minor_sum": ring.format(cp.minor_sum)}
        return passed, witness, detail

    run.check("trace of a commutator is 0", trace_of_commutator)
    run.check("det is multiplicative", det_multiplicative)
    run.check("charpoly3 matches det(lambda*I - A)", charpoly)
    return run.report


# =====================================================
# PROJECTIVE BASIS
# =====================================================

def suite_projective(config: SuiteConfig) -> VerificationReport:
    ring, km = load_module(config)
    run = SuiteRun("projective", config)

    start = time.perf_counter()
    basis = None

    def build_basis_report():
        nonlocal basis
        basis = projectivity_report(km)
        return True, ""

    if run.check("projectivity report builds", build_basis_report):
        logger.debug("Projectivity report built", extra={'suite': "projective",
                                                          'duration_ms': round((time.perf_counter() - start) * 1000, 3)})
        for c in basis.checks:
            run.check(c.name, lambda c=c: (c.passed, c.witness, c.detail))

    fields = tangent_generators(ring)

    def tangent():
        for f in fields:
            r = ring.reduce(f.ambient(ring.H))
            if not r.is_zero():
                return False, f"{f.name}(H) = {ring.format(r)}"
        return True, "", {"generators": [f"{f.name} = {f.format()}" for f in fields]}

    def brackets():
        for a, b in _pairs(fields):
            try:
                lie_bracket(a, b)
            except InputError as exc:
                return False, f"[{a.name},{b.name}]: {exc}"
        return True, ""

    run.check("tangent generators preserve (H)", tangent)
    run.check("lie brackets of tangent fields are tangent", brackets)
    return run.report


# =====================================================
# CURVATURE
# =====================================================

SPHERE_CURVATURE_12_13 = (
    ("0", "x1*x3", "-x1*x2"),
    ("-x1*x3", "0", "x1^2"),
    ("x1*x2", "-x1^2", "0"),
)


def suite_curvature(config: SuiteConfig) -> VerificationReport:
    ring, km = load_module(config)
    run = SuiteRun("curvature", config)
    fields = tangent_generators(ring)
    zero = zero_matrix(ring.ctx, km.rank)

    def routes_agree():
        for a, b in _pairs(fields):
            if not endo_equal(curvature(a, b, km, "formula"), curvature(a, b, km, "definitional"), km):
                return False, f"({a.name},{b.name})"
        return True, "", {"pairs": len(_pairs(fields))}

    def alternating():
        for a in fields:
            if not curvature(a, a, km).is_zero():
                return False, f"R({a.name},{a.name}) != 0"
        for a, b in _pairs(fields):
            if not (curvature(a, b, km) + curvature(b, a, km)).is_zero():
                return False, f"R({a.name},{b.name}) + R({b.name},{a.name}) != 0"
        return True, ""

    def raw_trace():
        for a, b in _pairs(fields):
            tr = matrix_trace(curvature(a, b, km))
            if not tr.is_zero():
                return False, f"tr R({a.name},{b.name}) = {ring.format(tr)}"
        return True, ""

    def module_traces():
        rows = chern_report(km)
        bad = [r["pair"] for r in rows if not r["module_traces_agree"]]
        traces = {r["pair"]: r["module_trace_formula"] for r in rows}
        return not bad, f"routes disagree on {bad[0]}" if bad else "", {"module_traces": traces}

    run.check("formula and definitional curvature agree", routes_agree)
    run.check("curvature is alternating", alternating)
    run.check("raw trace of curvature is 0", raw_trace)
    run.check("module trace agrees along both routes", module_traces)

    if ring.exponents == SPHERE and not config.corrupt:
        d12, d13, _ = fields

        def sphere_matrix():
            expected = RingMatrix.of(ring.ctx, [[ring.parse(e) for e in row] for row in SPHERE_CURVATURE_12_13])
            got = curvature(d12, d13, km)
            return got == expected, f"got {got.to_text()}"

        def sphere_nabla():
            got = apply_nabla(d12, km.generator(2), km)
            expected = canonical_rep(km.vector([ring.parse("-x2*x3"), ring.parse("x1*x3"), ring.ctx.zero()]), km)
            return got == expected, f"got {_vec_text(ring, got)}"

        def non_flat():
            R = curvature(d12, d13, km)
            return not endo_equal(R, zero, km), "curvature vanishes on Omega", {
                "module_trace": ring.format(module_trace(R, km)),
                "det": ring.format(det(R)),
            }

        run.check("sphere curvature R(d12,d13) matches the printed matrix", sphere_matrix)
        run.check("sphere nabla(d12)(dx3) = -x2*x3 dx1 + x1*x3 dx2", sphere_nabla)
        run.check("sphere connection is not flat", non_flat)
    return run.report


# =====================================================
# CONNECTION
# =====================================================

def suite_connection(config: SuiteConfig) -> VerificationReport:
    ring, km = load_module(config)
    run = SuiteRun("connection", config)
    rng = run.rng
    fields = tangent_generators(ring)
    n = config.samples

    def pick(s):
        return fields[s % len(fields)]

    def leibniz():
        def one(s):
            delta, a, v = pick(s), random_element(ring, rng), random_lift(km, rng)
            lhs = apply_nabla(delta, v.scale(a), km)
            rhs = apply_nabla(delta, v, km).scale(a) + canonical_rep(v.scale(delta(a)), km)
            return None if lhs == rhs else f"{delta.name}, a = {ring.format(a)}"
        return _first_failure(n, one)

    def omega_contraction():
        def one(s):
            v = random_lift(km, rng)
            omega = omega_valued_nabla(v, km)
            for delta in fields:
                if omega.contract(delta) != apply_nabla(delta, v, km):
                    return f"contraction with {delta.name}"
            return None
        return _first_failure(n, one)

    def omega_leibniz():
        def one(s):
            a, v = random_element(ring, rng), random_lift(km, rng)
            lhs = omega_valued_nabla(v.scale(a), km)
            rhs = omega_valued_nabla(v, km).scale(a) + d_tensor(a, v, km)
            return None if lhs.C == rhs.C else f"a = {ring.format(a)}"
        return _first_failure(n, one)

    def dual_pairing():
        def one(s):
            delta, y, v = pick(s), _random_functional(km, rng), random_lift(km, rng)
            w = dual_apply(delta, y, km)
            if not is_functional(w, km):
                return f"nabla*({delta.name})(y) does not annihilate G"
            Mv = matvec(km.M, v)
            lhs = delta(dot(y, Mv))
            rhs = dot(w, Mv) + dot(vecmat(y, km.M), apply_nabla(delta, v, km))
            return None if ring.ctx.equal(lhs, rhs) else f"{delta.name}"
        return _first_failure(n, one)

    def adjoint_curvature():
        pairs = _pairs(fields)

        def one(s):
            for delta, eta in pairs:
                Phi = km.M * _random_matrix(ring, rng, km.rank) * km.M
                lhs = ad_curvature(delta, eta, Phi, km)
                rhs = commutator(curvature(delta, eta, km), Phi)
                if not endo_equal(lhs, rhs, km):
                    return f"({delta.name},{eta.name})"
            return None
        passed, witness = _first_failure(config.matrices_per_pair, one)
        return passed, witness, {"pairs": len(pairs), "matrices_per_pair": config.matrices_per_pair}

    def bullet_associative():
        def one(s):
            r, t1, t2 = (_random_tensor(km, rng, 1) for _ in range(3))
            lhs = rho_endo(bullet(bullet(r, t1), t2))
            rhs = rho_endo(bullet(r, bullet(t1, t2)))
            return None if endo_equal(lhs, rhs, km) else "associativity"
        return _first_failure(config.samples, one)

    def rho_multiplicative():
        def one(s):
            t1, t2 = _random_tensor(km, rng), _random_tensor(km, rng)
            return None if endo_equal(rho_endo(bullet(t1, t2)), rho_endo(t1) * rho_endo(t2), km) else "rho(s.t)"
        return _first_failure(config.samples, one)

    def rho_ideal():
        def one(s):
            Psi = _random_matrix(ring, rng, km.rank)
            y, v = _random_functional(km, rng), random_lift(km, rng, 1)
            lhs = Psi * rho_endo(EndoTensor(km, ((y, v),)))
            rhs = rho_endo(EndoTensor(km, ((y, matvec(Psi, v)),)))
            return None if endo_equal(lhs, rhs, km) else "Psi * rho(y (x) v)"
        return _first_failure(config.samples, one)

    def rho_equivariant():
        def one(s):
            delta, t = pick(s), _random_tensor(km, rng, 1)
            lhs = ad_apply(delta, rho_endo(t), km)
            rhs = rho_endo(tensor_nabla(delta, t))
            return None if endo_equal(lhs, rhs, km) else delta.name
        return _first_failure(config.heavy_samples, one)

    run.check("nabla satisfies the Leibniz rule", leibniz)
    run.check("Omega-valued nabla contracts to nabla(delta)", omega_contraction)
    run.check("Omega-valued nabla satisfies the Leibniz rule", omega_leibniz)
    run.check("dual connection satisfies the pairing rule", dual_pairing)
    run.check("adjoint curvature is the commutator with R", adjoint_curvature)
    run.check("bullet product is associative under rho", bullet_associative)
    run.check("rho is multiplicative", rho_multiplicative)
    run.check("image of rho is a left ideal", rho_ideal)
    run.check("rho intertwines the tensor and adjoint connections", rho_equivariant)
    return run.report


# =====================================================
# WEYL
# =====================================================

SPHERE_COMPOSITION_12_13 = {
    (2, 0, 0): "x2*x3",
    (0, 0, 1): "-x2",
    (1, 0, 1): "-x1*x2",
    (1, 1, 0): "-x1*x3",
    (0, 1, 1): "x1^2",
}


def _random_operator(ring: EllipsoidRing, fields: Sequence[TangentField], rng: np.random.Generator) -> DiffOperator:
    """a*delta + b for a random generator delta."""
    delta = fields[int(rng.integers(len(fields)))]
    return from_tangent_field(delta).scale(random_element(ring, rng, 1)) + \
        multiplication(ring, random_element(ring, rng, 1))


def suite_weyl(config: SuiteConfig) -> VerificationReport:
    ring, km = load_module(config)
    run = SuiteRun("weyl", config)
    rng = run.rng
    fields = tangent_generators(ring)
    ops = [from_tangent_field(f) for f in fields]
    one_poly = ring.ctx.one()
    monomials = [Polynomial.monomial(ring.k, m) for d in range(4) for m in monomials_of_degree(range(ring.k), d, ring.k)]

    def zero_semantics():
        for (a, A), (b, B) in _pairs(list(zip(fields, ops))):
            bracket = compose(A, B) - compose(B, A)
            diff = bracket - from_tangent_field(lie_bracket(a, b))
            if not diff.is_zero():
                return False, f"commutator of {a.name} and {b.name} differs from their bracket by {diff.format()}"
            if any(not ring.reduce(bracket(m) - lie_bracket(a, b)(m)).is_zero() for m in monomials):
                return False, f"[{a.name},{b.name}] acts differently on monomials"
        nonzero = ops[0]
        if all(nonzero(m).is_zero() for m in monomials):
            return False, f"{fields[0].name} kills every monomial of degree <= 3"
        return True, ""

    def canonical_commutation():
        d1, x1 = partial(ring, 0), multiplication(ring, ring.x(0))
        comm = compose(d1, x1) - compose(x1, d1)
        return comm == identity_operator(ring), comm.format()

    def associative():
        def one(s):
            R, S, T = (_random_operator(ring, fields, rng) for _ in range(3))
            return None if compose(compose(R, S), T) == compose(R, compose(S, T)) else "(RS)T != R(ST)"
        return _first_failure(config.heavy_samples, one)

    def order_bounds():
        def one(s):
            S, T = _random_operator(ring, fields, rng), _random_operator(ring, fields, rng)
            if compose(S, T).order() > S.order() + T.order():
                return "order(ST) > order(S) + order(T)"
            a = random_element(ring, rng)
            if iterated_commutator(T, [a]).order() > T.order() - 1:
                return "order([T, a]) >= order(T)"
            return None
        return _first_failure(config.samples, one)

    def commutator_expansion():
        def one(s):
            T = compose(_random_operator(ring, fields, rng), _random_operator(ring, fields, rng))
            aa = [random_element(ring, rng, 1) for _ in range(1 + s % 3)]
            f = random_element(ring, rng)
            lhs = iterated_commutator(T, aa)(f)
            return None if lhs == subset_sum_commutator(T, aa, f) else "subset sum differs"
        return _first_failure(config.samples, one)

    def commutator_kills():
        def one(s):
            T = ops[s % len(ops)]
            for _ in range(s % 3):
                T = compose(T, ops[int(rng.integers(len(ops)))])
            aa = [random_element(ring, rng, 1) for _ in range(T.order() + 1)]
            C = iterated_commutator(T, aa)
            return None if C.is_zero() else f"order {T.order()} operator survives {len(aa)} commutators"
        passed, witness = _first_failure(config.heavy_samples, one)
        if passed and not iterated_commutator(ops[0], [one_poly]).is_zero():
            return False, "[T, 1] != 0"
        return passed, witness

    def rho_left_linear():
        def one(s):
            T, a = _random_operator(ring, fields, rng), random_element(ring, rng, 1)
            lhs = rho_lift(T.scale(a), km).entries
            rhs = tuple(tuple(op.scale(a) for op in row) for row in rho_lift(T, km).entries)
            return None if lhs == rhs else f"a = {ring.format(a)}"
        return _first_failure(config.heavy_samples, one)

    def rho_matches_nabla():
        for f, T in zip(fields, ops):
            TM = rho_lift(T, km)
            if not opmatrix_descends(TM):
                return False, f"rho({f.name}) does not descend"
            for j, e in enumerate(km.generators()):
                if opmatrix_apply(TM, e) != apply_nabla(f, e, km):
                    return False, f"rho({f.name})(e{j + 1}) != nabla({f.name})(e{j + 1})"
        return True, ""

    def rho_scalars():
        def one(s):
            v, a = random_lift(km, rng), random_element(ring, rng, 1)
            if opmatrix_apply(rho_lift(identity_operator(ring), km), v) != canonical_rep(v, km):
                return "rho(1) is not the identity"
            if opmatrix_apply(rho_lift(multiplication(ring, a), km), v) != canonical_rep(v.scale(a), km):
                return "rho(a) is not multiplication by a"
            b = random_element(ring, rng, 1)
            defect = multiplicativity_defect(multiplication(ring, a), multiplication(ring, b), km)
            return None if opmatrix_zero_on_module(defect) else "rho(ab) != rho(a) rho(b)"
        return _first_failure(config.heavy_samples, one)

    def free_multiplicative():
        free = free_module(ring, km.rank)

        def one(s):
            S, T = _random_operator(ring, fields, rng), _random_operator(ring, fields, rng)
            return None if opmatrix_zero_on_module(multiplicativity_defect(S, T, free)) else "nonzero defect"
        return _first_failure(config.heavy_samples, one)

    run.check("operator zero test agrees with action on monomials", zero_semantics)
    run.check("[d1, x1] = 1", canonical_commutation)
    run.check("composition is associative", associative)
    run.check("order is subadditive and drops under commutators", order_bounds)
    run.check("iterated commutator matches the subset-sum expansion", commutator_expansion)
    run.check("order-l operators die after l+1 commutators", commutator_kills)
    run.check("rho is left A-linear", rho_left_linear)
    run.check("rho(delta) descends and agrees with nabla(delta)", rho_matches_nabla)
    run.check("rho of multiplications is the module structure", rho_scalars)
    run.check("rho is multiplicative on free modules", free_multiplicative)

    if ring.exponents == SPHERE and not config.corrupt:
        d12, d13 = ops[0], ops[1]

        def sphere_composition():
            expected = DiffOperator(ring, {a: ring.parse(t) for a, t in SPHERE_COMPOSITION_12_13.items()})
            got = compose(d12, d13)
            return got == expected and got.order() == 2, got.format()

        def sphere_defect():
            defect = multiplicativity_defect(d12, d13, km)
            image = opmatrix_apply(defect, km.generator(0))
            return not image.is_zero(), "rho(d12 o d13) and rho(d12) o rho(d13) agree on dx1", {
                "defect_on_dx1": image.to_text(),
                "printed_values": printed_comparison(km),
            }

        run.check("sphere d12 o d13 normal form", sphere_composition)
        run.check("sphere rho is not multiplicative", sphere_defect)
    return run.report


# =====================================================
# JETS
# =====================================================

def suite_jets(config: SuiteConfig) -> VerificationReport:
    ring, km = load_module(config)
    run = SuiteRun("jets", config)
    rng = run.rng
    n = config.heavy_samples

    def truncations():
        for l in (1, 2):
            jr = build_jet_ring(ring, l)
            if not jr.reduce(jr.x(ring.H)).is_zero():
                return False, f"H survives in P^{l}"
            for m in monomials_of_degree(list(jr.ctx.block("t")), l + 1, jr.ctx.nvars):
                if not jr.reduce(Polynomial.monomial(jr.ctx.nvars, m)).is_zero():
                    return False, f"t-monomial of degree {l + 1} survives in P^{l}"
            total = sum((ring.x(i) ** p for i, p in enumerate(ring.exponents)), ring.ctx.zero())
            if jet(total, l, ring).poly != jr.ctx.one():
                return False, f"jet(sum x_i^p_i) != 1 in P^{l}"
        return True, ""

    def ring_map():
        def one(s):
            a, b = random_element(ring, rng), random_element(ring, rng)
            return None if jet(a * b, 2, ring) == jet(a, 2, ring) * jet(b, 2, ring) else ring.format(a)
        return _first_failure(config.samples, one)

    def projection():
        def one(s):
            a = random_element(ring, rng)
            for l in (1, 2, 3):
                if project(jet(a, l, ring)) != jet(a, l - 1, ring):
                    return f"l = {l}, a = {ring.format(a)}"
            return None
        return _first_failure(config.samples, one)

    def tower():
        lifts = km.generators() + [random_lift(km, rng) for _ in range(config.tower_lifts)]
        for idx, v in enumerate(lifts):
            for l in (1, 2, 3):
                if project(nabla_l(v, l, km)) != nabla_l(v, l - 1, km):
                    return False, f"lift {idx}, l = {l}"
        return True, "", {"lifts": len(lifts)}

    def zeroth_order():
        def one(s):
            v = random_lift(km, rng)
            got = nabla_l(v, 0, km)
            expected = [ring.reduce(e) for e in canonical_rep(v, km).entries]
            return None if [to_base(JetElement(got.ring, e)) for e in got.entries] == expected else "nabla^0 != id"
        return _first_failure(n, one)

    def difference_products():
        for count in (1, 2, 3):
            aa = [random_element(ring, rng, 1) for _ in range(count)]
            if tensor_difference_product(aa) != subset_sum_tensor(aa):
                return False, f"{count} factors"
        for l in (1, 2):
            aa = [random_element(ring, rng, 1) for _ in range(l + 1)]
            jr = build_jet_ring(ring, l)
            prod = JetElement(jr, jr.ctx.one())
            for a in aa:
                prod = prod * (jet(a, l, ring) - JetElement(jr, jr.x(a)))
            if not prod.is_zero():
                return False, f"{l + 1} differences survive in P^{l}"
        return True, ""

    def membership():
        for l in (1, 2):
            if not diff_membership_test(lambda v, l=l: nabla_l(v, l, km), l, km, n, config.seed):
                return False, f"nabla^{l} fails the order-{l} test"
        if not diff_membership_test(lambda v: nabla_l(v, 0, km).scale(ring.x(0)), 0, km, n, config.seed):
            return False, "multiplication fails the order-0 test"
        if diff_membership_test(lambda v: nabla_l(v, 0, km).scale(ring.x(0)), -1, km, n, config.seed):
            return False, "multiplication passes the order -1 test"
        return True, "", {"evidence": "sampled"}

    def linear_part():
        if not isinstance(km, KaehlerModule):
            return True, ""

        def one(s):
            v = random_lift(km, rng)
            C = t_linear_part(nabla_l(v, 1, km))
            return None if OmegaValuedElement(km, C).C == omega_valued_nabla(v, km).C else "t-linear part differs"
        return _first_failure(n, one)

    def operator_contraction():
        first = [from_tangent_field(f) for f in tangent_generators(ring)]
        first.append(multiplication(ring, random_element(ring, rng, 1)))
        ops = {1: first, 2: first + [compose(S, T) for S in first[:2] for T in first[:2]]}

        def one(s):
            v = random_lift(km, rng)
            for l in (1, 2):
                for T in ops[l]:
                    if opmatrix_apply(rho_lift(T, km), v) != contract_operator(T, nabla_l(v, l, km)):
                        return f"l = {l}, T = {T.format()}"
            return None
        passed, witness = _first_failure(n, one)
        return passed, witness, {"operators": len(ops[1]) + len(ops[2])}

    def coassociative():
        def one(s):
            a = random_element(ring, rng)
            left, right = coassociativity_sides(a, ring)
            return None if left.poly == right.poly else ring.format(a)
        return _first_failure(n, one)

    def comultiply_linear():
        def one(s):
            a, b = random_element(ring, rng, 1), random_element(ring, rng)
            xi = jet(b, 2, ring)
            lhs = comultiply(xi.scale(a), 1, 1)
            return None if lhs == comultiply(xi, 1, 1).scale(a) else ring.format(a)
        passed, witness = _first_failure(n, one)
        unit = comultiply(jet(ring.ctx.one(), 2, ring), 1, 1)
        if passed and unit.poly != unit.ring.ctx.one():
            return False, "comultiply(1) != 1"
        return passed, witness

    def free_flat():
        conn = free_connection(free_module(ring, km.rank), 3)
        result = stratification_probe(conn, 3)
        return result["flat"], str(result["witness"]), {"checked": len(result["checked"])}

    def corrupted_theta0():
        conn = projective_basis_connection(km, 1)
        zero0 = tuple(tuple(e * 0 for e in row) for row in conn.matrices[0])
        try:
            InfinityConnection(km, (zero0,) + conn.matrices[1:])
        except InputError:
            return True, ""
        return False, "theta_0 = 0 was accepted"

    def projective_curvature():
        result = stratification_probe(projective_basis_connection(km, 2), 2)
        detail = {"flat": result["flat"], "curvature_witness": result["witness"]}
        if ring.exponents == SPHERE and not config.corrupt:
            return not result["flat"], "K^{1,1} vanishes on every generator", detail
        return True, "", detail

    run.check("P^l truncations and H vanish", truncations)
    run.check("jet is a ring map", ring_map)
    run.check("projection commutes with jet", projection)
    run.check("nabla^l tower is coherent", tower)
    run.check("nabla^0 is the identity", zeroth_order)
    run.check("products of differences vanish at order l", difference_products)
    run.check("nabla^l has differential order l", membership)
    run.check("t-linear part of nabla^1 is the Omega-valued connection", linear_part)
    run.check("rho(T) is the contraction of nabla^l with T", operator_contraction)
    run.check("comultiplication is coassociative", coassociative)
    run.check("comultiplication is left linear and unital", comultiply_linear)
    run.check("free module infinity-connection is flat", free_flat)
    run.check("theta_0 must be the identity", corrupted_theta0)
    run.check("projective-basis infinity-connection curvature", projective_curvature)
    return run.report


# =====================================================
# MCM
# =====================================================

def suite_mcm(config: SuiteConfig) -> VerificationReport:
    run = SuiteRun("mcm", config)
    sweep = factorization_sweep((2, 3), (2, 3))
    for c in sweep.checks:
        run.check(f"factorization {c.name}", lambda c=c: (c.passed, c.witness))

    def negative_control():
        bad = verify_factorization(build_factorization(2, 2, 1, 1).perturbed(0, 0))
        failures = bad.failures()
        return bool(failures), "perturbed phi passed", {"caught_witness": failures[0].witness if failures else ""}

    def range_check():
        try:
            build_factorization(2, 2, 2, 1)
        except InputError:
            return True, ""
        return False, "k = m was accepted"

    run.check("perturbed phi is caught", negative_control)
    run.check("out-of-range k is rejected", range_check)
    return run.report


SUITES: Dict[str, Callable[[SuiteConfig], VerificationReport]] = {
    "exactpoly": suite_exactpoly,
    "linalg": suite_linalg,
    "projective": suite_projective,
    "curvature": suite_curvature,
    "connection": suite_connection,
    "weyl": suite_weyl,
    "jets": suite_jets,
    "mcm": suite_mcm,
}


def _timed(name: str, config: SuiteConfig, timing: bool) -> VerificationReport:
    start = time.perf_counter()
    report = SUITES[name](config)
    if timing:
        report.timing = {"duration_ms": round((time.perf_counter() - start) * 1000, 3)}
    logger.info("Suite finished", extra={'suite': name, 'passed': report.success,
                                         'duration_ms': round((time.perf_counter() - start) * 1000, 3)})
    return report


async def run_suites(
    config: SuiteConfig,
    names: Optional[Iterable[str]] = None,
    parallel: bool = True,
    timing: bool = False,
) -> List[VerificationReport]:
    """Run the named suites (all by default); results keep the requested order."""
    names = list(names or SUITES)
    unknown = [n for n in names if n not in SUITES]
    if unknown:
        raise InputError(f"unknown suite '{unknown[0]}' (choose from {', '.join(SUITES)})")

    load_module(config)  # build shared rings once before fanning out
    if parallel:
        return list(await asyncio.gather(*(asyncio.to_thread(_timed, n, config, timing) for n in names)))
    return [_timed(n, config, timing) for n in names]
