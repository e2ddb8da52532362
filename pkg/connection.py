"""
Connections from Projective Bases
==================================
For a module with fundamental matrix M, the projective-basis connection acts
on a lift v by

    nabla(delta) v = D_delta(v) + delta(M) * v

and the class of the result is canonical_rep(...) = M * (...). Its curvature
is computed two ways: the closed form [delta(M), eta(M)] and the definition
[nabla(delta), nabla(eta)] - nabla([delta, eta]) evaluated column by column.

Endomorphisms act on lifts, so two matrices represent the same endomorphism
of the module exactly when M (Phi - Psi) M = 0. The c1 representative is the
module trace tr(M Phi), not the raw matrix trace.

Also here: the dual connection on functionals, the adjoint connection on
endomorphisms, the Omega-valued form nabla(w) = sum d(x_i(w)) (x) w_i, and
E* (x) E with its bullet product and the map rho into End(E).
"""

import logging
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from errors import InputError
from exactpoly import Polynomial
from linalg import (
    RingMatrix, RingVector, commutator, det, dot, identity, matrix_trace,
    matvec, outer, vecmat, zero_matrix,
)
from ellipsoid import (
    KaehlerModule, ProjectiveModule, TangentField, apply_field_matrix,
    apply_field_vector, canonical_rep, is_functional, lie_bracket, tangent_generators,
)
from reports import VerificationReport

logger = logging.getLogger("connection")


# =====================================================
# FIRST-ORDER CONNECTION
# =====================================================

def _check_ring(delta: TangentField, km: ProjectiveModule):
    if delta.ring is not km.ring:
        raise InputError(f"field {delta.name} and module {km.label} live on different rings")


def delta_of_M(delta: TangentField, km: ProjectiveModule) -> RingMatrix:
    _check_ring(delta, km)
    return apply_field_matrix(delta, km.M)


def nabla_lift(delta: TangentField, v: RingVector, km: ProjectiveModule) -> RingVector:
    """D_delta(v) + delta(M) v, before canonicalisation."""
    _check_ring(delta, km)
    if len(v) != km.rank:
        raise InputError(f"expected a vector of length {km.rank}, got {len(v)}")
    return apply_field_vector(delta, v) + matvec(delta_of_M(delta, km), v)


def apply_nabla(delta: TangentField, v: RingVector, km: ProjectiveModule) -> RingVector:
    return canonical_rep(nabla_lift(delta, v, km), km)


@dataclass(frozen=True)
class FirstOrderConnection:
    """The connection attached to the projective basis of `module`."""
    module: ProjectiveModule

    def __call__(self, delta: TangentField, v: RingVector) -> RingVector:
        return apply_nabla(delta, v, self.module)

    def curvature(self, delta: TangentField, eta: TangentField, method: str = "formula") -> RingMatrix:
        return curvature(delta, eta, self.module, method)


# =====================================================
# CURVATURE
# =====================================================

def _from_columns(km: ProjectiveModule, columns: Sequence[RingVector]) -> RingMatrix:
    return RingMatrix.of(km.ctx, [[col[i] for col in columns] for i in range(km.rank)])


def curvature(delta: TangentField, eta: TangentField, km: ProjectiveModule, method: str = "formula") -> RingMatrix:
    _check_ring(delta, km)
    _check_ring(eta, km)
    if method == "formula":
        return commutator(delta_of_M(delta, km), delta_of_M(eta, km))
    if method == "definitional":
        bracket = lie_bracket(delta, eta)
        columns = []
        for e in km.generators():
            first = apply_nabla(delta, apply_nabla(eta, e, km), km)
            second = apply_nabla(eta, apply_nabla(delta, e, km), km)
            columns.append(first - second - apply_nabla(bracket, e, km))
        return _from_columns(km, columns)
    raise InputError(f"unknown curvature method '{method}' (use formula or definitional)")


def endo_equal(Phi: RingMatrix, Psi: RingMatrix, km: ProjectiveModule) -> bool:
    """Phi and Psi agree as endomorphisms of the module."""
    if Phi.shape != (km.rank, km.rank) or Psi.shape != (km.rank, km.rank):
        raise InputError(f"endomorphisms of a rank-{km.rank} presentation must be {km.rank}x{km.rank}")
    return (km.M * (Phi - Psi) * km.M).is_zero()


def module_trace(Phi: RingMatrix, km: ProjectiveModule) -> Polynomial:
    if Phi.shape != (km.rank, km.rank):
        raise InputError(f"expected a {km.rank}x{km.rank} matrix, got {Phi.shape}")
    return matrix_trace(km.M * Phi)


def chern_report(km: ProjectiveModule) -> List[Dict[str, object]]:
    """Per generator pair: both curvature routes, their module traces, det."""
    rows = []
    fields = tangent_generators(km.ring)
    fmt = km.ring.format
    for a in range(len(fields)):
        for b in range(a + 1, len(fields)):
            delta, eta = fields[a], fields[b]
            formula = curvature(delta, eta, km, "formula")
            definitional = curvature(delta, eta, km, "definitional")
            tr_f = module_trace(formula, km)
            tr_d = module_trace(definitional, km)
            rows.append({
                "pair": f"{delta.name},{eta.name}",
                "routes_agree": endo_equal(formula, definitional, km),
                "flat": endo_equal(formula, zero_matrix(km.ctx, km.rank), km),
                "matrix_trace": fmt(matrix_trace(formula)),
                "module_trace_formula": fmt(tr_f),
                "module_trace_definitional": fmt(tr_d),
                "module_traces_agree": tr_f == tr_d,
                "det": fmt(det(formula)) if km.rank <= 4 else None,
            })
    return rows


# =====================================================
# OMEGA-VALUED FORM
# =====================================================

@dataclass(frozen=True)
class OmegaValuedElement:
    """sum C[j][i] dx_j (x) w_i, stored canonically as M C M^T."""
    module: ProjectiveModule
    C: RingMatrix

    def __post_init__(self):
        M = self.module.M
        object.__setattr__(self, "C", M * self.C * M.transpose())

    def contract(self, delta: TangentField) -> RingVector:
        """Pair the first slot with delta."""
        _check_ring(delta, self.module)
        f = RingVector.of(self.module.ctx, delta.coefficients)
        return canonical_rep(vecmat(f, self.C), self.module)

    def is_zero(self) -> bool:
        return self.C.is_zero()

    def __add__(self, other: "OmegaValuedElement") -> "OmegaValuedElement":
        return OmegaValuedElement(self.module, self.C + other.C)

    def scale(self, a: Polynomial) -> "OmegaValuedElement":
        return OmegaValuedElement(self.module, self.C.scale(a))


def _jacobian_matrix(km: ProjectiveModule, values: Sequence[Polynomial]) -> RingMatrix:
    """C[j][i] = d values[i] / d x_j."""
    k = km.ring.k
    return RingMatrix.of(km.ctx, [[values[i].diff(j) for i in range(len(values))] for j in range(k)])


def omega_valued_nabla(v: RingVector, km: KaehlerModule) -> OmegaValuedElement:
    if len(v) != km.rank:
        raise InputError(f"expected a vector of length {km.rank}, got {len(v)}")
    if not isinstance(km, KaehlerModule):
        raise InputError("the Omega-valued form needs the module Omega itself")
    coords = [dot(row, v) for row in km.dual_basis()]
    return OmegaValuedElement(km, _jacobian_matrix(km, coords))


def d_tensor(a: Polynomial, v: RingVector, km: KaehlerModule) -> OmegaValuedElement:
    """d(a) (x) w for the class w of v."""
    if not isinstance(km, KaehlerModule):
        raise InputError("the Omega-valued form needs the module Omega itself")
    k = km.ring.k
    return OmegaValuedElement(km, RingMatrix.of(km.ctx, [[a.diff(j) * v[i] for i in range(km.rank)] for j in range(k)]))


# =====================================================
# DUAL AND ADJOINT CONNECTIONS
# =====================================================

def dual_apply(delta: TangentField, y: RingVector, km: ProjectiveModule) -> RingVector:
    """nabla*(delta)(phi) = delta o phi - phi o nabla(delta)."""
    _check_ring(delta, km)
    if not is_functional(y, km):
        raise InputError("row does not annihilate G, so it is not a functional on the module")
    values = []
    for j in range(km.rank):
        lift = km.M.col(j)
        values.append(delta(dot(y, lift)) - dot(y, nabla_lift(delta, lift, km)))
    return RingVector.of(km.ctx, values)


def functional_equal(y: RingVector, z: RingVector, km: ProjectiveModule) -> bool:
    """Equal as functionals on the module: values agree on every generator."""
    return vecmat(y - z, km.M).is_zero()


def dual_curvature(delta: TangentField, eta: TangentField, y: RingVector, km: ProjectiveModule) -> RingVector:
    bracket = lie_bracket(delta, eta)
    first = dual_apply(delta, dual_apply(eta, y, km), km)
    second = dual_apply(eta, dual_apply(delta, y, km), km)
    return first - second - dual_apply(bracket, y, km)


def ad_apply(delta: TangentField, Phi: RingMatrix, km: ProjectiveModule) -> RingMatrix:
    """[D_delta + delta(M), Phi] = delta(Phi) + [delta(M), Phi]."""
    if Phi.shape != (km.rank, km.rank):
        raise InputError(f"expected a {km.rank}x{km.rank} matrix, got {Phi.shape}")
    return apply_field_matrix(delta, Phi) + commutator(delta_of_M(delta, km), Phi)


def ad_curvature(delta: TangentField, eta: TangentField, Phi: RingMatrix, km: ProjectiveModule) -> RingMatrix:
    """R_ad(delta, eta)(Phi) from the definition."""
    bracket = lie_bracket(delta, eta)
    first = ad_apply(delta, ad_apply(eta, Phi, km), km)
    second = ad_apply(eta, ad_apply(delta, Phi, km), km)
    return first - second - ad_apply(bracket, Phi, km)


# =====================================================
# E* (x) E, BULLET PRODUCT AND RHO
# =====================================================

@dataclass(frozen=True)
class EndoTensor:
    """sum y_r (x) v_r with every y_r a functional."""
    module: ProjectiveModule
    pairs: Tuple[Tuple[RingVector, RingVector], ...] = ()

    def __post_init__(self):
        pairs = tuple((y, v) for y, v in self.pairs)
        for y, v in pairs:
            if len(v) != self.module.rank:
                raise InputError(f"tensor element of length {len(v)} in a rank-{self.module.rank} module")
            if not is_functional(y, self.module):
                raise InputError("tensor pair has a row that does not annihilate G")
        object.__setattr__(self, "pairs", pairs)

    def __add__(self, other: "EndoTensor") -> "EndoTensor":
        if other.module is not self.module:
            raise InputError("tensors over different modules")
        return EndoTensor(self.module, self.pairs + other.pairs)

    def __len__(self) -> int:
        return len(self.pairs)


def bullet(s: EndoTensor, t: EndoTensor) -> EndoTensor:
    """(phi (x) u) . (psi (x) v) = psi (x) phi(v) u."""
    if s.module is not t.module:
        raise InputError("tensors over different modules")
    pairs = []
    for y1, u in s.pairs:
        for y2, v in t.pairs:
            pairs.append((y2, u.scale(dot(y1, v))))
    return EndoTensor(s.module, tuple(pairs))


def rho_endo(t: EndoTensor) -> RingMatrix:
    km = t.module
    total = zero_matrix(km.ctx, km.rank)
    for y, v in t.pairs:
        total = total + outer(v, y)
    return total


def witness_tensor(km: ProjectiveModule) -> EndoTensor:
    """sum x_i (x) e_i."""
    return EndoTensor(km, tuple(zip(km.dual_basis(), km.generators())))


def tensor_nabla(delta: TangentField, t: EndoTensor) -> EndoTensor:
    """nabla(phi (x) e) = nabla*(phi) (x) e + phi (x) nabla(e)."""
    km = t.module
    pairs = []
    for y, v in t.pairs:
        pairs.append((dual_apply(delta, y, km), v))
        pairs.append((y, apply_nabla(delta, v, km)))
    return EndoTensor(km, tuple(pairs))


# =====================================================
# PROJECTIVITY REPORT
# =====================================================

def projectivity_report(km: ProjectiveModule) -> VerificationReport:
    """Projective-basis identity, functional rows, and id in the image of rho."""
    report = VerificationReport(suite=f"projectivity {km.label}")
    fmt = km.ring.format

    square = km.M * km.M - km.M
    bad = square.nonzero_entries()
    report.add("M*M = M", not bad,
               f"(M*M - M)[{bad[0][0] + 1}][{bad[0][1] + 1}] = {fmt(bad[0][2])}" if bad else "")

    MG = matvec(km.M, km.G)
    bad_rows = [i for i, e in enumerate(MG) if not e.is_zero()]
    report.add("rows of M annihilate G", not bad_rows,
               f"row {bad_rows[0] + 1} gives {fmt(MG[bad_rows[0]])}" if bad_rows else "")

    if isinstance(km, KaehlerModule):
        tr = matrix_trace(km.M)
        report.add("trace M = k - 1", tr == km.ring.k - 1, f"trace M = {fmt(tr)}", trace=fmt(tr))

    try:
        rho_id = rho_endo(witness_tensor(km))
    except InputError as exc:
        witness_ok = False
        report.add("rho(sum x_i (x) e_i) = id", False, f"witness tensor not formed: {exc}")
    else:
        witness_ok = endo_equal(rho_id, identity(km.ctx, km.rank), km)
        report.add("rho(sum x_i (x) e_i) = id", witness_ok,
                   "M (rho(w) - I) M is nonzero")

    conclusion = not bad and not bad_rows and witness_ok
    report.add("end(E) = 0", conclusion,
               "id is not certified to lie in the image of rho")
    return report
