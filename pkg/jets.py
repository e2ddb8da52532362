"""
Principal Parts and Higher Connections
=======================================
P^l is realized in Taylor coordinates t_i = 1(x)x_i - x_i(x)1 as

    Q[x, t] / (H(x), H(x+t) truncated at t-degree l, all t-monomials of degree l+1)

and the tensor rings P^l (x)_A P^k (x)_A P^m add blocks u, w with the
relations shifted along the gluing, H(x+t+u) and H(x+t+u+w). One class
covers all of them; `orders` has one entry per Taylor block.

Module-valued elements store coefficients on the jet side and are
canonicalized by M(x), the fundamental matrix with x-scalars.

An infinity-connection is given by its matrices Theta_l over P^l:
theta_l(sum_j e_j v_j) = sum_i (sum_j Theta_l[i][j] * jet(v_j, l)) e_i.
"""

import logging
import threading
from collections import OrderedDict
from dataclasses import dataclass
from math import factorial, prod
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np

from cache import cached
from errors import InputError, VerificationFailure
from exactpoly import MonomialOrder, Polynomial, RingContext, monomials_of_degree, taylor_shift
from linalg import RingMatrix, RingVector, dot
from ellipsoid import EllipsoidRing, ProjectiveModule, canonical_rep, random_element, random_lift
from weyl import DiffOperator

logger = logging.getLogger("jets")

TAYLOR_BLOCKS = ("t", "u", "w")


# =====================================================
# JET RINGS
# =====================================================

@dataclass(frozen=True)
class JetRing:
    base: EllipsoidRing
    orders: Tuple[int, ...]
    ctx: RingContext

    @property
    def l(self) -> int:
        return self.orders[0]

    @property
    def blocks(self) -> Tuple[str, ...]:
        return TAYLOR_BLOCKS[:len(self.orders)]

    @property
    def key(self) -> tuple:
        return (id(self.base), self.orders)

    def x(self, a: Polynomial) -> Polynomial:
        """An element of the base ring as an x-scalar."""
        return self.ctx.embed(a, self.base.ctx)

    def reduce(self, f: Polynomial) -> Polynomial:
        return self.ctx.reduce(f)

    def format(self, f: Polynomial) -> str:
        return self.ctx.format(f)

    def parse(self, text: str) -> Polynomial:
        return self.ctx.parse(text)


# Same structure with two or three Taylor blocks; cached under its own kind.
JetTensorRing = JetRing


def _build(base: EllipsoidRing, orders: Tuple[int, ...]) -> JetRing:
    k = base.k
    if any(isinstance(o, bool) or not isinstance(o, int) or o < 0 for o in orders):
        raise InputError(f"jet orders must be integers >= 0, got {orders}")
    blocks = TAYLOR_BLOCKS[:len(orders)]
    names = [f"x{i + 1}" for i in range(k)]
    for b in blocks:
        names += [f"{b}{i + 1}" for i in range(k)]
    n = len(names)

    def block_idx(j: int) -> range:
        return range(k * (j + 1), k * (j + 2))

    relations = []
    for depth in range(len(blocks) + 1):
        images = [Polynomial.variable(n, i) for i in range(k)]
        for j in range(depth):
            images = [img + Polynomial.variable(n, k * (j + 1) + i) for i, img in enumerate(images)]
        shifted = base.H.compose(images)
        for j in range(depth):
            shifted = shifted.truncate(block_idx(j), orders[j])
        relations.append(shifted)
    truncation = []
    for j, o in enumerate(orders):
        truncation += monomials_of_degree(list(block_idx(j)), o + 1, n)

    ctx = RingContext(
        names,
        relations=relations,
        order=MonomialOrder.graded_lex(n),
        truncation=truncation,
        degree_cap=base.ctx.degree_cap,
    )
    logger.info("Built jet ring", extra={'ring': base.label, 'orders': list(orders),
                                         'basis_size': len(ctx.groebner)})
    return JetRing(base, orders, ctx)


def build_jet_ring(base: EllipsoidRing, l: int) -> JetRing:
    """P^l over the ellipsoid ring."""
    return build_jet_tensor_ring(base, (l,))


def build_jet_tensor_ring(base: EllipsoidRing, orders: Sequence[int]) -> JetTensorRing:
    orders = tuple(orders)
    if not 1 <= len(orders) <= len(TAYLOR_BLOCKS):
        raise InputError(f"between 1 and {len(TAYLOR_BLOCKS)} jet orders are supported, got {orders}")
    params = {"exponents": list(base.exponents), "orders": list(orders), "ring": id(base)}
    kind = "jet_ring" if len(orders) == 1 else "jet_tensor_ring"
    return cached(kind, params, lambda: _build(base, orders))


# =====================================================
# ELEMENTS
# =====================================================

@dataclass(frozen=True)
class JetElement:
    ring: JetRing
    poly: Polynomial

    def __post_init__(self):
        object.__setattr__(self, "poly", self.ring.reduce(self.ring.ctx.check(self.poly)))

    def _same(self, other: "JetElement"):
        if other.ring is not self.ring:
            raise InputError("jet elements live in different jet rings")

    def __add__(self, other: "JetElement") -> "JetElement":
        self._same(other)
        return JetElement(self.ring, self.poly + other.poly)

    def __sub__(self, other: "JetElement") -> "JetElement":
        self._same(other)
        return JetElement(self.ring, self.poly - other.poly)

    def __mul__(self, other: "JetElement") -> "JetElement":
        self._same(other)
        return JetElement(self.ring, self.poly * other.poly)

    def __neg__(self) -> "JetElement":
        return JetElement(self.ring, -self.poly)

    def scale(self, a: Polynomial) -> "JetElement":
        """Left structure: multiply by a(x)."""
        return JetElement(self.ring, self.ring.x(a) * self.poly)

    def is_zero(self) -> bool:
        return self.poly.is_zero()

    def format(self) -> str:
        return self.ring.format(self.poly)


@dataclass(frozen=True)
class JetModuleElement:
    """sum_i xi_i (x) e_i, canonical under M(x)."""
    ring: JetRing
    module: ProjectiveModule
    entries: Tuple[Polynomial, ...]

    def __post_init__(self):
        if self.module.ring is not self.ring.base:
            raise InputError("module and jet ring have different base rings")
        if len(self.entries) != self.module.rank:
            raise InputError(f"expected {self.module.rank} components, got {len(self.entries)}")
        raw = [self.ring.ctx.check(e) for e in self.entries]
        M = self.module.M
        canon = []
        for i in range(self.module.rank):
            total = Polynomial.zero(self.ring.ctx.nvars)
            for j, e in enumerate(raw):
                if not e.is_zero() and not M[i, j].is_zero():
                    total = total + self.ring.x(M[i, j]) * e
            canon.append(self.ring.reduce(total))
        object.__setattr__(self, "entries", tuple(canon))

    def __len__(self) -> int:
        return len(self.entries)

    def _same(self, other: "JetModuleElement"):
        if other.ring is not self.ring or other.module is not self.module:
            raise InputError("jet module elements over different rings or modules")

    def __add__(self, other: "JetModuleElement") -> "JetModuleElement":
        self._same(other)
        return JetModuleElement(self.ring, self.module, tuple(a + b for a, b in zip(self.entries, other.entries)))

    def __sub__(self, other: "JetModuleElement") -> "JetModuleElement":
        self._same(other)
        return JetModuleElement(self.ring, self.module, tuple(a - b for a, b in zip(self.entries, other.entries)))

    def scale(self, a: Polynomial) -> "JetModuleElement":
        ax = self.ring.x(a)
        return JetModuleElement(self.ring, self.module, tuple(ax * e for e in self.entries))

    def is_zero(self) -> bool:
        return all(e.is_zero() for e in self.entries)

    def to_text(self) -> List[str]:
        return [self.ring.format(e) for e in self.entries]


def jet_module_element(module: ProjectiveModule, jr: JetRing, entries: Sequence) -> JetModuleElement:
    """Accepts Polynomials of the jet ring or text in its variables."""
    polys = [jr.parse(e) if isinstance(e, str) else e for e in entries]
    return JetModuleElement(jr, module, tuple(polys))


# =====================================================
# JET MAP AND PROJECTIONS
# =====================================================

def jet(a: Polynomial, l: int, ring: EllipsoidRing) -> JetElement:
    """The universal jet a -> a(x + t) in P^l."""
    jr = build_jet_ring(ring, l)
    return JetElement(jr, taylor_shift(jr.x(ring.ctx.check(a)), l, jr.ctx))


def project(xi):
    """P^l -> P^(l-1), on jet elements and on module-valued jets."""
    jr = xi.ring
    if len(jr.orders) != 1:
        raise InputError("projection is defined on P^l, not on tensor rings")
    if jr.l == 0:
        raise InputError("cannot project below order 0")
    lower = build_jet_ring(jr.base, jr.l - 1)
    if isinstance(xi, JetModuleElement):
        return JetModuleElement(lower, xi.module, xi.entries)
    return JetElement(lower, xi.poly)


def to_base(xi: JetElement) -> Polynomial:
    """Read an element of P^0 as an element of A."""
    if xi.ring.orders != (0,):
        raise InputError("only P^0 is canonically the base ring")
    k = xi.ring.base.k
    return xi.ring.base.reduce(Polynomial(k, {m[:k]: c for m, c in xi.poly.terms.items()}))


def nabla_l(v: RingVector, l: int, km: ProjectiveModule) -> JetModuleElement:
    """The l-connection of the projective basis: component i is jet(row_i(M).v, l)."""
    if len(v) != km.rank:
        raise InputError(f"expected a vector of length {km.rank}, got {len(v)}")
    jr = build_jet_ring(km.ring, l)
    coords = [dot(row, v) for row in km.dual_basis()]
    return JetModuleElement(jr, km, tuple(jet(c, l, km.ring).poly for c in coords))


def t_linear_part(xi: JetModuleElement) -> RingMatrix:
    """C[j][i] = coefficient of t_j in component i, after projecting to P^1.

    Under dx_j <-> t_j this is an Omega-valued form in the layout of
    connection.OmegaValuedElement.
    """
    if len(xi.ring.orders) != 1 or xi.ring.l < 1:
        raise InputError("the t-linear part needs P^l with l >= 1")
    while xi.ring.l > 1:
        xi = project(xi)
    base = xi.ring.base
    k = base.k
    t_idx = xi.ring.ctx.block("t")
    rows = [[Polynomial.zero(k) for _ in range(len(xi))] for _ in range(k)]
    for i, e in enumerate(xi.entries):
        for m, c in e.terms.items():
            tdeg = [m[idx] for idx in t_idx]
            if sum(tdeg) != 1:
                continue
            j = tdeg.index(1)
            rows[j][i] = rows[j][i] + Polynomial.monomial(k, m[:k], c)
    return RingMatrix.of(base.ctx, rows)


# =====================================================
# PAIRING WITH OPERATORS
# =====================================================

def operator_pairing(T: DiffOperator, xi: JetElement) -> Polynomial:
    """The A-linear map P^l -> A attached to T: a(x) t^beta -> beta! * a * c_beta.

    On a(x) b(x + t) it gives a * T(b), so it is well defined for every
    operator of order <= l that preserves (H).
    """
    jr = xi.ring
    if len(jr.orders) != 1:
        raise InputError("operators pair with P^l, not with tensor rings")
    if T.ring is not jr.base:
        raise InputError("operator and jet ring live on different rings")
    if T.order() > jr.l:
        raise InputError(f"an operator of order {T.order()} does not pair with P^{jr.l}")
    k = jr.base.k
    t_idx = jr.ctx.block("t")
    total = Polynomial.zero(k)
    for m, c in xi.poly.terms.items():
        beta = tuple(m[idx] for idx in t_idx)
        coeff = T.terms.get(beta)
        if coeff is None:
            continue
        weight = prod(factorial(b) for b in beta)
        total = total + Polynomial.monomial(k, m[:k], c * weight) * coeff
    return jr.base.reduce(total)


def contract_operator(T: DiffOperator, xi: JetModuleElement) -> RingVector:
    """operator_pairing on every component; rho(T)(v) is this applied to nabla^l(v)."""
    entries = [operator_pairing(T, JetElement(xi.ring, e)) for e in xi.entries]
    return canonical_rep(RingVector.of(xi.module.ctx, entries), xi.module)


# =====================================================
# MAPS BETWEEN TENSOR RINGS
# =====================================================

CHECKED_MAPS_LIMIT = 256

# Recently verified (source, target, images) keys, least recent first.
_checked_maps: "OrderedDict[tuple, None]" = OrderedDict()
_checked_lock = threading.Lock()


def _map_checked(key: tuple) -> bool:
    with _checked_lock:
        if key in _checked_maps:
            _checked_maps.move_to_end(key)
            return True
    return False


def _mark_checked(key: tuple) -> None:
    with _checked_lock:
        _checked_maps[key] = None
        while len(_checked_maps) > CHECKED_MAPS_LIMIT:
            _checked_maps.popitem(last=False)


def _block_images(source: JetRing, target: JetRing, block_images: Dict[str, Sequence[str]]) -> List[Polynomial]:
    k = source.base.k
    n = target.ctx.nvars
    images = []
    for prefix in ("x",) + source.blocks:
        parts = block_images.get(prefix, (prefix,))
        for i in range(k):
            img = Polynomial.zero(n)
            for p in parts:
                img = img + target.ctx.var(f"{p}{i + 1}")
            images.append(img)
    return images


def tensor_map(xi: JetElement, target: JetTensorRing, block_images: Dict[str, Sequence[str]]) -> JetElement:
    """Substitute each source block by a sum of target blocks, then reduce.

    The first use of a given map checks that every generator of the source
    ideal lands in the target ideal.
    """
    source = xi.ring
    if source.base is not target.base:
        raise InputError("jet rings over different base rings")
    images = _block_images(source, target, block_images)
    key = (source.key, target.key, tuple(sorted((p, tuple(b)) for p, b in block_images.items())))
    if not _map_checked(key):
        generators = list(source.ctx.relations) + [
            Polynomial.monomial(source.ctx.nvars, m) for m in source.ctx.truncation
        ]
        for g in generators:
            if not target.reduce(g.compose(images)).is_zero():
                raise VerificationFailure(
                    f"map {block_images} is not well defined on P^{source.orders}",
                    witness=source.format(g),
                )
        _mark_checked(key)
    return JetElement(target, xi.poly.compose(images))


def comultiply(xi: JetElement, l: int, k: int) -> JetElement:
    """P^(l+k) -> P^l (x) P^k, t -> t + u."""
    if xi.ring.orders != (l + k,):
        raise InputError(f"comultiplication ({l},{k}) needs an element of P^{l + k}, got orders {xi.ring.orders}")
    target = build_jet_tensor_ring(xi.ring.base, (l, k))
    return tensor_map(xi, target, {"t": ("t", "u")})


def coassociativity_sides(a: Polynomial, ring: EllipsoidRing, l: int = 1, k: int = 1, m: int = 1) -> Tuple[JetElement, JetElement]:
    """(delta^{l,k} (x) id) o delta^{l+k,m} and (id (x) delta^{k,m}) o delta^{l,k+m} on jet(a)."""
    full = jet(a, l + k + m, ring)
    triple = build_jet_tensor_ring(ring, (l, k, m))
    left = tensor_map(
        tensor_map(full, build_jet_tensor_ring(ring, (l + k, m)), {"t": ("t", "u")}),
        triple, {"t": ("t", "u"), "u": ("w",)},
    )
    right = tensor_map(
        tensor_map(full, build_jet_tensor_ring(ring, (l, k + m)), {"t": ("t", "u")}),
        triple, {"u": ("u", "w")},
    )
    return left, right


# =====================================================
# PRODUCTS OF DIFFERENCES
# =====================================================

def free_tensor_context(k: int) -> RingContext:
    """Q[x1..xk, y1..yk] with no relations; y stands for the right tensor slot."""
    return RingContext([f"x{i + 1}" for i in range(k)] + [f"y{i + 1}" for i in range(k)])


def _slots(a: Polynomial, k: int) -> Tuple[Polynomial, Polynomial]:
    n = 2 * k
    return a.embed(n, list(range(k))), a.embed(n, list(range(k, n)))


def tensor_difference_product(aa: Sequence[Polynomial]) -> Polynomial:
    """prod_i (1(x)a_i - a_i(x)1) in the free tensor ring."""
    if not aa:
        raise InputError("need at least one factor")
    k = aa[0].nvars
    out = Polynomial.constant(2 * k, 1)
    for a in aa:
        left, right = _slots(a, k)
        out = out * (right - left)
    return out


def subset_sum_tensor(aa: Sequence[Polynomial]) -> Polynomial:
    """sum over H of (-1)^|H| prod_{H} a_i (x) prod_{not H} a_i."""
    if not aa:
        raise InputError("need at least one factor")
    k = aa[0].nvars
    total = Polynomial.zero(2 * k)
    for mask in range(1 << len(aa)):
        term = Polynomial.constant(2 * k, -1 if bin(mask).count("1") % 2 else 1)
        for i, a in enumerate(aa):
            left, right = _slots(a, k)
            term = term * (left if mask >> i & 1 else right)
        total = total + term
    return total


# =====================================================
# DIFFERENTIAL ORDER
# =====================================================

def diff_membership_test(
    op: Callable[[RingVector], JetModuleElement],
    l: int,
    km: ProjectiveModule,
    samples: int = 10,
    seed: int = 0,
) -> bool:
    """Sample evidence that op has differential order <= l.

    For each seeded tuple (a_1..a_{l+1}, v) the iterated commutator of op
    with the multiplications by a_i must kill v. l = -1 asks for op = 0.
    """
    if samples < 1:
        raise InputError(f"samples must be >= 1, got {samples}")
    if l < -1:
        raise InputError(f"order must be >= -1, got {l}")
    rng = np.random.default_rng(seed)
    ring = km.ring
    for s in range(samples):
        aa = [random_element(ring, rng) for _ in range(l + 1)]
        v = random_lift(km, rng)
        total = None
        for mask in range(1 << len(aa)):
            inside = Polynomial.constant(ring.k, 1)
            outside = Polynomial.constant(ring.k, 1)
            for i, a in enumerate(aa):
                if mask >> i & 1:
                    inside = inside * a
                else:
                    outside = outside * a
            if bin(mask).count("1") % 2:
                inside = -inside
            term = op(v.scale(outside)).scale(inside)
            total = term if total is None else total + term
        if not total.is_zero():
            logger.debug("Order test failed", extra={'check': f"order {l}", 'witness': f"sample {s}"})
            return False
    return True


# =====================================================
# INFINITY CONNECTIONS
# =====================================================

@dataclass(frozen=True)
class InfinityConnection:
    """theta_0..theta_L given by matrices Theta_l over P^l."""
    module: ProjectiveModule
    matrices: Tuple[Tuple[Tuple[Polynomial, ...], ...], ...]
    name: str = ""

    def __post_init__(self):
        km = self.module
        n = km.rank
        if not self.matrices:
            raise InputError("an infinity-connection needs at least theta_0")
        for l, Th in enumerate(self.matrices):
            jr = build_jet_ring(km.ring, l)
            if len(Th) != n or any(len(r) != n for r in Th):
                raise InputError(f"Theta_{l} must be {n}x{n}")
            for row in Th:
                for e in row:
                    jr.ctx.check(e)
        theta0 = RingMatrix.of(km.ctx, [[to_base(JetElement(build_jet_ring(km.ring, 0), e)) for e in row]
                                        for row in self.matrices[0]])
        if not (km.M * theta0 * km.M - km.M).is_zero():
            raise InputError("theta_0 is not the identity on the module")

    @property
    def L(self) -> int:
        return len(self.matrices) - 1

    def ring(self, l: int) -> JetRing:
        return build_jet_ring(self.module.ring, l)

    def apply(self, l: int, v: RingVector) -> Tuple[Polynomial, ...]:
        """Raw components of theta_l(v) in P^l, before canonicalization."""
        if not 0 <= l <= self.L:
            raise InputError(f"order {l} outside 0..{self.L}")
        km = self.module
        if len(v) != km.rank:
            raise InputError(f"expected a vector of length {km.rank}, got {len(v)}")
        jr = self.ring(l)
        jv = [jet(c, l, km.ring).poly for c in v.entries]
        out = []
        for row in self.matrices[l]:
            total = Polynomial.zero(jr.ctx.nvars)
            for e, j in zip(row, jv):
                total = total + e * j
            out.append(jr.reduce(total))
        return tuple(out)

    def theta(self, l: int, v: RingVector) -> JetModuleElement:
        return JetModuleElement(self.ring(l), self.module, self.apply(l, v))


def projective_basis_connection(km: ProjectiveModule, L: int) -> InfinityConnection:
    """theta_l = nabla^l: Theta_l[i][j] = jet(M_ij, l)."""
    if L < 0:
        raise InputError(f"L must be >= 0, got {L}")
    mats = []
    for l in range(L + 1):
        mats.append(tuple(
            tuple(jet(km.M[i, j], l, km.ring).poly for j in range(km.rank)) for i in range(km.rank)
        ))
    return InfinityConnection(km, tuple(mats), name=f"projective basis of {km.label}")


def free_connection(module: ProjectiveModule, L: int) -> InfinityConnection:
    """theta_l(e_i) = 1 (x) e_i on a free module."""
    if not module.G.is_zero():
        raise InputError(f"{module.label} is not free")
    if L < 0:
        raise InputError(f"L must be >= 0, got {L}")
    n = module.rank
    mats = []
    for l in range(L + 1):
        nv = build_jet_ring(module.ring, l).ctx.nvars
        mats.append(tuple(
            tuple(Polynomial.constant(nv, 1 if i == j else 0) for j in range(n)) for i in range(n)
        ))
    return InfinityConnection(module, tuple(mats), name=f"standard basis of {module.label}")


def lk_curvature(conn: InfinityConnection, l: int, k: int, v: RingVector) -> JetModuleElement:
    """K^{l,k}(v) = (theta_l (x) id) o theta_k (v) - (id (x) delta^{l,k}) o theta_{l+k} (v).

    The second factor is glued along x -> x + t, t -> u.
    """
    if l < 1 or k < 1 or l + k > conn.L:
        raise InputError(f"need l, k >= 1 and l + k <= {conn.L}, got ({l},{k})")
    km = conn.module
    base = km.ring
    target = build_jet_tensor_ring(base, (l, k))
    lower, upper = conn.ring(k), conn.ring(l + k)

    phi0 = [comultiply(JetElement(upper, e), l, k).poly for e in conn.apply(l + k, v)]

    glued = [tensor_map(JetElement(lower, e), target, {"x": ("x", "t"), "t": ("u",)}).poly
             for e in conn.apply(k, v)]
    left = conn.ring(l)
    phi1 = []
    for row in conn.matrices[l]:
        total = Polynomial.zero(target.ctx.nvars)
        for e, g in zip(row, glued):
            if not e.is_zero() and not g.is_zero():
                total = total + tensor_map(JetElement(left, e), target, {}).poly * g
        phi1.append(total)

    return JetModuleElement(target, km, tuple(a - b for a, b in zip(phi1, phi0)))


def stratification_probe(conn: InfinityConnection, L: Optional[int] = None) -> Dict[str, object]:
    """K^{l,k} on every generator for l + k <= L; the first nonzero value is the witness."""
    L = conn.L if L is None else L
    if L < 2:
        raise InputError(f"L must be >= 2, got {L}")
    if L > conn.L:
        raise InputError(f"connection only has orders up to {conn.L}")
    km = conn.module
    checked = []
    witness = None
    for total in range(2, L + 1):
        for l in range(1, total):
            k = total - l
            for j, e in enumerate(km.generators()):
                K = lk_curvature(conn, l, k, e)
                zero = K.is_zero()
                checked.append({"l": l, "k": k, "generator": j + 1, "zero": zero})
                if not zero and witness is None:
                    witness = {"l": l, "k": k, "generator": j + 1, "value": K.to_text()}
    flat = witness is None
    logger.info("Stratification probe finished", extra={'ring': km.ring.label, 'passed': flat})
    return {"module": km.label, "connection": conn.name, "L": L, "flat": flat,
            "checked": checked, "witness": witness}
