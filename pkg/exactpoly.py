"""
Exact Polynomials and Normal Forms
===================================
Sparse multivariate polynomials over Q (fractions.Fraction coefficients),
monomial orders, multivariate division, Buchberger's algorithm and the
RingContext that turns a generating set into a quotient ring with unique
normal forms.

Every other module builds its rings on this one:
    A        = Q[x1..xk] / (H)
    P^l      = Q[x, t] / (H(x), H(x+t), (t)^(l+1))
    P^l (x) P^k on (x, t, u), and so on.

Text grammar: terms joined by + / -, coefficients as integers or p/q,
variables from the context, powers with ^ and products with *.
    -3/2*x1^2*x2 + 1
"""

import os
import re
import time
import heapq
import logging
from fractions import Fraction
from dataclasses import dataclass
from types import MappingProxyType
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import sympy

from errors import InputError, ParseError, ResourceError
from observability import record_groebner_run

logger = logging.getLogger("exactpoly")

DEFAULT_DEGREE_CAP = int(os.getenv("KAEHLER_DEGREE_CAP", 40))

Monomial = Tuple[int, ...]
Scalar = Union[int, Fraction]


# =====================================================
# MONOMIALS
# =====================================================

def monomial_mul(a: Monomial, b: Monomial) -> Monomial:
    return tuple(x + y for x, y in zip(a, b))


def monomial_div(a: Monomial, b: Monomial) -> Monomial:
    """a / b, assuming b divides a."""
    return tuple(x - y for x, y in zip(a, b))


def monomial_divides(b: Monomial, a: Monomial) -> bool:
    return all(y <= x for x, y in zip(a, b))


def monomial_lcm(a: Monomial, b: Monomial) -> Monomial:
    return tuple(max(x, y) for x, y in zip(a, b))


def monomials_of_degree(indices: Sequence[int], degree: int, nvars: int) -> List[Monomial]:
    """All monomials of exactly `degree` supported on the given variable indices."""
    out: List[Monomial] = []

    def rec(pos: int, left: int, acc: List[int]):
        if pos == len(indices) - 1:
            acc[indices[pos]] = left
            out.append(tuple(acc))
            acc[indices[pos]] = 0
            return
        for e in range(left, -1, -1):
            acc[indices[pos]] = e
            rec(pos + 1, left - e, acc)
        acc[indices[pos]] = 0

    if indices:
        rec(0, degree, [0] * nvars)
    return out


@dataclass(frozen=True)
class MonomialOrder:
    """Graded-lex or lex with an explicit variable precedence.

    precedence lists variable indices from most to least significant.
    """
    kind: str
    precedence: Tuple[int, ...]

    def __post_init__(self):
        if self.kind not in ("grlex", "lex"):
            raise InputError(f"unknown monomial order '{self.kind}'")
        if sorted(self.precedence) != list(range(len(self.precedence))):
            raise InputError("precedence must be a permutation of the variable indices")

    @classmethod
    def graded_lex(cls, nvars: int) -> "MonomialOrder":
        return cls("grlex", tuple(range(nvars)))

    @classmethod
    def lex(cls, nvars: int) -> "MonomialOrder":
        return cls("lex", tuple(range(nvars)))

    def key(self, m: Monomial) -> tuple:
        """Sort key; larger key means larger monomial."""
        ordered = tuple(m[i] for i in self.precedence)
        if self.kind == "grlex":
            return (sum(m),) + ordered
        return ordered


# =====================================================
# POLYNOMIALS
# =====================================================

class Polynomial:
    """Immutable sparse polynomial in a fixed number of variables.

    No stored coefficient is ever zero, so equality is equality of term maps.
    """

    __slots__ = ("nvars", "_terms", "_hash")

    def __init__(self, nvars: int, terms: Optional[Mapping[Monomial, Scalar]] = None):
        self.nvars = nvars
        clean: Dict[Monomial, Fraction] = {}
        for mono, coeff in (terms or {}).items():
            if len(mono) != nvars:
                raise InputError(f"monomial {mono} has {len(mono)} exponents, expected {nvars}")
            c = Fraction(coeff)
            if c:
                clean[tuple(mono)] = c
        self._terms = clean
        self._hash = None

    @classmethod
    def _raw(cls, nvars: int, terms: Dict[Monomial, Fraction]) -> "Polynomial":
        # terms already clean
        p = cls.__new__(cls)
        p.nvars = nvars
        p._terms = terms
        p._hash = None
        return p

    @classmethod
    def zero(cls, nvars: int) -> "Polynomial":
        return cls._raw(nvars, {})

    @classmethod
    def constant(cls, nvars: int, c: Scalar) -> "Polynomial":
        return cls(nvars, {(0,) * nvars: c})

    @classmethod
    def variable(cls, nvars: int, i: int) -> "Polynomial":
        mono = [0] * nvars
        mono[i] = 1
        return cls._raw(nvars, {tuple(mono): Fraction(1)})

    @classmethod
    def monomial(cls, nvars: int, mono: Monomial, coeff: Scalar = 1) -> "Polynomial":
        return cls(nvars, {tuple(mono): coeff})

    # ---- inspection ----

    @property
    def terms(self) -> Mapping[Monomial, Fraction]:
        return MappingProxyType(self._terms)

    def is_zero(self) -> bool:
        return not self._terms

    def __bool__(self) -> bool:
        return bool(self._terms)

    def __len__(self) -> int:
        return len(self._terms)

    def degree(self) -> int:
        """Total degree; -1 for the zero polynomial."""
        return max((sum(m) for m in self._terms), default=-1)

    def support(self) -> List[int]:
        return sorted({i for m in self._terms for i, e in enumerate(m) if e})

    def sorted_terms(self, order: MonomialOrder) -> List[Tuple[Monomial, Fraction]]:
        """Terms in descending order."""
        return sorted(self._terms.items(), key=lambda kv: order.key(kv[0]), reverse=True)

    def leading(self, order: MonomialOrder) -> Tuple[Monomial, Fraction]:
        if not self._terms:
            raise InputError("the zero polynomial has no leading term")
        mono = max(self._terms, key=order.key)
        return mono, self._terms[mono]

    # ---- arithmetic ----

    def _coerce(self, other) -> "Polynomial":
        if isinstance(other, Polynomial):
            if other.nvars != self.nvars:
                raise InputError(f"polynomials live in {self.nvars} and {other.nvars} variables")
            return other
        if isinstance(other, (int, Fraction)):
            return Polynomial.constant(self.nvars, other)
        return NotImplemented

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Polynomial.constant(self.nvars, other)
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self.nvars == other.nvars and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self.nvars, frozenset(self._terms.items())))
        return self._hash

    def __add__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out = dict(self._terms)
        for m, c in other._terms.items():
            v = out.get(m, 0) + c
            if v:
                out[m] = v
            else:
                out.pop(m, None)
        return Polynomial._raw(self.nvars, out)

    __radd__ = __add__

    def __neg__(self) -> "Polynomial":
        return Polynomial._raw(self.nvars, {m: -c for m, c in self._terms.items()})

    def __sub__(self, other) -> "Polynomial":
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        return self + (-other)

    def __rsub__(self, other) -> "Polynomial":
        return (-self) + other

    def __mul__(self, other) -> "Polynomial":
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        other = self._coerce(other)
        if other is NotImplemented:
            return NotImplemented
        out: Dict[Monomial, Fraction] = {}
        for m1, c1 in self._terms.items():
            for m2, c2 in other._terms.items():
                m = monomial_mul(m1, m2)
                v = out.get(m, 0) + c1 * c2
                if v:
                    out[m] = v
                else:
                    out.pop(m, None)
        return Polynomial._raw(self.nvars, out)

    __rmul__ = __mul__

    def __pow__(self, e: int) -> "Polynomial":
        if e < 0:
            raise InputError("negative powers are not polynomials")
        result = Polynomial.constant(self.nvars, 1)
        base = self
        while e:
            if e & 1:
                result = result * base
            base = base * base
            e >>= 1
        return result

    def scale(self, c: Scalar) -> "Polynomial":
        c = Fraction(c)
        if not c:
            return Polynomial.zero(self.nvars)
        return Polynomial._raw(self.nvars, {m: v * c for m, v in self._terms.items()})

    def mul_term(self, mono: Monomial, coeff: Scalar) -> "Polynomial":
        coeff = Fraction(coeff)
        if not coeff:
            return Polynomial.zero(self.nvars)
        return Polynomial._raw(self.nvars, {monomial_mul(m, mono): c * coeff for m, c in self._terms.items()})

    def monic(self, order: MonomialOrder) -> "Polynomial":
        _, lc = self.leading(order)
        return self.scale(1 / lc)

    # ---- calculus and substitution ----

    def diff(self, i: int) -> "Polynomial":
        out: Dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            e = m[i]
            if e:
                n = list(m)
                n[i] = e - 1
                out[tuple(n)] = c * e
        return Polynomial._raw(self.nvars, out)

    def compose(self, images: Sequence["Polynomial"]) -> "Polynomial":
        """Substitute variable i by images[i]; all images share one ring."""
        if len(images) != self.nvars:
            raise InputError(f"need {self.nvars} images, got {len(images)}")
        if not images:
            return self
        target = images[0].nvars
        powers: Dict[Tuple[int, int], Polynomial] = {}

        def power(i: int, e: int) -> Polynomial:
            key = (i, e)
            if key not in powers:
                powers[key] = images[i] ** e
            return powers[key]

        result = Polynomial.zero(target)
        for m, c in self._terms.items():
            term = Polynomial.constant(target, c)
            for i, e in enumerate(m):
                if e:
                    term = term * power(i, e)
            result = result + term
        return result

    def embed(self, nvars: int, index_map: Sequence[int]) -> "Polynomial":
        """Rename variable i to index_map[i] inside a ring of nvars variables."""
        out: Dict[Monomial, Fraction] = {}
        for m, c in self._terms.items():
            n = [0] * nvars
            for i, e in enumerate(m):
                if e:
                    n[index_map[i]] += e
            out[tuple(n)] = c
        return Polynomial._raw(nvars, out)

    def truncate(self, indices: Sequence[int], max_degree: int) -> "Polynomial":
        """Drop terms whose degree in the given variables exceeds max_degree."""
        return Polynomial._raw(self.nvars, {
            m: c for m, c in self._terms.items() if sum(m[i] for i in indices) <= max_degree
        })

    def __repr__(self) -> str:
        return f"Polynomial({self.nvars}, {dict(self._terms)!r})"


# =====================================================
# DIVISION
# =====================================================

def divide(
    f: Polynomial,
    divisors: Sequence[Polynomial],
    order: MonomialOrder,
    track: bool = False,
) -> Tuple[List[Polynomial], Polynomial]:
    """Multivariate division; returns (quotients, remainder).

    Every term of the remainder is irreducible by the leading terms of
    `divisors`, and f = sum(q_i * g_i) + r exactly. Quotients are only
    accumulated when track=True.
    """
    n = f.nvars
    leads = [g.leading(order) for g in divisors]
    p: Dict[Monomial, Fraction] = dict(f._terms)
    r: Dict[Monomial, Fraction] = {}
    quotients: List[Dict[Monomial, Fraction]] = [dict() for _ in divisors]

    def neg_key(m: Monomial) -> tuple:
        return tuple(-k for k in order.key(m))

    heap = [(neg_key(m), m) for m in p]
    heapq.heapify(heap)

    while heap:
        _, m = heapq.heappop(heap)
        c = p.get(m)
        if c is None:
            continue
        for idx, (lm, lc) in enumerate(leads):
            if monomial_divides(lm, m):
                q_mono = monomial_div(m, lm)
                q_c = c / lc
                for gm, gc in divisors[idx]._terms.items():
                    t = monomial_mul(gm, q_mono)
                    old = p.get(t)
                    v = (old or 0) - q_c * gc
                    if v:
                        p[t] = v
                        if old is None:
                            heapq.heappush(heap, (neg_key(t), t))
                    elif old is not None:
                        del p[t]
                if track:
                    qd = quotients[idx]
                    v = qd.get(q_mono, 0) + q_c
                    if v:
                        qd[q_mono] = v
                    else:
                        qd.pop(q_mono, None)
                break
        else:
            r[m] = c
            del p[m]

    return [Polynomial._raw(n, q) for q in quotients], Polynomial._raw(n, r)


# =====================================================
# BUCHBERGER
# =====================================================

def s_polynomial(f: Polynomial, g: Polynomial, order: MonomialOrder) -> Polynomial:
    """Return the s-polynomial of f and g."""
    lmf, lcf = f.leading(order)
    lmg, lcg = g.leading(order)
    lcm = monomial_lcm(lmf, lmg)
    return f.mul_term(monomial_div(lcm, lmf), 1 / lcf) - g.mul_term(monomial_div(lcm, lmg), 1 / lcg)


def _select(G: List[Polynomial], lmG: List[Monomial], P: set, order: MonomialOrder) -> Tuple[int, int]:
    """Normal selection: the pair with the smallest lcm, ties by index."""
    return min(P, key=lambda p: (order.key(monomial_lcm(lmG[p[0]], lmG[p[1]])), p))


def _update(G: List[Polynomial], lmG: List[Monomial], P: set, f: Polynomial, order: MonomialOrder):
    """Add f to the basis; pairs with coprime leading monomials are skipped."""
    lmf, _ = f.leading(order)
    new_pairs = {
        (i, len(G)) for i in range(len(G))
        if monomial_lcm(lmG[i], lmf) != monomial_mul(lmG[i], lmf)
    }
    G.append(f)
    lmG.append(lmf)
    P |= new_pairs


def _minimalize(G: List[Polynomial], order: MonomialOrder) -> List[Polynomial]:
    Gmin: List[Polynomial] = []
    for f in sorted(G, key=lambda h: order.key(h.leading(order)[0])):
        lm = f.leading(order)[0]
        if all(not monomial_divides(g.leading(order)[0], lm) for g in Gmin):
            Gmin.append(f)
    return Gmin


def _interreduce(G: List[Polynomial], order: MonomialOrder) -> List[Polynomial]:
    Gred = []
    for i in range(len(G)):
        _, g = divide(G[i], G[:i] + G[i + 1:], order)
        Gred.append(g.monic(order))
    return Gred


def groebner_basis(
    generators: Iterable[Polynomial],
    order: MonomialOrder,
    degree_cap: Optional[int] = None,
) -> List[Polynomial]:
    """Reduced Gröbner basis, sorted by ascending leading monomial.

    Raises ResourceError when an S-pair's lcm degree exceeds degree_cap.
    """
    cap = DEFAULT_DEGREE_CAP if degree_cap is None else degree_cap
    F = [g for g in generators if not g.is_zero()]
    if not F:
        return []

    start = time.perf_counter()
    G: List[Polynomial] = []
    lmG: List[Monomial] = []
    P: set = set()
    for f in F:
        _update(G, lmG, P, f.monic(order), order)

    processed = 0
    while P:
        i, j = _select(G, lmG, P, order)
        P.remove((i, j))
        lcm_degree = sum(monomial_lcm(lmG[i], lmG[j]))
        if lcm_degree > cap:
            record_groebner_run('cap', time.perf_counter() - start)
            logger.warning("Gröbner degree cap hit", extra={'degree_cap': cap, 'basis_size': len(G)})
            raise ResourceError(f"Gröbner degree cap {cap} exceeded (S-pair of degree {lcm_degree})", cap)
        s = s_polynomial(G[i], G[j], order)
        _, r = divide(s, G, order)
        processed += 1
        if not r.is_zero():
            _update(G, lmG, P, r.monic(order), order)

    basis = _interreduce(_minimalize(G, order), order)
    basis.sort(key=lambda g: order.key(g.leading(order)[0]))

    elapsed = time.perf_counter() - start
    record_groebner_run('ok', elapsed, len(basis))
    logger.info("Gröbner basis computed", extra={
        'basis_size': len(basis), 'pairs': processed, 'duration_ms': round(elapsed * 1000, 2),
    })
    return basis


# =====================================================
# RING CONTEXT
# =====================================================

_NAME = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_ALLOWED = re.compile(r"^[A-Za-z0-9_+\-*/^()\s]*$")


class RingContext:
    """A polynomial ring modulo an ideal, with unique normal forms.

    The ideal is generated by `relations` together with the monomials in
    `truncation`; the Gröbner basis is computed once at construction and the
    context is read-only afterwards.
    """

    def __init__(
        self,
        variables: Sequence[str],
        relations: Sequence[Polynomial] = (),
        order: Optional[MonomialOrder] = None,
        truncation: Iterable[Monomial] = (),
        degree_cap: Optional[int] = None,
    ):
        self.variables: Tuple[str, ...] = tuple(variables)
        if len(set(self.variables)) != len(self.variables):
            raise InputError(f"duplicate variable names in {self.variables}")
        self.nvars = len(self.variables)
        self.order = order or MonomialOrder.graded_lex(self.nvars)
        self._index = {name: i for i, name in enumerate(self.variables)}
        self.relations: Tuple[Polynomial, ...] = tuple(self.check(r) for r in relations)
        self.truncation: Tuple[Monomial, ...] = tuple(tuple(m) for m in truncation)
        self.degree_cap = DEFAULT_DEGREE_CAP if degree_cap is None else degree_cap

        generators = list(self.relations) + [Polynomial.monomial(self.nvars, m) for m in self.truncation]
        self.groebner: Tuple[Polynomial, ...] = tuple(groebner_basis(generators, self.order, self.degree_cap))

    def __repr__(self) -> str:
        return f"RingContext({','.join(self.variables)}; {len(self.groebner)} basis elements)"

    # ---- variables ----

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise InputError(f"unknown variable '{name}'") from None

    def block(self, prefix: str) -> Tuple[int, ...]:
        """Indices of prefix1, prefix2, ... in numeric order."""
        found = []
        for name, i in self._index.items():
            if name.startswith(prefix) and name[len(prefix):].isdigit():
                found.append((int(name[len(prefix):]), i))
        return tuple(i for _, i in sorted(found))

    def var(self, name: str) -> Polynomial:
        return Polynomial.variable(self.nvars, self.index(name))

    def const(self, c: Scalar) -> Polynomial:
        return Polynomial.constant(self.nvars, c)

    def zero(self) -> Polynomial:
        return Polynomial.zero(self.nvars)

    def one(self) -> Polynomial:
        return Polynomial.constant(self.nvars, 1)

    def check(self, f: Polynomial) -> Polynomial:
        if not isinstance(f, Polynomial):
            raise InputError(f"expected a Polynomial, got {type(f).__name__}")
        if f.nvars != self.nvars:
            raise InputError(f"polynomial in {f.nvars} variables used in a ring on {self.variables}")
        return f

    def embed(self, f: Polynomial, source: "RingContext") -> Polynomial:
        """Move f from `source` into this ring by matching variable names."""
        source.check(f)
        return self.check(f.embed(self.nvars, [self.index(v) for v in source.variables]))

    # ---- normal forms ----

    def reduce(self, f: Polynomial) -> Polynomial:
        self.check(f)
        if not self.groebner or f.is_zero():
            return f
        _, r = divide(f, self.groebner, self.order)
        return r

    def reduce_with_quotients(self, f: Polynomial) -> Tuple[List[Polynomial], Polynomial]:
        self.check(f)
        return divide(f, self.groebner, self.order, track=True)

    def contains(self, f: Polynomial) -> bool:
        return self.reduce(f).is_zero()

    def equal(self, f: Polynomial, g: Polynomial) -> bool:
        return self.reduce(f - g).is_zero()

    # ---- text ----

    def parse(self, text: str) -> Polynomial:
        return parse_polynomial(text, self)

    def format(self, f: Polynomial) -> str:
        return format_polynomial(f, self)


def reduce(f: Polynomial, ctx: RingContext) -> Polynomial:
    """Unique normal form of f modulo ctx."""
    return ctx.reduce(f)


def taylor_shift(
    a: Polynomial,
    l: int,
    ctx: RingContext,
    source: str = "x",
    shift: str = "t",
) -> Polynomial:
    """a(x + t) with every term of t-degree above l dropped.

    `a` must already live in ctx and only involve the source block.
    """
    if l < 0:
        raise InputError(f"truncation order must be >= 0, got {l}")
    ctx.check(a)
    src = ctx.block(source)
    dst = ctx.block(shift)
    if len(src) != len(dst):
        raise InputError(f"blocks '{source}' and '{shift}' differ in size")
    if any(i not in src for i in a.support()):
        raise InputError(f"taylor_shift input must only use the '{source}' variables")
    images = [Polynomial.variable(ctx.nvars, i) for i in range(ctx.nvars)]
    for i, j in zip(src, dst):
        images[i] = images[i] + Polynomial.variable(ctx.nvars, j)
    return _compose_truncated(a, images, dst, l)


def _compose_truncated(f: Polynomial, images: Sequence[Polynomial], block: Sequence[int], bound: int) -> Polynomial:
    """compose() that truncates in `block` after every product."""
    nvars = images[0].nvars
    result = Polynomial.zero(nvars)
    for m, c in f.terms.items():
        term = Polynomial.constant(nvars, c)
        for i, e in enumerate(m):
            for _ in range(e):
                term = (term * images[i]).truncate(block, bound)
        result = result + term
    return result


# =====================================================
# TEXT GRAMMAR
# =====================================================

def parse_polynomial(text: str, ctx: RingContext) -> Polynomial:
    """Parse `-3/2*x1^2*x2 + 1` style text into a Polynomial of ctx."""
    if not isinstance(text, str) or not text.strip():
        raise ParseError("empty polynomial text")
    if not _ALLOWED.match(text):
        raise ParseError(f"illegal characters in '{text}'")
    for name in _NAME.findall(text):
        if name not in ctx._index:
            raise ParseError(f"unknown variable '{name}' in '{text}'")

    symbols = [sympy.Symbol(v) for v in ctx.variables]
    try:
        expr = sympy.parse_expr(text.replace("^", "**"), local_dict=dict(zip(ctx.variables, symbols)),
                                evaluate=True)
        poly = sympy.Poly(expr, *symbols, domain="QQ") if symbols else None
    except Exception as exc:  # sympy raises a zoo of types here
        raise ParseError(f"cannot parse '{text}': {exc}") from exc

    if poly is None:
        value = sympy.Rational(expr)
        return Polynomial.constant(0, Fraction(int(value.p), int(value.q)))

    terms = {}
    for mono, coeff in poly.terms():
        q = sympy.Rational(coeff)
        terms[tuple(int(e) for e in mono)] = Fraction(int(q.p), int(q.q))
    return Polynomial(ctx.nvars, terms)


def format_polynomial(f: Polynomial, ctx: RingContext) -> str:
    """Print f with terms in descending order."""
    ctx.check(f)
    if f.is_zero():
        return "0"
    pieces = []
    for mono, coeff in f.sorted_terms(ctx.order):
        factors = []
        for name, e in zip(ctx.variables, mono):
            if e == 1:
                factors.append(name)
            elif e > 1:
                factors.append(f"{name}^{e}")
        mag = abs(coeff)
        if not factors:
            body = str(mag)
        elif mag == 1:
            body = "*".join(factors)
        else:
            body = f"{mag}*" + "*".join(factors)
        sign = "-" if coeff < 0 else "+"
        if not pieces:
            pieces.append(("-" if sign == "-" else "") + body)
        else:
            pieces.append(f" {sign} {body}")
    return "".join(pieces)
