"""Diagrammatic calculus for the Frobenius Heisenberg category.

Morphisms between tensor words in the arrows (up, down) are reduced to
combinations of basis diagrams: a matching of endpoints, a dot count and a
token per string at the string's terminus, and a coefficient in the graded
symmetric superalgebra on the shifted cocenter of A.

The rewrite engine keeps an exact rational planar embedding of every
intermediate diagram.  Local moves (dot slides, bigon and curl removal,
strand-over-crossing slides, bubble transport) are path surgeries on that
embedding; all sign bookkeeping is done mechanically from the heights of odd
decorations.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

from .frobenius import (
    AlgebraElement,
    FrobeniusAlgebra,
    a_dagger,
    center_cocenter,
)
from .scalars import Scalar

Rat = Fraction

UP = 1
DOWN = -1


class EngineError(RuntimeError):
    """Internal rewriting failure (should never trigger on valid input)."""


class DiagramSyntaxError(ValueError):
    """Raised by the expression parser, with a position attached."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at offset {position})")
        self.position = position


class InterfaceMismatch(ValueError):
    """Raised when a layer's atoms do not fit the word below them."""


# ---------------------------------------------------------------------------
# coefficients: the graded symmetric superalgebra on the shifted cocenter
# ---------------------------------------------------------------------------

# generator key: (cocenter label index, power m >= 0)
GenKey = Tuple[int, int]
Monomial = Tuple[GenKey, ...]


class _SymContext:
    """Per-algebra data shared by all coefficient elements."""

    def __init__(self, A: FrobeniusAlgebra):
        self.alg = A
        cc = center_cocenter(A)
        self.cc = cc
        self.labels: List[str] = list(cc.cocenter_labels)
        self.duals: List[AlgebraElement] = list(cc.cocenter_duals)
        self.parity: List[int] = [A.parity[l] for l in self.labels]
        self.degree: List[int] = [A.degree[l] for l in self.labels]

    def gen_parity(self, g: GenKey) -> int:
        return self.parity[g[0]]

    def gen_degree(self, g: GenKey) -> int:
        return self.degree[g[0]] + 2 * g[1] * self.alg.d


_SYM_CTX: Dict[int, _SymContext] = {}


def _sym_ctx(A: FrobeniusAlgebra) -> _SymContext:
    ctx = _SYM_CTX.get(id(A))
    if ctx is None or ctx.alg is not A:
        ctx = _SymContext(A)
        _SYM_CTX[id(A)] = ctx
    return ctx


class SymElement:
    """Element of the coefficient superalgebra.

    Monomials are tuples of generator keys sorted by (label index, power);
    odd generators square to zero and anticommute.
    """

    def __init__(self, A: FrobeniusAlgebra, terms: Dict[Monomial, Rat]):
        self.alg = A
        self.terms = {m: Fraction(c) for m, c in terms.items() if c}

    # -- constructors

    @staticmethod
    def zero(A: FrobeniusAlgebra) -> "SymElement":
        return SymElement(A, {})

    @staticmethod
    def one(A: FrobeniusAlgebra) -> "SymElement":
        return SymElement(A, {(): Fraction(1)})

    @staticmethod
    def scalar(A: FrobeniusAlgebra, c: Rat) -> "SymElement":
        return SymElement(A, {(): Fraction(c)})

    @staticmethod
    def generator(A: FrobeniusAlgebra, label: str, m: int) -> "SymElement":
        ctx = _sym_ctx(A)
        idx = ctx.labels.index(label)
        return SymElement(A, {((idx, m),): Fraction(1)})

    # -- ring structure

    def __add__(self, other: "SymElement") -> "SymElement":
        out = dict(self.terms)
        for m, c in other.terms.items():
            out[m] = out.get(m, Fraction(0)) + c
        return SymElement(self.alg, out)

    def __sub__(self, other: "SymElement") -> "SymElement":
        return self + other.scale(-1)

    def __neg__(self) -> "SymElement":
        return self.scale(-1)

    def scale(self, c: Rat) -> "SymElement":
        return SymElement(self.alg, {m: v * Fraction(c) for m, v in self.terms.items()})

    def __mul__(self, other: "SymElement") -> "SymElement":
        ctx = _sym_ctx(self.alg)
        out: Dict[Monomial, Rat] = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                mono, sign = _merge_monomials(ctx, m1, m2)
                if sign == 0:
                    continue
                out[mono] = out.get(mono, Fraction(0)) + c1 * c2 * sign
        return SymElement(self.alg, out)

    def __eq__(self, other) -> bool:
        return isinstance(other, SymElement) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def is_zero(self) -> bool:
        return not self.terms

    def is_scalar(self) -> bool:
        return all(m == () for m in self.terms)

    def scalar_part(self) -> Rat:
        return self.terms.get((), Fraction(0))

    # -- grading

    def degree_of(self, mono: Monomial) -> int:
        ctx = _sym_ctx(self.alg)
        return sum(ctx.gen_degree(g) for g in mono)

    def parity_of(self, mono: Monomial) -> int:
        ctx = _sym_ctx(self.alg)
        return sum(ctx.gen_parity(g) for g in mono) & 1

    def is_homogeneous(self) -> bool:
        degs = {(self.degree_of(m), self.parity_of(m)) for m in self.terms}
        return len(degs) <= 1

    def degree(self) -> Optional[int]:
        degs = {self.degree_of(m) for m in self.terms}
        if len(degs) == 1:
            return degs.pop()
        return None

    def parity(self) -> Optional[int]:
        pars = {self.parity_of(m) for m in self.terms}
        if len(pars) == 1:
            return pars.pop()
        return None

    def __repr__(self):
        ctx = _sym_ctx(self.alg)
        if not self.terms:
            return "0"
        bits = []
        for mono in sorted(self.terms):
            c = self.terms[mono]
            gens = "*".join(f"g[{ctx.labels[i]},{m}]" for i, m in mono) or "1"
            bits.append(f"{c}*{gens}")
        return " + ".join(bits)

    def to_json(self) -> list:
        ctx = _sym_ctx(self.alg)
        out = []
        for mono in sorted(self.terms):
            out.append(
                {
                    "monomial": [[ctx.labels[i], m] for i, m in mono],
                    "coeff": str(self.terms[mono]),
                }
            )
        return out


def _merge_monomials(ctx: _SymContext, m1: Monomial, m2: Monomial) -> Tuple[Monomial, int]:
    """Sorted merge with Koszul sign; equal odd generators give 0."""
    items = list(m1) + list(m2)
    parities = [ctx.gen_parity(g) for g in items]
    sign = 1
    # insertion sort, counting odd-odd transpositions
    for i in range(1, len(items)):
        j = i
        while j > 0 and items[j] < items[j - 1]:
            if parities[j] and parities[j - 1]:
                sign = -sign
            items[j], items[j - 1] = items[j - 1], items[j]
            parities[j], parities[j - 1] = parities[j - 1], parities[j]
            j -= 1
    for a, b in zip(items, items[1:]):
        if a == b and ctx.gen_parity(a):
            return (), 0
    return tuple(items), sign


# -- elementary / complete coefficient families ------------------------------


def elementary_sym(A: FrobeniusAlgebra, n: int, a: AlgebraElement) -> SymElement:
    """The n-th elementary family: 0 for n<0, tr(a) for n=0, class(a)*x^(n-1)."""
    if n < 0:
        return SymElement.zero(A)
    if n == 0:
        return SymElement.scalar(A, a.trace())
    ctx = _sym_ctx(A)
    coords = ctx.cc.project_to_cocenter(a)
    out = SymElement.zero(A)
    for label, c in coords.items():
        if c:
            out = out + SymElement.generator(A, label, n - 1).scale(c)
    return out


_H_CACHE: Dict[Tuple[int, int, str], SymElement] = {}


def beta_h(A: FrobeniusAlgebra, n: int, a: AlgebraElement) -> SymElement:
    """Complete family determined by the pairing with the elementary one.

    h_0(a) = tr(a) and, for n > 0,
    h_n(a) = -sum_{r=1..n} (-1)^r sum_b e_r(a*b) h_{n-r}(b~).
    """
    if n < 0:
        return SymElement.zero(A)
    if n == 0:
        return SymElement.scalar(A, a.trace())
    out = SymElement.zero(A)
    for label, c in a.coeffs.items():
        if c:
            out = out + _h_basis(A, n, label).scale(c)
    return out


def _h_basis(A: FrobeniusAlgebra, n: int, label: str) -> SymElement:
    key = (id(A), n, label)
    got = _H_CACHE.get(key)
    if got is not None:
        return got
    a = A.basis_element(label)
    duals = A.dual_basis()
    acc = SymElement.zero(A)
    for r in range(1, n + 1):
        sgn = -1 if r % 2 else 1
        for bi, blab in enumerate(A.labels):
            left = elementary_sym(A, r, a * A.basis_element(blab))
            if left.is_zero():
                continue
            right = beta_h(A, n - r, duals[bi])
            if right.is_zero():
                continue
            acc = acc + (left * right).scale(-sgn)
    _H_CACHE[key] = acc
    return acc


def ccw_value(A: FrobeniusAlgebra, k: int, a: AlgebraElement, dots: int) -> SymElement:
    """Counterclockwise dotted bubble as a coefficient, any dot count."""
    n = dots + k + 1
    sgn = -1 if n % 2 else 1
    return elementary_sym(A, n, a).scale(sgn)


def cw_value(A: FrobeniusAlgebra, k: int, a: AlgebraElement, dots: int) -> SymElement:
    """Clockwise dotted bubble as a coefficient, any dot count."""
    return beta_h(A, dots - k + 1, a).scale(-1)


def neg_bubble(
    A: FrobeniusAlgebra, k: int, a: AlgebraElement, dots: int, orientation: str
) -> SymElement:
    """Negatively dotted bubble via the column-ordered determinant formulas.

    For nonnegative dot counts this returns the genuine bubble value.
    """
    if orientation not in ("ccw", "cw"):
        raise ValueError("orientation must be 'ccw' or 'cw'")
    if dots >= 0:
        if orientation == "ccw":
            return ccw_value(A, k, a, dots)
        return cw_value(A, k, a, dots)
    if orientation == "ccw":
        r = dots + k
        if r < -1:
            return SymElement.zero(A)
        if r == -1:
            return SymElement.scalar(A, a.trace())
        return _bubble_det(A, a, r, lambda c, i, j: cw_value(A, k, c, i - j + k))
    r = dots - k
    if r < -1:
        return SymElement.zero(A)
    if r == -1:
        return SymElement.scalar(A, -a.trace())
    det = _bubble_det(A, a, r, lambda c, i, j: ccw_value(A, k, c, i - j - k))
    return det.scale(-1 if r % 2 else 1)


def _bubble_det(A, a, r, entry) -> SymElement:
    """Sum over r-tuples of basis labels of the (r+1)x(r+1) determinant.

    Entries are multiplied in column order inside each permutation term.
    """
    duals = A.dual_basis()
    one = A.one()
    total = SymElement.zero(A)
    for combo in itertools.product(range(A.dim), repeat=r):
        # row of tokens b_0~ b_1, b_1~ b_2, ..., with b_0~ = a, b_{r+1} = 1
        chain: List[AlgebraElement] = []
        prev_dual = a
        for idx in combo:
            chain.append(prev_dual * A.basis_element(A.labels[idx]))
            prev_dual = duals[idx]
        chain.append(prev_dual * one)
        for perm in itertools.permutations(range(r + 1)):
            sgn = _perm_sign(perm)
            prod = SymElement.one(A)
            dead = False
            for j in range(r + 1):
                cell = entry(chain[j], perm[j] + 1, j + 1)
                if cell.is_zero():
                    dead = True
                    break
                prod = prod * cell
            if dead:
                continue
            total = total + prod.scale(sgn)
    return total


def _perm_sign(perm: Sequence[int]) -> int:
    sign = 1
    for i in range(len(perm)):
        for j in range(i + 1, len(perm)):
            if perm[i] > perm[j]:
                sign = -sign
    return sign


def bubble_series(
    A: FrobeniusAlgebra, k: int, a: AlgebraElement, orientation: str, order: int
) -> Dict[int, SymElement]:
    """Generating function coefficients, keyed by the power of u.

    Clockwise series: -sum_n cw(a, n) u^{-n-1}, leading term tr(a) u^{-k}.
    Counterclockwise: +sum_n ccw(a, n) u^{-n-1}, leading term tr(a) u^{k}.
    """
    out: Dict[int, SymElement] = {}
    if orientation == "cw":
        lead = -k
    elif orientation == "ccw":
        lead = k
    else:
        raise ValueError("orientation must be 'ccw' or 'cw'")
    for step in range(order):
        power = lead - step
        dots = -power - 1
        if orientation == "cw":
            val = neg_bubble(A, k, a, dots, "cw").scale(-1)
        else:
            val = neg_bubble(A, k, a, dots, "ccw")
        if not val.is_zero():
            out[power] = val
    return out


def series_pairing_check(
    A: FrobeniusAlgebra, k: int, a: AlgebraElement, b: AlgebraElement, order: int
) -> List[Tuple[int, SymElement]]:
    """Coefficients of (ccw series of a c) * (cw series of c~ b) - tr(ab).

    Returns the nonzero coefficients up to the truncation order; an empty
    list means the pairing identity holds in that window.
    """
    duals = A.dual_basis()
    bad: List[Tuple[int, SymElement]] = []
    for n in range(-order, order + 1):
        acc = SymElement.zero(A)
        for r in range(-abs(k) - order - 2, abs(k) + order + 2):
            for i, lab in enumerate(A.labels):
                left = neg_bubble(A, k, a * A.basis_element(lab), r, "ccw")
                if left.is_zero():
                    continue
                right = neg_bubble(A, k, duals[i] * b, n - r - 2, "cw")
                if right.is_zero():
                    continue
                acc = acc + left * right
        if n == 0:
            acc = acc + SymElement.scalar(A, (a * b).trace())
        if not acc.is_zero():
            bad.append((n, acc))
    return bad


def sym_hilbert_series(A: FrobeniusAlgebra, max_degree: int) -> Scalar:
    """Graded dimension of the coefficient algebra up to q^max_degree.

    Even generators contribute geometric factors, odd generators (1 + q^d).
    Degree-zero odd generators would square to zero yet have no grading to
    separate them; they still contribute a (1 + 1) factor at q^0.
    """
    ctx = _sym_ctx(A)
    # truncated polynomial as dict degree -> coefficient
    poly: Dict[int, Fraction] = {0: Fraction(1)}
    for i in range(len(ctx.labels)):
        m = 0
        while True:
            d = ctx.degree[i] + 2 * m * A.d
            if d > max_degree and d > 0:
                break
            if ctx.parity[i]:
                factor = {0: Fraction(1), d: Fraction(1)}
                poly = _poly_mul_trunc(poly, factor, max_degree)
            else:
                if d == 0:
                    raise EngineError(
                        "even degree-zero coefficient generator gives an "
                        "infinite-dimensional degree-zero piece"
                    )
                factor = {j: Fraction(1) for j in range(0, max_degree + 1, d)}
                poly = _poly_mul_trunc(poly, factor, max_degree)
            m += 1
            if d == 0:
                break
    return Scalar({(d, 0): c for d, c in poly.items() if c})


def _poly_mul_trunc(p: Dict[int, Rat], q: Dict[int, Rat], cap: int) -> Dict[int, Rat]:
    out: Dict[int, Rat] = {}
    for d1, c1 in p.items():
        for d2, c2 in q.items():
            d = d1 + d2
            if d <= cap:
                out[d] = out.get(d, Fraction(0)) + c1 * c2
    return out


# ---------------------------------------------------------------------------
# exact planar geometry
# ---------------------------------------------------------------------------

Pt = Tuple[Rat, Rat]


def _sub(p: Pt, q: Pt) -> Pt:
    return (p[0] - q[0], p[1] - q[1])


def _cross(u: Pt, v: Pt) -> Rat:
    return u[0] * v[1] - u[1] * v[0]


def _lerp(p: Pt, q: Pt, t: Rat) -> Pt:
    return (p[0] + (q[0] - p[0]) * t, p[1] + (q[1] - p[1]) * t)


def _seg_intersect(p1: Pt, p2: Pt, q1: Pt, q2: Pt) -> Optional[Tuple[Rat, Rat]]:
    """Proper interior intersection parameters (t, u), or None.

    Raises EngineError on degenerate contact (collinear overlap, endpoint
    touching), which the calling code avoids by construction.
    """
    r = _sub(p2, p1)
    s = _sub(q2, q1)
    denom = _cross(r, s)
    qp = _sub(q1, p1)
    if denom == 0:
        if _cross(qp, r) == 0:
            # collinear: reject overlap
            rr = r[0] * r[0] + r[1] * r[1]
            t0 = (qp[0] * r[0] + qp[1] * r[1])
            t1 = t0 + (s[0] * r[0] + s[1] * r[1])
            lo, hi = min(t0, t1), max(t0, t1)
            if hi > 0 and lo < rr:
                raise EngineError("collinear overlapping segments")
        return None
    t = _cross(qp, s) / denom
    u = _cross(qp, r) / denom
    if t <= 0 or t >= 1 or u <= 0 or u >= 1:
        if (0 <= t <= 1 and 0 <= u <= 1) and (
            t in (0, 1) or u in (0, 1)
        ):
            # contact at a segment endpoint inside the other segment
            if 0 < t < 1 or 0 < u < 1:
                raise EngineError("segment endpoint touches another segment")
        return None
    return (t, u)


def _signed_area(pts: Sequence[Pt]) -> Rat:
    total = Fraction(0)
    n = len(pts)
    for i in range(n):
        x1, y1 = pts[i]
        x2, y2 = pts[(i + 1) % n]
        total += x1 * y2 - x2 * y1
    return total / 2


def _point_in_polygon(pt: Pt, poly: Sequence[Pt]) -> bool:
    """Even-odd test with a ray in the +x direction, exact arithmetic."""
    px, py = pt
    inside = False
    n = len(poly)
    for i in range(n):
        x1, y1 = poly[i]
        x2, y2 = poly[(i + 1) % n]
        if (y1 > py) != (y2 > py):
            xc = x1 + (x2 - x1) * (py - y1) / (y2 - y1)
            if xc > px:
                inside = not inside
    return inside


# ---------------------------------------------------------------------------
# strands, markers, diagrams
# ---------------------------------------------------------------------------


class Marker:
    """Dot group or token riding a strand at position (segment, parameter)."""

    __slots__ = ("kind", "seg", "t", "count", "payload")

    def __init__(self, kind: str, seg: int, t: Rat, count: int = 0, payload=None):
        self.kind = kind  # "dot" | "tok"
        self.seg = seg
        self.t = Fraction(t)
        self.count = count
        self.payload = payload  # AlgebraElement for tokens

    def pos(self) -> Tuple[int, Rat]:
        return (self.seg, self.t)

    def copy(self) -> "Marker":
        return Marker(self.kind, self.seg, self.t, self.count, self.payload)


class Strand:
    """Open or closed polyline in flow order, carrying markers."""

    __slots__ = ("pts", "markers", "closed")

    def __init__(self, pts: Sequence[Pt], markers: Optional[List[Marker]] = None, closed: bool = False):
        self.pts: List[Pt] = list(pts)
        self.markers: List[Marker] = sorted(markers or [], key=lambda m: m.pos())
        self.closed = closed

    def copy(self) -> "Strand":
        return Strand(list(self.pts), [m.copy() for m in self.markers], self.closed)

    def nsegs(self) -> int:
        return len(self.pts) - 1

    def point(self, seg: int, t: Rat) -> Pt:
        return _lerp(self.pts[seg], self.pts[seg + 1], t)

    def marker_height(self, m: Marker) -> Rat:
        return self.point(m.seg, m.t)[1]

    def seg_dir(self, seg: int) -> int:
        dy = self.pts[seg + 1][1] - self.pts[seg][1]
        if dy > 0:
            return 1
        if dy < 0:
            return -1
        return 0

    def add_marker(self, kind: str, seg: int, t: Rat, count: int = 0, payload=None):
        self.markers.append(Marker(kind, seg, t, count, payload))
        self.markers.sort(key=lambda m: m.pos())


class VLoop:
    """Closed dotted-token loop held abstractly (dots may be negative)."""

    __slots__ = ("orientation", "elem", "dots", "x", "y")

    def __init__(self, orientation: str, elem: AlgebraElement, dots: int, x: Rat, y: Rat):
        self.orientation = orientation  # "ccw" | "cw"
        self.elem = elem
        self.dots = dots
        self.x = Fraction(x)
        self.y = Fraction(y)

    def copy(self) -> "VLoop":
        return VLoop(self.orientation, self.elem, self.dots, self.x, self.y)


class PathDiagram:
    """Exact planar diagram: strands + virtual loops + pending coefficients."""

    def __init__(self, A: FrobeniusAlgebra, k: int):
        self.A = A
        self.k = k
        self.strands: List[Strand] = []
        self.vloops: List[VLoop] = []
        # (coefficient factor, height, parity) collected for final read-off
        self.pending: List[Tuple[SymElement, Rat, int]] = []
        self.coeff: Rat = Fraction(1)

    def copy(self) -> "PathDiagram":
        pd = PathDiagram(self.A, self.k)
        pd.strands = [s.copy() for s in self.strands]
        pd.vloops = [v.copy() for v in self.vloops]
        pd.pending = list(self.pending)
        pd.coeff = self.coeff
        return pd

    # -- boundary bookkeeping

    def boundary(self) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
        """(bottom word, top word); raises if endpoints are off-grid."""
        bottom: Dict[int, int] = {}
        top: Dict[int, int] = {}
        for s in self.strands:
            if s.closed:
                continue
            for p, arriving in ((s.pts[0], False), (s.pts[-1], True)):
                x, y = p
                if y == 0:
                    slot = x - 1
                    if slot.denominator != 1:
                        raise EngineError("bottom endpoint off slot grid")
                    # flow out at bottom = down letter
                    bottom[int(slot)] = DOWN if arriving else UP
                elif y == 1:
                    slot = x - 1
                    if slot.denominator != 1:
                        raise EngineError("top endpoint off slot grid")
                    top[int(slot)] = UP if arriving else DOWN
                else:
                    raise EngineError("open strand endpoint not on a boundary")
        for d in (bottom, top):
            if d and (min(d) != 0 or max(d) != len(d) - 1):
                raise EngineError("boundary slots are not contiguous")
        return (
            tuple(bottom[i] for i in range(len(bottom))),
            tuple(top[i] for i in range(len(top))),
        )

    # -- global height registry of parity-carrying content

    def odd_heights(self, skip=None) -> List[Rat]:
        """Heights of all odd items (tokens, pendings); skip is (strand, marker)."""
        out = []
        for si, s in enumerate(self.strands):
            for m in s.markers:
                if skip is not None and skip[0] is s and skip[1] is m:
                    continue
                if m.kind == "tok" and m.payload.parity() == 1:
                    out.append(s.marker_height(m))
        for v in self.vloops:
            if v.elem.parity() == 1:
                out.append(v.y)
        for (_, h, par) in self.pending:
            if par == 1:
                out.append(h)
        return out

    def all_item_heights(self) -> List[Rat]:
        out = []
        for s in self.strands:
            for m in s.markers:
                out.append(s.marker_height(m))
        for v in self.vloops:
            out.append(v.y)
        for (_, h, _) in self.pending:
            out.append(h)
        return out

    def fresh_height(self, lo: Rat, hi: Rat) -> Rat:
        """A height strictly inside (lo, hi) distinct from every item height."""
        taken = set(self.all_item_heights())
        for s in self.strands:
            for p in s.pts:
                taken.add(p[1])
        lo = Fraction(lo)
        hi = Fraction(hi)
        step = hi - lo
        cand = lo + step / 2
        shrink = Fraction(1, 2)
        while cand in taken:
            shrink /= 2
            cand = lo + step * shrink
            if shrink.denominator > 1 << 60:
                raise EngineError("could not find a fresh height")
        return cand

    def odd_parity_between(self, y1: Rat, y2: Rat, skip_heights=()) -> int:
        lo, hi = min(y1, y2), max(y1, y2)
        count = 0
        for h in self.odd_heights():
            if lo < h < hi and h not in skip_heights:
                count += 1
        return count & 1


def _token_parity(elem: AlgebraElement) -> int:
    p = elem.parity()
    if p is None:
        raise EngineError("token payload with mixed parity")
    return p


def _koszul_move_sign(pd: PathDiagram, parity: int, y_from: Rat, y_to: Rat) -> int:
    """Sign for carrying an item of given parity from one height to another."""
    if parity == 0:
        return 1
    lo, hi = min(y_from, y_to), max(y_from, y_to)
    n = 0
    for h in pd.odd_heights():
        if lo < h < hi:
            n += 1
    return -1 if n % 2 else 1


# ---------------------------------------------------------------------------
# crossings
# ---------------------------------------------------------------------------


class Crossing:
    __slots__ = ("si", "segi", "ti", "sj", "segj", "tj", "pt")

    def __init__(self, si, segi, ti, sj, segj, tj, pt):
        self.si, self.segi, self.ti = si, segi, ti
        self.sj, self.segj, self.tj = sj, segj, tj
        self.pt = pt

    def involves(self, si: int) -> bool:
        return self.si == si or self.sj == si

    def pos_on(self, si: int) -> Tuple[int, Rat]:
        if si == self.si:
            return (self.segi, self.ti)
        if si == self.sj:
            return (self.segj, self.tj)
        raise ValueError("strand not in crossing")


def _find_crossings(pd: PathDiagram) -> List[Crossing]:
    out: List[Crossing] = []
    ns = len(pd.strands)
    for i in range(ns):
        S = pd.strands[i]
        for j in range(i, ns):
            T = pd.strands[j]
            for a in range(S.nsegs()):
                brange = range(a + 1, T.nsegs()) if i == j else range(T.nsegs())
                for b in brange:
                    if i == j:
                        if b == a + 1:
                            continue
                        if S.closed and a == 0 and b == S.nsegs() - 1:
                            continue
                    hit = _seg_intersect(S.pts[a], S.pts[a + 1], T.pts[b], T.pts[b + 1])
                    if hit is not None:
                        t, u = hit
                        pt = _lerp(S.pts[a], S.pts[a + 1], t)
                        out.append(Crossing(i, a, t, j, b, u, pt))
    return out


def _flow_vec(S: Strand, seg: int) -> Pt:
    return _sub(S.pts[seg + 1], S.pts[seg])


def _is_slash(S: Strand, segS: int, T: Strand, segT: int) -> bool:
    """Whether S is the '/' strand relative to T at their crossing.

    Both vectors are normalized to point upward before comparing; every
    crossing in this engine is locally upward so flow and shape agree.
    """
    u = _flow_vec(S, segS)
    v = _flow_vec(T, segT)
    if u[1] < 0:
        u = (-u[0], -u[1])
    if v[1] < 0:
        v = (-v[0], -v[1])
    if u[1] == 0 or v[1] == 0:
        raise EngineError("horizontal segment at a crossing")
    c = _cross(u, v)
    if c == 0:
        raise EngineError("parallel segments at a crossing")
    return c > 0


# -- positions along a strand ------------------------------------------------


def _pos_lt(p1: Tuple[int, Rat], p2: Tuple[int, Rat]) -> bool:
    return p1 < p2


def _events_on_segment(pd: PathDiagram, crossings: List[Crossing], si: int, seg: int) -> List[Rat]:
    ts = []
    for c in crossings:
        if c.si == si and c.segi == seg:
            ts.append(c.ti)
        if c.sj == si and c.segj == seg:
            ts.append(c.tj)
    for m in pd.strands[si].markers:
        if m.seg == seg:
            ts.append(m.t)
    return sorted(ts)


def _cut_params(pd, crossings, si, seg, t, frac: int = 4) -> Tuple[Rat, Rat]:
    """Parameters slightly before/after t on the segment, clear of events."""
    events = _events_on_segment(pd, crossings, si, seg)
    before = [e for e in events if e < t]
    after = [e for e in events if e > t]
    lo = before[-1] if before else Fraction(0)
    hi = after[0] if after else Fraction(1)
    return t - (t - lo) / frac, t + (hi - t) / frac


def _head_piece(S: Strand, seg: int, t_pre: Rat) -> Tuple[List[Pt], List[Marker]]:
    """Path and markers from the start of S up to (seg, t_pre) inclusive."""
    pts = list(S.pts[: seg + 1]) + [S.point(seg, t_pre)]
    marks = []
    for m in S.markers:
        if (m.seg, m.t) < (seg, t_pre):
            marks.append(m.copy())
    return pts, marks

def _tail_piece(S: Strand, seg: int, t_post: Rat) -> Tuple[List[Pt], List[Marker]]:
    """Path and markers from (seg, t_post) to the end of S."""
    pts = [S.point(seg, t_post)] + list(S.pts[seg + 1 :])
    marks = []
    for m in S.markers:
        if (m.seg, m.t) > (seg, t_post):
            mm = m.copy()
            if mm.seg == seg:
                # re-parameterize onto the new first segment
                mm.t = (mm.t - t_post) / (1 - t_post)
                mm.seg = 0
            else:
                mm.seg = mm.seg - seg
            marks.append(mm)
    return pts, marks

def _mid_piece(S: Strand, sega: int, ta: Rat, segb: int, tb: Rat) -> Tuple[List[Pt], List[Marker]]:
    """Path and markers strictly between (sega, ta) and (segb, tb), flow order."""
    if (sega, ta) >= (segb, tb):
        raise EngineError("mid piece order violated")
    pts = [S.point(sega, ta)] + list(S.pts[sega + 1 : segb + 1]) + [S.point(segb, tb)]
    marks = []
    for m in S.markers:
        if (sega, ta) < (m.seg, m.t) < (segb, tb):
            mm = m.copy()
            if mm.seg == sega:
                mm.t = (mm.t - ta) / (1 - ta)
                mm.seg = 0
            else:
                mm.seg = mm.seg - sega
            marks.append(mm)
    return pts, marks

def _join(*pieces: Tuple[List[Pt], List[Marker]]) -> Strand:
    """Concatenate path pieces in flow order into a single open strand."""
    pts: List[Pt] = []
    marks: List[Marker] = []
    for ppts, pmarks in pieces:
        off = len(pts) - 1 if pts else 0
        if pts and pts[-1] == ppts[0]:
            add = ppts[1:]
            seg_off = off
        else:
            add = ppts
            seg_off = off + 1 if pts else 0
        for m in pmarks:
            mm = m.copy()
            mm.seg += seg_off
            marks.append(mm)
        pts.extend(add)
    return Strand(pts, marks)


# ---------------------------------------------------------------------------
# builder: appending generator layers to a diagram under construction
# ---------------------------------------------------------------------------

BAND = Fraction(1, 4)  # vertical share claimed by a freshly appended layer


def _scale_heights(pd: PathDiagram, factor: Rat):
    factor = Fraction(factor)
    for s in pd.strands:
        s.pts = [(x, y * factor) for (x, y) in s.pts]
    for v in pd.vloops:
        v.y *= factor
    pd.pending = [(c, h * factor, p) for (c, h, p) in pd.pending]

def _top_slots(pd: PathDiagram) -> List[Tuple[int, str]]:
    """Current top boundary as [(strand index, 'in'|'out')] sorted by x."""
    slots = []
    for si, s in enumerate(pd.strands):
        if s.closed:
            continue
        if s.pts[-1][1] == 1:
            slots.append((s.pts[-1][0], si, "out"))
        if s.pts[0][1] == 1:
            slots.append((s.pts[0][0], si, "in"))
    slots.sort(key=lambda z: z[0])
    return [(si, role) for (_, si, role) in slots]

def _compress_and_extend(pd: PathDiagram):
    """Shrink existing content into [0, 1-BAND] and regrow vertical top stubs."""
    _scale_heights(pd, 1 - BAND)
    for s in pd.strands:
        if s.closed:
            continue
        if s.pts[-1][1] == 1 - BAND:
            s.pts.append((s.pts[-1][0], Fraction(1)))
        if s.pts[0][1] == 1 - BAND:
            s.pts.insert(0, (s.pts[0][0], Fraction(1)))
            for m in s.markers:
                m.seg += 1

def _shift_top_endpoint(pd: PathDiagram, si: int, role: str, dx: int):
    """Move a top stub sideways by dx, routing under (dx>0) or over (dx<0)."""
    s = pd.strands[si]
    if role == "out":
        x0, _ = s.pts[-1]
        if dx > 0:
            s.pts[-1] = (x0 + dx, 1 - BAND * Fraction(7, 8))
            s.pts.append((x0 + dx, Fraction(1)))
        else:
            s.pts[-1] = (x0, 1 - BAND / 4)
            s.pts.append((x0 + dx, Fraction(1)))
    else:
        x0, _ = s.pts[0]
        if dx > 0:
            s.pts[0] = (x0 + dx, 1 - BAND * Fraction(7, 8))
            s.pts.insert(0, (x0 + dx, Fraction(1)))
        else:
            s.pts[0] = (x0, 1 - BAND / 4)
            s.pts.insert(0, (x0 + dx, Fraction(1)))
        for m in s.markers:
            m.seg += 1

def _append_letter(pd: PathDiagram, slots, p: int, want: int):
    si, role = slots[p]
    have = UP if role == "out" else DOWN
    if have != want:
        raise EngineError("letter mismatch at slot %d" % p)

def _append_marker_atom(pd: PathDiagram, slots, p: int, kind: str, payload=None):
    """dot/tok on the strand at slot p, placed inside the fresh top band."""
    si, role = slots[p]
    s = pd.strands[si]
    h = pd.fresh_height(1 - BAND * Fraction(7, 8), 1 - BAND / 8)
    if role == "out":
        seg = s.nsegs() - 1
        y0, y1 = s.pts[seg][1], s.pts[seg + 1][1]
    else:
        seg = 0
        y0, y1 = s.pts[0][1], s.pts[1][1]
    t = (h - y0) / (y1 - y0)
    if not (0 < t < 1):
        raise EngineError("marker height escapes the stub")
    if kind == "dot":
        s.add_marker("dot", seg, t, count=1)
    else:
        if payload.parity() is None:
            raise EngineError("token payload must be parity homogeneous")
        s.add_marker("tok", seg, t, payload=payload)

def _append_xuu(pd: PathDiagram, slots, p: int):
    _append_letter(pd, slots, p, UP)
    _append_letter(pd, slots, p + 1, UP)
    si, _ = slots[p]
    sj, _ = slots[p + 1]
    a, b = pd.strands[si], pd.strands[sj]
    xa, xb = a.pts[-1][0], b.pts[-1][0]
    a.pts[-1] = (xb, Fraction(1))
    b.pts[-1] = (xa, Fraction(1))

def _append_cup(pd: PathDiagram, slots, p: int, kind: str):
    # shift existing slots at positions >= p two to the right
    for q in range(len(slots) - 1, p - 1, -1):
        _shift_top_endpoint(pd, slots[q][0], slots[q][1], +2)
    xl, xr = Fraction(p + 1), Fraction(p + 2)
    apex = (xl + Fraction(1, 2), 1 - BAND / 2)
    if kind == "cupr":
        pts = [(xl, Fraction(1)), apex, (xr, Fraction(1))]
    else:
        pts = [(xr, Fraction(1)), apex, (xl, Fraction(1))]
    pd.strands.append(Strand(pts))

def _append_cap(pd: PathDiagram, slots, p: int, kind: str):
    if kind == "capr":
        _append_letter(pd, slots, p, UP)
        _append_letter(pd, slots, p + 1, DOWN)
        out_i = slots[p][0]
        in_i = slots[p + 1][0]
    else:
        _append_letter(pd, slots, p, DOWN)
        _append_letter(pd, slots, p + 1, UP)
        out_i = slots[p + 1][0]
        in_i = slots[p][0]
    apex = (Fraction(p + 1) + Fraction(1, 2), 1 - BAND / 2)
    S = pd.strands[out_i]
    T = pd.strands[in_i]
    if S.markers and S.markers[-1].seg == S.nsegs() - 1:
        raise EngineError("marker stranded on a cap stub")
    if T.markers and T.markers[0].seg == 0:
        raise EngineError("marker stranded on a cap stub")
    if out_i == in_i:
        # the cap closes the strand into a loop through the apex
        inner = S.pts[1:-1]
        marks = [Marker(m.kind, m.seg, m.t, m.count, m.payload) for m in S.markers]
        loop = Strand([apex] + inner + [apex], marks, closed=True)
        pd.strands[out_i] = loop
        removed = {out_i}
    else:
        merged = _join(
            (S.pts[:-1], S.markers),
            ([apex], []),
            (T.pts[1:], [Marker(m.kind, m.seg - 1, m.t, m.count, m.payload) for m in T.markers]),
        )
        pd.strands[out_i] = merged
        pd.strands[in_i] = None  # type: ignore
        removed = {in_i}
    pd.strands = [s for s in pd.strands if s is not None]
    # shift remaining slots right of the cap two to the left
    new_slots = _top_slots(pd)
    for q, (si, role) in enumerate(new_slots):
        s = pd.strands[si]
        x = s.pts[-1][0] if role == "out" else s.pts[0][0]
        if x >= p + 3:
            _shift_top_endpoint(pd, si, role, -2)

def _append_vloop(pd: PathDiagram, p: int, label: str, dots: int, orientation: str):
    x = Fraction(p) + Fraction(1, 2)
    y = pd.fresh_height(1 - BAND * Fraction(7, 8), 1 - BAND / 8)
    pd.vloops.append(VLoop(orientation, pd.A.basis_element(label), dots, x, y))


# atom table: name -> (consumed letters, produced letters)
_ATOM_SHAPES = {
    "u": ((UP,), (UP,)),
    "d": ((DOWN,), (DOWN,)),
    "dot": ((UP,), (UP,)),
    "dotd": ((DOWN,), (DOWN,)),
    "tok": ((UP,), (UP,)),
    "tokd": ((DOWN,), (DOWN,)),
    "xuu": ((UP, UP), (UP, UP)),
    "xdd": ((DOWN, DOWN), (DOWN, DOWN)),
    "xud": ((UP, DOWN), (DOWN, UP)),
    "xdu": ((DOWN, UP), (UP, DOWN)),
    "cupr": ((), (DOWN, UP)),
    "cupl": ((), (UP, DOWN)),
    "capr": ((UP, DOWN), ()),
    "capl": ((DOWN, UP), ()),
    "cbub": ((), ()),
    "ccbub": ((), ()),
}

# rewrites of the composite atoms into primitive append steps
def _expand_atom(name: str, p: int, arg) -> List[Tuple[str, int, object]]:
    if name == "xud":
        return [("cupr", p, None), ("xuu", p + 1, None), ("capr", p + 2, None)]
    if name == "xdu":
        return [("cupl", p + 2, None), ("xuu", p + 1, None), ("capl", p, None)]
    if name == "xdd":
        return [
            ("cupr", p, None),
            ("cupr", p + 1, None),
            ("xuu", p + 2, None),
            ("capr", p + 3, None),
            ("capr", p + 2, None),
        ]
    if name == "dotd":
        return [("cupr", p, None), ("dot", p + 1, None), ("capr", p + 1, None)]
    if name == "tokd":
        return [("cupr", p, None), ("tok", p + 1, arg), ("capr", p + 1, None)]
    return [(name, p, arg)]

def _apply_primitive(pd: PathDiagram, name: str, p: int, arg):
    _compress_and_extend(pd)
    slots = _top_slots(pd)
    if name in ("u", "d"):
        _append_letter(pd, slots, p, UP if name == "u" else DOWN)
    elif name == "dot":
        _append_letter(pd, slots, p, UP)
        _append_marker_atom(pd, slots, p, "dot")
    elif name == "tok":
        _append_letter(pd, slots, p, UP)
        _append_marker_atom(pd, slots, p, "tok", payload=pd.A.basis_element(arg))
    elif name == "xuu":
        _append_xuu(pd, slots, p)
    elif name in ("cupr", "cupl"):
        _append_cup(pd, slots, p, name)
    elif name in ("capr", "capl"):
        _append_cap(pd, slots, p, name)
    elif name == "cbub":
        label, dots = arg
        _append_vloop(pd, p, label, dots, "cw")
    elif name == "ccbub":
        label, dots = arg
        _append_vloop(pd, p, label, dots, "ccw")
    else:
        raise EngineError("unknown primitive %r" % name)

def _apply_layer(pd: PathDiagram, word: Tuple[int, ...], atoms: List[Tuple[str, object]]) -> Tuple[int, ...]:
    """Apply one horizontal layer; atoms are (name, arg) left to right.

    Positions are assigned against the incoming word left to right and the
    atoms are then applied rightmost first, so the right tensor factor sits
    lower in the diagram.
    """
    placed = []
    pos = 0
    for name, arg in atoms:
        consumed, produced = _ATOM_SHAPES[name]
        for off, want in enumerate(consumed):
            if pos + off >= len(word) or word[pos + off] != want:
                raise InterfaceMismatch(
                    "atom %s does not fit the word at position %d" % (name, pos)
                )
        placed.append((name, pos, arg, len(produced) - len(consumed)))
        pos += len(consumed)
    if pos != len(word):
        raise InterfaceMismatch(
            "layer covers %d strands but the word has %d" % (pos, len(word))
        )
    out_word: List[int] = []
    for name, p, arg, delta in placed:
        out_word.extend(_ATOM_SHAPES[name][1])
    # apply right to left; earlier positions are unaffected by later edits
    for name, p, arg, delta in reversed(placed):
        for pname, pp, parg in _expand_atom(name, p, arg):
            _apply_primitive(pd, pname, pp, parg)
    return tuple(out_word)

def _identity_pathdiagram(A: FrobeniusAlgebra, k: int, word: Sequence[int]) -> PathDiagram:
    pd = PathDiagram(A, k)
    for i, letter in enumerate(word):
        x = Fraction(i + 1)
        if letter == UP:
            pd.strands.append(Strand([(x, Fraction(0)), (x, Fraction(1))]))
        else:
            pd.strands.append(Strand([(x, Fraction(1)), (x, Fraction(0))]))
    return pd


# ---------------------------------------------------------------------------
# DSL parsing
# ---------------------------------------------------------------------------


class DiagramTerm:
    """Parsed expression: a stack of layers with consistent interfaces."""

    def __init__(self, A: FrobeniusAlgebra, k: int, layers, domain, codomain):
        self.A = A
        self.k = k
        self.layers = layers  # list of list of (atom, arg)
        self.domain = tuple(domain)
        self.codomain = tuple(codomain)

    def __repr__(self):
        return "DiagramTerm(%s -> %s, %d layers)" % (
            word_str(self.domain),
            word_str(self.codomain),
            len(self.layers),
        )


def word_str(word: Sequence[int]) -> str:
    return "".join("u" if w == UP else "d" for w in word) or "1"


_TOKEN_RE_ATOMS = (
    "cbub", "ccbub", "cupr", "cupl", "capr", "capl",
    "xuu", "xdd", "xud", "xdu", "dotd", "tokd", "dot", "tok", "u", "d",
)


def _lex_layer(text: str, base: int) -> List[Tuple[str, object, int]]:
    out = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        for name in _TOKEN_RE_ATOMS:
            if text.startswith(name, i):
                after = i + len(name)
                # longest-match table order guards prefixes; also require a
                # clean boundary so "dd" does not lex as "d"+"d" by accident
                if after < n and (text[after].isalnum() or text[after] == "_"):
                    if name not in ("tok", "tokd", "cbub", "ccbub") or text[after] != "(":
                        continue
                if name in ("tok", "tokd", "cbub", "ccbub"):
                    if after >= n or text[after] != "(":
                        raise DiagramSyntaxError(
                            "%s needs parenthesized arguments" % name, base + i
                        )
                    close = text.find(")", after)
                    if close < 0:
                        raise DiagramSyntaxError("unclosed parenthesis", base + after)
                    inner = text[after + 1 : close]
                    if name in ("tok", "tokd"):
                        arg = inner.strip()
                        if not arg:
                            raise DiagramSyntaxError("empty token label", base + after)
                    else:
                        parts = [p.strip() for p in inner.split(",")]
                        if len(parts) != 2:
                            raise DiagramSyntaxError(
                                "%s needs (label, dots)" % name, base + after
                            )
                        try:
                            arg = (parts[0], int(parts[1]))
                        except ValueError:
                            raise DiagramSyntaxError(
                                "dot count must be an integer", base + after
                            )
                    out.append((name, arg, base + i))
                    i = close + 1
                else:
                    out.append((name, None, base + i))
                    i = after
                break
        else:
            raise DiagramSyntaxError("unrecognized atom", base + i)
    return out


def parse_diagram(text: str, k: int, A: FrobeniusAlgebra) -> DiagramTerm:
    """Parse the layered expression language; layers compose bottom to top."""
    chunks = text.split(";")
    layers: List[List[Tuple[str, object]]] = []
    lexed: List[List[Tuple[str, object, int]]] = []
    base = 0
    for chunk in chunks:
        atoms = _lex_layer(chunk, base)
        if not atoms:
            raise DiagramSyntaxError("empty layer", base)
        lexed.append(atoms)
        base += len(chunk) + 1
    # interface check, bottom to top
    word: Optional[Tuple[int, ...]] = None
    domain: Optional[Tuple[int, ...]] = None
    for li, atoms in enumerate(lexed):
        consumed: List[int] = []
        produced: List[int] = []
        for name, arg, pos in atoms:
            if name in ("tok", "tokd"):
                if arg not in A.labels:
                    raise DiagramSyntaxError("unknown basis label %r" % arg, pos)
            if name in ("cbub", "ccbub"):
                if arg[0] not in A.labels:
                    raise DiagramSyntaxError("unknown basis label %r" % arg[0], pos)
            cons, prod = _ATOM_SHAPES[name]
            consumed.extend(cons)
            produced.extend(prod)
        if word is None:
            word = tuple(consumed)
            domain = word
        elif tuple(consumed) != word:
            raise InterfaceMismatch(
                "layer %d expects %s but receives %s"
                % (li + 1, word_str(tuple(consumed)), word_str(word))
            )
        word = tuple(produced)
        layers.append([(name, arg) for (name, arg, _) in atoms])
    assert domain is not None and word is not None
    return DiagramTerm(A, k, layers, domain, word)


def _term_to_pathdiagram(term: DiagramTerm) -> PathDiagram:
    pd = _identity_pathdiagram(term.A, term.k, term.domain)
    word = term.domain
    for atoms in term.layers:
        word = _apply_layer(pd, word, atoms)
    return pd


# ---------------------------------------------------------------------------
# generic cut-and-resew surgery
# ---------------------------------------------------------------------------


class _Piece:
    __slots__ = ("pts", "markers", "open_start", "open_end")

    def __init__(self, pts, markers, open_start, open_end):
        self.pts = pts
        self.markers = markers
        self.open_start = open_start  # True if this piece begins at a strand start
        self.open_end = open_end


def _cut_open_path(S: Strand, cutpos) -> List[Tuple[List[Pt], List[Marker]]]:
    """Sever an open path at every (seg, t, t_pre, t_post), flow sorted."""
    cutpos = sorted(cutpos, key=lambda c: (c[0], c[1]))
    parts: List[Tuple[List[Pt], List[Marker]]] = []
    seg0, t0, pre0, _ = cutpos[0]
    parts.append(_head_piece(S, seg0, pre0))
    for idx in range(len(cutpos) - 1):
        sa, ta, _, posta = cutpos[idx]
        sb, tb, preb, _ = cutpos[idx + 1]
        pts, marks = _tail_piece(S, sa, posta)
        tmp = Strand(pts, marks)
        if sb == sa:
            nseg = 0
            npre = (preb - posta) / (1 - posta)
        else:
            nseg = sb - sa
            npre = preb
        parts.append(_head_piece(tmp, nseg, npre))
    segl, tl, _, postl = cutpos[-1]
    parts.append(_tail_piece(S, segl, postl))
    return parts


def _pieces_of(S: Strand, cutpos: List[Tuple[int, Rat, Rat, Rat]]) -> List[_Piece]:
    """Split a strand at cut positions [(seg, t, t_pre, t_post)], flow sorted."""
    cutpos = sorted(cutpos, key=lambda c: (c[0], c[1]))
    if not S.closed:
        if not cutpos:
            return [_Piece(list(S.pts), [m.copy() for m in S.markers], True, True)]
        parts = _cut_open_path(S, cutpos)
        out = [
            _Piece(pts, marks, i == 0, i == len(parts) - 1)
            for i, (pts, marks) in enumerate(parts)
        ]
        return out
    if not cutpos:
        return [_Piece(list(S.pts), [m.copy() for m in S.markers], False, False)]
    # unroll the cycle so it starts just after the last cut and ends just
    # before it; the remaining cuts are then interior cuts of an open path
    segl, tl, prel, postl = cutpos[-1]
    tail_pts, tail_marks = _tail_piece(S, segl, postl)
    head_pts, head_marks = _head_piece(S, segl, prel)
    wrap = _join((tail_pts, tail_marks), (head_pts, head_marks))
    unrolled = Strand(wrap.pts, wrap.markers)
    n_tail_segs = len(tail_pts) - 1
    inner: List[Tuple[int, Rat, Rat, Rat]] = []
    for (seg, t, pre, post) in cutpos[:-1]:
        if seg > segl:
            inner.append((seg - segl, t, pre, post))
        elif seg < segl:
            inner.append((n_tail_segs + seg, t, pre, post))
        elif t > tl:
            scale = 1 - postl
            inner.append((0, (t - postl) / scale, (pre - postl) / scale, (post - postl) / scale))
        else:
            inner.append((n_tail_segs + segl, t / prel, pre / prel, post / prel))
    if not inner:
        return [_Piece(unrolled.pts, unrolled.markers, False, False)]
    parts = _cut_open_path(unrolled, inner)
    return [_Piece(pts, marks, False, False) for (pts, marks) in parts]


def _resew(
    pd: PathDiagram,
    cuts: Dict[int, List[Tuple[int, Rat, Rat, Rat]]],
    jumps: Dict[Tuple[int, int], Tuple[int, int]],
    discard: Sequence[Tuple[int, int]] = (),
) -> List[Strand]:
    """Rebuild the strand list after severing and rejoining.

    cuts maps strand index to cut positions; pieces are numbered in flow
    order per strand; jumps send a piece (its cut end) to the piece whose
    cut start continues the flow. Dropped pieces must carry no markers.
    """
    discard_set = set(discard)
    pieces: Dict[Tuple[int, int], _Piece] = {}
    for si, S in enumerate(pd.strands):
        plist = _pieces_of(S, cuts.get(si, []))
        for pi, piece in enumerate(plist):
            pieces[(si, pi)] = piece
    for key in discard_set:
        if pieces[key].markers:
            raise EngineError("discarded piece still carries markers")
    out: List[Strand] = []
    used = set(discard_set)

    def follow(start_key):
        chain = [start_key]
        used.add(start_key)
        key = start_key
        while True:
            piece = pieces[key]
            if piece.open_end:
                return chain, False
            if key not in jumps:
                if cuts.get(key[0]):
                    raise EngineError("cut piece has no continuation")
                # unsevered closed loop
                return chain, True
            nxt = jumps[key]
            if nxt == start_key:
                return chain, True
            if nxt in used:
                raise EngineError("resew produced an inconsistent walk")
            used.add(nxt)
            chain.append(nxt)
            key = nxt

    # open walks first
    for key, piece in pieces.items():
        if piece.open_start and key not in used:
            chain, closed = follow(key)
            if closed:
                raise EngineError("open walk closed on itself")
            joined = _join(*[(pieces[k].pts, pieces[k].markers) for k in chain])
            out.append(joined)
    # remaining pieces form cycles
    for key in list(pieces.keys()):
        if key in used:
            continue
        piece = pieces[key]
        if not cuts.get(key[0]):
            used.add(key)
            out.append(Strand(piece.pts, piece.markers, closed=True))
            continue
        chain, closed = follow(key)
        if not closed:
            raise EngineError("cycle walk escaped")
        joined = _join(*[(pieces[k].pts, pieces[k].markers) for k in chain])
        pts = joined.pts + [joined.pts[0]]
        out.append(Strand(pts, joined.markers, closed=True))
    if sum(len(s.markers) for s in out) != sum(len(s.markers) for s in pd.strands):
        # a marker sat inside a cut window; caller retries with smaller frac
        raise EngineError("marker lost in a cut window")
    return out


def _piece_after(is_closed: bool, ncuts: int, j: int) -> int:
    return (j + 1) % ncuts if is_closed else j + 1


def _piece_before(j: int) -> int:
    return j


# ---------------------------------------------------------------------------
# normalization engine
# ---------------------------------------------------------------------------

_MOVE_BUDGET = 600


def _cross_pos(c: Crossing, role: int) -> Tuple[int, Rat]:
    return (c.segi, c.ti) if role == 0 else (c.segj, c.tj)


class _Bigon:
    """Two crossings of a strand pair bounding a candidate disc."""

    __slots__ = ("cA", "cB", "si", "sj", "arc_i", "arc_j", "parallel", "poly")

    def __init__(self, cA, cB, si, sj, arc_i, arc_j, parallel, poly):
        self.cA = cA
        self.cB = cB
        self.si = si  # strand of the first arc
        self.sj = sj
        self.arc_i = arc_i  # (pos_from, pos_to) flow order on si
        self.arc_j = arc_j
        self.parallel = parallel
        self.poly = poly


def _arc_points(S: Strand, p1: Tuple[int, Rat], p2: Tuple[int, Rat]) -> List[Pt]:
    (s1, t1), (s2, t2) = p1, p2
    return [S.point(s1, t1)] + list(S.pts[s1 + 1 : s2 + 1]) + [S.point(s2, t2)]


def _positions_inside(plist, lo, hi) -> bool:
    return any(lo < p < hi for p in plist)


def _bigon_candidates(pd: PathDiagram, crossings: List[Crossing]) -> List[_Bigon]:
    bypair: Dict[Tuple[int, int], List[Crossing]] = {}
    for c in crossings:
        bypair.setdefault((c.si, c.sj), []).append(c)
    out: List[_Bigon] = []
    for (i, j), cl in bypair.items():
        if len(cl) < 2:
            continue
        # all parameter positions of this pair's crossings on each strand
        for a in range(len(cl)):
            for b in range(a + 1, len(cl)):
                cA, cB = cl[a], cl[b]
                if i != j:
                    pAi, pBi = _cross_pos(cA, 0), _cross_pos(cB, 0)
                    pAj, pBj = _cross_pos(cA, 1), _cross_pos(cB, 1)
                    if pAi > pBi:
                        cA, cB = cB, cA
                        pAi, pBi = pBi, pAi
                        pAj, pBj = pBj, pAj
                    arc_i = (pAi, pBi)
                    parallel = pAj < pBj
                    arc_j = (pAj, pBj) if parallel else (pBj, pAj)
                    mutual_i = [_cross_pos(c, 0) for c in cl if c not in (cA, cB)]
                    mutual_j = [_cross_pos(c, 1) for c in cl if c not in (cA, cB)]
                    if _positions_inside(mutual_i, *arc_i) or _positions_inside(mutual_j, *arc_j):
                        continue
                    S, T = pd.strands[i], pd.strands[j]
                    arc1 = _arc_points(S, *arc_i)
                    arc2 = _arc_points(T, *arc_j)
                    poly = arc1 + (list(reversed(arc2)) if parallel else arc2)
                    out.append(_Bigon(cA, cB, i, j, arc_i, arc_j, parallel, poly))
                else:
                    a1, a2 = sorted([_cross_pos(cA, 0), _cross_pos(cA, 1)])
                    b1, b2 = sorted([_cross_pos(cB, 0), _cross_pos(cB, 1)])
                    if a1 > b1:
                        cA, cB = cB, cA
                        (a1, a2), (b1, b2) = (b1, b2), (a1, a2)
                    S = pd.strands[i]
                    others = []
                    for c in cl:
                        if c not in (cA, cB):
                            others.extend([_cross_pos(c, 0), _cross_pos(c, 1)])
                    if a1 < b1 < a2 < b2:
                        # interleaved passes: arcs a1..b1 and a2..b2, parallel
                        arc_i, arc_j = (a1, b1), (a2, b2)
                        parallel = True
                    elif a1 < b1 < b2 < a2:
                        # nested passes: arcs a1..b1 and b2..a2, antiparallel
                        arc_i, arc_j = (a1, b1), (b2, a2)
                        parallel = False
                    else:
                        continue
                    if _positions_inside(others, *arc_i) or _positions_inside(others, *arc_j):
                        continue
                    arc1 = _arc_points(S, *arc_i)
                    arc2 = _arc_points(S, *arc_j)
                    poly = arc1 + (list(reversed(arc2)) if parallel else arc2)
                    out.append(_Bigon(cA, cB, i, i, arc_i, arc_j, parallel, poly))
    return out


def _bigon_blockers(pd, crossings, bg: _Bigon):
    """Crossings sitting on the bigon's arcs or strictly inside its disc."""
    on_arcs = []
    inside = []
    corner_pts = (bg.cA.pt, bg.cB.pt)
    for c in crossings:
        if c is bg.cA or c is bg.cB:
            continue
        hit = False
        for (si, arc) in ((bg.si, bg.arc_i), (bg.sj, bg.arc_j)):
            for role, s_idx in ((0, c.si), (1, c.sj)):
                if s_idx == si and arc[0] < _cross_pos(c, role) < arc[1]:
                    hit = True
        if hit:
            on_arcs.append(c)
        elif _point_in_polygon(c.pt, bg.poly):
            inside.append(c)
    return on_arcs, inside


def _blocker_count(pd, crossings, bg: _Bigon) -> int:
    on_arcs, inside = _bigon_blockers(pd, crossings, bg)
    return len(on_arcs) + len(inside)


def _markers_on_arc(pd, si, arc) -> List[Marker]:
    return [m for m in pd.strands[si].markers if arc[0] < (m.seg, m.t) < arc[1]]


def _crossing_count(pd: PathDiagram) -> int:
    return len(_find_crossings(pd))


def _find_segment(strands: Sequence[Strand], p_from: Pt, p_to: Pt) -> Tuple[int, int]:
    for si, s in enumerate(strands):
        for seg in range(s.nsegs()):
            if s.pts[seg] == p_from and s.pts[seg + 1] == p_to:
                return si, seg
    raise EngineError("expected segment missing after surgery")


def _next_item_height(pd: PathDiagram, h: Rat, above: bool) -> Optional[Rat]:
    cands = [x for x in pd.all_item_heights() if (x > h if above else x < h)]
    if not cands:
        return None
    return min(cands) if above else max(cands)


def _fresh_adjacent(pd: PathDiagram, h: Rat, above: bool) -> Rat:
    """Fresh height next to h with no item strictly between the two."""
    nxt = _next_item_height(pd, h, above)
    if above:
        return pd.fresh_height(h, nxt if nxt is not None else h + 1)
    return pd.fresh_height(nxt if nxt is not None else h - 1, h)


def _slot_in_window(pd: PathDiagram, si: int, seg: int, t_lo: Rat, t_hi: Rat):
    """A (t, height) strictly inside the window, at a fresh height."""
    S = pd.strands[si]
    y_a = S.point(seg, t_lo)[1]
    y_b = S.point(seg, t_hi)[1]
    if y_a == y_b:
        return None
    lo, hi = (y_a, y_b) if y_a < y_b else (y_b, y_a)
    h = pd.fresh_height(lo, hi)
    y0, y1 = S.pts[seg][1], S.pts[seg + 1][1]
    t = (h - y0) / (y1 - y0)
    return t, h


def _slot_after(pd, crossings, si, pos) -> Tuple[int, Rat, Rat]:
    """Marker slot (seg, t, height) just past pos, clear of events."""
    seg, t = pos
    S = pd.strands[si]
    events = _events_on_segment(pd, crossings, si, seg)
    hi = min([e for e in events if e > t], default=Fraction(1))
    got = _slot_in_window(pd, si, seg, t, hi)
    if got is not None:
        return seg, got[0], got[1]
    # level stretch; try the next segment up to its first event
    if seg + 1 >= S.nsegs():
        raise EngineError("no marker room past position")
    events = _events_on_segment(pd, crossings, si, seg + 1)
    hi = events[0] if events else Fraction(1)
    got = _slot_in_window(pd, si, seg + 1, Fraction(0), hi)
    if got is None:
        raise EngineError("no marker room past position")
    return seg + 1, got[0], got[1]


def _slot_before(pd, crossings, si, pos) -> Tuple[int, Rat, Rat]:
    seg, t = pos
    events = _events_on_segment(pd, crossings, si, seg)
    lo = max([e for e in events if e < t], default=Fraction(0))
    got = _slot_in_window(pd, si, seg, lo, t)
    if got is not None:
        return seg, got[0], got[1]
    if seg == 0:
        raise EngineError("no marker room before position")
    events = _events_on_segment(pd, crossings, si, seg - 1)
    lo = events[-1] if events else Fraction(0)
    got = _slot_in_window(pd, si, seg - 1, lo, Fraction(1))
    if got is None:
        raise EngineError("no marker room before position")
    return seg - 1, got[0], got[1]


def _teleporter_sign(pd: PathDiagram, par_b: int, h1: Rat, h2: Rat) -> int:
    """Height covariance factor for a basis/dual token pair."""
    if par_b == 0:
        return 1
    return -1 if pd.odd_parity_between(h1, h2) else 1


def _merge_tokens(pd: PathDiagram, si: int, m_early: Marker, m_late: Marker) -> None:
    """Fuse two tokens of one strand into the later along flow, in place.

    Carrying the earlier token into place costs the usual height-crossing
    signs; on a downward piece composing tokens twists by the parity
    product on top of that.
    """
    S = pd.strands[si]
    h_from = S.marker_height(m_early)
    h_late = S.marker_height(m_late)
    down = S.seg_dir(m_late.seg) < 0
    if S.seg_dir(m_late.seg) == 0:
        raise EngineError("token merge on a level segment")
    target = _fresh_adjacent(pd, h_late, above=down)
    par_e = _token_parity(m_early.payload)
    sign = _koszul_move_sign(pd, par_e, h_from, target)
    if down and par_e and _token_parity(m_late.payload):
        sign = -sign
    S.markers.remove(m_early)
    m_late.payload = m_late.payload * m_early.payload
    pd.coeff *= sign


def _merge_strand_markers(pd: PathDiagram, si: int) -> None:
    """Collapse all markers of a strand to one dot group and one token."""
    S = pd.strands[si]
    while True:
        toks = [m for m in S.markers if m.kind == "tok"]
        if len(toks) > 1:
            _merge_tokens(pd, si, toks[-2], toks[-1])
            continue
        dots = [m for m in S.markers if m.kind == "dot"]
        if len(dots) > 1:
            dots[-1].count += dots[-2].count
            S.markers.remove(dots[-2])
            continue
        break
    for m in list(S.markers):
        if m.kind == "tok" and not m.payload.coeffs:
            pd.coeff = Fraction(0)
        if m.kind == "dot" and m.count == 0:
            S.markers.remove(m)


# ---------------------------------------------------------------------------
# crossing smoothing and the dot/token march
# ---------------------------------------------------------------------------


def _end_swap(pd: PathDiagram, c: Crossing, frac: int):
    """Smooth a crossing by swapping its outgoing ends.

    Returns (new diagram, [(si, seg), (si, seg)] bridge segments). The
    caller checks the crossing count and retries with a smaller frac.
    """
    crossings = _find_crossings(pd)
    preA, postA = _cut_params(pd, crossings, c.si, c.segi, c.ti, frac)
    preB, postB = _cut_params(pd, crossings, c.sj, c.segj, c.tj, frac)
    Si, Sj = pd.strands[c.si], pd.strands[c.sj]
    p_a_in = Si.point(c.segi, preA)
    p_a_out = Si.point(c.segi, postA)
    p_b_in = Sj.point(c.segj, preB)
    p_b_out = Sj.point(c.segj, postB)
    cuts: Dict[int, List[Tuple[int, Rat, Rat, Rat]]] = {}
    cuts.setdefault(c.si, []).append((c.segi, c.ti, preA, postA))
    cuts.setdefault(c.sj, []).append((c.segj, c.tj, preB, postB))

    def rank(si, seg, t):
        cl = sorted(cuts[si], key=lambda x: (x[0], x[1]))
        for r, x in enumerate(cl):
            if (x[0], x[1]) == (seg, t):
                return r
        raise EngineError("cut rank lookup failed")

    rA = rank(c.si, c.segi, c.ti)
    rB = rank(c.sj, c.segj, c.tj)
    jumps = {
        (c.si, rA): (c.sj, _piece_after(Sj.closed, len(cuts[c.sj]), rB)),
        (c.sj, rB): (c.si, _piece_after(Si.closed, len(cuts[c.si]), rA)),
    }
    out = PathDiagram(pd.A, pd.k)
    out.strands = _resew(pd, cuts, jumps)
    out.vloops = [v.copy() for v in pd.vloops]
    out.pending = list(pd.pending)
    out.coeff = pd.coeff
    bridges = [
        _find_segment(out.strands, p_a_in, p_b_out),
        _find_segment(out.strands, p_b_in, p_a_out),
    ]
    return out, bridges


def _end_swap_checked(pd: PathDiagram, c: Crossing, drop: int = 1):
    """End swap that must remove exactly `drop` crossings."""
    want = _crossing_count(pd) - drop
    last = None
    for frac in (4, 16, 64, 256, 1024):
        try:
            out, bridges = _end_swap(pd, c, frac)
            ok = _crossing_count(out) == want
        except EngineError as e:
            last = e
            continue
        if ok:
            return out, bridges
    raise EngineError(f"end swap would not settle: {last}")


def _slot_near_bridge(pd: PathDiagram, si: int, seg: int) -> Tuple[int, Rat, Rat]:
    """Marker slot on or right next to a freshly sewn bridge segment."""
    crossings = _find_crossings(pd)
    events = _events_on_segment(pd, crossings, si, seg)
    lo = Fraction(0)
    hi = events[0] if events else Fraction(1)
    got = _slot_in_window(pd, si, seg, lo, hi)
    if got is not None:
        return seg, got[0], got[1]
    # level bridge: back onto the leg entering it, which is event free
    # right up to the corner by the cut construction
    return _slot_before(pd, crossings, si, (seg, Fraction(0)))


def _tau_branches(pd: PathDiagram, c: Crossing, factor: int) -> List[PathDiagram]:
    """Basis-pair terms created when a dot hops a crossing.

    pd must already have the hopping dot removed; the crossing is smoothed
    and one basis/dual token pair lands on the two corner strings.
    """
    swapped, bridges = _end_swap_checked(pd, c)
    (siL, segL), (siR, segR) = bridges
    out = []
    A = pd.A
    for label in A.labels:
        b = A.basis_element(label)
        pdb = swapped.copy()
        s1, t1, h1 = _slot_near_bridge(pdb, siL, segL)
        pdb.strands[siL].add_marker("tok", s1, t1, payload=b)  # placeholder
        mk1 = [m for m in pdb.strands[siL].markers if (m.seg, m.t) == (s1, t1)][0]
        s2, t2, h2 = _slot_near_bridge(pdb, siR, segR)
        par = A.parity[label]
        sgn = _teleporter_sign(pdb, par, h1, h2) if h1 != h2 else None
        if sgn is None:
            raise EngineError("teleporter endpoints at one height")
        hi_first = h1 > h2
        mk1.payload = b if hi_first else A.dual_of(label)
        pdb.strands[siR].add_marker(
            "tok", s2, t2, payload=A.dual_of(label) if hi_first else b
        )
        pdb.coeff *= factor * sgn
        out.append(pdb)
    return out


def _next_crossing_ahead(crossings, si, pos):
    best = None
    best_c = None
    for c in crossings:
        for role in (0, 1):
            if (c.si, c.sj)[role] != si:
                continue
            p = _cross_pos(c, role)
            if p > pos and (best is None or p < best):
                best, best_c = p, c
    return best_c, best


def _token_hop(pd: PathDiagram, crossings, si: int, m: Marker) -> None:
    """Carry a token forward past the next crossing (tokens cross freely)."""
    S = pd.strands[si]
    c, pos = _next_crossing_ahead(crossings, si, m.pos())
    if c is None:
        raise EngineError("token hop without a crossing ahead")
    seg, t, h = _slot_after(pd, crossings, si, pos)
    sign = _koszul_move_sign(pd, _token_parity(m.payload), S.marker_height(m), h)
    payload = m.payload
    S.markers.remove(m)
    S.add_marker("tok", seg, t, payload=payload)
    pd.coeff *= sign


def _dot_step(pd: PathDiagram, crossings, si: int, mi: int) -> List[PathDiagram]:
    """Move one dot unit past the next crossing; emits the straight-through
    diagram plus one smoothed term per basis element."""
    S = pd.strands[si]
    m = S.markers[mi]
    c, pos = _next_crossing_ahead(crossings, si, m.pos())
    if c is None:
        raise EngineError("dot step without a crossing ahead")
    role = 0 if (c.si == si and _cross_pos(c, 0) == pos) else 1
    seg_here = pos[0]
    if role == 0:
        slash = _is_slash(S, c.segi, pd.strands[c.sj], c.segj)
    else:
        slash = _is_slash(S, c.segj, pd.strands[c.si], c.segi)
    eps = 1 if slash else -1
    going_up = S.seg_dir(seg_here) > 0
    if S.seg_dir(seg_here) == 0:
        raise EngineError("level segment at a crossing")
    factor = eps if going_up else -eps

    base = pd.copy()
    mb = base.strands[si].markers[mi]
    if mb.count > 1:
        mb.count -= 1
    else:
        base.strands[si].markers.remove(mb)
    branches = _tau_branches(base, c, factor)

    main = pd.copy()
    Sm = main.strands[si]
    mm = Sm.markers[mi]
    seg, t, _h = _slot_after(main, crossings, si, pos)
    if mm.count > 1:
        mm.count -= 1
    else:
        Sm.markers.remove(mm)
    hit = [x for x in Sm.markers if x.kind == "dot" and (x.seg, x.t) == (seg, t)]
    if hit:
        hit[0].count += 1
    else:
        Sm.add_marker("dot", seg, t, count=1)
    branches.append(main)
    return branches


# ---------------------------------------------------------------------------
# two-crossing discs
# ---------------------------------------------------------------------------


def _rank_of(cuts, si, pos):
    cl = sorted(cuts[si], key=lambda x: (x[0], x[1]))
    for r, x in enumerate(cl):
        if (x[0], x[1]) == pos:
            return r
    raise EngineError("cut rank lookup failed")


def _cut_entry(cuts, si, pos):
    for x in cuts[si]:
        if (x[0], x[1]) == pos:
            return x
    raise EngineError("cut entry lookup failed")


def _swap_jump_entries(pd, cuts, c):
    """Jump entries smoothing one crossing (incoming ends swap outgoing)."""
    rA = _rank_of(cuts, c.si, (c.segi, c.ti))
    rB = _rank_of(cuts, c.sj, (c.segj, c.tj))
    Si, Sj = pd.strands[c.si], pd.strands[c.sj]
    return {
        (c.si, rA): (c.sj, _piece_after(Sj.closed, len(cuts[c.sj]), rB)),
        (c.sj, rB): (c.si, _piece_after(Si.closed, len(cuts[c.si]), rA)),
    }


def _bigon_cuts(pd, crossings, bg, frac):
    cuts: Dict[int, List[Tuple[int, Rat, Rat, Rat]]] = {}
    for (s, arc) in ((bg.si, bg.arc_i), (bg.sj, bg.arc_j)):
        for (seg, t) in arc:
            pre, post = _cut_params(pd, crossings, s, seg, t, frac)
            cuts.setdefault(s, []).append((seg, t, pre, post))
    return cuts


def _with_strands(pd, strands):
    out = PathDiagram(pd.A, pd.k)
    out.strands = strands
    out.vloops = [v.copy() for v in pd.vloops]
    out.pending = list(pd.pending)
    out.coeff = pd.coeff
    return out


def _splice_parallel(pd, bg) -> List[PathDiagram]:
    old = _crossing_count(pd)
    crossings = _find_crossings(pd)
    last = None
    for frac in (4, 16, 64, 256):
        cuts = _bigon_cuts(pd, crossings, bg, frac)
        jumps = {}
        jumps.update(_swap_jump_entries(pd, cuts, bg.cA))
        jumps.update(_swap_jump_entries(pd, cuts, bg.cB))
        try:
            out = _with_strands(pd, _resew(pd, cuts, jumps))
            ok = _crossing_count(out) == old - 2
        except EngineError as e:
            last = e
            continue
        if ok:
            return [out]
    raise EngineError(f"parallel splice failed: {last}")


def _poly_centroid(poly):
    n = len(poly)
    return (
        sum((p[0] for p in poly), Fraction(0)) / n,
        sum((p[1] for p in poly), Fraction(0)) / n,
    )


def _push_away(pts, center, eps):
    out = []
    for p in pts:
        dx, dy = p[0] - center[0], p[1] - center[1]
        m = max(abs(dx), abs(dy))
        if m == 0:
            raise EngineError("offset point sits at the center")
        out.append((p[0] + eps * dx / m, p[1] + eps * dy / m))
    return out


def _seg_normal(a, b, eps):
    dx, dy = b[0] - a[0], b[1] - a[1]
    m = max(abs(dx), abs(dy))
    if m == 0:
        raise EngineError("degenerate offset segment")
    return (-dy * eps / m, dx * eps / m)


def _line_meet(p, d, q, e):
    det = d[0] * e[1] - d[1] * e[0]
    if det == 0:
        return None
    s = ((q[0] - p[0]) * e[1] - (q[1] - p[1]) * e[0]) / det
    return (p[0] + s * d[0], p[1] + s * d[1])


def _offset_path(poly, pts, eps):
    """Parallel copy of a disc boundary path, about eps outside the disc.

    Vertices get miter joins; the side is fixed per segment by probing the
    midpoint against the polygon, so jagged boundaries stay hugged.
    """
    if len(pts) < 2:
        raise EngineError("offset path too short")
    normals = []
    dirs = []
    for i in range(len(pts) - 1):
        a, b = pts[i], pts[i + 1]
        n = _seg_normal(a, b, eps)
        mid = ((a[0] + b[0]) / 2, (a[1] + b[1]) / 2)
        plus = (mid[0] + n[0] / 4, mid[1] + n[1] / 4)
        minus = (mid[0] - n[0] / 4, mid[1] - n[1] / 4)
        p_in = _point_in_polygon(plus, poly)
        m_in = _point_in_polygon(minus, poly)
        if p_in == m_in:
            raise EngineError("cannot find the outer side of the disc")
        if p_in:
            n = (-n[0], -n[1])
        normals.append(n)
        dirs.append((b[0] - a[0], b[1] - a[1]))
    out = [(pts[0][0] + normals[0][0], pts[0][1] + normals[0][1])]
    for i in range(1, len(pts) - 1):
        p1 = (pts[i - 1][0] + normals[i - 1][0], pts[i - 1][1] + normals[i - 1][1])
        p2 = (pts[i][0] + normals[i][0], pts[i][1] + normals[i][1])
        met = _line_meet(p1, dirs[i - 1], p2, dirs[i])
        out.append(met if met is not None else p2)
    out.append((pts[-1][0] + normals[-1][0], pts[-1][1] + normals[-1][1]))
    return out


def _poly_extent(poly):
    xs = [p[0] for p in poly]
    ys = [p[1] for p in poly]
    return max(max(xs) - min(xs), max(ys) - min(ys))


def _reroute_arc(pd, sR, pos_lo, pos_hi, hug_pts, frac) -> PathDiagram:
    """Replace a strand portion between two positions by the given path."""
    crossings = _find_crossings(pd)
    S = pd.strands[sR]
    pre1, post1 = _cut_params(pd, crossings, sR, pos_lo[0], pos_lo[1], frac)
    pre2, post2 = _cut_params(pd, crossings, sR, pos_hi[0], pos_hi[1], frac)
    cutpos = [
        (pos_lo[0], pos_lo[1], pre1, post1),
        (pos_hi[0], pos_hi[1], pre2, post2),
    ]
    pieces = _pieces_of(S, cutpos)
    if not S.closed:
        head, mid, tail = pieces
        if mid.markers:
            raise EngineError("rerouted portion still carries markers")
        new = _join(
            (head.pts, head.markers), (list(hug_pts), []), (tail.pts, tail.markers)
        )
    else:
        outer, mid = pieces
        if mid.markers:
            raise EngineError("rerouted portion still carries markers")
        j = _join((outer.pts, outer.markers), (list(hug_pts), []))
        new = Strand(j.pts + [j.pts[0]], j.markers, closed=True)
    if len(new.markers) != len(S.markers):
        raise EngineError("marker lost in a cut window")
    strands = [s.copy() for s in pd.strands]
    strands[sR] = new
    return _with_strands(pd, strands)


def _squish_roles(pd, bg):
    """(sP, P_arc, c1, sQ, Q_arc, c2): P's arc runs lower to upper corner."""
    keyA = (bg.cA.pt[1], bg.cA.pt[0])
    keyB = (bg.cB.pt[1], bg.cB.pt[0])
    if keyA <= keyB:
        return bg.si, bg.arc_i, bg.cA, bg.sj, bg.arc_j, bg.cB
    return bg.sj, bg.arc_j, bg.cB, bg.si, bg.arc_i, bg.cA


def _squish_chirality(pd, sP, P_arc, sQ, Q_arc) -> str:
    """Bubble orientation for the disc corrections, from the entry corner."""
    away_P = _flow_vec(pd.strands[sP], P_arc[0][0])
    vq = _flow_vec(pd.strands[sQ], Q_arc[1][0])
    away_Q = (-vq[0], -vq[1])
    chi = _cross(away_P, away_Q)
    if chi == 0:
        raise EngineError("degenerate disc corner")
    return "cw" if chi < 0 else "ccw"


def _vloop_spot(pd, poly):
    """(x, y) with y fresh inside the polygon's height range, x mid-slice."""
    ys = sorted(p[1] for p in poly)
    y = pd.fresh_height(ys[0], ys[-1])
    xs = []
    n = len(poly)
    for i in range(n):
        p, q = poly[i], poly[(i + 1) % n]
        if p[1] == q[1]:
            continue
        t = (y - p[1]) / (q[1] - p[1])
        if 0 <= t < 1:
            xs.append(p[0] + t * (q[0] - p[0]))
    xs.sort()
    if len(xs) < 2:
        raise EngineError("polygon slice came up empty")
    return (xs[0] + xs[1]) / 2, y


def _bubble_floor(orientation: str, k: int) -> int:
    """Least dot count with a possibly nonzero loop value."""
    return k - 1 if orientation == "cw" else -k - 1


def _attach_teleporter(pd, si, slot, v: VLoop, label: str, left_factor: bool):
    """Expand one basis pair between a strand slot and a virtual loop.

    Places the strand-side token, merges the partner into the loop label,
    and applies the height covariance factor.
    """
    seg, t, h = slot
    A = pd.A
    par = A.parity[label]
    sgn = _teleporter_sign(pd, par, h, v.y)
    b = A.basis_element(label)
    bd = A.dual_of(label)
    if v.y > h:
        strand_side, loop_side = bd, b
    else:
        strand_side, loop_side = b, bd
    pd.strands[si].add_marker("tok", seg, t, payload=strand_side)
    if left_factor:
        v.elem = loop_side * v.elem
    else:
        v.elem = v.elem * loop_side
    pd.coeff *= sgn


def _squish_corrections(pd, bg) -> List[PathDiagram]:
    sP, P_arc, c1, sQ, Q_arc, c2 = _squish_roles(pd, bg)
    orient = _squish_chirality(pd, sP, P_arc, sQ, Q_arc)
    bound = (-pd.k - 1) if orient == "cw" else (pd.k - 1)
    if bound < 0:
        return []
    old = _crossing_count(pd)
    crossings = _find_crossings(pd)
    out = []
    floor = _bubble_floor(orient, pd.k)
    for r in range(bound + 1):
        for s in range(bound + 1 - r):
            if -r - s - 2 < floor:
                continue
            base = None
            for frac in (4, 16, 64, 256):
                cuts = _bigon_cuts(pd, crossings, bg, frac)
                jumps = {
                    (sP, _rank_of(cuts, sP, P_arc[0])): (
                        sQ,
                        _piece_after(
                            pd.strands[sQ].closed, len(cuts[sQ]), _rank_of(cuts, sQ, Q_arc[1])
                        ),
                    ),
                    (sQ, _rank_of(cuts, sQ, Q_arc[0])): (
                        sP,
                        _piece_after(
                            pd.strands[sP].closed, len(cuts[sP]), _rank_of(cuts, sP, P_arc[1])
                        ),
                    ),
                }
                discard = [
                    (sP, _piece_after(pd.strands[sP].closed, len(cuts[sP]), _rank_of(cuts, sP, P_arc[0]))),
                    (sQ, _piece_after(pd.strands[sQ].closed, len(cuts[sQ]), _rank_of(cuts, sQ, Q_arc[0]))),
                ]
                try:
                    cand = _with_strands(pd, _resew(pd, cuts, jumps, discard))
                    ok = _crossing_count(cand) == old - 2
                except EngineError:
                    continue
                if ok:
                    base = cand
                    ent1 = _cut_entry(cuts, sP, P_arc[0])
                    ent2 = _cut_entry(cuts, sP, P_arc[1])
                    cut_pts = (
                        pd.strands[sP].point(P_arc[0][0], ent1[2]),
                        pd.strands[sP].point(P_arc[1][0], ent2[3]),
                    )
                    break
            if base is None:
                raise EngineError("disc correction resew failed")
            p_in_end, p_out_start = cut_pts
            vx, vy = _vloop_spot(base, bg.poly)
            for label1 in pd.A.labels:
                for label2 in pd.A.labels:
                    pdb = base.copy()
                    v = VLoop(orient, pdb.A.one(), -r - s - 2, vx, vy)
                    pdb.vloops.append(v)
                    # outgoing leg: token next to the upper corner, r dots past it
                    si_o, seg_o = _seg_starting_at(pdb.strands, p_out_start)
                    cr = _find_crossings(pdb)
                    slot_o = _slot_after(pdb, cr, si_o, (seg_o, Fraction(0)))
                    _attach_teleporter(pdb, si_o, slot_o, v, label1, left_factor=True)
                    if r:
                        cr = _find_crossings(pdb)
                        sd, td, _hd = _slot_after(pdb, cr, si_o, (slot_o[0], slot_o[1]))
                        pdb.strands[si_o].add_marker("dot", sd, td, count=r)
                    # incoming leg: token next to the lower corner, s dots before
                    si_i, seg_i = _seg_ending_at(pdb.strands, p_in_end)
                    cr = _find_crossings(pdb)
                    slot_i = _slot_before(pdb, cr, si_i, (seg_i, Fraction(1)))
                    _attach_teleporter(pdb, si_i, slot_i, v, label2, left_factor=False)
                    if s:
                        cr = _find_crossings(pdb)
                        sd, td, _hd = _slot_before(pdb, cr, si_i, (slot_i[0], slot_i[1]))
                        pdb.strands[si_i].add_marker("dot", sd, td, count=s)
                    out.append(pdb)
    return out


def _seg_starting_at(strands, pt):
    hits = []
    for si, s in enumerate(strands):
        for seg in range(s.nsegs()):
            if s.pts[seg] == pt:
                hits.append((si, seg))
    if len(hits) != 1:
        raise EngineError("cut point is not a unique segment start")
    return hits[0]


def _seg_ending_at(strands, pt):
    hits = []
    for si, s in enumerate(strands):
        for seg in range(s.nsegs()):
            if s.pts[seg + 1] == pt:
                hits.append((si, seg))
    if len(hits) != 1:
        raise EngineError("cut point is not a unique segment end")
    return hits[0]


def _antiparallel_main(pd, bg) -> PathDiagram:
    sP, P_arc, c1, sQ, Q_arc, c2 = _squish_roles(pd, bg)
    old = _crossing_count(pd)
    hug_src = list(reversed(_arc_points(pd.strands[sQ], *Q_arc)))
    E = _poly_extent(bg.poly)
    last = None
    for div in (8, 32, 128, 512):
        try:
            hug = _offset_path(bg.poly, hug_src, E / div)
        except EngineError as e:
            last = e
            continue
        for frac in (4, 16, 64, 256):
            try:
                out = _reroute_arc(pd, sP, P_arc[0], P_arc[1], hug, frac)
                ok = _crossing_count(out) == old - 2
            except EngineError as e:
                last = e
                continue
            if ok:
                return out
    raise EngineError(f"disc reroute failed: {last}")


def _splice_bigon(pd, bg) -> List[PathDiagram]:
    if bg.parallel:
        return _splice_parallel(pd, bg)
    return [_antiparallel_main(pd, bg)] + _squish_corrections(pd, bg)


# ---------------------------------------------------------------------------
# corner slides (third strand across a disc corner)
# ---------------------------------------------------------------------------


def _crossing_positions_on(crossings, si, exclude=()):
    out = []
    for c in crossings:
        if c in exclude:
            continue
        for role in (0, 1):
            if (c.si, c.sj)[role] == si:
                out.append((_cross_pos(c, role), c, role))
    return sorted(out, key=lambda r: r[0])


class _Corner:
    __slots__ = ("sR", "pos_lo", "pos_hi", "hug_src", "poly", "disc_key", "nblock")

    def __init__(self, sR, pos_lo, pos_hi, hug_src, poly, disc_key, nblock):
        self.sR = sR
        self.pos_lo = pos_lo
        self.pos_hi = pos_hi
        self.hug_src = hug_src  # boundary path, flow order of the third strand
        self.poly = poly
        self.disc_key = disc_key  # the blocked disc's corner points
        self.nblock = nblock


def _arc_piece_pts(S, arc, p_stop, from_start):
    """Points along an arc between its corner end and an interior position."""
    if from_start:
        return _arc_points(S, arc[0], p_stop)
    return list(reversed(_arc_points(S, p_stop, arc[1])))


def _find_corner_slide(pd, crossings, bigons) -> Optional[_Corner]:
    bigons = sorted(bigons, key=lambda b: abs(_signed_area(b.poly)))
    for bg in bigons:
        arc_j_start = bg.cA if bg.parallel else bg.cB
        for corner in (bg.cA, bg.cB):
            from_start_i = corner is bg.cA
            from_start_j = corner is arc_j_start
            ci = [
                (p, c, role)
                for (p, c, role) in _crossing_positions_on(crossings, bg.si, (bg.cA, bg.cB))
                if bg.arc_i[0] < p < bg.arc_i[1]
            ]
            cj = [
                (p, c, role)
                for (p, c, role) in _crossing_positions_on(crossings, bg.sj, (bg.cA, bg.cB))
                if bg.arc_j[0] < p < bg.arc_j[1]
            ]
            if not ci or not cj:
                continue
            pe, ce, role_e = ci[0] if from_start_i else ci[-1]
            pf, cf, role_f = cj[0] if from_start_j else cj[-1]
            if ce is cf:
                continue
            sR_e = (ce.si, ce.sj)[1 - role_e]
            sR_f = (cf.si, cf.sj)[1 - role_f]
            if sR_e != sR_f:
                continue
            sR = sR_e
            pR1 = _cross_pos(ce, 1 - role_e)
            pR2 = _cross_pos(cf, 1 - role_f)
            if pR1 == pR2:
                continue
            lo, hi = (pR1, pR2) if pR1 < pR2 else (pR2, pR1)
            stuck = [
                p
                for (p, c, _role) in _crossing_positions_on(crossings, sR, (ce, cf))
                if lo < p < hi
            ]
            if stuck:
                continue
            piece_i = _arc_piece_pts(pd.strands[bg.si], bg.arc_i, pe, from_start_i)
            piece_j = _arc_piece_pts(pd.strands[bg.sj], bg.arc_j, pf, from_start_j)
            Sr = pd.strands[sR]
            rpts = _arc_points(Sr, lo, hi)
            # boundary: corner -> e along arc_i, e -> f along R, f -> corner
            r_piece = rpts if pR1 < pR2 else list(reversed(rpts))
            poly = piece_i[:-1] + r_piece[:-1] + list(reversed(piece_j))[:-1]
            blocked = False
            for c in crossings:
                if c in (bg.cA, bg.cB, ce, cf):
                    continue
                if _point_in_polygon(c.pt, poly):
                    blocked = True
                    break
            if not blocked:
                for v in pd.vloops:
                    if _point_in_polygon((v.x, v.y), poly):
                        blocked = True
                        break
            if blocked:
                continue
            # hug path in R's flow order: from its first corner crossing to
            # the second, going around the disc corner
            first_on_R = ce if pR1 < pR2 else cf
            if first_on_R is ce:
                hug_src = list(reversed(piece_i)) + piece_j[1:]
            else:
                hug_src = list(reversed(piece_j)) + piece_i[1:]
            key = frozenset((bg.cA.pt, bg.cB.pt))
            nblock = _blocker_count(pd, crossings, bg)
            return _Corner(sR, lo, hi, hug_src, poly, key, nblock)
    return None


def _corner_markers(pd, corner: _Corner) -> List[Marker]:
    return [
        m
        for m in pd.strands[corner.sR].markers
        if corner.pos_lo < m.pos() < corner.pos_hi
    ]


def _corner_slide(pd, corner: _Corner) -> PathDiagram:
    old = _crossing_count(pd)
    E = _poly_extent(corner.poly)
    last = None
    for div in (8, 32, 128, 512):
        try:
            hug = _offset_path(corner.poly, corner.hug_src, E / div)
        except EngineError as e:
            last = e
            continue
        for frac in (4, 16, 64, 256):
            try:
                out = _reroute_arc(pd, corner.sR, corner.pos_lo, corner.pos_hi, hug, frac)
                if _crossing_count(out) != old:
                    continue
                # the slide must actually drain the disc it was picked for
                newcr = _find_crossings(out)
                drained = False
                for bg in _bigon_candidates(out, newcr):
                    if frozenset((bg.cA.pt, bg.cB.pt)) == corner.disc_key:
                        drained = _blocker_count(out, newcr, bg) < corner.nblock
                        break
            except EngineError as e:
                last = e
                continue
            if drained:
                return out
    raise EngineError(f"corner slide failed: {last}")


# ---------------------------------------------------------------------------
# kinks and free loops
# ---------------------------------------------------------------------------


def _curl_candidate(pd, crossings):
    """A self-crossing whose loop is clean: (crossing, p1, p2, poly)."""
    for c in crossings:
        if c.si != c.sj:
            continue
        si = c.si
        p1, p2 = sorted([_cross_pos(c, 0), _cross_pos(c, 1)])
        others = [
            p
            for (p, cc, _role) in _crossing_positions_on(crossings, si, (c,))
            if p1 < p < p2
        ]
        if others:
            continue
        loop_pts = _arc_points(pd.strands[si], p1, p2)
        poly = loop_pts[:-1]
        blocked = False
        for cc in crossings:
            if cc is c:
                continue
            if _point_in_polygon(cc.pt, poly):
                blocked = True
                break
        if not blocked:
            seg1, seg2 = p1[0], p2[0]
            for sj, s in enumerate(pd.strands):
                if blocked:
                    break
                for idx, pt in enumerate(s.pts):
                    if sj == si and seg1 < idx <= seg2:
                        continue  # the loop's own vertices
                    if _point_in_polygon(pt, poly):
                        blocked = True
                        break
        if not blocked:
            for v in pd.vloops:
                if _point_in_polygon((v.x, v.y), poly):
                    blocked = True
                    break
        if blocked:
            continue
        return c, p1, p2, poly
    return None


def _harvest_markers(pd, si, p1, p2):
    """Merge every marker strictly inside (p1, p2) into one token + dots.

    Returns (token payload or None, its height or None, dot count) with the
    markers removed from the strand; merge signs land on pd.coeff.
    """
    S = pd.strands[si]
    while True:
        toks = [m for m in S.markers if m.kind == "tok" and p1 < m.pos() < p2]
        if len(toks) <= 1:
            break
        _merge_tokens(pd, si, toks[-2], toks[-1])
    dots = 0
    for m in list(S.markers):
        if p1 < m.pos() < p2 and m.kind == "dot":
            dots += m.count
            S.markers.remove(m)
    toks = [m for m in S.markers if m.kind == "tok" and p1 < m.pos() < p2]
    if toks:
        m = toks[0]
        h = S.marker_height(m)
        S.markers.remove(m)
        return m.payload, h, dots
    return None, None, dots


def _curl_move(pd, c, p1, p2, poly) -> List[PathDiagram]:
    base0 = pd.copy()
    si = c.si
    circ = "ccw" if _signed_area(poly) > 0 else "cw"
    overall = 1 if circ == "ccw" else -1
    payload, h_tok, D = _harvest_markers(base0, si, p1, p2)
    old = _crossing_count(base0)
    swapped = None
    bridges = None
    for frac in (4, 16, 64, 256, 1024):
        try:
            cand, cand_bridges = _end_swap(base0, c, frac)
            ok = _crossing_count(cand) == old - 1
        except EngineError:
            continue
        if ok:
            swapped, bridges = cand, cand_bridges
            break
    if swapped is None:
        raise EngineError("kink smoothing failed")
    # the in-to-out bridge of the earlier passage stays on the through
    # strand, the other bridge closes the excised loop
    a_first = _cross_pos(c, 0) == p1
    smooth_b = bridges[0] if a_first else bridges[1]
    loop_b = bridges[1] if a_first else bridges[0]
    cut_loop = loop_b[0]
    if cut_loop == smooth_b[0]:
        raise EngineError("kink smoothing did not split off a loop")
    if not swapped.strands[cut_loop].closed or swapped.strands[cut_loop].markers:
        raise EngineError("excised loop is not clean")
    del swapped.strands[cut_loop]
    sb, segb = smooth_b
    if sb > cut_loop:
        sb -= 1
    floor = _bubble_floor(circ, pd.k)
    out = []
    for s_dots in range(0, D - floor):
        vdots = D - s_dots - 1
        if vdots < floor:
            continue
        vx, vy = _vloop_spot(swapped, poly)
        for label in pd.A.labels:
            pdb = swapped.copy()
            elem = pdb.A.one()
            if payload is not None:
                pdb.coeff *= _koszul_move_sign(pdb, _token_parity(payload), h_tok, vy)
                elem = payload
            v = VLoop(circ, elem, vdots, vx, vy)
            pdb.vloops.append(v)
            slot = _slot_near_bridge(pdb, sb, segb)
            _attach_teleporter(pdb, sb, slot, v, label, left_factor=True)
            if s_dots:
                cr = _find_crossings(pdb)
                sd, td, _hd = _slot_after(pdb, cr, sb, (slot[0], slot[1]))
                pdb.strands[sb].add_marker("dot", sd, td, count=s_dots)
            pdb.coeff *= overall
            out.append(pdb)
    return out


def _free_loop_to_vloop(pd, si) -> None:
    """Convert a crossing-free closed strand into a virtual loop, in place."""
    S = pd.strands[si]
    while True:
        toks = [m for m in S.markers if m.kind == "tok"]
        if len(toks) <= 1:
            break
        _merge_tokens(pd, si, toks[-2], toks[-1])
    dots = sum(m.count for m in S.markers if m.kind == "dot")
    poly = S.pts[:-1]
    orient = "ccw" if _signed_area(poly) > 0 else "cw"
    vx, vy = _vloop_spot(pd, poly)
    elem = pd.A.one()
    toks = [m for m in S.markers if m.kind == "tok"]
    if toks:
        m = toks[0]
        pd.coeff *= _koszul_move_sign(pd, _token_parity(m.payload), S.marker_height(m), vy)
        elem = m.payload
    del pd.strands[si]
    pd.vloops.append(VLoop(orient, elem, dots, vx, vy))


# ---------------------------------------------------------------------------
# moving virtual loops off to the side
# ---------------------------------------------------------------------------


def _vloop_value(pd, v: VLoop) -> SymElement:
    if v.orientation == "ccw":
        return ccw_value(pd.A, pd.k, v.elem, v.dots)
    return cw_value(pd.A, pd.k, v.elem, v.dots)


def _ray_events(pd, v: VLoop):
    out = []
    for si, s in enumerate(pd.strands):
        for seg in range(s.nsegs()):
            y0, y1 = s.pts[seg][1], s.pts[seg + 1][1]
            if y0 == y1:
                continue
            if min(y0, y1) < v.y < max(y0, y1):
                t = (v.y - y0) / (y1 - y0)
                x = s.pts[seg][0] + t * (s.pts[seg + 1][0] - s.pts[seg][0])
                if x > v.x:
                    out.append((x, si, seg, t))
    return sorted(out)


def _band_slot(pd, si, seg, t_lo, t_hi, h_lo, h_hi):
    """Slot on the segment window with a fresh height inside (h_lo, h_hi)."""
    S = pd.strands[si]
    ya = S.point(seg, t_lo)[1]
    yb = S.point(seg, t_hi)[1]
    wlo, whi = (ya, yb) if ya < yb else (yb, ya)
    lo = max(h_lo, wlo)
    hi = min(h_hi, whi)
    if not (lo < hi):
        raise EngineError("deposit band is empty")
    h = pd.fresh_height(lo, hi)
    y0, y1 = S.pts[seg][1], S.pts[seg + 1][1]
    t = (h - y0) / (y1 - y0)
    return seg, t, h


def _transport_deposits(pd, v, si, seg, t_hit, m_dots, label, going_up, a_elem):
    """Place the strand-side tokens and dots for one slide correction."""
    crossings = _find_crossings(pd)
    events = _events_on_segment(pd, crossings, si, seg)
    t_lo = max([e for e in events if e < t_hit], default=Fraction(0))
    t_hi = min([e for e in events if e > t_hit], default=Fraction(1))
    A = pd.A
    ystar = v.y
    nxt_dn = _next_item_height(pd, ystar, above=False)
    lo_cap = nxt_dn if nxt_dn is not None else ystar - 1
    sd, td, hd = _band_slot(pd, si, seg, t_lo, t_hi, lo_cap, ystar)
    pd.strands[si].add_marker("tok", sd, td, payload=A.dual_of(label))
    v.elem = A.basis_element(label)
    if going_up:
        nxt_up = _next_item_height(pd, ystar, above=True)
        hi_cap = nxt_up if nxt_up is not None else ystar + 1
        sa, ta, _ha = _band_slot(pd, si, seg, t_lo, t_hi, ystar, hi_cap)
        pd.strands[si].add_marker("tok", sa, ta, payload=a_elem)
        if m_dots:
            s2, t2, _h2 = _band_slot(pd, si, seg, t_lo, t_hi, _floor_cap(pd, hd), hd)
            pd.strands[si].add_marker("dot", s2, t2, count=m_dots)
    else:
        hi_cap = _ceil_cap(pd, ystar)
        nxt2 = _next_item_height(pd, hd, above=False)
        lo2 = nxt2 if nxt2 is not None else hd - 1
        sa, ta, _ha = _band_slot(pd, si, seg, t_lo, t_hi, lo2, hd)
        pd.strands[si].add_marker("tok", sa, ta, payload=a_elem)
        if m_dots:
            s2, t2, _h2 = _band_slot(pd, si, seg, t_lo, t_hi, ystar, hi_cap)
            pd.strands[si].add_marker("dot", s2, t2, count=m_dots)


def _floor_cap(pd, h):
    nxt = _next_item_height(pd, h, above=False)
    return nxt if nxt is not None else h - 1


def _ceil_cap(pd, h):
    nxt = _next_item_height(pd, h, above=True)
    return nxt if nxt is not None else h + 1


def _transport_step(pd) -> Optional[List[PathDiagram]]:
    """Advance the rightmost virtual loop one event; None when none remain."""
    if not pd.vloops:
        return None
    v = max(pd.vloops, key=lambda w: (w.x, w.y))
    val = _vloop_value(pd, v)
    if val.is_zero():
        return []
    if val.is_scalar():
        out = pd.copy()
        w = max(out.vloops, key=lambda w: (w.x, w.y))
        out.vloops.remove(w)
        out.coeff *= val.scalar_part()
        return [out]
    events = _ray_events(pd, v)
    if not events:
        out = pd.copy()
        w = max(out.vloops, key=lambda w: (w.x, w.y))
        out.vloops.remove(w)
        par = val.parity()
        if par is None:
            raise EngineError("loop value of mixed parity")
        out.pending.append((val, w.y, par))
        return [out]
    x_hit, si, seg, t_hit = events[0]
    going_up = pd.strands[si].seg_dir(seg) > 0
    outs = []
    main = pd.copy()
    wm = max(main.vloops, key=lambda w: (w.x, w.y))
    nxt_x = events[1][0] if len(events) > 1 else x_hit + 1
    wm.x = (x_hit + nxt_x) / 2
    outs.append(main)
    floor = _bubble_floor(v.orientation, pd.k)
    a_elem = a_dagger(pd.A, v.elem)
    for m in range(0, v.dots - 1 - floor):
        vdots = v.dots - m - 2
        if vdots < floor:
            continue
        for label in pd.A.labels:
            pdb = pd.copy()
            w = max(pdb.vloops, key=lambda w: (w.x, w.y))
            w.dots = vdots
            par_b = pd.A.parity[label]
            if v.orientation == "ccw":
                coeff = 1 if going_up else -(1 if par_b == 0 else -1)
            else:
                coeff = -1 if going_up else (1 if par_b == 0 else -1)
            _transport_deposits(pdb, w, si, seg, t_hit, m, label, going_up, a_elem)
            pdb.coeff *= coeff * (m + 1)
            outs.append(pdb)
    return outs


# ---------------------------------------------------------------------------
# marching decorations forward
# ---------------------------------------------------------------------------


def _march_marker(pd, crossings, si, mi) -> List[PathDiagram]:
    """One forward step for one marker.  A token hop mutates pd itself."""
    m = pd.strands[si].markers[mi]
    if m.kind == "tok":
        _token_hop(pd, crossings, si, m)
        return [pd]
    return _dot_step(pd, crossings, si, mi)


def _march_span(pd, crossings, si, lo, hi) -> Optional[List[PathDiagram]]:
    """Step the first marker sitting strictly between two strand positions."""
    for mi, m in enumerate(pd.strands[si].markers):
        if lo < m.pos() < hi:
            return _march_marker(pd, crossings, si, mi)
    return None


def _march_any(pd, crossings) -> Optional[List[PathDiagram]]:
    """Step the first marker that still has a crossing ahead of it."""
    for si in range(len(pd.strands)):
        for mi, m in enumerate(pd.strands[si].markers):
            c, _pos = _next_crossing_ahead(crossings, si, m.pos())
            if c is not None:
                return _march_marker(pd, crossings, si, mi)
    return None


# ---------------------------------------------------------------------------
# reading a reduced diagram off the page
# ---------------------------------------------------------------------------


def _boundary_end(pt) -> Tuple[str, int]:
    x, y = pt
    if y == 0:
        kind = "b"
    elif y == 1:
        kind = "t"
    else:
        raise EngineError("string terminus off the boundary")
    slot = x - 1
    if slot < 0 or slot != int(slot):
        raise EngineError("string terminus off the slot grid")
    return kind, int(slot)


def _interleave_count(matching, nb, nt) -> int:
    def circled(end):
        kind, idx = end
        return idx if kind == "b" else nb + (nt - 1 - idx)

    chords = [tuple(sorted((circled(a), circled(b)))) for a, b in matching]
    n = 0
    for i in range(len(chords)):
        for j in range(i + 1, len(chords)):
            (a, b), (c, d) = chords[i], chords[j]
            if a < c < b < d or c < a < d < b:
                n += 1
    return n


def _readoff(pd: PathDiagram, out: Dict) -> None:
    """Resolve a fully reduced diagram into matched-string basis terms."""
    for si in range(len(pd.strands)):
        if pd.strands[si].closed:
            raise EngineError("closed strand survived normalization")
        _merge_strand_markers(pd, si)
    if pd.coeff == 0:
        return
    if pd.vloops:
        raise EngineError("virtual loop survived normalization")
    crossings = _find_crossings(pd)
    A = pd.A
    recs = []
    for S in pd.strands:
        in_end = _boundary_end(S.pts[0])
        out_end = _boundary_end(S.pts[-1])
        toks = [m for m in S.markers if m.kind == "tok"]
        dots = sum(m.count for m in S.markers if m.kind == "dot")
        if toks:
            payload = toks[0].payload
            height = S.marker_height(toks[0])
        else:
            payload = A.one()
            height = None
        par = payload.parity()
        if par is None:
            raise EngineError("string carries a token of mixed parity")
        recs.append((in_end, out_end, dots, payload, height, par))
    ends = [e for r in recs for e in (r[0], r[1])]
    nb = sum(1 for e in ends if e[0] == "b")
    nt = sum(1 for e in ends if e[0] == "t")
    if sorted(e[1] for e in ends if e[0] == "b") != list(range(nb)):
        raise EngineError("bottom boundary slots are not contiguous")
    if sorted(e[1] for e in ends if e[0] == "t") != list(range(nt)):
        raise EngineError("top boundary slots are not contiguous")
    order = sorted(
        range(len(recs)),
        key=lambda i: (0 if recs[i][1][0] == "t" else 1, recs[i][1][1]),
    )
    matching = tuple((recs[i][0], recs[i][1]) for i in order)
    if _interleave_count(matching, nb, nt) != len(crossings):
        raise EngineError("diagram not in minimal position at readoff")

    # Koszul sign for rewriting the height order into the reading order:
    # tokens of out-to-top strings left to right, then out-to-bottom ones,
    # then the parked loop values from highest to lowest.
    pend_desc = sorted(range(len(pd.pending)), key=lambda k: -pd.pending[k][1])
    tgt = [("s", i) for i in order if recs[i][5] == 1]
    tgt += [("p", k) for k in pend_desc if pd.pending[k][2] == 1]

    def h_of(item):
        tag, k = item
        return recs[k][4] if tag == "s" else pd.pending[k][1]

    cur = sorted(tgt, key=lambda it: -h_of(it))
    sign = _perm_sign([tgt.index(it) for it in cur])
    val = SymElement.scalar(A, Fraction(sign) * pd.coeff)
    for k in pend_desc:
        val = val * pd.pending[k][0]
    if val.is_zero():
        return
    choices = []
    for i in order:
        payload = recs[i][3]
        opts = [
            (lbl, cf)
            for lbl, cf in zip(A.labels, payload.vector())
            if cf != 0
        ]
        if not opts:
            return
        choices.append((recs[i][2], opts))
    for combo in itertools.product(*[opts for _d, opts in choices]):
        decs = tuple((choices[p][0], combo[p][0]) for p in range(len(combo)))
        scale = Fraction(1)
        for _lbl, cf in combo:
            scale *= cf
        key = (matching, decs)
        prev = out.get(key)
        term = val.scale(scale)
        out[key] = term if prev is None else prev + term


# ---------------------------------------------------------------------------
# the rewrite loop
# ---------------------------------------------------------------------------


def _normalize_pathdiagram(pd: PathDiagram) -> Dict:
    """Drive a planar diagram to a combination of reduced basis terms.

    Returns {(matching, decorations): symmetric-algebra coefficient}.
    """
    out: Dict = {}
    work = [pd.copy()]
    steps = 0
    while work:
        cur = work.pop()
        if cur.coeff == 0:
            continue
        steps += 1
        if steps > _MOVE_BUDGET * 50:
            raise EngineError("rewrite budget exhausted")
        crossings = _find_crossings(cur)
        if crossings:
            bigons = _bigon_candidates(cur, crossings)
            clean = [
                bg for bg in bigons if _blocker_count(cur, crossings, bg) == 0
            ]
            if clean:
                bg = min(clean, key=lambda b: abs(_signed_area(b.poly)))
                stepped = _march_span(cur, crossings, bg.si, *bg.arc_i)
                if stepped is None:
                    stepped = _march_span(cur, crossings, bg.sj, *bg.arc_j)
                if stepped is not None:
                    work.extend(stepped)
                else:
                    work.extend(_splice_bigon(cur, bg))
                continue
            if bigons:
                corner = _find_corner_slide(cur, crossings, bigons)
                if corner is not None:
                    stepped = _march_span(
                        cur, crossings, corner.sR, corner.pos_lo, corner.pos_hi
                    )
                    if stepped is not None:
                        work.extend(stepped)
                    else:
                        work.append(_corner_slide(cur, corner))
                    continue
            curl = _curl_candidate(cur, crossings)
            if curl is not None:
                work.extend(_curl_move(cur, *curl))
                continue
            if bigons:
                raise EngineError("blocked disc with no admissible slide")
        freed = None
        for si, S in enumerate(cur.strands):
            if S.closed and not any(c.involves(si) for c in crossings):
                freed = si
                break
        if freed is not None:
            _free_loop_to_vloop(cur, freed)
            work.append(cur)
            continue
        if cur.vloops:
            res = _transport_step(cur)
            work.extend(res)
            continue
        stepped = _march_any(cur, crossings)
        if stepped is not None:
            work.extend(stepped)
            continue
        _readoff(cur, out)
    return {k: v for k, v in out.items() if not v.is_zero()}


# ---------------------------------------------------------------------------
# morphisms in canonical basis form
# ---------------------------------------------------------------------------

TermKey = Tuple[tuple, tuple]

_MU_GRID = (
    Fraction(0),
    Fraction(1, 101),
    Fraction(1, 103),
    Fraction(1, 107),
    Fraction(1, 109),
    Fraction(1, 113),
)


def _as_word(word) -> Tuple[int, ...]:
    if isinstance(word, str):
        out = []
        for ch in word:
            if ch == "u":
                out.append(UP)
            elif ch == "d":
                out.append(DOWN)
            elif ch == "1" and not out and len(word) == 1:
                return ()
            else:
                raise InterfaceMismatch("bad word letter %r" % ch)
        return tuple(out)
    return tuple(word)


def _words_of_matching(matching) -> Tuple[Tuple[int, ...], Tuple[int, ...]]:
    """Reconstruct (bottom word, top word) from a matching key."""
    bottom: Dict[int, int] = {}
    top: Dict[int, int] = {}

    def put(side, slot, letter):
        if slot in side:
            raise EngineError("matching reuses a boundary slot")
        side[slot] = letter

    for (kin, sin), (kout, sout) in matching:
        if kin == "b":
            put(bottom, sin, UP)
        else:
            put(top, sin, DOWN)
        if kout == "b":
            put(bottom, sout, DOWN)
        else:
            put(top, sout, UP)
    for side in (bottom, top):
        if side and (min(side) != 0 or max(side) != len(side) - 1):
            raise EngineError("matching slots are not contiguous")
    return (
        tuple(bottom[i] for i in range(len(bottom))),
        tuple(top[i] for i in range(len(top))),
    )


def _sort_matching(pairs, decs):
    """Canonical string order: top outputs left to right, then bottom outputs."""
    order = sorted(
        range(len(pairs)), key=lambda i: (pairs[i][1][0] != "t", pairs[i][1][1])
    )
    return tuple(pairs[i] for i in order), tuple(decs[i] for i in order)


def _interleave_of(matching) -> int:
    ends = [e for pair in matching for e in pair]
    nb = sum(1 for e in ends if e[0] == "b")
    nt = len(ends) - nb
    return _interleave_count(matching, nb, nt)


def _parity_parts(c: SymElement) -> List[Tuple[SymElement, int]]:
    even = {m: v for m, v in c.terms.items() if c.parity_of(m) == 0}
    odd = {m: v for m, v in c.terms.items() if c.parity_of(m) == 1}
    out = []
    if even:
        out.append((SymElement(c.A, even), 0))
    if odd:
        out.append((SymElement(c.A, odd), 1))
    return out


def _identity_wires(word, bot_off: int, top_off: int):
    out = []
    for i, w in enumerate(word):
        if w == UP:
            out.append((("b", bot_off + i), ("t", top_off + i)))
        else:
            out.append((("t", top_off + i), ("b", bot_off + i)))
    return out


def _band_term(term_matching, term_decs, bot_shift: int, top_shift: int, wires):
    """Shift a term's slots into a band and lay identity wires next to it."""
    pairs = []
    decs = []
    for ((kin, sin), (kout, sout)), dd in zip(term_matching, term_decs):
        pairs.append(
            (
                (kin, sin + (bot_shift if kin == "b" else top_shift)),
                (kout, sout + (bot_shift if kout == "b" else top_shift)),
            )
        )
        decs.append(dd)
    for w in wires:
        pairs.append(w)
        decs.append((0, None))
    return _sort_matching(tuple(pairs), tuple(decs))


def _put_band_marker(pd, si, seg, hwin, kind, count=0, payload=None):
    S = pd.strands[si]
    ya, yb = S.pts[seg][1], S.pts[seg + 1][1]
    lo, hi = (ya, yb) if ya < yb else (yb, ya)
    h_lo = max(lo, min(hwin))
    h_hi = min(hi, max(hwin))
    if not h_lo < h_hi:
        raise EngineError("marker window misses its segment")
    h = pd.fresh_height(h_lo, h_hi)
    t = (h - ya) / (yb - ya)
    S.add_marker(kind, seg, t, count=count, payload=payload)


def _embed_band(pd, matching, decs, y0, y1, mu, pendings):
    """Draw one basis term inside the horizontal band [y0, y1].

    The decorations sit near each string's outgoing end, token first along
    the flow, in a height ladder matching the canonical reading order, so the
    band reads back to exactly the term it encodes.  Coefficient parts are
    parked lowest.
    """
    y0 = Fraction(y0)
    y1 = Fraction(y1)
    H = y1 - y0
    n = len(matching)
    first = len(pd.strands)
    for idx, ((kin, sin), (kout, sout)) in enumerate(matching):
        pin = (
            (Fraction(sin + 1), y0) if kin == "b" else (Fraction(sin + 1), y1)
        )
        pout = (
            (Fraction(sout + 1), y0) if kout == "b" else (Fraction(sout + 1), y1)
        )
        xm = (pin[0] + pout[0]) / 2 + mu * (idx + 1)
        if kin != kout:
            pts = [pin, (xm, y0 + H / 2), pout]
        elif kin == "t":
            span = abs(sout - sin)
            pts = [pin, (xm, y0 + H / (7 + span)), pout]
        else:
            span = abs(sout - sin)
            pts = [pin, (xm, y1 - H / (9 + span)), pout]
        pd.strands.append(Strand(pts))
    step = H / (18 * (n + 1))
    for idx in range(n):
        dots, label = decs[idx]
        if label is None and not dots:
            continue
        si = first + idx
        seg = pd.strands[si].nsegs() - 1
        kout = matching[idx][1][0]
        if kout == "t":
            w_tok = (y1 - (2 * idx + 2) * step, y1 - (2 * idx + 1) * step)
            w_dot = (y1 - (2 * idx + 1) * step, y1 - 2 * idx * step)
        else:
            j = n - idx
            w_tok = (y0 + (2 * j + 1) * step, y0 + (2 * j + 2) * step)
            w_dot = (y0 + 2 * j * step, y0 + (2 * j + 1) * step)
        if label is not None:
            _put_band_marker(
                pd, si, seg, w_tok, "tok", payload=pd.A.basis_element(label)
            )
        if dots:
            _put_band_marker(pd, si, seg, w_dot, "dot", count=dots)
    for part, parity in pendings:
        h = pd.fresh_height(y0, y0 + step)
        pd.pending.append((part, h, parity))


def _stitch_interface(pd: PathDiagram, y_cut: Rat) -> None:
    """Join strand ends meeting at an internal height, in flow order."""
    starts: Dict[Pt, int] = {}
    ends: Dict[Pt, int] = {}
    for si, S in enumerate(pd.strands):
        if S.closed:
            continue
        if S.pts[0][1] == y_cut:
            starts[S.pts[0]] = si
        if S.pts[-1][1] == y_cut:
            ends[S.pts[-1]] = si
    if set(starts) != set(ends):
        raise InterfaceMismatch("stitch interface points do not pair up")
    nxt = {ends[p]: starts[p] for p in ends}
    continued = set(nxt.values())
    keep: List[Strand] = []
    done = set()
    for si, S in enumerate(pd.strands):
        if si not in nxt and si not in continued:
            keep.append(S)
            done.add(si)
    for si in range(len(pd.strands)):
        if si in done or si in continued:
            continue
        chain = [si]
        cur = si
        while cur in nxt:
            cur = nxt[cur]
            chain.append(cur)
        done.update(chain)
        keep.append(
            _join(*[(pd.strands[j].pts, pd.strands[j].markers) for j in chain])
        )
    for si in range(len(pd.strands)):
        if si in done:
            continue
        cyc = [si]
        cur = nxt[si]
        while cur != si:
            cyc.append(cur)
            cur = nxt[cur]
        done.update(cyc)
        S = _join(*[(pd.strands[j].pts, pd.strands[j].markers) for j in cyc])
        S.closed = True
        keep.append(S)
    pd.strands = keep


def _assemble_bands(A, k, bands) -> Dict:
    """Embed basis-term bands bottom to top, stitch, and normalize.

    bands: list of (matching, decs, pendings); each band claims an equal
    vertical slab.  Retries over a perturbation grid until the embedding is
    generic (crossing count equals the interleave count of each band).
    """
    nb = len(bands)
    cuts = [Fraction(i, nb) for i in range(nb + 1)]
    last = None
    for mu in _MU_GRID:
        pd = PathDiagram(A, k)
        try:
            want = 0
            for bi, (matching, decs, pendings) in enumerate(bands):
                _embed_band(pd, matching, decs, cuts[bi], cuts[bi + 1], mu, pendings)
                want += _interleave_of(matching)
                if _crossing_count(pd) != want:
                    raise EngineError("embedding produced a wrong crossing count")
            for y_cut in cuts[1:-1]:
                _stitch_interface(pd, y_cut)
            return _normalize_pathdiagram(pd)
        except EngineError as e:
            last = e
    raise EngineError("no generic embedding found: %s" % last)


class Morphism:
    """Linear combination of canonical basis diagrams between two words.

    Keys are (matching, decorations); values are coefficients in the bubble
    algebra.  The zero map has no terms.
    """

    def __init__(self, A: FrobeniusAlgebra, k: int, domain, codomain, terms=None):
        self.A = A
        self.k = int(k)
        self.domain = _as_word(domain)
        self.codomain = _as_word(codomain)
        self.terms: Dict[TermKey, SymElement] = {}
        if terms:
            for key, val in terms.items():
                if not val.is_zero():
                    self.terms[key] = val

    # -- constructors

    @staticmethod
    def zero(A, k, domain, codomain) -> "Morphism":
        return Morphism(A, k, domain, codomain)

    @staticmethod
    def identity(A, k, word) -> "Morphism":
        word = _as_word(word)
        if not word:
            return Morphism(A, k, (), (), {((), ()): SymElement.one(A)})
        text = " ".join("u" if w == UP else "d" for w in word)
        return normal_form(parse_diagram(text, k, A))

    @staticmethod
    def from_scalar(A, k, c) -> "Morphism":
        """Endomorphism of the unit object given by a coefficient."""
        if not isinstance(c, SymElement):
            c = SymElement.scalar(A, c)
        return Morphism(A, k, (), (), {((), ()): c})

    def copy(self) -> "Morphism":
        return Morphism(self.A, self.k, self.domain, self.codomain, dict(self.terms))

    # -- linear structure

    def _check_parallel(self, other: "Morphism"):
        if self.A is not other.A and self.A.name != other.A.name:
            raise InterfaceMismatch("mismatched coefficient algebras")
        if self.k != other.k:
            raise InterfaceMismatch("mismatched central charges")
        if self.domain != other.domain or self.codomain != other.codomain:
            raise InterfaceMismatch(
                "cannot add %s -> %s to %s -> %s"
                % (
                    word_str(self.domain),
                    word_str(self.codomain),
                    word_str(other.domain),
                    word_str(other.codomain),
                )
            )

    def __add__(self, other: "Morphism") -> "Morphism":
        self._check_parallel(other)
        out = self.copy()
        for key, val in other.terms.items():
            got = out.terms.get(key)
            s = val if got is None else got + val
            if s.is_zero():
                out.terms.pop(key, None)
            else:
                out.terms[key] = s
        return out

    def __neg__(self) -> "Morphism":
        return self.scale(Fraction(-1))

    def __sub__(self, other: "Morphism") -> "Morphism":
        return self + (-other)

    def scale(self, c) -> "Morphism":
        """Multiply every coefficient on the right by a rational or a bubble
        algebra element."""
        if not isinstance(c, SymElement):
            out = Morphism(self.A, self.k, self.domain, self.codomain)
            c = Fraction(c)
            if c:
                for key, val in self.terms.items():
                    out.terms[key] = val.scale(c)
            return out
        out = Morphism(self.A, self.k, self.domain, self.codomain)
        for key, val in self.terms.items():
            prod = val * c
            if not prod.is_zero():
                out.terms[key] = prod
        return out

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other) -> bool:
        if not isinstance(other, Morphism):
            return NotImplemented
        return (
            self.A.name == other.A.name
            and self.k == other.k
            and self.domain == other.domain
            and self.codomain == other.codomain
            and self.terms == other.terms
        )

    __hash__ = None

    # -- categorical structure

    def then(self, other: "Morphism") -> "Morphism":
        """Vertical composite: self applied first, other stacked on top."""
        if self.A is not other.A and self.A.name != other.A.name:
            raise InterfaceMismatch("mismatched coefficient algebras")
        if self.k != other.k:
            raise InterfaceMismatch("mismatched central charges")
        if self.codomain != other.domain:
            raise InterfaceMismatch(
                "composite interface mismatch: %s vs %s"
                % (word_str(self.codomain), word_str(other.domain))
            )
        out = Morphism(self.A, self.k, self.domain, other.codomain)
        for (m1, d1), c1 in self.terms.items():
            for p1 in _parity_parts(c1):
                for (m2, d2), c2 in other.terms.items():
                    for p2 in _parity_parts(c2):
                        got = _assemble_bands(
                            self.A,
                            self.k,
                            [(m1, d1, [p1]), (m2, d2, [p2])],
                        )
                        for key, val in got.items():
                            have = out.terms.get(key)
                            s = val if have is None else have + val
                            if s.is_zero():
                                out.terms.pop(key, None)
                            else:
                                out.terms[key] = s
        return out

    def tensor(self, other: "Morphism") -> "Morphism":
        """Horizontal juxtaposition, self on the left (and stacked later)."""
        if self.A is not other.A and self.A.name != other.A.name:
            raise InterfaceMismatch("mismatched coefficient algebras")
        if self.k != other.k:
            raise InterfaceMismatch("mismatched central charges")
        out = Morphism(
            self.A,
            self.k,
            self.domain + other.domain,
            self.codomain + other.codomain,
        )
        ldb = len(self.domain)
        lct = len(self.codomain)
        for (m1, d1), c1 in self.terms.items():
            for p1 in _parity_parts(c1):
                for (m2, d2), c2 in other.terms.items():
                    for p2 in _parity_parts(c2):
                        lower = _band_term(
                            m2, d2, ldb, ldb, _identity_wires(self.domain, 0, 0)
                        )
                        upper = _band_term(
                            m1, d1, 0, 0,
                            _identity_wires(other.codomain, ldb, lct),
                        )
                        got = _assemble_bands(
                            self.A,
                            self.k,
                            [(lower[0], lower[1], [p2]), (upper[0], upper[1], [p1])],
                        )
                        for key, val in got.items():
                            have = out.terms.get(key)
                            s = val if have is None else have + val
                            if s.is_zero():
                                out.terms.pop(key, None)
                            else:
                                out.terms[key] = s
        return out

    # -- grading

    def degree(self) -> Optional[int]:
        degs = set()
        for (matching, decs), c in self.terms.items():
            base = _term_degree(self.A, self.k, matching, decs)
            for mono in c.terms:
                degs.add(base + c.degree_of(mono))
        if len(degs) == 1:
            return degs.pop()
        return None

    def parity(self) -> Optional[int]:
        pars = set()
        for (matching, decs), c in self.terms.items():
            base = sum(self.A.parity[lab] for (_, lab) in decs if lab is not None)
            for mono in c.terms:
                pars.add((base + c.parity_of(mono)) & 1)
        if len(pars) == 1:
            return pars.pop()
        return None

    # -- serialization

    def to_json(self):
        entries = []
        for key in sorted(self.terms.keys()):
            matching, decs = key
            c = self.terms[key]
            entry = {
                "matching": [[list(end) for end in pair] for pair in matching],
                "decorations": [[dots, label] for (dots, label) in decs],
                "coefficient": c.to_json(),
            }
            base = _term_degree(self.A, self.k, matching, decs)
            degs = {base + c.degree_of(m) for m in c.terms}
            entry["degree"] = degs.pop() if len(degs) == 1 else None
            entries.append(entry)
        return {
            "domain": word_str(self.domain),
            "codomain": word_str(self.codomain),
            "terms": entries,
        }

    def __repr__(self):
        return "Morphism(%s -> %s, %d terms)" % (
            word_str(self.domain),
            word_str(self.codomain),
            len(self.terms),
        )


def _term_degree(A: FrobeniusAlgebra, k: int, matching, decs) -> int:
    total = 0
    for ((kin, sin), (kout, sout)), (dots, label) in zip(matching, decs):
        total += 2 * A.d * dots
        if label is not None:
            total += A.degree[label]
        if kin == kout == "t":
            total += k * A.d if sin < sout else -k * A.d
        elif kin == kout == "b":
            total += k * A.d if sin > sout else -k * A.d
    return total


def normal_form(t: DiagramTerm) -> Morphism:
    """Evaluate a parsed term to its canonical basis combination."""
    pd = _term_to_pathdiagram(t)
    got = _normalize_pathdiagram(pd)
    return Morphism(t.A, t.k, t.domain, t.codomain, got)


def compose(first: Morphism, second: Morphism) -> Morphism:
    """Composite with first applied first (read bottom to top)."""
    return first.then(second)


def tensor(left: Morphism, right: Morphism) -> Morphism:
    return left.tensor(right)
