"""Wreath and affine wreath product algebras over a Frobenius algebra.

Wr_n(A) = A^(x)n runfolded with S_n acting by signed factor permutations;
the affine version adjoins commuting even variables x_1..x_n (degree 2d)
with the mixed relation

    s_i f = s_i(f) s_i + demazure_i(f)

pushing symmetric group elements past polynomials.  Elements are kept in
normal form x^alpha * (tensor) * sigma.  The star actions (the plus and
minus polynomial representations) act on rational functions as well; the
identity wrap_sum(...) = n! * unit exercises the whole stack.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, Iterable, Iterator, List, Optional, Sequence, Tuple

import sympy

from .frobenius import AlgebraElement, FrobeniusAlgebra, TensorElement, tau_element

Rat = Fraction


# ---------------------------------------------------------------------------
# permutations


class Perm:
    """Permutation of {1..n}; images[i-1] = sigma(i); (s*t)(i) = s(t(i))."""

    __slots__ = ("images",)

    def __init__(self, images: Sequence[int]):
        images = tuple(images)
        assert sorted(images) == list(range(1, len(images) + 1)), images
        self.images = images

    @staticmethod
    def identity(n: int) -> "Perm":
        return Perm(range(1, n + 1))

    @staticmethod
    def simple(n: int, i: int) -> "Perm":
        return Perm.transposition(n, i, i + 1)

    @staticmethod
    def transposition(n: int, i: int, j: int) -> "Perm":
        img = list(range(1, n + 1))
        img[i - 1], img[j - 1] = j, i
        return Perm(img)

    @property
    def n(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "Perm") -> "Perm":
        assert self.n == other.n
        return Perm([self.images[other.images[i] - 1] for i in range(self.n)])

    def inverse(self) -> "Perm":
        inv = [0] * self.n
        for i, v in enumerate(self.images):
            inv[v - 1] = i + 1
        return Perm(inv)

    def __eq__(self, other):
        return isinstance(other, Perm) and self.images == other.images

    def __hash__(self):
        return hash(self.images)

    def is_identity(self) -> bool:
        return self.images == tuple(range(1, self.n + 1))

    def length(self) -> int:
        inv = 0
        for a in range(self.n):
            for b in range(a + 1, self.n):
                if self.images[a] > self.images[b]:
                    inv += 1
        return inv

    def sign(self) -> int:
        return -1 if self.length() & 1 else 1

    def reduced_word(self) -> List[int]:
        """Indices w with self = s_{w[0]} * s_{w[1]} * ... (rightmost first
        when acting on the right of a word)."""
        img = list(self.images)
        word = []
        changed = True
        while changed:
            changed = False
            for i in range(len(img) - 1):
                if img[i] > img[i + 1]:
                    img[i], img[i + 1] = img[i + 1], img[i]
                    word.append(i + 1)
                    changed = True
        return list(reversed(word))

    def cycle_str(self) -> str:
        seen = set()
        cycles = []
        for start in range(1, self.n + 1):
            if start in seen:
                continue
            cyc = [start]
            seen.add(start)
            nxt = self(start)
            while nxt != start:
                cyc.append(nxt)
                seen.add(nxt)
                nxt = self(nxt)
            if len(cyc) > 1:
                cycles.append(cyc)
        if not cycles:
            return "id"
        return "".join("(" + " ".join(map(str, c)) + ")" for c in cycles)

    def __repr__(self):
        return self.cycle_str()


def all_perms(n: int) -> Iterator[Perm]:
    for img in itertools.permutations(range(1, n + 1)):
        yield Perm(img)


def young_subgroup(n: int, r: int) -> Iterator[Perm]:
    """Permutations preserving the blocks {1..r} and {r+1..n}."""
    for lo in itertools.permutations(range(1, r + 1)):
        for hi in itertools.permutations(range(r + 1, n + 1)):
            yield Perm(list(lo) + list(hi))


# ---------------------------------------------------------------------------
# partitions


class Partition:
    """Weakly decreasing positive parts; () is the empty partition."""

    __slots__ = ("parts",)

    def __init__(self, parts: Iterable[int] = ()):
        parts = tuple(int(p) for p in parts if p)
        assert all(
            parts[i] >= parts[i + 1] > 0 for i in range(len(parts) - 1)
        ) and all(p > 0 for p in parts), f"not a partition: {parts}"
        self.parts = parts

    @property
    def size(self) -> int:
        return sum(self.parts)

    def __len__(self):
        return len(self.parts)

    def __iter__(self):
        return iter(self.parts)

    def __getitem__(self, i):
        return self.parts[i]

    def part(self, i: int) -> int:
        """i-th part, 1-indexed, zero beyond the last row."""
        return self.parts[i - 1] if 1 <= i <= len(self.parts) else 0

    def transpose(self) -> "Partition":
        if not self.parts:
            return Partition()
        return Partition(
            sum(1 for p in self.parts if p >= j)
            for j in range(1, self.parts[0] + 1)
        )

    def contains_box(self, i: int, j: int) -> bool:
        return 1 <= i <= len(self.parts) and 1 <= j <= self.parts[i - 1]

    def hook_lengths(self) -> List[List[int]]:
        t = self.transpose()
        return [
            [self.part(i) - j + t.part(j) - i + 1 for j in range(1, self.part(i) + 1)]
            for i in range(1, len(self.parts) + 1)
        ]

    def standard_tableau_count(self) -> int:
        prod = 1
        for row in self.hook_lengths():
            for h in row:
                prod *= h
        num = 1
        for k in range(2, self.size + 1):
            num *= k
        assert num % prod == 0
        return num // prod

    def __eq__(self, other):
        return isinstance(other, Partition) and self.parts == other.parts

    def __hash__(self):
        return hash(self.parts)

    def __le__(self, other: "Partition") -> bool:
        # containment of Young diagrams
        return all(self.part(i) <= other.part(i) for i in range(1, len(self) + 1))

    def __repr__(self):
        return "(" + ",".join(map(str, self.parts)) + ")"


class Multipartition:
    """Tuple of partitions; one component per chosen color."""

    __slots__ = ("components",)

    def __init__(self, components: Iterable):
        self.components = tuple(
            c if isinstance(c, Partition) else Partition(c) for c in components
        )

    @property
    def size(self) -> int:
        return sum(c.size for c in self.components)

    def __len__(self):
        return len(self.components)

    def __getitem__(self, i):
        return self.components[i]

    def __iter__(self):
        return iter(self.components)

    def transpose(self) -> "Multipartition":
        return Multipartition(c.transpose() for c in self.components)

    def __eq__(self, other):
        return isinstance(other, Multipartition) and self.components == other.components

    def __hash__(self):
        return hash(self.components)

    def __repr__(self):
        return "[" + "|".join(repr(c) for c in self.components) + "]"


def partitions_of(n: int) -> Iterator[Partition]:
    def gen(remaining, cap):
        if remaining == 0:
            yield ()
            return
        for first in range(min(remaining, cap), 0, -1):
            for rest in gen(remaining - first, first):
                yield (first,) + rest

    for parts in gen(n, n):
        yield Partition(parts)


def partitions_in_box(rows: int, cols: int) -> Iterator[Partition]:
    """All partitions with at most `rows` parts, each at most `cols`."""

    def gen(row, cap):
        if row == 0:
            yield ()
            return
        for first in range(cap, -1, -1):
            for rest in gen(row - 1, first):
                yield (first,) + rest

    for parts in gen(rows, cols):
        yield Partition(parts)


# ---------------------------------------------------------------------------
# P_n(A): tensors with polynomial coefficients


def _monomial_divided_difference(alpha: tuple, i: int) -> List[Tuple[tuple, int]]:
    """(x^alpha - s_i(x^alpha)) / (x_{i+1} - x_i) as signed monomials."""
    a, b = alpha[i - 1], alpha[i]
    if a == b:
        return []
    out = []
    if a < b:
        for t in range(b - a):
            beta = list(alpha)
            beta[i - 1], beta[i] = a + t, b - 1 - t
            out.append((tuple(beta), 1))
    else:
        for t in range(a - b):
            beta = list(alpha)
            beta[i - 1], beta[i] = b + t, a - 1 - t
            out.append((tuple(beta), -1))
    return out


class PolyTensor:
    """Element of A^(x)n tensor Q[x_1..x_n].

    Keys are (alpha, labels): exponent vector alpha indexed by factor
    number (alpha[0] goes with x_1) and a written-order label tuple.
    """

    __slots__ = ("alg", "n", "terms")

    def __init__(self, alg: FrobeniusAlgebra, n: int, terms: Dict[tuple, Rat]):
        self.alg = alg
        self.n = n
        self.terms = {
            k: v if isinstance(v, Fraction) else Fraction(v)
            for k, v in terms.items()
            if v
        }

    @staticmethod
    def one(alg: FrobeniusAlgebra, n: int) -> "PolyTensor":
        return PolyTensor.from_tensor(TensorElement.one(alg, n))

    @staticmethod
    def from_tensor(t: TensorElement, alpha: Optional[tuple] = None) -> "PolyTensor":
        alpha = alpha if alpha is not None else (0,) * t.n
        return PolyTensor(t.alg, t.n, {(alpha, labels): c for labels, c in t.coeffs.items()})

    @staticmethod
    def variable(alg: FrobeniusAlgebra, n: int, j: int) -> "PolyTensor":
        alpha = tuple(1 if f == j else 0 for f in range(1, n + 1))
        return PolyTensor.from_tensor(TensorElement.one(alg, n), alpha)

    def __add__(self, other: "PolyTensor") -> "PolyTensor":
        assert self.n == other.n
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        return PolyTensor(self.alg, self.n, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return PolyTensor(self.alg, self.n, {k: -c for k, c in self.terms.items()})

    def scale(self, c) -> "PolyTensor":
        c = Fraction(c)
        return PolyTensor(self.alg, self.n, {k: c * v for k, v in self.terms.items()})

    def __mul__(self, other: "PolyTensor") -> "PolyTensor":
        assert self.n == other.n
        out: Dict[tuple, Fraction] = {}
        for (al1, t1), c1 in self.terms.items():
            e1 = TensorElement(self.alg, self.n, {t1: 1})
            for (al2, t2), c2 in other.terms.items():
                e2 = TensorElement(self.alg, self.n, {t2: 1})
                alpha = tuple(a + b for a, b in zip(al1, al2))
                for t3, c3 in (e1 * e2).coeffs.items():
                    key = (alpha, t3)
                    out[key] = out.get(key, Fraction(0)) + c1 * c2 * c3
        return PolyTensor(self.alg, self.n, out)

    def __eq__(self, other):
        if not isinstance(other, PolyTensor):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __hash__(self):
        return hash((self.n, tuple(sorted(self.terms.items()))))

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def poly_degree(self) -> int:
        return max((sum(a) for a, _t in self.terms), default=0)

    def tensor_part(self) -> TensorElement:
        """Only valid when no variables appear."""
        assert all(not any(a) for a, _t in self.terms)
        return TensorElement(self.alg, self.n, {t: c for (_a, t), c in self.terms.items()})

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for (alpha, labels), c in sorted(self.terms.items()):
            xs = "*".join(
                f"x{j}" if e == 1 else f"x{j}^{e}"
                for j, e in enumerate(alpha, start=1)
                if e
            )
            body = "(" + " (x) ".join(labels) + ")"
            piece = "*".join(p for p in [xs, body] if p)
            parts.append(piece if c == 1 else f"{c}*{piece}")
        return " + ".join(parts)


def sym_act(sigma: Perm, v):
    """Signed permutation action on A^(x)n or on P_n(A)."""
    if isinstance(v, TensorElement):
        if sigma.n != v.n:
            raise ValueError("size mismatch")
        return v.permute({f: sigma(f) for f in range(1, v.n + 1)})
    if isinstance(v, PolyTensor):
        if sigma.n != v.n:
            raise ValueError("size mismatch")
        out: Dict[tuple, Fraction] = {}
        mapping = {f: sigma(f) for f in range(1, v.n + 1)}
        for (alpha, labels), c in v.terms.items():
            beta = [0] * v.n
            for j in range(1, v.n + 1):
                beta[sigma(j) - 1] = alpha[j - 1]
            moved = TensorElement(v.alg, v.n, {labels: c}).permute(mapping)
            for t, c2 in moved.coeffs.items():
                key = (tuple(beta), t)
                out[key] = out.get(key, Fraction(0)) + c2
        return PolyTensor(v.alg, v.n, out)
    raise TypeError(f"cannot act on {type(v).__name__}")


def demazure(i: int, f: PolyTensor) -> PolyTensor:
    """tau_i a (p - s_i(p)) / (x_{i+1} - x_i), extended linearly."""
    if not (1 <= i <= f.n - 1):
        raise ValueError(f"index {i} out of range for n={f.n}")
    tau = tau_element(f.alg, f.n, i, i + 1)
    out = PolyTensor(f.alg, f.n, {})
    for (alpha, labels), c in f.terms.items():
        dd = _monomial_divided_difference(alpha, i)
        if not dd:
            continue
        moved = tau * TensorElement(f.alg, f.n, {labels: c})
        for beta, sgn in dd:
            out = out + PolyTensor.from_tensor(moved.scale(sgn), beta)
    return out


# ---------------------------------------------------------------------------
# Wr_n(A)


class WreathElement:
    """Finite map sigma -> A^(x)n coefficient."""

    __slots__ = ("alg", "n", "terms")

    def __init__(self, alg: FrobeniusAlgebra, n: int, terms: Dict[Perm, TensorElement]):
        self.alg = alg
        self.n = n
        self.terms = {s: t for s, t in terms.items() if not t.is_zero()}

    @staticmethod
    def one(alg: FrobeniusAlgebra, n: int) -> "WreathElement":
        return WreathElement(alg, n, {Perm.identity(n): TensorElement.one(alg, n)})

    @staticmethod
    def from_perm(alg: FrobeniusAlgebra, sigma: Perm) -> "WreathElement":
        return WreathElement(alg, sigma.n, {sigma: TensorElement.one(alg, sigma.n)})

    @staticmethod
    def from_tensor(t: TensorElement) -> "WreathElement":
        return WreathElement(t.alg, t.n, {Perm.identity(t.n): t})

    def __add__(self, other: "WreathElement") -> "WreathElement":
        assert self.n == other.n
        out = dict(self.terms)
        for s, t in other.terms.items():
            out[s] = out[s] + t if s in out else t
        return WreathElement(self.alg, self.n, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "WreathElement":
        return WreathElement(self.alg, self.n, {s: t.scale(c) for s, t in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, WreathElement):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def __bool__(self):
        return bool(self.terms)

    def is_zero(self):
        return not self.terms

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for s in sorted(self.terms, key=lambda p: p.images):
            for labels, c in sorted(self.terms[s].coeffs.items()):
                body = "(" + " (x) ".join(labels) + ")"
                if not s.is_identity():
                    body += f"*{s.cycle_str()}"
                parts.append(body if c == 1 else f"{c}*{body}")
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                {
                    "perm": list(s.images),
                    "tensor": [
                        {"labels": list(t), "c": str(c)}
                        for t, c in sorted(self.terms[s].coeffs.items())
                    ],
                }
                for s in sorted(self.terms, key=lambda p: p.images)
            ],
        }


def wreath_mul(u: WreathElement, v: WreathElement) -> WreathElement:
    """(a sigma)(b tau) = a sigma(b) (sigma tau)."""
    if u.n != v.n:
        raise ValueError("size mismatch")
    out: Dict[Perm, TensorElement] = {}
    for s, a in u.terms.items():
        for t, b in v.terms.items():
            coeff = a * sym_act(s, b)
            st = s * t
            out[st] = out[st] + coeff if st in out else coeff
    return WreathElement(u.alg, u.n, out)


def young_idempotent(
    A: FrobeniusAlgebra, shape: Partition, color: Optional[int] = None
) -> WreathElement:
    """Primitive idempotent of Q S_n attached to `shape`, built from the

    row/column symmetrizers of the tableau filled row by row, normalized
    by hooks; multiplied by e_color^(x)n when a color is given."""
    if not isinstance(shape, Partition):
        shape = Partition(shape)
    n = shape.size
    if n == 0:
        raise ValueError("empty shape")

    rows: List[List[int]] = []
    nxt = 1
    for p in shape.parts:
        rows.append(list(range(nxt, nxt + p)))
        nxt += p
    cols: List[List[int]] = []
    for j in range(shape.parts[0]):
        cols.append([row[j] for row in rows if len(row) > j])

    def stabilizer(blocks: List[List[int]]) -> Iterator[Perm]:
        perms_per_block = [list(itertools.permutations(b)) for b in blocks]
        for choice in itertools.product(*perms_per_block):
            img = list(range(1, n + 1))
            for block, perm in zip(blocks, choice):
                for src, dst in zip(block, perm):
                    img[src - 1] = dst
            yield Perm(img)

    row_sym = WreathElement(A, n, {})
    for s in stabilizer(rows):
        row_sym = row_sym + WreathElement.from_perm(A, s)
    col_sym = WreathElement(A, n, {})
    for s in stabilizer(cols):
        col_sym = col_sym + WreathElement.from_perm(A, s).scale(s.sign())

    fac = 1
    for k in range(2, n + 1):
        fac *= k
    e = wreath_mul(row_sym, col_sym).scale(
        Fraction(shape.standard_tableau_count(), fac)
    )
    if color is not None:
        if not A.idempotents or not (1 <= color <= len(A.idempotents)):
            raise ValueError(f"invalid color {color}")
        ec = A.idempotents[color - 1]
        e = wreath_mul(e, WreathElement.from_tensor(TensorElement.from_factors([ec] * n)))
    return e


# ---------------------------------------------------------------------------
# AWr_n(A)


class AffineElement:
    """Finite map sigma -> PolyTensor, representing sum f_sigma * sigma."""

    __slots__ = ("alg", "n", "terms")

    def __init__(self, alg: FrobeniusAlgebra, n: int, terms: Dict[Perm, PolyTensor]):
        self.alg = alg
        self.n = n
        self.terms = {s: f for s, f in terms.items() if not f.is_zero()}

    @staticmethod
    def one(alg: FrobeniusAlgebra, n: int) -> "AffineElement":
        return AffineElement(alg, n, {Perm.identity(n): PolyTensor.one(alg, n)})

    @staticmethod
    def from_poly(f: PolyTensor) -> "AffineElement":
        return AffineElement(f.alg, f.n, {Perm.identity(f.n): f})

    @staticmethod
    def from_perm(alg: FrobeniusAlgebra, sigma: Perm) -> "AffineElement":
        return AffineElement(alg, sigma.n, {sigma: PolyTensor.one(alg, sigma.n)})

    @staticmethod
    def from_wreath(w: WreathElement) -> "AffineElement":
        return AffineElement(
            w.alg, w.n, {s: PolyTensor.from_tensor(t) for s, t in w.terms.items()}
        )

    @staticmethod
    def variable(alg: FrobeniusAlgebra, n: int, j: int) -> "AffineElement":
        return AffineElement.from_poly(PolyTensor.variable(alg, n, j))

    def __add__(self, other: "AffineElement") -> "AffineElement":
        assert self.n == other.n
        out = dict(self.terms)
        for s, f in other.terms.items():
            out[s] = out[s] + f if s in out else f
        return AffineElement(self.alg, self.n, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "AffineElement":
        return AffineElement(self.alg, self.n, {s: f.scale(c) for s, f in self.terms.items()})

    def __eq__(self, other):
        if not isinstance(other, AffineElement):
            return NotImplemented
        return self.n == other.n and self.terms == other.terms

    def is_zero(self):
        return not self.terms

    def wreath_part(self) -> WreathElement:
        return WreathElement(self.alg, self.n, {s: f.tensor_part() for s, f in self.terms.items()})

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for s in sorted(self.terms, key=lambda p: p.images):
            for (alpha, labels), c in sorted(self.terms[s].terms.items()):
                xs = "*".join(
                    f"x{j}" if e == 1 else f"x{j}^{e}"
                    for j, e in enumerate(alpha, start=1)
                    if e
                )
                body = "(" + " (x) ".join(labels) + ")"
                piece = "*".join(p for p in [xs, body] if p)
                if not s.is_identity():
                    piece += f"*{s.cycle_str()}"
                parts.append(piece if c == 1 else f"{c}*{piece}")
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "terms": [
                {
                    "perm": list(s.images),
                    "poly": [
                        {"alpha": list(alpha), "labels": list(labels), "c": str(c)}
                        for (alpha, labels), c in sorted(self.terms[s].terms.items())
                    ],
                }
                for s in sorted(self.terms, key=lambda p: p.images)
            ],
        }


def _apply_simple_left(i: int, elem: AffineElement) -> AffineElement:
    # s_i (f sigma) = s_i(f) (s_i sigma) + demazure_i(f) sigma
    si = Perm.simple(elem.n, i)
    out: Dict[Perm, PolyTensor] = {}

    def acc(sigma, f):
        if sigma in out:
            out[sigma] = out[sigma] + f
        else:
            out[sigma] = f

    for sigma, f in elem.terms.items():
        acc(si * sigma, sym_act(si, f))
        d = demazure(i, f)
        if not d.is_zero():
            acc(sigma, d)
    return AffineElement(elem.alg, elem.n, out)


def affine_mul(u: AffineElement, v: AffineElement) -> AffineElement:
    if u.n != v.n:
        raise ValueError("size mismatch")
    out = AffineElement(u.alg, u.n, {})
    for sigma, f in u.terms.items():
        # u-term acts from the left: sigma = s_{w0} s_{w1} ..., so the last
        # letter lands on v first
        acted = v
        for i in reversed(sigma.reduced_word()):
            acted = _apply_simple_left(i, acted)
        for tau, g in acted.terms.items():
            h = f * g
            out = out + AffineElement(u.alg, u.n, {tau: h})
    return out


# ---------------------------------------------------------------------------
# rational coefficients and the star actions


_SYMS: Dict[int, tuple] = {}


def x_symbols(n: int) -> tuple:
    if n not in _SYMS:
        _SYMS[n] = sympy.symbols(f"x1:{n + 1}") if n else ()
    return _SYMS[n]


def _to_expr(c) -> sympy.Expr:
    if isinstance(c, Fraction):
        return sympy.Rational(c.numerator, c.denominator)
    return sympy.sympify(c)


class RationalAffine:
    """Element of A^(x)n tensor Q(x_1..x_n): label tuple -> rational function."""

    __slots__ = ("alg", "n", "terms")

    def __init__(self, alg: FrobeniusAlgebra, n: int, terms: Dict[tuple, sympy.Expr]):
        self.alg = alg
        self.n = n
        cleaned = {}
        for t, e in terms.items():
            e = sympy.cancel(_to_expr(e))
            if e != 0:
                cleaned[t] = e
        self.terms = cleaned

    @staticmethod
    def zero(alg, n):
        return RationalAffine(alg, n, {})

    @staticmethod
    def one(alg, n):
        return RationalAffine.from_tensor(TensorElement.one(alg, n))

    @staticmethod
    def from_tensor(t: TensorElement, coeff=1) -> "RationalAffine":
        coeff = _to_expr(coeff)
        return RationalAffine(
            t.alg, t.n, {labels: _to_expr(c) * coeff for labels, c in t.coeffs.items()}
        )

    @staticmethod
    def from_poly_tensor(f: PolyTensor) -> "RationalAffine":
        xs = x_symbols(f.n)
        out: Dict[tuple, sympy.Expr] = {}
        for (alpha, labels), c in f.terms.items():
            mono = _to_expr(c)
            for j, e in enumerate(alpha):
                if e:
                    mono *= xs[j] ** e
            out[labels] = out.get(labels, sympy.Integer(0)) + mono
        return RationalAffine(f.alg, f.n, out)

    def __add__(self, other: "RationalAffine") -> "RationalAffine":
        assert self.n == other.n
        out = dict(self.terms)
        for t, e in other.terms.items():
            out[t] = out.get(t, sympy.Integer(0)) + e
        return RationalAffine(self.alg, self.n, out)

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c) -> "RationalAffine":
        c = _to_expr(c)
        return RationalAffine(self.alg, self.n, {t: c * e for t, e in self.terms.items()})

    def __mul__(self, other: "RationalAffine") -> "RationalAffine":
        assert self.n == other.n
        out: Dict[tuple, sympy.Expr] = {}
        for t1, e1 in self.terms.items():
            u1 = TensorElement(self.alg, self.n, {t1: 1})
            for t2, e2 in other.terms.items():
                u2 = TensorElement(self.alg, self.n, {t2: 1})
                for t3, c3 in (u1 * u2).coeffs.items():
                    out[t3] = out.get(t3, sympy.Integer(0)) + e1 * e2 * _to_expr(c3)
        return RationalAffine(self.alg, self.n, out)

    def __eq__(self, other):
        if not isinstance(other, RationalAffine):
            return NotImplemented
        if self.n != other.n:
            return False
        keys = set(self.terms) | set(other.terms)
        for t in keys:
            diff = sympy.cancel(
                self.terms.get(t, sympy.Integer(0)) - other.terms.get(t, sympy.Integer(0))
            )
            if diff != 0:
                return False
        return True

    def is_zero(self):
        return not self.terms

    def _swap_vars(self, e: sympy.Expr, i: int) -> sympy.Expr:
        xs = x_symbols(self.n)
        return e.subs([(xs[i - 1], xs[i]), (xs[i], xs[i - 1])], simultaneous=True)

    def plain_act(self, i: int) -> "RationalAffine":
        """s_i acting by permuting factors and swapping x_i, x_{i+1}."""
        mapping = {i: i + 1, i + 1: i}
        out: Dict[tuple, sympy.Expr] = {}
        for t, e in self.terms.items():
            moved = TensorElement(self.alg, self.n, {t: 1}).permute(mapping)
            e2 = self._swap_vars(e, i)
            for t2, c2 in moved.coeffs.items():
                out[t2] = out.get(t2, sympy.Integer(0)) + e2 * _to_expr(c2)
        return RationalAffine(self.alg, self.n, out)

    def demazure_rational(self, i: int) -> "RationalAffine":
        xs = x_symbols(self.n)
        tau = tau_element(self.alg, self.n, i, i + 1)
        out = RationalAffine.zero(self.alg, self.n)
        for t, e in self.terms.items():
            q = sympy.cancel((e - self._swap_vars(e, i)) / (xs[i] - xs[i - 1]))
            if q == 0:
                continue
            moved = tau * TensorElement(self.alg, self.n, {t: 1})
            out = out + RationalAffine.from_tensor(moved, q)
        return out

    def __repr__(self):
        if not self.terms:
            return "0"
        parts = []
        for t, e in sorted(self.terms.items()):
            parts.append(f"({e})*(" + " (x) ".join(t) + ")")
        return " + ".join(parts)


def star_act(sign: str, sigma: Perm, f):
    """sigma acting via s_i * f = s_i(f) +- demazure_i(f), iterated."""
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    if isinstance(f, PolyTensor):
        if sigma.n != f.n:
            raise ValueError("size mismatch")
        out = f
        for i in reversed(sigma.reduced_word()):
            d = demazure(i, out)
            out = sym_act(Perm.simple(f.n, i), out)
            out = out + d if sign == "+" else out - d
        return out
    if isinstance(f, RationalAffine):
        if sigma.n != f.n:
            raise ValueError("size mismatch")
        out = f
        for i in reversed(sigma.reduced_word()):
            d = out.demazure_rational(i)
            out = out.plain_act(i)
            out = out + d if sign == "+" else out - d
        return out
    raise TypeError(f"cannot act on {type(f).__name__}")


# ---------------------------------------------------------------------------
# the wrap identity


def _tau_rational(A: FrobeniusAlgebra, n: int, i: int, j: int) -> RationalAffine:
    return RationalAffine.from_tensor(tau_element(A, n, i, j))


def wrap_sum(A: FrobeniusAlgebra, n: int, r: int, sign: str) -> RationalAffine:
    """sum_{sigma in S_r x S_{n-r}} sum_{la in box} sigma star (y_la z_la).

    Expected value: n! times the identity tensor.
    """
    if not (0 <= r <= n):
        raise ValueError("need 0 <= r <= n")
    if sign not in ("+", "-"):
        raise ValueError("sign must be '+' or '-'")
    xs = x_symbols(n)

    def xdiff(i, j):  # x_{r+1-i} - x_{r+j}
        return xs[r - i] - xs[r + j - 1]

    out = RationalAffine.zero(A, n)
    one = RationalAffine.one(A, n)
    for lam in partitions_in_box(r, n - r):
        y = one
        for i in range(1, r + 1):
            for j in range(1, n - r + 1):
                if j <= lam.part(i):
                    tau = _tau_rational(A, n, r + 1 - i, r + j)
                    if sign == "+":
                        y = y * (tau + one.scale(xdiff(i, j)))
                    else:
                        y = y * (tau - one.scale(xdiff(i, j)))
        z = one
        for i in range(r, 0, -1):
            for j in range(n - r, 0, -1):
                if j <= lam.part(i):
                    z = z * one.scale(
                        1 / xdiff(i, j) if sign == "+" else -1 / xdiff(i, j)
                    )
                else:
                    tau = _tau_rational(A, n, r + 1 - i, r + j)
                    if sign == "+":
                        z = z - z * tau.scale(1 / xdiff(i, j))
                    else:
                        z = z + z * tau.scale(1 / xdiff(i, j))
        # global signs on y and z in the minus case cancel in the product
        yz = y * z
        for sigma in young_subgroup(n, r):
            out = out + star_act(sign, sigma, yz)
    return out
