"""Exact arithmetic in the ground ring Q[q,q^-1] (x) Z[pi]/(pi^2 - 1).

A scalar is a finite sum  c * q^n * pi^p  with rational c, integer n and
p in {0, 1}.  The relation pi^2 = 1 is built into the (n, p) indexing.
All operations are pure and return new values; instances are immutable
and hashable once constructed.
"""

from __future__ import annotations

from fractions import Fraction
from typing import Iterable, Mapping, Tuple, Union

Key = Tuple[int, int]  # (q-exponent, pi-parity)
Rat = Union[int, Fraction]


class Scalar:
    __slots__ = ("terms", "_hash")

    def __init__(self, terms: Mapping[Key, Rat] = ()):
        clean = {}
        for (n, p), c in dict(terms).items():
            c = Fraction(c)
            if c:
                clean[(int(n), int(p) & 1)] = c
        # canonical order for printing/hashing
        self.terms = dict(sorted(clean.items()))
        self._hash = None

    # -- constructors ------------------------------------------------

    @staticmethod
    def zero() -> "Scalar":
        return Scalar()

    @staticmethod
    def one() -> "Scalar":
        return Scalar({(0, 0): 1})

    @staticmethod
    def from_rat(c: Rat) -> "Scalar":
        return Scalar({(0, 0): Fraction(c)})

    @staticmethod
    def q(n: int = 1) -> "Scalar":
        return Scalar({(n, 0): 1})

    @staticmethod
    def pi() -> "Scalar":
        return Scalar({(0, 1): 1})

    @staticmethod
    def monomial(c: Rat, n: int = 0, p: int = 0) -> "Scalar":
        return Scalar({(n, p): Fraction(c)})

    # -- ring structure ----------------------------------------------

    def __add__(self, other: "Scalar") -> "Scalar":
        other = _coerce(other)
        out = dict(self.terms)
        for k, c in other.terms.items():
            out[k] = out.get(k, Fraction(0)) + c
        return Scalar(out)

    __radd__ = __add__

    def __neg__(self) -> "Scalar":
        return Scalar({k: -c for k, c in self.terms.items()})

    def __sub__(self, other: "Scalar") -> "Scalar":
        return self + (-_coerce(other))

    def __rsub__(self, other) -> "Scalar":
        return _coerce(other) - self

    def __mul__(self, other) -> "Scalar":
        other = _coerce(other)
        out: dict = {}
        for (n1, p1), c1 in self.terms.items():
            for (n2, p2), c2 in other.terms.items():
                k = (n1 + n2, (p1 + p2) & 1)  # pi^2 = 1
                out[k] = out.get(k, Fraction(0)) + c1 * c2
        return Scalar(out)

    __rmul__ = __mul__

    def __pow__(self, r: int) -> "Scalar":
        if r < 0:
            raise ValueError("negative powers only for monomials via inverse()")
        out = Scalar.one()
        for _ in range(r):
            out = out * self
        return out

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = Scalar.from_rat(other)
        if not isinstance(other, Scalar):
            return NotImplemented
        return self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            object.__setattr__(self, "_hash", hash(tuple(self.terms.items())))
        return self._hash

    def __bool__(self) -> bool:
        return bool(self.terms)

    def is_zero(self) -> bool:
        return not self.terms

    # -- structure maps ----------------------------------------------

    def bar(self) -> "Scalar":
        """The involution q -> q^-1, pi -> pi."""
        return Scalar({(-n, p): c for (n, p), c in self.terms.items()})

    def subst_q_power(self, m: int) -> "Scalar":
        """q -> q^m (pi untouched).  Ring endomorphism for every m."""
        out: dict = {}
        for (n, p), c in self.terms.items():
            k = (n * m, p)
            out[k] = out.get(k, Fraction(0)) + c
        return Scalar(out)

    def at_q_one(self) -> "Scalar":
        """Specialize q = 1, keeping pi."""
        return self.subst_q_power(0)

    def coeff(self, n: int, p: int = 0) -> Fraction:
        return self.terms.get((n, p & 1), Fraction(0))

    def constant_term(self) -> Fraction:
        return self.coeff(0, 0)

    def has_integer_coeffs(self) -> bool:
        return all(c.denominator == 1 for c in self.terms.values())

    def min_q_degree(self) -> int:
        if not self.terms:
            return 0
        return min(n for (n, _p) in self.terms)

    def max_q_degree(self) -> int:
        if not self.terms:
            return 0
        return max(n for (n, _p) in self.terms)

    # -- rendering ---------------------------------------------------

    def __repr__(self):
        return f"Scalar({self})"

    def __str__(self):
        if not self.terms:
            return "0"
        parts = []
        for (n, p), c in self.terms.items():
            factors = []
            if c != 1 or (n == 0 and p == 0):
                factors.append(str(c))
            if n != 0:
                factors.append(f"q^{n}" if n != 1 else "q")
            if p:
                factors.append("pi")
            parts.append("*".join(factors))
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {
            "terms": [
                {"q": n, "pi": p, "c": str(c)} for (n, p), c in self.terms.items()
            ]
        }

    @staticmethod
    def from_json(data: dict) -> "Scalar":
        out: dict = {}
        for t in data["terms"]:
            k = (int(t["q"]), int(t["pi"]) & 1)
            out[k] = out.get(k, Fraction(0)) + Fraction(t["c"])
        return Scalar(out)


def _coerce(x) -> Scalar:
    if isinstance(x, Scalar):
        return x
    if isinstance(x, (int, Fraction)):
        return Scalar.from_rat(x)
    raise TypeError(f"cannot coerce {type(x).__name__} to Scalar")


ZERO = Scalar.zero()
ONE = Scalar.one()
PI = Scalar.pi()


def quantum_int(k: int, d: int) -> Scalar:
    """Balanced quantum integer [k]_d = q^{(k-1)d} + q^{(k-3)d} + ... + q^{-(k-1)d}.

    [0]_d = 0, and [-k]_d = -[k]_d (each value is bar-invariant).
    At d = 0 this is the integer k.
    """
    if k < 0:
        return -quantum_int(-k, d)
    out: dict = {}
    for i in range(k):
        n = (k - 1 - 2 * i) * d
        out[(n, 0)] = out.get((n, 0), Fraction(0)) + 1
    return Scalar(out)


def _u_series_mul(f: list, g: list, order: int) -> list:
    out = [Scalar.zero() for _ in range(order + 1)]
    for i, a in enumerate(f):
        if a.is_zero():
            continue
        for j, b in enumerate(g):
            if i + j > order:
                break
            out[i + j] = out[i + j] + a * b
    return out


def _binom_general(m: int, j: int) -> Fraction:
    # m(m-1)...(m-j+1)/j!, valid for negative m
    num = Fraction(1)
    for t in range(j):
        num *= Fraction(m - t, t + 1)
    return num


def lambda_r(z: Scalar, r: int) -> Scalar:
    """Coefficient of u^r in prod_n (1+q^n u)^{z_{n,0}} / (1 - q^n pi u)^{z_{n,1}}.

    Requires z to have integer coefficients (they become exponents).
    For constant integer z = m this is binomial(m, r).
    """
    if r < 0:
        return Scalar.zero()
    z = _coerce(z)
    if not z.has_integer_coeffs():
        raise ValueError(f"lambda_r needs integer coefficients, got {z}")
    series = [Scalar.one()] + [Scalar.zero()] * r
    for (n, p), c in z.terms.items():
        m = int(c)
        if p == 0:
            # (1 + q^n u)^m
            factor = [
                Scalar.monomial(_binom_general(m, j), j * n, 0) for j in range(r + 1)
            ]
        else:
            # (1 - q^n pi u)^{-m}
            factor = [
                Scalar.monomial(_binom_general(-m, j) * (-1) ** j, j * n, j & 1)
                for j in range(r + 1)
            ]
        series = _u_series_mul(series, factor, r)
    return series[r]
