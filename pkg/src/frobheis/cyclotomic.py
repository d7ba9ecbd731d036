"""Cyclotomic quotients of affine wreath algebras.

A pair of monic polynomials f, g with even central coefficients in A
drives everything here: the quotient by f(x_1) has a finite PBW basis
with x-exponents below deg f, the ratio g/f expanded at infinity gives
the series whose coefficients evaluate closed diagrams, and the
relative position of the spectra of f and g decides whether the pair
is generic.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Dict, List, Optional, Tuple, Union

import sympy

from .frobenius import AlgebraElement, FrobeniusAlgebra, TensorElement, center_cocenter
from .wreath import (
    AffineElement,
    Perm,
    PolyTensor,
    demazure,
)


def _as_element(A: FrobeniusAlgebra, c) -> AlgebraElement:
    if isinstance(c, AlgebraElement):
        return c
    return A.one().scale(Fraction(c))


class CycloParams:
    """Monic f(u), g(u) with even central coefficients; k = deg g - deg f.

    Coefficient lists are ordered from the leading term down, so
    f_coeffs[s] multiplies u^{l-s} and f_coeffs[0] must be 1.
    """

    def __init__(self, A: FrobeniusAlgebra, f_coeffs, g_coeffs, check: bool = True):
        self.A = A
        self.f = [_as_element(A, c) for c in f_coeffs]
        self.g = [_as_element(A, c) for c in g_coeffs]
        if not self.f or not self.g:
            raise ValueError("f and g need at least the leading coefficient")
        if self.f[0] != A.one() or self.g[0] != A.one():
            raise ValueError("f and g must be monic")
        if check:
            cc = center_cocenter(A)
            for name, coeffs in [("f", self.f), ("g", self.g)]:
                for s, z in enumerate(coeffs):
                    if z.is_zero():
                        continue
                    if any(A.parity[l] for l in z.coeffs):
                        raise ValueError(f"{name}_{s} must be even")
                    if not cc.is_central(z):
                        raise ValueError(f"{name}_{s} must be central")
        self._rw: Dict[int, Dict[int, AffineElement]] = {}

    @property
    def l(self) -> int:
        return len(self.f) - 1

    @property
    def m(self) -> int:
        return len(self.g) - 1

    @property
    def k(self) -> int:
        return self.m - self.l

    def f_at(self, s: int) -> AlgebraElement:
        return self.f[s] if 0 <= s <= self.l else self.A.zero()

    def g_at(self, s: int) -> AlgebraElement:
        return self.g[s] if 0 <= s <= self.m else self.A.zero()

    def to_json(self) -> dict:
        # leading coefficient 1 left implicit
        return {
            "f": [c.to_json() for c in self.f[1:]],
            "g": [c.to_json() for c in self.g[1:]],
        }

    @staticmethod
    def from_json(A: FrobeniusAlgebra, data: dict) -> "CycloParams":
        def load(lst):
            tail = [
                A.element({l: Fraction(c) for l, c in e.items()}) for e in lst
            ]
            return [A.one()] + tail

        return CycloParams(A, load(data["f"]), load(data["g"]))

    def __repr__(self):
        return f"CycloParams(l={self.l}, m={self.m}, k={self.k})"


# ---------------------------------------------------------------------------
# PBW reduction


def _embed(A: FrobeniusAlgebra, n: int, j: int, z: AlgebraElement) -> TensorElement:
    factors = [A.one()] * n
    factors[j - 1] = z
    return TensorElement.from_factors(factors)


def _x_power(A: FrobeniusAlgebra, n: int, j: int, p: int) -> PolyTensor:
    alpha = tuple(p if f == j else 0 for f in range(1, n + 1))
    return PolyTensor.from_tensor(TensorElement.one(A, n), alpha)


def _rewrites(p: CycloParams, n: int) -> Dict[int, AffineElement]:
    """x_j^l expressed in the PBW basis of the quotient, for each j."""
    if n in p._rw:
        return p._rw[n]
    A, l = p.A, p.l
    from .wreath import affine_mul  # local import to keep module load light

    rules: Dict[int, AffineElement] = {}
    # f(x_1) = 0 directly
    r1 = AffineElement(A, n, {})
    for s in range(1, l + 1):
        if p.f[s].is_zero():
            continue
        term = PolyTensor.from_tensor(
            _embed(A, n, 1, p.f[s]),
        ) * _x_power(A, n, 1, l - s)
        r1 = r1 - AffineElement.from_poly(term)
    rules[1] = r1

    # f(x_j) = s f(x_{j-1}) s - sum_s pi_j(f_s) demazure(x_{j-1}^{l-s}) s
    f_prev = AffineElement(A, n, {})  # reduced form of f(x_1)
    for j in range(2, n + 1):
        sj = AffineElement.from_perm(A, Perm.simple(n, j - 1))
        fj = affine_mul(affine_mul(sj, f_prev), sj)
        for s in range(0, l + 1):
            if p.f[s].is_zero():
                continue
            d = demazure(j - 1, _x_power(A, n, j - 1, l - s))
            if d.is_zero():
                continue
            term = PolyTensor.from_tensor(_embed(A, n, j, p.f[s])) * d
            fj = fj - affine_mul(AffineElement.from_poly(term), sj)
        rj = fj
        for s in range(1, l + 1):
            if p.f[s].is_zero():
                continue
            term = PolyTensor.from_tensor(_embed(A, n, j, p.f[s])) * _x_power(
                A, n, j, l - s
            )
            rj = rj - AffineElement.from_poly(term)
        rules[j] = rj
        f_prev = fj
    p._rw[n] = rules
    return rules


def _shift_exponents(elem: AffineElement, shift: tuple) -> AffineElement:
    out: Dict[Perm, PolyTensor] = {}
    for sigma, poly in elem.terms.items():
        terms = {}
        for (alpha, labels), c in poly.terms.items():
            beta = tuple(a + s for a, s in zip(alpha, shift))
            terms[(beta, labels)] = terms.get((beta, labels), Fraction(0)) + c
        out[sigma] = PolyTensor(elem.alg, elem.n, terms)
    return AffineElement(elem.alg, elem.n, out)


def cyclo_reduce(p: CycloParams, elem: AffineElement) -> AffineElement:
    """Unique representative with all x-exponents below deg f."""
    n = elem.n
    A, l = p.A, p.l
    if l == 0:
        return AffineElement(A, n, {})
    from .wreath import affine_mul

    rules = _rewrites(p, n)
    result = AffineElement(A, n, {})
    work: List[AffineElement] = [elem]
    while work:
        e = work.pop()
        for sigma, poly in e.terms.items():
            for (alpha, labels), c in poly.terms.items():
                j = next(
                    (jj for jj in range(1, n + 1) if alpha[jj - 1] >= l), None
                )
                piece = AffineElement(
                    A, n, {sigma: PolyTensor(A, n, {(alpha, labels): c})}
                )
                if j is None:
                    result = result + piece
                    continue
                rest = list(alpha)
                rest[j - 1] -= l
                tail = AffineElement(
                    A,
                    n,
                    {sigma: PolyTensor(A, n, {(((0,) * n), labels): c})},
                )
                replaced = affine_mul(rules[j], tail)
                work.append(_shift_exponents(replaced, tuple(rest)))
    return result


def cyclo_dim(p: CycloParams, n: int) -> int:
    """Size of the PBW basis: l^n (dim A)^n n!."""
    return (p.l ** n) * (p.A.dim ** n) * math.factorial(n)


def pbw_basis_keys(p: CycloParams, n: int):
    """All (alpha, labels, perm) keys of the reduced basis, in sorted order."""
    import itertools

    from .wreath import all_perms

    alphas = itertools.product(range(p.l), repeat=n)
    for alpha in alphas:
        for labels in itertools.product(p.A.labels, repeat=n):
            for sigma in all_perms(n):
                yield (alpha, labels, sigma)


# ---------------------------------------------------------------------------
# the series g/f and bubble values


class OmegaSeries:
    """Coefficients of g/f and of its negated inverse, expanded at u = infinity.

    omega[r] is the coefficient of u^{-r-1} in g/f (nonzero from r = -k-1);
    tilde[r] is defined by f/g = -sum_r tilde[r] u^{-r-1}, so tilde[k-1] = -1.
    """

    def __init__(self, A: FrobeniusAlgebra, k: int, order: int,
                 omega: Dict[int, AlgebraElement], tilde: Dict[int, AlgebraElement]):
        self.A = A
        self.k = k
        self.order = order
        self.omega = omega
        self.tilde = tilde

    def omega_at(self, r: int) -> AlgebraElement:
        assert r <= self.order, "beyond truncation order"
        return self.omega.get(r, self.A.zero())

    def tilde_at(self, r: int) -> AlgebraElement:
        assert r <= self.order, "beyond truncation order"
        return self.tilde.get(r, self.A.zero())


def _series_quotient(A, num: List[AlgebraElement], den: List[AlgebraElement],
                     count: int) -> List[AlgebraElement]:
    """Coefficients c_j of (num normalized)/(den normalized) in u^{-j}.

    num = u^m (1 + n_1 u^{-1} + ...), den = u^l (1 + d_1 u^{-1} + ...);
    returns the series (1 + n u^{-1}...)/(1 + d u^{-1}...) to `count` terms.
    """
    inv = [A.one()]
    for j in range(1, count):
        acc = A.zero()
        for s in range(1, min(j, len(den) - 1) + 1):
            acc = acc + den[s] * inv[j - s]
        inv.append(acc.scale(-1))
    out = []
    for j in range(count):
        acc = A.zero()
        for t in range(0, min(j, len(num) - 1) + 1):
            acc = acc + num[t] * inv[j - t]
        out.append(acc)
    return out


def o_series(p: CycloParams, order: int) -> OmegaSeries:
    if order < 0:
        raise ValueError("order must be nonnegative")
    A, k = p.A, p.k
    count_o = order + k + 2  # covers r in [-k-1, order]
    omega: Dict[int, AlgebraElement] = {}
    if count_o > 0:
        cs = _series_quotient(A, p.g, p.f, count_o)
        for j, c in enumerate(cs):
            r = j - k - 1
            if not c.is_zero():
                omega[r] = c
    count_t = order - k + 2  # covers r in [k-1, order]
    tilde: Dict[int, AlgebraElement] = {}
    if count_t > 0:
        ds = _series_quotient(A, p.f, p.g, count_t)
        for j, d in enumerate(ds):
            r = j + k - 1
            if not d.is_zero():
                tilde[r] = d.scale(-1)
    return OmegaSeries(A, k, order, omega, tilde)


class BubbleTable:
    """Scalar values tr(omega_r a) (counterclockwise) and tr(tilde_r a)."""

    def __init__(self, k: int, order: int, ccw: Dict[int, Fraction], cw: Dict[int, Fraction]):
        self.k = k
        self.order = order
        self.ccw = ccw
        self.cw = cw

    def ccw_at(self, r: int) -> Fraction:
        assert r <= self.order
        return self.ccw.get(r, Fraction(0))

    def cw_at(self, r: int) -> Fraction:
        assert r <= self.order
        return self.cw.get(r, Fraction(0))


def bubble_values(p: CycloParams, a: AlgebraElement, order: int) -> BubbleTable:
    if not a.is_homogeneous():
        raise ValueError("bubble_values needs a homogeneous element")
    series = o_series(p, order)
    ccw = {}
    for r in range(-p.k - 1, order + 1):
        v = (series.omega_at(r) * a).trace()
        if v:
            ccw[r] = v
    cw = {}
    for r in range(p.k - 1, order + 1):
        v = (series.tilde_at(r) * a).trace()
        if v:
            cw[r] = v
    return BubbleTable(p.k, order, ccw, cw)


# ---------------------------------------------------------------------------
# genericity


class GenericityReport:
    """verdict in {"generic", "not_generic", "indeterminate"} plus data.

    gamma_generator c means the relevant eigenvalue subgroup meets Q in cZ;
    witness, when not generic, is (shift, common factor as string).
    """

    def __init__(self, verdict, gamma_generator, xi_f, xi_g, witness, reason):
        self.verdict: str = verdict
        self.gamma_generator: Optional[Fraction] = gamma_generator
        self.xi_f: str = xi_f
        self.xi_g: str = xi_g
        self.witness: Optional[Tuple[int, str]] = witness
        self.reason: str = reason

    @property
    def is_generic(self) -> Optional[bool]:
        if self.verdict == "generic":
            return True
        if self.verdict == "not_generic":
            return False
        return None

    def lines(self) -> List[str]:
        out = [f"verdict: {self.verdict}"]
        if self.gamma_generator is not None:
            out.append(f"gamma: {self.gamma_generator}*Z")
        out.append(f"spectrum_f: {self.xi_f}")
        out.append(f"spectrum_g: {self.xi_g}")
        if self.witness is not None:
            out.append(f"witness: shift {self.witness[0]}, common factor {self.witness[1]}")
        if self.reason:
            out.append(f"reason: {self.reason}")
        return out


def _left_mult_matrix(A: FrobeniusAlgebra, z: AlgebraElement) -> sympy.Matrix:
    cols = []
    for b in A.labels:
        v = (z * A.basis_element(b)).vector()
        cols.append([sympy.Rational(c.numerator, c.denominator) for c in v])
    return sympy.Matrix(cols).T


def _spectrum_poly(A: FrobeniusAlgebra, coeffs: List[AlgebraElement], u) -> sympy.Poly:
    """det(sum_s M_{c_s} u^{deg-s}): roots are all central character values."""
    deg = len(coeffs) - 1
    mat = sympy.zeros(A.dim, A.dim)
    for s, z in enumerate(coeffs):
        if z.is_zero():
            continue
        mat = mat + _left_mult_matrix(A, z) * u ** (deg - s)
    return sympy.Poly(sympy.expand(mat.det()), u)


def _frac_gcd(a: Fraction, b: Fraction) -> Fraction:
    # generator of aZ + bZ inside Q
    return Fraction(
        math.gcd(a.numerator * b.denominator, b.numerator * a.denominator),
        a.denominator * b.denominator,
    )


def _cauchy_bound(poly: sympy.Poly) -> Fraction:
    cs = poly.all_coeffs()
    lead = cs[0]
    if len(cs) == 1:
        return Fraction(0)
    biggest = max(abs(sympy.Rational(c)) / abs(sympy.Rational(lead)) for c in cs[1:])
    return Fraction(1) + Fraction(biggest.p, biggest.q)


def genericity(p: CycloParams) -> GenericityReport:
    A = p.A
    u = sympy.Symbol("u")

    # subgroup generated by teleporter eigenvalues
    gamma: Optional[Fraction]
    if A.d != 0:
        # the teleporter raises degree, so it is nilpotent
        gamma = Fraction(0)
        gamma_reason = "d nonzero, teleporter nilpotent"
    else:
        from .frobenius import tau_element

        tau = tau_element(A, 2, 1, 2)
        pairs = [
            (l1, l2) for l1 in A.labels for l2 in A.labels
        ]
        index = {t: i for i, t in enumerate(pairs)}
        mat = sympy.zeros(len(pairs), len(pairs))
        for col, (l1, l2) in enumerate(pairs):
            prod = tau * TensorElement(A, 2, {(l1, l2): Fraction(1)})
            for t, c in prod.coeffs.items():
                mat[index[t], col] = sympy.Rational(c.numerator, c.denominator)
        charpoly = mat.charpoly(u).as_expr()
        roots: List[Fraction] = []
        irrational = False
        for factor, _mult in sympy.factor_list(charpoly, u)[1]:
            fp = sympy.Poly(factor, u)
            if fp.degree() == 1:
                a1, a0 = fp.all_coeffs()
                r = -sympy.Rational(a0) / sympy.Rational(a1)
                if r != 0:
                    roots.append(Fraction(r.p, r.q))
            elif fp.degree() > 1:
                irrational = True
        if irrational:
            xf = str(sympy.factor(_spectrum_poly(A, p.f, u).as_expr()))
            xg = str(sympy.factor(_spectrum_poly(A, p.g, u).as_expr()))
            return GenericityReport(
                "indeterminate", None, xf, xg, None,
                "teleporter has irrational eigenvalues, cannot enumerate the subgroup",
            )
        gamma = Fraction(0)
        for r in roots:
            gamma = abs(r) if gamma == 0 else _frac_gcd(gamma, r)
        gamma_reason = f"eigenvalues {sorted(set(roots))}" if roots else "all eigenvalues zero"

    pf = _spectrum_poly(A, p.f, u)
    pg = _spectrum_poly(A, p.g, u)
    xf = str(sympy.factor(pf.as_expr()))
    xg = str(sympy.factor(pg.as_expr()))

    shifts = [0]
    if gamma != 0:
        bound = _cauchy_bound(pf) + _cauchy_bound(pg)
        tmax = int(bound / gamma) + 1
        shifts = list(range(-tmax, tmax + 1))
    for t in shifts:
        shifted = pg.as_expr().subs(
            u, u - sympy.Rational(gamma.numerator, gamma.denominator) * t
        )
        common = sympy.gcd(pf.as_expr(), sympy.expand(shifted))
        if sympy.degree(common, u) >= 1:
            return GenericityReport(
                "not_generic", gamma, xf, xg, (t, str(sympy.factor(common))),
                gamma_reason,
            )
    return GenericityReport("generic", gamma, xf, xg, None, gamma_reason)
