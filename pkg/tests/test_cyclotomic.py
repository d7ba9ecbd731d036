"""Tests for cyclotomic quotients, the omega series, bubbles, genericity."""

import itertools
import random
from fractions import Fraction

import pytest

from frobheis.frobenius import build_algebra
from frobheis.wreath import AffineElement, Perm, PolyTensor, affine_mul, all_perms
from frobheis.cyclotomic import (
    BubbleTable,
    CycloParams,
    GenericityReport,
    bubble_values,
    cyclo_dim,
    cyclo_reduce,
    genericity,
    o_series,
    pbw_basis_keys,
)

from oracles import oracle_series_quotient

GF = build_algebra("ground_field")
DN = build_algebra("dual_numbers")
EXT = build_algebra("exterior_pair")
ZZ2 = build_algebra("zigzag", n=2)
PF2 = build_algebra("product_of_fields", N=2)


def params(A, f_tail, g_tail):
    """Monic polynomials given by their lower coefficients."""
    def conv(c):
        return c if not isinstance(c, str) else A.basis_element(c)

    return CycloParams(A, [1] + [conv(c) for c in f_tail], [1] + [conv(c) for c in g_tail])


def x_var(A, n, j):
    return AffineElement.variable(A, n, j)


class TestParams:
    def test_degrees(self):
        p = params(GF, [0, 0], [0])
        assert p.l == 2 and p.m == 1 and p.k == -1

    def test_monic_required(self):
        with pytest.raises(ValueError):
            CycloParams(GF, [2], [1])
        with pytest.raises(ValueError):
            CycloParams(GF, [1], [GF.one().scale(3)])

    def test_central_required(self):
        # a vertex idempotent of the zigzag algebra is not central
        with pytest.raises(ValueError):
            params(ZZ2, ["e1"], [])

    def test_even_required(self):
        with pytest.raises(ValueError):
            params(EXT, ["t1"], [])

    def test_central_accepted(self):
        p = params(ZZ2, ["c1"], [])  # loops are central
        assert p.l == 1

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            CycloParams(GF, [], [1])

    def test_json_roundtrip(self):
        p = params(DN, [0, "x"], ["x"])
        q = CycloParams.from_json(DN, p.to_json())
        assert q.f == p.f and q.g == p.g

    def test_f_at_out_of_range(self):
        p = params(GF, [-2], [])
        assert p.f_at(5).is_zero()
        assert p.g_at(0) == GF.one()


class TestReduce:
    def test_linear_f_kills_x1(self):
        p = params(GF, [0], [])
        assert cyclo_reduce(p, x_var(GF, 1, 1)).is_zero()
        assert cyclo_reduce(p, x_var(GF, 2, 1)).is_zero()

    def test_quadratic_f(self):
        p = params(GF, [0, 0], [])
        x1 = x_var(GF, 1, 1)
        cube = affine_mul(affine_mul(x1, x1), x1)
        assert cyclo_reduce(p, cube).is_zero()
        assert cyclo_reduce(p, x1) == x1

    def test_x2_for_linear_f(self):
        # f = u - 2 over the ground field: x2 = 2 + s1
        p = params(GF, [-2], [])
        got = cyclo_reduce(p, x_var(GF, 2, 2))
        want = AffineElement.one(GF, 2).scale(2) + AffineElement.from_perm(
            GF, Perm.simple(2, 1)
        )
        assert got == want

    def test_x2_squared_consistent(self):
        # reducing x2*x2 directly agrees with squaring the reduced x2
        p = params(GF, [-2], [])
        x2 = x_var(GF, 2, 2)
        direct = cyclo_reduce(p, affine_mul(x2, x2))
        red = cyclo_reduce(p, x2)
        indirect = cyclo_reduce(p, affine_mul(red, red))
        assert direct == indirect
        want = AffineElement.one(GF, 2).scale(5) + AffineElement.from_perm(
            GF, Perm.simple(2, 1)
        ).scale(4)
        assert direct == want

    def test_degree_zero_f_gives_zero_algebra(self):
        p = CycloParams(GF, [1], [1])
        assert cyclo_reduce(p, AffineElement.one(GF, 2)).is_zero()

    def test_exponents_below_l(self):
        p = params(DN, [0, "x"], [])
        rng = random.Random(7)
        for _ in range(10):
            e = _random_affine(DN, 2, rng, max_exp=4)
            red = cyclo_reduce(p, e)
            for poly in red.terms.values():
                for (alpha, _labels) in poly.terms:
                    assert all(a < p.l for a in alpha)

    def test_idempotent(self):
        for A, tail in [(GF, [-2]), (DN, [0, "x"])]:
            p = params(A, tail, [])
            rng = random.Random(11)
            for _ in range(30):
                e = _random_affine(A, 2, rng, max_exp=3)
                once = cyclo_reduce(p, e)
                assert cyclo_reduce(p, once) == once

    def test_linear_map(self):
        p = params(DN, [0, "x"], [])
        rng = random.Random(13)
        for _ in range(10):
            a = _random_affine(DN, 2, rng, max_exp=3)
            b = _random_affine(DN, 2, rng, max_exp=3)
            lhs = cyclo_reduce(p, a + b.scale(Fraction(3, 2)))
            rhs = cyclo_reduce(p, a) + cyclo_reduce(p, b).scale(Fraction(3, 2))
            assert lhs == rhs

    @pytest.mark.parametrize("A,tail,n", [
        (GF, [-1], 2),
        (GF, [0, -1], 2),
        (DN, ["x"], 2),
        (GF, [-1], 3),
        (DN, [0, "x"], 3),
    ])
    def test_quotient_multiplication_consistent(self, A, tail, n):
        # (uv)w and u(vw) agree after reduction, so the rewrite is a ring map
        p = params(A, tail, [])
        rng = random.Random(17)
        for _ in range(6):
            u = _random_affine(A, n, rng, max_exp=p.l + 1)
            v = _random_affine(A, n, rng, max_exp=p.l + 1)
            w = _random_affine(A, n, rng, max_exp=p.l + 1)
            left = cyclo_reduce(p, affine_mul(cyclo_reduce(p, affine_mul(u, v)), w))
            right = cyclo_reduce(p, affine_mul(u, cyclo_reduce(p, affine_mul(v, w))))
            assert left == right

    def test_basis_elements_already_reduced(self):
        p = params(DN, [0, "x"], [])
        for alpha, labels, sigma in itertools.islice(pbw_basis_keys(p, 2), 40):
            e = _affine_from_key(DN, 2, alpha, labels, sigma)
            assert cyclo_reduce(p, e) == e


def _affine_from_key(A, n, alpha, labels, sigma):
    return AffineElement(A, n, {sigma: PolyTensor(A, n, {(alpha, labels): Fraction(1)})})


def _random_affine(A, n, rng, max_exp=3):
    terms = {}
    perms = list(all_perms(n))
    for _ in range(3):
        sigma = rng.choice(perms)
        alpha = tuple(rng.randrange(max_exp) for _ in range(n))
        labels = tuple(rng.choice(A.labels) for _ in range(n))
        poly = terms.setdefault(sigma, {})
        key = (alpha, labels)
        poly[key] = poly.get(key, Fraction(0)) + Fraction(rng.randrange(-3, 4))
    return AffineElement(
        A, n, {s: PolyTensor(A, n, d) for s, d in terms.items()}
    )


class TestDim:
    def test_linear_ground_field(self):
        assert cyclo_dim(params(GF, [0], []), 2) == 2

    def test_quadratic_dual_numbers(self):
        assert cyclo_dim(params(DN, [0, 0], []), 2) == 32

    def test_cubic_one_strand(self):
        assert cyclo_dim(params(GF, [0, 0, 0], []), 1) == 3

    @pytest.mark.parametrize("A,l,n", [(GF, 1, 2), (GF, 2, 2), (DN, 1, 2), (DN, 2, 1)])
    def test_matches_key_enumeration(self, A, l, n):
        p = params(A, [0] * l, [])
        keys = list(pbw_basis_keys(p, n))
        assert len(keys) == cyclo_dim(p, n)
        assert len(set((a, b, s.images) for a, b, s in keys)) == len(keys)


class TestOmegaSeries:
    def test_trivial_ratio(self):
        s = o_series(params(GF, [0], [0]), 6)
        assert s.omega == {-1: GF.one()}
        assert s.tilde == {-1: GF.one().scale(-1)}

    def test_geometric(self):
        # g/f = u/(u-2): omega^(r) = 2^{r+1}
        s = o_series(params(GF, [-2], [0]), 5)
        for r in range(-1, 6):
            assert s.omega_at(r) == GF.one().scale(Fraction(2) ** (r + 1))

    def test_geometric_nilpotent(self):
        # f = u - x over the dual numbers: x^2 = 0 truncates the series
        p = CycloParams(DN, [DN.one(), DN.basis_element("x").scale(-1)], [1, 0])
        s = o_series(p, 6)
        assert s.omega_at(-1) == DN.one()
        assert s.omega_at(0) == DN.basis_element("x")
        for r in range(1, 7):
            assert s.omega_at(r).is_zero()

    def test_pure_power(self):
        # f = u^2, g = 1: the ratio is exactly u^{-2}
        p = CycloParams(GF, [1, 0, 0], [1])
        s = o_series(p, 5)
        assert s.omega == {1: GF.one()}

    def test_leading_coefficients(self):
        cases = [
            params(GF, [-2], [0]),
            params(DN, [0, "x"], ["x"]),
            params(ZZ2, ["c1"], ["c2", 0]),
        ]
        for p in cases:
            s = o_series(p, 8)
            assert s.omega_at(-p.k - 1) == p.A.one()
            assert s.tilde_at(p.k - 1) == p.A.one().scale(-1)
            for r in range(-p.k - 5, -p.k - 1):
                assert s.omega_at(r).is_zero()
            for r in range(p.k - 5, p.k - 1):
                assert s.tilde_at(r).is_zero()

    def test_inverse_identity(self):
        # omega(u) * (-sum tilde) = 1: convolution vanishes except degree 0
        cases = [
            params(GF, [-2], [0]),
            params(DN, [0, "x"], ["x"]),
            params(GF, [5, -1], [2]),
        ]
        for p in cases:
            s = o_series(p, 10)
            for j in range(0, 8):
                acc = p.A.zero()
                for r in range(-p.k - 1, j + 2):
                    sdx = j - 2 - r
                    acc = acc + s.omega_at(r) * s.tilde_at(sdx) if sdx >= p.k - 1 else acc
                expect = p.A.one().scale(-1) if j == 0 else p.A.zero()
                assert acc == expect, (p, j)

    def test_recursion_anchor(self):
        # sum_{s=0..l} omega^{(r-s)} f_s = 0 once r >= l
        cases = [
            params(GF, [-2], [0]),
            params(GF, [5, -1], [2]),
            params(DN, [0, "x"], ["x"]),
            params(ZZ2, ["c1"], []),
        ]
        for p in cases:
            s = o_series(p, 10)
            for r in range(p.l, 9):
                acc = p.A.zero()
                for ss in range(0, p.l + 1):
                    acc = acc + s.omega_at(r - ss) * p.f_at(ss)
                assert acc.is_zero(), (p, r)

    def test_negative_order(self):
        with pytest.raises(ValueError):
            o_series(params(GF, [0], [0]), -1)

    def test_oracle_division(self):
        # long-division oracle over the ground field
        fd = {1: Fraction(1), 0: Fraction(-3)}
        gd = {2: Fraction(1), 1: Fraction(2), 0: Fraction(5)}
        s = o_series(params(GF, [-3], [2, 5]), 8)
        want = oracle_series_quotient(gd, fd, 8)
        for j in range(-1, 9):
            # coefficient of u^{-j} is omega^{(j-1)}
            c = want.get(-j, Fraction(0))
            assert s.omega_at(j - 1) == GF.one().scale(c)


class TestBubbleValues:
    def test_trivial_ground_field(self):
        bt = bubble_values(params(GF, [0], [0]), GF.one(), 6)
        assert bt.ccw == {-1: Fraction(1)}
        assert bt.cw == {-1: Fraction(-1)}

    def test_dual_numbers_unit_vanishes(self):
        bt = bubble_values(params(DN, [0], [0]), DN.one(), 6)
        assert bt.ccw == {} and bt.cw == {}

    def test_dual_numbers_socle(self):
        bt = bubble_values(params(DN, [0], [0]), DN.basis_element("x"), 6)
        assert bt.ccw == {-1: Fraction(1)}
        assert bt.cw == {-1: Fraction(-1)}

    def test_geometric_values(self):
        bt = bubble_values(params(GF, [-2], [0]), GF.one(), 6)
        for r in range(-1, 7):
            assert bt.ccw_at(r) == Fraction(2) ** (r + 1)
        # f/g = 1 - 2/u exactly
        assert bt.cw == {-1: Fraction(-1), 0: Fraction(2)}

    def test_quadratic_over_dual_numbers(self):
        # g/f = u/(u^2 - x) = u^{-1} + x u^{-3}
        p = CycloParams(
            DN, [DN.one(), DN.zero(), DN.basis_element("x").scale(-1)], [1, 0]
        )
        unit = bubble_values(p, DN.one(), 6)
        assert unit.ccw == {2: Fraction(1)}
        socle = bubble_values(p, DN.basis_element("x"), 6)
        assert socle.ccw == {0: Fraction(1)}

    def test_requires_homogeneous(self):
        a = DN.one() + DN.basis_element("x")
        with pytest.raises(ValueError):
            bubble_values(params(DN, [0], [0]), a, 3)

    def test_out_of_range_zero(self):
        bt = bubble_values(params(GF, [0], [0]), GF.one(), 6)
        assert bt.ccw_at(-5) == 0
        assert bt.cw_at(3) == 0

    def test_oracle_componentwise(self):
        # product of two fields: everything splits per idempotent
        e1 = PF2.basis_element("e1")
        e2 = PF2.basis_element("e2")
        f = [PF2.one(), e1.scale(-2) + e2.scale(-3)]
        g = [PF2.one(), PF2.zero()]
        p = CycloParams(PF2, f, g)
        a = e1 + e2.scale(5)
        bt = bubble_values(p, a, 8)
        comp1 = oracle_series_quotient({1: Fraction(1)}, {1: Fraction(1), 0: Fraction(-2)}, 9)
        comp2 = oracle_series_quotient({1: Fraction(1)}, {1: Fraction(1), 0: Fraction(-3)}, 9)
        for r in range(-1, 9):
            want = comp1.get(-r - 1, Fraction(0)) + 5 * comp2.get(-r - 1, Fraction(0))
            assert bt.ccw_at(r) == want
        inv1 = oracle_series_quotient({1: Fraction(1), 0: Fraction(-2)}, {1: Fraction(1)}, 9)
        inv2 = oracle_series_quotient({1: Fraction(1), 0: Fraction(-3)}, {1: Fraction(1)}, 9)
        for r in range(-1, 9):
            want = -(inv1.get(-r - 1, Fraction(0)) + 5 * inv2.get(-r - 1, Fraction(0)))
            assert bt.cw_at(r) == want

    def test_oracle_trace_division(self):
        # apply tr(- . a) to the coefficients, then divide: valid here
        p = params(DN, [0, "x"], [0])
        a = DN.basis_element("x")
        num = {1: (DN.one() * a).trace()}
        den = {2: (DN.one() * a).trace(), 0: (DN.basis_element("x").scale(-1) * a).trace()}
        want = oracle_series_quotient(num, den, 9)
        bt = bubble_values(p, a, 8)
        for r in range(0, 9):
            assert bt.ccw_at(r) == want.get(-r - 1, Fraction(0))


class TestGenericity:
    def test_ground_field_integer_gap(self):
        rep = genericity(params(GF, [0], [-1]))
        assert rep.verdict == "not_generic"
        assert rep.is_generic is False
        assert rep.gamma_generator == 1
        assert rep.witness is not None

    def test_dual_numbers_generic(self):
        rep = genericity(params(DN, [0], [-1]))
        assert rep.verdict == "generic"
        assert rep.is_generic is True
        assert rep.gamma_generator == 0

    def test_equal_spectra(self):
        rep = genericity(params(GF, [0], [0]))
        assert rep.verdict == "not_generic"
        assert rep.witness[0] == 0 and "u" in rep.witness[1]

    def test_zigzag_nilpotent_loop(self):
        # c1 acts nilpotently, so f = u - c1 has spectrum {0}
        rep = genericity(params(ZZ2, ["c1"], [-1]))
        assert rep.verdict == "generic"
        assert rep.gamma_generator == 0
        rep2 = genericity(params(ZZ2, ["c1"], [0]))
        assert rep2.verdict == "not_generic"

    def test_product_of_fields_gamma(self):
        e1 = PF2.basis_element("e1")
        e2 = PF2.basis_element("e2")
        f = [PF2.one(), e1.scale(-2) + e2.scale(-3)]
        rep = genericity(CycloParams(PF2, f, [PF2.one(), PF2.zero()]))
        assert rep.gamma_generator == 1
        assert rep.verdict == "not_generic"
        rep2 = genericity(
            CycloParams(PF2, f, [PF2.one(), PF2.one().scale(Fraction(-1, 2))])
        )
        assert rep2.verdict == "generic"

    def test_report_lines(self):
        rep = genericity(params(GF, [0], [-1]))
        text = "\n".join(rep.lines())
        assert "verdict: not_generic" in text
        assert "witness" in text
