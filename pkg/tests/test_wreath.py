"""Wreath and affine wreath algebras: actions, Demazure calculus, wrap sums.

Derived values here were worked out by hand (small divided differences,
2x2 teleporters) or against the brute-force oracles defined inline
(standard tableaux counted by corner removal, rational identities via
sympy), never by running the module under test first.
"""

import itertools
import math
from fractions import Fraction

import pytest
import sympy
from hypothesis import given, settings
from hypothesis import strategies as st

from frobheis.frobenius import TensorElement, build_algebra, tau_element
from frobheis.wreath import (
    AffineElement,
    Multipartition,
    Partition,
    Perm,
    PolyTensor,
    RationalAffine,
    WreathElement,
    affine_mul,
    all_perms,
    demazure,
    partitions_in_box,
    partitions_of,
    star_act,
    sym_act,
    wrap_sum,
    wreath_mul,
    x_symbols,
    young_idempotent,
    young_subgroup,
)

GF = build_algebra("ground_field")
DN = build_algebra("dual_numbers")
EXT = build_algebra("exterior_pair")


def count_syt(shape):
    # independent oracle: standard tableaux by removing corners
    parts = tuple(p for p in shape if p)
    if not parts:
        return 1
    total = 0
    for i in range(len(parts)):
        if parts[i] and (i == len(parts) - 1 or parts[i] > parts[i + 1]):
            smaller = list(parts)
            smaller[i] -= 1
            total += count_syt(tuple(smaller))
    return total


class TestPerm:
    def test_compose_and_call(self):
        s1 = Perm.simple(3, 1)
        s2 = Perm.simple(3, 2)
        p = s1 * s2
        assert [p(i) for i in [1, 2, 3]] == [2, 3, 1]

    def test_inverse(self):
        p = Perm([3, 1, 4, 2])
        assert (p * p.inverse()).is_identity()
        assert (p.inverse() * p).is_identity()

    def test_sign_and_length(self):
        assert Perm.identity(4).length() == 0
        assert Perm.simple(4, 2).sign() == -1
        assert Perm([4, 3, 2, 1]).length() == 6

    def test_cycle_str(self):
        assert Perm.identity(3).cycle_str() == "id"
        assert Perm.simple(3, 1).cycle_str() == "(1 2)"
        assert Perm([2, 3, 1]).cycle_str() == "(1 2 3)"

    @settings(max_examples=80, deadline=None)
    @given(st.permutations(list(range(1, 6))))
    def test_reduced_word_reconstructs(self, img):
        p = Perm(img)
        word = p.reduced_word()
        assert len(word) == p.length()
        q = Perm.identity(5)
        for i in word:
            q = q * Perm.simple(5, i)
        assert q == p

    def test_young_subgroup_size(self):
        assert len(list(young_subgroup(5, 2))) == 2 * 6
        assert all(
            all(s(i) <= 2 for i in [1, 2]) for s in young_subgroup(5, 2)
        )


class TestPartitions:
    def test_counts(self):
        assert len(list(partitions_of(5))) == 7
        assert len(list(partitions_of(0))) == 1

    def test_box_counts_are_binomials(self):
        for n in range(7):
            for r in range(n + 1):
                got = len(list(partitions_in_box(r, n - r)))
                assert got == math.comb(n, r)

    def test_transpose(self):
        assert Partition((3, 1)).transpose() == Partition((2, 1, 1))
        assert Partition(()).transpose() == Partition(())

    @settings(max_examples=50, deadline=None)
    @given(st.integers(min_value=0, max_value=8))
    def test_transpose_involution(self, n):
        for lam in partitions_of(n):
            assert lam.transpose().transpose() == lam

    def test_hooks(self):
        assert Partition((2, 1)).hook_lengths() == [[3, 1], [1]]

    def test_tableau_counts_match_oracle(self):
        for n in range(1, 7):
            for lam in partitions_of(n):
                assert lam.standard_tableau_count() == count_syt(lam.parts), lam

    def test_tableau_squares_sum(self):
        total = sum(l.standard_tableau_count() ** 2 for l in partitions_of(4))
        assert total == 24

    def test_rejects_bad_parts(self):
        with pytest.raises(AssertionError):
            Partition((1, 2))
        with pytest.raises(AssertionError):
            Partition((2, -1))

    def test_multipartition(self):
        m = Multipartition([(2, 1), (), (3,)])
        assert m.size == 6
        assert len(m) == 3
        assert m.transpose() == Multipartition([(2, 1), (), (1, 1, 1)])


class TestSymAct:
    def test_odd_swap_sign(self):
        t1 = EXT.basis_element("t1")
        v = TensorElement.from_factors([t1, t1])
        assert sym_act(Perm.simple(2, 1), v) == v.scale(-1)

    def test_even_swap(self):
        x, one = DN.basis_element("x"), DN.one()
        v = TensorElement.from_factors([one, x])  # written x (x) 1
        assert sym_act(Perm.simple(2, 1), v) == TensorElement.from_factors([x, one])

    def test_identity(self):
        v = TensorElement.from_factors([EXT.basis_element("t1"), EXT.basis_element("t12")])
        assert sym_act(Perm.identity(2), v) == v

    def test_size_mismatch(self):
        v = TensorElement.one(DN, 2)
        with pytest.raises(ValueError):
            sym_act(Perm.identity(3), v)

    @settings(max_examples=40, deadline=None)
    @given(
        st.permutations([1, 2, 3]),
        st.permutations([1, 2, 3]),
        st.tuples(*[st.sampled_from(EXT.labels)] * 3),
    )
    def test_action_law(self, img1, img2, labels):
        s, t = Perm(img1), Perm(img2)
        v = TensorElement(EXT, 3, {labels: Fraction(1)})
        assert sym_act(s * t, v) == sym_act(s, sym_act(t, v))

    def test_poly_variables_move(self):
        f = PolyTensor.variable(DN, 3, 1)
        g = sym_act(Perm([2, 3, 1]), f)
        assert g == PolyTensor.variable(DN, 3, 2)


class TestWreathMul:
    def test_spec_example(self):
        x, one = DN.basis_element("x"), DN.one()
        u = WreathElement(DN, 2, {Perm.simple(2, 1): TensorElement.from_factors([one, x])})
        v = WreathElement.from_perm(DN, Perm.simple(2, 1))
        got = wreath_mul(u, v)
        assert got == WreathElement.from_tensor(TensorElement.from_factors([one, x]))

    def test_group_algebra_restriction(self):
        for s in all_perms(3):
            for t in all_perms(3):
                got = wreath_mul(WreathElement.from_perm(GF, s), WreathElement.from_perm(GF, t))
                assert got == WreathElement.from_perm(GF, s * t)

    def test_tensor_restriction(self):
        a = TensorElement.from_factors([EXT.basis_element("t1"), EXT.basis_element("t2")])
        b = TensorElement.from_factors([EXT.basis_element("t2"), EXT.basis_element("1")])
        got = wreath_mul(WreathElement.from_tensor(a), WreathElement.from_tensor(b))
        assert got == WreathElement.from_tensor(a * b)

    def test_quadratic_and_braid(self):
        for A in [DN, EXT]:
            one = WreathElement.one(A, 3)
            s = [WreathElement.from_perm(A, Perm.simple(3, i)) for i in [1, 2]]
            assert wreath_mul(s[0], s[0]) == one
            assert wreath_mul(s[1], s[1]) == one
            lhs = wreath_mul(wreath_mul(s[0], s[1]), s[0])
            rhs = wreath_mul(wreath_mul(s[1], s[0]), s[1])
            assert lhs == rhs

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            wreath_mul(WreathElement.one(DN, 2), WreathElement.one(DN, 3))

    @settings(max_examples=25, deadline=None)
    @given(st.data())
    def test_associative(self, data):
        perms = list(all_perms(3))
        labels = list(EXT.labels)

        def draw_elem():
            s = data.draw(st.sampled_from(perms))
            t = data.draw(st.tuples(*[st.sampled_from(labels)] * 3))
            return WreathElement(EXT, 3, {s: TensorElement(EXT, 3, {t: Fraction(1)})})

        a, b, c = draw_elem(), draw_elem(), draw_elem()
        assert wreath_mul(wreath_mul(a, b), c) == wreath_mul(a, wreath_mul(b, c))


class TestDemazure:
    def test_pinned_values(self):
        tau = PolyTensor.from_tensor(tau_element(DN, 2, 1, 2))
        assert demazure(1, PolyTensor.variable(DN, 2, 1)) == tau.scale(-1)
        assert demazure(1, PolyTensor.variable(DN, 2, 2)) == tau
        assert demazure(1, PolyTensor.one(DN, 2)).is_zero()

    def test_higher_monomial(self):
        # (x2^2 - x1^2)/(x2 - x1) = x1 + x2, all times tau
        f = PolyTensor(DN, 2, {((0, 2), ("1", "1")): Fraction(1)})
        tau = tau_element(DN, 2, 1, 2)
        want = PolyTensor.from_tensor(tau, (1, 0)) + PolyTensor.from_tensor(tau, (0, 1))
        assert demazure(1, f) == want

    def test_squares_to_zero(self):
        for A in [GF, DN, EXT]:
            for alpha in itertools.product(range(3), repeat=2):
                for l in A.labels:
                    f = PolyTensor(A, 2, {(alpha, (l, A.labels[0])): Fraction(1)})
                    assert demazure(1, demazure(1, f)).is_zero()

    def test_twisted_leibniz(self):
        rng_terms = [
            PolyTensor.variable(DN, 2, 1),
            PolyTensor.variable(DN, 2, 2),
            PolyTensor.from_tensor(
                TensorElement.from_factors([DN.basis_element("x"), DN.one()])
            ),
            PolyTensor(DN, 2, {((2, 0), ("1", "x")): Fraction(1)}),
        ]
        s1 = Perm.simple(2, 1)
        for f in rng_terms:
            for g in rng_terms:
                lhs = demazure(1, f * g)
                rhs = demazure(1, f) * g + sym_act(s1, f) * demazure(1, g)
                assert lhs == rhs, (f, g)

    def test_index_range(self):
        with pytest.raises(ValueError):
            demazure(2, PolyTensor.one(DN, 2))


class TestAffine:
    def test_sif_example(self):
        s1 = AffineElement.from_perm(DN, Perm.simple(2, 1))
        x1 = AffineElement.variable(DN, 2, 1)
        x2 = AffineElement.variable(DN, 2, 2)
        tau = AffineElement.from_poly(PolyTensor.from_tensor(tau_element(DN, 2, 1, 2)))
        assert affine_mul(s1, x1) == affine_mul(x2, s1) - tau

    def test_degenerate_hecke_over_field(self):
        s1 = AffineElement.from_perm(GF, Perm.simple(2, 1))
        x1 = AffineElement.variable(GF, 2, 1)
        x2 = AffineElement.variable(GF, 2, 2)
        assert affine_mul(s1, x2) == affine_mul(x1, s1) + AffineElement.one(GF, 2)

    def test_variables_commute(self):
        x1 = AffineElement.variable(DN, 2, 1)
        x2 = AffineElement.variable(DN, 2, 2)
        assert affine_mul(x1, x2) == affine_mul(x2, x1)

    def test_matches_wreath_in_degree_zero(self):
        for s in all_perms(2):
            for l1 in DN.labels:
                for l2 in DN.labels:
                    t = TensorElement(DN, 2, {(l1, l2): Fraction(1)})
                    u_w = WreathElement(DN, 2, {s: t})
                    u_a = AffineElement.from_wreath(u_w)
                    for s2 in all_perms(2):
                        v_w = WreathElement.from_perm(DN, s2)
                        v_a = AffineElement.from_perm(DN, s2)
                        assert (
                            affine_mul(u_a, v_a)
                            == AffineElement.from_wreath(wreath_mul(u_w, v_w))
                        )

    def test_quadratic_and_braid(self):
        one = AffineElement.one(DN, 3)
        s = [AffineElement.from_perm(DN, Perm.simple(3, i)) for i in [1, 2]]
        assert affine_mul(s[0], s[0]) == one
        lhs = affine_mul(affine_mul(s[0], s[1]), s[0])
        rhs = affine_mul(affine_mul(s[1], s[0]), s[1])
        assert lhs == rhs

    def test_associativity_samples(self):
        gens = [
            AffineElement.from_perm(DN, Perm.simple(2, 1)),
            AffineElement.variable(DN, 2, 1),
            AffineElement.from_poly(
                PolyTensor.from_tensor(
                    TensorElement.from_factors([DN.basis_element("x"), DN.one()])
                )
            ),
        ]
        for a, b, c in itertools.product(gens, repeat=3):
            assert affine_mul(affine_mul(a, b), c) == affine_mul(a, affine_mul(b, c))

    def test_center_n2(self):
        # S_2-invariant polynomials with central coefficients commute with
        # every generator
        for A in [DN, build_algebra("zigzag", n=2)]:
            n = 2
            x1 = AffineElement.variable(A, n, 1)
            x2 = AffineElement.variable(A, n, 2)
            s1 = AffineElement.from_perm(A, Perm.simple(n, 1))
            gens = [x1, x2, s1] + [
                AffineElement.from_poly(
                    PolyTensor.from_tensor(
                        TensorElement.from_factors([A.basis_element(l), A.one()])
                    )
                )
                for l in A.labels
            ]
            central_z = A.one() if A.name == "dual_numbers" else A.basis_element("c1")
            invariants = [
                affine_mul(x1, x2),
                x1 + x2,
                AffineElement.from_poly(
                    PolyTensor.from_tensor(TensorElement.from_factors([central_z, A.one()]))
                    + PolyTensor.from_tensor(TensorElement.from_factors([A.one(), central_z]))
                ),
            ]
            for z in invariants:
                for g in gens:
                    assert affine_mul(z, g) == affine_mul(g, z)

    def test_size_mismatch(self):
        with pytest.raises(ValueError):
            affine_mul(AffineElement.one(DN, 2), AffineElement.one(DN, 3))


class TestYoungIdempotents:
    def test_row_and_column_cases(self):
        e2 = young_idempotent(GF, Partition((2,)))
        want = (
            WreathElement.from_perm(GF, Perm.identity(2))
            + WreathElement.from_perm(GF, Perm.simple(2, 1))
        ).scale(Fraction(1, 2))
        assert e2 == want
        e11 = young_idempotent(GF, Partition((1, 1)))
        want = (
            WreathElement.from_perm(GF, Perm.identity(2))
            - WreathElement.from_perm(GF, Perm.simple(2, 1))
        ).scale(Fraction(1, 2))
        assert e11 == want

    @pytest.mark.parametrize("shape", [(1,), (2,), (1, 1), (3,), (2, 1), (1, 1, 1)])
    @pytest.mark.parametrize("algname", ["ground_field", "dual_numbers"])
    def test_idempotency(self, shape, algname):
        A = build_algebra(algname)
        e = young_idempotent(A, Partition(shape))
        assert wreath_mul(e, e) == e

    def test_colored(self):
        A = build_algebra("product_of_fields", N=2)
        e = young_idempotent(A, Partition((2,)), color=1)
        assert wreath_mul(e, e) == e
        ten = TensorElement.from_factors([A.basis_element("e1")] * 2)
        want = wreath_mul(
            young_idempotent(A, Partition((2,))), WreathElement.from_tensor(ten)
        )
        assert e == want

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            young_idempotent(GF, Partition(()))
        A = build_algebra("product_of_fields", N=2)
        with pytest.raises(ValueError):
            young_idempotent(A, Partition((2,)), color=3)


class TestStarAction:
    def test_constants_invariant(self):
        one = RationalAffine.one(GF, 2)
        assert star_act("+", Perm.simple(2, 1), one) == one

    def test_plus_on_x1(self):
        xs = x_symbols(2)
        f = RationalAffine(GF, 2, {("1", "1"): xs[0]})
        got = star_act("+", Perm.simple(2, 1), f)
        assert got == RationalAffine(GF, 2, {("1", "1"): xs[1] - 1})

    def test_minus_on_inverse_difference(self):
        # hand computation: s1(f) = -f and the divided difference of
        # (x2-x1)^{-1} is 2 (x2-x1)^{-2}
        xs = x_symbols(2)
        f = RationalAffine(GF, 2, {("1", "1"): 1 / (xs[1] - xs[0])})
        got = star_act("-", Perm.simple(2, 1), f)
        want = RationalAffine(
            GF,
            2,
            {("1", "1"): -1 / (xs[1] - xs[0]) - 2 / (xs[1] - xs[0]) ** 2},
        )
        assert got == want

    def _sample_rationals(self, A, n):
        xs = x_symbols(n)
        es = [
            xs[0],
            xs[0] * xs[1],
            1 / (xs[0] - xs[2]),
            (xs[1] + 2) / (xs[0] - xs[1]),
        ]
        out = []
        for i, e in enumerate(es):
            labels = tuple(A.labels[(i + k) % len(A.labels)] for k in range(n))
            out.append(RationalAffine(A, n, {labels: e, (A.labels[0],) * n: e + 1}))
        return out

    @pytest.mark.parametrize("sign", ["+", "-"])
    @pytest.mark.parametrize("algname", ["ground_field", "dual_numbers"])
    def test_involution(self, sign, algname):
        A = build_algebra(algname)
        s1 = Perm.simple(3, 1)
        for f in self._sample_rationals(A, 3):
            assert star_act(sign, s1, star_act(sign, s1, f)) == f

    @pytest.mark.parametrize("sign", ["+", "-"])
    def test_braid(self, sign):
        A = DN
        s1, s2 = Perm.simple(3, 1), Perm.simple(3, 2)
        for f in self._sample_rationals(A, 3)[:2]:
            lhs = star_act(sign, s1, star_act(sign, s2, star_act(sign, s1, f)))
            rhs = star_act(sign, s2, star_act(sign, s1, star_act(sign, s2, f)))
            assert lhs == rhs

    def test_action_law_full_perm(self):
        A = DN
        f = self._sample_rationals(A, 3)[2]
        s, t = Perm([2, 3, 1]), Perm([3, 2, 1])
        lhs = star_act("+", s * t, f)
        rhs = star_act("+", s, star_act("+", t, f))
        assert lhs == rhs

    def test_polynomial_path_matches_rational(self):
        f = PolyTensor(DN, 2, {((2, 0), ("1", "x")): Fraction(1),
                               ((0, 1), ("x", "1")): Fraction(-2)})
        for sign in ["+", "-"]:
            got = star_act(sign, Perm.simple(2, 1), f)
            want = star_act(sign, Perm.simple(2, 1), RationalAffine.from_poly_tensor(f))
            assert RationalAffine.from_poly_tensor(got) == want


class TestHappySad:
    @pytest.mark.parametrize(
        "alpha", [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    )
    def test_symmetrizer_absorbs_star_average(self, alpha):
        A = DN
        n = 2
        e_row = AffineElement.from_wreath(young_idempotent(A, Partition((2,))))
        e_col = AffineElement.from_wreath(young_idempotent(A, Partition((1, 1))))
        for labels in [("1", "1"), ("x", "1"), ("1", "x")]:
            f = PolyTensor(A, n, {(alpha, labels): Fraction(1)})
            favg_p = PolyTensor(A, n, {})
            favg_m = PolyTensor(A, n, {})
            for s in all_perms(n):
                favg_p = favg_p + star_act("+", s, f)
                favg_m = favg_m + star_act("-", s, f)
            favg_p = favg_p.scale(Fraction(1, 2))
            favg_m = favg_m.scale(Fraction(1, 2))
            fa = AffineElement.from_poly(f)
            lhs = affine_mul(affine_mul(e_row, fa), e_row)
            rhs = affine_mul(
                affine_mul(e_row, AffineElement.from_poly(favg_p)), e_row
            )
            assert lhs == rhs, ("happy", alpha, labels)
            lhs = affine_mul(affine_mul(e_col, fa), e_col)
            rhs = affine_mul(
                affine_mul(e_col, AffineElement.from_poly(favg_m)), e_col
            )
            assert lhs == rhs, ("sad", alpha, labels)


class TestWrapSum:
    def test_trivial(self):
        got = wrap_sum(GF, 1, 0, "+")
        assert got == RationalAffine.one(GF, 1)

    @pytest.mark.parametrize("sign", ["+", "-"])
    @pytest.mark.parametrize("algname", ["ground_field", "dual_numbers"])
    def test_equals_factorial(self, sign, algname):
        A = build_algebra(algname)
        for n in range(1, 4):
            for r in range(n + 1):
                got = wrap_sum(A, n, r, sign)
                want = RationalAffine.one(A, n).scale(math.factorial(n))
                assert got == want, (algname, n, r, sign)

    def test_bad_args(self):
        with pytest.raises(ValueError):
            wrap_sum(GF, 2, 3, "+")
        with pytest.raises(ValueError):
            wrap_sum(GF, 2, 1, "*")
