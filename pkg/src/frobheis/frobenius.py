"""Symmetric graded Frobenius superalgebras over Q by structure constants.

An algebra is a finite homogeneous basis with a multiplication table, a
unit, a trace functional that is even of degree -2d, and optionally a
distinguished family of orthogonal idempotents.  Supersymmetry of the
trace, tr(ab) = (-1)^{parity(a)parity(b)} tr(ba), and nondegeneracy of
the pairing (a,b) -> tr(ab) are what make the dual-basis machinery
(teleporters, canonical central elements, Cartan matrices) work.

Tensor powers A^(x)n carry the superalgebra structure with the Koszul
sign rule; tensor factors are numbered right to left, so factor 1 is
the rightmost slot.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Dict, List, Optional, Sequence, Tuple

from . import linalg
from .scalars import Scalar

Rat = Fraction
Coeffs = Dict[str, Fraction]


def _rat(x) -> Fraction:
    return x if isinstance(x, Fraction) else Fraction(x)


class AlgebraElement:
    """Element of A: zero-free map from basis label to rational."""

    __slots__ = ("alg", "coeffs")

    def __init__(self, alg: "FrobeniusAlgebra", coeffs: Coeffs):
        self.alg = alg
        self.coeffs = {l: _rat(c) for l, c in coeffs.items() if c}

    def __add__(self, other: "AlgebraElement") -> "AlgebraElement":
        out = dict(self.coeffs)
        for l, c in other.coeffs.items():
            out[l] = out.get(l, Fraction(0)) + c
        return AlgebraElement(self.alg, out)

    def __sub__(self, other: "AlgebraElement") -> "AlgebraElement":
        return self + (-other)

    def __neg__(self) -> "AlgebraElement":
        return AlgebraElement(self.alg, {l: -c for l, c in self.coeffs.items()})

    def scale(self, c) -> "AlgebraElement":
        c = _rat(c)
        return AlgebraElement(self.alg, {l: c * v for l, v in self.coeffs.items()})

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        out: Coeffs = {}
        for l1, c1 in self.coeffs.items():
            for l2, c2 in other.coeffs.items():
                for l3, c3 in self.alg.mult.get((l1, l2), {}).items():
                    out[l3] = out.get(l3, Fraction(0)) + c1 * c2 * c3
        return AlgebraElement(self.alg, out)

    def __rmul__(self, other):
        if isinstance(other, (int, Fraction)):
            return self.scale(other)
        return NotImplemented

    def __eq__(self, other) -> bool:
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        return self.coeffs == other.coeffs

    def __hash__(self):
        return hash(tuple(sorted(self.coeffs.items())))

    def __bool__(self) -> bool:
        return bool(self.coeffs)

    def is_zero(self) -> bool:
        return not self.coeffs

    def trace(self) -> Fraction:
        return sum(
            (c * self.alg.trace.get(l, Fraction(0)) for l, c in self.coeffs.items()),
            Fraction(0),
        )

    def degree(self) -> Optional[int]:
        degs = {self.alg.degree[l] for l in self.coeffs}
        return degs.pop() if len(degs) == 1 else None

    def parity(self) -> Optional[int]:
        pars = {self.alg.parity[l] for l in self.coeffs}
        return pars.pop() if len(pars) == 1 else None

    def is_homogeneous(self) -> bool:
        return self.is_zero() or (self.degree() is not None and self.parity() is not None)

    def vector(self) -> List[Fraction]:
        return [self.coeffs.get(l, Fraction(0)) for l in self.alg.labels]

    def __repr__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for l in self.alg.labels:
            if l not in self.coeffs:
                continue
            c = self.coeffs[l]
            parts.append(l if c == 1 else f"{c}*{l}")
        return " + ".join(parts)

    def to_json(self) -> dict:
        return {l: str(c) for l, c in sorted(self.coeffs.items())}


class FrobeniusAlgebra:
    def __init__(
        self,
        name: str,
        d: int,
        labels: Sequence[str],
        degree: Dict[str, int],
        parity: Dict[str, int],
        unit: Coeffs,
        mult: Dict[Tuple[str, str], Coeffs],
        trace: Dict[str, Rat],
        idempotents: Optional[List[Coeffs]] = None,
    ):
        self.name = name
        self.d = int(d)
        self.labels = tuple(labels)
        self.index = {l: i for i, l in enumerate(self.labels)}
        self.degree = {l: int(degree[l]) for l in self.labels}
        self.parity = {l: int(parity[l]) & 1 for l in self.labels}
        self.unit = {l: _rat(c) for l, c in unit.items() if c}
        self.mult = {
            k: {l: _rat(c) for l, c in v.items() if c} for k, v in mult.items()
        }
        self.mult = {k: v for k, v in self.mult.items() if v}
        self.trace = {l: _rat(c) for l, c in trace.items() if c}
        self.idempotents: Optional[List[AlgebraElement]] = None
        if idempotents is not None:
            self.idempotents = [AlgebraElement(self, e) for e in idempotents]
        self._dual: Optional[List[AlgebraElement]] = None

    # -- element constructors ------------------------------------------

    def element(self, coeffs: Coeffs) -> AlgebraElement:
        unknown = set(coeffs) - set(self.labels)
        if unknown:
            raise KeyError(f"unknown basis labels {sorted(unknown)}")
        return AlgebraElement(self, coeffs)

    def basis_element(self, label: str) -> AlgebraElement:
        return self.element({label: 1})

    def zero(self) -> AlgebraElement:
        return AlgebraElement(self, {})

    def one(self) -> AlgebraElement:
        return AlgebraElement(self, self.unit)

    def from_vector(self, vec: Sequence[Rat]) -> AlgebraElement:
        return AlgebraElement(
            self, {l: _rat(c) for l, c in zip(self.labels, vec) if c}
        )

    @property
    def dim(self) -> int:
        return len(self.labels)

    def __repr__(self):
        return f"FrobeniusAlgebra({self.name}, dim={self.dim}, d={self.d})"

    # -- dual basis ------------------------------------------------------

    def gram_matrix(self) -> linalg.Matrix:
        def tr_prod(l1, l2):
            return sum(
                (
                    c * self.trace.get(l3, Fraction(0))
                    for l3, c in self.mult.get((l1, l2), {}).items()
                ),
                Fraction(0),
            )

        return [[tr_prod(l1, l2) for l2 in self.labels] for l1 in self.labels]

    def dual_basis(self) -> List[AlgebraElement]:
        """Elements b_i~ with tr(b_i~ b_j) = delta_ij, aligned with labels."""
        if self._dual is None:
            inv = linalg.invert(self.gram_matrix())
            if inv is None:
                raise ValueError(f"{self.name}: trace form is degenerate")
            self._dual = [self.from_vector(row) for row in inv]
        return self._dual

    def dual_of(self, label: str) -> AlgebraElement:
        return self.dual_basis()[self.index[label]]

    def graded_dim(self) -> Scalar:
        out = Scalar.zero()
        for l in self.labels:
            out = out + Scalar.monomial(1, self.degree[l], self.parity[l])
        return out


# ---------------------------------------------------------------------------
# tensor powers


class TensorElement:
    """Element of A^(x)n: zero-free map from label tuples to rationals.

    Tuples are stored in written order (leftmost first); factor number f
    refers to slot n - f (factor 1 = rightmost).  Multiplication follows
    the superalgebra sign rule: factors slide past each other, odd past
    odd costs a sign.
    """

    __slots__ = ("alg", "n", "coeffs")

    def __init__(self, alg: FrobeniusAlgebra, n: int, coeffs: Dict[tuple, Rat]):
        self.alg = alg
        self.n = n
        self.coeffs = {t: _rat(c) for t, c in coeffs.items() if c}

    @staticmethod
    def one(alg: FrobeniusAlgebra, n: int) -> "TensorElement":
        out = TensorElement(alg, 0, {(): Fraction(1)})
        for _ in range(n):
            out = out.tensor_with(alg.one())
        return out

    @staticmethod
    def from_factors(factors: Sequence[AlgebraElement]) -> "TensorElement":
        """factors listed by factor number (factor 1 first, printed rightmost)."""
        alg = factors[0].alg
        out = TensorElement(alg, 0, {(): Fraction(1)})
        for f in factors:
            out = TensorElement(
                alg,
                out.n + 1,
                {
                    (l,) + t: c * cf
                    for t, c in out.coeffs.items()
                    for l, cf in f.coeffs.items()
                },
            )
        return out

    def tensor_with(self, f: AlgebraElement) -> "TensorElement":
        # appends a new rightmost factor (shifting it to factor 1 position)
        return TensorElement(
            self.alg,
            self.n + 1,
            {
                t + (l,): c * cf
                for t, c in self.coeffs.items()
                for l, cf in f.coeffs.items()
            },
        )

    def __add__(self, other: "TensorElement") -> "TensorElement":
        assert self.n == other.n
        out = dict(self.coeffs)
        for t, c in other.coeffs.items():
            out[t] = out.get(t, Fraction(0)) + c
        return TensorElement(self.alg, self.n, out)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return TensorElement(self.alg, self.n, {t: -c for t, c in self.coeffs.items()})

    def scale(self, c) -> "TensorElement":
        c = _rat(c)
        return TensorElement(self.alg, self.n, {t: c * v for t, v in self.coeffs.items()})

    def __mul__(self, other: "TensorElement") -> "TensorElement":
        assert self.n == other.n
        par = self.alg.parity
        out: Dict[tuple, Fraction] = {}
        for t1, c1 in self.coeffs.items():
            for t2, c2 in other.coeffs.items():
                # Koszul: t2[j] crosses t1[i] for written j < i
                sgn = 1
                for i in range(1, self.n):
                    if par[t1[i]]:
                        crossers = sum(par[t2[j]] for j in range(i))
                        if crossers & 1:
                            sgn = -sgn
                # multiply slotwise, expanding structure constants
                terms = [(tuple(), Fraction(sgn) * c1 * c2)]
                for i in range(self.n):
                    nxt = []
                    prods = self.alg.mult.get((t1[i], t2[i]), {})
                    if not prods:
                        terms = []
                        break
                    for t, c in terms:
                        for l3, c3 in prods.items():
                            nxt.append((t + (l3,), c * c3))
                    terms = nxt
                for t, c in terms:
                    out[t] = out.get(t, Fraction(0)) + c
        return TensorElement(self.alg, self.n, out)

    def __eq__(self, other):
        if not isinstance(other, TensorElement):
            return NotImplemented
        return self.n == other.n and self.coeffs == other.coeffs

    def __hash__(self):
        return hash((self.n, tuple(sorted(self.coeffs.items()))))

    def __bool__(self):
        return bool(self.coeffs)

    def is_zero(self):
        return not self.coeffs

    def permute(self, img: Dict[int, int]) -> "TensorElement":
        """Apply the factor permutation f -> img[f] with Koszul signs."""
        par = self.alg.parity
        n = self.n
        # written slot of factor f is n - f
        out: Dict[tuple, Fraction] = {}
        for t, c in self.coeffs.items():
            res = [None] * n
            for f in range(1, n + 1):
                res[n - img.get(f, f)] = t[n - f]
            # sign: pairs inverted in written order, both odd
            sgn = 1
            srcs = [None] * n
            for f in range(1, n + 1):
                srcs[n - img.get(f, f)] = n - f
            for a in range(n):
                if not par[res[a]]:
                    continue
                for b in range(a + 1, n):
                    if par[res[b]] and srcs[a] > srcs[b]:
                        sgn = -sgn
            key = tuple(res)
            out[key] = out.get(key, Fraction(0)) + sgn * c
        return TensorElement(self.alg, n, out)

    def transpose_factors(self, i: int, j: int) -> "TensorElement":
        return self.permute({i: j, j: i})

    def degree(self) -> Optional[int]:
        degs = {sum(self.alg.degree[l] for l in t) for t in self.coeffs}
        return degs.pop() if len(degs) == 1 else None

    def parity(self) -> Optional[int]:
        pars = {sum(self.alg.parity[l] for l in t) & 1 for t in self.coeffs}
        return pars.pop() if len(pars) == 1 else None

    def __repr__(self):
        if not self.coeffs:
            return "0"
        parts = []
        for t, c in sorted(self.coeffs.items()):
            body = " (x) ".join(t)
            parts.append(body if c == 1 else f"{c}*({body})")
        return " + ".join(parts)


def tau_element(A: FrobeniusAlgebra, n: int, i: int, j: int) -> TensorElement:
    """Teleporter tau_{i,j} in A^(x)n: sum_b (b in factor j) (b~ in factor i).

    Even of degree 2d; tokens pass through it: tau * a = s_{i,j}(a) * tau.
    """
    if not (1 <= i < j <= n):
        raise ValueError(f"need 1 <= i < j <= n, got i={i}, j={j}, n={n}")
    duals = A.dual_basis()
    out: Dict[tuple, Fraction] = {}
    one = A.one()
    for b_idx, b in enumerate(A.labels):
        dv = duals[b_idx]
        for dl, dc in dv.coeffs.items():
            slots = []
            for f in range(n, 0, -1):  # written order: factor n first
                if f == j:
                    slots.append(b)
                elif f == i:
                    slots.append(dl)
                else:
                    slots.append(None)
            # fill identity slots by expanding the unit
            terms = [(tuple(), dc)]
            for s in slots:
                nxt = []
                opts = [(s, Fraction(1))] if s is not None else list(one.coeffs.items())
                for t, c in terms:
                    for l, cl in opts:
                        nxt.append((t + (l,), c * cl))
                terms = nxt
            for t, c in terms:
                out[t] = out.get(t, Fraction(0)) + c
    return TensorElement(A, n, out)


def a_dagger(A: FrobeniusAlgebra, a: AlgebraElement) -> AlgebraElement:
    """sum_b (-1)^{parity(a)parity(b)} b a b~; basis independent, central for a=1."""
    if not a.is_homogeneous():
        raise ValueError("a_dagger needs a homogeneous argument")
    pa = a.parity() or 0
    out = A.zero()
    duals = A.dual_basis()
    for idx, b in enumerate(A.labels):
        sgn = -1 if (pa and A.parity[b]) else 1
        term = (A.basis_element(b) * a) * duals[idx]
        out = out + (term.scale(sgn))
    return out


# ---------------------------------------------------------------------------
# validation


class ValidationReport:
    """Named pass/fail lines; `ok` covers the Frobenius axioms, the three

    grading_* lines form the extra positivity hypothesis used by the
    categorification results and are reported separately."""

    CORE = (
        "associativity",
        "unit",
        "graded_multiplication",
        "trace_degree",
        "trace_supersymmetry",
        "nondegeneracy",
        "idempotents",
    )
    EXTRA = ("positive_grading", "degree_zero_even", "degree_zero_semisimple")

    def __init__(self):
        self.checks: List[Tuple[str, bool, str]] = []

    def add(self, name: str, ok: bool, detail: str = ""):
        self.checks.append((name, ok, detail))

    def result(self, name: str) -> bool:
        for n, ok, _ in self.checks:
            if n == name:
                return ok
        raise KeyError(name)

    @property
    def ok(self) -> bool:
        return all(ok for n, ok, _ in self.checks if n in self.CORE)

    @property
    def positivity_ok(self) -> bool:
        return all(ok for n, ok, _ in self.checks if n in self.EXTRA)

    def lines(self) -> List[str]:
        return [
            f"{'PASS' if ok else 'FAIL'} {name}" + (f": {detail}" if detail else "")
            for name, ok, detail in self.checks
        ]


def validate(A: FrobeniusAlgebra) -> ValidationReport:
    rep = ValidationReport()
    basis = [A.basis_element(l) for l in A.labels]

    bad = []
    for a, b, c in itertools.product(basis, repeat=3):
        if (a * b) * c != a * (b * c):
            bad.append((a, b, c))
            break
    rep.add("associativity", not bad, "" if not bad else f"fails at {bad[0]}")

    one = A.one()
    unit_ok = all(one * b == b == b * one for b in basis)
    rep.add("unit", unit_ok)

    graded_ok = True
    detail = ""
    for l1, l2 in itertools.product(A.labels, repeat=2):
        want_deg = A.degree[l1] + A.degree[l2]
        want_par = (A.parity[l1] + A.parity[l2]) & 1
        for l3 in A.mult.get((l1, l2), {}):
            if A.degree[l3] != want_deg or A.parity[l3] != want_par:
                graded_ok = False
                detail = f"{l1}*{l2} hits {l3}"
                break
    rep.add("graded_multiplication", graded_ok, detail)

    tr_deg_ok = all(
        A.degree[l] == 2 * A.d and A.parity[l] == 0 for l in A.trace if A.trace[l]
    )
    rep.add("trace_degree", tr_deg_ok)

    sym_ok = True
    for a, b in itertools.product(basis, repeat=2):
        la, lb = next(iter(a.coeffs)), next(iter(b.coeffs))
        sgn = -1 if (A.parity[la] and A.parity[lb]) else 1
        if (a * b).trace() != sgn * (b * a).trace():
            sym_ok = False
            break
    rep.add("trace_supersymmetry", sym_ok)

    rep.add("nondegeneracy", linalg.is_invertible(A.gram_matrix()))

    if A.idempotents is None:
        rep.add("idempotents", True, "none supplied")
    else:
        ok = all(e * e == e and e.is_homogeneous() for e in A.idempotents)
        ok = ok and all(
            (A.idempotents[i] * A.idempotents[j]).is_zero()
            for i in range(len(A.idempotents))
            for j in range(len(A.idempotents))
            if i != j
        )
        total = A.zero()
        for e in A.idempotents:
            total = total + e
        ok = ok and total == one
        rep.add("idempotents", ok)

    rep.add("positive_grading", all(A.degree[l] >= 0 for l in A.labels))

    zero_labels = [l for l in A.labels if A.degree[l] == 0]
    rep.add("degree_zero_even", all(A.parity[l] == 0 for l in zero_labels))

    # semisimplicity of the degree-zero part via its regular trace form
    closed = all(
        all(A.degree[l3] == 0 for l3 in A.mult.get((l1, l2), {}))
        for l1 in zero_labels
        for l2 in zero_labels
    )
    if not closed:
        rep.add("degree_zero_semisimple", False, "degree-0 part not closed")
    else:
        idx0 = {l: i for i, l in enumerate(zero_labels)}

        def left_mult_trace(l1, l2):
            # trace of x -> (l1*l2)*x on the degree-0 part
            prod = A.basis_element(l1) * A.basis_element(l2)
            t = Fraction(0)
            for l, c in prod.coeffs.items():
                for lz in zero_labels:
                    t += c * A.mult.get((l, lz), {}).get(lz, Fraction(0))
            return t

        gram = [
            [left_mult_trace(l1, l2) for l2 in zero_labels] for l1 in zero_labels
        ]
        rep.add("degree_zero_semisimple", linalg.is_invertible(gram))

    return rep


# ---------------------------------------------------------------------------
# center / cocenter


class CenterCocenter:
    """Bases of Z(A) and C(A), with the dual pairing tr(z * c-representative).

    cocenter_labels lists basis labels of A whose classes form a basis of
    the cocenter; cocenter_duals[i] is the element of Z(A) pairing to
    delta_ij with those classes.
    """

    def __init__(self, A, center_basis, cocenter_labels, cocenter_duals, comm_rows):
        self.alg = A
        self.center_basis: List[AlgebraElement] = center_basis
        self.cocenter_labels: List[str] = cocenter_labels
        self.cocenter_duals: List[AlgebraElement] = cocenter_duals
        self._comm_rows = comm_rows  # spanning rows of [A,A] in coordinates

    def project_to_cocenter(self, a: AlgebraElement) -> Dict[str, Fraction]:
        """Coordinates of the class of a in the chosen cocenter basis."""
        cols = self._comm_rows + [
            self.alg.basis_element(l).vector() for l in self.cocenter_labels
        ]
        mat = [[cols[j][i] for j in range(len(cols))] for i in range(self.alg.dim)]
        sol = linalg.solve(mat, a.vector())
        assert sol is not None, "cocenter projection must be solvable"
        k = len(self._comm_rows)
        return {
            l: sol[k + i]
            for i, l in enumerate(self.cocenter_labels)
            if sol[k + i]
        }

    def is_central(self, a: AlgebraElement) -> bool:
        mat = [z.vector() for z in self.center_basis]
        return linalg.in_row_space(mat, a.vector())


def center_cocenter(A: FrobeniusAlgebra) -> CenterCocenter:
    # center: per (degree, parity) block, solve the supercommutation equations
    blocks: Dict[Tuple[int, int], List[str]] = {}
    for l in A.labels:
        blocks.setdefault((A.degree[l], A.parity[l]), []).append(l)

    center_basis: List[AlgebraElement] = []
    for (deg, par), labs in sorted(blocks.items()):
        rows = []
        for b in A.labels:
            pb = A.parity[b]
            # row block: coefficient of each A-label in v*b - (-1)^{par pb} b*v
            for out_l in A.labels:
                row = []
                for l in labs:
                    c = A.mult.get((l, b), {}).get(out_l, Fraction(0))
                    sgn = -1 if (par and pb) else 1
                    c -= sgn * A.mult.get((b, l), {}).get(out_l, Fraction(0))
                    row.append(c)
                rows.append(row)
        for vec in linalg.nullspace(rows):
            center_basis.append(
                AlgebraElement(A, {l: c for l, c in zip(labs, vec) if c})
            )

    # cocenter: quotient by the span of supercommutators
    comm_rows: List[List[Fraction]] = []
    for l1, l2 in itertools.product(A.labels, repeat=2):
        sgn = -1 if (A.parity[l1] and A.parity[l2]) else 1
        v = (
            A.basis_element(l1) * A.basis_element(l2)
            - (A.basis_element(l2) * A.basis_element(l1)).scale(sgn)
        ).vector()
        if any(v):
            comm_rows.append(v)
    comm_rows = linalg.row_space_basis(comm_rows) if comm_rows else []

    cocenter_labels: List[str] = []
    span = [r[:] for r in comm_rows]
    base_rank = linalg.rank(span) if span else 0
    for l in A.labels:
        cand = span + [A.basis_element(l).vector()]
        r = linalg.rank(cand)
        if r > base_rank:
            cocenter_labels.append(l)
            span = cand
            base_rank = r

    # duals in Z(A): solve tr(z * rep_j) = delta_ij within the center
    reps = [A.basis_element(l) for l in cocenter_labels]
    mat = [[(z * rj).trace() for z in center_basis] for rj in reps]
    duals = []
    for i in range(len(reps)):
        rhs = [Fraction(int(i == j)) for j in range(len(reps))]
        sol = linalg.solve(mat, rhs)
        assert sol is not None, "center/cocenter pairing must be nondegenerate"
        z = A.zero()
        for c, zb in zip(sol, center_basis):
            z = z + zb.scale(c)
        duals.append(z)

    return CenterCocenter(A, center_basis, cocenter_labels, duals, comm_rows)


# ---------------------------------------------------------------------------
# Cartan matrix and truncation


def _graded_dim_of_span(A: FrobeniusAlgebra, elements: List[AlgebraElement]) -> Scalar:
    blocks: Dict[Tuple[int, int], List[List[Fraction]]] = {}
    for v in elements:
        if v.is_zero():
            continue
        key = (v.degree(), v.parity())
        assert key[0] is not None and key[1] is not None
        blocks.setdefault(key, []).append(v.vector())
    out = Scalar.zero()
    for (deg, par), rows in sorted(blocks.items()):
        out = out + Scalar.monomial(linalg.rank(rows), deg, par)
    return out


def cartan_matrix(A: FrobeniusAlgebra) -> List[List[Scalar]]:
    """Entries q^{-d} grdim e_i A e_j; bar-Hermitian by trace symmetry."""
    if not A.idempotents:
        raise ValueError("cartan_matrix needs distinguished idempotents")
    qd = Scalar.q(-A.d)
    out = []
    for ei in A.idempotents:
        row = []
        for ej in A.idempotents:
            span = [ei * A.basis_element(b) * ej for b in A.labels]
            row.append(qd * _graded_dim_of_span(A, span))
        out.append(row)
    return out


class TruncationResult:
    def __init__(self, algebra: FrobeniusAlgebra, morita_full: bool):
        self.algebra = algebra
        self.morita_full = morita_full


def truncate(A: FrobeniusAlgebra, e: AlgebraElement) -> TruncationResult:
    """The algebra eAe with the restricted trace; flags whether AeA = A.

    When AeA = A the truncation preserves the whole module theory; the
    flag is reported, not enforced.
    """
    if e.is_zero() or e * e != e:
        raise ValueError("truncate needs a nonzero idempotent")
    if not e.is_homogeneous():
        raise ValueError("truncate needs a homogeneous idempotent")

    span = [e * A.basis_element(b) * e for b in A.labels]
    blocks: Dict[Tuple[int, int], List[List[Fraction]]] = {}
    for v in span:
        if v.is_zero():
            continue
        blocks.setdefault((v.degree(), v.parity()), []).append(v.vector())

    basis_vecs: List[Tuple[List[Fraction], int, int]] = []
    for (deg, par), rows in sorted(blocks.items()):
        for row in linalg.row_space_basis(rows):
            basis_vecs.append((row, deg, par))

    labels, degree, parity = [], {}, {}
    for i, (vec, deg, par) in enumerate(basis_vecs):
        support = [(l, c) for l, c in zip(A.labels, vec) if c]
        if len(support) == 1 and support[0][1] == 1:
            lab = support[0][0]
        else:
            lab = f"w{i}"
        while lab in degree:
            lab = f"w{i}_{lab}"
        labels.append(lab)
        degree[lab] = deg
        parity[lab] = par

    mat = [[basis_vecs[j][0][i] for j in range(len(basis_vecs))] for i in range(A.dim)]

    def express(v: AlgebraElement) -> Coeffs:
        sol = linalg.solve(mat, v.vector())
        assert sol is not None, "product left eAe, truncation is inconsistent"
        return {labels[i]: c for i, c in enumerate(sol) if c}

    reps = [A.from_vector(vec) for vec, _d, _p in basis_vecs]
    mult = {}
    for i, li in enumerate(labels):
        for j, lj in enumerate(labels):
            prod = reps[i] * reps[j]
            if not prod.is_zero():
                mult[(li, lj)] = express(prod)
    trace = {}
    for i, li in enumerate(labels):
        t = reps[i].trace()
        if t:
            trace[li] = t

    idems = None
    if A.idempotents:
        kept = []
        for ei in A.idempotents:
            if not ei.is_zero() and e * ei * e == ei:
                kept.append(ei)
        total = A.zero()
        for ei in kept:
            total = total + ei
        if kept and total == e:
            idems = [express(ei) for ei in kept]
    if idems is None:
        idems = [express(e)]

    out = FrobeniusAlgebra(
        name=f"{A.name}|e",
        d=A.d,
        labels=labels,
        degree=degree,
        parity=parity,
        unit=express(e),
        mult=mult,
        trace=trace,
        idempotents=idems,
    )

    # AeA = A test
    rows = []
    for b1 in A.labels:
        eb = A.basis_element(b1) * e
        for b2 in A.labels:
            v = eb * A.basis_element(b2)
            if not v.is_zero():
                rows.append(v.vector())
    morita_full = bool(rows) and linalg.rank(rows) == A.dim
    return TruncationResult(out, morita_full)


# ---------------------------------------------------------------------------
# constructors


def _ground_field() -> FrobeniusAlgebra:
    return FrobeniusAlgebra(
        name="ground_field",
        d=0,
        labels=["1"],
        degree={"1": 0},
        parity={"1": 0},
        unit={"1": 1},
        mult={("1", "1"): {"1": 1}},
        trace={"1": 1},
        idempotents=[{"1": 1}],
    )


def _product_of_fields(N: int) -> FrobeniusAlgebra:
    labels = [f"e{i}" for i in range(1, N + 1)]
    return FrobeniusAlgebra(
        name=f"product_of_fields({N})",
        d=0,
        labels=labels,
        degree={l: 0 for l in labels},
        parity={l: 0 for l in labels},
        unit={l: 1 for l in labels},
        mult={(l, l): {l: 1} for l in labels},
        trace={l: 1 for l in labels},
        idempotents=[{l: 1} for l in labels],
    )


def _dual_numbers() -> FrobeniusAlgebra:
    return FrobeniusAlgebra(
        name="dual_numbers",
        d=1,
        labels=["1", "x"],
        degree={"1": 0, "x": 2},
        parity={"1": 0, "x": 0},
        unit={"1": 1},
        mult={
            ("1", "1"): {"1": 1},
            ("1", "x"): {"x": 1},
            ("x", "1"): {"x": 1},
        },
        trace={"x": 1},
        idempotents=[{"1": 1}],
    )


def _exterior_pair() -> FrobeniusAlgebra:
    labels = ["1", "t1", "t2", "t12"]
    mult = {
        ("1", "1"): {"1": 1},
        ("1", "t1"): {"t1": 1},
        ("1", "t2"): {"t2": 1},
        ("1", "t12"): {"t12": 1},
        ("t1", "1"): {"t1": 1},
        ("t2", "1"): {"t2": 1},
        ("t12", "1"): {"t12": 1},
        ("t1", "t2"): {"t12": 1},
        ("t2", "t1"): {"t12": -1},
    }
    return FrobeniusAlgebra(
        name="exterior_pair",
        d=1,
        labels=labels,
        degree={"1": 0, "t1": 1, "t2": 1, "t12": 2},
        parity={"1": 0, "t1": 1, "t2": 1, "t12": 0},
        unit={"1": 1},
        mult=mult,
        trace={"t12": 1},
        idempotents=[{"1": 1}],
    )


def _zigzag(n: int) -> FrobeniusAlgebra:
    """Path algebra of the A_n chain modulo the zigzag relations.

    Arrows a{i}{j} run from vertex i to vertex j; paths compose right to
    left (so a21*a12 starts at 1).  Both round trips at a vertex equal
    the loop c_i, straight-through length-2 paths and all length-3 paths
    vanish.  Everything is even; vertices sit in degree 0, arrows in
    degree 1, loops in degree 2, and the trace picks out the loops.
    """
    if n < 2:
        raise ValueError("zigzag needs at least two vertices")
    if n > 9:
        raise ValueError("zigzag labels support at most 9 vertices")
    verts = list(range(1, n + 1))
    arrows = [(i, j) for i in verts for j in (i - 1, i + 1) if 1 <= j <= n]
    labels = (
        [f"e{i}" for i in verts]
        + [f"a{i}{j}" for i, j in arrows]
        + [f"c{i}" for i in verts]
    )
    degree = {l: 0 for l in labels}
    parity = {l: 0 for l in labels}
    for i, j in arrows:
        degree[f"a{i}{j}"] = 1
    for i in verts:
        degree[f"c{i}"] = 2

    mult: Dict[Tuple[str, str], Coeffs] = {}
    for i in verts:
        mult[(f"e{i}", f"e{i}")] = {f"e{i}": 1}
        mult[(f"e{i}", f"c{i}")] = {f"c{i}": 1}
        mult[(f"c{i}", f"e{i}")] = {f"c{i}": 1}
    for i, j in arrows:
        a = f"a{i}{j}"
        mult[(f"e{j}", a)] = {a: 1}  # target idempotent on the left
        mult[(a, f"e{i}")] = {a: 1}
        mult[(f"a{j}{i}", a)] = {f"c{i}": 1}  # round trip based at i

    return FrobeniusAlgebra(
        name=f"zigzag(A{n})",
        d=1,
        labels=labels,
        degree=degree,
        parity=parity,
        unit={f"e{i}": 1 for i in verts},
        mult=mult,
        trace={f"c{i}": 1 for i in verts},
        idempotents=[{f"e{i}": 1} for i in verts],
    )


def _group_algebra(labels, table, identity) -> FrobeniusAlgebra:
    labels = list(labels)
    lset = set(labels)
    if identity not in lset:
        raise ValueError("identity label missing from the label list")
    for g, h in itertools.product(labels, repeat=2):
        if (g, h) not in table or table[(g, h)] not in lset:
            raise ValueError(f"multiplication table incomplete at ({g},{h})")
    for g, h, k in itertools.product(labels, repeat=3):
        if table[(table[(g, h)], k)] != table[(g, table[(h, k)])]:
            raise ValueError("group table is not associative")
    mult = {(g, h): {table[(g, h)]: 1} for g, h in itertools.product(labels, repeat=2)}
    return FrobeniusAlgebra(
        name="group_algebra",
        d=0,
        labels=labels,
        degree={l: 0 for l in labels},
        parity={l: 0 for l in labels},
        unit={identity: 1},
        mult=mult,
        trace={identity: 1},
        idempotents=[{identity: 1}],
    )


def build_algebra(kind: str, **params) -> FrobeniusAlgebra:
    if kind == "ground_field":
        return _ground_field()
    if kind == "product_of_fields":
        return _product_of_fields(int(params["N"]))
    if kind == "dual_numbers":
        return _dual_numbers()
    if kind == "exterior_pair":
        return _exterior_pair()
    if kind == "zigzag":
        return _zigzag(int(params["n"]))
    if kind == "group_algebra":
        return _group_algebra(
            params["labels"], params["table"], params["identity"]
        )
    raise ValueError(f"unknown algebra kind {kind!r}")


# ---------------------------------------------------------------------------
# JSON interface


def algebra_to_json(A: FrobeniusAlgebra) -> dict:
    out = {
        "name": A.name,
        "d": A.d,
        "basis": [
            {"label": l, "degree": A.degree[l], "parity": A.parity[l]}
            for l in A.labels
        ],
        "unit": {l: str(c) for l, c in sorted(A.unit.items())},
        "mult": [
            {"l": l, "r": r, "out": {k: str(c) for k, c in sorted(v.items())}}
            for (l, r), v in sorted(A.mult.items())
        ],
        "trace": {l: str(c) for l, c in sorted(A.trace.items())},
    }
    if A.idempotents is not None:
        out["idempotents"] = [
            {l: str(c) for l, c in sorted(e.coeffs.items())} for e in A.idempotents
        ]
    return out


def algebra_from_json(data: dict) -> FrobeniusAlgebra:
    labels = [b["label"] for b in data["basis"]]
    degree = {b["label"]: int(b["degree"]) for b in data["basis"]}
    parity = {b["label"]: int(b["parity"]) for b in data["basis"]}
    mult = {
        (m["l"], m["r"]): {l: Fraction(c) for l, c in m["out"].items()}
        for m in data.get("mult", [])
    }
    idem = data.get("idempotents")
    return FrobeniusAlgebra(
        name=data.get("name", "algebra"),
        d=int(data["d"]),
        labels=labels,
        degree=degree,
        parity=parity,
        unit={l: Fraction(c) for l, c in data["unit"].items()},
        mult=mult,
        trace={l: Fraction(c) for l, c in data.get("trace", {}).items()},
        idempotents=None
        if idem is None
        else [{l: Fraction(c) for l, c in e.items()} for e in idem],
    )
