"""Quantum Miura operators and the explicit generator families.

A Miura operator is a polynomial in a shifted derivative Dhat whose
coefficients are fields (or square matrices of fields) over one
generator table.  Dhat obeys [Dhat, X(z)] = c*D(X)(z) for a fixed
Scalar c; it is a bookkeeping symbol only and never survives into a
FieldState: composition (opmul) and application (apply_op) eliminate
it.  Multi-factor products nest to the right, so each normal order has
an elementary left factor; on tables whose blocks have vanishing
pairwise products the left-to-right fold agrees.
"""

import itertools
import math
from fractions import Fraction

from .errors import BadSplit, ShapeMismatch
from .glstruct import e_mat, mat_bracket, pyramid_from_columns, tau_form
from .scalars import K, ONE, Scalar, ZERO
from .vertexcore import (
    FieldState,
    GeneratorTable,
    derive,
    derive_n,
    normal_order,
    nth_product,
)

__all__ = [
    "MiuraOperator",
    "apply_fold",
    "apply_op",
    "classical_shadow",
    "elementary",
    "lowering_expansion",
    "miura_fold",
    "opmul",
    "principal_generators",
    "principal_table",
    "rectangular_generators",
    "rectangular_table",
    "subregular_generators",
    "subregular_table",
    "unit_operator",
    "virasoro_extraction",
]


# ---------------------------------------------------------------------------
# Coefficient cells: a FieldState, or a square tuple-of-tuples of them.

def _is_matrix(cell) -> bool:
    return isinstance(cell, tuple)


def _cell_table(cell):
    return cell[0][0].table if _is_matrix(cell) else cell.table


def _cell_zero(like):
    if _is_matrix(like):
        z = like[0][0].table.zero()
        return tuple(tuple(z for _ in row) for row in like)
    return like.table.zero()


def _cell_unit(like):
    if _is_matrix(like):
        t = like[0][0].table
        return tuple(
            tuple(t.vacuum() if i == j else t.zero() for j in range(len(like)))
            for i in range(len(like))
        )
    return like.table.vacuum()


def _cell_add(a, b):
    if _is_matrix(a) != _is_matrix(b):
        raise ShapeMismatch("cannot mix scalar and matrix coefficients")
    if not _is_matrix(a):
        return a + b
    if len(a) != len(b):
        raise ShapeMismatch("matrix coefficients of different sizes")
    return tuple(tuple(x + y for x, y in zip(ra, rb)) for ra, rb in zip(a, b))


def _cell_scale(a, s: Scalar):
    if _is_matrix(a):
        return tuple(tuple(x * s for x in row) for row in a)
    return a * s


def _cell_derive(a, m: int = 1):
    if m == 0:
        return a
    if _is_matrix(a):
        return tuple(tuple(derive_n(x, m) for x in row) for row in a)
    return derive_n(a, m)


def _cell_no(a, b):
    if _is_matrix(a) != _is_matrix(b):
        raise ShapeMismatch("cannot mix scalar and matrix coefficients")
    if not _is_matrix(a):
        return normal_order(a, b)
    n = len(a)
    if n != len(b):
        raise ShapeMismatch("matrix coefficients of different sizes")
    out = []
    for i in range(n):
        row = []
        for j in range(n):
            acc = a[0][0].table.zero()
            for m in range(n):
                acc = acc + normal_order(a[i][m], b[m][j])
            row.append(acc)
        out.append(tuple(row))
    return tuple(out)


def _cell_is_zero(a) -> bool:
    if _is_matrix(a):
        return all(x.is_zero() for row in a for x in row)
    return a.is_zero()


def _cell_eq(a, b) -> bool:
    return _cell_is_zero(_cell_add(a, _cell_scale(b, Scalar(-1))))


class MiuraOperator:
    """sum_i A_i Dhat^i with coefficient cells A_0..A_d."""

    __slots__ = ("coeffs", "c")

    def __init__(self, coeffs, c: Scalar):
        coeffs = tuple(coeffs)
        if not coeffs:
            raise ShapeMismatch("operator needs at least one coefficient")
        while len(coeffs) > 1 and _cell_is_zero(coeffs[-1]):
            coeffs = coeffs[:-1]
        self.coeffs = coeffs
        self.c = Scalar(c) if not isinstance(c, Scalar) else c

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    def coefficient(self, i: int):
        if 0 <= i < len(self.coeffs):
            return self.coeffs[i]
        return _cell_zero(self.coeffs[0])

    def __eq__(self, other):
        if not isinstance(other, MiuraOperator):
            return NotImplemented
        if self.c != other.c or len(self.coeffs) != len(other.coeffs):
            return False
        return all(_cell_eq(a, b) for a, b in zip(self.coeffs, other.coeffs))

    def __repr__(self):
        return f"<MiuraOperator degree {self.degree}>"


def unit_operator(table, c: Scalar, size: int = 0) -> MiuraOperator:
    if size:
        cell = tuple(
            tuple(table.vacuum() if i == j else table.zero() for j in range(size))
            for i in range(size)
        )
    else:
        cell = table.vacuum()
    return MiuraOperator((cell,), c)


def elementary(part, c: Scalar) -> MiuraOperator:
    """The factor Dhat + part."""
    return MiuraOperator((part, _cell_unit(part)), c)


def opmul(P: MiuraOperator, Q: MiuraOperator) -> MiuraOperator:
    """Composition: Dhat^i B = sum_q binom(i,q) c^q D^q(B) Dhat^(i-q)."""
    if P.c != Q.c:
        raise ShapeMismatch("operators with different Dhat constants")
    out = [None] * (P.degree + Q.degree + 1)
    for i, A in enumerate(P.coeffs):
        if _cell_is_zero(A):
            continue
        for j, B in enumerate(Q.coeffs):
            if _cell_is_zero(B):
                continue
            for q in range(i + 1):
                cell = _cell_no(A, _cell_derive(B, q))
                if q:
                    cell = _cell_scale(cell, (P.c ** q) * Scalar(math.comb(i, q)))
                k = i + j - q
                out[k] = cell if out[k] is None else _cell_add(out[k], cell)
    filler = _cell_zero(P.coeffs[0])
    return MiuraOperator(tuple(c if c is not None else filler for c in out), P.c)


def apply_op(P: MiuraOperator, X):
    """The field P applied to X: Dhat differentiates everything right of it."""
    out = _cell_no(P.coeffs[0], X)
    for m in range(1, len(P.coeffs)):
        if _cell_is_zero(P.coeffs[m]):
            continue
        out = _cell_add(out, _cell_scale(_cell_no(P.coeffs[m], _cell_derive(X, m)),
                                         P.c ** m))
    return out


def miura_fold(parts, c: Scalar, tail: MiuraOperator = None) -> MiuraOperator:
    """Right-nested product of the factors (Dhat + part) over `parts`."""
    parts = list(parts)
    if tail is None:
        if not parts:
            raise ShapeMismatch("empty fold needs an explicit tail")
        acc = unit_operator(_cell_table(parts[0]), c,
                            len(parts[0]) if _is_matrix(parts[0]) else 0)
    else:
        acc = tail
    for part in reversed(parts):
        acc = opmul(elementary(part, c), acc)
    return acc


def apply_fold(parts, c: Scalar, X):
    """Right-nested :(Dhat+p_1)...(Dhat+p_m) X: as a field."""
    acc = X
    for part in reversed(list(parts)):
        acc = _cell_add(_cell_scale(_cell_derive(acc), c), _cell_no(part, acc))
    return acc


# ---------------------------------------------------------------------------
# Principal family: N bosons with the diagonal pairing (k+N).

def principal_table(N: int) -> GeneratorTable:
    gens = [(f"b[{i}]", 1) for i in range(1, N + 1)]
    pair2 = {(f"b[{i}]", f"b[{i}]"): K + N for i in range(1, N + 1)}
    return GeneratorTable(gens=gens, pair1={}, pair2=pair2)


def principal_generators(N: int, table: GeneratorTable = None):
    """[W_0..W_N] from the ascending fold of (Dhat + b[i]), c = k+N-1."""
    if N < 1:
        raise ShapeMismatch("need at least one boson")
    if table is None:
        table = principal_table(N)
    c = K + N - 1
    op = miura_fold([table.gen(f"b[{i}]") for i in range(1, N + 1)], c)
    return [op.coefficient(N - i) for i in range(N + 1)]


def classical_shadow(x: FieldState):
    """Derivative-free monomials as a commutative polynomial {names: coeff}."""
    out = {}
    for mono, coeff in x.terms.items():
        if any(m for _, m in mono):
            continue
        key = tuple(x.table.names[g] for g, _ in mono)
        out[key] = out.get(key, ZERO) + coeff
    return {k: v for k, v in out.items() if not v.is_zero()}


# ---------------------------------------------------------------------------
# Rectangular family: l commuting copies of affine gl_n, pairing
# (k + n(l-1)) tr(uv) + tr(u) tr(v) on each copy.

def _rect_name(t: int, i: int, j: int) -> str:
    return f"e{t}[{i}.{j}]"


def rectangular_table(n: int, l: int) -> GeneratorTable:
    gens = []
    for t in range(1, l + 1):
        for i in range(1, n + 1):
            for j in range(1, n + 1):
                gens.append((_rect_name(t, i, j), 1))
    pair1 = {}
    pair2 = {}
    entries = [(i, j) for i in range(1, n + 1) for j in range(1, n + 1)]
    for t in range(1, l + 1):
        for p, (i, j) in enumerate(entries):
            for (a, b) in entries[p:]:
                lhs = _rect_name(t, i, j)
                rhs = _rect_name(t, a, b)
                br = mat_bracket(e_mat(i, j), e_mat(a, b))
                combos = {
                    _rect_name(t, r, s): Scalar(v)
                    for (r, s), v in br.items() if v
                }
                level = ZERO
                if j == a and b == i:
                    level = level + K + n * (l - 1)
                if i == j and a == b:
                    level = level + Scalar(1)
                if not level.is_zero():
                    pair2[(lhs, rhs)] = level
                combos = {k: v for k, v in combos.items() if not v.is_zero()}
                if lhs != rhs and combos:
                    pair1[(lhs, rhs)] = combos
    return GeneratorTable(gens=gens, pair1=pair1, pair2=pair2)


def rectangular_generators(n: int, l: int, table: GeneratorTable = None):
    """[W_0..W_l] as n x n matrix cells; entry (i,j) of A_t is e_{j,i}^{(t)}."""
    if n < 1 or l < 1:
        raise ShapeMismatch("need a nonempty rectangle")
    if table is None:
        table = rectangular_table(n, l)
    c = K + n * (l - 1)
    mats = []
    for t in range(1, l + 1):
        mats.append(tuple(
            tuple(table.gen(_rect_name(t, j, i)) for j in range(1, n + 1))
            for i in range(1, n + 1)
        ))
    op = miura_fold(mats, c)
    return [op.coefficient(l - t) for t in range(l + 1)]


# ---------------------------------------------------------------------------
# Subregular family: the degree-zero subalgebra of gl_N for the pyramid
# (2, 1^(N-2)) carries h_1..h_N plus the sl_2 pair e[1.2], e[2.1]; the
# pairing is the shifted form used by the reduced currents.

def subregular_table(N: int) -> GeneratorTable:
    if N < 2:
        raise BadSplit("subregular shape needs N >= 2")
    g = pyramid_from_columns((2,) + (1,) * (N - 2)).grading()
    mats = {f"h[{i}]": e_mat(i, i) for i in range(1, N + 1)}
    mats["e[1.2]"] = e_mat(1, 2)
    mats["e[2.1]"] = e_mat(2, 1)
    names = [f"h[{i}]" for i in range(1, N + 1)] + ["e[1.2]", "e[2.1]"]
    gens = [(name, 1) for name in names]
    pair2 = {}
    for p, x in enumerate(names):
        for y in names[p:]:
            val = tau_form(g, mats[x], mats[y])
            if not val.is_zero():
                pair2[(x, y)] = val
    pair1 = {}
    for i in (1, 2):
        sign = Fraction(1) if i == 1 else Fraction(-1)
        pair1[(f"h[{i}]", "e[1.2]")] = {"e[1.2]": Scalar(sign)}
        pair1[(f"h[{i}]", "e[2.1]")] = {"e[2.1]": Scalar(-sign)}
    pair1[("e[1.2]", "e[2.1]")] = {"h[1]": ONE, "h[2]": Scalar(-1)}
    return GeneratorTable(gens=gens, pair1=pair1, pair2=pair2)


def subregular_generators(N: int, N1: int):
    """The four reduced currents, their split companions, and the tail folds.

    W holds the coefficients of the descending fold over the negated tail
    bosons (used by the lowering-current expansion); Wplus the coefficients
    of the ascending fold over the tail bosons themselves, which are the
    generators of the tail block in the same convention as
    principal_generators.
    """
    if N1 < 2:
        raise BadSplit("the sl2 block must sit inside the first piece")
    if N1 > N:
        raise BadSplit("split point beyond the pyramid")
    table = subregular_table(N)
    c = K + N - 1
    N2 = N - N1
    h = {i: table.gen(f"h[{i}]") for i in range(1, N + 1)}
    e12 = table.gen("e[1.2]")
    e21 = table.gen("e[2.1]")

    def _currents(m):
        zsum = table.zero()
        for i in range(1, m + 1):
            zsum = zsum + h[i]
        big = h[1] - zsum * Scalar(Fraction(1, m))
        fold = [h[1] - h[j] for j in range(m, 2, -1)]
        return big, zsum, e12, apply_fold(fold, c, e21)

    H, Z, E, F = _currents(N)
    H1, Z1, E1, F1 = _currents(N1)
    if N2:
        wop = miura_fold([h[j] * Scalar(-1) for j in range(N, N1, -1)], c)
        pop = miura_fold([h[j] for j in range(N1 + 1, N + 1)], c)
    else:
        wop = unit_operator(table, c)
        pop = unit_operator(table, c)
    W = [wop.coefficient(N2 - i) for i in range(N2 + 1)]
    Wplus = [pop.coefficient(N2 - i) for i in range(N2 + 1)]
    P = [_dressed_ladder(h[1], c, i, table.vacuum()) for i in range(N2 + 1)]
    return {
        "table": table, "c": c, "N": N, "N1": N1, "N2": N2,
        "H": H, "Z": Z, "E": E, "F": F,
        "H1": H1, "Z1": Z1, "E1": E1, "F1": F1,
        "W": W, "Wplus": Wplus, "P": P,
    }


def _dressed_ladder(h1: FieldState, c: Scalar, i: int, body: FieldState) -> FieldState:
    # Collecting i copies of NO(h1, -) on the right of the fold converts
    # each crossed c*D into a derivative landing on one h1; the binomial
    # counts the choices at fixed dressing depth.
    if i == 0:
        return body
    out = body.table.zero()
    for s in range(i):
        step = normal_order(derive_n(h1, s), _dressed_ladder(h1, c, i - 1 - s, body))
        out = out + step * ((c * Scalar(-1)) ** s) * Scalar(math.comb(i - 1, s))
    return out


def lowering_expansion(gens) -> FieldState:
    """Rebuild the full lowering current from the two split blocks.

    Sums, over the number i of first-block boson insertions, the nested
    application of every (N2 - i)-subset of the tail factors
    (c*D - NO(h_t, -)) to the dressed ladder acting on the short lowering
    current.  Exact at every size; returns a FieldState to compare with
    gens["F"].
    """
    table, c, N2 = gens["table"], gens["c"], gens["N2"]
    h1 = table.gen("h[1]")
    parts = [table.gen(f"h[{j}]") * Scalar(-1)
             for j in range(gens["N"], gens["N1"], -1)]
    out = table.zero()
    for i in range(N2 + 1):
        body = _dressed_ladder(h1, c, i, gens["F1"])
        for omit in itertools.combinations(range(N2), i):
            kept = [p for q, p in enumerate(parts) if q not in omit]
            out = out + apply_fold(kept, c, body)
    return out


# ---------------------------------------------------------------------------
# Virasoro extraction for the two-boson principal family.

def virasoro_extraction():
    """Solve for the conformal element of the N = 2 principal family.

    Ansatz space: NO(W1,W1), D(W1), W2, NO(b1-b2, b1-b2).  Linear
    conditions: modes 1 and 0 of T act on each boson as weight one and
    translation, mode 2 kills W1, and the screening charge kills T.
    Returns the report with T, the central charge, and the self-product
    audit.
    """
    from .fock import FockSpace, screening_apply
    from .wakimoto import _gauss_solve, screening_spec

    table = principal_table(2)
    ws = principal_generators(2, table)
    W1, W2 = ws[1], ws[2]
    b1, b2 = table.gen("b[1]"), table.gen("b[2]")
    hm = b1 - b2
    basis = [normal_order(W1, W1), derive(W1), W2, normal_order(hm, hm)]

    spec = screening_spec(pyramid_from_columns((1, 1)), (1, 2))
    space = FockSpace(table, heis=("b[1]", "b[2]"))

    equations = []
    for x in (b1, b2):
        equations.append(([nth_product(t, 1, x) for t in basis], x))
        equations.append(([nth_product(t, 0, x) for t in basis], derive(x)))
    equations.append(([nth_product(t, 2, W1) for t in basis], table.zero()))
    equations.append((
        [screening_apply(spec, space.state({}, t)).body for t in basis],
        table.zero(),
    ))

    rows = []
    for cols, rhs in equations:
        monos = set(rhs.terms)
        for colf in cols:
            monos.update(colf.terms)
        for mono in monos:
            rows.append([f.terms.get(mono, ZERO) for f in cols]
                        + [rhs.terms.get(mono, ZERO)])
    sol = _gauss_solve(rows, len(basis))

    T = table.zero()
    for coeff, t in zip(sol, basis):
        T = T + t * coeff

    witnesses = []
    if nth_product(T, 0, T) != derive(T):
        witnesses.append("mode 0 is not the derivative")
    if nth_product(T, 1, T) != T * Scalar(2):
        witnesses.append("mode 1 is not twice T")
    if not nth_product(T, 2, T).is_zero():
        witnesses.append("mode 2 does not vanish")
    third = nth_product(T, 3, T)
    central = (third.terms.get((), ZERO)) * Scalar(2)
    if third != table.vacuum() * (central / Scalar(2)):
        witnesses.append("mode 3 is not scalar")
    for n in range(4, 8):
        if not nth_product(T, n, T).is_zero():
            witnesses.append(f"mode {n} does not vanish")
    return {
        "check": "virasoro_extraction",
        "status": "pass" if not witnesses else "fail",
        "T": T,
        "coefficients": sol,
        "central_charge": central,
        "witnesses": witnesses,
        "table": table,
    }
