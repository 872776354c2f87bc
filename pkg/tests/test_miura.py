"""Operator composition, generator families, folds, Virasoro extraction."""

from fractions import Fraction

import pytest

from walgebra.errors import BadSplit, ShapeMismatch
from walgebra.miura import (
    MiuraOperator,
    apply_fold,
    apply_op,
    classical_shadow,
    elementary,
    lowering_expansion,
    miura_fold,
    opmul,
    principal_generators,
    principal_table,
    rectangular_generators,
    rectangular_table,
    subregular_generators,
    subregular_table,
    unit_operator,
    virasoro_extraction,
)
from walgebra.scalars import K, ONE, Scalar, ZERO, register_pole_factor
from walgebra.vertexcore import (
    GeneratorTable,
    derive,
    normal_order,
    nth_product,
)


def _tau_style_table(N):
    # pairwise level (k+N) on the diagonal, -1 everywhere (the shape the
    # free-boson lift produces before the center is re-leveled)
    pair2 = {}
    for i in range(1, N + 1):
        for j in range(i, N + 1):
            pair2[(f"b[{i}]", f"b[{j}]")] = (K + N if i == j else ZERO) - ONE
    return GeneratorTable(gens=[(f"b[{i}]", 1) for i in range(1, N + 1)],
                          pair1={}, pair2=pair2)


def _left_fold(parts, c):
    acc = elementary(parts[0], c)
    for p in parts[1:]:
        acc = opmul(acc, elementary(p, c))
    return acc


# ---------------------------------------------------------------------------
# Composition.

def test_opmul_two_boson_fixture():
    # hand oracle: (Dhat+b1)(Dhat+b2) at c = k+1
    t = principal_table(2)
    b1, b2 = t.gen("b[1]"), t.gen("b[2]")
    c = K + 1
    prod = opmul(elementary(b1, c), elementary(b2, c))
    assert prod.degree == 2
    assert prod.coefficient(2) == t.vacuum()
    assert prod.coefficient(1) == b1 + b2
    assert prod.coefficient(0) == normal_order(b1, b2) + derive(b2) * (K + 1)


def test_opmul_pure_derivative_powers():
    t = principal_table(2)
    c = K + 1
    dhat = elementary(t.zero(), c)
    sq = opmul(dhat, dhat)
    assert sq.degree == 2
    assert sq.coefficient(2) == t.vacuum()
    assert sq.coefficient(1).is_zero()
    assert sq.coefficient(0).is_zero()


def test_opmul_rejects_mixed_constants():
    t = principal_table(2)
    with pytest.raises(ShapeMismatch):
        opmul(elementary(t.gen("b[1]"), K), elementary(t.gen("b[2]"), K + 1))


def test_fold_associativity_on_diagonal_table():
    # all blocks pairwise disjoint: left-to-right == right-to-left
    t = principal_table(3)
    c = K + 2
    parts = [t.gen(f"b[{i}]") for i in range(1, 4)]
    right = miura_fold(parts, c)
    left = _left_fold(parts, c)
    assert all(left.coefficient(m) == right.coefficient(m) for m in range(4))
    ab_c = opmul(opmul(elementary(parts[0], c), elementary(parts[1], c)),
                 elementary(parts[2], c))
    a_bc = opmul(elementary(parts[0], c),
                 opmul(elementary(parts[1], c), elementary(parts[2], c)))
    assert all(ab_c.coefficient(m) == a_bc.coefficient(m) for m in range(4))


def test_fold_nesting_matters_off_diagonal():
    # nonzero cross pairings break associativity: the families fix the
    # right-nested order, so the left fold is a different operator
    t = _tau_style_table(3)
    c = K + 2
    parts = [t.gen(f"b[{i}]") for i in range(1, 4)]
    right = miura_fold(parts, c)
    left = _left_fold(parts, c)
    assert any(left.coefficient(m) != right.coefficient(m) for m in range(4))


def test_apply_fold_nests_rather_than_expands():
    # applying factor by factor differs from forming coefficient fields
    # first whenever the argument pairs with the factors
    t = principal_table(3)
    c = K + 2
    parts = [t.gen(f"b[{i}]") for i in range(1, 4)]
    X = t.gen("b[1]")
    assert apply_fold(parts, c, X) != apply_op(miura_fold(parts, c), X)


def test_apply_op_unit():
    t = principal_table(2)
    X = normal_order(t.gen("b[1]"), t.gen("b[2]"))
    assert apply_op(unit_operator(t, K + 1), X) == X


# ---------------------------------------------------------------------------
# Principal family.

def test_principal_two_boson_generators():
    ws = principal_generators(2)
    t = ws[0].table
    b1, b2 = t.gen("b[1]"), t.gen("b[2]")
    assert ws[0] == t.vacuum()
    assert ws[1] == b1 + b2
    assert ws[2] == normal_order(b1, b2) + derive(b2) * (K + 1)


def test_principal_top_coefficients():
    for N in (1, 2, 3, 4):
        ws = principal_generators(N)
        t = ws[0].table
        total = t.zero()
        for i in range(1, N + 1):
            total = total + t.gen(f"b[{i}]")
        assert ws[0] == t.vacuum()
        assert ws[1] == total


def test_principal_classical_shadow_is_elementary_symmetric():
    N = 3
    ws = principal_generators(N)
    names = [f"b[{i}]" for i in range(1, N + 1)]
    import itertools
    for d in range(1, N + 1):
        expect = {tuple(c): ONE for c in itertools.combinations(names, d)}
        assert classical_shadow(ws[d]) == expect


def test_principal_table_pairings():
    t = principal_table(3)
    b1, b2 = t.gen("b[1]"), t.gen("b[2]")
    assert nth_product(b1, 1, b1) == t.vacuum() * (K + 3)
    assert nth_product(b1, 1, b2).is_zero()
    assert nth_product(b1, 0, b2).is_zero()


# ---------------------------------------------------------------------------
# Rectangular family.

def test_rectangular_first_order_is_entrywise_sum():
    n = l = 2
    table = rectangular_table(n, l)
    ws = rectangular_generators(n, l, table)
    for i in range(n):
        for j in range(n):
            expect = (table.gen(f"e1[{j + 1}.{i + 1}]")
                      + table.gen(f"e2[{j + 1}.{i + 1}]"))
            assert ws[1][i][j] == expect
    for i in range(n):
        for j in range(n):
            assert ws[0][i][j] == (table.vacuum() if i == j else table.zero())


def test_rectangular_single_row_reduces_to_principal():
    l = 3
    rect = rectangular_generators(1, l)
    prin = principal_generators(l)
    # same generator indexing, so raw term dictionaries must agree
    for d in range(l + 1):
        assert rect[d][0][0].terms == prin[d].terms


def test_rectangular_current_closure():
    # mode-0 products close on the diagonal currents; mode-1 products see
    # the sum of the two factor levels
    n = l = 2
    table = rectangular_table(n, l)

    def current(a, b):
        return table.gen(f"e1[{a}.{b}]") + table.gen(f"e2[{a}.{b}]")

    e, f = current(1, 2), current(2, 1)
    h1, h2 = current(1, 1), current(2, 2)
    level = (K + 2) * Scalar(2)
    assert nth_product(e, 0, f) == h1 - h2
    assert nth_product(e, 1, f) == table.vacuum() * level
    assert nth_product(h1, 0, e) == e
    assert nth_product(h2, 0, e) == e * Scalar(-1)
    assert nth_product(h1, 1, h1) == table.vacuum() * (level + Scalar(2))
    assert nth_product(h1, 1, h2) == table.vacuum() * Scalar(2)


# ---------------------------------------------------------------------------
# Subregular family.

def test_subregular_rejects_bad_splits():
    with pytest.raises(BadSplit):
        subregular_generators(3, 1)
    with pytest.raises(BadSplit):
        subregular_generators(3, 4)
    with pytest.raises(BadSplit):
        subregular_table(1)


def test_subregular_three_boson_fixture():
    d = subregular_generators(3, 2)
    t = d["table"]
    h1, h3 = t.gen("h[1]"), t.gen("h[3]")
    e21 = t.gen("e[2.1]")
    zsum = t.gen("h[1]") + t.gen("h[2]") + t.gen("h[3]")
    assert d["F"] == derive(e21) * (K + 2) + normal_order(h1 - h3, e21)
    assert d["H"] == h1 - zsum * Scalar(Fraction(1, 3))
    assert d["Z"] == zsum
    assert d["E"] == t.gen("e[1.2]")
    assert d["F1"] == e21
    assert d["E1"] == t.gen("e[1.2]")


def test_subregular_tail_folds():
    d = subregular_generators(4, 2)
    t = d["table"]
    tail = t.gen("h[3]") + t.gen("h[4]")
    assert d["W"][0] == t.vacuum()
    assert d["W"][1] == tail * Scalar(-1)
    assert d["Wplus"][1] == tail
    # descending vs ascending fold of negated bosons: tau conjugation
    assert d["Wplus"][2] == (normal_order(t.gen("h[3]"), t.gen("h[4]"))
                             + derive(t.gen("h[4]")) * (K + 3))


def test_subregular_ladder_fields():
    d = subregular_generators(4, 2)
    t = d["table"]
    h1 = t.gen("h[1]")
    c = d["c"]
    assert d["P"][0] == t.vacuum()
    assert d["P"][1] == h1
    assert d["P"][2] == normal_order(h1, h1) - derive(h1) * c


@pytest.mark.parametrize("N,N1", [(3, 2), (4, 2), (4, 3)])
def test_lowering_expansion_rebuilds_f(N, N1):
    d = subregular_generators(N, N1)
    assert lowering_expansion(d) == d["F"]


def test_lowering_expansion_small_fixture():
    # hand oracle at the smallest size: one tail factor
    d = subregular_generators(3, 2)
    t = d["table"]
    h1, h3 = t.gen("h[1]"), t.gen("h[3]")
    e21 = t.gen("e[2.1]")
    rhs = (normal_order(h1, e21) - normal_order(h3, e21)
           + derive(e21) * (K + 2))
    assert lowering_expansion(d) == rhs


# ---------------------------------------------------------------------------
# Virasoro extraction.

def test_virasoro_extraction_report():
    register_pole_factor(K + 2)
    rep = virasoro_extraction()
    assert rep["status"] == "pass"
    assert rep["witnesses"] == []
    half = ONE / ((K + 2) * Scalar(2))
    assert rep["coefficients"] == [half, (K + 1) * half, ZERO - ONE / (K + 2), ZERO]
    # central charge 2 - 6(k+1)^2/(k+2)
    expect_c = Scalar(2) - (K + 1) * (K + 1) * Scalar(6) / (K + 2)
    assert rep["central_charge"] == expect_c
    ws = principal_generators(2, rep["table"])
    expect_t = (normal_order(ws[1], ws[1]) + derive(ws[1]) * (K + 1)
                - ws[2] * Scalar(2)) * half
    assert rep["T"] == expect_t


def test_virasoro_self_products():
    register_pole_factor(K + 2)
    rep = virasoro_extraction()
    T = rep["T"]
    vac = rep["table"].vacuum()
    assert nth_product(T, 0, T) == derive(T)
    assert nth_product(T, 1, T) == T * Scalar(2)
    assert nth_product(T, 2, T).is_zero()
    assert nth_product(T, 3, T) == vac * (rep["central_charge"] / Scalar(2))
    assert nth_product(T, 4, T).is_zero()
    assert nth_product(T, 5, T).is_zero()


def test_virasoro_weights_on_bosons():
    register_pole_factor(K + 2)
    rep = virasoro_extraction()
    T, t = rep["T"], rep["table"]
    vac = t.vacuum()
    for name, sign in (("b[1]", -1), ("b[2]", 1)):
        b = t.gen(name)
        assert nth_product(T, 1, b) == b
        assert nth_product(T, 0, b) == derive(b)
        # background-charge anomaly: the derivative term keeps a third
        # pole on the bosons even though W1 itself is primary
        assert nth_product(T, 2, b) == vac * ((K + 1) * Scalar(sign))
    assert nth_product(T, 2, t.gen("b[1]") + t.gen("b[2]")).is_zero()
