"""Chart vector fields, structural identities, affine lifts, screenings."""

import pytest

from walgebra.errors import ShapeMismatch
from walgebra.glstruct import GLGrading, e_mat, pyramid_from_columns
from walgebra.scalars import K, ONE, Scalar, ZERO
from walgebra.vertexcore import derive, normal_order, nth_product
from walgebra.wakimoto import (
    CoordinateChart,
    DiffOp,
    affine_lift,
    left_polys,
    left_vector_field,
    lift_audit,
    p_add,
    p_const,
    p_mul,
    p_scale,
    p_var,
    para_audit,
    para_lift,
    right_vector_field,
    screening_spec,
    screening_spec_graded,
    structural_checks,
    zero_chart,
)
from fractions import Fraction

A1, A2, A12 = (1, 2), (2, 3), (1, 3)


@pytest.fixture
def gl2():
    return CoordinateChart.from_pyramid(pyramid_from_columns((1, 1)))


@pytest.fixture
def gl3p():
    return CoordinateChart.from_pyramid(pyramid_from_columns((1, 1, 1)))


@pytest.fixture
def gl3s():
    return CoordinateChart.from_pyramid(pyramid_from_columns((2, 1)))


def op(chart, coeffs, mult=None):
    return DiffOp.make(chart, coeffs, mult)


def test_chart_orders(gl3p, gl3s):
    assert gl3p.roots == (A1, A2, A12)
    assert gl3s.roots == (A2, A12, A1)


def test_gl2_left_fields(gl2):
    x = p_var(A1)
    assert left_vector_field(e_mat(1, 2), gl2) == op(gl2, {A1: p_const(ONE)})
    assert left_vector_field(e_mat(1, 1), gl2) == op(gl2, {A1: p_scale(x, -1)})
    assert left_vector_field(e_mat(2, 2), gl2) == op(gl2, {A1: x})
    assert left_vector_field(e_mat(2, 1), gl2) == op(
        gl2, {A1: p_scale(p_mul(x, x), -1)})


def test_gl2_twisted(gl2):
    x = p_var(A1)
    lam = {1: K, 2: Scalar(1)}
    f = left_vector_field(e_mat(2, 1), gl2, lam=lam)
    assert f == op(gl2, {A1: p_scale(p_mul(x, x), -1)}, p_scale(x, K - 1))
    h = left_vector_field(e_mat(1, 1), gl2, lam=lam)
    assert h == op(gl2, {A1: p_scale(x, -1)}, p_const(K))
    e = left_vector_field(e_mat(1, 2), gl2, lam=lam)
    assert e == op(gl2, {A1: p_const(ONE)})


def test_gl2_right(gl2):
    assert right_vector_field(A1, gl2) == op(gl2, {A1: p_const(ONE)})


def test_gl3_principal_left_frozen(gl3p):
    x1, x2, x3 = p_var(A1), p_var(A2), p_var(A12)
    assert left_vector_field(e_mat(1, 2), gl3p) == op(gl3p, {A1: p_const(ONE)})
    assert left_vector_field(e_mat(2, 3), gl3p) == op(
        gl3p, {A2: p_const(ONE), A12: x1})
    assert left_vector_field(e_mat(1, 3), gl3p) == op(gl3p, {A12: p_const(ONE)})
    assert left_vector_field(e_mat(1, 1), gl3p) == op(
        gl3p, {A1: p_scale(x1, -1), A12: p_scale(x3, -1)})
    f1 = left_vector_field(e_mat(2, 1), gl3p)
    assert f1 == op(gl3p, {
        A1: p_scale(p_mul(x1, x1), -1),
        A2: p_add(p_mul(x1, x2), p_scale(x3, -1)),
        A12: p_scale(p_mul(x1, x3), -1),
    })
    # cross-check: [rho(e_{a1}), rho(f_{a2})] = rho([E12, E32]) = 0 forces
    # the d_1 coefficient to be x-independent of x1
    f2 = left_vector_field(e_mat(3, 2), gl3p)
    assert f2 == op(gl3p, {
        A1: x3,
        A2: p_scale(p_mul(x2, x2), -1),
    })


def test_gl3_principal_right_frozen(gl3p):
    x2 = p_var(A2)
    assert right_vector_field(A1, gl3p) == op(gl3p, {A1: p_const(ONE), A12: x2})
    assert right_vector_field(A2, gl3p) == op(gl3p, {A2: p_const(ONE)})
    assert right_vector_field(A12, gl3p) == op(gl3p, {A12: p_const(ONE)})


def test_gl3_subregular_right_frozen(gl3s):
    x3 = p_var(A1)    # chart position 3 is the degree-zero root a1
    assert right_vector_field(A2, gl3s) == op(
        gl3s, {A2: p_const(ONE), A12: p_scale(x3, -1)})
    assert right_vector_field(A12, gl3s) == op(gl3s, {A12: p_const(ONE)})
    assert right_vector_field(A1, gl3s) == op(gl3s, {A1: p_const(ONE)})


def test_cartan_diagonal_rule(gl3s):
    # rho(h) = -sum_beta beta(h) x_beta d_beta for diagonal h
    g = gl3s.grading
    h = {(1, 1): Fraction(2), (2, 2): Fraction(-1), (3, 3): Fraction(5)}
    expect = {}
    for beta in gl3s.roots:
        val = Scalar(g.roots.root_action(beta, h))
        expect[beta] = p_scale(p_var(beta), -val)
    assert left_vector_field(h, gl3s) == op(gl3s, expect)


def test_diffop_printing(gl2, gl3p):
    h = left_vector_field(e_mat(1, 1), gl2) - left_vector_field(e_mat(2, 2), gl2)
    assert str(h) == "-2*x[1.2]*dd[1.2]"
    e2 = left_vector_field(e_mat(2, 3), gl3p)
    assert str(e2) == "dd[2.3] + x[1.2]*dd[1.3]"


def test_structural_checks_gl2():
    rep = structural_checks(2, pyramid_from_columns((1, 1)))
    assert rep["status"] == "pass"


def test_structural_checks_gl3_principal():
    rep = structural_checks(3, pyramid_from_columns((1, 1, 1)))
    assert rep["status"] == "pass"
    by_name = {c["name"]: c for c in rep["checks"]}
    assert by_name["degree_zero_right_fields"]["failures"] == []
    assert by_name["triangularity"]["status"] == "pass"


def test_structural_checks_gl3_subregular():
    rep = structural_checks(3, pyramid_from_columns((2, 1)))
    assert rep["status"] == "pass"


def test_structural_checks_gl4():
    for q in ((2, 1, 1), (1, 2, 1)):
        rep = structural_checks(4, pyramid_from_columns(q))
        assert rep["status"] == "pass", q


def test_structural_checks_bounds():
    with pytest.raises(ShapeMismatch):
        structural_checks(3, pyramid_from_columns((1, 1)))
    with pytest.raises(ShapeMismatch):
        structural_checks(5, pyramid_from_columns((1, 1, 1, 1, 1)))


def test_affine_lift_gl2():
    lift = affine_lift(2, pyramid_from_columns((1, 1)))
    t = lift.table
    a = t.gen("a[1.2]")
    astar = t.gen("as[1.2]")
    b1, b2 = t.gen("b[1]"), t.gen("b[2]")
    assert lift.c[A1] == ZERO
    expected_f = (normal_order(astar, normal_order(astar, a)) * Scalar(-1)
                  + normal_order(b1 - b2, astar)
                  + derive(astar) * K)
    assert lift.f[A1] == expected_f
    assert lift.e[A1] == a
    # Cartan images pair to k delta_ij
    vac = t.vacuum()
    assert nth_product(lift.h[1], 1, lift.h[1]) == vac * K
    assert nth_product(lift.h[1], 1, lift.h[2]) == t.zero()
    assert nth_product(lift.e[A1], 1, lift.f[A1]) == vac * K
    assert nth_product(lift.e[A1], 0, lift.f[A1]) == lift.h[1] - lift.h[2]
    assert lift_audit(lift) == set()


def test_affine_lift_gl2_oracle_crosscheck():
    from mode_oracle import oracle_product, state_image

    lift = affine_lift(2, pyramid_from_columns((1, 1)))
    t = lift.table

    def oracle_nth(s1, n, s2):
        # mode-word state of s1_(n) s2, computed entirely in the oracle
        out = {}
        for m1, c1 in s1.terms.items():
            for m2, c2 in s2.terms.items():
                for word, c in oracle_product(t, m1, n, m2).items():
                    s = out.get(word, ZERO) + c1 * c2 * c
                    if s.is_zero():
                        out.pop(word, None)
                    else:
                        out[word] = s
        return out

    for n in (0, 1, 2):
        got = nth_product(lift.e[A1], n, lift.f[A1])
        assert state_image(got) == oracle_nth(lift.e[A1], n, lift.f[A1])
        got = nth_product(lift.h[1], n, lift.f[A1])
        assert state_image(got) == oracle_nth(lift.h[1], n, lift.f[A1])


def test_affine_lift_gl3_principal():
    lift = affine_lift(3, pyramid_from_columns((1, 1, 1)))
    assert lift_audit(lift) == set()


def test_affine_lift_gl3_subregular():
    lift = affine_lift(3, pyramid_from_columns((2, 1)))
    assert lift_audit(lift) == set()


def test_screening_spec_subregular():
    pi = pyramid_from_columns((2, 1))
    s0 = screening_spec(pi, A1)
    assert s0.kind == "zero"
    assert s0.summands == (((((), ONE),), A1),)
    assert s0.weight[1] == Scalar(-1) / (K + 3)
    assert s0.weight[2] == ONE / (K + 3)

    s1 = screening_spec(pi, A2)
    assert s1.kind == "one"
    # chi kills the long-root summand, leaving the bare exponential
    assert s1.summands == (((((), ONE),), None),)
    assert s1.weight[2] == Scalar(-1) / (K + 3)
    assert s1.weight[3] == ONE / (K + 3)


def test_screening_spec_principal():
    pi = pyramid_from_columns((1, 1, 1))
    for alpha in (A1, A2):
        s = screening_spec(pi, alpha)
        assert s.kind == "one"
        assert s.summands == (((((), ONE),), None),)


def test_screening_spec_half():
    g = GLGrading(3, [Fraction(1, 2), Fraction(1, 2)])
    s = screening_spec_graded(g, e_mat(3, 1), A1, h_vee=3)
    assert s.kind == "half"
    assert s.summands == (((((), ONE),), A1),)
    s2 = screening_spec_graded(g, e_mat(3, 1), A2, h_vee=3)
    assert s2.kind == "half"
    assert s2.summands == (((((), ONE),), A2),)


def test_para_lift_subregular_gl3():
    pi = pyramid_from_columns((2, 1))
    pl = para_lift(pi)
    assert pl.c == {A1: ONE}
    assert para_audit(pl) == set()

    t = pl.table
    assert pl.e[A1] == t.gen("a[1.2]")
    dress = normal_order(t.gen("as[1.2]"), t.gen("a[1.2]"))
    assert pl.h[1] == t.gen("b[1]") - dress
    assert pl.h[2] == t.gen("b[2]") + dress
    assert pl.h[3] == t.gen("b[3]")
    want_f = (derive(t.gen("as[1.2]")) * (K + 1)
              + normal_order(t.gen("b[1]") - t.gen("b[2]"), t.gen("as[1.2]"))
              - normal_order(t.gen("a[1.2]"),
                             normal_order(t.gen("as[1.2]"), t.gen("as[1.2]"))))
    assert pl.f[A1] == want_f

    # image rejects matrix entries outside the degree-zero block
    with pytest.raises(ShapeMismatch):
        pl.image(e_mat(2, 3))
    got = pl.image({(2, 1): Fraction(1)})
    assert nth_product(pl.e[A1], 0, got) == pl.h[1] - pl.h[2]


def test_para_lift_principal_is_heisenberg():
    pl = para_lift(pyramid_from_columns((1, 1, 1)))
    assert pl.c == {}
    assert para_audit(pl) == set()
    for i in (1, 2, 3):
        assert pl.h[i] == pl.table.gen(f"b[{i}]")


def test_para_lift_gl4_two_blocks():
    pl = para_lift(pyramid_from_columns((2, 2)))
    assert pl.c == {(1, 2): Scalar(2), (3, 4): Scalar(2)}
    assert para_audit(pl) == set()


def test_para_polys_match_big_chart_restriction():
    # degree-zero transport polynomials agree between the full chart and
    # the chart over the degree-zero block alone
    for cols in ((2, 1), (2, 2)):
        pi = pyramid_from_columns(cols)
        g = pi.grading()
        big = CoordinateChart.from_grading(g)
        small = zero_chart(g)
        zero_set = set(small.roots)
        for beta in small.roots:
            big_P = left_polys(big, beta)
            small_P = left_polys(small, beta)
            assert {r: p for r, p in big_P.items() if r in zero_set} == small_P
            # components dropped by the coset carry a positive-degree
            # variable in every monomial
            for r, p in big_P.items():
                if r in zero_set:
                    continue
                for mono in p:
                    assert any(g.deg(v) > 0 for v, _ in mono)
