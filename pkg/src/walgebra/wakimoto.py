"""First-order differential operators on the big cell of the flag variety.

Coordinates x_beta, one per positive root, order fixed by the chart: the
positive-degree block first, then the degree-zero block, each sorted by
(degree, height, lexicographic).  The group element is the ordered
product X = prod (I + x_beta e_beta); root matrices square to zero, so X
and its inverse are exact polynomial matrices.

The left action is computed from zeta_a X = -X (X^{-1} a X)_+ and the
right action from zeta^R_e X = -X e; both are solved by forward
substitution against the frame R_beta = dX/dx_beta (unitriangular in
chart order).  A global coordinate flip x -> -x is applied afterwards so
that rho(e_alpha) = +d_alpha + higher terms, the normalization every
downstream formula assumes.

Polynomials here are sparse: {((root, exp), ...): Scalar}.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import NoSolution, NonUniqueSolution, ShapeMismatch, SingularSystem
from .glstruct import (
    GLGrading,
    Pyramid,
    RootSystemGL,
    e_mat,
    mat_bracket,
    pyramid_nilpotent,
    root_classes_graded,
    tau_form,
    trace_form,
)
from .scalars import K, ONE, Scalar, ZERO
from .vertexcore import GeneratorTable, derive, normal_order, nth_product

__all__ = [
    "CoordinateChart",
    "DiffOp",
    "left_vector_field",
    "right_vector_field",
    "structural_checks",
    "affine_lift",
    "lift_audit",
    "para_lift",
    "para_lift_graded",
    "para_audit",
    "para_table",
    "zero_chart",
    "screening_spec",
    "root_label",
    "poly_to_field",
]


def root_label(root):
    i, j = root
    return f"{i}.{j}"


# ---------------------------------------------------------------------------
# Sparse multivariate polynomials: {mono: Scalar}, mono = ((root, exp), ...).

P_ZERO = {}


def p_const(c):
    c = Scalar(c) if not isinstance(c, Scalar) else c
    return {} if c.is_zero() else {(): c}


def p_var(root):
    return {((root, 1),): ONE}


def p_add(a, b):
    out = dict(a)
    for m, c in b.items():
        s = out.get(m, ZERO) + c
        if s.is_zero():
            out.pop(m, None)
        else:
            out[m] = s
    return out


def p_scale(a, c):
    c = Scalar(c) if not isinstance(c, Scalar) else c
    if c.is_zero():
        return {}
    return {m: v * c for m, v in a.items()}


def p_mul(a, b):
    out = {}
    for m1, c1 in a.items():
        for m2, c2 in b.items():
            exps = dict(m1)
            for var, e in m2:
                exps[var] = exps.get(var, 0) + e
            m = tuple(sorted(exps.items()))
            s = out.get(m, ZERO) + c1 * c2
            if s.is_zero():
                out.pop(m, None)
            else:
                out[m] = s
    return out


def p_diff(a, root):
    out = {}
    for m, c in a.items():
        exps = dict(m)
        e = exps.get(root, 0)
        if not e:
            continue
        if e == 1:
            del exps[root]
        else:
            exps[root] = e - 1
        key = tuple(sorted(exps.items()))
        s = out.get(key, ZERO) + c * e
        if s.is_zero():
            out.pop(key, None)
        else:
            out[key] = s
    return out


def p_flip(a):
    """x -> -x on every variable."""
    out = {}
    for m, c in a.items():
        total = sum(e for _, e in m)
        out[m] = -c if total % 2 else c
    return out


def p_vars(a):
    return {var for m in a for var, _ in m}


def p_str(a, order):
    if not a:
        return "0"
    def mono_key(m):
        return tuple(-dict(m).get(r, 0) for r in order)
    parts = []
    for m, c in sorted(a.items(), key=lambda kv: mono_key(kv[0])):
        factors = []
        for var, e in m:
            s = f"x[{root_label(var)}]"
            factors.append(s if e == 1 else f"{s}^{e}")
        cs = str(c)
        if factors and cs == "1":
            body = "*".join(factors)
        elif factors and cs == "-1":
            body = "-" + "*".join(factors)
        else:
            cs = f"({cs})" if (" " in cs and factors) else cs
            body = "*".join([cs] + factors)
        parts.append(body)
    out = parts[0]
    for p in parts[1:]:
        out += " - " + p[1:] if p.startswith("-") else " + " + p
    return out


# ---------------------------------------------------------------------------
# Polynomial matrices {(i, j): poly}.

def pm_from_const(mat):
    return {key: p_const(Scalar(c)) for key, c in mat.items()}


def pm_add(a, b):
    out = dict(a)
    for key, p in b.items():
        s = p_add(out.get(key, {}), p)
        if s:
            out[key] = s
        else:
            out.pop(key, None)
    return out


def pm_mul(a, b):
    by_row = {}
    for (i, j), p in b.items():
        by_row.setdefault(i, []).append((j, p))
    out = {}
    for (i, j), p in a.items():
        for l, q in by_row.get(j, ()):
            key = (i, l)
            s = p_add(out.get(key, {}), p_mul(p, q))
            if s:
                out[key] = s
            else:
                out.pop(key, None)
    return out


def pm_scale(a, c):
    return {key: p_scale(p, c) for key, p in a.items()}


# ---------------------------------------------------------------------------
# Charts.

@dataclass(frozen=True)
class CoordinateChart:
    grading: GLGrading
    roots: tuple          # chart order

    @classmethod
    def from_grading(cls, g: GLGrading):
        def key(root):
            i, j = root
            return (g.deg(root), j - i, root)
        ordered = sorted(g.delta_pos(), key=key) + sorted(g.delta0_plus(), key=key)
        return cls(grading=g, roots=tuple(ordered))

    @classmethod
    def from_pyramid(cls, pi: Pyramid):
        return cls.from_grading(pi.grading())

    def __post_init__(self):
        seen_zero = False
        for r in self.roots:
            if self.grading.deg(r) == 0:
                seen_zero = True
            elif seen_zero:
                raise ShapeMismatch("degree-zero factors must come last")

    def index(self, root):
        return self.roots.index(root)

    @property
    def N(self):
        return self.grading.N


def _frames(chart):
    """R_beta = dX/dx_beta pulled back by X, for each chart root.

    R_beta = Ad(suffix^{-1}) e_beta where suffix is the product of the
    factors after beta.  Root matrices square to zero so every factor
    inverts as I - x e.
    """
    n = chart.N
    eye = {(i, i): p_const(ONE) for i in range(1, n + 1)}
    frames = []
    suffix = eye
    suffix_inv = eye
    for root in reversed(chart.roots):
        ematrix = pm_from_const(e_mat(*root))
        frames.append(pm_mul(pm_mul(suffix_inv, ematrix), suffix))
        factor = pm_add(eye, {root: p_var(root)})
        suffix = pm_mul(factor, suffix)
        inv_factor = pm_add(eye, {root: p_scale(p_var(root), -1)})
        suffix_inv = pm_mul(suffix_inv, inv_factor)
    frames.reverse()
    X = suffix            # after the loop, suffix is the full product
    X_inv = suffix_inv
    return frames, X, X_inv


def _solve_frame(chart, frames, rhs):
    """Solve sum_beta c_beta R_beta = rhs by forward substitution."""
    coeffs = {}
    rest = dict(rhs)
    for root, frame in zip(chart.roots, frames):
        c = rest.get(root, {})
        if c:
            coeffs[root] = c
            rest = pm_add(rest, {key: p_mul(p_scale(p, -1), c)
                                 for key, p in frame.items()})
    strict_upper = {key: p for key, p in rest.items() if key[0] < key[1] and p}
    if strict_upper:
        raise SingularSystem("frame solve left a remainder")
    return coeffs


# ---------------------------------------------------------------------------
# Differential operators.

@dataclass(frozen=True)
class DiffOp:
    chart: CoordinateChart
    coeffs: tuple         # ((root, poly-as-tuple), ...) normalized
    mult: tuple           # poly-as-tuple

    @classmethod
    def make(cls, chart, coeffs, mult=None):
        norm = tuple(sorted(
            (root, tuple(sorted(p.items())))
            for root, p in coeffs.items() if p
        ))
        m = tuple(sorted((mult or {}).items()))
        return cls(chart=chart, coeffs=norm, mult=m)

    def coeff(self, root):
        for r, p in self.coeffs:
            if r == root:
                return dict(p)
        return {}

    def coeff_map(self):
        return {r: dict(p) for r, p in self.coeffs}

    def mult_poly(self):
        return dict(self.mult)

    def is_zero(self):
        return not self.coeffs and not self.mult

    def __add__(self, other):
        self._compat(other)
        cm = self.coeff_map()
        for r, p in other.coeff_map().items():
            cm[r] = p_add(cm.get(r, {}), p)
        return DiffOp.make(self.chart, cm,
                           p_add(self.mult_poly(), other.mult_poly()))

    def __sub__(self, other):
        return self + other.scale(-1)

    def scale(self, c):
        return DiffOp.make(
            self.chart,
            {r: p_scale(p, c) for r, p in self.coeff_map().items()},
            p_scale(self.mult_poly(), c),
        )

    def mul_poly(self, q):
        return DiffOp.make(
            self.chart,
            {r: p_mul(q, p) for r, p in self.coeff_map().items()},
            p_mul(q, self.mult_poly()),
        )

    def apply(self, poly):
        out = p_mul(self.mult_poly(), poly)
        for r, p in self.coeff_map().items():
            out = p_add(out, p_mul(p, p_diff(poly, r)))
        return out

    def commutator(self, other):
        self._compat(other)
        cm = {}
        other_map = other.coeff_map()
        self_map = self.coeff_map()
        for r, p in other_map.items():
            cm[r] = self._vec_apply(self_map, p)
        for r, p in self_map.items():
            cm[r] = p_add(cm.get(r, {}), p_scale(self._vec_apply(other_map, p), -1))
        mult = p_add(self._vec_apply(self_map, other.mult_poly()),
                     p_scale(self._vec_apply(other_map, self.mult_poly()), -1))
        return DiffOp.make(self.chart, cm, mult)

    @staticmethod
    def _vec_apply(coeff_map, poly):
        out = {}
        for r, p in coeff_map.items():
            out = p_add(out, p_mul(p, p_diff(poly, r)))
        return out

    def _compat(self, other):
        if self.chart is not other.chart and self.chart != other.chart:
            raise ShapeMismatch("operators live on different charts")

    def __str__(self):
        order = self.chart.roots
        parts = []
        if self.mult:
            parts.append(p_str(self.mult_poly(), order))
        for r in order:
            p = self.coeff(r)
            if not p:
                continue
            ps = p_str(p, order)
            dd = f"dd[{root_label(r)}]"
            if ps == "1":
                parts.append(dd)
            elif ps == "-1":
                parts.append(f"-{dd}")
            elif "+" in ps or (" - " in ps):
                parts.append(f"({ps})*{dd}")
            else:
                parts.append(f"{ps}*{dd}")
        if not parts:
            return "0"
        out = parts[0]
        for p in parts[1:]:
            out += " - " + p[1:] if p.startswith("-") else " + " + p
        return out


def _flip_op(chart, coeffs, mult):
    """Push the field through x -> -x: coefficients negate and flip."""
    flipped = {r: p_scale(p_flip(p), -1) for r, p in coeffs.items()}
    return DiffOp.make(chart, flipped, p_flip(mult))


def left_vector_field(a, chart: CoordinateChart, lam=None) -> DiffOp:
    """rho(a), optionally lambda-twisted (lam: diagonal index -> Scalar)."""
    frames, X, X_inv = _frames(chart)
    conj = pm_mul(pm_mul(X_inv, pm_from_const(a)), X)
    rhs = {key: p_scale(p, -1) for key, p in conj.items() if key[0] < key[1]}
    coeffs = _solve_frame(chart, frames, rhs)
    mult = {}
    if lam is not None:
        for i in range(1, chart.N + 1):
            diag = conj.get((i, i), {})
            lam_i = lam.get(i)
            if lam_i is None or not diag:
                continue
            lam_i = lam_i if isinstance(lam_i, Scalar) else Scalar(lam_i)
            if not lam_i.is_zero():
                mult = p_add(mult, p_scale(diag, lam_i))
    return _flip_op(chart, coeffs, mult)


def right_vector_field(root, chart: CoordinateChart) -> DiffOp:
    """rho^R(e_root)."""
    frames, _, _ = _frames(chart)
    rhs = pm_scale(pm_from_const(e_mat(*root)), -1)
    coeffs = _solve_frame(chart, frames, rhs)
    return _flip_op(chart, coeffs, {})


# ---------------------------------------------------------------------------
# Polynomial extraction.

def left_polys(chart, alpha):
    """P_alpha^beta for rho(e_alpha)."""
    return left_vector_field(e_mat(*alpha), chart).coeff_map()


def left_polys_f(chart, alpha):
    """Q_alpha^beta for rho(f_alpha)."""
    i, j = alpha
    return left_vector_field(e_mat(j, i), chart).coeff_map()


def right_polys(chart, alpha):
    """P_alpha^{beta,R} for rho^R(e_alpha)."""
    return right_vector_field(alpha, chart).coeff_map()


# ---------------------------------------------------------------------------
# Structural checks.

def _same_class(g, beta, gamma):
    from .glstruct import _in_span_z

    rs = g.roots
    diff = tuple(x - y for x, y in
                 zip(rs.eps_vector(beta), rs.eps_vector(gamma)))
    return _in_span_z(diff, [rs.eps_vector(a) for a in g.pi0()])


def structural_checks(N, pi: Pyramid, bound=4):
    if N != pi.N:
        raise ShapeMismatch(f"N={N} but pyramid has {pi.N} boxes")
    if N > bound:
        raise ShapeMismatch(f"N={N} exceeds bound {bound}")
    g = pi.grading()
    chart = CoordinateChart.from_grading(g)
    rs = g.roots
    basis = [(i, j) for i in range(1, N + 1) for j in range(1, N + 1)]
    rho = {b: left_vector_field(e_mat(*b), chart) for b in basis}
    rhoR = {r: right_vector_field(r, chart) for r in rs.positive_roots}

    checks = []

    def record(name, failures):
        checks.append({
            "name": name,
            "status": "pass" if not failures else "fail",
            "failures": failures,
        })

    # left action is a Lie algebra homomorphism
    fails = []
    for u in basis:
        for v in basis:
            br = mat_bracket(e_mat(*u), e_mat(*v))
            expect = DiffOp.make(chart, {})
            for key, c in br.items():
                expect = expect + rho[key].scale(Scalar(c))
            if rho[u].commutator(rho[v]) != expect:
                fails.append((u, v))
    record("left_homomorphism", fails)

    # right action is an anti-homomorphism on the nilpotent part
    fails = []
    for u in rs.positive_roots:
        for v in rs.positive_roots:
            br = mat_bracket(e_mat(*u), e_mat(*v))
            expect = DiffOp.make(chart, {})
            for key, c in br.items():
                if key[0] < key[1]:
                    expect = expect + rhoR[key].scale(Scalar(-c))
            if rhoR[u].commutator(rhoR[v]) != expect:
                fails.append((u, v))
    record("right_antihomomorphism", fails)

    # left translations by n_+ commute with right translations; for
    # diagonal or lower u the commutator is nonzero (see the simple-f
    # check below), so the zero statement is scoped to positive roots
    fails = [(u, v) for u in rs.positive_roots for v in rs.positive_roots
             if not rho[u].commutator(rhoR[v]).is_zero()]
    record("left_right_commute", fails)

    # triangularity: rho(e_a) = d_a + sum over strictly higher degree
    fails = []
    for a in g.delta_pos():
        cm = rho[a].coeff_map()
        if cm.get(a, {}) != p_const(ONE):
            fails.append((a, "unit"))
        for b, p in cm.items():
            if b != a and not g.deg(b) > g.deg(a):
                fails.append((a, b))
    record("triangularity", fails)

    # degree-zero right fields close over degree-zero data
    zero_set = set(g.delta0_plus())
    fails = []
    for a in zero_set:
        for b, p in rhoR[a].coeff_map().items():
            if b not in zero_set or not p_vars(p) <= zero_set:
                fails.append((a, b))
    record("degree_zero_right_fields", fails)

    # constant-degree coefficients live on degree-zero variables
    fails = []
    for a in rs.positive_roots:
        for source, polys in (("left", rho[(a[0], a[1])].coeff_map()),
                              ("right", rhoR[a].coeff_map())):
            for b, p in polys.items():
                if b[0] < b[1] and g.deg(a) == g.deg(b):
                    if not p_vars(p) <= zero_set:
                        fails.append((source, a, b))
    record("constant_degree_membership", fails)

    # derivative identity: d_gamma P_alpha^beta = c_{gamma,alpha}^beta
    # (and the f-side twin) for alpha in Pi_0, classmates beta, gamma
    fails = []
    for alpha in g.pi0():
        P = rho[alpha].coeff_map()
        Q = left_polys_f(chart, alpha)
        i, j = alpha
        for beta in g.delta_pos():
            for gamma in g.delta_pos():
                if not _same_class(g, beta, gamma):
                    continue
                ce = rs.bracket_coefficient(gamma, e_mat(i, j), beta)
                cf = rs.bracket_coefficient(gamma, e_mat(j, i), beta)
                if p_diff(P.get(beta, {}), gamma) != p_const(Scalar(ce)):
                    fails.append(("P", alpha, beta, gamma))
                if p_diff(Q.get(beta, {}), gamma) != p_const(Scalar(cf)):
                    fails.append(("Q", alpha, beta, gamma))
    record("class_derivative_identity", fails)

    # [rho(f_a), rho^R(e_b)] = (a|b) x_a rho^R(e_b) for simple a, b
    fails = []
    for alpha in rs.simple_roots:
        i, j = alpha
        lhs_base = left_vector_field(e_mat(j, i), chart)
        for beta in rs.simple_roots:
            lhs = lhs_base.commutator(rhoR[beta])
            pairing = Scalar(Fraction(rs.root_pairing(alpha, beta)))
            rhs = rhoR[beta].mul_poly(p_scale(p_var(alpha), pairing))
            if lhs != rhs:
                fails.append((alpha, beta))
    record("simple_f_right_commutator", fails)

    # transport identity: the degree-zero parts of rho(e_a), rho(f_a)
    # move right polynomials by structure constants
    fails = []
    classes = {c.alpha: c.members for c in root_classes_graded(g)}
    for alpha in g.pi0():
        i, j = alpha
        P = rho[alpha].coeff_map()
        Q = left_polys_f(chart, alpha)
        for eps in g.pi_pos():
            PR = rhoR[eps].coeff_map()
            pairing = Scalar(Fraction(rs.root_pairing(alpha, eps)))
            for beta in classes[eps]:
                lhs1, lhs2 = {}, {}
                for gamma in g.delta0_plus():
                    d = p_diff(PR.get(beta, {}), gamma)
                    lhs1 = p_add(lhs1, p_mul(P.get(gamma, {}), d))
                    lhs2 = p_add(lhs2, p_mul(Q.get(gamma, {}), d))
                rhs1, rhs2 = {}, {}
                for gamma in classes[eps]:
                    ce = rs.bracket_coefficient(gamma, e_mat(i, j), beta)
                    cf = rs.bracket_coefficient(gamma, e_mat(j, i), beta)
                    rhs1 = p_add(rhs1, p_scale(PR.get(gamma, {}), Scalar(ce)))
                    rhs2 = p_add(rhs2, p_scale(PR.get(gamma, {}), Scalar(cf)))
                rhs2 = p_add(rhs2, p_mul(p_scale(p_var(alpha), pairing),
                                         PR.get(beta, {})))
                if lhs1 != rhs1:
                    fails.append(("P-transport", alpha, eps, beta))
                if lhs2 != rhs2:
                    fails.append(("Q-transport", alpha, eps, beta))
    record("right_poly_transport", fails)

    status = "pass" if all(c["status"] == "pass" for c in checks) else "fail"
    return {"check": "wakimoto_structure", "N": N, "columns": list(pi.q),
            "status": status, "checks": checks}


# ---------------------------------------------------------------------------
# The affine lift: beta-gamma pairs a, a* per positive root plus one
# Heisenberg field per diagonal entry.

def lift_table(N):
    rs = RootSystemGL(N)
    gens = []
    for r in rs.positive_roots:
        gens.append((f"a[{root_label(r)}]", 1))
    for r in rs.positive_roots:
        gens.append((f"as[{root_label(r)}]", 0))
    for i in range(1, N + 1):
        gens.append((f"b[{i}]", 1))
    pair1 = {}
    for r in rs.positive_roots:
        pair1[(f"a[{root_label(r)}]", f"as[{root_label(r)}]")] = {"1": ONE}
    pair2 = {}
    for i in range(1, N + 1):
        for j in range(i, N + 1):
            val = K + N - 1 if i == j else Scalar(-1)
            pair2[(f"b[{i}]", f"b[{j}]")] = val
    return GeneratorTable(gens=gens, pair1=pair1, pair2=pair2)


def poly_to_field(table, poly, tail=None):
    """Normally ordered image of poly(a*), optionally times a tail field."""
    out = table.zero()
    for mono, c in poly.items():
        acc = tail if tail is not None else table.vacuum()
        for root, e in reversed(mono):
            gen = table.gen(f"as[{root_label(root)}]")
            for _ in range(e):
                acc = normal_order(gen, acc)
        out = out + acc * c
    return out


class AffineLift:
    """Images of e_beta, h_i = e_ii, and simple f_alpha with solved c_alpha."""

    def __init__(self, N, pi, table, chart, images_e, images_h, images_f, constants):
        self.N = N
        self.pi = pi
        self.table = table
        self.chart = chart
        self.e = images_e
        self.h = images_h
        self.f = images_f
        self.c = constants
        self._f_all = {}

    def image(self, mat):
        out = self.table.zero()
        for (i, j), c in mat.items():
            c = Scalar(c)
            if i < j:
                out = out + self.e[(i, j)] * c
            elif i == j:
                out = out + self.h[i] * c
            else:
                out = out + self.f_neg((i, j)) * c
        return out

    def f_neg(self, root):
        """Image of e_{j,i} with j > i, built from simple images."""
        j, i = root
        if j <= i:
            raise ShapeMismatch("expected a negative root (j, i) with j > i")
        if root in self._f_all:
            return self._f_all[root]
        if j == i + 1:
            val = self.f[(i, j)]
        else:
            # [e_{i+1,i}, e_{j,i+1}] = -e_{j,i}
            val = nth_product(self.f[(i, i + 1)], 0, self.f_neg((j, i + 1))) * Scalar(-1)
        self._f_all[root] = val
        return val


def _lift_images(N, pi, table, chart, cvals):
    rs = chart.grading.roots
    images_e = {}
    for beta in rs.positive_roots:
        P = left_polys(chart, beta)
        acc = table.zero()
        for gamma, p in P.items():
            acc = acc + poly_to_field(table, p, table.gen(f"a[{root_label(gamma)}]"))
        images_e[beta] = acc
    images_h = {}
    for i in range(1, N + 1):
        acc = table.gen(f"b[{i}]")
        for beta in rs.positive_roots:
            weight = Scalar(Fraction(rs.eps_vector(beta)[i - 1]))
            if weight.is_zero():
                continue
            term = normal_order(table.gen(f"as[{root_label(beta)}]"),
                                table.gen(f"a[{root_label(beta)}]"))
            acc = acc + term * (-weight)
        images_h[i] = acc
    images_f = {}
    for alpha in rs.simple_roots:
        i, j = alpha
        Q = left_polys_f(chart, alpha)
        acc = table.zero()
        for gamma, p in Q.items():
            acc = acc + poly_to_field(table, p, table.gen(f"a[{root_label(gamma)}]"))
        b_h = table.gen(f"b[{i}]") - table.gen(f"b[{j}]")
        acc = acc + normal_order(b_h, table.gen(f"as[{root_label(alpha)}]"))
        acc = acc + derive(table.gen(f"as[{root_label(alpha)}]")) * (K + cvals[alpha])
        images_f[alpha] = acc
    return images_e, images_h, images_f


def _lift_residuals(N, lift):
    """All OPE residuals between basis images, flattened per monomial."""
    basis = []
    rs = RootSystemGL(N)
    for r in rs.positive_roots:
        basis.append(("e", e_mat(*r)))
        basis.append(("f", e_mat(r[1], r[0])))
    for i in range(1, N + 1):
        basis.append(("h", e_mat(i, i)))
    out = {}
    for bi, (_, u) in enumerate(basis):
        for bj, (_, v) in enumerate(basis):
            iu, iv = lift.image(u), lift.image(v)
            for n in (0, 1, 2):
                got = nth_product(iu, n, iv)
                if n == 0:
                    got = got - lift.image(mat_bracket(u, v))
                elif n == 1:
                    got = got - lift.table.vacuum() * (K * Scalar(trace_form(u, v)))
                for mono, c in got.terms.items():
                    out[(bi, bj, n, mono)] = c
    return out


def affine_lift(N, pi: Pyramid) -> AffineLift:
    """Solve for the c_alpha constants and return the verified lift."""
    table = lift_table(N)
    chart = CoordinateChart.from_pyramid(pi)
    rs = chart.grading.roots
    simples = rs.simple_roots

    def solve_residuals(cvals):
        e, h, f = _lift_images(N, pi, table, chart, cvals)
        lift = AffineLift(N, pi, table, chart, e, h, f, cvals)
        out = {}
        pairs = [(("e", e_mat(*b)), ("f", e_mat(a[1], a[0]), a))
                 for b in rs.positive_roots for a in simples]
        pairs += [(("h", e_mat(i, i)), ("f", e_mat(a[1], a[0]), a))
                  for i in range(1, N + 1) for a in simples]
        for (_, u), (_, v, _) in pairs:
            iu, iv = lift.image(u), lift.image(v)
            for n in (0, 1, 2):
                got = nth_product(iu, n, iv)
                if n == 0:
                    got = got - lift.image(mat_bracket(u, v))
                elif n == 1:
                    got = got - table.vacuum() * (K * Scalar(trace_form(u, v)))
                for mono, c in got.terms.items():
                    out.setdefault((str(u), str(v), n, mono), ZERO)
                    out[(str(u), str(v), n, mono)] = c
        return out

    zero_c = {a: ZERO for a in simples}
    base = solve_residuals(zero_c)
    columns = []
    for a in simples:
        unit = dict(zero_c)
        unit[a] = ONE
        col = solve_residuals(unit)
        keys = set(col) | set(base)
        columns.append({key: col.get(key, ZERO) - base.get(key, ZERO) for key in keys})

    keys = sorted(set(base) | {key for col in columns for key in col},
                  key=lambda kv: str(kv))
    rows = [[col.get(key, ZERO) for col in columns] + [-base.get(key, ZERO)]
            for key in keys]
    solution = _gauss_solve(rows, len(simples))
    cvals = {a: solution[t] for t, a in enumerate(simples)}
    e, h, f = _lift_images(N, pi, table, chart, cvals)
    lift = AffineLift(N, pi, table, chart, e, h, f, cvals)
    res = solve_residuals(cvals)
    if any(not c.is_zero() for c in res.values()):
        raise NoSolution("solved constants do not close the relations")
    return lift


def _gauss_solve(rows, n_unknowns):
    """Exact Gaussian elimination; raises on inconsistent/underdetermined.

    Forward elimination is division-free (cross-multiplication), so the
    only divisions are the final back-substitutions; their reduced
    denominators are the true poles of the solution, keeping elimination
    order away from the pole registry.
    """
    rows = [list(r) for r in rows if any(not c.is_zero() for c in r)]
    pivots = []
    for col in range(n_unknowns):
        piv = next((r for r in range(len(pivots), len(rows))
                    if not rows[r][col].is_zero()), None)
        if piv is None:
            continue
        rows[len(pivots)], rows[piv] = rows[piv], rows[len(pivots)]
        piv_row = rows[len(pivots)]
        for r in range(len(rows)):
            if r != len(pivots) and not rows[r][col].is_zero():
                factor = rows[r][col]
                rows[r] = [a * piv_row[col] - factor * b
                           for a, b in zip(rows[r], piv_row)]
        pivots.append(col)
    for r in range(len(pivots), len(rows)):
        if not rows[r][-1].is_zero():
            raise NoSolution("inconsistent linear system")
    if len(pivots) < n_unknowns:
        raise NonUniqueSolution("underdetermined linear system")
    sol = [ZERO] * n_unknowns
    for r, col in enumerate(pivots):
        sol[col] = rows[r][-1] / rows[r][col]
    return sol


def lift_audit(lift: AffineLift):
    """Full pairwise OPE audit; returns the set of failing residual keys."""
    res = _lift_residuals(lift.N, lift)
    return {key for key, c in res.items() if not c.is_zero()}


# ---------------------------------------------------------------------------
# The reduced lift: currents for the degree-zero subalgebra on the smaller
# table that keeps every Heisenberg field but only the degree-zero
# beta-gamma pairs (plus weight-1/2 pairs for a half-integer layer, when
# one is supplied).

def zero_chart(g: GLGrading) -> CoordinateChart:
    """Chart over the degree-zero positive roots only."""
    def key(root):
        i, j = root
        return (g.deg(root), j - i, root)
    return CoordinateChart(grading=g, roots=tuple(sorted(g.delta0_plus(), key=key)))


def para_table(N, roots0, half_roots=(), f_mat=None):
    gens = []
    for r in roots0:
        gens.append((f"a[{root_label(r)}]", 1))
    for r in roots0:
        gens.append((f"as[{root_label(r)}]", 0))
    for r in half_roots:
        gens.append((f"Phi[{root_label(r)}]", Fraction(1, 2)))
    for i in range(1, N + 1):
        gens.append((f"b[{i}]", 1))
    pair1 = {}
    for r in roots0:
        pair1[(f"a[{root_label(r)}]", f"as[{root_label(r)}]")] = {"1": ONE}
    for r in half_roots:
        for s in half_roots:
            if r >= s:
                continue
            c = Scalar(trace_form(f_mat, mat_bracket(e_mat(*r), e_mat(*s))))
            if not c.is_zero():
                pair1[(f"Phi[{root_label(r)}]", f"Phi[{root_label(s)}]")] = {"1": c}
    pair2 = {}
    for i in range(1, N + 1):
        for j in range(i, N + 1):
            val = K + N - 1 if i == j else Scalar(-1)
            pair2[(f"b[{i}]", f"b[{j}]")] = val
    return GeneratorTable(gens=gens, pair1=pair1, pair2=pair2)


class ParaLift:
    """Images of the degree-zero subalgebra on the reduced table."""

    def __init__(self, grading, table, chart, images_e, images_h, images_f,
                 constants):
        self.grading = grading
        self.N = grading.N
        self.table = table
        self.chart = chart
        self.e = images_e
        self.h = images_h
        self.f = images_f
        self.c = constants
        self._f_all = {}

    def image(self, mat):
        out = self.table.zero()
        for (i, j), c in mat.items():
            c = Scalar(c)
            if i != j and self.grading.deg((i, j)) != 0:
                raise ShapeMismatch(f"entry ({i},{j}) is not of degree zero")
            if i < j:
                out = out + self.e[(i, j)] * c
            elif i == j:
                out = out + self.h[i] * c
            else:
                out = out + self.f_neg((i, j)) * c
        return out

    def f_neg(self, root):
        j, i = root
        if j <= i:
            raise ShapeMismatch("expected a negative root (j, i) with j > i")
        if root in self._f_all:
            return self._f_all[root]
        if j == i + 1:
            val = self.f[(i, j)]
        else:
            # [e_{i+1,i}, e_{j,i+1}] = -e_{j,i}
            val = nth_product(self.f[(i, i + 1)], 0, self.f_neg((j, i + 1))) * Scalar(-1)
        self._f_all[root] = val
        return val


def _para_images(g, table, chart, cvals):
    rs = g.roots
    roots0 = chart.roots
    images_e = {}
    for beta in roots0:
        P = left_polys(chart, beta)
        acc = table.zero()
        for gamma, p in P.items():
            acc = acc + poly_to_field(table, p, table.gen(f"a[{root_label(gamma)}]"))
        images_e[beta] = acc
    images_h = {}
    for i in range(1, g.N + 1):
        acc = table.gen(f"b[{i}]")
        for beta in roots0:
            weight = Scalar(Fraction(rs.eps_vector(beta)[i - 1]))
            if weight.is_zero():
                continue
            term = normal_order(table.gen(f"as[{root_label(beta)}]"),
                                table.gen(f"a[{root_label(beta)}]"))
            acc = acc + term * (-weight)
        images_h[i] = acc
    images_f = {}
    for alpha in g.pi0():
        i, j = alpha
        Q = left_polys_f(chart, alpha)
        acc = table.zero()
        for gamma, p in Q.items():
            acc = acc + poly_to_field(table, p, table.gen(f"a[{root_label(gamma)}]"))
        b_h = table.gen(f"b[{i}]") - table.gen(f"b[{j}]")
        acc = acc + normal_order(b_h, table.gen(f"as[{root_label(alpha)}]"))
        acc = acc + derive(table.gen(f"as[{root_label(alpha)}]")) * (K + cvals[alpha])
        images_f[alpha] = acc
    return images_e, images_h, images_f


def _para_residuals(lift: ParaLift, pairs):
    g = lift.grading
    out = {}
    for u, v in pairs:
        iu, iv = lift.image(u), lift.image(v)
        for n in (0, 1, 2):
            got = nth_product(iu, n, iv)
            if n == 0:
                got = got - lift.image(mat_bracket(u, v))
            elif n == 1:
                got = got - lift.table.vacuum() * tau_form(g, u, v)
            for mono, c in got.terms.items():
                out[(str(u), str(v), n, mono)] = c
    return out


def para_lift_graded(g: GLGrading) -> ParaLift:
    """Solve for the c'_alpha constants and return the verified reduced lift."""
    table = para_table(g.N, zero_chart(g).roots)
    chart = zero_chart(g)
    simples0 = list(g.pi0())

    def build(cvals):
        e, h, f = _para_images(g, table, chart, cvals)
        return ParaLift(g, table, chart, e, h, f, cvals)

    if not simples0:
        return build({})

    pairs = [(e_mat(*b), e_mat(a[1], a[0]))
             for b in chart.roots for a in simples0]
    pairs += [(e_mat(i, i), e_mat(a[1], a[0]))
              for i in range(1, g.N + 1) for a in simples0]

    zero_c = {a: ZERO for a in simples0}
    base = _para_residuals(build(zero_c), pairs)
    columns = []
    for a in simples0:
        unit = dict(zero_c)
        unit[a] = ONE
        col = _para_residuals(build(unit), pairs)
        keys = set(col) | set(base)
        columns.append({key: col.get(key, ZERO) - base.get(key, ZERO) for key in keys})

    keys = sorted(set(base) | {key for col in columns for key in col},
                  key=lambda kv: str(kv))
    rows = [[col.get(key, ZERO) for col in columns] + [-base.get(key, ZERO)]
            for key in keys]
    solution = _gauss_solve(rows, len(simples0))
    cvals = {a: solution[t] for t, a in enumerate(simples0)}
    lift = build(cvals)
    res = _para_residuals(lift, pairs)
    if any(not c.is_zero() for c in res.values()):
        raise NoSolution("solved constants do not close the relations")
    return lift


def para_lift(pi: Pyramid) -> ParaLift:
    return para_lift_graded(pi.grading())


def para_audit(lift: ParaLift):
    """Full pairwise OPE audit over a degree-zero basis; failing keys."""
    basis = [e_mat(*r) for r in lift.chart.roots]
    basis += [e_mat(r[1], r[0]) for r in lift.chart.roots]
    basis += [e_mat(i, i) for i in range(1, lift.N + 1)]
    pairs = [(u, v) for u in basis for v in basis]
    res = _para_residuals(lift, pairs)
    return {key for key, c in res.items() if not c.is_zero()}


# ---------------------------------------------------------------------------
# Screening specifications.

def chi_functional(f_mat, root):
    """chi(e_root) = (f | e_root) in the trace form."""
    return Scalar(trace_form(f_mat, e_mat(*root)))


def screening_spec(pi: Pyramid, alpha):
    g = pi.grading()
    return screening_spec_graded(g, pyramid_nilpotent(pi), alpha, h_vee=pi.N)


def screening_spec_graded(g: GLGrading, f_mat, alpha, h_vee):
    from .fock import ScreeningSpec
    from .scalars import register_pole_factor

    register_pole_factor(K + h_vee)
    chart = CoordinateChart.from_grading(g)
    deg = g.deg(alpha)
    PR = right_polys(chart, alpha)
    if deg == 0:
        kind = "zero"
        summands = [(PR.get(beta, {}), beta) for beta in g.delta0_plus()]
    else:
        members = [c.members for c in root_classes_graded(g) if c.alpha == alpha]
        (members,) = members
        if deg == Fraction(1, 2):
            kind = "half"
            summands = [(PR.get(beta, {}), beta) for beta in members]
        elif deg == 1:
            kind = "one"
            summands = [(p_scale(PR.get(beta, {}), chi_functional(f_mat, beta)), None)
                        for beta in members]
        else:
            raise ShapeMismatch(f"simple root of degree {deg} admits no screening")
    summands = [(p, tail) for p, tail in summands if p]
    i, j = alpha
    weight = {i: Scalar(-1) / (K + h_vee), j: ONE / (K + h_vee)}
    return ScreeningSpec(alpha=alpha, kind=kind, weight=weight,
                         summands=tuple(
                             (tuple(sorted(p.items())), tail) for p, tail in summands
                         ))
