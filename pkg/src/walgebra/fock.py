"""Fock modules over a generator table and lattice vertex operators.

A FockWeight is the coefficient map of the zero-mode field: weight w
assigns to each table generator a Scalar coefficient; the eigenvalue of
a generator u on the highest-weight vector is sum_v coeff_v pair2(u, v).

Module states are carried as plain vacuum-module states of the engine
plus a weight tag.  Acting with a field pushes the weight dependence
into scalar shifts of the lattice directions: every subset of lattice
symbols in an acting monomial may be traded for its eigenvalue times a
mode shift, and what remains is an ordinary vacuum-module product.

Lattice vertex operators Gamma_w(z) = U_w z^{<w,mu>} E-(z) E+(z) act
through the two exponential series; only integral pairings <w, mu> are
admitted, and the normalization U_w is fixed to +1 on every sector.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import MixedTables, NonIntegralExponents, ShapeMismatch
from .glstruct import Pyramid, e_mat, root_classes_graded
from .scalars import ONE, Scalar, ZERO
from .vertexcore import (
    FieldState,
    _pole_bound,
    derive_n,
    format_field,
    normal_order,
    nth_product,
)
from .wakimoto import (
    CoordinateChart,
    para_lift,
    para_table,
    poly_to_field,
    right_polys,
    root_label,
    screening_spec,
    zero_chart,
)

__all__ = [
    "ScreeningSpec",
    "FockWeight",
    "FockSpace",
    "FockState",
    "module_apply",
    "vertex_operator_apply",
    "screening_apply",
    "reduced_space",
    "reduced_space_graded",
    "intertwiner_vectors",
    "intertwiner_commutation_check",
    "equivariance_report",
    "kernel_report",
    "subregular_kernel_check",
]


@dataclass(frozen=True)
class ScreeningSpec:
    """Dressed screening data: sum of poly(a*) [tail] exp-factor terms.

    kind: "zero" (degree-0 simple root, tails are a-generators),
    "half" (tails are neutral-pair generators), "one" (no tail; the
    chi-functional is folded into the polynomial).  weight maps diagonal
    index -> Scalar coefficient of the exponential weight.
    """

    alpha: tuple
    kind: str
    weight: dict
    summands: tuple


@dataclass(frozen=True)
class FockWeight:
    """Exponent of a lattice sector: {generator name: Scalar}, pruned."""

    coeffs: tuple

    @classmethod
    def make(cls, mapping):
        items = []
        for name, c in mapping.items():
            c = c if isinstance(c, Scalar) else Scalar(c)
            if not c.is_zero():
                items.append((name, c))
        return cls(coeffs=tuple(sorted(items)))

    def get(self, name):
        for n, c in self.coeffs:
            if n == name:
                return c
        return ZERO

    def support(self):
        return tuple(n for n, _ in self.coeffs)

    def __add__(self, other):
        out = dict(self.coeffs)
        for n, c in other.coeffs:
            out[n] = out.get(n, ZERO) + c
        return FockWeight.make(out)

    def __str__(self):
        if not self.coeffs:
            return "0"
        return " + ".join(f"({c})*{n}" for n, c in self.coeffs)


class FockSpace:
    """A generator table with a marked set of lattice (Heisenberg) names."""

    def __init__(self, table, heis):
        self.table = table
        self.heis = frozenset(heis)
        for name in self.heis:
            table.index(name)
        self._heis_idx = frozenset(table.index(n) for n in self.heis)

    def weight(self, mapping) -> FockWeight:
        w = mapping if isinstance(mapping, FockWeight) else FockWeight.make(mapping)
        for name in w.support():
            if name not in self.heis:
                raise ShapeMismatch(f"{name!r} is not a lattice direction")
        return w

    def eigenvalue(self, name, w: FockWeight) -> Scalar:
        """Zero-mode eigenvalue of the named generator on the w-vector."""
        return self._eig(self.table.index(name), w)

    def _eig(self, gidx, w: FockWeight) -> Scalar:
        acc = ZERO
        for name, c in w.coeffs:
            acc = acc + self.table.pair2.get((gidx, self.table.index(name)), ZERO) * c
        return acc

    def pairing(self, u: FockWeight, v: FockWeight) -> Scalar:
        acc = ZERO
        for name, c in u.coeffs:
            acc = acc + self.eigenvalue(name, v) * c
        return acc

    def state(self, weight, body=None) -> FockState:
        if body is None:
            body = self.table.vacuum()
        return FockState(self, self.weight(weight), body)

    def vacuum_state(self) -> FockState:
        return self.state({})


class FockState:
    """body (x) e^{weight}: a vacuum-module state tagged with a sector."""

    __slots__ = ("space", "weight", "body")

    def __init__(self, space, weight, body):
        if body.table is not space.table:
            raise MixedTables("body lives over a different table")
        object.__setattr__(self, "space", space)
        object.__setattr__(self, "weight", weight)
        object.__setattr__(self, "body", body)

    def __setattr__(self, *a):
        raise AttributeError("FockState is immutable")

    def is_zero(self):
        return self.body.is_zero()

    def __add__(self, other):
        if not isinstance(other, FockState):
            return NotImplemented
        if other.space is not self.space:
            raise MixedTables("states live in different spaces")
        if self.is_zero():
            return other
        if other.is_zero():
            return self
        if self.weight != other.weight:
            raise ShapeMismatch("cannot add states in different sectors")
        return FockState(self.space, self.weight, self.body + other.body)

    def __sub__(self, other):
        return self + other * Scalar(-1)

    def __mul__(self, c):
        return FockState(self.space, self.weight, self.body * c)

    def __eq__(self, other):
        if not isinstance(other, FockState):
            return NotImplemented
        if self.space is not other.space:
            return False
        if self.is_zero() and other.is_zero():
            return True
        return self.weight == other.weight and self.body == other.body

    def __repr__(self):
        return f"({format_field(self.body)}) (x) e^[{self.weight}]"


# ---------------------------------------------------------------------------
# Module action of table fields on a sector.

def _mode(a: FieldState, n: int, b: FieldState) -> FieldState:
    """a_(n) b for any integer n; creation modes via (T^j a)_(-1) = j! a_(-1-j)."""
    if n >= 0:
        return nth_product(a, n, b)
    j = -n - 1
    return normal_order(derive_n(a, j), b) * Scalar(Fraction(1, math.factorial(j)))


def _heis_depth(space, mono):
    return sum(m + 1 for g, m in mono if g in space._heis_idx)


def module_apply(state: FieldState, n: int, v: FockState) -> FockState:
    """Mode n of a table field acting on a Fock state.

    Each lattice symbol D^m b in an acting monomial contributes either
    its field modes (vacuum-module rules) or its zero-mode eigenvalue
    times (-1)^m m! z^{-m-1}; summing over the exchanges reduces the
    action to engine products at shifted modes.
    """
    space = v.space
    if state.table is not space.table:
        raise MixedTables("acting field lives over a different table")
    eig_memo = {}

    def eig(gidx):
        if gidx not in eig_memo:
            eig_memo[gidx] = space._eig(gidx, v.weight)
        return eig_memo[gidx]

    body = space.table.zero()
    for mono, coeff in state.terms.items():
        shiftable = [pos for pos, (g, _) in enumerate(mono)
                     if g in space._heis_idx and not eig(g).is_zero()]
        for mask in range(1 << len(shiftable)):
            chosen = {shiftable[t] for t in range(len(shiftable))
                      if mask >> t & 1}
            c = coeff
            shift = 0
            for pos in chosen:
                g, m = mono[pos]
                c = c * eig(g) * Scalar(Fraction((-1) ** m * math.factorial(m)))
                shift += m + 1
            kept = tuple(x for pos, x in enumerate(mono) if pos not in chosen)
            part = space.table.state({kept: ONE})
            body = body + _mode(part, n - shift, v.body) * c
    return FockState(space, v.weight, body)


# ---------------------------------------------------------------------------
# Lattice vertex operators.

def _lattice_mode(space, w: FockWeight, q: int, state: FieldState) -> FieldState:
    """Mode q of the w-direction lattice field on a vacuum-module state."""
    acc = space.table.zero()
    for name, c in w.coeffs:
        acc = acc + _mode(space.table.gen(name), q, state) * c
    return acc


def _exp_terms(space, w, sign, dmax, seed: FieldState):
    """E(z) seed for E = exp(-sign * sum_q w_(sign*q) z^{-sign*q} / q).

    sign +1 is the annihilation half E+, sign -1 the creation half E-.
    Returns [E_0 seed, E_1 seed, ...] up to index dmax via the first-order
    recursion d E_d = -sign * sum_{q<=d} w_(sign*q) E_{d-q}.
    """
    out = [seed]
    for d in range(1, dmax + 1):
        acc = space.table.zero()
        for q in range(1, d + 1):
            acc = acc + _lattice_mode(space, w, sign * q, out[d - q])
        out.append(acc * Scalar(Fraction(-sign, d)))
    return out


def vertex_operator_apply(lam, dressing: FieldState, n: int,
                          v: FockState) -> FockState:
    """Mode n (field convention) of :A(z) Gamma_lam(z): on a Fock state.

    The dressing A must stay clear of the lattice directions, so its
    modes commute with the exponentials exactly and only finitely many
    (d, e) pairs survive: d is capped by the lattice depth of the body
    and e by the structural pole bound of A against the non-lattice
    content of the body.
    """
    space = v.space
    lam = space.weight(lam)
    for mono in dressing.terms:
        for g, _ in mono:
            if g in space._heis_idx:
                raise ShapeMismatch("dressing must avoid the lattice directions")
    p0s = space.pairing(lam, v.weight)
    if not p0s.is_constant() or p0s.as_rational().denominator != 1:
        raise NonIntegralExponents(f"<lam, mu> = {p0s} is not an integer")
    p0 = int(p0s.as_rational())
    out_weight = v.weight + lam
    if v.is_zero() or dressing.is_zero():
        return FockState(space, out_weight, space.table.zero())

    bound = 0
    for m1 in dressing.terms:
        for m2 in v.body.terms:
            rest = tuple(x for x in m2 if x[0] not in space._heis_idx)
            bound = max(bound, _pole_bound(m1, rest))
    dmax = max(_heis_depth(space, mono) for mono in v.body.terms)

    eplus = _exp_terms(space, lam, +1, dmax, v.body)
    body = space.table.zero()
    for d in range(dmax + 1):
        if eplus[d].is_zero():
            continue
        e_cap = bound - 1 - n - p0 + d
        for e in range(e_cap + 1):
            m = n + p0 + e - d
            mid = _mode(dressing, m, eplus[d])
            if mid.is_zero():
                continue
            body = body + _exp_terms(space, lam, -1, e, mid)[e]
    return FockState(space, out_weight, body)


# ---------------------------------------------------------------------------
# Screenings and the reduced spaces they act on.

def _heis_names(N):
    return frozenset(f"b[{i}]" for i in range(1, N + 1))


def reduced_space(pi: Pyramid) -> FockSpace:
    """Free-field space for the degree-zero coset: lattice + zero-block pairs."""
    g = pi.grading()
    table = para_table(g.N, zero_chart(g).roots)
    return FockSpace(table, _heis_names(g.N))


def reduced_space_graded(g, f_mat) -> FockSpace:
    """Graded variant with weight-1/2 neutral pairs for the half layer."""
    half = tuple(sorted(g.delta_at(Fraction(1, 2))))
    table = para_table(g.N, zero_chart(g).roots, half_roots=half, f_mat=f_mat)
    return FockSpace(table, _heis_names(g.N))


def _spec_weight(space, spec: ScreeningSpec) -> FockWeight:
    return space.weight({f"b[{i}]": c for i, c in spec.weight.items()})


def _summand_dressing(space, spec: ScreeningSpec, poly_items, tail):
    if spec.kind == "zero":
        tail_state = space.table.gen(f"a[{root_label(tail)}]")
    elif spec.kind == "half":
        tail_state = space.table.gen(f"Phi[{root_label(tail)}]")
    else:
        tail_state = None
    return poly_to_field(space.table, dict(poly_items), tail_state)


def screening_apply(spec: ScreeningSpec, v: FockState) -> FockState:
    """Residue mode of the dressed screening field on a Fock state."""
    space = v.space
    lam = _spec_weight(space, spec)
    out = FockState(space, v.weight + lam, space.table.zero())
    for poly_items, tail in spec.summands:
        dressing = _summand_dressing(space, spec, poly_items, tail)
        out = out + vertex_operator_apply(lam, dressing, 0, v)
    return out


# ---------------------------------------------------------------------------
# Intertwiner vectors and degree-zero equivariance.

def _class_members(g, alpha):
    for cl in root_classes_graded(g):
        if cl.alpha == alpha:
            return tuple(cl.members)
    raise ShapeMismatch(f"{alpha} is not a positive-degree simple root")


def intertwiner_vectors(pi: Pyramid, alpha, space=None):
    """v_beta = P_alpha^{beta,R}(a*) (x) e^{w_alpha} for beta in [alpha]."""
    g = pi.grading()
    if space is None:
        space = reduced_space(pi)
    spec = screening_spec(pi, alpha)
    lam = _spec_weight(space, spec)
    chart = CoordinateChart.from_grading(g)
    PR = right_polys(chart, alpha)
    vectors = {}
    for beta in _class_members(g, alpha):
        body = poly_to_field(space.table, PR.get(beta, {}))
        vectors[beta] = FockState(space, lam, body)
    return vectors


def _term_list(state: FockState):
    if state.is_zero():
        return []
    return [f"({format_field(FieldState(state.body.table, {m: c})).strip()})"
            f" (x) e^[{state.weight}]"
            for m, c in sorted(state.body.terms.items(), key=str)]


def intertwiner_commutation_check(pi: Pyramid, alpha, u_mat, beta,
                                  nmax=2, plift=None, space=None,
                                  vectors=None):
    """Check u-hat_(n) v_beta against the bracket recombination.

    Mode zero must land on sum_gamma c v_gamma with c the coefficient of
    e_beta in [e_gamma, u]; all higher modes must vanish.
    """
    g = pi.grading()
    if space is None:
        space = reduced_space(pi)
    if plift is None:
        plift = para_lift(pi)
        if plift.table is not space.table:
            plift = _relift(plift, space)
    if vectors is None:
        vectors = intertwiner_vectors(pi, alpha, space=space)
    uhat = plift.image(u_mat)
    failures = []
    got0 = module_apply(uhat, 0, vectors[beta])
    want0 = FockState(space, vectors[beta].weight, space.table.zero())
    for gamma, vg in vectors.items():
        c = g.roots.bracket_coefficient(gamma, u_mat, beta)
        if c:
            want0 = want0 + vg * Scalar(c)
    if got0 != want0:
        failures.append({"mode": 0, "got": _term_list(got0),
                         "want": _term_list(want0)})
    for n in range(1, nmax + 1):
        gotn = module_apply(uhat, n, vectors[beta])
        if not gotn.is_zero():
            failures.append({"mode": n, "got": _term_list(gotn), "want": []})
    return {
        "check": "intertwiner_commutation",
        "inputs": {"N": pi.N, "columns": list(pi.q), "alpha": list(alpha),
                   "beta": list(beta), "u": sorted(str(k) for k in u_mat),
                   "nmax": nmax},
        "status": "pass" if not failures else "fail",
        "witnesses": failures,
        "weights": {"sector": str(vectors[beta].weight)},
    }


def _relift(plift, space):
    """Rebuild a para lift's images over the space's own table."""
    from .wakimoto import ParaLift, _para_images

    g = plift.grading
    e, h, f = _para_images(g, space.table, plift.chart, plift.c)
    return ParaLift(g, space.table, plift.chart, e, h, f, plift.c)


def equivariance_report(pi: Pyramid, alpha, nmax=2):
    """Run the commutation check over a degree-zero basis and all beta."""
    g = pi.grading()
    space = reduced_space(pi)
    plift = _relift(para_lift(pi), space)
    vectors = intertwiner_vectors(pi, alpha, space=space)
    basis = []
    for r in zero_chart(g).roots:
        basis.append((f"e{r}", e_mat(*r)))
        basis.append((f"f{r}", e_mat(r[1], r[0])))
    for i in range(1, g.N + 1):
        basis.append((f"h{i}", e_mat(i, i)))
    checks = []
    for label, u in basis:
        for beta in vectors:
            rep = intertwiner_commutation_check(
                pi, alpha, u, beta, nmax=nmax,
                plift=plift, space=space, vectors=vectors)
            checks.append({"u": label, "beta": list(beta),
                           "status": rep["status"],
                           "witnesses": rep["witnesses"]})
    status = "pass" if all(c["status"] == "pass" for c in checks) else "fail"
    return {
        "check": "screening_equivariance",
        "inputs": {"N": pi.N, "columns": list(pi.q), "alpha": list(alpha),
                   "nmax": nmax},
        "status": status,
        "witnesses": [c for c in checks if c["status"] != "pass"],
        "weights": {"sector": str(_spec_weight(space, screening_spec(pi, alpha)))},
        "cases": checks,
    }


def kernel_report(spec: ScreeningSpec, items):
    """Apply one screening to labeled states; report which survive.

    items: {label: FockState}.  status is "pass" when every image
    vanishes; witnesses list the offending labels with their terms.
    """
    failures = []
    for label, v in items.items():
        got = screening_apply(spec, v)
        if not got.is_zero():
            failures.append({"label": label, "terms": _term_list(got)})
    return {
        "check": "screening_kernel",
        "inputs": {"alpha": list(spec.alpha), "kind": spec.kind,
                   "labels": sorted(items)},
        "status": "pass" if not failures else "fail",
        "witnesses": failures,
        "weights": {"shift": str(FockWeight.make(
            {f"b[{i}]": c for i, c in spec.weight.items()}))},
    }


def subregular_kernel_check():
    """Both screenings of the (2,1) chart kill the four reduced currents.

    The currents are the degree-zero polynomials of the short-column
    family evaluated on the coset images, so the composite fields (not
    just the linear currents) are checked.
    """
    from .glstruct import pyramid_from_columns
    from .miura import subregular_generators
    from .vertexcore import substitute

    pi = pyramid_from_columns((2, 1))
    space = reduced_space(pi)
    plift = _relift(para_lift(pi), space)
    gens = subregular_generators(3, 2)
    images = {"h[1]": plift.h[1], "h[2]": plift.h[2], "h[3]": plift.h[3],
              "e[1.2]": plift.e[(1, 2)], "e[2.1]": plift.f[(1, 2)]}
    items = {
        label: space.state({}, substitute(gens[label], images,
                                          target_table=space.table))
        for label in ("H", "Z", "E", "F")
    }
    cases = [kernel_report(screening_spec(pi, alpha), items)
             for alpha in ((1, 2), (2, 3))]
    witnesses = []
    for rep in cases:
        for w in rep["witnesses"]:
            witnesses.append({"alpha": rep["inputs"]["alpha"], **w})
    return {
        "check": "subregular_kernel",
        "inputs": {"columns": list(pi.q), "labels": sorted(items)},
        "status": "pass" if not witnesses else "fail",
        "witnesses": witnesses,
        "cases": cases,
    }
