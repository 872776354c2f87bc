"""Root data for gl_N, pyramids and their gradings, BCD rectangles.

Matrices are sparse {(i, j): Fraction} dicts with 1-based indices (BCD
uses indices in {-M..M} minus/plus 0).  Roots of gl_N are encoded as box
pairs (i, j), i != j, meaning eps_i - eps_j; the positive ones have
i < j.  Everything is exact and immutable after construction.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .errors import InvalidColumn, InvalidShape, NotUnimodal
from .scalars import K, Scalar

__all__ = [
    "RootSystemGL",
    "Pyramid",
    "BCDPyramid",
    "RootClass",
    "GLGrading",
    "LevelMap",
    "pyramid_from_columns",
    "pyramid_nilpotent",
    "grading_classification",
    "split_pyramid",
    "root_classes",
    "induced_orbit_check",
    "bcd_pyramid",
    "g0_blocks",
    "kappa0_blocked",
    "tau_form",
    "mat_bracket",
    "mat_mul",
    "mat_add",
    "mat_scale",
    "mat_trace",
    "trace_form",
    "e_mat",
    "orbit_dimension",
]


# ---------------------------------------------------------------------------
# Sparse matrices.

def e_mat(i, j, c=1):
    return {(i, j): Fraction(c)}


def mat_add(a, b):
    out = dict(a)
    for key, c in b.items():
        s = out.get(key, Fraction(0)) + c
        if s:
            out[key] = s
        else:
            out.pop(key, None)
    return out


def mat_scale(a, c):
    c = Fraction(c)
    if not c:
        return {}
    return {key: v * c for key, v in a.items()}


def mat_mul(a, b):
    out = {}
    by_row = {}
    for (i, j), c in b.items():
        by_row.setdefault(i, []).append((j, c))
    for (i, j), c in a.items():
        for l, d in by_row.get(j, ()):
            key = (i, l)
            s = out.get(key, Fraction(0)) + c * d
            if s:
                out[key] = s
            else:
                out.pop(key, None)
    return out


def mat_bracket(a, b):
    return mat_add(mat_mul(a, b), mat_scale(mat_mul(b, a), -1))


def mat_trace(a):
    return sum((c for (i, j), c in a.items() if i == j), Fraction(0))


def trace_form(a, b):
    return mat_trace(mat_mul(a, b))


# ---------------------------------------------------------------------------
# gl_N root data.

class RootSystemGL:
    """Basis e_{i,j}, simple roots eps_i - eps_{i+1}, trace form."""

    def __init__(self, N):
        if N < 1:
            raise ValueError("N must be positive")
        self.N = N
        self.h_vee = N
        self.positive_roots = [(i, j) for i in range(1, N + 1) for j in range(i + 1, N + 1)]
        self.simple_roots = [(i, i + 1) for i in range(1, N)]

    def e(self, i, j):
        return e_mat(i, j)

    def root_vector(self, root):
        return e_mat(*root)

    def coroot(self, root):
        i, j = root
        return mat_add(e_mat(i, i), mat_scale(e_mat(j, j), -1))

    def eps_vector(self, root):
        v = [0] * self.N
        i, j = root
        v[i - 1] += 1
        v[j - 1] -= 1
        return tuple(v)

    def root_pairing(self, r1, r2):
        """(r1|r2) in the trace form, roots as eps-differences."""
        v1, v2 = self.eps_vector(r1), self.eps_vector(r2)
        return sum(a * b for a, b in zip(v1, v2))

    def root_action(self, root, h):
        """alpha(h) for h a diagonal matrix."""
        i, j = root
        return h.get((i, i), Fraction(0)) - h.get((j, j), Fraction(0))

    def bracket_coefficient(self, gamma, u, beta):
        """Coefficient of e_beta in [e_gamma, u]."""
        br = mat_bracket(e_mat(*gamma), u)
        return br.get(beta, Fraction(0))

    def kappa0(self, u, v):
        """Killing form of gl_N: 2N tr(uv) - 2 tr(u) tr(v)."""
        return 2 * self.N * trace_form(u, v) - 2 * mat_trace(u) * mat_trace(v)

    def structure_constant(self, a, b):
        """[e_a, e_b] = c e_{a+b} for roots; returns (c, root) or (0, None)."""
        br = mat_bracket(e_mat(*a), e_mat(*b))
        if not br:
            return Fraction(0), None
        (key, c), = br.items()
        return c, key


# ---------------------------------------------------------------------------
# Gradings of gl_N given by degrees of the simple roots.

class GLGrading:
    """Root degrees from simple-root degrees (integers or half-integers)."""

    def __init__(self, N, simple_degrees):
        if len(simple_degrees) != N - 1:
            raise InvalidShape("need N-1 simple degrees")
        self.N = N
        self.simple_degrees = tuple(Fraction(d) for d in simple_degrees)
        self.roots = RootSystemGL(N)

    def deg(self, root):
        i, j = root
        if i < j:
            return sum(self.simple_degrees[t - 1] for t in range(i, j))
        return -sum(self.simple_degrees[t - 1] for t in range(j, i))

    def delta_plus(self):
        return list(self.roots.positive_roots)

    def delta0_plus(self):
        return [r for r in self.roots.positive_roots if self.deg(r) == 0]

    def delta_pos(self):
        return [r for r in self.roots.positive_roots if self.deg(r) > 0]

    def delta_at(self, d):
        d = Fraction(d)
        return [r for r in self.roots.positive_roots if self.deg(r) == d]

    def pi0(self):
        return [a for a in self.roots.simple_roots if self.deg(a) == 0]

    def pi_pos(self):
        return [a for a in self.roots.simple_roots if self.deg(a) > 0]

    def pi_at(self, d):
        d = Fraction(d)
        return [a for a in self.roots.simple_roots if self.deg(a) == d]


def g0_blocks(g: GLGrading):
    """Partition of {1..N} into the index blocks of the degree-zero part.

    i and j land in one block iff deg(e_ij) = 0; degree additivity makes
    this an equivalence.  For a pyramid grading the blocks are the
    columns.
    """
    blocks = []
    for i in range(1, g.N + 1):
        if blocks and g.deg((blocks[-1][-1], i)) == 0:
            blocks[-1].append(i)
        else:
            blocks.append([i])
    # consecutive scan is enough only if blocks are intervals; verify
    for bi, b in enumerate(blocks):
        for bj in range(bi + 1, len(blocks)):
            for i in b:
                for j in blocks[bj]:
                    if g.deg((i, j)) == 0:
                        raise InvalidShape("degree-zero part is not block-diagonal")
    return tuple(tuple(b) for b in blocks)


def _restrict(mat, idx):
    keep = set(idx)
    return {key: c for key, c in mat.items() if key[0] in keep and key[1] in keep}


def kappa0_blocked(blocks, u, v):
    """Killing form of the block subalgebra prod_b gl(n_b)."""
    out = Fraction(0)
    for b in blocks:
        ub, vb = _restrict(u, b), _restrict(v, b)
        out += 2 * len(b) * trace_form(ub, vb) - 2 * mat_trace(ub) * mat_trace(vb)
    return out


def tau_form(g: GLGrading, u, v) -> Scalar:
    """Level form on the degree-zero subalgebra:
    k (u|v) + (kappa_g(u,v) - kappa_{g_0}(u,v)) / 2."""
    half = Fraction(g.roots.kappa0(u, v) - kappa0_blocked(g0_blocks(g), u, v), 2)
    return K * Scalar(trace_form(u, v)) + Scalar(half)


# ---------------------------------------------------------------------------
# Pyramids.

@dataclass(frozen=True)
class Pyramid:
    q: tuple            # column heights, left to right
    N: int
    p: tuple            # row lengths, top to bottom
    rows: tuple         # row(i) per box, 1-based
    cols: tuple         # col(i) per box, 1-based

    def row(self, i):
        return self.rows[i - 1]

    def col(self, i):
        return self.cols[i - 1]

    def box_at(self, r, c):
        for i in range(1, self.N + 1):
            if self.rows[i - 1] == r and self.cols[i - 1] == c:
                return i
        return None

    def height(self):
        return max(self.q)

    def simple_degrees(self):
        return tuple(self.cols[i] - self.cols[i - 1] for i in range(1, self.N))

    def grading(self):
        return GLGrading(self.N, self.simple_degrees())

    def jordan_type(self):
        return tuple(sorted(self.p, reverse=True))

    def to_json(self):
        return {
            "columns": list(self.q),
            "boxes": self.N,
            "rows": list(self.p),
            "row_of_box": list(self.rows),
            "col_of_box": list(self.cols),
            "simple_degrees": [str(d) for d in self.simple_degrees()],
        }


def pyramid_from_columns(q) -> Pyramid:
    q = tuple(int(c) for c in q)
    if not q or any(c < 1 for c in q):
        raise InvalidShape("column heights must be positive")
    peak = q.index(max(q))
    rising = all(q[i] <= q[i + 1] for i in range(peak))
    falling = all(q[i] >= q[i + 1] for i in range(peak, len(q) - 1))
    if not (rising and falling):
        raise NotUnimodal(f"column profile {q} is not unimodal")

    height = max(q)
    rows, cols = [], []
    for c, qc in enumerate(q, start=1):
        for r in range(height - qc + 1, height + 1):
            rows.append(r)
            cols.append(c)
    p = tuple(sum(1 for qc in q if qc >= height - r + 1) for r in range(1, height + 1))
    return Pyramid(q=q, N=sum(q), p=p, rows=tuple(rows), cols=tuple(cols))


def pyramid_nilpotent(pi: Pyramid):
    """f as a sparse matrix: each box maps to its right-hand neighbor."""
    f = {}
    for i in range(1, pi.N + 1):
        j = pi.box_at(pi.row(i), pi.col(i) + 1)
        if j is not None:
            f = mat_add(f, e_mat(j, i))
    return f


def grading_classification(pi: Pyramid):
    g = pi.grading()
    degrees = pi.simple_degrees()
    pi0 = [f"a{i}" for i in range(1, pi.N) if degrees[i - 1] == 0]
    pi1 = [f"a{i}" for i in range(1, pi.N) if degrees[i - 1] != 0]
    # row characterization must agree with the degree one
    by_rows = [f"a{i}" for i in range(1, pi.N) if pi.row(i) < pi.row(pi.N)]
    if by_rows != pi0:
        raise InvalidShape("grading characterizations disagree")
    return {
        "degrees": list(degrees),
        "Pi0": pi0,
        "Pi1": pi1,
        "Delta0_plus": g.delta0_plus(),
    }


@dataclass(frozen=True)
class LevelMap:
    k1: Scalar
    k2: Scalar
    N1: int
    N2: int


def split_pyramid(pi: Pyramid, after: int):
    """Cut between columns `after` and `after`+1; renumber both factors."""
    L = len(pi.q)
    if not 1 <= after < L:
        raise InvalidColumn(f"cannot split {pi.q} after column {after}")
    p1 = pyramid_from_columns(pi.q[:after])
    p2 = pyramid_from_columns(pi.q[after:])
    levels = LevelMap(
        k1=K + pi.N - p1.N,
        k2=K + pi.N - p2.N,
        N1=p1.N,
        N2=p2.N,
    )
    # box numbering is column-major, so factor boxes sit consecutively
    into_parent_1 = {i: i for i in range(1, p1.N + 1)}
    into_parent_2 = {i: i + p1.N for i in range(1, p2.N + 1)}
    return p1, p2, levels, into_parent_1, into_parent_2


@dataclass(frozen=True)
class RootClass:
    alpha: tuple
    members: tuple


def root_classes(pi: Pyramid):
    return root_classes_graded(pi.grading())


def root_classes_graded(g: GLGrading):
    """One class per positive-degree simple root: [a] = a + (Q0 cap ...)."""
    rs = g.roots
    pi0 = g.pi0()
    out = []
    for alpha in g.pi_pos():
        va = rs.eps_vector(alpha)
        members = []
        for beta in rs.positive_roots:
            diff = tuple(x - y for x, y in zip(rs.eps_vector(beta), va))
            if _in_span_z(diff, [rs.eps_vector(a) for a in pi0]):
                members.append(beta)
        out.append(RootClass(alpha=alpha, members=tuple(members)))
    return out


def _in_span_z(vec, basis):
    """Is vec an integer combination of the basis vectors?

    The Pi0 eps-vectors are signed unit differences with disjoint support
    chains, so greedy elimination is exact: eliminate coordinates left to
    right using the unique basis vector starting there.
    """
    v = list(vec)
    rows = [list(b) for b in basis]
    for b in rows:
        lead = next((t for t, x in enumerate(b) if x), None)
        if lead is None:
            continue
        if v[lead] % b[lead]:
            return False
        c = v[lead] // b[lead]
        for t in range(len(v)):
            v[t] -= c * b[t]
    return not any(v)


def orbit_dimension(jordan_type, N):
    """dim of the nilpotent orbit with the given Jordan partition."""
    transpose = []
    m = max(jordan_type) if jordan_type else 0
    for t in range(1, m + 1):
        transpose.append(sum(1 for part in jordan_type if part >= t))
    return N * N - sum(t * t for t in transpose)


def induced_orbit_check(pi: Pyramid, after: int):
    """Levi-induction bookkeeping for the column split."""
    p1, p2, levels, _, _ = split_pyramid(pi, after)
    crossing = levels.N1          # the simple root a_{N1} joins the factors
    degrees = pi.simple_degrees()
    report = {
        "check": "induced_orbit",
        "split_after": after,
        "crossing_root": f"a{crossing}",
        "crossing_degree": str(degrees[crossing - 1]),
    }
    if degrees[crossing - 1] != 1:
        report["status"] = "not_applicable"
        return report
    dim_parent = orbit_dimension(pi.jordan_type(), pi.N)
    dim1 = orbit_dimension(p1.jordan_type(), p1.N)
    dim2 = orbit_dimension(p2.jordan_type(), p2.N)
    dim_u = p1.N * p2.N
    ok = dim_parent == dim1 + dim2 + 2 * dim_u
    report.update(
        status="pass" if ok else "fail",
        dim_parent=dim_parent,
        dim_factor1=dim1,
        dim_factor2=dim2,
        dim_nilradical=dim_u,
    )
    return report


# ---------------------------------------------------------------------------
# Rectangular BCD pyramids: an n x l box rectangle with centrally
# symmetric numbering {1..M} u {0?} u {-M..-1} and a nilpotent inside
# so_N or sp_N.

@dataclass(frozen=True)
class BCDPyramid:
    type: str           # "so" or "sp"
    n: int              # rows
    l: int              # columns
    N: int
    M: int
    labels: dict        # (row, col) -> label in {-M..M}
    f_entries: tuple    # ((a, b, sign), ...) meaning sign * e_{a,b}
    h_vee: int
    split: dict | None  # level bookkeeping for (l1, l2, l1), if requested

    def label(self, r, c):
        return self.labels[(r, c)]

    def f_matrix(self):
        f = {}
        for a, b, s in self.f_entries:
            f = mat_add(f, e_mat(a, b, s))
        return f

    def indices(self):
        out = list(range(-self.M, 0)) + list(range(1, self.M + 1))
        if self.N % 2:
            out.insert(self.M, 0)
        return out

    def form(self, i, j):
        """The invariant bilinear form B(v_i, v_j)."""
        if i != -j:
            return 0
        if self.type == "so":
            return 1
        if i == 0:
            return 0
        return 1 if i > 0 else -1

    def simple_root_name(self, i):
        if i < self.M:
            return f"eps{i}-eps{i+1}"
        if self.type == "sp":
            return f"2*eps{self.M}"
        if self.N % 2:
            return f"eps{self.M}"
        return f"eps{self.M-1}+eps{self.M}"

    def to_json(self):
        grid = [[self.labels[(r, c)] for c in range(1, self.l + 1)]
                for r in range(1, self.n + 1)]
        data = {
            "type": self.type,
            "rows": self.n,
            "columns": self.l,
            "boxes": self.N,
            "M": self.M,
            "numbering": grid,
            "f": [[a, b, s] for a, b, s in self.f_entries],
            "dual_coxeter": self.h_vee,
        }
        if self.split is not None:
            data["split"] = {
                key: (str(val) if isinstance(val, Scalar) else val)
                for key, val in self.split.items()
            }
        return data


def _bcd_valid(type_, n, l):
    if type_ == "so":
        return not (l % 2 == 0 and n % 2 == 1)
    return not (l % 2 == 1 and n % 2 == 1)


def bcd_pyramid(type_, n, l, l1=None) -> BCDPyramid:
    if type_ not in ("so", "sp"):
        raise InvalidShape(f"unknown type {type_!r}")
    if n < 1 or l < 1:
        raise InvalidShape("rectangle dimensions must be positive")
    N = n * l
    if type_ == "sp" and N % 2:
        raise InvalidShape(f"sp needs an even box count, got {N}")
    if not _bcd_valid(type_, n, l):
        kind = "even multiplicity of even parts" if type_ == "so" else \
               "even multiplicity of odd parts"
        raise InvalidShape(f"partition ({l}^{n}) violates {kind} for {type_}")

    M = N // 2
    labels = {}
    count = 0
    for c in range(1, l + 1):
        for r in range(1, n + 1):
            if count < M:
                count += 1
                labels[(r, c)] = count
            elif N % 2 and count == M and (r, c) == _center(n, l):
                labels[(r, c)] = 0
                count += 1
            else:
                labels[(r, c)] = None
    for c in range(1, l + 1):
        for r in range(1, n + 1):
            if labels[(r, c)] is None:
                labels[(r, c)] = -labels[(n + 1 - r, l + 1 - c)]

    f_entries = _bcd_signs(type_, n, l, labels)
    h_vee = N - 2 if type_ == "so" else M + 1

    split = None
    if l1 is not None:
        split = _bcd_split(type_, n, l, l1, N, M, h_vee)

    return BCDPyramid(
        type=type_, n=n, l=l, N=N, M=M, labels=labels,
        f_entries=f_entries, h_vee=h_vee, split=split,
    )


def _center(n, l):
    return ((n + 1) // 2, (l + 1) // 2)


def _form_value(type_, a):
    """B(v_a, v_{-a})."""
    if type_ == "so":
        return 1
    return 1 if a > 0 else -1


def _bcd_signs(type_, n, l, labels):
    """Right-neighbor edges with invariance-forced signs.

    Edges come in mirror pairs (a<-b) <-> (-b<- -a); invariance of the
    form demands s B(v_a, v_{-a}) + s' B(v_b, v_{-b}) = 0.  Walk edges in
    lexicographic order, give every free edge +1, and force its partner.
    """
    edges = []
    for r in range(1, n + 1):
        for c in range(1, l):
            b = labels[(r, c)]
            a = labels[(r, c + 1)]
            edges.append((a, b))
    edges.sort()
    signs = {}
    for a, b in edges:
        if (a, b) in signs:
            continue
        mirror = (-b, -a)
        if mirror == (a, b):
            # self-mirrored edge: constraint is s(B_a + B_b) = 0
            if _form_value(type_, a) + _form_value(type_, b) != 0:
                raise InvalidShape("no invariant sign assignment exists")
            signs[(a, b)] = 1
            continue
        signs[(a, b)] = 1
        forced = -Fraction(_form_value(type_, a), _form_value(type_, b))
        signs[mirror] = int(forced)
    out = tuple(sorted((a, b, signs[(a, b)]) for a, b in edges))
    return out


def _bcd_split(type_, n, l, l1, N, M, h_vee):
    if not (isinstance(l1, int) and 0 < 2 * l1 < l):
        raise InvalidShape(f"split width l1={l1} needs 0 < 2*l1 < {l}")
    l2 = l - 2 * l1
    if not _bcd_valid(type_, n, l2):
        raise InvalidShape(f"middle factor ({l2}^{n}) invalid for {type_}")
    N1 = n * l1
    N2 = n * l2
    gamma = 1 if type_ == "so" else 2
    if type_ == "so":
        k1 = K + N - 2 - N1
        k2 = K + 2 * N1
        h_vee2 = N2 - 2
    else:
        k1 = (K + M + 1) / 2 - N1
        k2 = K + N1
        h_vee2 = N2 // 2 + 1
    # the shared level relation k + h_vee = gamma (k1 + N1) = k2 + h_vee2
    assert K + h_vee == gamma * (k1 + N1) == k2 + h_vee2
    return {
        "l1": l1,
        "l2": l2,
        "N1": N1,
        "N2": N2,
        "gamma": gamma,
        "k1": k1,
        "k2": k2,
        "h_vee2": h_vee2,
        "relation": f"k + {h_vee} = {gamma}*(k1 + {N1}) = k2 + {h_vee2}",
    }
