"""Factorization of Miura operators under column splits.

A cut between pyramid columns splits the boson alphabet into two blocks.
The checks here verify, with exact coefficients, that the full operator
is the composition of the block operators, that the emitted image of
each generator substitutes back to its free-field expression, that the
two ways of refining a double cut agree, and the short-column variants
of the same statements (the reduced-current identities and the subset
fold lemma).

Images are emitted over a pairing-free symbol table whose letters are
the block generators, so a term like NO(W1[1], D^1(W2[2])) means exactly
what it prints.
"""

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import InvalidColumn, InvalidShape
from .glstruct import Pyramid, split_pyramid
from .miura import (
    MiuraOperator,
    lowering_expansion,
    miura_fold,
    opmul,
    principal_table,
    rectangular_table,
    subregular_generators,
    unit_operator,
)
from .scalars import K, Scalar
from .vertexcore import GeneratorTable, format_field, substitute

__all__ = [
    "SplitReport",
    "binomial_identity_check",
    "coassociativity_check",
    "factorization_check",
    "miura_compatibility_check",
    "subregular_coproduct_check",
]


@dataclass(frozen=True)
class SplitReport:
    pyramid: tuple
    splits: tuple
    levels: dict
    status: dict
    witnesses: tuple
    images: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(v == "pass" for v in self.status.values())

    def to_json(self):
        return {
            "pyramid": list(self.pyramid),
            "splits": list(self.splits),
            "levels": {k: str(v) for k, v in sorted(self.levels.items())},
            "status": dict(sorted(self.status.items())),
            "witnesses": list(self.witnesses),
            "images": dict(sorted(self.images.items())),
            "ok": self.ok,
        }


# ---------------------------------------------------------------------------
# Shared machinery for equal-column pyramids.

def _family(pi: Pyramid):
    if not pi.q:
        raise InvalidShape("empty pyramid")
    if len(set(pi.q)) != 1:
        return None
    return pi.q[0], len(pi.q)


def _block_op(table, n, lo, hi, c) -> MiuraOperator:
    # factors for columns lo..hi (1-based, inclusive) over the shared table
    if n == 1:
        parts = [table.gen(f"b[{t}]") for t in range(lo, hi + 1)]
    else:
        parts = [
            tuple(tuple(table.gen(f"e{t}[{j}.{i}]") for j in range(1, n + 1))
                  for i in range(1, n + 1))
            for t in range(lo, hi + 1)
        ]
    return miura_fold(parts, c)


def _symbol_table(shapes, n) -> GeneratorTable:
    # block b contributes letters Wb[1..deg_b]; gen order puts lower
    # blocks first so canonical monomials keep the tensor order
    gens = []
    for b, deg in enumerate(shapes, start=1):
        for i in range(1, deg + 1):
            if n == 1:
                gens.append((f"W{b}[{i}]", i))
            else:
                for a in range(1, n + 1):
                    for d in range(1, n + 1):
                        gens.append((f"W{b}[{i}][{a}.{d}]", i))
    return GeneratorTable(gens=gens, pair1={}, pair2={})


def _symbol_op(table, block, deg, n, c) -> MiuraOperator:
    coeffs = []
    for power in range(deg + 1):
        i = deg - power
        if i == 0:
            coeffs.append(unit_operator(table, c, n if n > 1 else 0).coeffs[0])
        elif n == 1:
            coeffs.append(table.gen(f"W{block}[{i}]"))
        else:
            coeffs.append(tuple(
                tuple(table.gen(f"W{block}[{i}][{a}.{d}]")
                      for d in range(1, n + 1))
                for a in range(1, n + 1)
            ))
    return MiuraOperator(tuple(coeffs), c)


def _coeff_cells(op: MiuraOperator, m: int, n: int):
    # label/body pairs for the Dhat^(degree-m) coefficient
    cell = op.coefficient(op.degree - m)
    if n == 1:
        return [(f"W[{m}]", cell)]
    return [(f"W[{m}][{a + 1}.{d + 1}]", cell[a][d])
            for a in range(n) for d in range(n)]


def _split_data(pi: Pyramid, after: int):
    p1, p2, levels, _, _ = split_pyramid(pi, after)
    fam = _family(pi)
    if fam is None:
        raise InvalidShape("factorization needs equal column heights")
    n, l = fam
    l1, l2 = after, l - after
    table = principal_table(pi.N) if n == 1 else rectangular_table(n, l)
    c = K + pi.N - 1 if n == 1 else K + n * (l - 1)
    full = _block_op(table, n, 1, l, c)
    op1 = _block_op(table, n, 1, l1, c)
    op2 = _block_op(table, n, l1 + 1, l, c)
    sym = _symbol_table((l1, l2), n)
    emitted = opmul(_symbol_op(sym, 1, l1, n, c), _symbol_op(sym, 2, l2, n, c))
    return {
        "p1": p1, "p2": p2, "levels": levels, "n": n, "l": l,
        "l1": l1, "l2": l2, "table": table, "c": c,
        "full": full, "op1": op1, "op2": op2,
        "sym": sym, "emitted": emitted,
    }


def _block_of_letter(sym: GeneratorTable, g: int) -> int:
    return int(sym.names[g].split("[", 1)[0][1:])


def _ledger_status(kN, pieces):
    return "pass" if all(kv + Nv == kN for kv, Nv in pieces) else "fail"


def factorization_check(pi: Pyramid, after: int) -> SplitReport:
    """Full operator == composition of the two block operators."""
    d = _split_data(pi, after)
    status, witnesses, images = {}, [], {}
    prod = opmul(d["op1"], d["op2"])
    status["factorization"] = "pass" if d["full"] == prod else "fail"
    if status["factorization"] == "fail":
        witnesses.append("composed block operators differ from the full fold")

    discipline = True
    leading = []
    for m in range(1, d["full"].degree + 1):
        for label, body in _coeff_cells(d["emitted"], m, d["n"]):
            images[label] = format_field(body)
            for mono in body.terms:
                blocks = [_block_of_letter(d["sym"], g) for g, _ in mono]
                if blocks != sorted(blocks):
                    discipline = False
        cells = _coeff_cells(d["emitted"], m, d["n"])
        leading.extend(max(body.terms) for _, body in cells if body.terms)
    status["tensor_discipline"] = "pass" if discipline else "fail"
    status["leading_terms"] = ("pass" if len(leading) == len(set(leading))
                               else "fail")
    lv = d["levels"]
    kN = K + pi.N
    status["level_ledger"] = _ledger_status(
        kN, [(K, pi.N), (lv.k1, lv.N1), (lv.k2, lv.N2)])
    return SplitReport(
        pyramid=pi.q, splits=(after,),
        levels={"k": K, "k1": lv.k1, "k2": lv.k2,
                "N": pi.N, "N1": lv.N1, "N2": lv.N2},
        status=status, witnesses=tuple(witnesses), images=images,
    )


def miura_compatibility_check(pi: Pyramid, after: int) -> SplitReport:
    """Substituting block fields into the emitted images recovers the fold."""
    d = _split_data(pi, after)
    n = d["n"]
    back = {}
    for block, op, deg in ((1, d["op1"], d["l1"]), (2, d["op2"], d["l2"])):
        for i in range(1, deg + 1):
            cell = op.coefficient(deg - i)
            if n == 1:
                back[f"W{block}[{i}]"] = cell
            else:
                for a in range(n):
                    for dd in range(n):
                        back[f"W{block}[{i}][{a + 1}.{dd + 1}]"] = cell[a][dd]

    status, witnesses, images = {}, [], {}
    ok = True
    for m in range(1, d["full"].degree + 1):
        emitted_cells = _coeff_cells(d["emitted"], m, n)
        direct_cells = _coeff_cells(d["full"], m, n)
        for (label, body), (_, want) in zip(emitted_cells, direct_cells):
            images[label] = format_field(body)
            got = substitute(body, back, target_table=d["table"])
            if got != want:
                ok = False
                witnesses.append(f"{label}: substituted image differs")
    status["miura_triangle"] = "pass" if ok else "fail"
    lv = d["levels"]
    status["level_ledger"] = _ledger_status(
        K + pi.N, [(lv.k1, lv.N1), (lv.k2, lv.N2)])
    return SplitReport(
        pyramid=pi.q, splits=(after,),
        levels={"k": K, "k1": lv.k1, "k2": lv.k2,
                "N": pi.N, "N1": lv.N1, "N2": lv.N2},
        status=status, witnesses=tuple(witnesses), images=images,
    )


def coassociativity_check(pi: Pyramid, c1: int, c2: int) -> SplitReport:
    """The two refinements of a double cut agree."""
    if c1 == c2:
        raise InvalidColumn("both cuts hit the same column boundary")
    lo, hi = sorted((c1, c2))
    L = len(pi.q)
    if not (1 <= lo and hi < L):
        raise InvalidColumn(f"cannot cut {pi.q} at {lo} and {hi}")

    # refinement A: outer cut at lo, inner cut inside the right block
    pa1, pa23, _, intoA1, intoA = split_pyramid(pi, lo)
    pa2, pa3, _, in2a, in3a = split_pyramid(pa23, hi - lo)
    # refinement B: outer cut at hi, inner cut inside the left block
    pb12, pb3, _, intoB, intoB3 = split_pyramid(pi, hi)
    pb1, pb2, _, in1b, in2b = split_pyramid(pb12, lo)

    status, witnesses, images = {}, [], {}
    blocks_a = (pa1.q, pa2.q, pa3.q)
    blocks_b = (pb1.q, pb2.q, pb3.q)
    status["refinement_blocks"] = "pass" if blocks_a == blocks_b else "fail"
    if blocks_a != blocks_b:
        witnesses.append(f"refinements produce {blocks_a} vs {blocks_b}")

    # box assignment through either composition
    mapsA = (dict(intoA1), {i: intoA[in2a[i]] for i in in2a},
             {i: intoA[in3a[i]] for i in in3a})
    mapsB = ({i: intoB[in1b[i]] for i in in1b}, {i: intoB[in2b[i]] for i in in2b},
             dict(intoB3))
    status["refinement_maps"] = "pass" if mapsA == mapsB else "fail"

    kN = K + pi.N
    tri = [(K + pi.N - p.N, p.N) for p in (pa1, pa2, pa3)]
    status["level_ledger"] = _ledger_status(kN, [(K, pi.N)] + tri)

    fam = _family(pi)
    if fam is not None:
        n, l = fam
        table = principal_table(pi.N) if n == 1 else rectangular_table(n, l)
        c = K + pi.N - 1 if n == 1 else K + n * (l - 1)
        cuts = (0, lo, hi, l)
        ops = [_block_op(table, n, cuts[b] + 1, cuts[b + 1], c)
               for b in range(3)]
        left = opmul(opmul(ops[0], ops[1]), ops[2])
        right = opmul(ops[0], opmul(ops[1], ops[2]))
        full = _block_op(table, n, 1, l, c)
        field_ok = left == right == full
        status["field_coassociativity"] = "pass" if field_ok else "fail"

        # emitted images through both association orders on a three-block
        # symbol alphabet
        degs = (lo, hi - lo, l - hi)
        tri_sym = _symbol_table(degs, n)
        pair_a = _symbol_table((degs[0], degs[1] + degs[2]), n)
        inner_a = _symbol_table((degs[1], degs[2]), n)
        pair_b = _symbol_table((degs[0] + degs[1], degs[2]), n)
        inner_b = _symbol_table((degs[0], degs[1]), n)

        def emit(sym, d1, d2):
            return opmul(_symbol_op(sym, 1, d1, n, c),
                         _symbol_op(sym, 2, d2, n, c))

        def relabel(prefix_map, sym_from):
            out = {}
            for name in sym_from.names:
                head, rest = name.split("[", 1)
                out[name] = tri_sym.gen(f"W{prefix_map[int(head[1:])]}[{rest}")
            return out

        opA = emit(pair_a, degs[0], degs[1] + degs[2])
        innerA = emit(inner_a, degs[1], degs[2])
        backA = relabel({1: 1}, _symbol_table((degs[0],), n))
        backA.update({
            f"W2[{i}]" if n == 1 else f"W2[{i}][{a}.{d}]": cell
            for i in range(1, degs[1] + degs[2] + 1)
            for (a, d, cell) in _cells_for(innerA, degs[1] + degs[2], i, n,
                                           relabel({1: 2, 2: 3}, inner_a),
                                           tri_sym)
        })
        opB = emit(pair_b, degs[0] + degs[1], degs[2])
        innerB = emit(inner_b, degs[0], degs[1])
        backB = {}
        backB.update({
            f"W1[{i}]" if n == 1 else f"W1[{i}][{a}.{d}]": cell
            for i in range(1, degs[0] + degs[1] + 1)
            for (a, d, cell) in _cells_for(innerB, degs[0] + degs[1], i, n,
                                           relabel({1: 1, 2: 2}, inner_b),
                                           tri_sym)
        })
        for name in pair_b.names:
            if name.startswith("W2["):
                backB[name] = tri_sym.gen("W3[" + name.split("[", 1)[1])

        emission_ok = True
        for m in range(1, l + 1):
            cellsA = _coeff_cells(opA, m, n)
            cellsB = _coeff_cells(opB, m, n)
            for (label, bodyA), (_, bodyB) in zip(cellsA, cellsB):
                viaA = substitute(bodyA, backA, target_table=tri_sym)
                viaB = substitute(bodyB, backB, target_table=tri_sym)
                images[label] = format_field(viaA)
                if viaA != viaB:
                    emission_ok = False
                    witnesses.append(f"{label}: refinement orders disagree")
        status["emission_coassociativity"] = "pass" if emission_ok else "fail"

    return SplitReport(
        pyramid=pi.q, splits=(lo, hi),
        levels={"k": K, "N": pi.N,
                "k1": tri[0][0], "N1": tri[0][1],
                "k2": tri[1][0], "N2": tri[1][1],
                "k3": tri[2][0], "N3": tri[2][1]},
        status=status, witnesses=tuple(witnesses), images=images,
    )


def _cells_for(op, deg, i, n, back, target):
    cell = op.coefficient(deg - i)
    if n == 1:
        yield (1, 1, substitute(cell, back, target_table=target))
        return
    for a in range(n):
        for d in range(n):
            yield (a + 1, d + 1,
                   substitute(cell[a][d], back, target_table=target))


# ---------------------------------------------------------------------------
# Short-column variants.

def subregular_coproduct_check(N: int, N1: int) -> SplitReport:
    """The four reduced-current identities, exact over the full table."""
    gens = subregular_generators(N, N1)
    N2 = gens["N2"]
    cases = {
        "eq1_weight": (gens["H"],
                       gens["H1"]
                       + gens["Z1"] * Scalar(Fraction(N2, N * N1))
                       - gens["Wplus"][1] * Scalar(Fraction(1, N))),
        "eq2_center": (gens["Z"], gens["Z1"] + gens["Wplus"][1]),
        "eq3_raising": (gens["E"], gens["E1"]),
        "eq4_lowering": (gens["F"], lowering_expansion(gens)),
    }
    status, witnesses, images = {}, [], {}
    for name, (lhs, rhs) in cases.items():
        good = lhs == rhs
        status[name] = "pass" if good else "fail"
        images[name] = format_field(rhs)
        if not good:
            witnesses.append(f"{name}: difference {format_field(lhs - rhs)}")
    k1 = K + N - N1
    k2 = K + N - N2
    status["level_ledger"] = _ledger_status(
        K + N, [(k1, N1), (k2, N2)])
    return SplitReport(
        pyramid=(2,) + (1,) * (N - 2), splits=(N1,),
        levels={"k": K, "k1": k1, "k2": k2, "N": N, "N1": N1, "N2": N2},
        status=status, witnesses=tuple(witnesses), images=images,
    )


def binomial_identity_check(n: int):
    """Subset-fold lemma over formal bosons with generic pairwise levels.

    Checks binom(n-j, i) * (coefficient j of the full descending fold)
    against the sum over i-subsets of the same coefficient of the fold
    omitting those factors, for every admissible (i, j); the subset
    enumeration is the oracle.  The empty fold is the unit operator.
    """
    pair2 = {}
    for a in range(1, n + 1):
        for b in range(a, n + 1):
            pair2[(f"u[{a}]", f"u[{b}]")] = K + Scalar(a + b) + Scalar(a * b)
    table = GeneratorTable(
        gens=[(f"u[{t}]", 1) for t in range(1, n + 1)],
        pair1={}, pair2=pair2)
    c = K + 1

    def coeffs(subset):
        if not subset:
            return [table.vacuum()]
        parts = [table.gen(f"u[{s}]") * Scalar(-1) for s in subset]
        op = miura_fold(parts, c)
        return [op.coefficient(len(subset) - j) for j in range(len(subset) + 1)]

    full = coeffs(tuple(range(1, n + 1)))
    checked = 0
    witnesses = []
    for i in range(n + 1):
        for j in range(n - i + 1):
            lhs = full[j] * Scalar(math.comb(n - j, i))
            rhs = table.zero()
            for omit in itertools.combinations(range(1, n + 1), i):
                keep = tuple(s for s in range(1, n + 1) if s not in omit)
                rhs = rhs + coeffs(keep)[j]
            checked += 1
            if lhs != rhs:
                witnesses.append(f"(i, j) = ({i}, {j})")
    return {
        "check": "binomial_identity",
        "n": n,
        "cases": checked,
        "status": "pass" if not witnesses else "fail",
        "witnesses": witnesses,
    }
