"""Normally ordered products and n-th products over a free generator table.

States are finite Q(k)-linear combinations of canonical monomials.  A
monomial is a right-nested normally ordered word in symbols D^m g (g a
table generator, m >= 0), stored as a tuple of (generator index, m)
sorted by that pair.  The empty tuple is the vacuum.

All products reduce to this canonical form through four exact rules:

  * derivative shifts     (D^m A)_(n) = (-1)^m n(n-1)...(n-m+1) A_(n-m),
                          A_(n) D B = D(A_(n) B) + n A_(n-1) B;
  * the table             g_(1) h = pair2(g,h) |0>, g_(0) h = pair1(g,h),
                          g_(n) h = 0 for n >= 2;
  * the Wick formula for a generator against a word;
  * the associativity (iterate) expansion of (A_(-1)B)_(n)C, which also
    supplies the reordering correction
                [A_(-1), B_(-1)] = sum_j (-1)^j (A_(j)B)_(-2-j).

pair1 values must be linear in the generators (scalar first poles or
current brackets); this covers every table in the package and keeps the
recursion elementary.
"""

from __future__ import annotations

from fractions import Fraction

from .errors import MixedTables
from .scalars import ONE, Scalar, ZERO

__all__ = [
    "GeneratorTable",
    "FieldState",
    "normal_order",
    "derive",
    "derive_n",
    "nth_product",
    "canonical_form",
    "substitute",
    "parse_field",
    "format_field",
]

_FR1 = Fraction(1)


def _factorial(n):
    out = 1
    for i in range(2, n + 1):
        out *= i
    return out


def _falling(n, m):
    """n (n-1) ... (n-m+1); the empty product for m = 0."""
    out = 1
    for i in range(m):
        out *= n - i
    return out


def _binom(n, j):
    if j < 0:
        return 0
    out = 1
    for i in range(j):
        out = out * (n - i) // (i + 1)
    return out


class GeneratorTable:
    """Generators with conformal weights and their first/second poles.

    `gens` is a sequence of (name, weight) pairs.  `pair2` maps name pairs
    to Scalars (symmetric; missing = 0).  `pair1` maps name pairs to a
    linear combination written as {name: coeff} with the special key "1"
    for a multiple of the vacuum (missing = 0); it is antisymmetrized, so
    supplying one orientation is enough, and supplying both is checked.
    """

    def __init__(self, gens, pair2=None, pair1=None):
        names = []
        weights = []
        for name, wt in gens:
            if name in names:
                raise ValueError(f"duplicate generator {name!r}")
            names.append(name)
            weights.append(Fraction(wt))
        self.names = tuple(names)
        self.weights = tuple(weights)
        self._index = {n: i for i, n in enumerate(self.names)}

        self.pair2 = {}
        for (a, b), val in (pair2 or {}).items():
            i, j = self._index[a], self._index[b]
            val = _coerce_scalar(val)
            for key in ((i, j), (j, i)):
                if key in self.pair2 and self.pair2[key] != val:
                    raise ValueError(f"pair2 not symmetric at {a!r},{b!r}")
                if not val.is_zero():
                    self.pair2[key] = val

        self.pair1 = {}
        for (a, b), combo in (pair1 or {}).items():
            i, j = self._index[a], self._index[b]
            terms = {}
            for key, c in combo.items():
                c = _coerce_scalar(c)
                if c.is_zero():
                    continue
                mono = () if key in (1, "1") else ((self._index[key], 0),)
                terms[mono] = c
            neg = {m: -c for m, c in terms.items()}
            for key, val in (((i, j), terms), ((j, i), neg)):
                if key in self.pair1 and self.pair1[key] != val:
                    raise ValueError(f"pair1 not antisymmetric at {a!r},{b!r}")
                if val:
                    self.pair1[key] = val

        self._prod_memo = {}
        self._attach_memo = {}

    def index(self, name):
        return self._index[name]

    def gen(self, name):
        """The generator as a FieldState."""
        return FieldState(self, {((self._index[name], 0),): ONE})

    def vacuum(self):
        return FieldState(self, {(): ONE})

    def zero(self):
        return FieldState(self, {})

    def state(self, terms):
        """FieldState from {monomial: scalar} with monomials over indices."""
        return FieldState(self, terms)

    def monomial_weight(self, mono):
        return sum((self.weights[g] + m for g, m in mono), Fraction(0))

    def __repr__(self):
        return f"GeneratorTable({', '.join(self.names)})"


def _coerce_scalar(c):
    if isinstance(c, Scalar):
        return c
    return Scalar(c)


class FieldState:
    """Immutable linear combination of canonical monomials."""

    __slots__ = ("table", "terms")

    def __init__(self, table, terms):
        clean = {}
        for mono, c in terms.items():
            c = _coerce_scalar(c)
            if not c.is_zero():
                clean[mono] = c
        object.__setattr__(self, "table", table)
        object.__setattr__(self, "terms", clean)

    def __setattr__(self, *a):
        raise AttributeError("FieldState is immutable")

    def is_zero(self):
        return not self.terms

    def weights(self):
        """Conformal weight of each monomial present."""
        return {m: self.table.monomial_weight(m) for m in self.terms}

    def weight(self):
        """The common weight of a homogeneous state (None if mixed/zero)."""
        ws = set(self.weights().values())
        return ws.pop() if len(ws) == 1 else None

    def scalar_part(self):
        """Coefficient of the vacuum monomial."""
        return self.terms.get((), ZERO)

    # -- linear structure ----------------------------------------------------

    def __add__(self, other):
        if not isinstance(other, FieldState):
            return NotImplemented
        if other.table is not self.table:
            raise MixedTables("cannot add states over different tables")
        terms = dict(self.terms)
        for m, c in other.terms.items():
            _add_into(terms, m, c)
        return FieldState(self.table, terms)

    def __sub__(self, other):
        return self + (-other)

    def __neg__(self):
        return FieldState(self.table, {m: -c for m, c in self.terms.items()})

    def __mul__(self, c):
        if isinstance(c, FieldState):
            return NotImplemented
        c = _coerce_scalar(c)
        return FieldState(self.table, {m: v * c for m, v in self.terms.items()})

    __rmul__ = __mul__

    def __truediv__(self, c):
        return self * (ONE / _coerce_scalar(c))

    def __eq__(self, other):
        if not isinstance(other, FieldState):
            return NotImplemented
        return self.table is other.table and self.terms == other.terms

    def __hash__(self):
        return hash((id(self.table), tuple(sorted(self.terms.items()))))

    def __str__(self):
        return format_field(self)

    def __repr__(self):
        return f"<FieldState {format_field(self)}>"


def _add_into(dst, mono, c):
    cur = dst.get(mono)
    if cur is None:
        if not c.is_zero():
            dst[mono] = c
        return
    s = cur + c
    if s.is_zero():
        del dst[mono]
    else:
        dst[mono] = s


def _scaled_into(dst, src, c):
    if c.is_zero():
        return
    for m, v in src.items():
        _add_into(dst, m, v * c)


# ---------------------------------------------------------------------------
# Core recursion on monomials.  All functions return raw {mono: Scalar}.

def _pole_bound(m1, m2):
    """Modes >= this bound annihilate: sum of pairwise locality orders."""
    total = 0
    for _, da in m1:
        for _, db in m2:
            total += da + db + 2
    return total


def _mono_prod(table, m1, n, m2):
    """m1_(n) m2 for canonical monomials; the workhorse."""
    key = (m1, n, m2)
    memo = table._prod_memo
    hit = memo.get(key)
    if hit is not None:
        return hit

    if not m1:
        out = {m2: ONE} if n == -1 else {}
    elif len(m1) == 1:
        g, m = m1[0]
        if m == 0:
            out = _single(table, g, n, m2)
        else:
            c = _falling(n, m)
            if c == 0:
                out = {}
            else:
                c = Scalar(Fraction((-1) ** m * c))
                base = _single(table, g, n - m, m2)
                out = {mo: v * c for mo, v in base.items()}
    else:
        u = m1[:1]
        rest = m1[1:]
        out = {}
        # (u_(-1) R)_(n) C = sum_j u_(-1-j)(R_(n+j) C) + R_(n-1-j)(u_(j) C)
        top = _pole_bound(rest, m2) - n
        for j in range(max(top, 0)):
            inner = _mono_prod(table, rest, n + j, m2)
            for mo, c in inner.items():
                _scaled_into(out, _mono_prod(table, u, -1 - j, mo), c)
        for j in range(_pole_bound(u, m2)):
            inner = _mono_prod(table, u, j, m2)
            for mo, c in inner.items():
                _scaled_into(out, _mono_prod(table, rest, n - 1 - j, mo), c)

    memo[key] = out
    return out


def _single(table, g, n, m2):
    """Bare generator g at mode n against a canonical monomial."""
    if n <= -1:
        q = -1 - n
        sym = (g, q)
        inv = Scalar(Fraction(1, _factorial(q)))
        base = _attach(table, sym, m2)
        if q == 0:
            return base
        return {mo: c * inv for mo, c in base.items()}

    if not m2:
        return {}

    if len(m2) == 1:
        h, p = m2[0]
        if p == 0:
            if n >= 2:
                return {}
            if n == 1:
                c = table.pair2.get((g, h))
                return {(): c} if c is not None else {}
            combo = table.pair1.get((g, h))
            return dict(combo) if combo else {}
        # g_(n) D(B) = D(g_(n) B) + n g_(n-1) B  with B = D^{p-1} h
        b = ((h, p - 1),)
        out = _derive_raw(table, _single(table, g, n, b))
        if n:
            nsc = Scalar(n)
            for mo, c in _single(table, g, n - 1, b).items():
                _add_into(out, mo, c * nsc)
        return out

    # Wick formula against a composite word m2 = :u2 R2:
    u2 = m2[:1]
    r2 = m2[1:]
    gm = ((g, 0),)
    out = {}
    lead = _mono_prod(table, gm, n, u2)
    for mo, c in lead.items():
        _scaled_into(out, _mono_prod(table, mo, -1, r2), c)
    tail = _single(table, g, n, r2)
    for mo, c in tail.items():
        _scaled_into(out, _mono_prod(table, u2, -1, mo), c)
    for j in range(n):
        bj = _binom(n, j)
        if bj == 0:
            continue
        bj = Scalar(bj)
        xj = _mono_prod(table, gm, j, u2)
        for mo, c in xj.items():
            _scaled_into(out, _mono_prod(table, mo, n - 1 - j, r2), c * bj)
    return out


def _attach(table, sym, m2):
    """NO(D^q g, m2) in canonical form; sym = (g, q)."""
    key = (sym, m2)
    memo = table._attach_memo
    hit = memo.get(key)
    if hit is not None:
        return hit

    if not m2 or sym <= m2[0]:
        out = {(sym,) + m2: ONE}
    else:
        head = m2[0]
        rest = m2[1:]
        out = {}
        inner = _attach(table, sym, rest)
        for mo, c in inner.items():
            _scaled_into(out, _attach(table, head, mo), c)
        # reorder correction: sum_j (-1)^j (sym_(j) head)_(-2-j) rest
        for j in range(sym[1] + head[1] + 2):
            xj = _mono_prod(table, (sym,), j, (head,))
            if not xj:
                continue
            sgn = Scalar((-1) ** j)
            for mo, c in xj.items():
                _scaled_into(out, _mono_prod(table, mo, -2 - j, rest), c * sgn)

    memo[key] = out
    return out


def _derive_raw(table, terms):
    out = {}
    for mono, c in terms.items():
        for i in range(len(mono)):
            g, m = mono[i]
            bumped = (g, m + 1)
            d = _attach(table, bumped, mono[i + 1:])
            for j in range(i - 1, -1, -1):
                nd = {}
                for mo, cc in d.items():
                    _scaled_into(nd, _attach(table, mono[j], mo), cc)
                d = nd
            _scaled_into(out, d, c)
    return out


# ---------------------------------------------------------------------------
# Public operations.

def _check_tables(a, b):
    if a.table is not b.table:
        raise MixedTables("operands live over different generator tables")


def _product(a, n, b):
    _check_tables(a, b)
    out = {}
    for m1, c1 in a.terms.items():
        for m2, c2 in b.terms.items():
            _scaled_into(out, _mono_prod(a.table, m1, n, m2), c1 * c2)
    return FieldState(a.table, out)


def normal_order(a: FieldState, b: FieldState) -> FieldState:
    """The (-1)-st product :AB:, canonicalized."""
    return _product(a, -1, b)


def nth_product(a: FieldState, n: int, b: FieldState) -> FieldState:
    """A_(n)B for n >= 0 (the singular OPE part)."""
    if n < 0:
        raise ValueError("nth_product is for n >= 0; use normal_order")
    return _product(a, n, b)


def derive(a: FieldState) -> FieldState:
    """Translation operator: Leibniz extension of D^m g -> D^{m+1} g."""
    return FieldState(a.table, _derive_raw(a.table, a.terms))


def derive_n(a: FieldState, m: int) -> FieldState:
    for _ in range(m):
        a = derive(a)
    return a


def canonical_form(a: FieldState) -> FieldState:
    """Idempotent normal form (construction already canonicalizes)."""
    return FieldState(a.table, a.terms)


def substitute(a: FieldState, images: dict, target_table=None) -> FieldState:
    """Evaluate each monomial with generators replaced by states.

    `images` maps generator names of a.table to FieldStates over a common
    target table.  Monomials are rebuilt in nesting order, so reordering
    and quasi-associativity corrections in the target are picked up.
    """
    by_index = {}
    for name, img in images.items():
        by_index[a.table.index(name)] = img
    if target_table is None:
        some = next(iter(by_index.values()), None)
        if some is None:
            raise ValueError("no images supplied")
        target_table = some.table
    for img in by_index.values():
        if img.table is not target_table:
            raise MixedTables("substitution images over different tables")

    out = target_table.zero()
    for mono, c in a.terms.items():
        val = target_table.vacuum()
        for g, m in reversed(mono):
            if g not in by_index:
                raise KeyError(f"no image for generator {a.table.names[g]!r}")
            val = normal_order(derive_n(by_index[g], m), val)
        out = out + val * c
    return out


# ---------------------------------------------------------------------------
# Term grammar:  field := term ('+' term)*
#                term  := scalar '*' mono | scalar | mono
#                mono  := 'NO(' factor (',' factor)* ')' | factor | '1'
#                factor:= 'D^'m'(' gen ')' | 'D(' gen ')' | gen
#                gen   := name '[' idx (',' idx)* ']'
# '1' is the vacuum word.  Printing uses this exact shape.

def format_field(a: FieldState) -> str:
    if not a.terms:
        return "0"
    table = a.table
    items = sorted(
        a.terms.items(),
        key=lambda kv: (table.monomial_weight(kv[0]), len(kv[0]), kv[0]),
    )
    parts = []
    for mono, c in items:
        mono_s = _format_mono(table, mono)
        cs = str(c)
        if mono_s == "1":
            # scalar multiple of the vacuum prints as the bare scalar;
            # re-parsing a compound sum splits it into vacuum terms, which
            # add back to the same state
            parts.append(cs)
        elif c == ONE:
            parts.append(mono_s)
        elif c == -ONE:
            parts.append(f"-{mono_s}")
        else:
            if " " in cs:
                cs = f"({cs})"
            parts.append(f"{cs}*{mono_s}")
    s = parts[0]
    for p in parts[1:]:
        s += " - " + p[1:] if p.startswith("-") else " + " + p
    return s


def _format_mono(table, mono):
    if not mono:
        return "1"
    factors = [_format_sym(table, s) for s in mono]
    if len(factors) == 1:
        return factors[0]
    return f"NO({', '.join(factors)})"


def _format_sym(table, sym):
    g, m = sym
    name = table.names[g]
    if m == 0:
        return name
    return f"D^{m}({name})"


class _FieldTokens:
    def __init__(self, text):
        self.toks = []
        i, n = 0, len(text)
        while i < n:
            c = text[i]
            if c.isspace():
                i += 1
                continue
            if c.isdigit():
                j = i
                while j < n and text[j].isdigit():
                    j += 1
                self.toks.append(("num", int(text[i:j])))
                i = j
            elif c.isalpha() or c == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.toks.append(("name", text[i:j]))
                i = j
            elif c in "+-*/^()[],":
                self.toks.append((c, None))
                i += 1
            else:
                raise ValueError(f"bad character {c!r} in field expression")
        self.toks.append(("end", None))
        self.pos = 0

    def peek(self, ahead=0):
        p = min(self.pos + ahead, len(self.toks) - 1)
        return self.toks[p]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expect(self, kind):
        t = self.next()
        if t[0] != kind:
            raise ValueError(f"expected {kind!r}, got {t[0]!r}")
        return t


def parse_field(table: GeneratorTable, text: str) -> FieldState:
    toks = _FieldTokens(text)
    out = _parse_terms(table, toks)
    if toks.peek()[0] != "end":
        raise ValueError(f"trailing input in field expression: {text!r}")
    return out


def _parse_terms(table, toks):
    total = table.zero()
    sign = 1
    first = True
    while True:
        kind = toks.peek()[0]
        if kind in ("+", "-"):
            toks.next()
            sign = -1 if kind == "-" else 1
        elif not first:
            break
        total = total + _parse_term(table, toks) * Scalar(sign)
        first = False
        if toks.peek()[0] not in ("+", "-"):
            break
    return total


def _parse_term(table, toks):
    coeff = ONE
    mono = None
    while True:
        if _at_mono(table, toks):
            m = _parse_mono(table, toks)
            if mono is None:
                mono = m
            else:
                mono = normal_order(mono, m)
        else:
            coeff = coeff * _parse_scalar_factor(toks)
        while toks.peek()[0] == "/" and toks.peek(1)[0] in ("num", "name", "("):
            toks.next()
            coeff = coeff / _parse_scalar_factor(toks)
        if toks.peek()[0] == "*":
            toks.next()
            continue
        break
    if mono is None:
        mono = table.vacuum()
    return mono * coeff


def _at_mono(table, toks):
    kind, val = toks.peek()
    if kind != "name":
        return False
    if val == "NO":
        return True
    if val == "D":
        return True
    return toks.peek(1)[0] == "["


def _parse_mono(table, toks):
    kind, val = toks.peek()
    if val == "NO":
        toks.next()
        toks.expect("(")
        factors = [_parse_factor(table, toks)]
        while toks.peek()[0] == ",":
            toks.next()
            factors.append(_parse_factor(table, toks))
        toks.expect(")")
        out = factors[-1]
        for f in reversed(factors[:-1]):
            out = normal_order(f, out)
        return out
    return _parse_factor(table, toks)


def _parse_factor(table, toks):
    kind, val = toks.next()
    if kind != "name":
        raise ValueError(f"expected a field factor, got {kind!r}")
    if val == "D":
        m = 1
        if toks.peek()[0] == "^":
            toks.next()
            m = toks.expect("num")[1]
        toks.expect("(")
        inner = _parse_factor(table, toks)
        toks.expect(")")
        return derive_n(inner, m)
    name = _parse_gen_name(val, toks)
    return table.gen(name)


def _parse_gen_name(base, toks):
    if toks.peek()[0] != "[":
        raise ValueError(f"generator {base!r} needs bracketed indices")
    toks.next()
    idx = [str(toks.expect("num")[1])]
    while toks.peek()[0] == ",":
        toks.next()
        idx.append(str(toks.expect("num")[1]))
    toks.expect("]")
    return f"{base}[{','.join(idx)}]"


def _parse_scalar_factor(toks):
    # a scalar factor: number, k, or parenthesized scalar expression,
    # optionally followed by ^exponent
    kind, val = toks.peek()
    if kind == "num":
        toks.next()
        base = Scalar(val)
    elif kind == "name" and val == "k":
        toks.next()
        base = Scalar.gen()
    elif kind == "(":
        toks.next()
        base = _parse_scalar_sum(toks)
        toks.expect(")")
    else:
        raise ValueError(f"expected a scalar factor, got {kind!r}")
    if toks.peek()[0] == "^":
        toks.next()
        exp = toks.expect("num")[1]
        base = base**exp
    return base


def _parse_scalar_sum(toks):
    total = ZERO
    sign = 1
    first = True
    while True:
        kind = toks.peek()[0]
        if kind in ("+", "-"):
            toks.next()
            sign = -1 if kind == "-" else 1
        elif not first:
            return total
        term = _parse_scalar_product(toks)
        total = total + term * Scalar(sign)
        first = False
        if toks.peek()[0] not in ("+", "-"):
            return total


def _parse_scalar_product(toks):
    out = _parse_scalar_factor(toks)
    while toks.peek()[0] in ("*", "/"):
        op = toks.next()[0]
        nxt = _parse_scalar_factor(toks)
        out = out * nxt if op == "*" else out / nxt
    return out
