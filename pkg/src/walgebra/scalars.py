"""Exact arithmetic over the rational function field Q(k).

A Scalar is a quotient num/den of polynomials in one formal variable k
with rational coefficients, kept in canonical form: gcd(num, den) = 1,
den monic.  Construction is the single normalization point, so equality
and hashing are equality of normal forms.

Nonconstant denominators are audited against a registry of allowed pole
factors: den must divide a product of powers of registered polynomials
(checked by repeated exact division, never by factoring).  Code that
legitimately inverts a new polynomial has to register it first.
"""

from __future__ import annotations

from fractions import Fraction

Rational = Fraction

__all__ = [
    "Rational",
    "Scalar",
    "ZeroDenominator",
    "UnregisteredPole",
    "PoleAtEvaluationPoint",
    "scalar_normalize",
    "scalar_eval",
    "register_pole_factor",
    "registered_pole_factors",
    "clear_pole_factors",
    "ZERO",
    "ONE",
    "K",
]


class ZeroDenominator(ArithmeticError):
    """Denominator is the zero polynomial."""


class UnregisteredPole(ArithmeticError):
    """Denominator has a factor outside the registered multiplicative set."""


class PoleAtEvaluationPoint(ArithmeticError):
    """Evaluation point is a root of the denominator."""


# ---------------------------------------------------------------------------
# Dense univariate polynomials over Fraction: tuples, low degree first,
# no trailing zeros, () is the zero polynomial.

def _trim(cs):
    n = len(cs)
    while n and cs[n - 1] == 0:
        n -= 1
    return tuple(cs[:n])


def _padd(a, b):
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, c in enumerate(b):
        out[i] += c
    return _trim(out)


def _pneg(a):
    return tuple(-c for c in a)


def _pmul(a, b):
    if not a or not b:
        return ()
    out = [Fraction(0)] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if x:
            for j, y in enumerate(b):
                out[i + j] += x * y
    return _trim(out)


def _pdivmod(a, b):
    if not b:
        raise ZeroDenominator("division by the zero polynomial")
    q = [Fraction(0)] * max(len(a) - len(b) + 1, 0)
    r = list(a)
    inv = 1 / b[-1]
    while len(r) >= len(b) and any(r):
        r = _trim(r)
        if len(r) < len(b):
            break
        c = r[-1] * inv
        d = len(r) - len(b)
        q[d] = c
        r = list(r)
        for i, y in enumerate(b):
            r[d + i] -= c * y
        r.pop()
    return _trim(q), _trim(r)


def _pgcd(a, b):
    while b:
        a, b = b, _pdivmod(a, b)[1]
    if a:
        inv = 1 / a[-1]
        a = tuple(c * inv for c in a)
    return a


def _peval(a, x):
    acc = Fraction(0)
    for c in reversed(a):
        acc = acc * x + c
    return acc


def _pconst(c):
    c = Fraction(c)
    return (c,) if c else ()


def _pstr(a):
    if not a:
        return "0"
    parts = []
    for d in range(len(a) - 1, -1, -1):
        c = a[d]
        if not c:
            continue
        if d == 0:
            term = str(c)
        else:
            kpow = "k" if d == 1 else f"k^{d}"
            if c == 1:
                term = kpow
            elif c == -1:
                term = "-" + kpow
            else:
                term = f"{c}*{kpow}"
        parts.append(term)
    s = parts[0]
    for term in parts[1:]:
        s += " - " + term[1:] if term.startswith("-") else " + " + term
    return s


# ---------------------------------------------------------------------------
# Pole-factor registry.  Factors are stored as monic polynomial tuples.

_pole_factors: list[tuple] = []


def register_pole_factor(s) -> None:
    """Allow future denominators to carry powers of this polynomial."""
    if isinstance(s, str):
        s = Scalar.parse(s)
    s = Scalar(s)
    if not s.den == (Fraction(1),):
        raise ValueError("pole factor must be a polynomial")
    p = s.num
    if len(p) < 2:
        raise ValueError("pole factor must be nonconstant")
    inv = 1 / p[-1]
    p = tuple(c * inv for c in p)
    if p not in _pole_factors:
        _pole_factors.append(p)


def registered_pole_factors():
    return [Scalar._raw(p, (Fraction(1),)) for p in _pole_factors]


def clear_pole_factors() -> None:
    del _pole_factors[:]


def _audit_den(den):
    """den (monic, reduced) must divide a product of registered factors."""
    if len(den) < 2:
        return
    rem = den
    progress = True
    while len(rem) >= 2 and progress:
        progress = False
        for p in _pole_factors:
            q, r = _pdivmod(rem, p)
            if not r and q:
                rem = q
                progress = True
    if len(rem) >= 2:
        raise UnregisteredPole(f"denominator factor not registered: {_pstr(rem)}")


# ---------------------------------------------------------------------------

class Scalar:
    """Element of Q(k) in reduced form with a monic denominator."""

    __slots__ = ("num", "den")

    def __init__(self, value=0):
        if isinstance(value, Scalar):
            num, den = value.num, value.den
        elif isinstance(value, (int, Fraction)):
            num, den = _pconst(value), (Fraction(1),)
        else:
            raise TypeError(f"cannot build Scalar from {type(value).__name__}")
        object.__setattr__(self, "num", num)
        object.__setattr__(self, "den", den)

    @classmethod
    def _raw(cls, num, den):
        s = object.__new__(cls)
        object.__setattr__(s, "num", num)
        object.__setattr__(s, "den", den)
        return s

    @classmethod
    def from_polys(cls, num, den):
        """Build and normalize from coefficient sequences (low degree first)."""
        num = _trim([Fraction(c) for c in num])
        den = _trim([Fraction(c) for c in den])
        return _normalize(num, den)

    @classmethod
    def gen(cls):
        """The formal variable k."""
        return cls._raw((Fraction(0), Fraction(1)), (Fraction(1),))

    def __setattr__(self, *a):
        raise AttributeError("Scalar is immutable")

    # -- arithmetic --------------------------------------------------------

    def _coerce(self, other):
        if isinstance(other, Scalar):
            return other
        if isinstance(other, (int, Fraction)):
            return Scalar(other)
        return None

    def __add__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        num = _padd(_pmul(self.num, o.den), _pmul(o.num, self.den))
        return _normalize(num, _pmul(self.den, o.den))

    __radd__ = __add__

    def __neg__(self):
        return Scalar._raw(_pneg(self.num), self.den)

    def __sub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self + (-o)

    def __rsub__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o + (-self)

    def __mul__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return _normalize(_pmul(self.num, o.num), _pmul(self.den, o.den))

    __rmul__ = __mul__

    def __truediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        if not o.num:
            raise ZeroDivisionError("division by zero Scalar")
        return _normalize(_pmul(self.num, o.den), _pmul(self.den, o.num))

    def __rtruediv__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return o / self

    def __pow__(self, n):
        if not isinstance(n, int) or n < 0:
            raise ValueError("Scalar powers must be nonnegative integers")
        out = ONE
        base = self
        while n:
            if n & 1:
                out = out * base
            base = base * base
            n >>= 1
        return out

    # -- predicates and conversions ----------------------------------------

    def is_zero(self):
        return not self.num

    def is_constant(self):
        return len(self.num) <= 1 and len(self.den) == 1

    def as_rational(self):
        """This Scalar as a Rational; raises if it genuinely involves k."""
        if not self.is_constant():
            raise ValueError(f"not a constant: {self}")
        return self.num[0] / self.den[0] if self.num else Fraction(0)

    def __bool__(self):
        return bool(self.num)

    def __eq__(self, other):
        o = self._coerce(other)
        if o is None:
            return NotImplemented
        return self.num == o.num and self.den == o.den

    def __hash__(self):
        if self.is_constant():
            return hash(self.num[0] if self.num else Fraction(0))
        return hash((self.num, self.den))

    def __str__(self):
        if self.den == (Fraction(1),):
            return _pstr(self.num)
        ns = _pstr(self.num)
        if len(self.num) > 1:
            ns = f"({ns})"
        ds = _pstr(self.den)
        if len(self.den) > 1:
            ds = f"({ds})"
        return f"{ns}/{ds}"

    def __repr__(self):
        return f"Scalar({self})"

    # -- parsing ------------------------------------------------------------

    @classmethod
    def parse(cls, text: str) -> "Scalar":
        return _parse_scalar(text)


def _normalize(num, den):
    if not den:
        raise ZeroDenominator("zero denominator")
    if not num:
        return Scalar._raw((), (Fraction(1),))
    g = _pgcd(num, den)
    if len(g) > 1:
        num = _pdivmod(num, g)[0]
        den = _pdivmod(den, g)[0]
    lead = den[-1]
    if lead != 1:
        inv = 1 / lead
        num = tuple(c * inv for c in num)
        den = tuple(c * inv for c in den)
    _audit_den(den)
    return Scalar._raw(num, den)


def scalar_normalize(s: Scalar) -> Scalar:
    """Re-normalize (idempotent); re-runs the pole-factor audit."""
    return _normalize(s.num, s.den)


def scalar_eval(s: Scalar, k0) -> Rational:
    """Exact evaluation at k = k0."""
    k0 = Fraction(k0)
    d = _peval(s.den, k0)
    if d == 0:
        raise PoleAtEvaluationPoint(f"denominator of {s} vanishes at k = {k0}")
    return _peval(s.num, k0) / d


ZERO = Scalar(0)
ONE = Scalar(1)
K = Scalar.gen()


# ---------------------------------------------------------------------------
# Parser for the textual form: integer/fraction literals, k, + - * / ^ ( ).

def _tokenize(text):
    toks = []
    i, n = 0, len(text)
    while i < n:
        c = text[i]
        if c.isspace():
            i += 1
        elif c.isdigit():
            j = i
            while j < n and text[j].isdigit():
                j += 1
            toks.append(("num", int(text[i:j])))
            i = j
        elif c == "k":
            toks.append(("k", None))
            i += 1
        elif c in "+-*/^()":
            toks.append((c, None))
            i += 1
        else:
            raise ValueError(f"bad character {c!r} in scalar: {text!r}")
    toks.append(("end", None))
    return toks


class _ScalarParser:
    def __init__(self, toks):
        self.toks = toks
        self.pos = 0

    def peek(self):
        return self.toks[self.pos][0]

    def next(self):
        t = self.toks[self.pos]
        self.pos += 1
        return t

    def expr(self):
        s = self.term()
        while self.peek() in "+-":
            op = self.next()[0]
            t = self.term()
            s = s + t if op == "+" else s - t
        return s

    def term(self):
        s = self.factor()
        while self.peek() in "*/":
            op = self.next()[0]
            t = self.factor()
            s = s * t if op == "*" else s / t
        return s

    def factor(self):
        if self.peek() == "-":
            self.next()
            return -self.factor()
        if self.peek() == "+":
            self.next()
            return self.factor()
        return self.power()

    def power(self):
        base = self.atom()
        if self.peek() == "^":
            self.next()
            neg = False
            if self.peek() == "-":
                self.next()
                neg = True
            kind, val = self.next()
            if kind != "num":
                raise ValueError("exponent must be an integer literal")
            if neg:
                return ONE / base ** val
            return base ** val
        return base

    def atom(self):
        kind, val = self.next()
        if kind == "num":
            return Scalar(val)
        if kind == "k":
            return K
        if kind == "(":
            s = self.expr()
            if self.next()[0] != ")":
                raise ValueError("unbalanced parentheses in scalar")
            return s
        raise ValueError(f"unexpected token {kind!r} in scalar")


def _parse_scalar(text):
    p = _ScalarParser(_tokenize(text))
    s = p.expr()
    if p.peek() != "end":
        raise ValueError(f"trailing input in scalar: {text!r}")
    return s
