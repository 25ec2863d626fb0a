"""Exact multivariate polynomial arithmetic over the rationals.

QPoly is the substrate for Groebner bases and every certificate search.
Instances are immutable; all arithmetic is exact (fractions.Fraction).
"""

from __future__ import annotations

from fractions import Fraction

from .orders import (grevlex_key, monomial_div, monomial_divides,
                     monomial_mul, order_key)
from .terms import RingPoly, parse_ring_expr, term_symbols


class QPoly:
    """Sparse polynomial over Q with a fixed ambient variable tuple.

    Unlike RingPoly the ambient variables are part of the identity of the
    ring; mixing ambients raises rather than silently extending.
    """

    __slots__ = ("vars", "terms", "_hash")

    def __init__(self, vars_, terms):
        self.vars = tuple(vars_)
        self.terms = {m: Fraction(c) for m, c in terms.items() if c}
        self._hash = None

    @staticmethod
    def const(c, vars_):
        vars_ = tuple(vars_)
        zero = (0,) * len(vars_)
        return QPoly(vars_, {zero: Fraction(c)} if c else {})

    @staticmethod
    def gen(name, vars_):
        vars_ = tuple(vars_)
        m = tuple(1 if v == name else 0 for v in vars_)
        if sum(m) != 1:
            raise ValueError(f"unknown variable {name!r} in {vars_}")
        return QPoly(vars_, {m: Fraction(1)})

    @staticmethod
    def from_ringpoly(p, vars_=None):
        vars_ = tuple(vars_) if vars_ is not None else p.vars
        q = p.extend(vars_) if set(p.vars) <= set(vars_) else p
        if q.vars != tuple(vars_):
            raise ValueError("variable mismatch embedding RingPoly")
        return QPoly(vars_, q.terms)

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return all(sum(m) == 0 for m in self.terms)

    def constant_value(self):
        if not self.terms:
            return Fraction(0)
        ((m, c),) = self.terms.items()
        if sum(m):
            raise ValueError("not a constant")
        return c

    def degree(self):
        if not self.terms:
            return -1
        return max(sum(m) for m in self.terms)

    def degree_in(self, var):
        i = self.vars.index(var)
        return max((m[i] for m in self.terms), default=0)

    def _check(self, other):
        if isinstance(other, (int, Fraction)):
            other = QPoly.const(other, self.vars)
        if self.vars != other.vars:
            raise ValueError(f"ring mismatch: {self.vars} vs {other.vars}")
        return other

    def __add__(self, other):
        other = self._check(other)
        terms = dict(self.terms)
        for m, c in other.terms.items():
            c2 = terms.get(m, 0) + c
            if c2:
                terms[m] = c2
            else:
                terms.pop(m, None)
        return QPoly(self.vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return QPoly(self.vars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        other = self._check(other)
        terms = {}
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                m = monomial_mul(m1, m2)
                c = terms.get(m, 0) + c1 * c2
                if c:
                    terms[m] = c
                else:
                    terms.pop(m, None)
        return QPoly(self.vars, terms)

    __rmul__ = __mul__

    def __pow__(self, n):
        result = QPoly.const(1, self.vars)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def scale(self, c):
        c = Fraction(c)
        return QPoly(self.vars, {m: c * v for m, v in self.terms.items()})

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            return (self - other).is_zero()
        if not isinstance(other, QPoly):
            return NotImplemented
        return self.vars == other.vars and self.terms == other.terms

    def __hash__(self):
        if self._hash is None:
            self._hash = hash((self.vars, tuple(sorted(self.terms.items()))))
        return self._hash

    def leading(self, key=grevlex_key):
        m = max(self.terms, key=key)
        return m, self.terms[m]

    def monic(self, key=grevlex_key):
        if self.is_zero():
            return self
        _, c = self.leading(key)
        return self.scale(Fraction(1, 1) / c)

    def sort_key(self):
        return (self.degree(), len(self.terms), tuple(sorted(self.terms.items())))

    def extend(self, vars_):
        """Re-express over a variable superset (order-preserving injection)."""
        vars_ = tuple(vars_)
        pos = [vars_.index(v) for v in self.vars]
        terms = {}
        for m, c in self.terms.items():
            mm = [0] * len(vars_)
            for p, e in zip(pos, m):
                mm[p] = e
            terms[tuple(mm)] = c
        return QPoly(vars_, terms)

    def restrict(self, vars_):
        """Drop unused variables (raises if any dropped variable occurs)."""
        vars_ = tuple(vars_)
        keep = [self.vars.index(v) for v in vars_]
        drop = [i for i, v in enumerate(self.vars) if v not in vars_]
        terms = {}
        for m, c in self.terms.items():
            if any(m[i] for i in drop):
                raise ValueError("polynomial uses a dropped variable")
            terms[tuple(m[i] for i in keep)] = c
        return QPoly(vars_, terms)

    def substitute(self, mapping):
        """Replace variables by QPolys over the same ambient ring."""
        result = QPoly.const(0, self.vars)
        for m, c in self.terms.items():
            part = QPoly.const(c, self.vars)
            for v, e in zip(self.vars, m):
                if not e:
                    continue
                img = mapping.get(v)
                part = part * (img if img is not None else QPoly.gen(v, self.vars)) ** e
            result = result + part
        return result

    def exact_div(self, q, key=grevlex_key):
        """Exact quotient self/q, or None when q does not divide."""
        q = self._check(q)
        if q.is_zero():
            return None
        quo = QPoly.const(0, self.vars)
        p = self
        mq, cq = q.leading(key)
        while not p.is_zero():
            mp, cp = p.leading(key)
            if not monomial_divides(mq, mp):
                return None
            t = QPoly(self.vars, {monomial_div(mp, mq): cp / cq})
            quo = quo + t
            p = p - t * q
        return quo

    def __str__(self):
        return format_qpoly(self)

    def __repr__(self):
        return f"QPoly({format_qpoly(self)})"


# ---------------------------------------------------------------------------
# Canonical text form: sparse coef*x1^e1*... term lists
# ---------------------------------------------------------------------------

def format_qpoly(p, order="grevlex"):
    if not p.terms:
        return "0"
    key = order_key(order)
    parts = []
    for m in sorted(p.terms, key=key, reverse=True):
        c = p.terms[m]
        mono = "*".join(f"{v}^{e}" if e > 1 else v
                        for v, e in zip(p.vars, m) if e)
        mag = abs(c)
        if not mono:
            body = str(mag)
        elif mag == 1:
            body = mono
        else:
            body = f"{mag}*{mono}"
        parts.append((c < 0, body))
    out = ""
    for neg, body in parts:
        if out:
            out += f" - {body}" if neg else f" + {body}"
        else:
            out = f"-{body}" if neg else body
    return out


def parse_qpoly(text, vars_):
    """Parse the canonical form back (also accepts ^ or ** and parentheses).

    Rational coefficients are written p/q; this routes through the shared
    expression parser with / handled by splitting each fraction token.
    """
    text = text.strip()
    # normalize "p/q" into "(p)*inv on the fly: rewrite a/b as a * 1/b is
    # not expressible, so parse fractions directly term by term.
    return _parse_q(text, tuple(vars_))


def _parse_q(text, vars_):
    # Accept full +,-,*,^,( ) expressions where numeric literals may be
    # fractions "p/q".  Implemented by temporarily substituting fraction
    # literals, then evaluating the integer-coefficient AST over Q.
    frac_map = {}

    def stash(match):
        token = f"__frac{len(frac_map)}__"
        frac_map[token] = Fraction(int(match.group(1)), int(match.group(2)))
        return token

    import re as _re
    stashed = _re.sub(r"(\d+)\s*/\s*(\d+)", stash, text)
    ast = parse_ring_expr(stashed, var_names=())
    symbols = term_symbols(ast)
    unknown = {s for s in symbols if s not in vars_ and s not in frac_map}
    if unknown:
        raise ValueError(f"unknown variables {sorted(unknown)} in polynomial {text!r}")

    def ev(t):
        tag = t[0]
        if tag == "int":
            return QPoly.const(t[1], vars_)
        if tag in ("gen", "var"):
            if t[1] in frac_map:
                return QPoly.const(frac_map[t[1]], vars_)
            return QPoly.gen(t[1], vars_)
        if tag == "add":
            return ev(t[1]) + ev(t[2])
        if tag == "sub":
            return ev(t[1]) - ev(t[2])
        if tag == "mul":
            return ev(t[1]) * ev(t[2])
        if tag == "neg":
            return -ev(t[1])
        if tag == "pow":
            return ev(t[1]) ** t[2]
        raise ValueError(f"bad node {t!r}")

    return ev(ast)


def ringpoly_to_q(p, vars_):
    """Embed an integer polynomial into Q[vars_]."""
    return QPoly.from_ringpoly(p.extend(tuple(vars_)))
