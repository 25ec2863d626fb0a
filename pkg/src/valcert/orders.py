"""Monomial orders shared by the integer and rational polynomial layers.

A monomial is a tuple of nonnegative integer exponents aligned with a tuple
of variable names.  The default order everywhere is graded reverse
lexicographic with the variable tuple sorted lexicographically by name;
every serialized artifact records the order tag it was produced under.
"""

from __future__ import annotations

ORDER_NAMES = ("grevlex", "lex")


def grevlex_key(exps):
    """Sort key: larger key = larger monomial under grevlex."""
    return (sum(exps), tuple(-e for e in reversed(exps)))


def lex_key(exps):
    return tuple(exps)


def order_key(order):
    """Return the key function for an order tag.

    ``order`` may be "grevlex", "lex", or ("elim", k) which eliminates the
    *last* k variables of the tuple: monomials are compared first by their
    total degree in the trailing block, then grevlex on the full tuple.
    Elimination orders are internal (colon ideals, intersections) and are
    never written to artifacts.
    """
    if order == "grevlex":
        return grevlex_key
    if order == "lex":
        return lex_key
    if isinstance(order, tuple) and order[0] == "elim":
        k = order[1]

        def key(exps):
            block = exps[len(exps) - k:]
            return (sum(block), grevlex_key(block), grevlex_key(exps))

        return key
    raise ValueError(f"unknown monomial order {order!r}")


def monomial_mul(m1, m2):
    return tuple(a + b for a, b in zip(m1, m2))


def monomial_divides(m1, m2):
    """True when m1 divides m2 exponent-wise."""
    return all(a <= b for a, b in zip(m1, m2))


def monomial_div(m, d):
    """m / d, assuming divisibility."""
    return tuple(a - b for a, b in zip(m, d))


def monomial_lcm(m1, m2):
    return tuple(max(a, b) for a, b in zip(m1, m2))


def monomial_deg(m):
    return sum(m)
