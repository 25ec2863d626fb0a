"""Sorts, signatures, terms, atoms, dynamical rules, and the polynomial
normal form that carries all equality reasoning for ring-backed theories.

Every ring term is normalized to a sparse integer-coefficient polynomial
(:class:`RingPoly`) over the named generators; two terms denote the same
polynomial exactly when they are equal in the free commutative ring.
Equality reasoning for ring sorts happens entirely through this normal
form; no generic equality axioms are generated for ring sorts.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .orders import grevlex_key, monomial_div, monomial_divides, monomial_mul

BOTTOM = "false"
TOP = "true"


class SortError(TypeError):
    """Arity or sort mismatch while building terms or atoms."""


# ---------------------------------------------------------------------------
# RingPoly: sparse multivariate polynomials over the integers
# ---------------------------------------------------------------------------

class RingPoly:
    """Immutable sparse polynomial with integer coefficients.

    ``vars`` is a sorted tuple of variable names; ``terms`` maps exponent
    tuples to nonzero integers.  The monomial order is graded reverse
    lexicographic over the sorted variable tuple.
    """

    __slots__ = ("vars", "terms", "_hash")

    def __init__(self, vars_, terms):
        self.vars = tuple(vars_)
        self.terms = {m: c for m, c in terms.items() if c}
        self._hash = None

    # -- constructors ------------------------------------------------------

    @staticmethod
    def const(n, vars_=()):
        vars_ = tuple(vars_)
        zero = (0,) * len(vars_)
        return RingPoly(vars_, {zero: int(n)} if n else {})

    @staticmethod
    def gen(name, vars_):
        vars_ = tuple(vars_)
        if name not in vars_:
            raise SortError(f"unknown generator {name!r}")
        m = tuple(1 if v == name else 0 for v in vars_)
        return RingPoly(vars_, {m: 1})

    # -- canonical structure -----------------------------------------------

    def is_zero(self):
        return not self.terms

    def is_constant(self):
        return all(sum(m) == 0 for m in self.terms)

    def constant_value(self):
        if not self.terms:
            return 0
        ((m, c),) = self.terms.items()
        if sum(m):
            raise ValueError("not a constant")
        return c

    def degree(self):
        """Total degree; -1 for the zero polynomial."""
        if not self.terms:
            return -1
        return max(sum(m) for m in self.terms)

    def leading(self):
        """(monomial, coefficient) for the grevlex-largest monomial."""
        m = max(self.terms, key=grevlex_key)
        return m, self.terms[m]

    def sort_key(self):
        """Total deterministic key: by degree, then term structure."""
        items = tuple(sorted(self.terms.items()))
        return (self.degree(), len(items), items)

    def extend(self, vars_):
        """Re-express over a variable superset (must stay sorted)."""
        vars_ = tuple(vars_)
        if vars_ == self.vars:
            return self
        pos = []
        for v in self.vars:
            if v not in vars_:
                raise SortError(f"variable {v!r} missing from target ring")
            pos.append(vars_.index(v))
        terms = {}
        for m, c in self.terms.items():
            mm = [0] * len(vars_)
            for p, e in zip(pos, m):
                mm[p] = e
            terms[tuple(mm)] = c
        return RingPoly(vars_, terms)

    def used_vars(self):
        used = set()
        for m in self.terms:
            for v, e in zip(self.vars, m):
                if e:
                    used.add(v)
        return used

    # -- arithmetic ----------------------------------------------------

    def _coerced(self, other):
        if isinstance(other, int):
            other = RingPoly.const(other, self.vars)
        if self.vars != other.vars:
            allv = tuple(sorted(set(self.vars) | set(other.vars)))
            return self.extend(allv), other.extend(allv)
        return self, other

    def __add__(self, other):
        a, b = self._coerced(other)
        terms = dict(a.terms)
        for m, c in b.terms.items():
            c2 = terms.get(m, 0) + c
            if c2:
                terms[m] = c2
            else:
                terms.pop(m, None)
        return RingPoly(a.vars, terms)

    __radd__ = __add__

    def __neg__(self):
        return RingPoly(self.vars, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        a, b = self._coerced(other)
        return a + (-b)

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        a, b = self._coerced(other)
        terms = {}
        for m1, c1 in a.terms.items():
            for m2, c2 in b.terms.items():
                m = monomial_mul(m1, m2)
                c = terms.get(m, 0) + c1 * c2
                if c:
                    terms[m] = c
                else:
                    terms.pop(m, None)
        return RingPoly(a.vars, terms)

    __rmul__ = __mul__

    def __pow__(self, n):
        if n < 0:
            raise ValueError("negative power")
        result = RingPoly.const(1, self.vars)
        base = self
        while n:
            if n & 1:
                result = result * base
            base = base * base
            n >>= 1
        return result

    def __eq__(self, other):
        if not isinstance(other, RingPoly):
            if isinstance(other, int):
                return self.is_constant() and (not self.terms and other == 0
                                               or self.terms and self.constant_value() == other)
            return NotImplemented
        a, b = self._coerced(other)
        return a.terms == b.terms

    def __hash__(self):
        if self._hash is None:
            used = tuple(sorted(self.used_vars()))
            trimmed = self if used == self.vars else _restrict(self, used)
            self._hash = hash((used, tuple(sorted(trimmed.terms.items()))))
        return self._hash

    def substitute(self, mapping):
        """Replace variables by polynomials; unmapped variables persist.

        The result lives over the union of the remaining variables and the
        variables of the substituted values.
        """
        target = set()
        for v in self.vars:
            if v in mapping:
                target |= set(mapping[v].vars)
            else:
                target.add(v)
        target = tuple(sorted(target))
        result = RingPoly.const(0, target)
        for m, c in self.terms.items():
            part = RingPoly.const(c, target)
            for v, e in zip(self.vars, m):
                if not e:
                    continue
                img = mapping[v].extend(target) if v in mapping else RingPoly.gen(v, target)
                part = part * img ** e
            result = result + part
        return result

    def exact_div(self, q):
        """Exact quotient self/q over the integers, or None."""
        if q.is_zero():
            return None
        p, q = self._coerced(q)
        quo = RingPoly.const(0, p.vars)
        mq, cq = q.leading()
        while not p.is_zero():
            mp, cp = p.leading()
            if not monomial_divides(mq, mp) or cp % cq:
                return None
            t = RingPoly(p.vars, {monomial_div(mp, mq): cp // cq})
            quo = quo + t
            p = p - t * q
        return quo

    # -- printing ------------------------------------------------------

    def __str__(self):
        return format_poly(self)

    def __repr__(self):
        return f"RingPoly({format_poly(self)})"


def _restrict(p, vars_):
    keep = [p.vars.index(v) for v in vars_]
    terms = {}
    for m, c in p.terms.items():
        terms[tuple(m[i] for i in keep)] = c
    return RingPoly(vars_, terms)


def format_poly(p):
    """Canonical text form: terms in descending grevlex order.

    Rational coefficients (from QPoly callers routed through here) print as
    p/q; powers use ^.  The zero polynomial prints as 0.
    """
    if not p.terms:
        return "0"
    parts = []
    for m in sorted(p.terms, key=grevlex_key, reverse=True):
        c = p.terms[m]
        factors = [f"{v}^{e}" if e > 1 else v
                   for v, e in zip(p.vars, m) if e]
        mono = "*".join(factors)
        if not mono:
            parts.append((c, str(abs_coeff(c))))
        elif abs_coeff(c) == 1:
            parts.append((c, mono))
        else:
            parts.append((c, f"{abs_coeff(c)}*{mono}"))
    out = ""
    for c, body in parts:
        sign = "-" if is_negative(c) else "+"
        out += f" {sign} {body}" if out else (f"-{body}" if sign == "-" else body)
    return out


def abs_coeff(c):
    return -c if is_negative(c) else c


def is_negative(c):
    return c < 0


# ---------------------------------------------------------------------------
# Ring term expressions and their normal form
# ---------------------------------------------------------------------------
#
# Terms are nested tuples: ("int", n), ("gen", name), ("var", name),
# ("add", t, t), ("sub", t, t), ("mul", t, t), ("neg", t), ("pow", t, n).
# Generators denote presentation constants; vars denote rule variables.
# Both normalize to polynomial variables; the distinction is bookkeeping for
# instantiation.

def normalize_term(term, vars_=None):
    """Unique polynomial normal form of a ring term.

    ``vars_``, when given, fixes the ambient variable tuple; otherwise the
    variables are the symbols occurring in the term.  Idempotent: a RingPoly
    passes through (possibly re-based).
    """
    if isinstance(term, RingPoly):
        return term.extend(vars_) if vars_ else term
    if vars_ is None:
        vars_ = tuple(sorted(term_symbols(term)))
    return _norm(term, tuple(vars_))


def _norm(t, vars_):
    tag = t[0]
    if tag == "int":
        return RingPoly.const(t[1], vars_)
    if tag in ("gen", "var"):
        return RingPoly.gen(t[1], vars_)
    if tag == "add":
        return _norm(t[1], vars_) + _norm(t[2], vars_)
    if tag == "sub":
        return _norm(t[1], vars_) - _norm(t[2], vars_)
    if tag == "mul":
        return _norm(t[1], vars_) * _norm(t[2], vars_)
    if tag == "neg":
        return -_norm(t[1], vars_)
    if tag == "pow":
        return _norm(t[1], vars_) ** t[2]
    raise SortError(f"not a ring term: {t!r}")


def term_symbols(t):
    tag = t[0]
    if tag == "int":
        return set()
    if tag in ("gen", "var"):
        return {t[1]}
    if tag == "pow":
        return term_symbols(t[1])
    return set().union(*(term_symbols(s) for s in t[1:]))


# -- tiny expression parser (shared by the DSL and the CLI) ----------------

_TOKEN = re.compile(r"\s*(\d+|[A-Za-z_][A-Za-z_0-9']*|\*\*|[-+*^()])")


def tokenize_expr(text):
    pos, out = 0, []
    while pos < len(text):
        if text[pos].isspace():
            pos += 1
            continue
        m = _TOKEN.match(text, pos)
        if not m:
            raise SyntaxError(f"bad character in expression: {text[pos:]!r}")
        out.append(m.group(1))
        pos = m.end()
    return out


def parse_ring_expr(text, var_names=()):
    """Parse +,-,*,^ expressions into a term AST.

    Identifiers in ``var_names`` become rule variables, all others
    generators.
    """
    toks = tokenize_expr(text)
    pos = 0

    def peek():
        return toks[pos] if pos < len(toks) else None

    def eat(tok=None):
        nonlocal pos
        if pos >= len(toks) or (tok and toks[pos] != tok):
            raise SyntaxError(f"expected {tok!r} in {text!r}")
        pos += 1
        return toks[pos - 1]

    def atom():
        t = peek()
        if t == "(":
            eat("(")
            e = expr()
            eat(")")
            return e
        if t == "-":
            eat("-")
            return ("neg", atom_pow())
        if t is None:
            raise SyntaxError(f"unexpected end of expression: {text!r}")
        eat()
        if t.isdigit():
            return ("int", int(t))
        return ("var", t) if t in var_names else ("gen", t)

    def atom_pow():
        base = atom()
        if peek() in ("^", "**"):
            eat()
            n = eat()
            if not n.isdigit():
                raise SyntaxError(f"integer exponent expected in {text!r}")
            return ("pow", base, int(n))
        return base

    def product():
        e = atom_pow()
        while peek() == "*":
            eat("*")
            e = ("mul", e, atom_pow())
        return e

    def expr():
        if peek() == "-":
            eat("-")
            e = ("neg", product())
        else:
            e = product()
        while peek() in ("+", "-"):
            op = eat()
            rhs = product()
            e = ("add", e, rhs) if op == "+" else ("sub", e, rhs)
        return e

    result = expr()
    if pos != len(toks):
        raise SyntaxError(f"trailing input in expression: {text!r}")
    return result


# ---------------------------------------------------------------------------
# Signatures, atoms, rules, presentations
# ---------------------------------------------------------------------------

RING_FUNCTIONS = (("0", (), "ring"), ("1", (), "ring"),
                  ("neg", ("ring",), "ring"),
                  ("add", ("ring", "ring"), "ring"),
                  ("mul", ("ring", "ring"), "ring"))


@dataclass(frozen=True)
class Signature:
    """Sorts, function symbols, and predicate symbols of a theory.

    The nullary predicates ``false`` and ``true`` are always present and
    need not be declared.  A ring-backed signature has the sort "ring" with
    the standard ring operations.
    """

    sorts: tuple = ("ring",)
    functions: tuple = RING_FUNCTIONS
    predicates: tuple = ()

    def __post_init__(self):
        names = [s for s in self.sorts]
        if len(set(names)) != len(names):
            raise SortError("duplicate sort names")
        fnames = [f[0] for f in self.functions]
        if len(set(fnames)) != len(fnames):
            raise SortError("duplicate function names")
        pnames = [p[0] for p in self.predicates]
        if len(set(pnames)) != len(pnames):
            raise SortError("duplicate predicate names")

    def is_ring_backed(self):
        return "ring" in self.sorts

    def predicate_arity(self, name):
        if name in (BOTTOM, TOP):
            return ()
        for p, args in self.predicates:
            if p == name:
                return args
        raise SortError(f"unknown predicate {name!r}")


@dataclass(frozen=True)
class Atom:
    """Predicate applied to normal-form arguments.

    Ring arguments are RingPoly; other sorts carry symbolic terms.  Equality
    is structural equality of the normal forms.
    """

    pred: str
    args: tuple = ()

    def substitute(self, mapping):
        return Atom(self.pred, tuple(
            a.substitute(mapping) if isinstance(a, RingPoly) else _sym_subst(a, mapping)
            for a in self.args))

    def __str__(self):
        if not self.args:
            return self.pred
        return f"{self.pred}({', '.join(map(str, self.args))})"


def _sym_subst(t, mapping):
    if isinstance(t, tuple) and t and t[0] == "var" and t[1] in mapping:
        return mapping[t[1]]
    if isinstance(t, tuple) and t and t[0] == "app":
        return ("app", t[1], tuple(_sym_subst(s, mapping) for s in t[2]))
    return t


def make_atom(signature, pred, args):
    """Sort-check and normalize an atom's arguments."""
    arity = signature.predicate_arity(pred)
    if len(args) != len(arity):
        raise SortError(f"predicate {pred!r} expects {len(arity)} arguments, got {len(args)}")
    norm = []
    for a, s in zip(args, arity):
        if s == "ring":
            norm.append(normalize_term(a) if not isinstance(a, RingPoly) else a)
        else:
            norm.append(a)
    return Atom(pred, tuple(norm))


@dataclass(frozen=True)
class DynamicalRule:
    """A deduction rule: premises entail a disjunction of branches.

    Each branch is (fresh variable tuple, atom tuple); an empty branch list
    encodes the conclusion "false".  Free and fresh variables carry sorts.
    """

    name: str
    free_vars: tuple = ()          # ((name, sort), ...)
    premises: tuple = ()           # (Atom, ...)
    branches: tuple = ()           # (((name, sort), ...), (Atom, ...))

    def __post_init__(self):
        free = {v for v, _ in self.free_vars}
        for fresh, _atoms in self.branches:
            fnames = [v for v, _ in fresh]
            if len(set(fnames)) != len(fnames) or free & set(fnames):
                raise SortError(f"fresh variables of rule {self.name!r} not disjoint")

    # -- taxonomy -----------------------------------------------------

    def classify(self):
        """One of direct / simplification / collapsus / disjunctive /
        existential, following the usual taxonomy of dynamical rules."""
        if not self.branches:
            return "collapsus"
        if any(fresh for fresh, _ in self.branches):
            return "existential"
        if len(self.branches) > 1:
            return "disjunctive"
        return "direct" if self._is_direct() else "simplification"

    def _is_direct(self):
        seen = set()
        for atom in self.premises:
            for a in atom.args:
                if isinstance(a, RingPoly):
                    if not (len(a.terms) == 1 and set(a.terms.values()) == {1}
                            and sum(next(iter(a.terms))) == 1):
                        return False
                    (v,) = a.used_vars()
                elif isinstance(a, tuple) and a[0] == "var":
                    v = a[1]
                else:
                    return False
                if v in seen:
                    return False
                seen.add(v)
        return True

    def is_horn(self):
        return self.classify() in ("direct", "simplification")

    def instantiate(self, assignment):
        """Ground the rule: substitute free variables, normalize atoms.

        Branch fresh variables remain symbolic.  Raises on uncovered
        variables so a partially applied rule is never mistaken for ground.
        """
        missing = [v for v, _ in self.free_vars if v not in assignment]
        if missing:
            raise SortError(f"unassigned variables {missing} in rule {self.name!r}")
        prem = tuple(a.substitute(assignment) for a in self.premises)
        branches = tuple((fresh, tuple(a.substitute(assignment) for a in atoms))
                         for fresh, atoms in self.branches)
        return DynamicalRule(self.name, (), prem, branches)

    def __str__(self):
        lhs = ", ".join(map(str, self.premises))
        if not self.branches:
            rhs = BOTTOM
        else:
            parts = []
            for fresh, atoms in self.branches:
                body = ", ".join(map(str, atoms)) or TOP
                if fresh:
                    names = ",".join(v for v, _ in fresh)
                    parts.append(f"exists {names} ({body})")
                else:
                    parts.append(body)
            rhs = " or ".join(parts)
        return f"{self.name}: {lhs} |- {rhs}".replace(":  |-", ": |-")


def instantiate(rule, assignment):
    """Module-level alias for :meth:`DynamicalRule.instantiate`."""
    return rule.instantiate(assignment)


@dataclass(frozen=True)
class Presentation:
    """Generators and closed relations over a theory (a positive diagram)."""

    theory: object                 # theories.Theory
    generators: tuple = ()         # ((name, sort), ...)
    relations: tuple = ()          # closed Atoms
    name: str = "anonymous"

    def ring_generators(self):
        return tuple(n for n, s in self.generators if s == "ring")

    def __post_init__(self):
        gens = self.ring_generators()
        for rel in self.relations:
            for a in rel.args:
                if isinstance(a, RingPoly) and not a.used_vars() <= set(gens):
                    raise SortError(f"relation {rel} is not closed over the generators")


# ---------------------------------------------------------------------------
# Candidate pool
# ---------------------------------------------------------------------------
#
# The instantiation pool makes the rule "substitute arbitrary terms" finite.
# Closure policy (a documented artifact convention, not paper content):
#   seeds     0, 1, generators, presentation relation arguments, goal atom
#             arguments (kept regardless of degree);
#   divisors  every positive divisor of every integer constant seed;
#   sums      one round of pairwise sums of distinct nonconstant seeds,
#             within the degree bound;
#   products  closure under products of nonconstant elements, degree-
#             stratified up to the bound;
#   signs     the negation of every element.
# The list is deduplicated by normal form and sorted by (degree, canonical
# key, sign), positive representative first; the size cap truncates the
# sorted, degree-stratified stream, so pools are monotone in both bounds.

POOL_SIZE_DEFAULT = 400


def candidate_pool(presentation, goal, degree, size_cap=POOL_SIZE_DEFAULT,
                   extra=()):
    if degree < 0 or size_cap <= 0:
        raise ValueError("pool budget must be positive")
    seeds = [RingPoly.const(0), RingPoly.const(1)]
    for g in presentation.ring_generators():
        seeds.append(RingPoly.gen(g, (g,)))
    for rel in presentation.relations:
        seeds.extend(a for a in rel.args if isinstance(a, RingPoly))
    if goal is not None:
        atoms = list(goal.premises)
        for _fresh, batoms in goal.branches:
            atoms.extend(batoms)
        for atom in atoms:
            seeds.extend(a for a in atom.args if isinstance(a, RingPoly))
    seeds.extend(extra)

    reps = _dedupe_positive(seeds)
    for p in list(reps):
        if p.is_constant() and abs(p.constant_value()) > 1:
            for d in _divisors(abs(p.constant_value())):
                _add_positive(reps, RingPoly.const(d))

    nonconst = [p for p in reps if not p.is_constant()]
    for i, p in enumerate(nonconst):
        for q in nonconst[i + 1:]:
            s = p + q
            if 0 <= s.degree() <= degree:
                _add_positive(reps, s)

    for d in range(2, degree + 1):
        while True:
            fresh_elems = []
            current = sorted(reps, key=lambda p: p.sort_key())
            for i, p in enumerate(current):
                if p.is_constant() or p.degree() > d:
                    continue
                for q in current[i:]:
                    if q.is_constant():
                        continue
                    if p.degree() + q.degree() == d:
                        fresh_elems.append(p * q)
            added = False
            for f in sorted(fresh_elems, key=lambda p: p.sort_key()):
                if len(reps) >= size_cap:
                    break
                added |= _add_positive(reps, f)
            if not added or len(reps) >= size_cap:
                break

    ordered = sorted(reps, key=lambda p: p.sort_key())[:size_cap]
    pool = []
    for p in ordered:
        pool.append(p)
        if not p.is_zero():
            pool.append(-p)
    return pool


def _positive_rep(p):
    if p.is_zero():
        return p
    _, c = p.leading()
    return -p if c < 0 else p


def _dedupe_positive(polys):
    out = []
    for p in polys:
        _add_positive(out, p)
    return out


def _add_positive(reps, p):
    r = _positive_rep(p)
    if r in reps:
        return False
    reps.append(r)
    return True


def _divisors(n):
    out = set()
    d = 1
    while d * d <= n:
        if n % d == 0:
            out |= {d, n // d}
        d += 1
    return sorted(out)


# QPoly interop (polyalgebra works over the rationals) ----------------------

def to_rational_coeffs(p):
    """RingPoly -> {monomial: Fraction} over the same variable tuple."""
    return {m: Fraction(c) for m, c in p.terms.items()}
