"""Groebner bases with cofactor tracking, colon ideals, Rabinowitsch
localization, and the exact linear solver behind every certificate search.

Buchberger with the sugar selection strategy and full inter-reduction; no
F4/F5.  Every basis element carries cofactors over the original generators
so ideal-membership answers come with explicit witnesses.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

from .orders import (monomial_deg, monomial_div, monomial_divides,
                     monomial_lcm, monomial_mul, order_key)
from .qpoly import QPoly


@dataclass
class IdealGB:
    """Reduced Groebner basis with provenance.

    ``cofactors[i]`` expresses ``basis[i]`` as a combination of ``gens``;
    the identity is re-checked at construction time.
    """

    vars: tuple
    order: object
    gens: list
    basis: list
    cofactors: list

    def ring_consts(self):
        return QPoly.const(0, self.vars), QPoly.const(1, self.vars)

    def contains_one(self):
        return len(self.basis) == 1 and self.basis[0].is_constant() and not self.basis[0].is_zero()

    def key(self):
        return order_key(self.order)


def _divide(p, basis, key):
    """Full division: p = sum q_k * basis[k] + r with no r-monomial divisible
    by any basis leading monomial.  Returns (r, [q_k])."""
    quots = [QPoly.const(0, p.vars) for _ in basis]
    r = QPoly.const(0, p.vars)
    leads = [b.leading(key) for b in basis]
    while not p.is_zero():
        m, c = p.leading(key)
        for k, (mb, cb) in enumerate(leads):
            if monomial_divides(mb, m):
                t = QPoly(p.vars, {monomial_div(m, mb): c / cb})
                quots[k] = quots[k] + t
                p = p - t * basis[k]
                break
        else:
            t = QPoly(p.vars, {m: c})
            r = r + t
            p = p - t
    return r, quots


def groebner(gens, vars_=None, order="grevlex"):
    """Reduced Groebner basis of the given generators.

    Deterministic for fixed inputs; the cofactor identity of every basis
    element over the generators is verified before returning.
    """
    if vars_ is None:
        if not gens:
            raise ValueError("need vars_ when no generators are given")
        vars_ = gens[0].vars
    vars_ = tuple(vars_)
    key = order_key(order)
    orig = [g.extend(vars_) if g.vars != vars_ else g for g in gens]

    work = []          # list of (poly, cofvec)
    for i, g in enumerate(orig):
        if g.is_zero():
            continue
        cof = [QPoly.const(1 if j == i else 0, vars_) for j in range(len(orig))]
        work.append((g, cof))

    def reduce_tracked(p, cof, against):
        leads = [w[0].leading(key) for w in against]
        r = QPoly.const(0, vars_)
        rcof = list(cof)
        progress = True
        while not p.is_zero():
            m, c = p.leading(key)
            hit = None
            for k, (mb, cb) in enumerate(leads):
                if monomial_divides(mb, m):
                    hit = (k, QPoly(vars_, {monomial_div(m, mb): c / cb}))
                    break
            if hit is None:
                t = QPoly(vars_, {m: c})
                r = r + t
                p = p - t
            else:
                k, t = hit
                p = p - t * against[k][0]
                rcof = [rc - t * gc for rc, gc in zip(rcof, against[k][1])]
        # rcof now satisfies r = original p's combination minus reductions;
        # rebuild: r = sum(rcof * orig) requires rcof tracked from cof.
        return r, rcof

    # rcof bookkeeping above subtracts reducer cofactors from the cofactor
    # vector of p, so the invariant r = sum(rcof_i * orig_i) holds whenever
    # p = sum(cof_i * orig_i) did.

    pairs = []

    def sugar(entry):
        p, _ = entry
        return p.degree()

    def add_pairs(new_index):
        p, _ = work[new_index]
        mp, _c = p.leading(key)
        for j in range(new_index):
            q, _ = work[j]
            mq, _c2 = q.leading(key)
            if all(a == 0 or b == 0 for a, b in zip(mp, mq)):
                continue  # coprime leads: S-poly reduces to zero
            lcm = monomial_lcm(mp, mq)
            s = max(sugar(work[new_index]) + monomial_deg(monomial_div(lcm, mp)),
                    sugar(work[j]) + monomial_deg(monomial_div(lcm, mq)))
            pairs.append((s, monomial_deg(lcm), j, new_index))

    for i in range(len(work)):
        add_pairs(i)

    while pairs:
        pairs.sort()
        _s, _d, i, j = pairs.pop(0)
        p, pcof = work[i]
        q, qcof = work[j]
        mp, cp = p.leading(key)
        mq, cq = q.leading(key)
        lcm = monomial_lcm(mp, mq)
        tp = QPoly(vars_, {monomial_div(lcm, mp): Fraction(1) / cp})
        tq = QPoly(vars_, {monomial_div(lcm, mq): Fraction(1) / cq})
        spoly = tp * p - tq * q
        scof = [tp * a - tq * b for a, b in zip(pcof, qcof)]
        r, rcof = reduce_tracked(spoly, scof, work)
        if not r.is_zero():
            work.append((r, rcof))
            add_pairs(len(work) - 1)

    # Inter-reduce: minimal basis, then fully reduced tails, monic.
    work.sort(key=lambda w: order_key(order)(w[0].leading(key)[0]))
    minimal = []
    for p, cof in work:
        m, _ = p.leading(key)
        if any(monomial_divides(q.leading(key)[0], m) for q, _ in minimal):
            continue
        minimal.append((p, cof))
    reduced = []
    for idx, (p, cof) in enumerate(minimal):
        others = minimal[:idx] + minimal[idx + 1:]
        r, rcof = reduce_tracked(p, cof, others) if others else (p, cof)
        if r.is_zero():
            continue
        _m, c = r.leading(key)
        inv = Fraction(1) / c
        reduced.append((r.scale(inv), [a.scale(inv) for a in rcof]))
    reduced.sort(key=lambda w: order_key(order)(w[0].leading(key)[0]))

    basis = [p for p, _ in reduced]
    cofs = [c for _, c in reduced]
    for p, cof in zip(basis, cofs):
        acc = QPoly.const(0, vars_)
        for a, g in zip(cof, orig):
            acc = acc + a * g
        if acc != p:
            raise AssertionError("cofactor identity failed in groebner()")
    return IdealGB(vars_, order, orig, basis, cofs)


def normal_form(p, ideal, with_cofactors=False):
    """Unique remainder of p modulo the ideal; p is a member iff it is 0.

    With ``with_cofactors`` also return the combination over the *original*
    generators: p = NF(p) + sum(cof_i * gens_i).
    """
    if p.vars != ideal.vars:
        raise ValueError("ring mismatch in normal_form")
    r, quots = _divide(p, ideal.basis, ideal.key())
    if not with_cofactors:
        return r
    cof = [QPoly.const(0, ideal.vars) for _ in ideal.gens]
    for q, bc in zip(quots, ideal.cofactors):
        cof = [c + q * b for c, b in zip(cof, bc)]
    return r, cof


def member(p, ideal):
    return normal_form(p, ideal).is_zero()


def intersect(i1, i2):
    """Intersection of two ideals in the same ring (tag-variable trick)."""
    if i1.vars != i2.vars:
        raise ValueError("ring mismatch in intersect")
    tag = _fresh_name("t", i1.vars)
    ext = i1.vars + (tag,)
    t = QPoly.gen(tag, ext)
    one = QPoly.const(1, ext)
    gens = [t * g.extend(ext) for g in i1.gens]
    gens += [(one - t) * g.extend(ext) for g in i2.gens]
    gb = groebner(gens, ext, order=("elim", 1))
    out = [b.restrict(i1.vars) for b in gb.basis if b.degree_in(tag) == 0]
    return groebner(out, i1.vars, order=i1.order)


def colon_ideal(ideal, f):
    """The quotient ideal (I : f) = {h : h*f in I}."""
    if f.is_zero():
        raise ValueError("colon by zero")
    if f.vars != ideal.vars:
        raise ValueError("ring mismatch in colon_ideal")
    principal = groebner([f], ideal.vars, order=ideal.order)
    inter = intersect(ideal, principal)
    quots = []
    for g in inter.basis:
        q = g.exact_div(f)
        if q is None:
            raise AssertionError("intersection element not divisible in colon_ideal")
        quots.append(q)
    return groebner(quots, ideal.vars, order=ideal.order)


def colon_by_ideal(ideal, fs):
    """(I : <f_1..f_s>) as the intersection of the element colons."""
    fs = [f for f in fs if not f.is_zero()]
    if not fs:
        raise ValueError("colon by the zero ideal")
    result = colon_ideal(ideal, fs[0])
    for f in fs[1:]:
        result = intersect(result, colon_ideal(ideal, f))
    return result


def rabinowitsch_unit(p, ideal, with_data=False):
    """Is p invertible modulo the ideal, i.e. 1 in I + <1 - Z*p>?

    With ``with_data`` also return (ext_ideal, zname) for certificate
    extraction by back-substitution.
    """
    if p.vars != ideal.vars:
        raise ValueError("ring mismatch in rabinowitsch_unit")
    zname = _fresh_name("Z", ideal.vars)
    ext = tuple(ideal.vars) + (zname,)
    z = QPoly.gen(zname, ext)
    gens = [g.extend(ext) for g in ideal.gens]
    gens.append(QPoly.const(1, ext) - z * p.extend(ext))
    gb = groebner(gens, ext, order=ideal.order)
    ok = gb.contains_one()
    if with_data:
        return ok, gb, zname
    return ok


def _fresh_name(stem, used):
    if stem not in used:
        return stem
    k = 0
    while f"{stem}{k}" in used:
        k += 1
    return f"{stem}{k}"


# ---------------------------------------------------------------------------
# Exact linear algebra
# ---------------------------------------------------------------------------

def solve_rational(rows, rhs):
    """One exact solution of rows * x = rhs over Q, or None.

    Deterministic: reduced row echelon with pivots in column order, free
    variables set to zero (the lexicographically least solution in the
    fixed template basis).
    """
    m = [list(map(Fraction, r)) + [Fraction(v)] for r, v in zip(rows, rhs)]
    nrows = len(m)
    ncols = len(rows[0]) if rows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        piv = next((i for i in range(r, nrows) if m[i][c]), None)
        if piv is None:
            continue
        m[r], m[piv] = m[piv], m[r]
        inv = Fraction(1) / m[r][c]
        m[r] = [x * inv for x in m[r]]
        for i in range(nrows):
            if i != r and m[i][c]:
                f = m[i][c]
                m[i] = [a - f * b for a, b in zip(m[i], m[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    for i in range(r, nrows):
        if m[i][ncols]:
            return None
    x = [Fraction(0)] * ncols
    for i, c in enumerate(pivots):
        x[c] = m[i][ncols]
    return x


def solve_integer(rows, rhs):
    """One integer solution of rows * x = rhs, or None.

    Rational input rows are cleared to integers row by row; the system is
    then solved through a column-style Hermite reduction (unimodular column
    operations tracked so solutions map back).
    """
    A = []
    b = []
    for r, v in zip(rows, rhs):
        r = list(map(Fraction, r))
        v = Fraction(v)
        den = 1
        for x in r + [v]:
            den = den * x.denominator // _gcd(den, x.denominator)
        A.append([int(x * den) for x in r])
        b.append(int(v * den))
    ncols = len(rows[0]) if rows else 0
    nrows = len(A)
    U = [[1 if i == j else 0 for j in range(ncols)] for i in range(ncols)]

    def col_op_swap(c1, c2):
        for r in range(nrows):
            A[r][c1], A[r][c2] = A[r][c2], A[r][c1]
        U[c1], U[c2] = U[c2], U[c1]

    def col_op_add(dst, src, k):
        for r in range(nrows):
            A[r][dst] += k * A[r][src]
        for i in range(ncols):
            U[dst][i] += k * U[src][i]

    def col_op_neg(c):
        for r in range(nrows):
            A[r][c] = -A[r][c]
        U[c] = [-x for x in U[c]]

    row = 0
    pivcols = []
    lead = 0
    while row < nrows and lead < ncols:
        # find a nonzero entry in this row at or after `lead`
        nz = [c for c in range(lead, ncols) if A[row][c]]
        if not nz:
            row += 1
            continue
        # gcd out the row entries to the right of lead
        while len([c for c in range(lead, ncols) if A[row][c]]) > 1:
            nzc = sorted((abs(A[row][c]), c) for c in range(lead, ncols) if A[row][c])
            _, cmin = nzc[0]
            for _, c in nzc[1:]:
                q = A[row][c] // A[row][cmin]
                col_op_add(c, cmin, -q)
        c = next(c for c in range(lead, ncols) if A[row][c])
        if c != lead:
            col_op_swap(lead, c)
        if A[row][lead] < 0:
            col_op_neg(lead)
        pivcols.append((row, lead))
        lead += 1
        row += 1

    y = [0] * ncols
    resid = list(b)
    for r, c in pivcols:
        if resid[r] % A[r][c]:
            return None
        q = resid[r] // A[r][c]
        y[c] = q
        for i in range(nrows):
            resid[i] -= q * A[i][c]
    if any(resid):
        return None
    x = [sum(U[c][i] * y[c] for c in range(ncols)) for i in range(ncols)]
    # verify
    for r, v in zip(rows, rhs):
        acc = sum(Fraction(a) * xi for a, xi in zip(r, x))
        if acc != Fraction(v):
            return None
    return x


def _gcd(a, b):
    while b:
        a, b = b, a % b
    return abs(a) if a else abs(b)


def linear_certificate_solve(ideal, offset, templates, integer=False):
    """Coefficients lam with NF(offset + sum lam_i * t_i, I) = 0, or None.

    The solution is deterministic (lexicographically least in the template
    basis); with ``integer`` the coefficients are constrained to Z.
    """
    nf0 = normal_form(offset, ideal)
    nfs = [normal_form(t, ideal) for t in templates]
    monomials = set(nf0.terms)
    for f in nfs:
        monomials |= set(f.terms)
    monomials = sorted(monomials)
    rows = []
    rhs = []
    for m in monomials:
        rows.append([f.terms.get(m, Fraction(0)) for f in nfs])
        rhs.append(-nf0.terms.get(m, Fraction(0)))
    if not templates:
        return [] if nf0.is_zero() else None
    if not rows:
        return [Fraction(0)] * len(templates)
    solver = solve_integer if integer else solve_rational
    sol = solver(rows, rhs)
    if sol is None:
        return None
    return [Fraction(s) for s in sol]
