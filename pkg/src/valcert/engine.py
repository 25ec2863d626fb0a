"""Forward-chaining proof search for dynamical rules.

Saturation under Horn rules, case splitting on disjunctive axioms, fresh
constants for existential axioms, collapse detection.  Proofs are emitted
as trees that an independent replay checker accepts; the checker shares no
search machinery with the prover.

Instantiation policy (documented artifact conventions):

* premise variables are bound fact-directed: a premise argument that is a
  plain variable binds to the fact argument, an argument linear in its one
  unbound variable is solved by exact division, anything else falls back to
  enumerating the candidate pool;
* conclusion-only variables (multipliers such as c in ``a|b |- a*c|b*c``)
  range over the multiplier pool: 0, +-1, the generators, and the
  presentation/goal atom arguments, with sign variants;
* a derived atom is kept only while its argument degree stays within
  max(budget degree, largest seed argument degree);
* each fact carries a multiplication depth (seeds 0, multiplier rules add
  one, joins take the maximum); multiplier rules only fire on facts below
  the budget degree bound, which keeps saturation finite without a pool
  closure at full proof degree.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field, replace

from .terms import (BOTTOM, TOP, Atom, DynamicalRule, Presentation, RingPoly,
                    SortError, candidate_pool, normalize_term)


@dataclass(frozen=True)
class SearchBudget:
    """Bounds making proof search total; exceeding any of them yields
    Unknown, never a wrong answer."""

    fresh: int = 4
    apps: int = 5000
    degree: int = 3
    depth: int = 6
    pool_size: int = 400

    @staticmethod
    def from_dict(d):
        known = {k: v for k, v in d.items()
                 if k in ("fresh", "apps", "degree", "depth", "pool_size")}
        return SearchBudget(**known)


class FactBase:
    """Set of closed atoms in normal form, with collapse bookkeeping."""

    __slots__ = ("atoms", "by_pred", "collapsed", "fresh_count", "mult_depth")

    def __init__(self):
        self.atoms = {}            # Atom -> step index that produced it (-1 seed)
        self.by_pred = {}
        self.collapsed = False
        self.fresh_count = 0
        self.mult_depth = {}       # Atom -> int

    def copy(self):
        fb = FactBase.__new__(FactBase)
        fb.atoms = dict(self.atoms)
        fb.by_pred = {k: list(v) for k, v in self.by_pred.items()}
        fb.collapsed = self.collapsed
        fb.fresh_count = self.fresh_count
        fb.mult_depth = dict(self.mult_depth)
        return fb

    def add(self, atom, step=-1, depth=0):
        if atom.pred == TOP:
            return False
        if atom.pred == BOTTOM:
            if self.collapsed:
                return False
            self.collapsed = True
            self.atoms.setdefault(atom, step)
            return True
        if atom in self.atoms:
            if depth < self.mult_depth.get(atom, 0):
                self.mult_depth[atom] = depth
            return False
        self.atoms[atom] = step
        self.by_pred.setdefault(atom.pred, []).append(atom)
        self.mult_depth[atom] = depth
        return True

    def has(self, atom):
        if self.collapsed or atom.pred == TOP:
            return True
        return atom in self.atoms

    def facts_of(self, pred):
        return self.by_pred.get(pred, ())

    def __len__(self):
        return len(self.atoms)


# ---------------------------------------------------------------------------
# Premise matching
# ---------------------------------------------------------------------------

def _arg_vars(poly, free):
    return poly.used_vars() & free if isinstance(poly, RingPoly) else set()


def _is_plain_var(poly, free):
    if not isinstance(poly, RingPoly) or len(poly.terms) != 1:
        return None
    ((m, c),) = poly.terms.items()
    if c != 1 or sum(m) != 1:
        return None
    (v,) = poly.used_vars()
    return v if v in free else None


def _linear_split(poly, var):
    """poly = q*var + r with q, r free of var, or None if not linear."""
    i = poly.vars.index(var)
    q_terms, r_terms = {}, {}
    for m, c in poly.terms.items():
        if m[i] == 0:
            r_terms[m] = c
        elif m[i] == 1:
            q_terms[m[:i] + (0,) + m[i + 1:]] = c
        else:
            return None
    return RingPoly(poly.vars, q_terms), RingPoly(poly.vars, r_terms)


def _eval(poly, assignment):
    return poly.substitute(assignment)


def _match_arg(poly, value, assignment, free):
    """Try to extend assignment so that poly instantiates to value.

    Returns a list of extended assignments (possibly empty).  'defer'
    signals that pool enumeration is needed for this argument.
    """
    unbound = sorted(v for v in _arg_vars(poly, free) if v not in assignment)
    if not unbound:
        return [assignment] if _eval(poly, assignment) == value else []
    v = _is_plain_var(poly, free)
    if v is not None:
        new = dict(assignment)
        new[v] = value
        return [new]
    if len(unbound) == 1:
        u = unbound[0]
        split = _linear_split(poly, u)
        if split is not None:
            q, r = split
            qv = _eval(q, assignment)
            rv = _eval(r, assignment)
            if qv.is_zero():
                return [assignment] if rv == value else []
            quot = (value - rv).exact_div(qv)
            if quot is None:
                return []
            new = dict(assignment)
            new[u] = quot
            return [new]
    return "defer"


def _match_premises(premises, facts, pool, free, assignment=None):
    """Yield assignments under which every premise is a present fact."""
    assignment = assignment or {}
    if not premises:
        yield assignment
        return
    atom, rest = premises[0], premises[1:]
    if atom.pred == TOP:
        yield from _match_premises(rest, facts, pool, free, assignment)
        return
    for fact in list(facts.facts_of(atom.pred)):
        states = [assignment]
        dead = False
        for poly, value in zip(atom.args, fact.args):
            next_states = []
            for st in states:
                out = _match_arg(poly, value, st, free)
                if out == "defer":
                    unbound = sorted(v for v in _arg_vars(poly, free) if v not in st)
                    u = unbound[0]
                    for cand in pool:
                        st2 = dict(st)
                        st2[u] = cand
                        out2 = _match_arg(poly, value, st2, free)
                        if out2 == "defer":
                            continue
                        next_states.extend(out2)
                else:
                    next_states.extend(out)
            states = next_states
            if not states:
                dead = True
                break
        if dead:
            continue
        for st in states:
            yield from _match_premises(rest, facts, pool, free, st)


def _premise_order(rule):
    """Premises sorted so plain-variable arguments bind early."""
    def score(atom):
        plain = sum(1 for a in atom.args if _is_plain_var(a, {v for v, _ in rule.free_vars}))
        return (-plain, len(atom.args))
    return tuple(sorted(rule.premises, key=score))


# ---------------------------------------------------------------------------
# Saturation
# ---------------------------------------------------------------------------

@dataclass
class Step:
    rule: str
    assignment: dict
    premises: tuple
    added: tuple


class BudgetExhausted(Exception):
    pass


class _Session:
    """Shared mutable counters across one prove() call."""

    def __init__(self, theory, presentation, budget, pool, goal):
        self.theory = theory
        self.presentation = presentation
        self.budget = budget
        self.pool = pool
        self.apps = 0
        self.exhausted = False
        seed_args = []
        for rel in presentation.relations:
            seed_args += [a for a in rel.args if isinstance(a, RingPoly)]
        if goal is not None:
            for atom in goal.premises:
                seed_args += [a for a in atom.args if isinstance(a, RingPoly)]
            for _f, atoms in goal.branches:
                for atom in atoms:
                    seed_args += [a for a in atom.args if isinstance(a, RingPoly)]
        self.arg_degree_cap = max([budget.degree] + [a.degree() for a in seed_args])
        coeffs = [abs(c) for a in seed_args for c in a.terms.values()]
        coeffs += [abs(p.constant_value()) for p in pool if p.is_constant()]
        self.coeff_cap = max([1] + coeffs)
        mult = [RingPoly.const(0), RingPoly.const(1), RingPoly.const(-1)]
        for g in presentation.ring_generators():
            mult += [RingPoly.gen(g, (g,)), -RingPoly.gen(g, (g,))]
        for a in seed_args:
            mult += [a, -a]
        for p in pool:
            if p.is_constant():
                mult.append(p)
        self.multipliers = _dedupe(mult)
        self.goal_atoms = set()
        if goal is not None:
            for _f, atoms in goal.branches:
                self.goal_atoms |= set(atoms)

    def count_app(self):
        self.apps += 1
        if self.apps > self.budget.apps:
            self.exhausted = True
            raise BudgetExhausted

    def extend_fresh(self, name):
        g = RingPoly.gen(name, (name,))
        if g not in self.pool:
            self.pool = self.pool + [g, -g]
        self.multipliers = self.multipliers + [g, -g]


def _dedupe(polys):
    out, seen = [], set()
    for p in polys:
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def _horn_rules(theory):
    return [r for r in theory.all_rules()
            if r.classify() in ("direct", "simplification", "collapsus")]


def _split_rules(theory):
    return [(i, r) for i, r in enumerate(theory.all_rules())
            if r.classify() in ("disjunctive", "existential")]


def saturate(facts, theory, presentation, budget, pool=None, session=None,
             trace=None):
    """Close the fact base under the theory's Horn fragment.

    Returns the (mutated) fact base; ``facts.collapsed`` reports collapse.
    Budget exhaustion is flagged on the session, never raised to callers.
    """
    own_session = session is None
    if own_session:
        if pool is None:
            pool = candidate_pool(presentation, None, budget.degree,
                                  budget.pool_size)
        session = _Session(theory, presentation, budget, pool, None)
    rules = _horn_rules(theory)
    seen = set()
    try:
        changed = True
        while changed and not facts.collapsed:
            changed = False
            for rule in rules:
                if facts.collapsed:
                    break
                free = {v for v, _ in rule.free_vars}
                prem_vars = set()
                for a in rule.premises:
                    prem_vars |= _arg_vars_atom(a, free)
                concl_only = sorted(free - prem_vars)
                ordered = _premise_order(rule)
                for assignment in list(_match_premises(ordered, facts,
                                                       session.pool, free)):
                    for extra in _enumerate_free(concl_only, session.multipliers):
                        full = dict(assignment)
                        full.update(extra)
                        key = (rule.name, tuple(sorted((k, v) for k, v in full.items())))
                        if key in seen:
                            continue
                        seen.add(key)
                        if _apply_horn(rule, full, facts, session, trace):
                            changed = True
                        if facts.collapsed:
                            break
                    if facts.collapsed:
                        break
    except BudgetExhausted:
        pass
    return facts


def _arg_vars_atom(atom, free):
    out = set()
    for a in atom.args:
        out |= _arg_vars(a, free)
    return out


def _enumerate_free(names, values):
    if not names:
        yield {}
        return
    for combo in itertools.product(values, repeat=len(names)):
        yield dict(zip(names, combo))


def _apply_horn(rule, assignment, facts, session, trace):
    ground = rule.instantiate(assignment)
    if any(not facts.has(p) for p in ground.premises):
        return False
    depth = 0
    for p in ground.premises:
        depth = max(depth, facts.mult_depth.get(p, 0))
    is_mult = _is_multiplier_rule(rule)
    if is_mult:
        depth += 1
        if depth > session.budget.degree:
            return False
    if not ground.branches:           # collapsus
        session.count_app()
        facts.add(Atom(BOTTOM), step=_record(trace, rule, assignment, ground, (Atom(BOTTOM),)))
        return True
    (_fresh, atoms), = ground.branches
    new_atoms = [a for a in atoms if not facts.has(a)]
    if not new_atoms:
        return False
    if any(_atom_degree(a) > session.arg_degree_cap
           or _atom_coeff(a) > session.coeff_cap for a in new_atoms):
        return False
    session.count_app()
    step = _record(trace, rule, assignment, ground, tuple(new_atoms))
    for a in new_atoms:
        facts.add(a, step=step, depth=depth)
    return True


def _is_multiplier_rule(rule):
    """True when some conclusion argument strictly grows a premise argument
    (a multiplier rule: its instantiations are degree-limited)."""
    free = {v for v, _ in rule.free_vars}
    prem_vars = set()
    for a in rule.premises:
        prem_vars |= _arg_vars_atom(a, free)
    for _f, atoms in rule.branches:
        for a in atoms:
            if _arg_vars_atom(a, free) - prem_vars:
                return True
    return False


def _atom_degree(atom):
    return max((a.degree() for a in atom.args if isinstance(a, RingPoly)),
               default=0)


def _atom_coeff(atom):
    return max((abs(c) for a in atom.args if isinstance(a, RingPoly)
                for c in a.terms.values()), default=0)


def _record(trace, rule, assignment, ground, added):
    if trace is None:
        return -1
    trace.append(Step(rule.name, dict(assignment), tuple(ground.premises), added))
    return len(trace) - 1


# ---------------------------------------------------------------------------
# Proof trees
# ---------------------------------------------------------------------------

@dataclass
class ProofTree:
    """Replayable derivation: a chain of Horn steps, then either a leaf or
    one split with subtrees per branch."""

    steps: tuple = ()              # ((rule, assignment), ...)
    leaf: object = None            # ("goal", j) | ("collapse",)
    split: object = None           # (rule, assignment, ((freshmap, subtree), ...))

    def node_count(self):
        n = 1 + len(self.steps)
        if self.split:
            n += sum(sub.node_count() for _f, sub in self.split[2])
        return n


@dataclass
class ProveResult:
    status: str                    # "proved" | "unknown"
    tree: ProofTree = None
    apps: int = 0
    exhausted: bool = False

    @property
    def proved(self):
        return self.status == "proved"


def prove(presentation, goal, budget=SearchBudget(), hints=()):
    """Search for a proof of a closed goal rule; Proved or Unknown.

    Goal premises are taken as facts; disjunctive and existential axioms
    open branches only when their premises already hold (except empty-
    premise disjunctive axioms, instantiated from the pool and hints).
    Unknown carries no invalidity claim.
    """
    theory = presentation.theory
    _check_goal(goal, presentation)
    pool = candidate_pool(presentation, goal, budget.degree, budget.pool_size)
    session = _Session(theory, presentation, budget, pool, goal)
    facts = FactBase()
    for rel in presentation.relations:
        facts.add(rel)
    for p in goal.premises:
        facts.add(p)
    tree = _search(facts, goal, session, budget.depth, hints, set())
    if tree is None:
        return ProveResult("unknown", None, session.apps, session.exhausted)
    return ProveResult("proved", tree, session.apps, session.exhausted)


def collapse(presentation, budget=SearchBudget(), hints=()):
    """prove() with the goal 'false' (zero branches)."""
    goal = DynamicalRule("goal", (), (), ())
    return prove(presentation, goal, budget, hints)


def _check_goal(goal, presentation):
    gens = set(presentation.ring_generators())
    for atom in goal.premises + tuple(a for _f, ats in goal.branches for a in ats):
        for arg in atom.args:
            if isinstance(arg, RingPoly) and not arg.used_vars() <= gens:
                raise SortError(f"goal atom {atom} is not closed over the presentation")


def _goal_leaf(facts, goal):
    if facts.collapsed:
        return ("collapse",)
    for j, (_fresh, atoms) in enumerate(goal.branches):
        if all(facts.has(a) for a in atoms):
            return ("goal", j)
    return None


def _search(facts, goal, session, depth, hints, applied):
    trace = []
    saturate(facts, session.theory, session.presentation, session.budget,
             session.pool, session, trace)
    leaf = _goal_leaf(facts, goal)
    if leaf is not None:
        return ProofTree(steps=_prune_steps(trace, facts, goal, leaf, None),
                         leaf=leaf)
    if depth <= 0 or session.exhausted:
        return None
    for axiom_index, rule, assignment in _split_candidates(facts, session, hints):
        key = (rule.name, tuple(sorted((k, v) for k, v in assignment.items())))
        if key in applied:
            continue
        ground = rule.instantiate(assignment)
        fresh_total = sum(len(f) for f, _ in ground.branches)
        if facts.fresh_count + fresh_total > session.budget.fresh:
            continue
        new_per_branch = []
        for fresh, atoms in ground.branches:
            if not fresh and all(facts.has(a) for a in atoms):
                new_per_branch = None      # no-op branch: split is redundant
                break
            new_per_branch.append((fresh, atoms))
        if new_per_branch is None:
            continue
        try:
            session.count_app()
        except BudgetExhausted:
            return None
        branches = []
        ok = True
        for fresh, atoms in new_per_branch:
            child = facts.copy()
            freshmap = {}
            for v, _sort in fresh:
                name = _fresh_const(child, session)
                freshmap[v] = name
            sub = {v: RingPoly.gen(n, (n,)) for v, n in freshmap.items()}
            for a in atoms:
                child.add(a.substitute(sub) if sub else a)
            subtree = _search(child, goal, session, depth - 1,
                              hints, applied | {key})
            if subtree is None:
                ok = False
                break
            branches.append((freshmap, subtree))
        if ok:
            return ProofTree(steps=_prune_steps(trace, facts, goal, None,
                                                ground),
                             split=(rule.name, assignment, tuple(branches)))
    return None


def _fresh_const(facts, session):
    gens = set(session.presentation.ring_generators())
    while True:
        name = f"w{facts.fresh_count + 1}"
        facts.fresh_count += 1
        if name not in gens:
            session.extend_fresh(name)
            return name


def _split_candidates(facts, session, hints):
    """Applicable split instances in deterministic order.

    Priority: hinted instances first, then instances with a branch atom
    matching a goal disjunct atom, then (axiom order, assignment key).
    """
    out = []
    rules = _split_rules(session.theory)
    by_name = {r.name: (i, r) for i, r in rules}
    for hi, (rname, assignment) in enumerate(hints):
        if rname in by_name:
            i, r = by_name[rname]
            ground = r.instantiate(assignment)
            if all(facts.has(p) for p in ground.premises):
                out.append(((-len(hints) + hi,), i, r, assignment))
    for i, rule in rules:
        free = {v for v, _ in rule.free_vars}
        prem_vars = set()
        for a in rule.premises:
            prem_vars |= _arg_vars_atom(a, free)
        concl_only = sorted(free - prem_vars)
        ordered = _premise_order(rule)
        for assignment in _match_premises(ordered, facts, session.pool, free):
            for extra in _enumerate_free(concl_only, session.pool):
                full = dict(assignment)
                full.update(extra)
                ground = rule.instantiate(full)
                goal_hit = any(a in session.goal_atoms
                               for _f, ats in ground.branches for a in ats)
                key = ((0 if goal_hit else 1),
                       i,
                       tuple(v.sort_key() for _k, v in sorted(full.items())))
                out.append((key, i, rule, full))
    out.sort(key=lambda e: e[0])
    seen = set()
    for _key, i, rule, assignment in out:
        k = (rule.name, tuple(sorted(assignment.items())))
        if k in seen:
            continue
        seen.add(k)
        yield i, rule, assignment


def _prune_steps(trace, facts, goal, leaf, ground_split):
    """Keep only Horn steps whose conclusions feed the leaf or the split."""
    needed = set()
    if leaf == ("collapse",) or facts.collapsed:
        needed.add(Atom(BOTTOM))
    elif leaf is not None:
        _j = leaf[1]
        needed |= set(goal.branches[_j][1])
    if ground_split is not None:
        needed |= set(ground_split.premises)
    index = {}
    for i, step in enumerate(trace):
        for a in step.added:
            index.setdefault(a, i)
    keep = set()
    frontier = [index[a] for a in needed if a in index]
    while frontier:
        i = frontier.pop()
        if i in keep:
            continue
        keep.add(i)
        for p in trace[i].premises:
            if p in index and index[p] not in keep:
                frontier.append(index[p])
    return tuple((trace[i].rule, trace[i].assignment) for i in sorted(keep))


# ---------------------------------------------------------------------------
# Independent proof checking
# ---------------------------------------------------------------------------

@dataclass
class CheckResult:
    accepted: bool
    reason: str = ""

    def __bool__(self):
        return self.accepted


def check_proof(tree, theory, presentation, goal):
    """Replay a proof tree from scratch.

    Accepts iff every node is a legal instance of a named rule whose
    premises are already established and every leaf discharges a goal
    disjunct or a collapse.  No search, no pool, no saturation.
    """
    rules = {r.name: r for r in theory.all_rules()}
    facts = set(presentation.relations) | set(goal.premises)
    gens = set(presentation.ring_generators())
    return _replay(tree, rules, facts, gens, goal)


def _replay(node, rules, facts, gens, goal):
    facts = set(facts)
    collapsed = Atom(BOTTOM) in facts

    def has(a):
        return collapsed or a.pred == TOP or a in facts

    for rname, assignment in node.steps:
        if rname not in rules:
            return CheckResult(False, f"unknown rule {rname!r}")
        rule = rules[rname]
        try:
            ground = rule.instantiate(assignment)
        except SortError as exc:
            return CheckResult(False, f"bad instantiation of {rname}: {exc}")
        if any(not has(p) for p in ground.premises):
            return CheckResult(False, f"premise of {rname} not established")
        if not ground.branches:
            facts.add(Atom(BOTTOM))
            collapsed = True
            continue
        if len(ground.branches) != 1:
            return CheckResult(False, f"{rname} is not a Horn step")
        (fresh, atoms), = ground.branches
        if fresh:
            return CheckResult(False, f"existential rule {rname} in a Horn chain")
        facts.update(atoms)

    if node.leaf is not None and node.split is not None:
        return CheckResult(False, "node has both leaf and split")
    if node.leaf is not None:
        if node.leaf == ("collapse",):
            if not collapsed:
                return CheckResult(False, "collapse leaf without falsum")
            return CheckResult(True)
        _kind, j = node.leaf
        if j >= len(goal.branches):
            return CheckResult(False, f"no goal disjunct {j}")
        if all(has(a) for a in goal.branches[j][1]):
            return CheckResult(True)
        return CheckResult(False, f"goal disjunct {j} not established")
    if node.split is None:
        return CheckResult(False, "interior node lacks leaf and split")

    rname, assignment, branches = node.split
    if rname not in rules:
        return CheckResult(False, f"unknown rule {rname!r}")
    rule = rules[rname]
    try:
        ground = rule.instantiate(assignment)
    except SortError as exc:
        return CheckResult(False, f"bad instantiation of {rname}: {exc}")
    if any(not has(p) for p in ground.premises):
        return CheckResult(False, f"premise of split {rname} not established")
    if len(branches) != len(ground.branches):
        return CheckResult(False, f"split {rname} branch count mismatch")
    for (freshmap, subtree), (fresh, atoms) in zip(branches, ground.branches):
        if set(freshmap) != {v for v, _ in fresh}:
            return CheckResult(False, f"fresh variable mismatch in {rname}")
        names = set(freshmap.values())
        if len(names) != len(freshmap) or names & gens:
            return CheckResult(False, f"fresh constants of {rname} not fresh")
        sub = {v: RingPoly.gen(n, (n,)) for v, n in freshmap.items()}
        child = set(facts)
        for a in atoms:
            child.add(a.substitute(sub) if sub else a)
        result = _replay(subtree, rules, child, gens | names, goal)
        if not result:
            return result
    return CheckResult(True)
