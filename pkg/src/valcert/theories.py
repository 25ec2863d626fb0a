"""Textual DSL for theories, presentations, and queries, plus the builtin
catalog of divisibility theories.

Concrete syntax is line oriented.  Rules follow the pattern

    rule NAME: atom, atom |- atoms or exists x,y (atoms) or false

with infix sugar ``a | b`` (divisibility), ``t = u`` (nullity of t - u) and
``t != u``.  The entailment sign ``|-`` must be surrounded by whitespace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field

from .terms import (BOTTOM, TOP, Atom, DynamicalRule, Presentation, RingPoly,
                    Signature, SortError, normalize_term, parse_ring_expr)

DEFAULT_SCHEME_BOUND = 6


@dataclass(frozen=True)
class Theory:
    """A dynamical theory: signature plus named axioms.

    ``equality_axioms`` hold the generated equality rules for non-ring
    sorts; ring equality is the polynomial normal form and never generates
    axioms.
    """

    name: str
    signature: Signature
    axioms: tuple
    constants: tuple = ()          # ((name, sort), ...) besides ring 0/1
    equality_axioms: tuple = ()

    def axiom(self, name):
        for ax in self.axioms:
            if ax.name == name:
                return ax
        raise KeyError(f"no axiom {name!r} in theory {self.name}")

    def axiom_names(self):
        return tuple(ax.name for ax in self.axioms)

    def all_rules(self):
        return self.axioms + self.equality_axioms


class TheoryParseError(ValueError):
    def __init__(self, message, line=None, column=None):
        loc = f" (line {line}" + (f", column {column})" if column else ")") if line else ""
        super().__init__(message + loc)
        self.line = line
        self.column = column


# ---------------------------------------------------------------------------
# Tokenizing helpers
# ---------------------------------------------------------------------------

def _strip_comment(line):
    out, depth = [], 0
    for ch in line:
        if ch == "#":
            break
        out.append(ch)
    return "".join(out)


def _split_top(text, sep):
    """Split on a separator at paren depth 0.  ``sep`` is ',' or ' or '."""
    parts, depth, i, start = [], 0, 0, 0
    n = len(text)
    while i < n:
        c = text[i]
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
        elif depth == 0 and sep == "," and c == ",":
            parts.append(text[start:i])
            start = i + 1
        elif depth == 0 and sep == "or" and text[i:i + 4] in (" or ", " or\t"):
            parts.append(text[start:i])
            start = i + 4
            i += 3
        i += 1
    parts.append(text[start:])
    return [p.strip() for p in parts]


_IDENT = r"[A-Za-z_][A-Za-z_0-9.']*"


# ---------------------------------------------------------------------------
# Atom and rule parsing
# ---------------------------------------------------------------------------

def _parse_atom(text, signature, var_names, line=None):
    text = text.strip()
    if text == BOTTOM:
        return Atom(BOTTOM)
    if text == TOP:
        return Atom(TOP)
    m = re.fullmatch(rf"({_IDENT})\s*\((.*)\)", text)
    if m and _balanced(m.group(2)):
        pred = m.group(1)
        argtexts = _split_top(m.group(2), ",") if m.group(2).strip() else []
        arity = signature.predicate_arity(pred)
        if len(argtexts) != len(arity):
            raise TheoryParseError(
                f"predicate {pred!r} expects {len(arity)} arguments, got {len(argtexts)}",
                line)
        args = []
        for at, sort in zip(argtexts, arity):
            if sort == "ring":
                args.append(normalize_term(parse_ring_expr(at, var_names)))
            else:
                args.append(_parse_symbolic(at, var_names))
        return Atom(pred, tuple(args))
    # infix sugar, tried in order: != , = , |
    for op, pred in (("!=", "ne0"), ("=", "eq0"), ("|", "div")):
        idx = _find_top(text, op)
        if idx is None:
            continue
        lhs, rhs = text[:idx], text[idx + len(op):]
        if op == "=" and (idx and text[idx - 1] in "!<>"):
            continue
        try:
            signature.predicate_arity(pred)
        except SortError as exc:
            raise TheoryParseError(str(exc), line)
        left = normalize_term(parse_ring_expr(lhs, var_names))
        right = normalize_term(parse_ring_expr(rhs, var_names))
        if pred == "div":
            return Atom("div", (left, right))
        return Atom(pred, (left - right,))
    raise TheoryParseError(f"cannot parse atom {text!r}", line)


def _balanced(text):
    depth = 0
    for c in text:
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
            if depth < 0:
                return False
    return depth == 0


def _find_top(text, op):
    depth = 0
    i = 0
    while i < len(text):
        c = text[i]
        if c == "(":
            depth += 1
        elif c == ")":
            depth -= 1
        elif depth == 0 and text[i:i + len(op)] == op:
            if op == "=" and i + 1 < len(text) and text[i + 1] == "=":
                i += 2
                continue
            if op == "|" and i + 1 < len(text) and text[i + 1] == "-":
                i += 2
                continue
            return i
        i += 1
    return None


def _parse_symbolic(text, var_names):
    text = text.strip()
    m = re.fullmatch(rf"({_IDENT})\s*\((.*)\)", text)
    if m:
        args = tuple(_parse_symbolic(a, var_names) for a in _split_top(m.group(2), ","))
        return ("app", m.group(1), args)
    if re.fullmatch(_IDENT, text):
        return ("var", text) if text in var_names else ("const", text)
    raise TheoryParseError(f"cannot parse term {text!r}")


def _rule_identifiers(text):
    return set(re.findall(_IDENT, text))


def parse_rule(name, body, signature, known_constants=(), closed=False, line=None):
    """Parse ``premises |- conclusion``.

    In theory axioms (``closed=False``) every undeclared identifier is a
    free variable; in closed goals identifiers denote presentation
    generators.
    """
    if "|-" not in body:
        raise TheoryParseError(f"rule {name!r} is missing |-", line)
    lhs, rhs = body.split("|-", 1)
    pred_names = {p for p, _ in signature.predicates} | {BOTTOM, TOP}
    reserved = pred_names | set(known_constants) | {"or", "exists", BOTTOM, TOP}
    idents = _rule_identifiers(body)
    var_names = set() if closed else {i for i in idents if i not in reserved and not i.isdigit()}

    premises = []
    if lhs.strip():
        for at in _split_top(lhs, ","):
            premises.append(_parse_atom(at, signature, var_names, line))

    branches = []
    rhs = rhs.strip()
    if rhs != BOTTOM:
        for disj in _split_top(" " + rhs, "or"):
            disj = disj.strip()
            m = re.fullmatch(rf"exists\s+({_IDENT}(?:\s*,\s*{_IDENT})*)\s*\((.*)\)", disj)
            if m:
                fresh = tuple((v.strip(), "ring") for v in m.group(1).split(","))
                var_names |= {v for v, _ in fresh}
                atoms = tuple(_parse_atom(a, signature, var_names, line)
                              for a in _split_top(m.group(2), ","))
            else:
                fresh = ()
                atoms = tuple(_parse_atom(a, signature, var_names, line)
                              for a in _split_top(disj, ","))
            branches.append((fresh, atoms))

    fresh_all = {v for fresh, _ in branches for v, _ in fresh}
    free = tuple((v, "ring") for v in sorted(var_names - fresh_all))
    return DynamicalRule(name, free, tuple(premises), tuple(branches))


# ---------------------------------------------------------------------------
# Theory files
# ---------------------------------------------------------------------------

def parse_theory(text):
    """Parse a .dyth document into a Theory.

    Raises TheoryParseError with a line number on syntax errors, arity and
    sort mismatches, and duplicate rule names.
    """
    sorts, functions, predicates, constants = [], [], [], []
    rules = []
    name = None
    lines = text.splitlines()
    in_block = False
    for no, raw in enumerate(lines, start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if not in_block:
            m = re.fullmatch(rf"theory\s+({_IDENT})\s*\{{", line)
            if not m:
                raise TheoryParseError("expected 'theory NAME {'", no)
            name = m.group(1)
            in_block = True
            continue
        if line == "}":
            in_block = False
            continue
        if line.startswith("sort "):
            sorts.append(line[5:].strip())
        elif line.startswith("pred "):
            m = re.fullmatch(rf"pred\s+({_IDENT})\s*\(([^)]*)\)", line)
            if not m:
                raise TheoryParseError(f"bad predicate declaration {line!r}", no)
            argsorts = tuple(s.strip() for s in m.group(2).split(",")) if m.group(2).strip() else ()
            predicates.append((m.group(1), argsorts))
        elif line.startswith("fun "):
            m = re.fullmatch(rf"fun\s+({_IDENT})\s*\(([^)]*)\)\s*:\s*({_IDENT})", line)
            if not m:
                raise TheoryParseError(f"bad function declaration {line!r}", no)
            argsorts = tuple(s.strip() for s in m.group(2).split(",")) if m.group(2).strip() else ()
            functions.append((m.group(1), argsorts, m.group(3)))
        elif line.startswith("const "):
            m = re.fullmatch(rf"const\s+({_IDENT})\s*:\s*({_IDENT})", line)
            if not m:
                raise TheoryParseError(f"bad constant declaration {line!r}", no)
            constants.append((m.group(1), m.group(2)))
        elif line.startswith("rule "):
            m = re.match(rf"rule\s+({_IDENT})\s*:\s*(.*)", line)
            if not m:
                raise TheoryParseError(f"bad rule {line!r}", no)
            rules.append((m.group(1), m.group(2), no))
        else:
            raise TheoryParseError(f"unrecognized declaration {line!r}", no)
    if in_block or name is None:
        raise TheoryParseError("unterminated theory block", len(lines))

    if not sorts:
        sorts = ["ring"]
    base_functions = []
    if "ring" in sorts:
        from .terms import RING_FUNCTIONS
        base_functions.extend(RING_FUNCTIONS)
    base_functions.extend(functions)
    signature = Signature(tuple(sorts), tuple(base_functions), tuple(predicates))

    seen = set()
    axioms = []
    const_names = tuple(c for c, _ in constants)
    for rname, body, no in rules:
        if rname in seen:
            raise TheoryParseError(f"duplicate rule name {rname!r}", no)
        seen.add(rname)
        axioms.append(parse_rule(rname, body, signature, const_names, line=no))

    eq_axioms = _equality_axioms(signature)
    return Theory(name, signature, tuple(axioms), tuple(constants), eq_axioms)


def _equality_axioms(signature):
    """Generic equality rules for non-ring sorts only."""
    out = []
    for sort in signature.sorts:
        if sort == "ring":
            continue
        eq = f"eq_{sort}"
        if eq not in {p for p, _ in signature.predicates}:
            continue
        x, y, z = ("var", "x"), ("var", "y"), ("var", "z")
        out.append(DynamicalRule(f"eq1_{sort}", (("x", sort),), (),
                                 (((), (Atom(eq, (x, x)),)),)))
        out.append(DynamicalRule(f"eq2_{sort}", (("x", sort), ("y", sort)),
                                 (Atom(eq, (x, y)),), (((), (Atom(eq, (y, x)),)),)))
        out.append(DynamicalRule(f"Eq3_{sort}", (("x", sort), ("y", sort), ("z", sort)),
                                 (Atom(eq, (x, y)), Atom(eq, (y, z))),
                                 (((), (Atom(eq, (x, z)),)),)))
        for pname, argsorts in signature.predicates:
            if pname == eq:
                continue
            for i, s in enumerate(argsorts):
                if s != sort:
                    continue
                vars_ = tuple(("var", f"u{k}") for k in range(len(argsorts)))
                lhs = list(vars_)
                rhs = list(vars_)
                rhs[i] = y
                lhs[i] = x
                out.append(DynamicalRule(
                    f"Eq_{pname}_{i}_{sort}",
                    tuple((f"u{k}", argsorts[k]) for k in range(len(argsorts)) if k != i)
                    + (("x", sort), ("y", sort)),
                    (Atom(eq, (x, y)), Atom(pname, tuple(lhs))),
                    (((), (Atom(pname, tuple(rhs)),)),)))
    return tuple(out)


def serialize_theory(theory):
    lines = [f"theory {theory.name} {{"]
    for s in theory.signature.sorts:
        lines.append(f"  sort {s}")
    from .terms import RING_FUNCTIONS
    for f in theory.signature.functions:
        if f in RING_FUNCTIONS:
            continue
        args = ", ".join(f[1])
        lines.append(f"  fun {f[0]}({args}): {f[2]}")
    for c, s in theory.constants:
        lines.append(f"  const {c}: {s}")
    for p, args in theory.signature.predicates:
        lines.append(f"  pred {p}({', '.join(args)})")
    for ax in theory.axioms:
        lines.append(f"  rule {_format_rule(ax)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _format_atom(atom):
    if atom.pred in (BOTTOM, TOP):
        return atom.pred
    if atom.pred == "div":
        return f"{atom.args[0]} | {atom.args[1]}"
    if atom.pred == "eq0":
        return f"{atom.args[0]} = 0"
    if atom.pred == "ne0":
        return f"{atom.args[0]} != 0"
    parts = []
    for a in atom.args:
        parts.append(_format_symbolic(a) if isinstance(a, tuple) else str(a))
    return f"{atom.pred}({', '.join(parts)})"


def _format_symbolic(t):
    if t[0] in ("var", "const"):
        return t[1]
    return f"{t[1]}({', '.join(_format_symbolic(a) for a in t[2])})"


def _format_rule(rule):
    lhs = ", ".join(_format_atom(a) for a in rule.premises)
    if not rule.branches:
        rhs = BOTTOM
    else:
        parts = []
        for fresh, atoms in rule.branches:
            body = ", ".join(_format_atom(a) for a in atoms) or TOP
            if fresh:
                parts.append(f"exists {','.join(v for v, _ in fresh)} ({body})")
            else:
                parts.append(body)
        rhs = " or ".join(parts)
    return f"{rule.name}: {lhs} |- {rhs}" if lhs else f"{rule.name}: |- {rhs}"


def format_rule(rule):
    return _format_rule(rule)


# ---------------------------------------------------------------------------
# Presentations
# ---------------------------------------------------------------------------

def parse_presentation(text, theory_resolver=None):
    """Parse a .dypr document.

    ``theory_resolver`` maps a theory name to a Theory; the builtin catalog
    is the default.
    """
    resolver = theory_resolver or builtin_theory
    lines = text.splitlines()
    name = theory = None
    gens, rels = [], []
    in_block = False
    for no, raw in enumerate(lines, start=1):
        line = _strip_comment(raw).strip().rstrip(";")
        if not line:
            continue
        if not in_block:
            m = re.fullmatch(rf"structure\s+({_IDENT})\s+over\s+({_IDENT})\s*\{{", line)
            if not m:
                raise TheoryParseError("expected 'structure NAME over THEORY {'", no)
            name = m.group(1)
            theory = resolver(m.group(2))
            in_block = True
            continue
        if line == "}":
            in_block = False
            continue
        if line.startswith("gen "):
            for g in line[4:].split():
                gens.append((g, "ring"))
        elif line.startswith("rel "):
            atom = _parse_atom(line[4:], theory.signature, set(), no)
            rels.append(atom)
        else:
            raise TheoryParseError(f"unrecognized line {line!r}", no)
    if in_block or theory is None:
        raise TheoryParseError("unterminated structure block", len(lines))
    return Presentation(theory, tuple(gens), tuple(rels), name)


def serialize_presentation(pres):
    lines = [f"structure {pres.name} over {pres.theory.name} {{"]
    if pres.generators:
        lines.append("  gen " + " ".join(n for n, _ in pres.generators))
    for rel in pres.relations:
        lines.append(f"  rel {_format_atom(rel)}")
    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Queries
# ---------------------------------------------------------------------------

@dataclass
class QueryDoc:
    """A closed goal plus budgets and optional instantiation hints."""

    goal: DynamicalRule
    structure: str = None
    budget: dict = field(default_factory=dict)
    hints: tuple = ()              # (rule_name, {var: RingPoly})


def parse_query(text, signature):
    goal = None
    structure = None
    budget = {}
    hints = []
    for no, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        if line.startswith("prove"):
            goal = parse_rule("goal", line[5:].strip(), signature, closed=True, line=no)
        elif line.startswith("structure "):
            structure = line[10:].strip()
        elif line.startswith("budget"):
            for part in line[6:].split():
                k, v = part.split("=")
                budget[k.strip()] = int(v)
        elif line.startswith("hint inst "):
            bits = line[10:].split()
            rule_name = bits[0]
            assignment = {}
            for kv in bits[1:]:
                k, v = kv.split("=", 1)
                assignment[k] = normalize_term(parse_ring_expr(v))
            hints.append((rule_name, assignment))
        else:
            raise TheoryParseError(f"unrecognized query line {line!r}", no)
    if goal is None:
        raise TheoryParseError("query has no 'prove' line")
    return QueryDoc(goal, structure, budget, tuple(hints))


def serialize_query(q):
    lines = ["prove " + _format_rule(q.goal).split(": ", 1)[1]]
    if q.structure:
        lines.append(f"structure {q.structure}")
    if q.budget:
        lines.append("budget " + " ".join(f"{k}={v}" for k, v in sorted(q.budget.items())))
    for rule_name, assignment in q.hints:
        kv = " ".join(f"{k}={v}" for k, v in sorted(assignment.items()))
        lines.append(f"hint inst {rule_name} {kv}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Builtin catalog
# ---------------------------------------------------------------------------
#
# Axiom lists are transcribed rule by rule from the source tables of the
# theories; tests/goldens holds the reviewed reference copies.

_CR_RULES = """\
  rule cr1: |- 0 = 0
  rule cr2: x = 0 |- x*y = 0
  rule cr3: x = 0, y = 0 |- x + y = 0
"""

_SRC_CR = f"""theory Cr {{
  sort ring
  pred eq0(ring)
{_CR_RULES}}}
"""

_SRC_LR1 = f"""theory Lr1 {{
  sort ring
  pred eq0(ring)
  pred Un(ring)
{_CR_RULES}\
  rule un1: |- Un(1)
  rule un2: x = 0, Un(y) |- Un(x + y)
  rule un3: Un(x), Un(y) |- Un(x*y)
  rule Un4: Un(x*y) |- Un(x)
  rule CL_Lr1: Un(0) |- false
  rule LR: Un(x + y) |- Un(x) or Un(y)
}}
"""

_SRC_WZDR = f"""theory Wzdr {{
  sort ring
  pred eq0(ring)
{_CR_RULES}\
  rule CL_R: 1 = 0 |- false
  rule WZD: x*y = 0 |- x = 0 or y = 0
}}
"""

_VAL_RULES = """\
  rule vr1: |- 1 | -1
  rule vr2: a | b |- a*c | b*c
  rule Vr1: a | b, b | c |- a | c
  rule CL_val: 0 | 1 |- false
  rule Vr2: a | b, a | c |- a | b + c
  rule VR1: |- a | b or b | a
  rule VR2: a*x | b*x |- a | b or 0 | x
"""

_SRC_VAL0 = f"""theory val0 {{
  sort ring
  pred div(ring, ring)
  pred eq0(ring)
  rule vr0: 0 | x |- x = 0
{_VAL_RULES}}}
"""

_SRC_VAL = f"""theory val {{
  sort ring
  pred div(ring, ring)
{_VAL_RULES}}}
"""

_SRC_VAL1 = f"""theory val1 {{
  sort ring
  pred div(ring, ring)
  pred ne0(ring)
{_VAL_RULES}\
  rule CL_ne: 0 | x, x != 0 |- false
  rule NE: |- 0 | x or x != 0
  rule VR2.5: x != 0, a*x | b*x |- a | b
}}
"""

_SRC_VALPLUS = f"""theory valplus {{
  sort ring
  pred div(ring, ring)
{_VAL_RULES}\
  rule Div: 1 | x, 0 | z - x*y |- y | z
  rule DIV: y | z |- exists x (1 | x, 0 | z - x*y)
}}
"""

_VAL_CAL_RULES = """\
  rule vf1: x = 0, Vr(y) |- Vr(x + y)
  rule vf2: |- Vr(-1)
  rule vf3: Vr(x), Vr(y) |- Vr(x*y)
  rule vf4: Vr(x), Vr(y) |- Vr(x + y)
  rule VF2: x*y = 1 |- Vr(x) or Vr(y)
  rule CL_Val: 1 = 0 |- false
"""

_SRC_VALCAL = f"""theory Val {{
  sort ring
  pred eq0(ring)
  pred Vr(ring)
{_CR_RULES}{_VAL_CAL_RULES}}}
"""

_SRC_VALCALPLUS = f"""theory Valplus {{
  sort ring
  pred eq0(ring)
  pred Vr(ring)
  pred div(ring, ring)
{_CR_RULES}{_VAL_CAL_RULES}\
  rule Div: Vr(x), z = x*y |- y | z
  rule DIV: y | z |- exists x (Vr(x), z = x*y)
}}
"""

_VDF_DIRECT = """\
  rule vf1: x = 0, Vr(y) |- Vr(x + y)
  rule vf2: |- Vr(-1)
  rule vf3: Vr(x), Vr(y) |- Vr(x*y)
  rule vf4: Vr(x), Vr(y) |- Vr(x + y)
  rule vf5: x = 0, Rn(y) |- Rn(x + y)
  rule vf6: |- Rn(0)
  rule vf7: Rn(x), Vr(y) |- Rn(x*y)
  rule vf8: Rn(x), Rn(y) |- Rn(x + y)
  rule vf9: Rn(x) |- Vr(x)
  rule vf10: x = 0, Un(y) |- Un(x + y)
  rule vf11: |- Un(1)
  rule vf12: Un(x), Un(y) |- Un(x*y)
  rule vf13: Rn(x), Un(y) |- Un(x + y)
  rule vf14: Un(x) |- Vr(x)
  rule vf15: x = 0, y != 0 |- x + y != 0
  rule vf16: x != 0, y != 0 |- x*y != 0
  rule vf17: Un(x) |- x != 0
  rule CL: 0 != 0 |- false
"""

_VDF_PREDS = """\
  pred eq0(ring)
  pred ne0(ring)
  pred Vr(ring)
  pred Rn(ring)
  pred Un(ring)
"""

_SRC_VDF = f"""theory Vdf {{
  sort ring
{_VDF_PREDS}{_CR_RULES}{_VDF_DIRECT}\
  rule Vf1: x*y = 1 |- x != 0
  rule Vf2: Vr(x*y), Un(x) |- Vr(y)
  rule VF1: x != 0 |- exists y (x*y = 1)
  rule VF2: |- x = 0 or x != 0
  rule VF3: x*y = 1 |- Vr(x) or Vr(y)
  rule VF4: Vr(x) |- Un(x) or Rn(x)
}}
"""

_SRC_VDFPLUS = f"""theory Vdfplus {{
  sort ring
{_VDF_PREDS}\
  pred div(ring, ring)
  pred ndiv(ring, ring)
{_CR_RULES}{_VDF_DIRECT}\
  rule Vf1: x*y = 1 |- x != 0
  rule Vf2: Vr(x*y), Un(x) |- Vr(y)
  rule VF1: x != 0 |- exists y (x*y = 1)
  rule VF2: |- x = 0 or x != 0
  rule VF3: x*y = 1 |- Vr(x) or Vr(y)
  rule VF4: Vr(x) |- Un(x) or Rn(x)
  rule Div: Vr(z), x*z = y |- x | y
  rule DIV: x | y |- exists z (Vr(z), x*z = y)
  rule Ndiv: y != 0, Rn(z), y*z = x |- ndiv(x, y)
  rule NDIV: ndiv(x, y) |- exists z (y != 0, Rn(z), y*z = x)
}}
"""

_SRC_APV = f"""theory Apv {{
  sort ring
{_VDF_PREDS}{_CR_RULES}{_VDF_DIRECT}}}
"""

_AQV_SIMPL = """\
  rule Vf1: x*y = 1 |- x != 0
  rule Vf2: Vr(x*y), Un(x) |- Vr(y)
  rule Vf3: Un(x*y), Vr(x), Vr(y) |- Un(y)
  rule Vf4: Rn(x*y), Un(x) |- Rn(y)
  rule Vf5: Rn(x^2) |- Rn(x)
  rule Vf6: x*y != 0 |- x != 0
  rule Vf7: x*y = 0, x != 0 |- y = 0
  rule Vf8: x^2 = 0 |- x = 0
"""


def _vf9_rules(bound):
    lines = []
    for n in range(1, bound + 1):
        poly = f"x^{n}" if n > 1 else "x"
        rhs = " + ".join(f"a{k}*x^{k}" if k > 1 else (f"a{k}*x" if k == 1 else f"a{k}")
                         for k in range(n - 1, -1, -1))
        vrs = ", ".join(f"Vr(a{k})" for k in range(n - 1, -1, -1))
        lines.append(f"  rule Vf9_{n}: {poly} = {rhs}, {vrs} |- Vr(x)")
    return "\n".join(lines) + "\n"


def _src_aqv(bound):
    return (f"theory Aqv {{\n  sort ring\n{_VDF_PREDS}{_CR_RULES}{_VDF_DIRECT}"
            f"{_AQV_SIMPL}{_vf9_rules(bound)}}}\n")


def _src_vdfminus(bound):
    return (f"theory Vdfminus {{\n  sort ring\n{_VDF_PREDS}{_CR_RULES}{_VDF_DIRECT}"
            f"{_AQV_SIMPL}{_vf9_rules(bound)}"
            "  rule VF2: |- x = 0 or x != 0\n"
            "  rule VF3: x*y = 1 |- Vr(x) or Vr(y)\n"
            "  rule VF4: Vr(x) |- Un(x) or Rn(x)\n}\n")


_FIXED_SOURCES = {
    "Cr": _SRC_CR,
    "Lr1": _SRC_LR1,
    "Wzdr": _SRC_WZDR,
    "val0": _SRC_VAL0,
    "val": _SRC_VAL,
    "val1": _SRC_VAL1,
    "valplus": _SRC_VALPLUS,
    "Val": _SRC_VALCAL,
    "Valplus": _SRC_VALCALPLUS,
    "Vdf": _SRC_VDF,
    "Vdfplus": _SRC_VDFPLUS,
    "Apv": _SRC_APV,
}

BUILTIN_NAMES = tuple(_FIXED_SOURCES) + ("Aqv", "Vdfminus")

_cache = {}


def builtin_source(name, scheme_bound=DEFAULT_SCHEME_BOUND):
    canonical = _canonical_name(name)
    if canonical in _FIXED_SOURCES:
        return _FIXED_SOURCES[canonical]
    if canonical == "Aqv":
        return _src_aqv(scheme_bound)
    if canonical == "Vdfminus":
        return _src_vdfminus(scheme_bound)
    raise KeyError(f"unknown builtin theory {name!r}")


def _canonical_name(name):
    if name in BUILTIN_NAMES:
        return name
    # case-insensitive convenience, but only when unambiguous (val / Val
    # and valplus / Valplus are distinct theories)
    hits = [n for n in BUILTIN_NAMES if n.lower() == name.lower()]
    if len(hits) == 1:
        return hits[0]
    raise KeyError(f"unknown builtin theory {name!r}"
                   + (f" (ambiguous between {hits})" if hits else ""))


def builtin_theory(name, scheme_bound=DEFAULT_SCHEME_BOUND):
    """One of the catalog theories, with axiom schemes expanded to the
    configured bound (Vf9_n for n <= scheme_bound)."""
    canonical = _canonical_name(name)
    key = (canonical, scheme_bound)
    if key not in _cache:
        _cache[key] = parse_theory(builtin_source(canonical, scheme_bound))
    return _cache[key]


# ---------------------------------------------------------------------------
# Axiom schemes
# ---------------------------------------------------------------------------

def scheme_integral_closure(n):
    """Vf9_n: a monic degree-n relation with Vr coefficients forces Vr(x)."""
    sig = builtin_theory("Aqv").signature
    src = _vf9_rules(n).strip().splitlines()[-1].strip()
    return parse_rule(f"Vf9_{n}", src.split(": ", 1)[1], sig)


def scheme_root_existence(n):
    """VF5_n: every monic degree-n polynomial has a root."""
    if n < 1:
        raise ValueError("degree must be positive")
    sig = builtin_theory("Vdf").signature
    body = " + ".join([f"y^{n}" if n > 1 else "y"]
                      + [f"a{k}*y^{k}" if k > 1 else (f"a{k}*y" if k == 1 else f"a{k}")
                         for k in range(n - 1, -1, -1)])
    return parse_rule(f"VF5_{n}", f"|- exists y ({body} = 0)", sig)


def scheme_separable_root(n):
    """VF6_n: a nonzero discriminant forces a root (separable closure)."""
    if n < 2:
        raise ValueError("degree must be at least 2")
    sig = builtin_theory("Vdf").signature
    disc = monic_discriminant(n)
    body = " + ".join([f"y^{n}" if n > 1 else "y"]
                      + [f"a{k}*y^{k}" if k > 1 else (f"a{k}*y" if k == 1 else f"a{k}")
                         for k in range(n - 1, -1, -1)])
    rule = parse_rule(f"VF6_{n}", f"0 != 0 |- exists y ({body} = 0)", sig)
    prem = Atom("ne0", (disc,))
    return DynamicalRule(rule.name, rule.free_vars, (prem,), rule.branches)


def monic_discriminant(n):
    """Discriminant of y^n + a_{n-1} y^{n-1} + ... + a_0 as a RingPoly.

    Computed as (-1)^(n(n-1)/2) * Res(f, f') via a fraction-free (Bareiss)
    determinant of the Sylvester matrix.
    """
    names = tuple(sorted(f"a{k}" for k in range(n)))
    f = {n: RingPoly.const(1, names)}
    for k in range(n):
        f[k] = RingPoly.gen(f"a{k}", names)
    df = {k - 1: RingPoly.const(k, names) * f[k] for k in range(1, n + 1)}
    size = 2 * n - 1
    zero = RingPoly.const(0, names)
    mat = [[zero] * size for _ in range(size)]
    for r in range(n - 1):                      # rows of f
        for k in range(n + 1):
            mat[r][r + (n - k)] = f[k]
    for r in range(n):                          # rows of f'
        for k in range(n):
            mat[n - 1 + r][r + (n - 1 - k)] = df[k]
    res = _bareiss_det(mat, zero)
    sign = -1 if (n * (n - 1) // 2) % 2 else 1
    return res if sign == 1 else -res


def _bareiss_det(mat, zero):
    n = len(mat)
    m = [row[:] for row in mat]
    prev = RingPoly.const(1, zero.vars)
    sign = 1
    for k in range(n - 1):
        if m[k][k].is_zero():
            swap = next((i for i in range(k + 1, n) if not m[i][k].is_zero()), None)
            if swap is None:
                return zero
            m[k], m[swap] = m[swap], m[k]
            sign = -sign
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                num = m[k][k] * m[i][j] - m[i][k] * m[k][j]
                q = num.exact_div(prev)
                if q is None:
                    raise AssertionError("Bareiss exact division failed")
                m[i][j] = q
            m[i][k] = zero
        prev = m[k][k]
    det = m[n - 1][n - 1]
    return det if sign == 1 else -det
