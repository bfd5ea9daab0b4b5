"""First-order terms, literals, clauses, unification and redundancy tests.

Terms use a compact tuple encoding so that the inner loops of the prover
stay cheap:

* a variable is a ``str`` (TPTP convention: starts with an uppercase letter),
* a constant or compound term is a tuple ``(functor, arg1, ..., argn)``,
  so the constant ``a`` is ``("a",)``,
* an atom is encoded exactly like a compound term with the predicate as
  functor.

A :class:`Symbol` table is still available (see :func:`signature`) for
arity checking and feature extraction.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Dict, Iterable, Iterator, List, NamedTuple, Optional, Tuple, Union

Term = Union[str, tuple]
Atom = tuple
Substitution = Dict[str, Term]

FUNCTION = "function"
PREDICATE = "predicate"
VARIABLE = "variable"


class ArityError(ValueError):
    """A symbol name is used with two different arities."""


@dataclass(frozen=True)
class Symbol:
    name: str
    arity: int
    kind: str


class Literal(NamedTuple):
    positive: bool
    atom: Atom

    @property
    def predicate(self) -> str:
        return self.atom[0]

    @property
    def args(self) -> tuple:
        return self.atom[1:]

    def negate(self) -> "Literal":
        return Literal(not self.positive, self.atom)


@dataclass(frozen=True)
class Clause:
    """A multiset of literals.  The empty clause is the contradiction."""

    literals: Tuple[Literal, ...]
    id: int = -1
    origin: str = "input"
    age: int = 0

    def __len__(self) -> int:
        return len(self.literals)

    @property
    def is_empty(self) -> bool:
        return not self.literals

    def with_literals(self, literals: Iterable[Literal]) -> "Clause":
        return Clause(tuple(literals), self.id, self.origin, self.age)

    def __str__(self) -> str:
        from .tptp import format_clause

        return format_clause(self)


def is_var(t: Term) -> bool:
    return isinstance(t, str)


def var(name: str) -> str:
    return name


def const(name: str) -> tuple:
    return (name,)


def fn(name: str, *args: Term) -> tuple:
    return (name,) + args


def lit(positive: bool, pred: str, *args: Term) -> Literal:
    return Literal(positive, (pred,) + args)


def term_variables(t: Term) -> Iterator[str]:
    """Yield variable occurrences of ``t`` left to right (with repeats)."""
    if isinstance(t, str):
        yield t
        return
    stack = list(reversed(t[1:]))
    while stack:
        s = stack.pop()
        if isinstance(s, str):
            yield s
        else:
            stack.extend(reversed(s[1:]))


def clause_variables(c: Clause) -> List[str]:
    """Distinct variables of ``c`` in order of first occurrence."""
    seen: Dict[str, None] = {}
    for l in c.literals:
        for v in term_variables(l.atom):
            seen.setdefault(v, None)
    return list(seen)


def term_depth(t: Term) -> int:
    if isinstance(t, str) or len(t) == 1:
        return 1
    return 1 + max(term_depth(a) for a in t[1:])


def signature(clauses: Iterable[Clause]) -> Dict[Tuple[str, str], Symbol]:
    """Collect the symbol table, raising :class:`ArityError` on clashes."""
    table: Dict[Tuple[str, str], Symbol] = {}

    def note(name: str, arity: int, kind: str) -> None:
        key = (name, kind)
        old = table.get(key)
        if old is None:
            table[key] = Symbol(name, arity, kind)
        elif old.arity != arity:
            raise ArityError(f"symbol {name!r} used with arities {old.arity} and {arity}")

    def walk(t: Term) -> None:
        if isinstance(t, str):
            note(t, 0, VARIABLE)
            return
        note(t[0], len(t) - 1, FUNCTION)
        for a in t[1:]:
            walk(a)

    for c in clauses:
        for l in c.literals:
            note(l.atom[0], len(l.atom) - 1, PREDICATE)
            for a in l.atom[1:]:
                walk(a)
    return table


# --------------------------------------------------------------------------
# Substitutions and unification
# --------------------------------------------------------------------------


def _walk(t: Term, s: Substitution) -> Term:
    while isinstance(t, str) and t in s:
        t = s[t]
    return t


def _occurs(v: str, t: Term, s: Substitution) -> bool:
    stack = [t]
    while stack:
        t = _walk(stack.pop(), s)
        if isinstance(t, str):
            if t == v:
                return True
        else:
            stack.extend(t[1:])
    return False


def unify_triangular(a: Term, b: Term, s: Optional[Substitution] = None) -> Optional[Substitution]:
    """Unify ``a`` and ``b`` extending ``s``; returns a triangular substitution.

    ``s`` is not modified.  Use :func:`resolve` to apply the result.
    """
    s = dict(s) if s else {}
    stack = [(a, b)]
    while stack:
        x, y = stack.pop()
        x = _walk(x, s)
        y = _walk(y, s)
        if x is y or x == y:
            continue
        if isinstance(x, str):
            if _occurs(x, y, s):
                return None
            s[x] = y
        elif isinstance(y, str):
            if _occurs(y, x, s):
                return None
            s[y] = x
        else:
            if x[0] != y[0]:
                return None
            if len(x) != len(y):
                raise ArityError(f"symbol {x[0]!r} used with arities {len(x) - 1} and {len(y) - 1}")
            stack.extend(zip(x[1:], y[1:]))
    return s


def resolve(t: Term, s: Substitution) -> Term:
    """Apply a triangular substitution exhaustively."""
    if isinstance(t, str):
        if t in s:
            return resolve(s[t], s)
        return t
    if len(t) == 1:
        return t
    return (t[0],) + tuple([resolve(a, s) for a in t[1:]])


def unify(a: Union[Term, Literal], b: Union[Term, Literal]) -> Optional[Substitution]:
    """Most general unifier of two terms (or literal atoms), or ``None``.

    The returned substitution is idempotent.  Polarity of literals is
    ignored; only their atoms are unified.
    """
    if isinstance(a, Literal):
        a = a.atom
    if isinstance(b, Literal):
        b = b.atom
    s = unify_triangular(a, b)
    if s is None:
        return None
    return {v: resolve(t, s) for v, t in s.items()}


def apply_substitution(s: Substitution, t):
    """Simultaneously replace bound variables in a term, literal or clause."""
    if isinstance(t, Clause):
        return t.with_literals(apply_substitution(s, l) for l in t.literals)
    if isinstance(t, Literal):
        return Literal(t.positive, _subst(t.atom, s))
    return _subst(t, s)


def _subst(t: Term, s: Substitution) -> Term:
    if isinstance(t, str):
        return s.get(t, t)
    if len(t) == 1:
        return t
    return (t[0],) + tuple([_subst(a, s) for a in t[1:]])


def compose(outer: Substitution, inner: Substitution) -> Substitution:
    """The substitution ``outer ∘ inner`` (apply ``inner`` first)."""
    out = {v: _subst(t, outer) for v, t in inner.items()}
    for v, t in outer.items():
        out.setdefault(v, t)
    return {v: t for v, t in out.items() if t != v}


# --------------------------------------------------------------------------
# Renaming
# --------------------------------------------------------------------------


class VariableCounter:
    """Per-search source of fresh variable suffixes."""

    def __init__(self, start: int = 1):
        self._it = itertools.count(start)

    def next(self) -> int:
        return next(self._it)


def rename_apart(c: Clause, counter: VariableCounter) -> Clause:
    """Return a variant of ``c`` whose variables carry a fresh suffix."""
    vs = clause_variables(c)
    if not vs:
        return c
    n = counter.next()
    mapping = {v: f"{v}_{n}" for v in vs}
    return apply_substitution(mapping, c)


def normalize_variables(literals: Iterable[Literal]) -> Tuple[Literal, ...]:
    """Rename variables to ``X0, X1, ...`` in order of first occurrence."""
    literals = tuple(literals)
    mapping: Dict[str, str] = {}
    for l in literals:
        for v in term_variables(l.atom):
            if v not in mapping:
                mapping[v] = f"X{len(mapping)}"
    if all(k == v for k, v in mapping.items()):
        return literals
    return tuple(Literal(l.positive, _subst(l.atom, mapping)) for l in literals)


def _shape(t: Term) -> str:
    if isinstance(t, str):
        return "*"
    if len(t) == 1:
        return t[0]
    return t[0] + "(" + ",".join(_shape(a) for a in t[1:]) + ")"


def canonical_literals(literals: Iterable[Literal]) -> Tuple[Literal, ...]:
    """Sort literals by a variable-blind key, then normalise variables."""
    ordered = sorted(literals, key=lambda l: (not l.positive, _shape(l.atom)))
    return normalize_variables(ordered)


# --------------------------------------------------------------------------
# Redundancy
# --------------------------------------------------------------------------


def is_tautology(c: Clause) -> bool:
    pos = {l.atom for l in c.literals if l.positive}
    if not pos:
        return False
    return any(l.atom in pos for l in c.literals if not l.positive)


def match(pattern: Term, target: Term, s: Substitution) -> bool:
    """One-way matching: extend ``s`` in place so ``pattern·s == target``.

    Variables of ``target`` are treated as constants.  On failure ``s`` may
    hold partial bindings; callers copy before calling.
    """
    stack = [(pattern, target)]
    while stack:
        p, t = stack.pop()
        if isinstance(p, str):
            bound = s.get(p)
            if bound is None:
                s[p] = t
            elif bound != t:
                return False
        elif isinstance(t, str) or p[0] != t[0] or len(p) != len(t):
            return False
        elif len(p) > 1:
            stack.extend(zip(p[1:], t[1:]))
    return True


class SubsumptionInfo:
    """Precomputed filters for using a clause as a subsumer or subsumee."""

    __slots__ = ("literals", "keycount", "litset", "ground", "open")

    def __init__(self, c: Clause):
        self.literals = c.literals
        kc: Dict[tuple, int] = {}
        for l in c.literals:
            k = (l.positive, l.atom[0])
            kc[k] = kc.get(k, 0) + 1
        self.keycount = kc
        self.litset = frozenset(c.literals)
        ground, open_ = [], []
        for l in c.literals:
            (open_ if any(True for _ in term_variables(l.atom)) else ground).append(l)
        self.ground = ground
        # most constrained first
        self.open = sorted(open_, key=lambda l: -_size(l.atom))


def _size(t: Term) -> int:
    if isinstance(t, str):
        return 1
    return 1 + sum(_size(a) for a in t[1:])


def subsumes_info(ci: SubsumptionInfo, di: SubsumptionInfo) -> bool:
    """:func:`subsumes` on precomputed infos."""
    if len(ci.literals) > len(di.literals):
        return False
    dk = di.keycount
    for k, n in ci.keycount.items():
        if dk.get(k, 0) < n:
            return False
    dl = di.literals
    used = [False] * len(dl)
    for l in ci.ground:
        if l not in di.litset:
            return False
        for j, m in enumerate(dl):
            if not used[j] and m == l:
                used[j] = True
                break
        else:
            return False
    if not ci.open:
        return True
    return _subsume(ci.open, 0, dl, {}, used)


def subsumes(c: Clause, d: Clause) -> bool:
    """True iff some σ maps ``c``'s literals into a sub-multiset of ``d``'s."""
    return subsumes_info(SubsumptionInfo(c), SubsumptionInfo(d))


def _subsume(cl, i, dl, s, used) -> bool:
    l = cl[i]
    last = i + 1 == len(cl)
    pos, pred = l.positive, l.atom[0]
    for j, m in enumerate(dl):
        if used[j] or m.positive != pos or m.atom[0] != pred:
            continue
        s2 = dict(s)
        if match(l.atom, m.atom, s2):
            if last:
                return True
            used[j] = True
            if _subsume(cl, i + 1, dl, s2, used):
                return True
            used[j] = False
    return False


def is_variant(c: Clause, d: Clause) -> bool:
    """Equal up to variable renaming (as multisets)."""
    return len(c) == len(d) and subsumes(c, d) and subsumes(d, c)


def clause_symbol_weight(c: Clause, fweight: int = 2, vweight: int = 1) -> int:
    """Sum of ``fweight`` per function/predicate occurrence and ``vweight``
    per variable occurrence."""
    total = 0
    for l in c.literals:
        stack = [l.atom]
        while stack:
            t = stack.pop()
            if isinstance(t, str):
                total += vweight
            else:
                total += fweight
                stack.extend(t[1:])
    return total


def clause_symbols(c: Clause) -> set:
    """Names of the function and predicate symbols occurring in ``c``."""
    out = set()
    for l in c.literals:
        stack = [l.atom]
        while stack:
            t = stack.pop()
            if not isinstance(t, str):
                out.add(t[0])
                stack.extend(t[1:])
    return out
