"""Reading and printing problems in the TPTP CNF dialect."""

from __future__ import annotations

import os
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

from .logic import Clause, Literal, Term, ArityError, signature

ROLES = ("axiom", "hypothesis", "negated_conjecture")


class TPTPError(ValueError):
    """Malformed problem text."""

    def __init__(self, message: str, line: int = 0, column: int = 0, source: str = "<string>"):
        self.line = line
        self.column = column
        self.source = source
        where = f"{source}:{line}:{column}: " if line else f"{source}: "
        super().__init__(where + message)


@dataclass
class Problem:
    name: str
    clauses: List[Tuple[Clause, str]] = field(default_factory=list)

    @property
    def conjecture(self) -> List[Clause]:
        return [c for c, role in self.clauses if role == "negated_conjecture"]

    def __len__(self) -> int:
        return len(self.clauses)


_TOKEN = re.compile(
    r"""
    (?P<ws>\s+|%[^\n]*|/\*.*?\*/)
  | (?P<neq>!=)
  | (?P<punct>[(),.|~=\[\]&])
  | (?P<dollar>\$[a-z][A-Za-z0-9_]*)
  | (?P<upper>[A-Z][A-Za-z0-9_]*)
  | (?P<lower>[a-z][A-Za-z0-9_]*)
  | (?P<quoted>'(?:[^'\\]|\\.)*')
  | (?P<distinct>"(?:[^"\\]|\\.)*")
  | (?P<number>[+-]?[0-9]+)
  | (?P<other>\S)
    """,
    re.VERBOSE | re.DOTALL,
)


class _Lexer:
    def __init__(self, text: str, source: str):
        self.tokens: List[Tuple[str, str, int, int]] = []
        self.source = source
        pos, line, col = 0, 1, 1
        while pos < len(text):
            m = _TOKEN.match(text, pos)
            if m is None:
                raise TPTPError(f"unexpected character {text[pos]!r}", line, col, source)
            kind = m.lastgroup
            value = m.group()
            if kind != "ws":
                if kind == "punct":
                    kind = value
                elif kind == "neq":
                    kind = "!="
                elif kind == "other":
                    # reported when the parser reaches it, so that e.g. a
                    # fof header is diagnosed before its quantifier syntax
                    kind = "?" + value
                self.tokens.append((kind, value, line, col))
            nl = value.count("\n")
            if nl:
                line += nl
                col = len(value) - value.rfind("\n")
            else:
                col += len(value)
            pos = m.end()
        self.tokens.append(("eof", "", line, col))
        self.i = 0

    def peek(self, k: int = 0):
        return self.tokens[min(self.i + k, len(self.tokens) - 1)]

    def next(self):
        tok = self.tokens[self.i]
        if tok[0] != "eof":
            self.i += 1
        return tok

    def expect(self, kind: str):
        tok = self.next()
        if tok[0] != kind:
            shown = tok[1] or "end of input"
            raise TPTPError(f"expected {kind!r} but found {shown!r}", tok[2], tok[3], self.source)
        return tok

    def error(self, message: str, tok=None):
        tok = tok or self.peek()
        return TPTPError(message, tok[2], tok[3], self.source)


def _name(lex: _Lexer) -> str:
    tok = lex.next()
    if tok[0] in ("lower", "number"):
        return tok[1]
    if tok[0] == "quoted":
        inner = tok[1][1:-1].replace("\\'", "'").replace("\\\\", "\\")
        return inner
    raise lex.error(f"expected a name but found {tok[1]!r}", tok)


def _term(lex: _Lexer) -> Term:
    kind = lex.peek()[0]
    if kind == "upper":
        return lex.next()[1]
    if kind == "distinct":
        return (lex.next()[1],)
    if kind not in ("lower", "quoted", "number"):
        raise lex.error(f"expected a term but found {lex.peek()[1]!r}")
    name = _name(lex)
    if lex.peek()[0] != "(":
        return (name,)
    lex.next()
    args = [_term(lex)]
    while lex.peek()[0] == ",":
        lex.next()
        args.append(_term(lex))
    lex.expect(")")
    return (name,) + tuple(args)


def _literal(lex: _Lexer) -> Optional[Literal]:
    """Parse one literal; returns ``None`` for ``$false``."""
    positive = True
    while lex.peek()[0] == "~":
        lex.next()
        positive = not positive
    tok = lex.peek()
    if tok[0] == "(" and not positive:
        lex.next()
        inner = _literal(lex)
        lex.expect(")")
        if inner is None:
            raise lex.error("cannot negate $false", tok)
        return inner.negate()
    if tok[0] == "dollar":
        lex.next()
        if tok[1] == "$false":
            if not positive:
                raise lex.error("$true literals are not supported", tok)
            return None
        raise lex.error(f"unsupported defined symbol {tok[1]}", tok)
    left = _term(lex)
    op = lex.peek()[0]
    if op in ("=", "!="):
        lex.next()
        right = _term(lex)
        eq_positive = positive if op == "=" else not positive
        return Literal(eq_positive, ("=", left, right))
    if isinstance(left, str):
        raise lex.error(f"variable {left} used as an atom", tok)
    return Literal(positive, left)


def _disjunction(lex: _Lexer) -> Tuple[Literal, ...]:
    if lex.peek()[0] == "(":
        lex.next()
        lits = _disjunction(lex)
        lex.expect(")")
        return lits
    lits = []
    first = _literal(lex)
    if first is not None:
        lits.append(first)
    while lex.peek()[0] == "|":
        lex.next()
        l = _literal(lex)
        if l is not None:
            lits.append(l)
    if lex.peek()[0] == "&":
        raise lex.error("conjunction is not allowed in cnf formulas")
    return tuple(lits)


def _skip_annotation(lex: _Lexer) -> None:
    depth = 0
    while True:
        tok = lex.peek()
        if tok[0] == "eof":
            raise lex.error("unterminated annotation")
        if tok[0] in ("(", "["):
            depth += 1
        elif tok[0] in (")", "]"):
            if depth == 0:
                return
            depth -= 1
        lex.next()


def parse_formula(text: str) -> Clause:
    """Parse a single CNF disjunction such as ``p(X) | ~q(a)``."""
    lex = _Lexer(text, "<formula>")
    lits = _disjunction(lex)
    if lex.peek()[0] != "eof":
        raise lex.error(f"trailing input {lex.peek()[1]!r}")
    return Clause(lits)


def _resolve_include(name: str, include_dirs: Sequence[os.PathLike]) -> Path:
    p = Path(name)
    if p.is_absolute():
        if p.is_file():
            return p
    else:
        for d in include_dirs:
            cand = Path(d) / p
            if cand.is_file():
                return cand
    raise FileNotFoundError(f"cannot resolve include {name!r}")


def _parse_into(text: str, include_dirs, source: str, out: list, depth: int = 0,
                select: Optional[set] = None) -> None:
    if depth > 32:
        raise TPTPError("include nesting too deep", source=source)
    lex = _Lexer(text, source)
    while lex.peek()[0] != "eof":
        tok = lex.next()
        if tok[0] != "lower":
            raise lex.error(f"expected an annotated formula but found {tok[1]!r}", tok)
        kw = tok[1]
        if kw == "include":
            lex.expect("(")
            fname_tok = lex.expect("quoted")
            names = None
            if lex.peek()[0] == ",":
                lex.next()
                lex.expect("[")
                names = set()
                while lex.peek()[0] != "]":
                    names.add(_name(lex))
                    if lex.peek()[0] == ",":
                        lex.next()
                lex.expect("]")
            lex.expect(")")
            lex.expect(".")
            fname = fname_tok[1][1:-1]
            try:
                path = _resolve_include(fname, include_dirs)
            except FileNotFoundError as e:
                raise TPTPError(str(e), fname_tok[2], fname_tok[3], source) from None
            _parse_into(path.read_text(), include_dirs, str(path), out, depth + 1, names)
            continue
        if kw in ("fof", "tff", "thf", "tcf"):
            raise lex.error(f"unsupported dialect {kw!r}: only cnf is accepted", tok)
        if kw != "cnf":
            raise lex.error(f"unknown formula kind {kw!r}", tok)
        lex.expect("(")
        name = _name(lex)
        lex.expect(",")
        role_tok = lex.next()
        if role_tok[1] not in ROLES:
            raise lex.error(f"unknown role {role_tok[1]!r}", role_tok)
        lex.expect(",")
        lits = _disjunction(lex)
        if lex.peek()[0] == ",":
            lex.next()
            _skip_annotation(lex)
        lex.expect(")")
        lex.expect(".")
        if select is None or name in select:
            out.append((Clause(lits), role_tok[1], (source, tok[2], tok[3])))


def parse_problem(text: str, include_dirs: Sequence[os.PathLike] = (), name: str = "problem",
                  source: str = "<string>") -> Problem:
    """Parse CNF problem text into a :class:`Problem`.

    Raises :class:`TPTPError` on syntax errors, unknown roles, inconsistent
    arities, unresolvable includes and empty input.
    """
    raw: list = []
    _parse_into(text, list(include_dirs), source, raw)
    if not raw:
        raise TPTPError("no clauses", source=source)
    clauses = []
    for age, (c, role, _) in enumerate(raw):
        clauses.append((Clause(c.literals, id=age, origin="input", age=age), role))
    try:
        signature(c for c, _ in clauses)
    except ArityError as e:
        raise TPTPError(str(e), source=source) from None
    return Problem(name, clauses)


def parse_file(path: os.PathLike, include_dirs: Sequence[os.PathLike] = ()) -> Problem:
    path = Path(path)
    dirs = list(include_dirs) or [path.parent]
    tptp = os.environ.get("TPTP")
    if tptp and not include_dirs:
        dirs.append(Path(tptp))
    return parse_problem(path.read_text(), dirs, name=path.stem, source=str(path))


# --------------------------------------------------------------------------
# Printing
# --------------------------------------------------------------------------

_LOWER_WORD = re.compile(r"[a-z][A-Za-z0-9_]*\Z|[+-]?[0-9]+\Z|\"")


def _fmt_name(name: str) -> str:
    if _LOWER_WORD.match(name):
        return name
    return "'" + name.replace("\\", "\\\\").replace("'", "\\'") + "'"


def format_term(t: Term) -> str:
    if isinstance(t, str):
        return t
    if len(t) == 1:
        return _fmt_name(t[0])
    return _fmt_name(t[0]) + "(" + ",".join(format_term(a) for a in t[1:]) + ")"


def format_literal(l: Literal) -> str:
    a = l.atom
    if a[0] == "=" and len(a) == 3:
        op = "=" if l.positive else "!="
        return f"{format_term(a[1])} {op} {format_term(a[2])}"
    text = format_term(a)
    return text if l.positive else "~" + text


def _print_key(l: Literal):
    args = ",".join(format_term(a) for a in l.atom[1:])
    return (not l.positive, l.atom[0], args)


def format_clause(c: Clause) -> str:
    """Canonical text of a clause: positives first, then by predicate name,
    then by printed arguments.  The empty clause prints as ``$false``."""
    if not c.literals:
        return "$false"
    return " | ".join(format_literal(l) for l in sorted(c.literals, key=_print_key))


print_clause = format_clause


def format_problem(p: Problem) -> str:
    lines = []
    for i, (c, role) in enumerate(p.clauses):
        lines.append(f"cnf(c{i}, {role}, {format_clause(c)}).")
    return "\n".join(lines) + "\n"
