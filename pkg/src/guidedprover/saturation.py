"""The given-clause loop over processed (P) and unprocessed (U) clauses.

Calculus: binary resolution and factoring, no equality reasoning.
Generated clauses are checked for emptiness first, then pass a forward
simplification gate (tautology deletion, subsumption by P) before they
enter U.  Successful searches are turned into labeled training examples:
processed clauses in the proof are positive, all other processed clauses
are negative.
"""

from __future__ import annotations

import enum
import random
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Set, Tuple

from .logic import (Clause, Literal, VariableCounter, canonical_literals, is_tautology,
                    normalize_variables, rename_apart, resolve, subsumes_info, SubsumptionInfo,
                    unify_triangular)
from .strategy import (ClauseQueues, Limits, RoundRobinState, SearchContext, Strategy,
                       select_given)
from .tptp import Problem, format_clause, parse_formula


class Verdict(str, enum.Enum):
    UNSATISFIABLE = "Unsatisfiable"
    SATURATED = "Saturated"
    RESOURCE_OUT = "ResourceOut"

    @property
    def szs(self) -> str:
        return "Satisfiable" if self is Verdict.SATURATED else self.value

    @classmethod
    def from_szs(cls, text: str) -> "Verdict":
        if text == "Satisfiable":
            return cls.SATURATED
        return cls(text)


@dataclass(frozen=True)
class InferenceRecord:
    rule: str  # input | resolution | factoring
    parents: Tuple[int, ...] = ()


@dataclass
class TraceEntry:
    id: int
    clause: Clause
    record: InferenceRecord
    role: str = "derived"
    processed: bool = False


@dataclass
class ProofTrace:
    problem: str
    entries: List[TraceEntry] = field(default_factory=list)
    verdict: Verdict = Verdict.RESOURCE_OUT

    def by_id(self) -> Dict[int, TraceEntry]:
        return {e.id: e for e in self.entries}

    @property
    def conjecture(self) -> List[Clause]:
        return [e.clause for e in self.entries if e.role == "negated_conjecture"]

    @property
    def empty_id(self) -> Optional[int]:
        for e in reversed(self.entries):
            if not e.clause.literals:
                return e.id
        return None

    def processed_ids(self) -> Set[int]:
        return {e.id for e in self.entries if e.processed}


@dataclass
class SearchStats:
    given_count: int = 0
    processed_count: int = 0
    generated_count: int = 0
    wall_time: float = 0.0
    queue_picks: List[int] = field(default_factory=list)

    @property
    def generated_per_second(self) -> float:
        return self.generated_count / self.wall_time if self.wall_time > 0 else 0.0


@dataclass
class SearchResult:
    verdict: Verdict
    proof: Optional[Set[int]]
    trace: ProofTrace
    stats: SearchStats


@dataclass
class TrainingExample:
    clause: Clause
    conjecture_context: List[Clause]
    label: str  # positive | negative
    problem: str


class ProofState:
    """P, U and the derivation records of one search."""

    def __init__(self, queues: ClauseQueues):
        self.processed: List[Clause] = []
        self.unprocessed = queues
        self.derivation: Dict[int, InferenceRecord] = {}
        self.given_count = 0
        # P indexed by (sign, predicate) of each literal, for resolution
        self._by_literal: Dict[tuple, List[Clause]] = {}
        # P indexed by one (sign, predicate) key per clause, for subsumption
        self._by_key: Dict[tuple, List[Clause]] = {}

    def add_processed(self, c: Clause) -> None:
        self.processed.append(c)
        keys = {(l.positive, l.atom[0]) for l in c.literals}
        for k in keys:
            self._by_literal.setdefault(k, []).append(c)
        self._by_key.setdefault(min(keys), []).append(SubsumptionInfo(c))

    def partners(self, g: Clause) -> List[Clause]:
        """Processed clauses with a literal complementary in sign and predicate
        to one of ``g``'s, in processing order."""
        seen: Dict[int, Clause] = {}
        for l in g.literals:
            for p in self._by_literal.get((not l.positive, l.atom[0]), ()):
                seen.setdefault(p.id, p)
        return sorted(seen.values(), key=lambda c: c.age)

    def subsumed(self, c: Clause) -> bool:
        """True iff some processed clause subsumes ``c``."""
        ci = SubsumptionInfo(c)
        for k in ci.keycount:
            for pi in self._by_key.get(k, ()):
                if subsumes_info(pi, ci):
                    return True
        return False


# --------------------------------------------------------------------------
# Inference rules
# --------------------------------------------------------------------------


def _build(literals: Iterable[Literal], s) -> Tuple[Literal, ...]:
    out: Dict[Literal, None] = {}
    for l in literals:
        out.setdefault(Literal(l.positive, resolve(l.atom, s)), None)
    return canonical_literals(out)


def resolvents(g: Clause, p: Clause) -> List[Clause]:
    """Binary resolvents of ``g`` and ``p`` (which must be renamed apart).

    One clause per complementary literal pair whose atoms unify; identical
    literals of the result are merged.
    """
    out = []
    gl, pl = g.literals, p.literals
    for i, L in enumerate(gl):
        for j, M in enumerate(pl):
            if L.positive == M.positive or L.atom[0] != M.atom[0]:
                continue
            s = unify_triangular(L.atom, M.atom)
            if s is None:
                continue
            rest = gl[:i] + gl[i + 1:] + pl[:j] + pl[j + 1:]
            out.append(Clause(_build(rest, s), origin="derived"))
    return out


def factors(g: Clause) -> List[Clause]:
    """Factors of ``g``: one per unordered pair of same-sign literals whose
    atoms unify, with the merged duplicate removed."""
    out = []
    gl = g.literals
    for i in range(len(gl)):
        for j in range(i + 1, len(gl)):
            L, M = gl[i], gl[j]
            if L.positive != M.positive or L.atom[0] != M.atom[0]:
                continue
            s = unify_triangular(L.atom, M.atom)
            if s is None:
                continue
            out.append(Clause(_build(gl[:j] + gl[j + 1:], s), origin="derived"))
    return out


def forward_simplify(c: Clause, state: ProofState) -> str:
    """``"discard"`` for tautologies and clauses subsumed by P, else ``"keep"``."""
    if is_tautology(c) or state.subsumed(c):
        return "discard"
    return "keep"


# --------------------------------------------------------------------------
# The given-clause loop
# --------------------------------------------------------------------------


def saturate(problem: Problem, strategy: Strategy, limits: Optional[Limits] = None,
             require_fair: bool = True) -> SearchResult:
    """Run the given-clause algorithm on ``problem``.

    ``limits`` defaults to the strategy's own limits.  Exhausting a limit
    yields :attr:`Verdict.RESOURCE_OUT`.  ``require_fair=False`` admits
    strategies without an Age queue (test-only pure model selection).
    """
    strategy.validate(require_fair)
    limits = limits or strategy.limits or Limits()
    start = time.perf_counter()
    deadline = start + limits.wall_seconds if limits.wall_seconds else None

    ctx = SearchContext(conjecture=[Clause(normalize_variables(c.literals))
                                    for c in problem.conjecture])
    queues = ClauseQueues(strategy, ctx)
    state = ProofState(queues)
    rr = RoundRobinState(strategy)
    trace = ProofTrace(problem.name)
    stats = SearchStats()
    entries: Dict[int, TraceEntry] = {}
    counter = VariableCounter()
    next_id = 0

    def record(c: Clause, rec: InferenceRecord, role: str = "derived") -> Clause:
        nonlocal next_id
        c = Clause(c.literals, id=next_id, origin="input" if rec.rule == "input" else "derived",
                   age=next_id)
        next_id += 1
        state.derivation[c.id] = rec
        e = TraceEntry(c.id, c, rec, role)
        trace.entries.append(e)
        entries[c.id] = e
        return c

    def finish(verdict: Verdict, empty_id: Optional[int] = None) -> SearchResult:
        trace.verdict = verdict
        stats.given_count = state.given_count
        stats.processed_count = len(state.processed)
        stats.wall_time = time.perf_counter() - start
        stats.queue_picks = list(rr.picks)
        proof = extract_proof(trace, empty_id) if empty_id is not None else None
        return SearchResult(verdict, proof, trace, stats)

    u_keys: Set[tuple] = set()
    initial = []
    for c, role in problem.clauses:
        c = record(Clause(normalize_variables(c.literals)), InferenceRecord("input"), role)
        if not c.literals:
            return finish(Verdict.UNSATISFIABLE, c.id)
        key = canonical_literals(c.literals)
        if is_tautology(c) or key in u_keys:
            continue
        u_keys.add(key)
        initial.append(c)
    queues.insert(initial)
    key_of: Dict[int, tuple] = {c.id: canonical_literals(c.literals) for c in initial}

    while len(queues):
        if limits.max_processed is not None and len(state.processed) >= limits.max_processed:
            return finish(Verdict.RESOURCE_OUT)
        if limits.max_generated is not None and stats.generated_count >= limits.max_generated:
            return finish(Verdict.RESOURCE_OUT)
        if deadline is not None and time.perf_counter() > deadline:
            return finish(Verdict.RESOURCE_OUT)

        g, _ = select_given(queues, rr)
        state.given_count += 1
        u_keys.discard(key_of.pop(g.id))
        if state.subsumed(g):
            continue
        state.add_processed(g)
        entries[g.id].processed = True

        new: List[Tuple[Clause, InferenceRecord]] = []
        for f in factors(g):
            new.append((f, InferenceRecord("factoring", (g.id,))))
        for p in state.partners(g):
            for r in resolvents(g, rename_apart(p, counter)):
                new.append((r, InferenceRecord("resolution", (g.id, p.id))))

        kept = []
        for c, rec in new:
            stats.generated_count += 1
            if not c.literals:
                c = record(c, rec)
                return finish(Verdict.UNSATISFIABLE, c.id)
            if c.literals in u_keys or forward_simplify(c, state) == "discard":
                continue
            c = record(c, rec)
            u_keys.add(c.literals)
            key_of[c.id] = c.literals
            kept.append(c)
        queues.insert(kept)

    return finish(Verdict.SATURATED)


# --------------------------------------------------------------------------
# Proofs and training examples
# --------------------------------------------------------------------------


def extract_proof(trace: ProofTrace, empty_id: int) -> Set[int]:
    """Ancestor closure of ``empty_id`` under the derivation records."""
    by_id = trace.by_id()
    if empty_id not in by_id:
        raise KeyError(f"clause {empty_id} is not in the trace")
    out: Set[int] = set()
    stack = [empty_id]
    while stack:
        cid = stack.pop()
        if cid in out:
            continue
        out.add(cid)
        stack.extend(by_id[cid].record.parents)
    return out


def label_examples(trace: ProofTrace, proof_ids: Optional[Set[int]] = None,
                   negative_ratio: float = 1.0, seed: int = 0
                   ) -> Tuple[List[TrainingExample], List[TrainingExample]]:
    """Split the processed clauses of a successful search into positives
    (in the proof) and negatives (not in the proof).

    Unsuccessful traces yield no examples.  ``negative_ratio < 1`` keeps a
    seeded random fraction of the negatives.
    """
    if trace.verdict is not Verdict.UNSATISFIABLE:
        return [], []
    if proof_ids is None:
        proof_ids = extract_proof(trace, trace.empty_id)
    conj = trace.conjecture
    rng = random.Random(seed)
    pos, neg = [], []
    for e in trace.entries:
        if not e.processed:
            continue
        if e.id in proof_ids:
            pos.append(TrainingExample(e.clause, conj, "positive", trace.problem))
        elif negative_ratio >= 1.0 or rng.random() < negative_ratio:
            neg.append(TrainingExample(e.clause, conj, "negative", trace.problem))
    return pos, neg


# --------------------------------------------------------------------------
# Trace files
# --------------------------------------------------------------------------


def format_trace(trace: ProofTrace) -> str:
    lines = []
    for e in trace.entries:
        parents = ",".join(str(p) for p in e.record.parents) or "-"
        lines.append(f"{e.id}\t{e.role}\t{e.record.rule}\t{parents}\t"
                     f"{int(e.processed)}\t{format_clause(e.clause)}")
    lines.append(f"SZS status {trace.verdict.szs}")
    return "\n".join(lines) + "\n"


def write_trace(trace: ProofTrace, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(format_trace(trace))


def parse_trace(text: str, problem: str = "problem") -> ProofTrace:
    trace = ProofTrace(problem)
    status = None
    for n, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        if line.startswith("SZS status "):
            status = line.split()[2]
            continue
        parts = line.split("\t")
        if len(parts) != 6:
            raise ValueError(f"line {n}: expected 6 tab-separated fields")
        cid, role, rule, parents, processed, text_ = parts
        pids = () if parents == "-" else tuple(int(p) for p in parents.split(","))
        c = parse_formula(text_)
        c = Clause(c.literals, id=int(cid), origin="input" if rule == "input" else "derived",
                   age=int(cid))
        trace.entries.append(TraceEntry(int(cid), c, InferenceRecord(rule, pids), role,
                                        processed == "1"))
    if status is None:
        raise ValueError("trace has no SZS status line")
    trace.verdict = Verdict.from_szs(status)
    return trace


def read_trace(path) -> ProofTrace:
    path = Path(path)
    return parse_trace(path.read_text(), path.name[:-len(".trace")]
                       if path.name.endswith(".trace") else path.stem)


def replay(trace: ProofTrace) -> List[int]:
    """Re-run every recorded inference; return ids that were not reproduced."""
    from .logic import is_variant

    by_id = trace.by_id()
    counter = VariableCounter()
    bad = []
    for e in trace.entries:
        rec = e.record
        if rec.rule == "input":
            continue
        if rec.rule == "factoring":
            cands = factors(by_id[rec.parents[0]].clause)
        elif rec.rule == "resolution":
            g = by_id[rec.parents[0]].clause
            p = rename_apart(by_id[rec.parents[1]].clause, counter)
            cands = resolvents(g, p)
        else:
            bad.append(e.id)
            continue
        if not any(is_variant(c, e.clause) for c in cands):
            bad.append(e.id)
    return bad
