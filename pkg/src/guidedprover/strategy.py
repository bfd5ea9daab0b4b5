"""Given-clause selection: weight functions, round-robin queues and the
solo / combined compositions with a trained model."""

from __future__ import annotations

import heapq
import re
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .boosting import Ensemble, clause_weight
from .features import FeatureConfig, HashSpec, clause_vector, conjecture_block
from .logic import Clause, clause_symbol_weight, clause_symbols

KINDS = {"SymbolCount": 2, "Age": 0, "ConjectureOverlap": 1, "Model": 0}


class StrategyError(ValueError):
    pass


@dataclass(frozen=True)
class Limits:
    wall_seconds: Optional[float] = None
    max_processed: Optional[int] = None
    max_generated: Optional[int] = None


@dataclass(frozen=True)
class WeightSpec:
    kind: str
    args: Tuple[float, ...] = ()
    model: Optional[Ensemble] = field(default=None, compare=False, repr=False)
    scaled: bool = False

    def __post_init__(self):
        if self.kind not in KINDS:
            raise StrategyError(f"unknown weight function {self.kind!r}")
        if len(self.args) != KINDS[self.kind]:
            raise StrategyError(f"{self.kind} takes {KINDS[self.kind]} arguments, got {len(self.args)}")
        if self.kind == "SymbolCount" and any(a <= 0 for a in self.args):
            raise StrategyError("SymbolCount weights must be positive")

    def text(self) -> str:
        if not self.args:
            return self.kind
        return f"{self.kind}({','.join(_num(a) for a in self.args)})"


def _num(x) -> str:
    return str(int(x)) if float(x).is_integer() else repr(float(x))


@dataclass(frozen=True)
class Strategy:
    """Ordered ``(frequency, weight function)`` queues, scheduled round robin.

    ``limits`` and ``name`` are non-selection settings carried along by the
    compositions.
    """

    queues: Tuple[Tuple[int, WeightSpec], ...]
    limits: Optional[Limits] = None
    name: str = "S"

    @property
    def total_frequency(self) -> int:
        return sum(f for f, _ in self.queues)

    def validate(self, require_fair: bool = True) -> None:
        if not self.queues:
            raise StrategyError("strategy has no queues")
        for f, spec in self.queues:
            if not isinstance(f, int) or f < 1:
                raise StrategyError(f"queue frequency must be a positive integer, got {f!r}")
            if spec.kind == "Model" and spec.model is None:
                raise StrategyError("Model queue requires a loaded ensemble")
        if require_fair and not any(spec.kind == "Age" for _, spec in self.queues):
            raise StrategyError("strategy needs an Age queue for fairness")

    def text(self) -> str:
        return ",".join(f"{f}*{spec.text()}" for f, spec in self.queues)

    @property
    def model_queues(self) -> List[int]:
        return [i for i, (_, s) in enumerate(self.queues) if s.kind == "Model"]


_QUEUE_RE = re.compile(r"\s*(\d+)\s*\*\s*([A-Za-z]+)\s*(?:\(([^)]*)\))?\s*$")


def parse_strategy(text: str, model: Optional[Ensemble] = None, name: str = "S") -> Strategy:
    """Parse ``2*SymbolCount(2,1),1*Age,1*ConjectureOverlap(-1)``.

    An optional outer ``(...)`` wrapper is accepted.
    """
    text = text.strip()
    if text.startswith("(") and text.endswith(")"):
        text = text[1:-1]
    parts = re.split(r",(?![^()]*\))", text)
    queues = []
    for part in parts:
        m = _QUEUE_RE.match(part)
        if not m:
            raise StrategyError(f"cannot parse queue {part.strip()!r}")
        freq, kind, args = int(m.group(1)), m.group(2), m.group(3)
        values = tuple(float(a) for a in args.split(",")) if args and args.strip() else ()
        spec = WeightSpec(kind, values, model if kind == "Model" else None)
        queues.append((freq, spec))
    s = Strategy(tuple(queues), name=name)
    s.validate(require_fair=False)
    return s


def base_strategy() -> Strategy:
    return Strategy((
        (2, WeightSpec("SymbolCount", (2, 1))),
        (1, WeightSpec("Age")),
        (1, WeightSpec("ConjectureOverlap", (-1,))),
    ))


def compose_solo(s: Strategy, m: Ensemble, pure: bool = False, scaled: bool = False) -> Strategy:
    """The model selects the given clauses.  An Age queue is kept for
    fairness unless ``pure`` is set."""
    model_q = (1, WeightSpec("Model", (), m, scaled))
    queues = (model_q,) if pure else (model_q, (1, WeightSpec("Age")))
    return Strategy(queues, s.limits, f"{s.name}_solo")


def compose_combined(s: Strategy, m: Ensemble, scaled: bool = False) -> Strategy:
    """Keep ``s``'s queues and add a Model queue with their total frequency."""
    F = s.total_frequency
    return Strategy(s.queues + ((F, WeightSpec("Model", (), m, scaled)),), s.limits,
                    f"{s.name}_combined")


# --------------------------------------------------------------------------
# Scheduling
# --------------------------------------------------------------------------


class RoundRobinState:
    def __init__(self, s: Strategy):
        self.schedule = [i for i, (f, _) in enumerate(s.queues) for _ in range(f)]
        self.position = 0
        self.picks = [0] * len(s.queues)


def next_queue(state: RoundRobinState, s: Strategy = None) -> int:
    """Queue index for the next pick; each queue gets ``frequency`` picks
    per cycle, in block order."""
    q = state.schedule[state.position % len(state.schedule)]
    state.position += 1
    state.picks[q] += 1
    return q


@dataclass
class SearchContext:
    """Per-problem data needed by weight functions."""

    conjecture: Sequence[Clause] = ()
    feature_config: Optional[FeatureConfig] = None
    _symbols: Optional[set] = None
    _block: Optional[dict] = None

    @property
    def conjecture_symbols(self) -> set:
        if self._symbols is None:
            out = set()
            for c in self.conjecture:
                out |= clause_symbols(c)
            self._symbols = out
        return self._symbols

    def block(self, cfg: FeatureConfig) -> dict:
        if self._block is None or self.feature_config != cfg:
            self.feature_config = cfg
            self._block = conjecture_block(self.conjecture, cfg) if cfg.conjecture_embedding else {}
        return self._block


def model_feature_config(m: Ensemble) -> FeatureConfig:
    meta = m.meta
    base = int(meta["hash_base"])
    embed = bool(meta.get("conjecture_embedding", int(meta.get("num_features", 0)) == 2 * base))
    return FeatureConfig(HashSpec(base), count_features=bool(meta.get("count_features", True)),
                         conjecture_embedding=embed)


def weights(spec: WeightSpec, clauses: Sequence[Clause], ctx: SearchContext) -> List[float]:
    """Weights of a batch of clauses under one weight function; lower is better."""
    k = spec.kind
    if k == "Age":
        return [float(c.age) for c in clauses]
    if k == "SymbolCount":
        fw, vw = spec.args
        return [float(clause_symbol_weight(c, fw, vw)) for c in clauses]
    if k == "ConjectureOverlap":
        (bonus,) = spec.args
        conj = ctx.conjecture_symbols
        return [float(clause_symbol_weight(c, 1, 1)) + bonus * len(clause_symbols(c) & conj)
                for c in clauses]
    if k == "Model":
        cfg = model_feature_config(spec.model)
        block = ctx.block(cfg)
        vecs = [clause_vector(c, ctx.conjecture, cfg, block) for c in clauses]
        probs = spec.model.probabilities(vecs)
        return [clause_weight(float(p), spec.scaled) for p in probs]
    raise StrategyError(f"unknown weight function {k!r}")


class ClauseQueues:
    """The unprocessed set U, ordered independently by every queue.

    Ties within a queue break by lower age, then lower id.  Removal is lazy.
    """

    def __init__(self, s: Strategy, ctx: SearchContext):
        self.strategy = s
        self.ctx = ctx
        self.heaps: List[list] = [[] for _ in s.queues]
        self.weight_of: List[Dict[int, float]] = [{} for _ in s.queues]
        self.members: Dict[int, Clause] = {}

    def __len__(self) -> int:
        return len(self.members)

    def __contains__(self, cid: int) -> bool:
        return cid in self.members

    def insert(self, clauses: Sequence[Clause]) -> None:
        if not clauses:
            return
        for qi, (_, spec) in enumerate(self.strategy.queues):
            heap, wmap = self.heaps[qi], self.weight_of[qi]
            for c, w in zip(clauses, weights(spec, clauses, self.ctx)):
                wmap[c.id] = w
                heapq.heappush(heap, (w, c.age, c.id))
        for c in clauses:
            self.members[c.id] = c

    def pop(self, qi: int) -> Clause:
        heap = self.heaps[qi]
        while heap:
            _, _, cid = heapq.heappop(heap)
            c = self.members.pop(cid, None)
            if c is not None:
                for wmap in self.weight_of:
                    wmap.pop(cid, None)
                return c
        raise IndexError("unprocessed set is empty")

    def key(self, qi: int, cid: int) -> tuple:
        c = self.members[cid]
        return (self.weight_of[qi][cid], c.age, c.id)


def select_given(queues: ClauseQueues, rr: RoundRobinState) -> Tuple[Clause, int]:
    """Remove and return the minimum clause of the scheduled queue."""
    if not len(queues):
        raise IndexError("select_given called with empty unprocessed set")
    qi = next_queue(rr, queues.strategy)
    return queues.pop(qi), qi
