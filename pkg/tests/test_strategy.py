import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from guidedprover.boosting import Ensemble, Tree
from guidedprover.features import HashSpec, hash_index
from guidedprover.logic import Clause, const, fn, lit
from guidedprover.saturation import saturate
from guidedprover.strategy import (ClauseQueues, Limits, RoundRobinState, SearchContext, Strategy,
                                   StrategyError, WeightSpec, base_strategy, compose_combined,
                                   compose_solo, next_queue, parse_strategy, select_given, weights)
from guidedprover.tptp import parse_problem
from strategies import clauses

a, b = const("a"), const("b")
BASE = 64


def logit(p):
    return math.log(p / (1 - p))


def stump_model(key, p_absent, p_present):
    """An ensemble giving probability p_present to clauses having the walk
    feature ``key`` and p_absent to all others."""
    f = hash_index(key, HashSpec(BASE))
    tree = Tree([f, -1, -1], [0.5, 0, 0], [1, -1, -1], [2, -1, -1],
                [0.0, logit(p_absent), logit(p_present)])
    meta = {"hash_base": BASE, "num_features": BASE, "count_features": False,
            "conjecture_embedding": False}
    return Ensemble([tree], 0.0, meta)


def picks(freqs, n):
    s = Strategy(tuple((f, WeightSpec("Age")) for f in freqs))
    rr = RoundRobinState(s)
    return [next_queue(rr, s) for _ in range(n)]


def test_round_robin_examples():
    assert picks([2, 1], 9) == [0, 0, 1] * 3
    assert picks([1], 5) == [0] * 5
    seq = picks([1, 1], 100)
    assert seq.count(0) == seq.count(1) == 50


@given(st.lists(st.integers(1, 5), min_size=1, max_size=5), st.integers(1, 6))
def test_round_robin_share_over_full_cycles(freqs, k):
    seq = picks(freqs, k * sum(freqs))
    assert [seq.count(i) for i in range(len(freqs))] == [k * f for f in freqs]


@given(st.lists(st.integers(1, 5), min_size=1, max_size=4), st.integers(0, 200))
def test_combined_half_share(freqs, n):
    base = Strategy(tuple((f, WeightSpec("Age")) for f in freqs))
    s = compose_combined(base, Ensemble())
    rr = RoundRobinState(s)
    seq = [next_queue(rr, s) for _ in range(n)]
    model = seq.count(len(freqs))
    F = sum(freqs)
    assert abs(model - (n - model)) <= 2 * F
    if n % (2 * F) == 0:
        assert model == n - model


def test_compositions():
    m = Ensemble()
    base = Strategy(((1, WeightSpec("SymbolCount", (1, 1))), (2, WeightSpec("Age"))),
                    Limits(wall_seconds=3, max_processed=7))
    s = compose_combined(base, m)
    assert [f for f, _ in s.queues] == [1, 2, 3]
    assert s.queues[-1][1].kind == "Model" and s.queues[-1][1].model is m
    one = compose_combined(Strategy(((1, WeightSpec("Age")),)), m)
    assert [f for f, _ in one.queues] == [1, 1]
    solo = compose_solo(base, m)
    assert [(f, q.kind) for f, q in solo.queues] == [(1, "Model"), (1, "Age")]
    assert solo.limits == base.limits == s.limits
    pure = compose_solo(base, m, pure=True)
    assert [q.kind for _, q in pure.queues] == ["Model"]
    with pytest.raises(StrategyError):
        pure.validate()


def test_parse_strategy_text():
    s = parse_strategy("2*SymbolCount(2,1),1*Age,1*ConjectureOverlap(-1)")
    assert s.queues == base_strategy().queues
    assert s.text() == "2*SymbolCount(2,1),1*Age,1*ConjectureOverlap(-1)"
    assert parse_strategy("(1*Age, 3*SymbolCount(1,2))").total_frequency == 4
    for bad in ["", "2*Foo", "0*Age", "1*SymbolCount(1)", "1*SymbolCount(0,1)", "Age"]:
        with pytest.raises(StrategyError):
            parse_strategy(bad).validate()
    with pytest.raises(StrategyError, match="ensemble"):
        parse_strategy("1*Model,1*Age").validate()


def _queues(spec, cs, conjecture=()):
    s = Strategy(((1, spec),))
    q = ClauseQueues(s, SearchContext(list(conjecture)))
    q.insert([Clause(c.literals, id=i, age=i) for i, c in enumerate(cs)])
    return q, RoundRobinState(s)


def test_select_by_age_and_symbol_count():
    cs = [Clause((lit(True, "p", fn("f", a)),)), Clause((lit(True, "p", a),))]
    q, rr = _queues(WeightSpec("Age"), cs)
    assert select_given(q, rr)[0].id == 0
    q, rr = _queues(WeightSpec("SymbolCount", (1, 1)), cs)
    assert weights(WeightSpec("SymbolCount", (1, 1)), cs, SearchContext()) == [3.0, 2.0]
    assert select_given(q, rr)[0].id == 1
    with pytest.raises(IndexError):
        select_given(*_queues(WeightSpec("Age"), []))


def test_select_by_model():
    m = stump_model("V:p/a/□", 0.3, 0.9)
    c1, c2 = Clause((lit(True, "p", a),)), Clause((lit(True, "q", a),))
    assert hash_index("V:p/a/□", HashSpec(BASE)) != hash_index("V:q/a/□", HashSpec(BASE))
    spec = WeightSpec("Model", (), m)
    assert weights(spec, [c1, c2], SearchContext()) == [1.0, 10.0]
    q, rr = _queues(spec, [c2, c1])
    assert select_given(q, rr)[0].literals == c1.literals
    # equal weights fall back to age
    q, rr = _queues(spec, [c1, c1, c2])
    assert select_given(q, rr)[0].id == 0


def test_conjecture_overlap_weight():
    conj = [Clause((lit(False, "p", fn("f", a)),))]
    cs = [Clause((lit(True, "p", a),)), Clause((lit(True, "q", b),)),
          Clause((lit(True, "p", fn("f", a)), lit(True, "p", a)))]
    w = weights(WeightSpec("ConjectureOverlap", (-1,)), cs, SearchContext(conj))
    # symbol count minus one per distinct shared symbol
    assert w == [2 - 2, 2 - 0, 5 - 3]


@settings(max_examples=60, deadline=None)
@given(st.lists(clauses(3), min_size=1, max_size=25))
def test_monotone_queue_discipline(cs):
    s = base_strategy()
    ctx = SearchContext([Clause((lit(False, "p", a),))])
    q = ClauseQueues(s, ctx)
    q.insert([Clause(c.literals, id=i, age=i) for i, c in enumerate(cs)])
    rr = RoundRobinState(s)
    while len(q):
        scheduled = rr.schedule[rr.position % len(rr.schedule)]
        best = min(q.key(scheduled, cid) for cid in q.members)
        c, qi = select_given(q, rr)
        assert qi == scheduled
        assert (q.weight_of[qi].get(c.id), c.age, c.id)[1:] == best[1:]


def test_pure_solo_selects_only_by_model():
    text = """cnf(c1, axiom, p(a)). cnf(c2, axiom, ~p(X) | p(f(X))). cnf(c3, axiom, ~p(X) | q(X)).
              cnf(c4, negated_conjecture, ~q(f(f(f(a)))))."""
    m = stump_model("V:q/f/f", 0.2, 0.8)
    s = compose_solo(base_strategy(), m, pure=True)
    res = saturate(parse_problem(text), s, Limits(max_processed=200), require_fair=False)
    assert res.stats.queue_picks == [res.stats.given_count]


def test_combined_search_splits_picks():
    text = """cnf(c1, axiom, p(a)). cnf(c2, axiom, ~p(X) | p(f(X))). cnf(c3, axiom, ~p(X) | q(g(X))).
              cnf(c4, negated_conjecture, ~q(a))."""
    s = compose_combined(base_strategy(), stump_model("V:p/f/f", 0.4, 0.6))
    res = saturate(parse_problem(text), s, Limits(max_processed=100))
    assert res.verdict.value == "ResourceOut"
    # schedule 0,0,1,2,M,M,M,M: 12 full cycles then 4 base picks
    assert res.stats.given_count == 100
    assert res.stats.queue_picks == [26, 13, 13, 48]
