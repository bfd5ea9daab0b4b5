import pytest

from guidedprover.logic import Clause, const, is_variant, lit
from guidedprover.saturation import (InferenceRecord, ProofState, ProofTrace, TraceEntry, Verdict,
                                     extract_proof, factors, format_trace, forward_simplify,
                                     label_examples, parse_trace, read_trace, replay, resolvents,
                                     saturate, write_trace)
from guidedprover.strategy import ClauseQueues, Limits, SearchContext, base_strategy, parse_strategy
from guidedprover.tptp import parse_problem
from oracles import ancestors, ground_truth

a, b = const("a"), const("b")


def C(*lits):
    return Clause(tuple(lits))


def prob(text):
    return parse_problem(text)


# -- single inferences ------------------------------------------------------------


def test_resolvent_single_unifier():
    g = C(lit(True, "p", "X"), lit(True, "q", "X"))
    out = resolvents(g, C(lit(False, "p", a)))
    assert [c.literals for c in out] == [(lit(True, "q", a),)]


def test_resolvent_none_without_complementary_pair():
    assert resolvents(C(lit(True, "p", a)), C(lit(True, "q", b))) == []


def test_resolvents_one_per_literal_pair():
    out = resolvents(C(lit(True, "p", "X")), C(lit(False, "p", a), lit(False, "p", b)))
    assert sorted(c.literals for c in out) == sorted([(lit(False, "p", b),), (lit(False, "p", a),)])


def test_resolvent_merges_identical_literals():
    out = resolvents(C(lit(True, "p", "X"), lit(True, "q", a)), C(lit(False, "p", a), lit(True, "q", a)))
    assert [c.literals for c in out] == [(lit(True, "q", a),)]


def test_factor_examples():
    assert [c.literals for c in factors(C(lit(True, "p", "X"), lit(True, "p", a)))] == [(lit(True, "p", a),)]
    assert factors(C(lit(True, "p", a), lit(False, "p", a))) == []
    out = factors(C(lit(True, "p", "X"), lit(True, "p", "Y"), lit(True, "q")))
    assert len(out) == 1
    assert is_variant(out[0], C(lit(True, "p", "X"), lit(True, "q")))


def _state(*processed):
    st = ProofState(ClauseQueues(base_strategy(), SearchContext()))
    for i, c in enumerate(processed):
        st.add_processed(Clause(c.literals, id=i, age=i))
    return st


def test_forward_simplify():
    st = _state(C(lit(True, "p", "X")))
    assert forward_simplify(C(lit(True, "q", "X"), lit(False, "q", "X")), st) == "discard"
    assert forward_simplify(C(lit(True, "p", a), lit(True, "r")), st) == "discard"
    assert forward_simplify(C(lit(True, "q", a)), st) == "keep"


# -- whole searches ----------------------------------------------------------------


def test_unit_refutation():
    res = saturate(prob("cnf(c1, axiom, p(a)). cnf(c2, negated_conjecture, ~p(a))."), base_strategy())
    assert res.verdict is Verdict.UNSATISFIABLE
    assert res.proof == {0, 1, 2}
    assert res.stats.given_count <= 2


def test_single_fact_saturates():
    res = saturate(prob("cnf(c1, axiom, p(a))."), base_strategy())
    assert res.verdict is Verdict.SATURATED and res.proof is None


def test_propositional_four_clauses():
    text = "cnf(c1,axiom,a|b). cnf(c2,axiom,~a|b). cnf(c3,axiom,a|~b). cnf(c4,negated_conjecture,~a|~b)."
    p = prob(text)
    assert not ground_truth([c.literals for c, _ in p.clauses])
    res = saturate(p, base_strategy())
    assert res.verdict is Verdict.UNSATISFIABLE
    assert replay(res.trace) == []


def test_empty_input_clause_is_immediate_refutation():
    res = saturate(prob("cnf(c1, axiom, p(a)). cnf(c2, axiom, $false)."), base_strategy())
    assert res.verdict is Verdict.UNSATISFIABLE and res.proof == {1}


def test_limits_give_resource_out():
    text = "cnf(c1, axiom, p(a)). cnf(c2, axiom, ~p(X) | p(f(X))). cnf(c3, negated_conjecture, ~q(a))."
    res = saturate(prob(text), base_strategy(), Limits(max_processed=20))
    assert res.verdict is Verdict.RESOURCE_OUT and res.stats.processed_count == 20
    res = saturate(prob(text), base_strategy(), Limits(max_generated=15))
    assert res.verdict is Verdict.RESOURCE_OUT and res.stats.generated_count >= 15
    res = saturate(prob(text), base_strategy(), Limits(wall_seconds=0.05))
    assert res.verdict is Verdict.RESOURCE_OUT


def test_strategy_without_age_rejected_before_search():
    with pytest.raises(ValueError, match="fairness"):
        saturate(prob("cnf(c1, axiom, p(a))."), parse_strategy("1*SymbolCount(1,1)"))


def test_ids_ages_and_parent_order():
    text = "cnf(c1,axiom,p(a)). cnf(c2,axiom,~p(X)|q(X)). cnf(c3,axiom,~q(X)|r(X)). cnf(c4,negated_conjecture,~r(a))."
    res = saturate(prob(text), base_strategy())
    ids = [e.id for e in res.trace.entries]
    assert ids == list(range(len(ids)))
    assert [e.clause.age for e in res.trace.entries] == ids
    for e in res.trace.entries:
        assert all(p < e.id for p in e.record.parents)
        assert len(e.record.parents) == {"input": 0, "factoring": 1, "resolution": 2}[e.record.rule]
    assert [e.role for e in res.trace.entries[:4]] == ["axiom"] * 3 + ["negated_conjecture"]


def test_given_clauses_are_processed_once():
    text = "cnf(c1,axiom,p(X)|p(Y)). cnf(c2,negated_conjecture,~p(U)|~p(V))."
    res = saturate(prob(text), base_strategy())
    assert res.verdict is Verdict.UNSATISFIABLE
    assert res.stats.processed_count == len(res.trace.processed_ids())
    assert res.stats.given_count >= res.stats.processed_count
    assert sum(res.stats.queue_picks) == res.stats.given_count


# -- proofs and labels ---------------------------------------------------------------


def _trace(parents, processed, empty):
    t = ProofTrace("t", verdict=Verdict.UNSATISFIABLE)
    for cid in sorted(parents):
        ps = parents[cid]
        rule = "input" if not ps else "resolution"
        c = Clause(() if cid == empty else (lit(True, f"p{cid}"),), id=cid, age=cid)
        t.entries.append(TraceEntry(cid, c, InferenceRecord(rule, ps), "axiom" if not ps else "derived",
                                    cid in processed))
    return t


def test_extract_proof_cases():
    linear = _trace({1: (), 2: (), 3: (1, 2)}, {1, 2}, 3)
    assert extract_proof(linear, 3) == {1, 2, 3}
    branch = _trace({1: (), 2: (), 4: (), 3: (1, 2)}, {1, 2, 4}, 3)
    assert 4 not in extract_proof(branch, 3)
    diamond = _trace({1: (), 2: (1, 1), 5: (1,), 3: (2, 5)}, {1, 2, 5}, 3)
    assert extract_proof(diamond, 3) == {1, 2, 3, 5}
    with pytest.raises(KeyError):
        extract_proof(linear, 99)


def test_label_examples_cases():
    t = _trace({1: (), 2: (), 3: (), 4: (), 5: (), 6: (1, 3)}, {1, 2, 3, 4, 5}, 6)
    pos, neg = label_examples(t, {1, 3, 6})
    assert {e.clause.id for e in pos} == {1, 3}
    assert {e.clause.id for e in neg} == {2, 4, 5}
    assert all(e.label == "positive" for e in pos) and all(e.label == "negative" for e in neg)
    pos, neg = label_examples(t, {1, 2, 3, 4, 5, 6})
    assert len(pos) == 5 and neg == []
    t.verdict = Verdict.RESOURCE_OUT
    assert label_examples(t) == ([], [])


def test_negative_subsampling_is_seeded():
    t = _trace({i: () for i in range(1, 40)} | {40: (1, 2)}, set(range(1, 40)), 40)
    _, all_neg = label_examples(t, {1, 2, 40})
    _, n1 = label_examples(t, {1, 2, 40}, negative_ratio=0.5, seed=3)
    _, n2 = label_examples(t, {1, 2, 40}, negative_ratio=0.5, seed=3)
    assert [e.clause.id for e in n1] == [e.clause.id for e in n2]
    assert 0 < len(n1) < len(all_neg)


def test_labels_on_real_search_match_independent_ancestry():
    text = "cnf(c1,axiom,p(a)|q(a)). cnf(c2,axiom,~p(X)|r(X)). cnf(c3,axiom,~q(X)|r(X)). cnf(c4,axiom,s(b)). cnf(c5,negated_conjecture,~r(a))."
    res = saturate(prob(text), base_strategy())
    t = res.trace
    parents = {e.id: e.record.parents for e in t.entries}
    anc = ancestors(parents, t.empty_id)
    pos, neg = label_examples(t)
    processed = t.processed_ids()
    assert {e.clause.id for e in pos} == processed & anc
    assert {e.clause.id for e in neg} == processed - anc
    assert all(e.conjecture_context == t.conjecture for e in pos + neg)


# -- traces ---------------------------------------------------------------------


def test_trace_round_trip(tmp_path):
    text = "cnf(c1,axiom,p(a)|q(a)). cnf(c2,axiom,~p(X)|r(X)). cnf(c3,axiom,~q(X)|r(X)). cnf(c4,negated_conjecture,~r(a))."
    res = saturate(prob(text), base_strategy())
    path = tmp_path / "x.trace"
    write_trace(res.trace, path)
    lines = path.read_text().splitlines()
    assert lines[-1] == "SZS status Unsatisfiable"
    assert lines[0].split("\t")[:5] == ["0", "axiom", "input", "-", "1"]
    back = read_trace(path)
    assert back.problem == "x"
    assert format_trace(back) == format_trace(res.trace)
    assert replay(back) == []


def test_saturated_trace_status_line():
    res = saturate(prob("cnf(c1, axiom, p(a))."), base_strategy())
    assert format_trace(res.trace).splitlines()[-1] == "SZS status Satisfiable"
    assert parse_trace(format_trace(res.trace)).verdict is Verdict.SATURATED


def test_replay_detects_tampering():
    text = "cnf(c1,axiom,p(a)). cnf(c2,axiom,~p(X)|q(X)). cnf(c3,negated_conjecture,~q(a))."
    res = saturate(prob(text), base_strategy())
    t = res.trace
    bad = next(e for e in t.entries if e.record.rule == "resolution" and e.clause.literals)
    bad.clause = C(lit(True, "zzz"))
    assert bad.id in replay(t)


def test_malformed_trace_rejected():
    with pytest.raises(ValueError):
        parse_trace("0\taxiom\tinput\t-\t1\tp(a)\n")
    with pytest.raises(ValueError):
        parse_trace("0\taxiom\tinput\n SZS status Unsatisfiable\n")


def test_search_is_deterministic():
    text = "cnf(c1,axiom,p(X)|p(Y)). cnf(c2,axiom,q(a)|~p(a)). cnf(c3,negated_conjecture,~p(U)|~q(V))."
    r1 = saturate(prob(text), base_strategy())
    r2 = saturate(prob(text), base_strategy())
    assert format_trace(r1.trace) == format_trace(r2.trace)


def test_duplicate_input_literals_are_factored():
    res = saturate(prob("cnf(c1, axiom, r | r). cnf(c2, negated_conjecture, ~r | ~r | ~r)."), base_strategy())
    assert res.verdict is Verdict.UNSATISFIABLE
    assert [c.literals for c in factors(C(lit(True, "r"), lit(True, "r")))] == [(lit(True, "r"),)]
