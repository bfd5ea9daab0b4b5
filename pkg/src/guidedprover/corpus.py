"""Desk-scale problem corpus generator.

Three parameterised families share one symbol vocabulary so that a model
trained on some problems can transfer to others:

* ``chain``: an implication chain from a start fact to the conjecture,
  buried among dead-end branches and a transitive-closure distractor;
* ``php``: pigeonhole-style placement problems;
* ``rand3``: random 3-CNF over ground atoms near the satisfiability
  threshold.
"""

from __future__ import annotations

import random
from pathlib import Path
from typing import List, Tuple

CHAIN_PREDS = [f"p{i}" for i in range(10)]
DEAD_PREDS = [f"q{i}" for i in range(6)]
CONSTS = ["a", "b", "c", "d", "e"]
FUNCS = ["f", "g"]


def _app(funcs: List[str], t: str) -> str:
    for f in funcs:
        t = f"{f}({t})"
    return t


def chain_problem(rng: random.Random, length: int, dead_ends: int, distractors: int) -> List[Tuple[str, str]]:
    preds = rng.sample(CHAIN_PREDS, min(length + 1, len(CHAIN_PREDS)))
    while len(preds) < length + 1:
        preds.append(rng.choice(CHAIN_PREDS))
    start = rng.choice(CONSTS[:3])
    steps = [[rng.choice(FUNCS) for _ in range(rng.randint(1, 2))] for _ in range(length)]
    out = [(f"{preds[0]}({start})", "axiom")]
    for i in range(length):
        out.append((f"~{preds[i]}(X) | {preds[i + 1]}({_app(steps[i], 'X')})", "axiom"))
    for _ in range(dead_ends):
        i = rng.randrange(length)
        q, q2 = rng.choice(DEAD_PREDS), rng.choice(DEAD_PREDS)
        out.append((f"~{preds[i]}(X) | {q}({rng.choice(FUNCS)}(X))", "axiom"))
        out.append((f"~{q}(X) | {q2}({rng.choice(FUNCS)}(X))", "axiom"))
        out.append((f"~{q2}(X) | ~{q}(X) | r(X,{rng.choice(CONSTS)})", "axiom"))
    # a relation closed under transitivity and congruence: cheap,
    # plentiful and never needed
    for _ in range(distractors):
        x, y = rng.sample(CONSTS, 2)
        out.append((f"r({x},{y})", "axiom"))
    if distractors:
        out.append(("~r(X,Y) | ~r(Y,Z) | r(X,Z)", "axiom"))
        out.append((f"~r(X,Y) | r({rng.choice(FUNCS)}(X),Y)", "axiom"))
        out.append((f"~r(X,Y) | {rng.choice(DEAD_PREDS)}(Y)", "axiom"))
    goal = start
    for st in steps:
        goal = _app(st, goal)
    out.append((f"~{preds[length]}({goal})", "negated_conjecture"))
    rng.shuffle(out)
    # keep the conjecture last, as in most benchmark files
    out.sort(key=lambda x: x[1] == "negated_conjecture")
    return out


def php_problem(rng: random.Random, holes: int) -> List[Tuple[str, str]]:
    pigeons = holes + 1
    ps = [f"c{i}" for i in range(pigeons)]
    hs = CONSTS[:holes]
    out = []
    for p in ps:
        out.append((" | ".join(f"in({p},{h})" for h in hs), "axiom"))
    for h in hs:
        for i in range(pigeons):
            for j in range(i + 1, pigeons):
                out.append((f"~in({ps[i]},{h}) | ~in({ps[j]},{h})", "axiom"))
    rng.shuffle(out)
    out[-1] = (out[-1][0], "negated_conjecture")
    return out


def rand3_problem(rng: random.Random, nvars: int, ratio: float = 4.3) -> List[Tuple[str, str]]:
    atoms = [f"v(c{i})" for i in range(nvars)]
    out = []
    for _ in range(int(round(ratio * nvars))):
        lits = []
        for a in rng.sample(atoms, 3):
            lits.append(a if rng.random() < 0.5 else "~" + a)
        out.append((" | ".join(lits), "axiom"))
    out[-1] = (out[-1][0], "negated_conjecture")
    return out


def render(name: str, clauses: List[Tuple[str, str]]) -> str:
    lines = [f"% {name}"]
    for i, (text, role) in enumerate(clauses):
        lines.append(f"cnf({name}_{i}, {role}, {text}).")
    return "\n".join(lines) + "\n"


def generate_corpus(out_dir, n: int = 200, seed: int = 0) -> List[Path]:
    """Write ``n`` problems to ``out_dir``; returns the paths written."""
    rng = random.Random(seed)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = []
    for k in range(n):
        r = rng.random()
        if r < 0.7:
            fam = "chain"
            clauses = chain_problem(rng, rng.randint(3, 10), rng.randint(0, 4), rng.randint(0, 6))
        elif r < 0.8:
            fam = "php"
            clauses = php_problem(rng, rng.choice([2, 2, 3]))
        else:
            fam = "rand3"
            clauses = rand3_problem(rng, rng.randint(8, 14))
        name = f"{fam}_{k:03d}"
        path = out_dir / f"{name}.p"
        path.write_text(render(name, clauses))
        paths.append(path)
    return paths
