"""Command line entry point.

Exit codes: 0 success, 1 usage error, 2 I/O or input-format error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .boosting import TrainParams, load_model
from .features import FeatureConfig, HashSpec
from .loop import (LoopConfig, NoTrainingData, features_from_traces, format_report, read_results,
                   report_delta, run_loop, train_file)
from .saturation import saturate, write_trace
from .strategy import Limits, StrategyError, compose_combined, compose_solo, parse_strategy
from .tptp import TPTPError, format_clause, parse_file

USAGE = 1
IO = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE, f"{self.prog}: error: {message}\n")


def _limits(a) -> Limits:
    return Limits(wall_seconds=a.timeout, max_processed=a.max_processed,
                  max_generated=getattr(a, "max_generated", None))


def cmd_prove(a) -> int:
    problem = parse_file(a.file)
    try:
        s = parse_strategy(a.strategy)
    except StrategyError as e:
        raise UsageError(str(e))
    require_fair = True
    if a.model:
        m = load_model(a.model)
        if a.mode == "combined":
            s = compose_combined(s, m, scaled=a.scaled)
        else:
            s = compose_solo(s, m, pure=a.mode == "pure-solo", scaled=a.scaled)
            require_fair = a.mode != "pure-solo"
    elif a.mode != "combined" or a.scaled:
        raise UsageError("--mode and --scaled need --model")
    try:
        res = saturate(problem, s, _limits(a), require_fair=require_fair)
    except StrategyError as e:
        raise UsageError(str(e))
    print(f"% SZS status {res.verdict.szs} for {problem.name}")
    st = res.stats
    print(f"% given {st.given_count}, processed {st.processed_count}, generated "
          f"{st.generated_count}, {st.wall_time:.3f}s, {st.generated_per_second:.0f} generated/s")
    if res.proof is not None:
        by_id = res.trace.by_id()
        print(f"% SZS output start CNFRefutation for {problem.name}")
        for cid in sorted(res.proof):
            e = by_id[cid]
            src = e.role if e.record.rule == "input" else \
                f"{e.record.rule}({','.join(map(str, e.record.parents))})"
            print(f"{cid}. {format_clause(e.clause)}  [{src}]")
        print(f"% SZS output end CNFRefutation for {problem.name}")
    if a.dump_trace:
        write_trace(res.trace, a.dump_trace)
    return 0


def cmd_features(a) -> int:
    cfg = FeatureConfig(HashSpec(a.hash_base), count_features=not a.no_counts,
                        conjecture_embedding=not a.no_conjecture)
    n = features_from_traces(a.traces, a.out, cfg)
    print(f"wrote {n} examples to {a.out}")
    return 0


def _train_params(a) -> TrainParams:
    return TrainParams(num_trees=a.trees, max_depth=a.depth, learning_rate=a.eta,
                       l2_lambda=a.l2, gamma=a.gamma, min_examples_per_leaf=a.min_leaf)


def cmd_train(a) -> int:
    _, rep = train_file(a.data, _train_params(a), a.out)
    print(f"trained {a.trees} trees: training error {rep.training_error:.4f}, "
          f"final loss {rep.losses[-1]:.4f}, {rep.wall_time:.1f}s")
    return 0


def cmd_loop(a) -> int:
    cfg = LoopConfig(Path(a.corpus), a.base_strategy, a.iterations, Path(a.workdir), _limits(a),
                     _train_params(a), FeatureConfig(HashSpec(a.hash_base)), a.jobs)
    try:
        parse_strategy(a.base_strategy).validate()
    except StrategyError as e:
        raise UsageError(str(e))
    history = run_loop(cfg)
    for rec in history:
        print((Path(a.workdir) / "reports" / f"iter{rec.index}.tsv").read_text(), end="")
    return 0


def cmd_report(a) -> int:
    d = report_delta(read_results(a.baseline), read_results(a.current))
    print(format_report([(Path(a.current).stem, d)]), end="")
    return 0


def cmd_generate(a) -> int:
    from .corpus import generate_corpus

    paths = generate_corpus(a.out, a.n, a.seed)
    print(f"wrote {len(paths)} problems to {a.out}")
    return 0


def _add_limits(p, timeout=None, processed=None):
    p.add_argument("--timeout", type=float, default=timeout, help="wall-clock seconds per problem")
    p.add_argument("--max-processed", type=int, default=processed)
    p.add_argument("--max-generated", type=int, default=None)


def _add_train(p):
    p.add_argument("--trees", type=int, default=200)
    p.add_argument("--depth", type=int, default=9)
    p.add_argument("--eta", type=float, default=0.3)
    p.add_argument("--lambda", dest="l2", type=float, default=1.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--min-leaf", type=int, default=1)


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="guidedprover", description=__doc__.splitlines()[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("prove", help="run the prover on one CNF problem")
    p.add_argument("file")
    p.add_argument("--strategy", default="2*SymbolCount(2,1),1*Age,1*ConjectureOverlap(-1)")
    p.add_argument("--model")
    p.add_argument("--mode", choices=["solo", "combined", "pure-solo"], default="combined")
    p.add_argument("--scaled", action="store_true", help="graded model weights 1 + 9(1-p)")
    _add_limits(p, timeout=10.0)
    p.add_argument("--dump-trace")
    p.set_defaults(func=cmd_prove)

    p = sub.add_parser("features", help="turn proof traces into training data")
    p.add_argument("--traces", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--hash-base", type=int, default=2 ** 15)
    p.add_argument("--no-conjecture", action="store_true")
    p.add_argument("--no-counts", action="store_true")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("train", help="fit a boosted tree model")
    p.add_argument("--data", required=True)
    p.add_argument("--out", required=True)
    _add_train(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("loop", help="iterate proving and learning over a corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--base-strategy", default="2*SymbolCount(2,1),1*Age,1*ConjectureOverlap(-1)")
    p.add_argument("--iterations", type=int, default=2)
    p.add_argument("--workdir", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--hash-base", type=int, default=2 ** 15)
    _add_limits(p, timeout=30.0, processed=5000)
    _add_train(p)
    p.set_defaults(func=cmd_loop)

    p = sub.add_parser("report", help="compare two result files")
    p.add_argument("--baseline", required=True)
    p.add_argument("--current", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("generate-corpus", help="write the synthetic benchmark corpus")
    p.add_argument("--out", required=True)
    p.add_argument("-n", type=int, default=200)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_generate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    try:
        a = ap.parse_args(argv)
    except SystemExit as e:  # --help exits 0, usage errors exit 1
        return e.code
    logging.basicConfig(level=logging.INFO if a.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return a.func(a)
    except UsageError as e:
        print(f"guidedprover {a.command}: {e}", file=sys.stderr)
        return USAGE
    except (OSError, TPTPError, ValueError, NoTrainingData) as e:
        print(f"guidedprover {a.command}: {e}", file=sys.stderr)
        return IO


if __name__ == "__main__":
    sys.exit(main())
