"""Corpus runs and the iterated prove / learn loop.

Workdir layout::

    config.json
    runs/<iter>/<strategy>.tsv
    traces/<iter>/<strategy>/<problem>.trace
    data/iterN.libsvm (+ .meta.json)
    models/iterN.json
    reports/iterN.tsv

``<iter>`` is ``base`` for the baseline sweep and ``N`` for the strategies
guided by model ``M^N``.
"""

from __future__ import annotations

import json
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .boosting import Ensemble, TrainParams, load_model, model_to_json, train
from .features import FeatureConfig, SparseVector, clause_vector, conjecture_block
from .features import read_examples, write_examples
from .saturation import Verdict, label_examples, read_trace, saturate, write_trace
from .strategy import Limits, Strategy, compose_combined, compose_solo, parse_strategy
from .tptp import TPTPError, parse_file

log = logging.getLogger(__name__)

ERROR = "Error"


class NoTrainingData(RuntimeError):
    pass


@dataclass
class Corpus:
    root: Path
    problems: List[Path]
    name: str = ""

    @classmethod
    def from_dir(cls, root, pattern: str = "*.p") -> "Corpus":
        root = Path(root)
        problems = sorted(root.glob(pattern))
        if not problems:
            raise FileNotFoundError(f"no problems matching {pattern!r} in {root}")
        return cls(root, problems, root.name)


@dataclass
class RunResult:
    problem: str
    verdict: str
    wall_time: float = 0.0
    given_count: int = 0
    generated_count: int = 0
    trace_path: Optional[str] = None

    @property
    def solved(self) -> bool:
        return self.verdict == Verdict.UNSATISFIABLE.value


@dataclass
class DeltaReport:
    solved: int
    gain_pct: float
    plus: int
    minus: int


@dataclass
class IterationRecord:
    index: int
    model_path: str
    runs: Dict[str, List[RunResult]]
    cumulative_solved: Set[str] = field(default_factory=set)


# --------------------------------------------------------------------------
# Running a corpus
# --------------------------------------------------------------------------


def _run_one(args) -> RunResult:
    path, strategy, limits, trace_dir = args
    name = Path(path).stem
    t0 = time.perf_counter()
    try:
        problem = parse_file(path)
    except (OSError, TPTPError, UnicodeDecodeError) as e:
        log.warning("cannot read %s: %s", path, e)
        return RunResult(name, ERROR, time.perf_counter() - t0)
    res = saturate(problem, strategy, limits)
    trace_path = None
    if res.verdict is Verdict.UNSATISFIABLE and trace_dir is not None:
        trace_path = str(Path(trace_dir) / f"{name}.trace")
        write_trace(res.trace, trace_path)
    return RunResult(name, res.verdict.value, res.stats.wall_time, res.stats.given_count,
                     res.stats.generated_count, trace_path)


def run_corpus(corpus: Corpus, strategy: Strategy, limits: Limits, jobs: int = 1,
               trace_dir=None) -> List[RunResult]:
    """One result per problem, in corpus order.  Traces of solved problems
    are written to ``trace_dir``."""
    if trace_dir is not None:
        Path(trace_dir).mkdir(parents=True, exist_ok=True)
    tasks = [(str(p), strategy, limits, trace_dir) for p in corpus.problems]
    if jobs <= 1:
        return [_run_one(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(_run_one, tasks, chunksize=1))


RESULT_HEADER = "problem\tverdict\twall_time\tgiven_count\tgenerated_count\ttrace_path"


def write_results(results: Sequence[RunResult], path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [RESULT_HEADER]
    for r in results:
        lines.append(f"{r.problem}\t{r.verdict}\t{r.wall_time:.4f}\t{r.given_count}\t"
                     f"{r.generated_count}\t{r.trace_path or '-'}")
    path.write_text("\n".join(lines) + "\n")


def read_results(path) -> List[RunResult]:
    lines = Path(path).read_text().splitlines()
    if not lines or lines[0] != RESULT_HEADER:
        raise ValueError(f"{path}: not a results file")
    out = []
    for line in lines[1:]:
        if not line.strip():
            continue
        p, v, t, g, n, tp = line.split("\t")
        out.append(RunResult(p, v, float(t), int(g), int(n), None if tp == "-" else tp))
    return out


# --------------------------------------------------------------------------
# Reports
# --------------------------------------------------------------------------


def solved_set(results: Iterable[RunResult]) -> Set[str]:
    return {r.problem for r in results if r.solved}


def report_delta(baseline: Sequence[RunResult], current: Sequence[RunResult]) -> DeltaReport:
    """Solved count, percentage gain and gained / lost problems w.r.t. the
    baseline on the same corpus."""
    if {r.problem for r in baseline} != {r.problem for r in current}:
        raise ValueError("baseline and current results cover different problems")
    return delta_from_counts(solved_set(baseline), solved_set(current))


def delta_from_counts(baseline_solved: Set[str], current_solved: Set[str]) -> DeltaReport:
    plus = len(current_solved - baseline_solved)
    minus = len(baseline_solved - current_solved)
    return delta_from_numbers(len(baseline_solved), len(current_solved), plus, minus)


def delta_from_numbers(baseline: int, solved: int, plus: int, minus: int) -> DeltaReport:
    if plus - minus != solved - baseline:
        raise ValueError("inconsistent counts: plus - minus must equal solved - baseline")
    if baseline:
        gain = 100.0 * (solved - baseline) / baseline
    else:
        gain = 0.0 if solved == 0 else float("inf")
    return DeltaReport(solved, gain, plus, minus)


REPORT_HEADER = "strategy\tsolved\tgain_pct\tplus\tminus"


def format_report(rows: Sequence[Tuple[str, DeltaReport]]) -> str:
    lines = [REPORT_HEADER]
    for name, d in rows:
        lines.append(f"{name}\t{d.solved}\t{d.gain_pct:+.1f}\t{d.plus}\t{d.minus}")
    return "\n".join(lines) + "\n"


# --------------------------------------------------------------------------
# Training data
# --------------------------------------------------------------------------


def trace_examples(trace_path, cfg: FeatureConfig, negative_ratio: float = 1.0
                   ) -> List[Tuple[int, SparseVector]]:
    """Labeled vectors of one trace, exact duplicates removed (first kept)."""
    trace = read_trace(trace_path)
    pos, neg = label_examples(trace, negative_ratio=negative_ratio)
    block = conjecture_block(trace.conjecture, cfg) if cfg.conjecture_embedding else None
    seen = set()
    out = []
    for label, group in ((1, pos), (0, neg)):
        for ex in group:
            v = clause_vector(ex.clause, ex.conjecture_context, cfg, block)
            key = (label, tuple(sorted(v.entries.items())))
            if key in seen:
                continue
            seen.add(key)
            out.append((label, v))
    return out


def accumulate_training(history: Sequence[IterationRecord], base_runs: Sequence[RunResult],
                        cfg: FeatureConfig, out_path, negative_ratio: float = 1.0) -> int:
    """Write the union of examples from every successful trace of the base
    runs and of all runs recorded in ``history``; returns the example count."""
    traces = [r.trace_path for r in base_runs if r.solved and r.trace_path]
    for rec in history:
        for name in sorted(rec.runs):
            traces.extend(r.trace_path for r in rec.runs[name] if r.solved and r.trace_path)
    if not traces:
        raise NoTrainingData("no training data: no solved problems")

    def examples():
        for tp in traces:
            yield from trace_examples(tp, cfg, negative_ratio)

    return write_examples(out_path, examples(), cfg, {"traces": len(traces)})


def features_from_traces(trace_dir, out_path, cfg: FeatureConfig) -> int:
    traces = sorted(Path(trace_dir).rglob("*.trace"))
    if not traces:
        raise NoTrainingData(f"no traces under {trace_dir}")

    def examples():
        for tp in traces:
            yield from trace_examples(tp, cfg)

    return write_examples(out_path, examples(), cfg, {"traces": len(traces)})


def train_file(data_path, params: TrainParams, out_path) -> Tuple[Ensemble, object]:
    data, cfg = read_examples(data_path)
    if not data:
        raise NoTrainingData(f"{data_path} holds no examples")
    model, report = train([(v, y) for v, y in data], params, hash_base=cfg.hash.base)
    model.meta["count_features"] = cfg.count_features
    model.meta["conjecture_embedding"] = cfg.conjecture_embedding
    Path(out_path).parent.mkdir(parents=True, exist_ok=True)
    Path(out_path).write_text(model_to_json(model))
    return model, report


# --------------------------------------------------------------------------
# The loop
# --------------------------------------------------------------------------


@dataclass
class LoopConfig:
    corpus: Path
    base_strategy: str
    iterations: int
    workdir: Path
    limits: Limits = field(default_factory=Limits)
    train_params: TrainParams = field(default_factory=TrainParams)
    features: FeatureConfig = field(default_factory=FeatureConfig)
    jobs: int = 1

    def to_json(self) -> dict:
        # iterations and jobs may change between resumed runs
        return {
            "corpus": str(Path(self.corpus).resolve()),
            "base_strategy": self.base_strategy,
            "limits": asdict(self.limits),
            "train_params": asdict(self.train_params),
            "features": self.features.to_meta(),
        }


def _check_config(cfg: LoopConfig) -> None:
    wd = Path(cfg.workdir)
    wd.mkdir(parents=True, exist_ok=True)
    path = wd / "config.json"
    doc = cfg.to_json()
    if path.exists():
        old = json.loads(path.read_text())
        if old != doc:
            raise ValueError(f"{path} belongs to a different experiment; use a new workdir")
    else:
        path.write_text(json.dumps(doc, indent=1, sort_keys=True) + "\n")


def _sweep(cfg: LoopConfig, corpus: Corpus, strategy: Strategy, iter_name: str) -> List[RunResult]:
    wd = Path(cfg.workdir)
    res_path = wd / "runs" / iter_name / f"{strategy.name}.tsv"
    if res_path.exists():
        return read_results(res_path)
    trace_dir = wd / "traces" / iter_name / strategy.name
    t0 = time.perf_counter()
    results = run_corpus(corpus, strategy, cfg.limits, cfg.jobs, trace_dir)
    log.info("%s/%s: %d solved in %.1fs", iter_name, strategy.name,
             len(solved_set(results)), time.perf_counter() - t0)
    write_results(results, res_path)
    return results


def run_loop(cfg: LoopConfig) -> List[IterationRecord]:
    """Base sweep, then for each n: accumulate data, train M^n, evaluate the
    solo and combined strategies.  Completed steps found in the workdir are
    reused, so an interrupted loop resumes where it stopped."""
    _check_config(cfg)
    wd = Path(cfg.workdir)
    corpus = Corpus.from_dir(cfg.corpus)
    base = parse_strategy(cfg.base_strategy, name="S")
    base.validate()
    base_runs = _sweep(cfg, corpus, base, "base")
    baseline = solved_set(base_runs)
    cumulative = set(baseline)
    history: List[IterationRecord] = []
    for n in range(cfg.iterations):
        data_path = wd / "data" / f"iter{n}.libsvm"
        model_path = wd / "models" / f"iter{n}.json"
        report_path = wd / "reports" / f"iter{n}.tsv"
        if not model_path.exists():
            accumulate_training(history, base_runs, cfg.features, data_path)
            t0 = time.perf_counter()
            _, rep = train_file(data_path, cfg.train_params, model_path)
            log.info("M%d trained: error %.3f in %.1fs", n, rep.training_error,
                     time.perf_counter() - t0)
        model = load_model(model_path)
        runs = {}
        for strat in (compose_solo(base, model), compose_combined(base, model)):
            runs[strat.name] = _sweep(cfg, corpus, strat, str(n))
        for rs in runs.values():
            cumulative |= solved_set(rs)
        rec = IterationRecord(n, str(model_path), runs, set(cumulative))
        history.append(rec)
        rows = [("S", report_delta(base_runs, base_runs))]
        rows += [(f"{name}_M{n}", report_delta(base_runs, rs)) for name, rs in runs.items()]
        rows.append((f"cumulative_M{n}", delta_from_counts(baseline, cumulative)))
        report_path.parent.mkdir(parents=True, exist_ok=True)
        report_path.write_text(format_report(rows))
    return history
