import subprocess
import sys

from guidedprover.cli import main
from guidedprover.loop import RunResult, write_results
from conftest import CURATED


def run(capsys, *args):
    code = main([str(a) for a in args])
    out = capsys.readouterr()
    return code, out.out, out.err


def test_prove_unsat_prints_status_and_proof(capsys, tmp_path):
    code, out, _ = run(capsys, "prove", CURATED / "unsat03_modus.p", "--dump-trace", tmp_path / "t.trace")
    assert code == 0
    assert out.splitlines()[0] == "% SZS status Unsatisfiable for unsat03_modus"
    assert "$false" in out
    assert (tmp_path / "t.trace").read_text().endswith("SZS status Unsatisfiable\n")


def test_prove_sat_and_resource_out(capsys, tmp_path):
    code, out, _ = run(capsys, "prove", CURATED / "sat04_relation.p")
    assert code == 0 and out.startswith("% SZS status Satisfiable for sat04_relation")
    p = tmp_path / "grow.p"
    p.write_text("cnf(c1, axiom, p(a)). cnf(c2, axiom, ~p(X) | p(f(X))). cnf(c3, negated_conjecture, ~q(a)).")
    code, out, _ = run(capsys, "prove", p, "--max-processed", 10)
    assert code == 0 and out.startswith("% SZS status ResourceOut for grow")


def test_exit_codes(capsys, tmp_path):
    assert run(capsys, "prove", tmp_path / "missing.p")[0] == 2
    bad = tmp_path / "bad.p"
    bad.write_text("cnf(c1, axiom, p(a)")
    code, _, err = run(capsys, "prove", bad)
    assert code == 2 and "bad.p:1" in err
    assert run(capsys, "prove")[0] == 1
    assert run(capsys, "frobnicate")[0] == 1
    assert run(capsys, "prove", CURATED / "sat01_unit.p", "--strategy", "1*Nope")[0] == 1
    assert run(capsys, "prove", CURATED / "sat01_unit.p", "--mode", "solo")[0] == 1
    assert run(capsys, "train", "--data", tmp_path / "none.libsvm", "--out", tmp_path / "m.json")[0] == 2
    assert run(capsys, "--help")[0] == 0


def test_features_train_and_guided_prove(capsys, tmp_path):
    traces = tmp_path / "traces"
    for f in ["unsat02_prop4.p", "unsat07_transitive.p", "unsat09_cases.p"]:
        assert run(capsys, "prove", CURATED / f, "--dump-trace", traces / (f[:-2] + ".trace"))[0] == 0
    code, out, _ = run(capsys, "features", "--traces", traces, "--out", tmp_path / "d.libsvm",
                       "--hash-base", 512)
    assert code == 0 and out.startswith("wrote ")
    code, out, _ = run(capsys, "train", "--data", tmp_path / "d.libsvm", "--trees", 5, "--depth", 3,
                       "--eta", 0.5, "--lambda", 1, "--out", tmp_path / "m.json")
    assert code == 0 and "training error" in out
    for mode in ["solo", "combined", "pure-solo"]:
        code, out, _ = run(capsys, "prove", CURATED / "unsat07_transitive.p", "--model", tmp_path / "m.json",
                           "--mode", mode)
        assert code == 0 and out.startswith("% SZS status Unsatisfiable"), mode
    code, _, _ = run(capsys, "features", "--traces", tmp_path / "empty", "--out", tmp_path / "x")
    assert code == 2


def test_report_command(capsys, tmp_path):
    write_results([RunResult("a", "Unsatisfiable"), RunResult("b", "ResourceOut")], tmp_path / "base.tsv")
    write_results([RunResult("a", "Unsatisfiable"), RunResult("b", "Unsatisfiable")], tmp_path / "new.tsv")
    code, out, _ = run(capsys, "report", "--baseline", tmp_path / "base.tsv", "--current", tmp_path / "new.tsv")
    assert code == 0
    assert out.splitlines() == ["strategy\tsolved\tgain_pct\tplus\tminus", "new\t2\t+100.0\t1\t0"]


def test_generate_and_loop(capsys, tmp_path):
    assert run(capsys, "generate-corpus", "--out", tmp_path / "c", "-n", 6, "--seed", 1)[0] == 0
    code, out, _ = run(capsys, "loop", "--corpus", tmp_path / "c", "--iterations", 1, "--workdir", tmp_path / "wd",
                       "--max-processed", 200, "--max-generated", 1000, "--trees", 3, "--depth", 3,
                       "--hash-base", 256, "--jobs", 2)
    assert code == 0
    assert out.splitlines()[0] == "strategy\tsolved\tgain_pct\tplus\tminus"
    assert (tmp_path / "wd" / "models" / "iter0.json").exists()


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "guidedprover", "prove", str(CURATED / "unsat01_unit.p")],
                       capture_output=True, text=True)
    assert r.returncode == 0
    assert r.stdout.startswith("% SZS status Unsatisfiable for unsat01_unit")
    r = subprocess.run([sys.executable, "-m", "guidedprover", "prove"], capture_output=True, text=True)
    assert r.returncode == 1
