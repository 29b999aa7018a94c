import io
import json

from pdqma.cli import main


def run(argv):
    out = io.StringIO()
    code = main(argv, out)
    return code, [json.loads(line) for line in out.getvalue().splitlines()]


def test_pcp_oracle_k4bin():
    code, recs = run(["pcp-oracle", "--instance", "k4bin"])
    assert code == 0 and recs[0]["soundness"] == 0.6667


def test_missing_instance():
    out = io.StringIO()
    assert main(["pdqma", "--instance", "missing.txt"], out) == 3
    assert out.getvalue() == ""


def test_bad_instance_file(tmp_path):
    bad = tmp_path / "bad.txt"
    bad.write_text("4 3\nedge 0000 : 0,1\n")
    assert main(["dqma", "--instance", str(bad)], io.StringIO()) == 3


def test_usage_errors(capsys):
    assert main(["bogus"], io.StringIO()) == 2
    assert "usage" in capsys.readouterr().err
    assert main(["pdqma", "--instance", "k4bin", "--trials", "1"], io.StringIO()) == 2
    assert main(["pdqma", "--instance", "tri16", "--tvd", "3"], io.StringIO()) == 2


def test_trial_records_and_summary():
    code, recs = run(["pdqma", "--instance", "tri16", "--trials", "3", "--seed", "7", "--samples", "400"])
    assert code == 0 and len(recs) == 4
    assert [r["trial"] for r in recs[:3]] == [0, 1, 2]
    assert all({"verdict", "reason", "seed"} <= r.keys() and "elapsed_ms" not in r for r in recs[:3])
    summary = recs[-1]
    assert summary["summary"] and summary["samples"] == 400 and summary["tvd_threshold"] == 0.25
    assert {"acceptance", "wilson_lo", "wilson_hi", "reason_histogram", "inner_reps", "outer_reps"} <= summary.keys()


def test_csv_and_timing():
    out = io.StringIO()
    assert main(["pdqma", "--instance", "k4bin", "--prover", "optimal", "--n", "4", "--trials", "2",
                 "--samples", "400", "--format", "csv", "--timing"], out) == 0
    lines = out.getvalue().splitlines()
    assert lines[0] == "trial,verdict,reason,seed,edge,recovered,elapsed_ms" and len(lines) == 3


def test_other_commands():
    code, recs = run(["axioms", "--instances", "10"])
    assert code == 0 and recs[-1]["pass"]
    code, recs = run(["ldt", "--lines", "50"])
    assert recs[-1]["delta_hat"] == 0.0
    code, recs = run(["advice", "--trials", "2"])
    assert code == 0 and recs[-1]["correct_rate"] == 1.0


def test_deterministic_output():
    for argv in (["dqma", "--instance", "path8", "--trials", "3", "--seed", "5"],
                 ["advice", "--trials", "3", "--mode", "HiddenVariable", "--seed", "2"]):
        a, b = io.StringIO(), io.StringIO()
        main(argv, a)
        main(argv, b)
        assert a.getvalue() == b.getvalue()
