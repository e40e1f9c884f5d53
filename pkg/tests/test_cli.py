import json

import numpy as np
import pytest

from socpmw.cli import main
from socpmw.harness import gen_feasible, gen_infeasible_uniform, write_generated, GeneratedInstance
from socpmw.instance import save_instance, save_point
from socpmw.mw import iteration_count
from socpmw.report import load_report


@pytest.fixture
def corpus(tmp_path):
    d = tmp_path / "corpus"
    assert main(["generate", "--recipe", "feasible", "--seed", "3", "--r", "5", "--m", "8",
                 "--out-dir", str(d)]) == 0
    assert main(["generate", "--recipe", "infeasible", "--seed", "0", "--theta", "0.1", "--r", "2",
                 "--m", "3", "--size-max", "2", "--out-dir", str(d)]) == 0
    return d


def test_generate_is_deterministic(tmp_path, capsys):
    for sub in ("a", "b"):
        main(["generate", "--recipe", "feasible", "--seed", "9", "--out-dir", str(tmp_path / sub)])
    assert (tmp_path / "a/feasible-9.json").read_bytes() == (tmp_path / "b/feasible-9.json").read_bytes()
    man = json.loads((tmp_path / "a/manifest.json").read_text())
    assert man["entries"]["feasible-9"]["recipe"] == "feasible"


def test_solve_feasible(corpus, tmp_path):
    out = tmp_path / "r.json"
    rc = main(["solve", "--instance", str(corpus / "feasible-3.json"), "--theta", "0.05", "--out", str(out)])
    assert rc == 0
    rep = load_report(out)
    assert rep.status == "Feasible" and rep.certified
    assert max(rep.margins) <= 0.05
    assert rep.cost["counts"]["oracle_calls"] >= 1


def test_solve_infeasible(corpus, tmp_path):
    out = tmp_path / "r.json"
    assert main(["solve", "--instance", str(corpus / "infeasible-0.json"), "--out", str(out)]) == 0
    rep = load_report(out)
    assert rep.status == "Infeasible"
    assert rep.cost["counts"]["mw_iterations"] == iteration_count(2, 0.1)


def test_solve_socp_and_promise(tmp_path):
    from socpmw.instance import SocpInstance
    from socpmw.jordan import ConePartition

    part = ConePartition([1])
    good = SocpInstance(part, (np.array([[1.0]]),), [0.3], [1.0])
    bad = SocpInstance(part, (np.array([[-1.0]]),), [-0.9], [0.0])
    save_instance(tmp_path / "good.json", good)
    save_instance(tmp_path / "bad.json", bad)
    assert main(["solve", "--instance", str(tmp_path / "good.json"), "--epsilon", "0.1",
                 "--out", str(tmp_path / "g.json")]) == 0
    rep = load_report(tmp_path / "g.json")
    assert rep.kind == "socp" and rep.g <= 0.3 <= rep.g + 0.11
    assert rep.cost["predicted"]["T_bs"]["value"] >= rep.cost["counts"]["bs_steps"]
    assert main(["solve", "--instance", str(tmp_path / "bad.json"), "--epsilon", "0.2"]) == 2


@pytest.mark.parametrize("content", ["{oops", '{"version": 1}', ""])
def test_malformed_exit_1(tmp_path, capsys, content):
    f = tmp_path / "bad.json"
    f.write_text(content)
    assert main(["solve", "--instance", str(f), "--theta", "0.1"]) == 1
    assert "error:" in capsys.readouterr().err


def test_missing_file_and_wrong_flags(corpus, tmp_path):
    assert main(["solve", "--instance", str(tmp_path / "nope.json"), "--theta", "0.1"]) == 1
    assert main(["solve", "--instance", str(corpus / "feasible-3.json"), "--epsilon", "0.1"]) == 1
    assert main(["solve", "--instance", str(corpus / "feasible-3.json"), "--theta", "2.0"]) == 1
    assert main(["solve", "--instance", str(corpus / "feasible-3.json"), "--threads", "0"]) == 1


def test_check(corpus, tmp_path):
    inst = str(corpus / "feasible-3.json")
    wit = corpus / "feasible-3.witness.json"
    assert main(["check", "--instance", inst, "--point", str(wit)]) == 0
    from socpmw.instance import load_point

    x = load_point(wit)
    save_point(tmp_path / "scaled.json", x * 0.9)
    assert main(["check", "--instance", inst, "--point", str(tmp_path / "scaled.json")]) == 3


def test_check_slack_monotone(tmp_path):
    G = gen_feasible(1, m=4)
    F = G.instance
    shifted = type(F)(F.partition, F.A_blocks, F.b - 0.1, F.theta)
    save_instance(tmp_path / "f.json", shifted)
    save_point(tmp_path / "x.json", G.witness)
    codes = [main(["check", "--instance", str(tmp_path / "f.json"), "--point", str(tmp_path / "x.json"),
                   "--slack", str(s)]) for s in (0.0, 0.05, 0.1, 0.2)]
    passed = [c == 0 for c in codes]
    assert passed == sorted(passed) and passed[-1]


def test_cost(capsys):
    assert main(["cost", "--r", "2", "--n", "4", "--m", "10", "--theta", "0.1", "--xi", "0.1"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["predicted"]["T_prime"]["value"] == 192517
    assert main(["cost", "--r", "2", "--n", "4", "--m", "10", "--theta", "0.1", "--mode", "direct"]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["predicted"]["T"]["value"] == 4991
    assert out["predicted"]["xi"]["value"] == pytest.approx(1 / 14973)


def test_solve_sq_mode_counts(tmp_path):
    G = gen_feasible(0, r=2, size_range=(2, 3), m=2, theta=0.9)
    save_instance(tmp_path / "f.json", G.instance)
    out = tmp_path / "r.json"
    assert main(["solve", "--instance", str(tmp_path / "f.json"), "--mode", "sq", "--out", str(out)]) == 0
    rep = load_report(out)
    calls = rep.cost["counts"]["oracle_calls"]
    per_call = rep.cost["predicted"]["row_samples_per_call"]["value"]
    assert rep.cost["counts"]["row_samples"] == calls * per_call
