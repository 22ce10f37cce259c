import csv
import json

import pytest

from topochain.cli import dump_expansions, main


@pytest.mark.parametrize("s,signs", [((1, 1), [1, -1]), ((0, 1), [1]), ((1, 2), [1, -1, -1, 1])])
def test_dump_cumulant_terms(s, signs):
    body = dump_expansions(s, "cumulant")
    assert [t["sign"] for t in body["terms"]] == signs


def test_dump_cluster_all_positive():
    body = dump_expansions((1, 2), "cluster")
    want = [[[-1, 1, 2]], [[-1], [1, 2]], [[-1, 1], [2]], [[-1], [1], [2]]]
    assert sorted(map(str, (t["blocks"] for t in body["terms"]))) == sorted(map(str, want))
    assert all(t["sign"] == 1 for t in body["terms"])
    assert body["terms"][0]["factors"] == ["g_{1+2}(-1,1,2)"]


def test_dump_cli(tmp_path, capsys):
    assert main(["dump-expansions", "--component", "1,1", "--kind", "group", "--out", str(tmp_path)]) == 0
    out = json.loads(capsys.readouterr().out)
    assert out["name"] == "A_{1+1}" and len(out["terms"]) == 2
    assert (tmp_path / "expansion_group_1_1.json").exists()


@pytest.mark.parametrize("component", ["4,3", "0,0", "a,b", "1"])
def test_dump_rejects(component):
    assert main(["dump-expansions", "--component", component]) == 2


def test_verify_writes_report(tmp_path):
    assert main(["verify", "combinatorics", "--out", str(tmp_path)]) == 0
    report = json.loads((tmp_path / "report.json").read_text())
    assert report["passed"]
    for rec in report["checks"]:
        assert {"check_id", "tolerance", "abs_err", "pass"} <= set(rec)


def test_verify_suite_flag_and_config(tmp_path):
    cfg = tmp_path / "c.json"
    cfg.write_text(json.dumps({"potential": {"epsilon": 1.0}, "seed": 3, "out": str(tmp_path / "o")}))
    assert main(["verify", "--suite", "combinatorics", "--config", str(cfg)]) == 0
    assert (tmp_path / "o" / "report.json").exists()


def test_report_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    assert main(["verify", "star", "--out", str(a), "--seed", "5"]) == 0
    assert main(["verify", "star", "--out", str(b), "--seed", "5"]) == 0
    assert (a / "report.json").read_bytes() == (b / "report.json").read_bytes()


@pytest.mark.parametrize("content", ["{not json", "[1]", '{"bogus": 1}', '{"potential": {"sigma": -1}}',
                                     '{"quadrature": {"mode": "nope"}}', '{"integrator": {"dt": 0}}'])
def test_invalid_config_exit_2(tmp_path, content):
    cfg = tmp_path / "c.json"
    cfg.write_text(content)
    assert main(["verify", "combinatorics", "--config", str(cfg), "--out", str(tmp_path)]) == 2


def test_missing_config_exit_2(tmp_path):
    assert main(["verify", "combinatorics", "--config", str(tmp_path / "none.json")]) == 2


def test_failed_check_exit_1(tmp_path, monkeypatch):
    from topochain import suites

    monkeypatch.setitem(suites.RUNNERS, "combinatorics",
                        lambda rc: [suites.record("always_fails", {}, 1.0, 0.0, 0.0)])
    assert main(["verify", "combinatorics", "--out", str(tmp_path)]) == 1


def test_thread_env(monkeypatch, tmp_path):
    monkeypatch.setenv("TOPOCHAIN_THREADS", "0")
    assert main(["verify", "combinatorics", "--out", str(tmp_path)]) == 2
    monkeypatch.setenv("TOPOCHAIN_THREADS", "2")
    assert main(["verify", "combinatorics", "--out", str(tmp_path)]) == 0


def test_simulate_csv(tmp_path):
    dump = tmp_path / "traj.csv"
    assert main(["simulate", "--particles", "4", "--t", "5", "--dump", str(dump), "--out", str(tmp_path)]) == 0
    with open(dump) as fh:
        rows = list(csv.DictReader(fh))
    assert list(rows[0]) == ["t", "label", "q", "p", "energy_drift"]
    assert len(rows) == 4 * 51
    assert max(float(r["energy_drift"]) for r in rows) < 1e-8


def test_usage_error_exit_2():
    with pytest.raises(SystemExit) as exc:
        main(["verify"])
    assert exc.value.code == 2
