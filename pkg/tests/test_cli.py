import json
import subprocess
import sys
from importlib.resources import files

import pytest

from netsynth.cli import main

DATA = files("netsynth") / "data"


def net_args(name):
    return ["--network", str(DATA / f"{name}.json"), "--spec", str(DATA / f"{name}.ltl")]


def synth(tmp_path, name, *extra):
    out = tmp_path / f"{name}-plan.json"
    code = main(["synth", *net_args(name), "--out", str(out), *extra])
    return code, out


def test_firewall_synth_and_check_round_trip(tmp_path, capsys):
    code, out = synth(tmp_path, "firewall", "--rule-granularity")
    assert code == 0
    doc = json.loads(out.read_text())
    assert doc["result"] == "plan" and doc["rule_granularity"] is True
    assert [c.get("switch", "WAIT") for c in doc["commands"]] == ["I#auth", "WAIT", "F2", "WAIT", "I#guest"]
    assert set(doc["stats"]) >= {"model_check_calls", "configs_visited", "configs_pruned_by_cex"}
    assert "plan (5 commands)" in capsys.readouterr().out
    assert main(["check", *net_args("firewall"), "--rule-granularity", "--plan", str(out)]) == 0
    assert main(["simulate", *net_args("firewall"), "--rule-granularity", "--plan", str(out)]) == 0


def test_ring_is_infeasible(tmp_path, capsys):
    code, out = synth(tmp_path, "ring")
    assert code == 2
    assert json.loads(out.read_text())["result"] == "infeasible"
    assert "infeasible" in capsys.readouterr().out
    code, _ = synth(tmp_path, "ring", "--rule-granularity")
    assert code == 0


def test_loopy_endpoints_exit_3(tmp_path):
    code, out = synth(tmp_path, "ring", "--loop-mode", "existential")
    assert code == 3
    assert json.loads(out.read_text())["result"] == "precondition-failure"


def test_missing_file_exit_1(tmp_path, capsys):
    assert main(["synth", "--network", str(tmp_path / "nope.json"), "--spec", "F port = WORLD"]) == 1
    assert "error" in capsys.readouterr().err


def test_bad_spec_exit_1(capsys):
    assert main(["synth", "--network", str(DATA / "firewall.json"), "--spec", "F port ="]) == 1


def test_check_rejects_missing_waits(tmp_path, capsys):
    _, out = synth(tmp_path, "firewall", "--rule-granularity")
    doc = json.loads(out.read_text())
    doc["commands"] = [c for c in doc["commands"] if c["type"] != "wait"]
    bad = tmp_path / "nowait.json"
    bad.write_text(json.dumps(doc))
    capsys.readouterr()
    code = main(["check", *net_args("firewall"), "--rule-granularity", "--plan", str(bad),
                 "--discipline", "careful"])
    assert code != 0
    assert "careful shape" in capsys.readouterr().out


def test_check_rejects_bad_firewall_order(tmp_path, capsys):
    _, out = synth(tmp_path, "firewall", "--rule-granularity")
    doc = json.loads(out.read_text())
    ups = [c for c in doc["commands"] if c["type"] == "update"]
    order = {c["switch"]: c for c in ups}
    wait = {"type": "wait"}
    doc["commands"] = [order["I#auth"], wait, order["I#guest"], wait, order["F2"]]
    bad = tmp_path / "bad.json"
    bad.write_text(json.dumps(doc))
    capsys.readouterr()
    code = main(["check", *net_args("firewall"), "--rule-granularity", "--plan", str(bad)])
    text = capsys.readouterr().out
    assert code == 2
    assert "src=Guest" in text and "purpose=Other" in text and "WORLD" in text


def test_check_flag_mismatch_is_input_error(tmp_path):
    _, out = synth(tmp_path, "firewall", "--rule-granularity")
    assert main(["check", *net_args("firewall"), "--plan", str(out)]) == 1


def test_job_file(tmp_path, capsys):
    (tmp_path / "net.json").write_text((DATA / "firewall.json").read_text())
    job = {"network": "net.json", "spec": (DATA / "firewall.ltl").read_text().strip(), "algorithm": "refine",
           "options": {"rule_granularity": True, "cex_learning": False}, "output": "out.json"}
    (tmp_path / "job.json").write_text(json.dumps(job))
    assert main(["synth", "--job", str(tmp_path / "job.json")]) == 0
    doc = json.loads((tmp_path / "out.json").read_text())
    assert doc["algorithm"] == "refine" and doc["stats"]["configs_pruned_by_cex"] == 0
    (tmp_path / "job.json").write_text(json.dumps({**job, "colour": "blue"}))
    assert main(["synth", "--job", str(tmp_path / "job.json")]) == 1


def test_configpairs_plan_checks_with_transitions(tmp_path):
    code, out = synth(tmp_path, "firewall", "--rule-granularity", "--algo", "configpairs")
    assert code == 0
    assert all(c["type"] == "update" for c in json.loads(out.read_text())["commands"])
    assert main(["check", *net_args("firewall"), "--rule-granularity", "--plan", str(out)]) == 0


def test_emit_nusmv(tmp_path, capsys):
    out = tmp_path / "fw.smv"
    assert main(["emit-nusmv", *net_args("firewall"), "--out", str(out)]) == 0
    text = out.read_text()
    assert text.startswith("MODULE main") and "port = I_0 & src = Guest : {F3_0};" in text
    assert main(["emit-nusmv", *net_args("firewall"), "--policy", "final"]) == 0
    assert "port = I_0 & src = Auth : {F1_0};" in capsys.readouterr().out


def test_emit_nusmv_run_without_binary(tmp_path, monkeypatch):
    monkeypatch.delenv("NETSYNTH_NUSMV", raising=False)
    code = main(["emit-nusmv", *net_args("firewall"), "--out", str(tmp_path / "m.smv"), "--run",
                 "--nusmv-path", str(tmp_path / "missing")])
    assert code == 3


def test_bench_is_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    for d in (a, b):
        assert main(["bench", "--nodes", "100", "--updating", "13", "--seed", "7", "--out", str(d)]) == 0
    for name in ("network.json", "spec.ltl"):
        assert (a / name).read_bytes() == (b / name).read_bytes()
    assert main(["synth", "--network", str(a / "network.json"), "--spec", str(a / "spec.ltl")]) == 0


def test_bench_bad_params(tmp_path):
    assert main(["bench", "--nodes", "10", "--updating", "10", "--out", str(tmp_path)]) == 1


def test_report_writes_csv_and_figures(tmp_path):
    out = tmp_path / "rep"
    assert main(["report", "--nodes", "30", "40", "--updating", "3", "--out", str(out),
                 "--no-cex-learning"]) == 0
    csvs = list(out.glob("*.csv"))
    pngs = list(out.glob("*.png"))
    assert len(csvs) == 1 and len(pngs) == 2
    assert all(p.read_bytes()[:4] == b"\x89PNG" for p in pngs)
    lines = csvs[0].read_text().splitlines()
    assert len(lines) == 1 + 2 * 2


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "netsynth", "synth", *net_args("ring")],
                          capture_output=True, text=True)
    assert proc.returncode == 2
    assert proc.stdout.startswith("infeasible")
    assert proc.stderr == ""


@pytest.mark.parametrize("argv", [[], ["frobnicate"]])
def test_usage_errors(argv):
    with pytest.raises(SystemExit) as err:
        main(argv)
    assert err.value.code != 0
