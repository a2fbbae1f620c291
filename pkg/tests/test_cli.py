import csv
import json
import subprocess
import sys

import pytest

from qmanizk import cli, protocol_qsp
from qmanizk.hamiltonian import load_instance


@pytest.fixture(autouse=True)
def one_worker(monkeypatch):
    monkeypatch.setenv("QMANIZK_THREADS", "1")


def run(capsys, *argv):
    code = cli.main(list(argv))
    return code, capsys.readouterr().out


def gen(capsys, tmp_path, kind, n, name=None):
    path = tmp_path / (name or f"{kind}{n}.json")
    code, out = run(capsys, "gen", "--kind", kind, "--n", str(n), "--out", str(path))
    assert code == 0
    return path, json.loads(out)


def test_gen_writes_a_loadable_instance(capsys, tmp_path):
    path, summary = gen(capsys, tmp_path, "ghz_yes", 3)
    inst = load_instance(path)
    assert summary["num_qubits"] == 3 and summary["label"] == "yes"
    assert summary["beta"] == pytest.approx(inst.beta)


def test_gen_circuit_records_the_history_energy(capsys, tmp_path):
    path = tmp_path / "c.json"
    code, out = run(capsys, "gen", "--circuit", "H:0,CNOT:0-1", "--n", "2", "--out", str(path))
    summary = json.loads(out)
    inst = load_instance(path)
    assert code == 0 and summary["kind"] == "circuit"
    assert summary["alpha"] == pytest.approx(inst.alpha) and inst.alpha < inst.beta


def test_run_report_fields_and_reproducibility(capsys, tmp_path):
    path, _ = gen(capsys, tmp_path, "anti_stabilizer_no", 2)
    reports = []
    for _ in range(2):
        code, out = run(capsys, "run", "--protocol", "sigma", "--instance", str(path), "--trials", "300",
                        "--seed", "5", "--cheat", "ground")
        assert code == 0
        reports.append(json.loads(out))
    a, b = reports
    assert set(a) == {"protocol", "instance", "trials", "accepts", "estimate", "analytic", "sigma", "seed", "wall_ms"}
    a.pop("wall_ms"), b.pop("wall_ms")
    assert a == b
    # (I/2 energy) / 729
    assert a["analytic"] == pytest.approx(1 - 0.5 / 729)


def test_dual_run_defaults_to_binding(capsys, tmp_path):
    path, _ = gen(capsys, tmp_path, "bell_stabilizer_yes", 2)
    code, out = run(capsys, "run", "--protocol", "dual", "--instance", str(path), "--trials", "50", "--seed", "1")
    assert code == 0 and json.loads(out)["accepts"] == 50


@pytest.mark.parametrize(
    "extra",
    [
        ["--protocol", "nip"],
        ["--protocol", "qsp", "--mode", "binding"],
        ["--protocol", "qsp", "--trials", "0"],
    ],
)
def test_usage_errors_exit_2(extra, capsys, tmp_path):
    path, _ = gen(capsys, tmp_path, "ghz_yes", 3)
    assert cli.main(["run", "--instance", str(path), *extra]) == 2


def test_missing_witness_and_missing_file_exit_2(capsys, tmp_path):
    path, _ = gen(capsys, tmp_path, "anti_stabilizer_no", 2)
    assert cli.main(["run", "--protocol", "qsp", "--instance", str(path)]) == 2
    assert cli.main(["run", "--protocol", "qsp", "--instance", str(tmp_path / "none.json")]) == 2
    assert cli.main(["gen", "--kind", "ghz_yes", "--out", str(tmp_path / "x.json")]) == 2


def test_lemmas_exit_codes(capsys, monkeypatch):
    code, out = run(capsys, "lemmas", "--suite", "energy", "--seed", "2")
    assert code == 0 and out.startswith("PASS")
    monkeypatch.setattr(protocol_qsp, "_pad_frame", lambda proof, pads, j: (int(proof.x[j]), int(proof.z[j]) ^ pads[j][1]))
    code, out = run(capsys, "lemmas", "--suite", "xz", "--seed", "2")
    assert code == 3 and "FAIL" in out


def sweep_dir(capsys, tmp_path):
    d = tmp_path / "sweep"
    d.mkdir()
    gen(capsys, d, "bell_stabilizer_yes", 2, "a.json")
    gen(capsys, d, "xxzz_frustrated_no", 3, "b.json")
    return d


def test_sweep_writes_csv_and_matches_run(capsys, tmp_path):
    d = sweep_dir(capsys, tmp_path)
    out_csv = tmp_path / "s.csv"
    code, out = run(capsys, "sweep", "--protocol", "nip", "--instances", str(d), "--reps", "1,5",
                    "--trials", "100", "--seed", "9", "--out", str(out_csv))
    assert code == 0 and json.loads(out)["violations"] == 0
    rows = list(csv.DictReader(out_csv.open()))
    assert [r["reps"] for r in rows] == ["1", "5"] and list(rows[0]) == list(cli.CSV_FIELDS)
    # one repetition: the no-instance row equals a run with seed + 1
    code, out = run(capsys, "run", "--protocol", "nip", "--instance", str(d / "b.json"), "--trials", "100",
                    "--seed", "10", "--cheat", "ground")
    assert float(rows[0]["soundness_err"]) == pytest.approx(json.loads(out)["estimate"])


def test_sweep_usage_errors(capsys, tmp_path):
    d = sweep_dir(capsys, tmp_path)
    base = ["sweep", "--protocol", "nip", "--instances", str(d), "--out", str(tmp_path / "s.csv")]
    assert cli.main([*base, "--reps", "0"]) == 2
    assert cli.main([*base, "--reps", "a,b"]) == 2
    (d / "b.json").unlink()
    assert cli.main([*base, "--reps", "1"]) == 2


def test_module_entry_point(tmp_path):
    result = subprocess.run([sys.executable, "-m", "qmanizk", "--help"], capture_output=True, text=True)
    assert result.returncode == 0 and "sweep" in result.stdout
