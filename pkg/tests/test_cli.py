import csv
import json

import numpy as np
import pytest

from unimirror import mps
from unimirror.circuit import deserialize
from unimirror.experiment.cli import main
from unimirror.mirror import MirrorCircuit


def test_sample_emits_circuit(capsys):
    assert main(["sample", "--n", "4", "--p", "0.5", "--seed", "3", "--record"]) == 0
    inst = deserialize(capsys.readouterr().out)
    assert (inst.n, inst.l, inst.p, inst.seed) == (4, 4, 0.5, 3)
    assert inst.record is not None


def test_sample_to_file(tmp_path):
    out = tmp_path / "c.json"
    assert main(["sample", "--n", "3", "--l", "2", "--p", "0", "--gate-set", "haar", "-o", str(out)]) == 0
    assert deserialize(out.read_text()).l == 2


def test_run_prints_report(capsys):
    assert main(["run", "--n", "6", "--p", "0.3", "--D", "2", "--gate-set", "haar", "--master-seed", "1"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert 0 <= report["fidelity"] <= 1
    assert len(report["eps_cuts"]) == 5 and "seed" in report


def test_sweep_writes_outputs(tmp_path, monkeypatch, capsys):
    monkeypatch.setenv("UNIMIRROR_OUTPUT_ROOT", str(tmp_path))
    args = ["sweep", "--gate-set", "clifford", "--n", "6", "--D", "2", "N", "--p", "0.2", "0.6", "--samples", "2", "-o", "out"]
    assert main(args) == 0
    out = tmp_path / "out"
    assert {f.name for f in out.iterdir()} == {"results.csv", "F_N6.svg", "S_ub_F_N6.svg", "config.json"}
    rows = list(csv.DictReader(open(out / "results.csv")))
    assert len(rows) == 2 * 2 * 2
    assert json.loads((out / "config.json").read_text())["d_list"] == [2, "N"]
    first = (out / "results.csv").read_bytes()
    assert main(args) == 0
    assert (out / "results.csv").read_bytes() == first


def test_sweep_config_file_with_overrides(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"gate_set": "haar", "n_list": [4], "d_list": [1], "p_grid": [0.5], "samples": 3}))
    out = tmp_path / "res"
    assert main(["sweep", "--config", str(cfg), "--samples", "1", "-o", str(out)]) == 0
    assert len(list(csv.DictReader(open(out / "results.csv")))) == 1


def test_mirror_command(tmp_path, capsys):
    path = tmp_path / "s.mps"
    state = mps.random_mps(5, 2, np.random.default_rng(0))
    mps.save_mps(state, path)
    assert main(["mirror", str(path)]) == 0
    circuit = MirrorCircuit.from_dict(json.loads(capsys.readouterr().out))
    assert circuit.n == 5 and circuit.n_d == 1


def test_verify_suite(capsys):
    assert main(["verify", "extremal"]) == 0
    assert capsys.readouterr().out.startswith("PASS extremal")


def test_unknown_suite_is_usage_error():
    with pytest.raises(SystemExit) as info:
        main(["verify", "nonsense"])
    assert info.value.code == 2


def test_bad_input_exit_code(tmp_path, capsys):
    assert main(["mirror", str(tmp_path / "missing.mps")]) == 2
    assert "error:" in capsys.readouterr().err
