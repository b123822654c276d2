import math
from pathlib import Path

import numpy as np
import pytest

from unimirror.bounds import entropy_upper_from_F
from unimirror.experiment import ExperimentConfig, aggregate, run_instance, run_item, run_sweep
from unimirror.experiment.config import load_config
from unimirror.experiment.io import emit_csv, emit_plots, load_csv
from unimirror.experiment.pipeline import bounds_report, instance_seed, simulate_reference
from unimirror.circuit import sample_instance
from unimirror.errors import ImpossibleOutcomeError

FIXTURES = Path(__file__).parent / "fixtures"


def golden_config(**kw):
    base = dict(gate_set="clifford", n_list=[6], d_list=[2, 4], p_grid=[0.2, 0.5], samples=3, master_seed=11)
    return ExperimentConfig(**{**base, **kw})


@pytest.mark.parametrize("p", [0.0, 0.2, 0.5, 1.0])
def test_full_bond_clifford_is_exact(p):
    cfg = ExperimentConfig(gate_set="clifford", n_list=[8], d_list=[16], p_grid=[p], samples=3)
    for s in range(3):
        row = run_instance(cfg, 8, p, 16, s)
        assert abs(row.F - 1) < 1e-9 and row.eps_max < 1e-12


@pytest.mark.parametrize("gate_set", ["haar", "clifford"])
def test_p1_bond_one_is_exact(gate_set):
    cfg = ExperimentConfig(gate_set=gate_set, n_list=[8], d_list=[1], p_grid=[1.0], samples=3)
    for s in range(3):
        row = run_instance(cfg, 8, 1.0, 1, s)
        assert abs(row.F - 1) < 1e-9
        assert row.S_ub_F == pytest.approx(math.log(2))


def test_same_coordinates_same_row():
    cfg = golden_config(gate_set="haar")
    assert run_instance(cfg, 6, 0.2, 2, 1) == run_instance(cfg, 6, 0.2, 2, 1)


def test_instance_seed_independent_of_d():
    cfg = golden_config()
    rows = run_item(cfg, 6, 0.2, 0)
    assert len({r.seed for r in rows}) == 1
    assert rows[0].seed == instance_seed(11, "clifford", 6, 6, 0.2, 0)
    assert run_instance(cfg, 6, 0.2, 4, 0) == rows[1]


def test_single_cell_sweep():
    cfg = golden_config(d_list=[2], p_grid=[0.3], samples=1)
    res = run_sweep(cfg)
    assert len(res.rows) == 1 and not res.failures
    (curve,) = aggregate(res.rows, "F")
    assert curve.mean[0] == res.rows[0].F and curve.counts[0] == 1


def test_aggregate_matches_recompute():
    cfg = ExperimentConfig(gate_set="haar", n_list=[4], d_list=[1], p_grid=[0.25], samples=100, master_seed=3)
    res = run_sweep(cfg)
    values = np.array([r.F for r in res.rows])
    (curve,) = res.curves("F")
    assert curve.counts[0] == 100
    assert abs(curve.mean[0] - values.sum() / 100) < 1e-12
    sd = math.sqrt(sum((v - values.mean()) ** 2 for v in values) / 99)
    assert abs(curve.stderr[0] - sd / 10) < 1e-12
    # bound averages equal the bound at the mean fidelity
    (ub,) = res.curves("S_ub_F")
    assert abs(ub.mean[0] - entropy_upper_from_F(curve.mean[0], 1, 4)) < 1e-12


def test_order_independent():
    cfg = golden_config()
    a = run_sweep(cfg)
    order = list(np.random.default_rng(0).permutation(len(cfg.n_list) * len(cfg.p_grid) * cfg.samples))
    b = run_sweep(cfg, order=order)
    assert a.rows == b.rows


def test_csv_round_trip(tmp_path):
    res = run_sweep(golden_config())
    path = emit_csv(res.rows, tmp_path / "out.csv")
    back = load_csv(path)
    assert back == res.rows
    for q in ("F", "S_ub_F"):
        for x, y in zip(aggregate(back, q), aggregate(res.rows, q)):
            assert np.array_equal(x.mean, y.mean) and np.array_equal(x.stderr, y.stderr)
    header = path.read_text().splitlines()[0]
    assert header == "gate_set,N,L,p,D,sample,seed,F,F_err,method,eps_max,S_ub_F,S_ub_eps,S_lb_eps,S_exact,wall_ms"


def test_csv_rejects_empty(tmp_path):
    with pytest.raises(ValueError):
        emit_csv([], tmp_path / "x.csv")
    assert not (tmp_path / "x.csv").exists()


def test_empty_plot_raises(tmp_path):
    with pytest.raises(ValueError):
        emit_plots([], tmp_path / "x.svg")
    assert not (tmp_path / "x.svg").exists()


def test_golden_svg(tmp_path):
    res = run_sweep(golden_config())
    out = emit_plots(res.curves("F"), tmp_path / "F.svg", reference_pc=0.3)
    again = emit_plots(run_sweep(golden_config()).curves("F"), tmp_path / "F2.svg", reference_pc=0.3)
    assert out.read_bytes() == again.read_bytes()
    assert out.read_bytes() == (FIXTURES / "golden_sweep_F.svg").read_bytes()


def test_timing_column_optional():
    assert run_instance(golden_config(), 6, 0.2, 2, 0).wall_ms is None
    assert run_instance(golden_config(record_timing=True), 6, 0.2, 2, 0).wall_ms >= 0


@pytest.mark.parametrize(
    "kw",
    [
        dict(n_list=[]),
        dict(samples=0),
        dict(p_grid=[1.5]),
        dict(d_list=[0]),
        dict(gate_set="haar", backend="stabilizer"),
        dict(gate_set="haar", fidelity_method="mc"),
        dict(backend="gpu"),
    ],
)
def test_config_validation(kw):
    with pytest.raises(ValueError):
        golden_config(**kw)


def test_config_symbolic_d_and_file(tmp_path):
    cfg = golden_config(d_list=[2, "N", 6])
    assert cfg.bond_dims_for(6) == [2, 6]
    assert cfg.layers_for(6) == 6
    path = tmp_path / "cfg.json"
    path.write_text('{"gate_set": "haar", "n_list": [4], "d_list": ["N"], "samples": 2}')
    assert load_config(path).bond_dims_for(4) == [4]
    path.write_text('{"bogus": 1}')
    with pytest.raises(ValueError):
        load_config(path)


@pytest.mark.parametrize("n", [4, 7, 10])
def test_backend_cross_validation(n):
    for s in range(4):
        inst = sample_instance(n, n, 0.3, "clifford", 40 * n + s)
        a = simulate_reference(inst, "dense")
        b = simulate_reference(inst, "stabilizer")
        assert a.record == b.record
        for k in range(1, n):
            assert abs(a.entropy(k) - b.entropy(k)) < 1e-9
            for d in (1, 2, 4):
                assert abs(a.schmidt_error(k, d) - b.schmidt_error(k, d)) < 1e-9
    dense_cfg = ExperimentConfig(gate_set="clifford", n_list=[n], d_list=[2], p_grid=[0.3], backend="dense")
    stab_cfg = ExperimentConfig(**{**dense_cfg.to_dict(), "backend": "stabilizer"})
    mc_cfg = ExperimentConfig(**{**stab_cfg.to_dict(), "fidelity_method": "mc", "mc_samples": 4000})
    for s in range(3):
        try:
            x = run_instance(dense_cfg, n, 0.3, 2, s)
        except ImpossibleOutcomeError:
            continue
        y = run_instance(stab_cfg, n, 0.3, 2, s)
        z = run_instance(mc_cfg, n, 0.3, 2, s)
        assert abs(x.F - y.F) < 1e-9
        assert abs(z.F - x.F) <= 5 * z.F_err + 1e-9


def test_mirror_and_shots_methods_agree_with_exact():
    base = golden_config(gate_set="haar", d_list=[2], p_grid=[0.2])
    exact = run_instance(base, 6, 0.2, 2, 0)
    mirrored = run_instance(golden_config(gate_set="haar", d_list=[2], p_grid=[0.2], fidelity_method="mirror"), 6, 0.2, 2, 0)
    shots = run_instance(golden_config(gate_set="haar", d_list=[2], p_grid=[0.2], fidelity_method="shots", shots=4000), 6, 0.2, 2, 0)
    assert abs(exact.F - mirrored.F) < 1e-10
    assert abs(shots.F - exact.F) <= 5 * math.sqrt(exact.F * (1 - exact.F) / 4000) + 1e-12


def test_bounds_report_consistent_with_row():
    cfg = golden_config(gate_set="haar")
    report = bounds_report(cfg, 6, 0.2, 2, 0)
    row = run_instance(cfg, 6, 0.2, 2, 0)
    assert report.fidelity == row.F
    assert report.s_upper_from_F == row.S_ub_F
    assert max(report.eps_cuts) == row.eps_max
    assert report.violations() == []


def test_truncation_abort_is_per_bond_dimension():
    # low-p Clifford circuits at D=1 routinely lose the recorded branch
    cfg = ExperimentConfig(gate_set="clifford", n_list=[8], d_list=[1, 16], p_grid=[0.1], samples=8, master_seed=5)
    res = run_sweep(cfg)
    assert res.aborted and not res.failures
    assert all(a[3] == 1 for a in res.aborted)
    assert sum(r.D == 16 for r in res.rows) == 8
    assert sum(r.D == 1 for r in res.rows) == 8 - len(res.aborted)
