import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tl1pce import DomainError, SolverConfig, enumerate_total_degree
from tl1pce.harness import (
    CSV_HEADER,
    FUNCTION_DELTA,
    WORKERS_ENV,
    ExperimentRecord,
    ExperimentSpec,
    default_candidates,
    emit_contour_grid,
    f1,
    f2,
    plant_sparse_target,
    records_to_csv,
    relative_l2_error,
    run_function_experiment,
    run_success_experiment,
    summarize,
    trial_seed,
    worker_count,
)


def test_plant_edges():
    b = enumerate_total_degree(2, 3)
    assert not plant_sparse_target(b, 0, 1).any()
    assert np.count_nonzero(plant_sparse_target(b, b.N, 1)) == b.N
    with pytest.raises(DomainError):
        plant_sparse_target(b, b.N + 1, 1)


def test_plant_exact_sparsity_and_reproducible():
    b = enumerate_total_degree(2, 20)
    for seed in range(1000):
        assert np.count_nonzero(plant_sparse_target(b, 7, seed)) == 7
    assert plant_sparse_target(b, 7, 3).tobytes() == plant_sparse_target(b, 7, 3).tobytes()


def test_f1():
    assert f1([0.0, 0.0]) == pytest.approx(1.0)
    assert f1([-1.0, -1.0]) == pytest.approx(1.25)
    z = np.random.default_rng(0).uniform(-1, 1, (20, 4))
    np.testing.assert_allclose(f1(z), f1(z[:, ::-1]), rtol=1e-15)


def test_f2():
    assert f2([-1.0, -1.0, -1.0]) == 1.0
    assert f2([1.0]) == pytest.approx(1 / 1.5**2)


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=6), st.integers(0, 5), st.floats(0, 1))
def test_f2_monotone(z, i, step):
    z = np.asarray(z)
    i = i % z.size
    w = z.copy()
    w[i] = min(1.0, w[i] + step)
    assert f2(w) <= f2(z) + 1e-15


def test_relative_error():
    t = np.array([1.0, -2.0, 3.0])
    assert relative_l2_error(t, t) == 0.0
    assert relative_l2_error(np.zeros(3), t) == pytest.approx(1.0)
    assert relative_l2_error(2 * t, t) == pytest.approx(1.0)
    with pytest.raises(DomainError):
        relative_l2_error(t, np.zeros(3))
    with pytest.raises(DomainError):
        relative_l2_error(t[:2], t)


def test_spec_validation():
    with pytest.raises(DomainError):
        ExperimentSpec(kind="success_vs_M", d=2, k=3, sweep_values=(5, 4), s_fixed=1)
    with pytest.raises(DomainError):
        ExperimentSpec(kind="bogus", d=2, k=3, sweep_values=(4,))
    with pytest.raises(DomainError):
        ExperimentSpec(kind="success_vs_M", d=2, k=3, sweep_values=(4,), methods=("L0",))
    with pytest.raises(ValueError):
        ExperimentSpec(kind="success_vs_M", d=2, k=3, sweep_values=(4,), trials=0)
    spec = ExperimentSpec(kind="error_vs_M", d=6, k=2, sweep_values=(4,))
    assert spec.candidates == default_candidates(6) == (0.05, 0.1, 0.2, 0.3, 1.0)
    assert spec.solver.delta == FUNCTION_DELTA
    assert ExperimentSpec(kind="success_vs_s", d=2, k=3, sweep_values=(1,)).solver.delta == 10


def test_missing_held_parameter():
    spec = ExperimentSpec(kind="success_vs_M", d=2, k=3, sweep_values=(4,))
    with pytest.raises(DomainError):
        run_success_experiment(spec)


def test_trial_seed_properties():
    seeds = {trial_seed(0, g, t) for g in range(5) for t in range(50)}
    assert len(seeds) == 250
    assert trial_seed(3, 1, 2) == trial_seed(3, 1, 2)
    assert trial_seed(3, 1, 2) != trial_seed(4, 1, 2)


def test_overdetermined_all_succeed():
    spec = ExperimentSpec(kind="success_vs_M", d=1, k=5, sweep_values=(8, 12), s_fixed=1,
                          trials=5, methods=("TL1", "adaptiveTL1", "L1", "L1minus2"))
    recs = run_success_experiment(spec, workers=1)
    assert len(recs) == 2 * 5 * 4
    assert all(r.success for r in recs)
    assert set(summarize(recs).values()) == {1.0}


def test_success_vs_s_records():
    spec = ExperimentSpec(kind="success_vs_s", d=2, k=4, sweep_values=(1, 2), M_fixed=12,
                          trials=3, methods=("TL1", "L1"))
    recs = run_success_experiment(spec, workers=1)
    assert {r.sweep_name for r in recs} == {"s"}
    assert all(r.rel_error is None and r.success is not None for r in recs)
    assert [(r.sweep_value, r.trial, r.method) for r in recs] == sorted(
        [(r.sweep_value, r.trial, r.method) for r in recs], key=lambda k: (k[0], k[1],
                                                                           ["TL1", "L1"].index(k[2])))
    # methods in a cell share the data seed
    by_cell = {}
    for r in recs:
        by_cell.setdefault((r.sweep_value, r.trial), set()).add(r.seed)
    assert all(len(v) == 1 for v in by_cell.values())


def test_planted_function_experiment_exact():
    spec = ExperimentSpec(kind="error_vs_M", d=2, k=4, sweep_values=(15,), s_fixed=2,
                          trials=3, target="planted_sparse", methods=("TL1", "L1"),
                          n_validation=200,
                          solver=SolverConfig(delta=FUNCTION_DELTA, eps_inner=1e-10,
                                              eps_outer=1e-8, max_inner=50_000))
    recs = run_function_experiment(spec, workers=1)
    assert all(r.success is None for r in recs)
    assert max(r.rel_error for r in recs) < 1e-6


def test_function_experiment_errors_small():
    spec = ExperimentSpec(kind="error_vs_M", d=1, k=6, sweep_values=(10,), trials=2,
                          target="f1", methods=("adaptiveTL1",), n_validation=100)
    recs = run_function_experiment(spec, workers=1)
    assert all(0 < r.rel_error < 1e-3 for r in recs)


def test_csv_schema_and_timing():
    rec = ExperimentRecord("TL1", "M", 10, 0, 123, success=True, wall_ms=1.5)
    text = records_to_csv([rec])
    assert text.splitlines()[0] == ",".join(CSV_HEADER)
    assert text.splitlines()[1] == "TL1,M,10,0,123,1,,"
    assert records_to_csv([rec], timing=True).splitlines()[1].endswith(",1.5")


def test_parallel_matches_serial():
    spec = ExperimentSpec(kind="success_vs_M", d=2, k=4, sweep_values=(6, 9), s_fixed=2,
                          trials=4, methods=("TL1", "L1"))
    serial = records_to_csv(run_success_experiment(spec, workers=1))
    parallel = records_to_csv(run_success_experiment(spec, workers=3))
    assert serial == parallel


def test_worker_env(monkeypatch):
    monkeypatch.setenv(WORKERS_ENV, "4")
    assert worker_count() == 4
    monkeypatch.setenv(WORKERS_ENV, "junk")
    assert worker_count() == 1
    monkeypatch.delenv(WORKERS_ENV)
    assert worker_count() == 1


def parse_contour(text):
    rows = [list(map(float, ln.split(","))) for ln in text.strip().splitlines()[1:]]
    return np.array(rows)


def test_contour():
    text = emit_contour_grid(1.0, 1.0, 5)
    assert text.splitlines()[0] == "x1,x2,tl1,l1"
    g = parse_contour(text)
    assert g.shape == (25, 4)
    origin = g[(g[:, 0] == 0) & (g[:, 1] == 0)][0]
    assert origin[2] == 0 and origin[3] == 0
    wide = parse_contour(emit_contour_grid(100.0, 1.0, 41))
    assert np.max(np.abs(wide[:, 2] - wide[:, 3])) < 0.02
    sharp = parse_contour(emit_contour_grid(0.01, 1.0, 3))
    corner = sharp[(sharp[:, 0] == 1) & (sharp[:, 1] == 1)][0]
    assert corner[2] == pytest.approx(2.0)
    with pytest.raises(ValueError):
        emit_contour_grid(1.0, 1.0, 1)
