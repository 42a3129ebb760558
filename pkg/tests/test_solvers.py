import itertools
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tl1pce import (
    DomainError,
    SolverConfig,
    SolverError,
    adaptive_dca_tl1,
    assemble_matrix,
    dca_tl1,
    enumerate_total_degree,
    l1_basis_pursuit,
    l12_dca,
    penalty,
    sample_uniform,
    solve,
)
from tl1pce.harness import plant_sparse_target
from tl1pce.solvers import HIGH_DIM_CANDIDATES, LOW_DIM_CANDIDATES

TIGHT = SolverConfig(eps_inner=1e-11, eps_outer=1e-9, max_inner=100_000)


def l1_vertex_oracle(A, b):
    """Minimum of ||x||_1 over Ax=b by enumerating basic feasible points of the split LP."""
    M, N = A.shape
    best, best_x = np.inf, None
    for cols in itertools.combinations(range(N), M):
        B = A[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xs = np.linalg.solve(B, b)
        x = np.zeros(N)
        x[list(cols)] = xs
        # any sign pattern is a vertex of the split problem
        if np.abs(x).sum() < best:
            best, best_x = np.abs(x).sum(), x
    return best, best_x


def small_problem(seed, M=3, N=6, s=1):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((M, N))
    # unit columns: coherence below one, so 1-sparse vectors are the unique l1 minimizers
    A /= np.linalg.norm(A, axis=0)
    x = np.zeros(N)
    x[rng.choice(N, s, replace=False)] = rng.choice([-1.0, 1.0], s)
    return A, A @ x, x


def pce_problem(seed, d=2, k=8, M=20, s=4):
    basis = enumerate_total_degree(d, k)
    A = assemble_matrix(basis, sample_uniform(d, M, seed)).entries
    x = plant_sparse_target(basis, s, seed + 1)
    return A, A @ x, x


def test_config_validation():
    with pytest.raises(DomainError):
        SolverConfig(delta=-1)
    with pytest.raises(ValueError):
        SolverConfig(max_inner=0)
    with pytest.warns(UserWarning):
        SolverConfig(delta=0.5)
    assert SolverConfig().with_a(1.0).a == 1.0


@pytest.mark.parametrize("fn", [dca_tl1, l1_basis_pursuit, l12_dca])
def test_identity_system(fn):
    res = fn(np.eye(2), np.array([1.0, 0.0]))
    np.testing.assert_allclose(res.x, [1.0, 0.0], atol=1e-6)
    assert res.residual == pytest.approx(np.linalg.norm(np.eye(2) @ res.x - [1.0, 0.0]))


def test_identity_any_a():
    for a in (0.05, 1.0, 50.0):
        np.testing.assert_allclose(dca_tl1(np.eye(2), [1.0, 0.0], SolverConfig(a=a)).x,
                                   [1.0, 0.0], atol=1e-6)


def test_l1_face():
    res = l1_basis_pursuit(np.array([[1.0, 1.0]]), np.array([1.0]))
    assert np.abs(res.x).sum() == pytest.approx(1.0, abs=1e-6)
    assert res.residual < 1e-6


def test_l1_vertex():
    res = l1_basis_pursuit(np.array([[1.0, 2.0]]), np.array([2.0]))
    np.testing.assert_allclose(res.x, [0.0, 1.0], atol=1e-5)


@pytest.mark.parametrize("seed", range(8))
def test_l1_matches_vertex_oracle(seed):
    A, b, _ = small_problem(seed)
    value, x_star = l1_vertex_oracle(A, b)
    res = l1_basis_pursuit(A, b, TIGHT)
    assert np.abs(res.x).sum() == pytest.approx(value, abs=1e-5)
    np.testing.assert_allclose(res.x, x_star, atol=1e-5)


@pytest.mark.parametrize("seed", range(6))
def test_l12_recovers_one_sparse(seed):
    A, b, x = small_problem(seed)
    np.testing.assert_allclose(l12_dca(A, b).x, x, atol=1e-5)


def test_l12_rejects_zero_rhs():
    with pytest.raises(DomainError):
        l12_dca(np.eye(2), np.zeros(2))


def test_dimension_checks():
    with pytest.raises(DomainError):
        dca_tl1(np.ones((3, 4)), np.ones(2))
    with pytest.raises(DomainError):
        solve("L0", np.eye(2), np.ones(2))


@pytest.mark.parametrize("seed", range(6))
def test_feasible_and_exact_recovery(seed):
    A, b, x = pce_problem(seed)
    for fn in (dca_tl1, l12_dca, l1_basis_pursuit):
        res = fn(A, b)
        if res.converged:
            assert res.residual <= 1e-5 * (1 + np.linalg.norm(b))
    res = dca_tl1(A, b)
    assert res.sparsity == np.count_nonzero(np.abs(res.x) > 1e-6)
    assert res.method == "TL1" and res.a_used == 0.3


@pytest.mark.parametrize("seed", range(6))
def test_descent_tight(seed):
    A, b, _ = pce_problem(seed)
    tl1 = dca_tl1(A, b, TIGHT)
    assert np.all(np.diff(tl1.objective_history) <= 1e-10)
    assert tl1.objective_history[0] == pytest.approx(penalty(l1_basis_pursuit(A, b, TIGHT).x, 0.3))
    l12 = l12_dca(A, b, TIGHT)
    assert np.all(np.diff(l12.objective_history) <= 1e-10)
    ls = dca_tl1(A, b, replace(TIGHT, init="lstsq"))
    assert np.all(np.diff(ls.objective_history) <= 1e-10)
    assert ls.objective_history[0] == pytest.approx(penalty(np.linalg.pinv(A) @ b, 0.3))


def test_l1_start_never_worse_than_l1():
    # the first DCA iterate is the l1 solution and the objective only decreases
    for seed in range(4):
        A, b, _ = pce_problem(seed, k=20, M=40, s=10)
        l1 = l1_basis_pursuit(A, b, TIGHT).x
        tl1 = dca_tl1(A, b, TIGHT).x
        assert penalty(tl1, 0.3) <= penalty(l1, 0.3) + 1e-8


def test_explicit_start_and_bad_init():
    A, b, x = pce_problem(2)
    res = dca_tl1(A, b, TIGHT, x0=x)
    np.testing.assert_allclose(res.x, x, atol=1e-6)
    with pytest.raises(DomainError):
        dca_tl1(A, b, x0=np.ones(3))
    with pytest.raises(DomainError):
        SolverConfig(init="zeros")


def test_descent_default_tolerance():
    # at the default inner tolerance each iterate is only accurate to about eps_inner
    A, b, _ = pce_problem(11, k=20, M=60, s=5)
    cfg = SolverConfig()
    slack = (cfg.a + 1) / cfg.a * np.sqrt(A.shape[1]) * cfg.eps_inner
    res = dca_tl1(A, b, cfg)
    assert np.all(np.diff(res.objective_history) <= slack)


def test_cache_bitwise_identical():
    A, b, _ = pce_problem(4, k=10, M=25, s=5)
    x1 = dca_tl1(A, b, cache=True).x
    x2 = dca_tl1(A, b, cache=False).x
    assert x1.tobytes() == x2.tobytes()


def test_deterministic():
    A, b, _ = pce_problem(5)
    for method in ("TL1", "adaptiveTL1", "L1", "L1minus2"):
        assert solve(method, A, b).x.tobytes() == solve(method, A, b).x.tobytes()


@pytest.mark.parametrize("seed", range(5))
def test_large_a_degenerates_to_l1(seed):
    A, b, _ = small_problem(seed, M=4, N=8, s=2)
    tl1 = dca_tl1(A, b, SolverConfig(a=1e6))
    l1 = l1_basis_pursuit(A, b)
    assert abs(np.abs(tl1.x).sum() - np.abs(l1.x).sum()) < 1e-3


def test_adaptive_single_candidate():
    A, b, _ = pce_problem(2)
    ad = adaptive_dca_tl1(A, b, [0.3])
    assert ad.x.tobytes() == dca_tl1(A, b).x.tobytes()
    assert ad.method == "adaptiveTL1" and ad.a_used == 0.3


def test_adaptive_picks_sparsest_first_on_ties():
    A, b, _ = pce_problem(3)
    runs = {a: dca_tl1(A, b, SolverConfig(a=a)) for a in LOW_DIM_CANDIDATES}
    best = min(runs[a].sparsity for a in LOW_DIM_CANDIDATES)
    first = next(a for a in LOW_DIM_CANDIDATES if runs[a].sparsity == best)
    ad = adaptive_dca_tl1(A, b, LOW_DIM_CANDIDATES)
    assert ad.sparsity == best and ad.a_used == first


def test_candidate_defaults():
    assert LOW_DIM_CANDIDATES == (0.2, 0.3, 1.0)
    assert HIGH_DIM_CANDIDATES == (0.05, 0.1, 0.2, 0.3, 1.0)
    with pytest.raises(DomainError):
        adaptive_dca_tl1(np.eye(2), np.ones(2), [])


def test_nonfinite_input_rejected():
    with pytest.raises(DomainError):
        dca_tl1(np.eye(2), np.array([np.nan, 1.0]))


def test_overflow_rejected():
    with pytest.raises(SolverError):
        dca_tl1(np.array([[1e200, 1.0]]), np.array([1.0]))


def test_nonfinite_iterate_reports_iteration(monkeypatch):
    import tl1pce.solvers as solvers

    monkeypatch.setattr(solvers, "soft_threshold", lambda x, r: np.full_like(x, np.nan))
    with pytest.raises(SolverError, match="outer 1, inner 1"):
        dca_tl1(np.eye(2), np.array([1.0, 0.0]))


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**31))
def test_l1_optimality_vs_oracle_property(seed):
    A, b, _ = small_problem(seed, M=2, N=5, s=1)
    value, _ = l1_vertex_oracle(A, b)
    res = l1_basis_pursuit(A, b, TIGHT)
    assert res.residual < 1e-6
    assert np.abs(res.x).sum() <= value + 1e-5
