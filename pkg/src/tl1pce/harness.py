"""Seeded recovery experiments, analytic targets and CSV emission."""

import csv
import io
import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, fields

import numpy as np

from ._validation import DomainError, check_positive_int, check_vector
from .basis import assemble_matrix, enumerate_total_degree, evaluate_expansion, sample_uniform
from .penalty import PenaltyParam, rho_a
from .solvers import HIGH_DIM_CANDIDATES, LOW_DIM_CANDIDATES, METHODS, SolverConfig, solve

logger = logging.getLogger(__name__)

WORKERS_ENV = "TL1PCE_WORKERS"
CSV_HEADER = ("method", "sweep_name", "sweep_value", "trial", "seed", "success", "rel_error",
              "wall_ms")
SUCCESS_TOL = 1e-3
KINDS = ("success_vs_M", "success_vs_s", "error_vs_M", "contour_grid")
TARGETS = ("planted_sparse", "f1", "f2")
# splitting penalty for smooth, non-sparse targets; the inner iteration
# stalls at the sparse-recovery default there
FUNCTION_DELTA = 1000.0


def default_candidates(d):
    """Candidate ``a`` values for adaptive TL1: short list in low dimension."""
    return LOW_DIM_CANDIDATES if d <= 3 else HIGH_DIM_CANDIDATES


@dataclass
class ExperimentSpec:
    """One sweep: basis size, swept parameter, trials and methods.

    For ``success_vs_M`` and ``error_vs_M`` the sweep values are sample
    counts and ``s_fixed`` the sparsity (planted targets only); for
    ``success_vs_s`` they are sparsities at ``M_fixed`` samples.  Without an
    explicit ``solver``, function experiments use ``delta = FUNCTION_DELTA``
    and sparse-recovery experiments the solver defaults.
    """

    kind: str
    d: int
    k: int
    sweep_values: tuple
    s_fixed: int | None = None
    M_fixed: int | None = None
    trials: int = 100
    methods: tuple = ("TL1", "L1minus2", "L1")
    a: float = 0.3
    candidates: tuple | None = None
    seed: int = 0
    target: str = "planted_sparse"
    n_validation: int = 2000
    solver: SolverConfig | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DomainError(f"unknown experiment kind {self.kind!r}")
        if self.target not in TARGETS:
            raise DomainError(f"unknown target {self.target!r}")
        self.sweep_values = tuple(int(v) for v in self.sweep_values)
        if not self.sweep_values or any(b <= a for a, b in zip(self.sweep_values,
                                                               self.sweep_values[1:])):
            raise DomainError("sweep values must be non-empty and strictly increasing")
        check_positive_int(self.trials, "trials")
        self.methods = tuple(self.methods)
        for m in self.methods:
            if m not in METHODS:
                raise DomainError(f"unknown method {m!r}")
        PenaltyParam(self.a)
        if self.candidates is None:
            self.candidates = default_candidates(self.d)
        self.candidates = tuple(float(c) for c in self.candidates)
        if self.solver is None:
            self.solver = (SolverConfig(delta=FUNCTION_DELTA) if self.kind == "error_vs_M"
                           else SolverConfig())

    @property
    def sweep_name(self):
        return "s" if self.kind == "success_vs_s" else "M"


@dataclass
class ExperimentRecord:
    method: str
    sweep_name: str
    sweep_value: int
    trial: int
    seed: int
    success: bool | None = None
    rel_error: float | None = None
    wall_ms: float | None = None

    def row(self, timing=False):
        def fmt(v):
            if v is None:
                return ""
            if isinstance(v, bool):
                return "1" if v else "0"
            if isinstance(v, float):
                return repr(v)
            return str(v)

        values = [getattr(self, f.name) for f in fields(self)]
        if not timing:
            values[-1] = None
        return [fmt(v) for v in values]


def records_to_csv(records, timing=False):
    """Serialize records under the fixed header; wall times only with ``timing``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for rec in records:
        writer.writerow(rec.row(timing))
    return buf.getvalue()


def trial_seed(base_seed, grid_index, trial):
    """Data seed shared by every method in one (grid point, trial) cell."""
    ss = np.random.SeedSequence(entropy=base_seed, spawn_key=(grid_index, trial))
    return int(ss.generate_state(1, dtype=np.uint32)[0])


def _stream(seed, purpose):
    """Independent PCG64 generator for one purpose within a trial."""
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, purpose])))


def plant_sparse_target(basis, s, seed):
    """Coefficient vector with a uniformly random size-``s`` support and N(0, 1) values."""
    N = basis.N if hasattr(basis, "N") else int(basis)
    if not 0 <= s <= N:
        raise DomainError(f"sparsity s={s} must lie in [0, {N}]")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    x = np.zeros(N)
    support = rng.choice(N, size=s, replace=False)
    x[support] = rng.standard_normal(s)
    return x


def f1(z):
    """Rational test function ``1 / sum_i (0.5 + 0.1 z_i)``."""
    z = np.asarray(z, dtype=float)
    return 1.0 / np.sum(0.5 + 0.1 * z, axis=-1)


def f2(z):
    """Corner-peak function ``(1 + (1/2d) sum_i ((i - 1/2)/d)(z_i + 1))^(-d-1)``."""
    z = np.asarray(z, dtype=float)
    d = z.shape[-1]
    c = (np.arange(1, d + 1) - 0.5) / d
    return (1.0 + np.sum(c * (z + 1.0), axis=-1) / (2.0 * d)) ** (-d - 1)


ANALYTIC_TARGETS = {"f1": f1, "f2": f2}


def relative_l2_error(approx_values, true_values):
    """``||approx - true||_2 / ||true||_2`` (the relative root-mean-square error)."""
    approx = check_vector(approx_values, "approx_values")
    true = check_vector(true_values, "true_values")
    if approx.shape != true.shape:
        raise DomainError(f"length mismatch: {approx.shape[0]} vs {true.shape[0]}")
    denom = np.linalg.norm(true)
    if denom == 0:
        raise DomainError("true values are all zero")
    return float(np.linalg.norm(approx - true) / denom)


def worker_count():
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        return 1


def _run_cells(func, cells, workers):
    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(cells) <= 1:
        out = [func(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(func, cells, chunksize=1))
    records = [r for group in out for r in group]
    return sort_records(records)


def sort_records(records):
    order = {m: i for i, m in enumerate(METHODS)}
    return sorted(records, key=lambda r: (r.sweep_value, r.trial, order[r.method]))


def _solve_timed(spec, method, A, b):
    start = time.perf_counter()
    try:
        res = solve(method, A, b, spec.solver.with_a(spec.a), spec.candidates)
    except Exception as exc:  # recorded as a failed trial
        logger.warning("%s failed: %s", method, exc)
        res = None
    return res, 1e3 * (time.perf_counter() - start)


def _success_cell(cell):
    spec, grid_index, trial = cell
    value = spec.sweep_values[grid_index]
    M, s = (value, spec.s_fixed) if spec.kind == "success_vs_M" else (spec.M_fixed, value)
    basis = enumerate_total_degree(spec.d, spec.k)
    seed = trial_seed(spec.seed, grid_index, trial)
    samples = sample_uniform(spec.d, M, seed)
    x_true = plant_sparse_target(basis, s, _stream(seed, 1))
    A = assemble_matrix(basis, samples).entries
    b = A @ x_true
    records = []
    for method in spec.methods:
        res, ms = _solve_timed(spec, method, A, b)
        ok = res is not None and float(np.max(np.abs(res.x - x_true))) < SUCCESS_TOL
        records.append(ExperimentRecord(method, spec.sweep_name, value, trial, seed,
                                        success=bool(ok), wall_ms=ms))
    return records


def run_success_experiment(spec, workers=None):
    """Success-rate sweep on planted sparse expansions.

    A trial succeeds when ``||x - x*||_inf < 1e-3``.  All methods in a trial
    see the same samples and target.  Records are sorted by grid point,
    trial and method, independent of the worker schedule.
    """
    if spec.kind not in ("success_vs_M", "success_vs_s"):
        raise DomainError(f"not a success experiment: {spec.kind}")
    held = spec.s_fixed if spec.kind == "success_vs_M" else spec.M_fixed
    if held is None:
        raise DomainError("the held parameter (s_fixed or M_fixed) is required")
    cells = [(spec, g, t) for g in range(len(spec.sweep_values)) for t in range(spec.trials)]
    return _run_cells(_success_cell, cells, workers)


def _function_cell(cell):
    spec, grid_index, trial = cell
    M = spec.sweep_values[grid_index]
    basis = enumerate_total_degree(spec.d, spec.k)
    seed = trial_seed(spec.seed, grid_index, trial)
    samples = sample_uniform(spec.d, M, seed)
    validation = _stream(seed, 2).uniform(-1.0, 1.0, size=(spec.n_validation, spec.d))
    if spec.target == "planted_sparse":
        coef = plant_sparse_target(basis, spec.s_fixed or 1, _stream(seed, 1))

        def target(z):
            return evaluate_expansion(basis, coef, z)
    else:
        target = ANALYTIC_TARGETS[spec.target]
    A = assemble_matrix(basis, samples).entries
    b = np.asarray(target(samples.points), dtype=float)
    truth = np.asarray(target(validation), dtype=float)
    records = []
    for method in spec.methods:
        res, ms = _solve_timed(spec, method, A, b)
        err = (relative_l2_error(evaluate_expansion(basis, res.x, validation), truth)
               if res is not None else float("nan"))
        records.append(ExperimentRecord(method, "M", M, trial, seed, rel_error=err, wall_ms=ms))
    return records


def run_function_experiment(spec, workers=None):
    """Approximation-error sweep over sample counts for an analytic or planted target.

    Errors are relative l2 errors on ``spec.n_validation`` fresh uniform
    points per trial.
    """
    if spec.kind != "error_vs_M":
        raise DomainError(f"not a function experiment: {spec.kind}")
    cells = [(spec, g, t) for g in range(len(spec.sweep_values)) for t in range(spec.trials)]
    return _run_cells(_function_cell, cells, workers)


def summarize(records):
    """Mean success flag or mean relative error per ``(method, sweep_value)``."""
    groups = {}
    for r in records:
        val = r.rel_error if r.success is None else float(r.success)
        groups.setdefault((r.method, r.sweep_value), []).append(val)
    return {key: float(np.mean(vals)) for key, vals in groups.items()}


def emit_contour_grid(p, grid_half_width=1.0, resolution=101):
    """CSV of ``x1, x2, tl1, l1`` on a uniform square grid for plotting level lines."""
    p = p if isinstance(p, PenaltyParam) else PenaltyParam(p)
    resolution = check_positive_int(resolution, "resolution", minimum=2)
    axis = np.linspace(-grid_half_width, grid_half_width, resolution)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["x1", "x2", "tl1", "l1"])
    for x1 in axis:
        for x2 in axis:
            tl1 = rho_a(x1, p) + rho_a(x2, p)
            writer.writerow([repr(float(x1)), repr(float(x2)), repr(float(tl1)),
                             repr(float(abs(x1) + abs(x2)))])
    return buf.getvalue()
