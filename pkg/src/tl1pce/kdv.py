"""Stochastically forced KdV equation and its sparse chaos surrogate.

Solves ``u_t + 2 u u_x + u_xxx = f(t; xi)`` on ``[-70, 70]`` with
Chebyshev-Gauss-Lobatto collocation.  The convection term (together with
the forcing) is advanced by third-order Adams-Bashforth, the dispersion
term by Crank-Nicolson.  The forcing is a truncated Karhunen-Loeve
expansion of an exponential covariance in time, so it is uniform in space.
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh, lu_factor, lu_solve

from ._validation import DomainError, SolverError, check_positive, check_positive_int, check_vector

logger = logging.getLogger(__name__)

QOI_X = -6.5878


@dataclass(frozen=True)
class KLExpansion:
    """Leading eigenpairs of ``exp(-|t - t'| / corr_length)`` on ``[0, T]``.

    ``nodes`` and ``weights`` are the Gauss-Legendre rule used by the Nystrom
    discretization; ``modes[:, i]`` holds eigenfunction ``i`` at the nodes.
    """

    corr_length: float
    sigma: float
    T: float
    eigenvalues: np.ndarray = field(repr=False)
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    modes: np.ndarray = field(repr=False)
    all_eigenvalues: np.ndarray = field(repr=False)

    @property
    def d(self):
        return self.eigenvalues.shape[0]

    @cached_property
    def _splines(self):
        return CubicSpline(self.nodes, self.modes, axis=0, extrapolate=True)

    def eigenfunctions(self, t):
        """Eigenfunctions at times ``t``; shape ``t.shape + (d,)``."""
        return self._splines(np.asarray(t, dtype=float))


def covariance(t, s, corr_length):
    return np.exp(-np.abs(np.subtract.outer(t, s)) / corr_length)


def kl_eigenpairs(corr_length=0.25, T=1.0, d=2, n_quad=200, sigma=0.1, corrected=True):
    """Nystrom approximation of the KL eigenpairs with Gauss-Legendre quadrature.

    The kernel has a kink on the diagonal, which limits plain Nystrom to
    second-order convergence.  With ``corrected`` the row integrals of the
    kernel, known in closed form, replace their quadrature values on the
    diagonal (singularity subtraction), which restores fourth order.  The
    plain rule keeps the discrete trace identity ``sum(lambda) = T`` exact.

    Eigenfunctions are normalized in the quadrature inner product and signed
    so that their value at the first node (closest to ``t = 0``) is positive.
    """
    corr_length = check_positive(corr_length, "corr_length")
    T = check_positive(T, "T")
    d = check_positive_int(d, "d")
    n_quad = check_positive_int(n_quad, "n_quad")
    if n_quad < 4 * d:
        raise DomainError(f"n_quad={n_quad} must be at least 4*d={4 * d}")
    g, w = np.polynomial.legendre.leggauss(n_quad)
    nodes = 0.5 * T * (g + 1.0)
    weights = 0.5 * T * w
    sw = np.sqrt(weights)
    K = covariance(nodes, nodes, corr_length)
    sym = sw[:, None] * K * sw[None, :]
    if corrected:
        exact_rows = corr_length * (2.0 - np.exp(-nodes / corr_length)
                                    - np.exp(-(T - nodes) / corr_length))
        sym[np.diag_indices(n_quad)] += exact_rows - K @ weights
    vals, vecs = eigh(sym)
    vals, vecs = vals[::-1], vecs[:, ::-1]
    if np.count_nonzero(vals > 0) < d:
        raise DomainError(f"only {np.count_nonzero(vals > 0)} positive eigenvalues, asked for {d}")
    modes = vecs[:, :d] / sw[:, None]
    modes *= np.sign(modes[0])
    return KLExpansion(corr_length=corr_length, sigma=float(sigma), T=T,
                       eigenvalues=vals[:d].copy(), nodes=nodes, weights=weights,
                       modes=modes, all_eigenvalues=vals)


def random_force(kl, xi, t):
    """Forcing ``sigma sum_i sqrt(lambda_i) phi_i(t) xi_i``."""
    xi = check_vector(xi, "xi")
    if xi.shape[0] != kl.d:
        raise DomainError(f"xi has length {xi.shape[0]}, expansion has {kl.d} modes")
    t_arr = np.asarray(t, dtype=float)
    if np.any(t_arr < -1e-12) or np.any(t_arr > kl.T + 1e-12):
        raise DomainError(f"t must lie in [0, {kl.T}]")
    if kl.sigma == 0 or not np.any(xi):
        return 0.0 if t_arr.ndim == 0 else np.zeros(t_arr.shape)
    val = kl.sigma * kl.eigenfunctions(t_arr) @ (np.sqrt(kl.eigenvalues) * xi)
    return float(val) if t_arr.ndim == 0 else val


def cheb_nodes(n):
    """Chebyshev-Gauss-Lobatto points ``cos(pi j / n)``, ``j = 0..n`` (descending)."""
    return np.cos(np.pi * np.arange(n + 1) / n)


def cheb_diff(n):
    """First-derivative collocation matrix on the ``n + 1`` Lobatto points of ``[-1, 1]``.

    Off-diagonal entries use the closed form; the diagonal is set to minus
    the row sum so constants are differentiated to zero up to rounding.
    """
    x = cheb_nodes(n)
    c = np.ones(n + 1)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n + 1)
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(n + 1))
    D -= np.diag(D.sum(axis=1))
    return D


def clenshaw_curtis_weights(n):
    """Quadrature weights on the ``n + 1`` Lobatto points of ``[-1, 1]``."""
    theta = np.pi * np.arange(n + 1) / n
    w = np.zeros(n + 1)
    v = np.ones(n - 1)
    interior = slice(1, n)
    if n % 2 == 0:
        w[0] = w[n] = 1.0 / (n**2 - 1)
        for k in range(1, n // 2):
            v -= 2.0 * np.cos(2 * k * theta[interior]) / (4 * k**2 - 1)
        v -= np.cos(n * theta[interior]) / (n**2 - 1)
    else:
        w[0] = w[n] = 1.0 / n**2
        for k in range(1, (n - 1) // 2 + 1):
            v -= 2.0 * np.cos(2 * k * theta[interior]) / (4 * k**2 - 1)
    w[interior] = 2.0 * v / n
    return w


def barycentric_weights(n):
    w = (-1.0) ** np.arange(n + 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    return w


def node_diff(x):
    """First-derivative matrix of polynomial interpolation on arbitrary distinct nodes."""
    dx = x[:, None] - x[None, :]
    np.fill_diagonal(dx, 1.0)
    # barycentric weights 1 / prod(x_i - x_j), formed in log space
    logw = -np.sum(np.log(np.abs(dx)), axis=1)
    w = np.prod(np.sign(dx), axis=1) * np.exp(logw - logw.max())
    D = (w[None, :] / w[:, None]) / dx
    np.fill_diagonal(D, 0.0)
    D -= np.diag(D.sum(axis=1))
    return D


def third_derivative_operator(n):
    """Third derivative on the interior Lobatto points of ``[-1, 1]`` with built-in boundary conditions.

    Interpolates ``u = w p`` with ``w(x) = (1 + x)(1 - x)^2``, so the
    interpolant satisfies ``u(-1) = u(1) = 0`` and ``u'(1) = 0``; ``p`` is the
    polynomial through ``u_j / w(x_j)`` on the ``n - 1`` interior nodes.
    The extra condition at the right end is what removes the growing
    spurious modes of plain collocation.
    """
    x = cheb_nodes(n)[1:-1]
    D = node_diff(x)
    D2 = D @ D
    D3 = D2 @ D
    w = (1.0 + x) * (1.0 - x) ** 2
    w1 = -1.0 - 2.0 * x + 3.0 * x**2
    w2 = -2.0 + 6.0 * x
    w3 = 6.0
    op = w3 * np.eye(x.size) + 3.0 * w2[:, None] * D + 3.0 * w1[:, None] * D2 + w[:, None] * D3
    return op / w[None, :]


@dataclass
class KdVGrid:
    """Collocation grid on ``[-half_width, half_width]`` and time-stepping settings.

    ``x_nodes`` are the ``n_x`` Lobatto points in descending order, ``D`` the
    first-derivative matrix on all of them, and ``D3`` the third-derivative
    operator acting on the interior values of ``u - u_boundary``.
    """

    n_x: int = 256
    half_width: float = 70.0
    dt: float = 1e-4
    T_final: float = 1.0

    def __post_init__(self):
        check_positive_int(self.n_x, "n_x", minimum=8)
        check_positive(self.half_width, "half_width")
        check_positive(self.dt, "dt")
        check_positive(self.T_final, "T_final")
        n = self.n_x - 1
        L = self.half_width
        self.x_nodes = L * cheb_nodes(n)
        self.D = cheb_diff(n) / L
        self.D3 = third_derivative_operator(n) / L**3
        self.quad_weights = L * clenshaw_curtis_weights(n)
        self._bary = barycentric_weights(n)

    @property
    def n_steps(self):
        return int(round(self.T_final / self.dt))

    def integrate(self, u):
        return float(self.quad_weights @ u)

    def interpolate(self, u, x):
        """Barycentric interpolation of nodal values ``u`` at ``x``."""
        diff = x - self.x_nodes
        hit = np.flatnonzero(diff == 0)
        if hit.size:
            return float(u[hit[0]])
        t = self._bary / diff
        return float(t @ u / t.sum())


def soliton(x, t, nu=1.0, x0=0.0):
    """Travelling solution ``(3 nu / 2) sech^2(sqrt(nu) (x - x0 - nu t) / 2)`` of the unforced equation."""
    return 1.5 * nu / np.cosh(0.5 * np.sqrt(nu) * (x - x0 - nu * t)) ** 2


@dataclass
class KdVSolution:
    u: np.ndarray
    t: float
    mass_history: np.ndarray = field(repr=False)
    forcing_integral: float = 0.0


def kdv_solve(grid, nu=1.0, x0=0.0, kl=None, xi=None, record_mass=False):
    """Advance the forced KdV equation from the soliton initial state to ``grid.T_final``.

    The forcing is uniform in space, so far from the wave ``u`` equals its
    time integral ``W(t)``.  Both boundary values are set to ``W`` (advanced
    with the same explicit weights as the interior) and ``u_x`` vanishes at
    the right end.

    Returns
    -------
    KdVSolution
        Nodal values at the final time.  With ``record_mass`` the
        Clenshaw-Curtis mass after every step is included; ``forcing_integral``
        is ``W(T_final)``.
    """
    forced = kl is not None and xi is not None and kl.sigma != 0 and bool(np.any(xi))
    force = _force_table(grid, kl, [xi]) if forced else np.zeros((grid.n_steps + 1, 1))
    u, wall, mass = _march(grid, nu, x0, force, record_mass)
    return KdVSolution(u=u[:, 0], t=grid.n_steps * grid.dt, mass_history=mass[:, 0],
                       forcing_integral=float(wall[0]))


def kdv_solve_many(grid, xis, nu=1.0, x0=0.0, kl=None):
    """Final-time solutions for several forcing vectors at once, shape ``(n_x, len(xis))``.

    Columns are marched together so the per-step products become
    matrix-matrix products.
    """
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    if kl is None:
        force = np.zeros((grid.n_steps + 1, xis.shape[0]))
    else:
        force = _force_table(grid, kl, xis)
    return _march(grid, nu, x0, force, False)[0]


def _force_table(grid, kl, xis):
    times = np.minimum(grid.dt * np.arange(grid.n_steps + 1), kl.T)
    return np.column_stack([np.asarray(random_force(kl, xi, times), dtype=float) for xi in xis])


def _march(grid, nu, x0, force, record_mass):
    nu = check_positive(nu, "nu")
    dt = grid.dt
    D, T3 = grid.D, grid.D3
    m = T3.shape[0]
    n_cols = force.shape[1]
    inner = slice(1, grid.n_x - 1)

    lu = lu_factor(np.eye(m) + 0.5 * dt * T3)
    rhs_op = np.eye(m) - 0.5 * dt * T3
    lift = 0.5 * dt * T3.sum(axis=1)[:, None]

    u = np.repeat(soliton(grid.x_nodes, 0.0, nu, x0)[:, None], n_cols, axis=1)
    u[0] = u[-1] = 0.0
    wall = np.zeros(n_cols)
    mass = [grid.quad_weights @ u] if record_mass else []
    hist = []
    for k in range(grid.n_steps):
        hist.append(-2.0 * u[inner] * (D @ u)[inner])
        if k < 2:
            incr, f_incr = _rk3_increment(u, k, dt, D, force, inner)
        else:
            incr = dt * (23.0 * hist[2] - 16.0 * hist[1] + 5.0 * hist[0]) / 12.0
            f_incr = dt * (23.0 * force[k] - 16.0 * force[k - 1] + 5.0 * force[k - 2]) / 12.0
            hist.pop(0)
        wall_new = wall + f_incr
        rhs = rhs_op @ u[inner] + incr + f_incr + (wall + wall_new) * lift
        u = np.empty_like(u)
        u[inner] = lu_solve(lu, rhs, check_finite=False)
        u[0] = u[-1] = wall = wall_new
        if record_mass:
            mass.append(grid.quad_weights @ u)
        if k % 100 == 0 and not np.all(np.isfinite(u)):
            raise SolverError(f"KdV solution blew up at step {k + 1}")
    if not np.all(np.isfinite(u)):
        raise SolverError(f"KdV solution blew up before step {grid.n_steps}")
    return u, wall, np.asarray(mass).reshape(-1, n_cols)


def _rk3_increment(u, k, dt, D, force, inner):
    """Shu-Osher RK3 increment of ``-2 u u_x + f`` for the startup steps.

    Only the convection part is integrated by RK3 on the full field (with
    frozen boundary values); the forcing increment uses the matching
    quadrature weights ``(1, 4, 1) / 6`` at ``t_k``, midpoint, ``t_{k+1}``.
    """

    def conv(v):
        out = np.zeros_like(v)
        out[inner] = -2.0 * v[inner] * (D @ v)[inner]
        return out

    u1 = u + dt * conv(u)
    u2 = 0.75 * u + 0.25 * (u1 + dt * conv(u1))
    u3 = u / 3.0 + 2.0 / 3.0 * (u2 + dt * conv(u2))
    f_incr = dt * (force[k] + 2.0 * (force[k] + force[k + 1]) + force[k + 1]) / 6.0
    return (u3 - u)[inner], f_incr


@dataclass
class KdVExperimentResult:
    """Per-trial records plus recovered coefficient vectors keyed by ``(method, M, trial)``."""

    records: list
    coefficients: dict = field(repr=False)
    basis: object = field(repr=False)

    def sparsity(self, method, M, trial, threshold=1e-6):
        return int(np.count_nonzero(np.abs(self.coefficients[(method, M, trial)]) > threshold))

    def coefficient_csv(self, method):
        """Long-format table ``sweep_value,trial,index,label,magnitude``."""
        import csv
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["sweep_value", "trial", "index", "label", "magnitude"])
        labels = self.basis.labels()
        for (m, M, trial), coef in sorted(self.coefficients.items(), key=lambda kv: kv[0][1:]):
            if m != method:
                continue
            for j, c in enumerate(coef):
                writer.writerow([M, trial, j, labels[j], repr(float(abs(c)))])
        return buf.getvalue()


@dataclass(frozen=True)
class KdVSettings:
    nu: float = 1.0
    x0: float = 0.0
    sigma: float = 0.1
    corr_length: float = 0.25
    n_x: int = 256
    dt: float = 1e-4
    T_final: float = 1.0
    qoi_x: float = QOI_X
    n_quad: int = 200


def kdv_qoi(xis, settings=KdVSettings(), kl=None, grid=None):
    """Quantity of interest ``u(qoi_x, T_final; xi)`` for each row of ``xis``."""
    xis = np.atleast_2d(np.asarray(xis, dtype=float))
    grid = grid or KdVGrid(n_x=settings.n_x, dt=settings.dt, T_final=settings.T_final)
    kl = kl or kl_eigenpairs(settings.corr_length, settings.T_final, xis.shape[1],
                             settings.n_quad, settings.sigma)
    U = kdv_solve_many(grid, xis, nu=settings.nu, x0=settings.x0, kl=kl)
    return np.array([grid.interpolate(U[:, j], settings.qoi_x) for j in range(U.shape[1])])


def _kdv_cell(cell):
    from .basis import assemble_matrix, enumerate_total_degree, evaluate_expansion, sample_uniform
    from .harness import FUNCTION_DELTA, ExperimentRecord, _stream, relative_l2_error, trial_seed
    from .solvers import SolverConfig, solve

    d, k, M, grid_index, trial, seed, settings, n_validation, methods, candidates, cfg = cell
    data_seed = trial_seed(seed, grid_index, trial)
    basis = enumerate_total_degree(d, k)
    train = sample_uniform(d, M, data_seed)
    validation = _stream(data_seed, 2).uniform(-1.0, 1.0, size=(n_validation, d))
    try:
        g = kdv_qoi(np.vstack([train.points, validation]), settings)
    except SolverError as exc:
        logger.warning("trial %d at M=%d aborted: %s", trial, M, exc)
        return [], {}
    g_train, g_val = g[:M], g[M:]
    A = assemble_matrix(basis, train).entries
    records, coefs = [], {}
    for method in methods:
        try:
            res = solve(method, A, g_train, cfg or SolverConfig(delta=FUNCTION_DELTA),
                        candidates)
        except Exception as exc:
            logger.warning("%s failed on trial %d at M=%d: %s", method, trial, M, exc)
            records.append(ExperimentRecord(method, "M", M, trial, data_seed,
                                            rel_error=float("nan")))
            continue
        err = relative_l2_error(evaluate_expansion(basis, res.x, validation), g_val)
        records.append(ExperimentRecord(method, "M", M, trial, data_seed, rel_error=err))
        coefs[(method, M, trial)] = res.x
    return records, coefs


def kdv_uq_experiment(d=2, k=20, M_grid=(30,), trials=10, seed=0, settings=KdVSettings(),
                      n_validation=100, methods=("L1", "L1minus2", "adaptiveTL1"),
                      candidates=None, cfg=None, workers=None):
    """Sparse chaos surrogates of the KdV quantity of interest.

    For every sample count and trial, training and validation inputs are
    drawn uniformly, the PDE is solved at each of them, and each method fits
    coefficients from the training values.  The relative RMS error on the
    validation set goes into the records; coefficient vectors are kept for
    sparsity comparisons.
    """
    from .harness import _run_cells, default_candidates, sort_records
    from .basis import enumerate_total_degree

    if trials > 100:
        raise DomainError("at most 100 trials are supported")
    basis = enumerate_total_degree(d, k)
    candidates = tuple(candidates or default_candidates(d))
    cells = [(d, k, M, g, t, seed, settings, n_validation, tuple(methods), candidates, cfg)
             for g, M in enumerate(M_grid) for t in range(trials)]
    from concurrent.futures import ProcessPoolExecutor
    from .harness import worker_count

    workers = worker_count() if workers is None else workers
    if workers <= 1 or len(cells) <= 1:
        outs = [_kdv_cell(c) for c in cells]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outs = list(pool.map(_kdv_cell, cells, chunksize=1))
    records, coefs = [], {}
    for recs, cf in outs:
        records.extend(recs)
        coefs.update(cf)
    return KdVExperimentResult(records=sort_records(records), coefficients=coefs, basis=basis)
