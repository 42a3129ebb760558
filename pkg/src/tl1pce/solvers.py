"""Equality-constrained sparse recovery: DCA-TL1, adaptive TL1, l1 and l1-2.

All solvers share one inner splitting.  For a fixed linearization vector
``z`` and l1 weight ``w`` it minimizes ``w ||x||_1 - <z, x>`` subject to
``A x = b`` by alternating

    x <- (A^T A + I)^{-1} (A^T b + y + (z - u - A^T v) / delta)
    y <- shrink(x + u / delta, w / delta)
    u <- u + delta (x - y)
    v <- v + delta (A x - b)

until the ``x`` step and both primal residuals ``||x - y||`` and
``||A x - b||`` are at most ``eps_inner``.  The DCA
outer loop updates ``z`` from the current iterate.  ``A^T A + I`` is
Cholesky-factored once per solver call.
"""

import logging
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from ._validation import (
    DomainError,
    SolverError,
    check_positive,
    check_positive_int,
    check_system,
    check_vector,
)
from .penalty import PenaltyParam, dc_subgradient, penalty, soft_threshold

logger = logging.getLogger(__name__)

SPARSITY_THRESHOLD = 1e-6
LOW_DIM_CANDIDATES = (0.2, 0.3, 1.0)
HIGH_DIM_CANDIDATES = (0.05, 0.1, 0.2, 0.3, 1.0)

METHODS = ("TL1", "adaptiveTL1", "L1", "L1minus2")
INITS = ("l1", "lstsq")


@dataclass(frozen=True)
class SolverConfig:
    """Tolerances, splitting penalty and iteration caps shared by all solvers.

    ``init`` picks the first DCA iterate: ``"l1"`` starts from the l1 basis
    pursuit solution, which is what one DCA step from the origin produces,
    and ``"lstsq"`` from the minimum-norm least-squares solution.
    """

    eps_outer: float = 1e-5
    eps_inner: float = 1e-6
    delta: float = 10.0
    max_outer: int = 50
    max_inner: int = 5000
    a: float = 0.3
    init: str = "l1"

    def __post_init__(self):
        if self.init not in INITS:
            raise DomainError(f"init must be one of {INITS}, got {self.init!r}")
        for name in ("eps_outer", "eps_inner", "delta", "a"):
            check_positive(getattr(self, name), name)
        check_positive_int(self.max_outer, "max_outer")
        check_positive_int(self.max_inner, "max_inner")
        if self.delta < 1:
            warnings.warn(f"splitting penalty delta={self.delta} is small; delta >> 1 is expected",
                          stacklevel=3)

    def with_a(self, a):
        return replace(self, a=a)


@dataclass
class SolverResult:
    x: np.ndarray
    outer_iters: int
    inner_iters_total: int
    converged: bool
    residual: float
    sparsity: int
    method: str
    a_used: float | None = None
    objective_history: list = field(default_factory=list, repr=False)


def sparsity(x, threshold=SPARSITY_THRESHOLD):
    """Number of entries with magnitude above ``threshold``."""
    return int(np.count_nonzero(np.abs(x) > threshold))


class _NormalSystem:
    """Cholesky factorization of ``A^T A + I``, applied through its inverse.

    The inverse is formed once from the factor (one N x N triangular solve
    against the identity), so each inner step costs a single mat-vec.
    With ``cache=False`` the factorization is redone on every ``refresh``.
    """

    def __init__(self, A, cache=True):
        with np.errstate(over="ignore"):
            self.gram = A.T @ A + np.eye(A.shape[1])
        if not np.all(np.isfinite(self.gram)):
            raise SolverError("A^T A overflows; rescale the system")
        self.cache = cache
        self._inverse = self._factor_inverse()

    def _factor_inverse(self):
        factor = cho_factor(self.gram, lower=True)
        return cho_solve(factor, np.eye(self.gram.shape[0]))

    def refresh(self):
        if not self.cache:
            self._inverse = self._factor_inverse()

    @property
    def inverse(self):
        return self._inverse

    def solve(self, rhs):
        return self._inverse @ rhs


def min_norm_solution(A, b):
    """Minimum-norm least-squares solution ``A^+ b``."""
    return np.linalg.lstsq(A, b, rcond=None)[0]


def _inner_loop(A, b, Atb, normal, z, x_start, weight, cfg, outer_index):
    delta = cfg.delta
    thresh = weight / delta
    eps2 = cfg.eps_inner**2
    normal.refresh()
    P = normal.inverse
    # scaled duals: us = u / delta, g = A^T v / delta
    base = Atb + z / delta
    x = x_start.copy()
    y = x.copy()
    us = np.zeros_like(x)
    g = np.zeros_like(x)
    step2 = x @ x  # x_0 = 0 in the reference scheme
    gap2 = 0.0
    iters = 0
    while (step2 > eps2 or gap2 > eps2) and iters < cfg.max_inner:
        x_new = P @ (base + y - us - g)
        w = x_new + us
        y = soft_threshold(w, thresh)
        d = x_new - y
        us += d
        r = A @ x_new - b
        g += r @ A
        s = x_new - x
        step2 = s @ s
        # primal residuals of both constraints; without them a feasible start
        # with zero duals stops after one step
        gap2 = max(d @ d, r @ r)
        x = x_new
        iters += 1
        if not np.isfinite(step2 + gap2):
            raise SolverError(f"non-finite iterate at outer {outer_index}, inner {iters}")
    return x, iters, max(step2, gap2) <= eps2


def _l1_pass(A, b, Atb, normal, cfg):
    x0 = min_norm_solution(A, b)
    return _inner_loop(A, b, Atb, normal, np.zeros(A.shape[1]), x0, 1.0, cfg, 1)


def _dca(A, b, cfg, method, linearize, weight, objective, cache=True, x0=None):
    A, b = check_system(A, b)
    normal = _NormalSystem(A, cache=cache)
    Atb = A.T @ b
    x_prev = np.zeros(A.shape[1])
    inner_total = 0
    if x0 is not None:
        x = check_vector(x0, "x0")
        if x.size != A.shape[1]:
            raise DomainError(f"x0 has length {x.size}, expected {A.shape[1]}")
    elif cfg.init == "l1":
        x, inner_total, _ = _l1_pass(A, b, Atb, normal, cfg)
    else:
        x = min_norm_solution(A, b)
    history = [objective(x)]
    inner_ok = True
    outer = 0
    b_scale = 1.0 + np.linalg.norm(b)
    best_x, best_obj = x, np.inf
    while np.linalg.norm(x - x_prev) > cfg.eps_outer and outer < cfg.max_outer:
        z = linearize(x)
        x_next, iters, ok = _inner_loop(A, b, Atb, normal, z, x, weight, cfg, outer + 1)
        inner_total += iters
        inner_ok = inner_ok and ok
        x_prev, x = x, x_next
        outer += 1
        history.append(objective(x))
        if np.linalg.norm(A @ x - b) <= 1e-5 * b_scale and history[-1] < best_obj:
            best_x, best_obj = x, history[-1]
    converged = inner_ok and np.linalg.norm(x - x_prev) <= cfg.eps_outer
    if not converged and np.isfinite(best_obj):
        logger.info("%s hit an iteration cap; returning best feasible iterate", method)
        x = best_x
    return SolverResult(
        x=x,
        outer_iters=outer,
        inner_iters_total=inner_total,
        converged=bool(converged),
        residual=float(np.linalg.norm(A @ x - b)),
        sparsity=sparsity(x),
        method=method,
        objective_history=history,
    )


def dca_tl1(A, b, cfg=None, cache=True, x0=None):
    """Minimize ``P_a(x)`` subject to ``A x = b`` by the DCA-TL1 scheme.

    Parameters
    ----------
    A : array_like or MeasurementMatrix, shape (M, N)
    b : array_like, shape (M,)
    cfg : SolverConfig, optional
        ``cfg.a`` is the penalty shape parameter.
    cache : bool
        Reuse one Cholesky factor for every inner solve.  Disabling it
        refactors per outer iteration and gives identical output.
    x0 : array_like, optional
        First iterate; overrides ``cfg.init``.

    Returns
    -------
    SolverResult
        ``objective_history`` holds ``P_a`` of every outer iterate,
        starting from the initial point.
    """
    cfg = cfg or SolverConfig()
    p = PenaltyParam(cfg.a)
    result = _dca(A, b, cfg, "TL1",
                  linearize=lambda x: dc_subgradient(x, p),
                  weight=p.l1_weight,
                  objective=lambda x: penalty(x, p),
                  cache=cache, x0=x0)
    result.a_used = p.a
    return result


def adaptive_dca_tl1(A, b, candidates=LOW_DIM_CANDIDATES, cfg=None):
    """Run DCA-TL1 for each candidate ``a`` and keep the sparsest result.

    Sparsity counts entries above ``1e-6`` in magnitude; on ties the
    earlier candidate is kept.  With ``cfg.init == "l1"`` the l1 start is
    computed once and shared by all candidates.
    """
    cfg = cfg or SolverConfig()
    candidates = list(candidates)
    if not candidates:
        raise DomainError("candidate set must be non-empty")
    x0 = l1_basis_pursuit(A, b, cfg).x if cfg.init == "l1" else None
    best = None
    errors = []
    for a in candidates:
        try:
            res = dca_tl1(A, b, cfg.with_a(a), x0=x0)
        except SolverError as exc:
            logger.warning("adaptive TL1: candidate a=%s failed: %s", a, exc)
            errors.append(exc)
            continue
        if best is None or res.sparsity < best.sparsity:
            best = res
    if best is None:
        raise SolverError(f"all {len(candidates)} candidates failed") from errors[-1]
    best.method = "adaptiveTL1"
    return best


def l1_basis_pursuit(A, b, cfg=None):
    """Minimize ``||x||_1`` subject to ``A x = b`` with one pass of the inner splitting."""
    cfg = cfg or SolverConfig()
    A, b = check_system(A, b)
    x, iters, ok = _l1_pass(A, b, A.T @ b, _NormalSystem(A), cfg)
    return SolverResult(
        x=x,
        outer_iters=1,
        inner_iters_total=iters,
        converged=bool(ok),
        residual=float(np.linalg.norm(A @ x - b)),
        sparsity=sparsity(x),
        method="L1",
        objective_history=[float(np.sum(np.abs(x)))],
    )


def _l12_objective(x):
    return float(np.sum(np.abs(x)) - np.linalg.norm(x))


def _l12_linearize(x):
    nrm = np.linalg.norm(x)
    return x / nrm if nrm > 0 else np.zeros_like(x)


def l12_dca(A, b, cfg=None, x0=None):
    """Minimize ``||x||_1 - ||x||_2`` subject to ``A x = b`` by DCA."""
    cfg = cfg or SolverConfig()
    A, b = check_system(A, b)
    if not np.any(b):
        raise DomainError("l1-2 recovery requires a nonzero right-hand side")
    return _dca(A, b, cfg, "L1minus2", linearize=_l12_linearize, weight=1.0,
                objective=_l12_objective, x0=x0)


def solve(method, A, b, cfg=None, candidates=None):
    """Dispatch on a method tag from ``METHODS``."""
    cfg = cfg or SolverConfig()
    if method == "TL1":
        return dca_tl1(A, b, cfg)
    if method == "adaptiveTL1":
        return adaptive_dca_tl1(A, b, candidates or LOW_DIM_CANDIDATES, cfg)
    if method == "L1":
        return l1_basis_pursuit(A, b, cfg)
    if method == "L1minus2":
        return l12_dca(A, b, cfg)
    raise DomainError(f"unknown method {method!r}; expected one of {METHODS}")
