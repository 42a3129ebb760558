"""Restricted isometry constants, recovery thresholds and error-bound constants."""

import itertools
from dataclasses import dataclass
from math import comb, log, sqrt

import numpy as np

from ._validation import DomainError, SizeError, check_matrix, check_positive, check_positive_int, check_vector
from .penalty import PenaltyParam, penalty
from .solvers import SolverConfig, dca_tl1

DEFAULT_SUPPORT_CAP = 10**6
_CHUNK = 4096


@dataclass(frozen=True)
class RicEstimate:
    s: int
    delta_s: float
    n_supports: int


@dataclass(frozen=True)
class BoundConstants:
    a: float
    delta2s: float
    C0: float
    C1: float
    admissible: bool


def ric_bruteforce(B, s, cap=DEFAULT_SUPPORT_CAP):
    """Exact restricted isometry constant of order ``s`` by support enumeration.

    Every support of size exactly ``s`` is visited; smaller supports are
    contained in one of them, so their extremal singular values are
    dominated.  For each support the eigenvalues of the ``s x s`` Gram
    block give ``sigma_min^2`` and ``sigma_max^2``.
    """
    B = check_matrix(B, "B")
    M, N = B.shape
    s = check_positive_int(s, "s")
    if s > min(M, N):
        raise DomainError(f"s={s} exceeds min(M, N)={min(M, N)}")
    n_supports = comb(N, s)
    if n_supports > cap:
        raise SizeError(f"binomial({N}, {s}) = {n_supports} supports exceeds cap {cap}")
    gram = B.T @ B
    lo, hi = np.inf, -np.inf
    supports = itertools.combinations(range(N), s)
    while True:
        chunk = np.array(list(itertools.islice(supports, _CHUNK)), dtype=np.intp)
        if chunk.size == 0:
            break
        blocks = gram[chunk[:, :, None], chunk[:, None, :]]
        eig = np.linalg.eigvalsh(blocks)
        lo = min(lo, float(eig[:, 0].min()))
        hi = max(hi, float(eig[:, -1].max()))
    delta = max(hi - 1.0, 1.0 - lo, 0.0)
    return RicEstimate(s=s, delta_s=delta, n_supports=n_supports)


def tl1_rip_threshold(a):
    """Largest admissible ``delta_2s``: ``1 / (1 + sqrt(2) (a+1)/a)``."""
    a = check_positive(a, "a")
    return 1.0 / (1.0 + sqrt(2.0) * (a + 1.0) / a)


def error_constants(a, delta2s):
    """Constants ``C0`` (noiseless term) and ``C1`` (noise term) of the TL1 error bound.

    Inadmissible ``delta2s`` still yields numbers, flagged by ``admissible=False``.
    """
    a = check_positive(a, "a")
    if not np.isfinite(delta2s) or not 0.0 <= delta2s < 1.0:
        raise DomainError(f"delta2s must lie in [0, 1), got {delta2s!r}")
    r2 = sqrt(2.0)
    denom = a - ((r2 + 1.0) * a + r2) * delta2s
    C0 = ((6.0 * r2 * a - 2.0 * a + 2.0 * r2) * delta2s + 2.0 * a) / denom
    C1 = 2.0 * (2.0 * a + 1.0) * sqrt(1.0 + delta2s) / denom
    return BoundConstants(a=a, delta2s=float(delta2s), C0=C0, C1=C1,
                          admissible=bool(delta2s < tl1_rip_threshold(a)))


def zhang_xin_margin(R, T_size, a, deltaR, deltaRT):
    """Slack ``r q - 1 - delta_R - r q delta_{R+|T|}`` with ``r = R/|T|``, ``q = a^2/(a+1)^2``.

    Positive exactly when the recovery condition holds.
    """
    R = check_positive_int(R, "R")
    T_size = check_positive_int(T_size, "T_size")
    if R <= T_size:
        raise DomainError(f"R must exceed |T|, got R={R}, |T|={T_size}")
    a = check_positive(a, "a")
    coef = (R / T_size) * a**2 / (a + 1.0) ** 2
    return coef - 1.0 - deltaR - coef * deltaRT


def zhang_xin_condition(R, T_size, a, deltaR, deltaRT):
    """Evaluate ``delta_R + r q delta_{R+|T|} < r q - 1`` literally."""
    return bool(zhang_xin_margin(R, T_size, a, deltaR, deltaRT) > 0)


def best_s_term(x, s):
    """Keep the ``s`` largest-magnitude entries of ``x``; ties go to the lower index."""
    x = check_vector(x)
    out = np.zeros_like(x)
    if s > 0:
        keep = np.argsort(-np.abs(x), kind="stable")[:s]
        out[keep] = x[keep]
    return out


def sample_complexity(delta, P, s, N, C=1.0):
    """Sample count ``C delta^-2 3^P s log^3(2s) log(N)`` (natural logarithms)."""
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta!r}")
    P = check_positive_int(P, "P", minimum=0)
    s = check_positive_int(s, "s")
    N = check_positive_int(N, "N", minimum=2)
    C = check_positive(C, "C")
    return C * delta**-2 * 3.0**P * s * log(2.0 * s) ** 3 * log(N)


@dataclass(frozen=True)
class BoundReport:
    """Outcome of one noiseless bound check.

    ``certified`` means the solver found a point at least as good as the
    planted signal in penalty value, so the bound, which concerns global
    minimizers, applies to it.  ``violated`` is only set for certified runs.
    """

    lhs: float
    rhs: float
    delta2s: float
    C0: float
    penalty_hat: float
    penalty_true: float
    certified: bool
    violated: bool
    solver_suboptimal: bool


def verify_noiseless_bound(A, x_true, s, a, delta2s=None, cfg=None, tol=1e-6):
    """Check ``||x_hat - x||_2 <= C0 s^{-1/2} P_a(x - x_s)`` on ``b = A x``.

    Parameters
    ----------
    A : array_like, shape (M, N)
    x_true : array_like, shape (N,)
    s : int
    a : float
    delta2s : float, optional
        Precomputed ``delta_{2s}`` of ``A``; brute-forced when omitted.
    cfg : SolverConfig, optional
        Solver settings; ``a`` is overridden.
    tol : float
        Absolute slack on the bound, covering solver tolerance.

    Raises
    ------
    DomainError
        If ``delta2s`` is not below the admissibility threshold for ``a``.
    """
    A = check_matrix(np.asarray(A))
    x_true = check_vector(x_true, "x_true")
    p = PenaltyParam(a)
    if delta2s is None:
        delta2s = ric_bruteforce(A, 2 * s).delta_s
    const = error_constants(p.a, min(delta2s, np.nextafter(1.0, 0.0)))
    if not const.admissible:
        raise DomainError(
            f"delta_2s={delta2s:.6g} is not below the threshold {tl1_rip_threshold(p.a):.6g} "
            f"for a={p.a}")
    tail = x_true - best_s_term(x_true, s)
    rhs = const.C0 * s**-0.5 * penalty(tail, p)
    b = A @ x_true
    if not np.any(b):
        x_hat = np.zeros_like(x_true)
    else:
        x_hat = dca_tl1(A, b, (cfg or SolverConfig()).with_a(p.a)).x
    lhs = float(np.linalg.norm(x_hat - x_true))
    pen_hat, pen_true = penalty(x_hat, p), penalty(x_true, p)
    # any x_hat within tol of x_true in l2 passes, by Lipschitz continuity of P_a
    slack = p.l1_weight * np.sqrt(x_true.size) * tol
    certified = pen_hat <= pen_true + slack
    return BoundReport(lhs=lhs, rhs=float(rhs), delta2s=float(delta2s), C0=const.C0,
                       penalty_hat=pen_hat, penalty_true=pen_true, certified=certified,
                       violated=bool(certified and lhs > rhs + tol),
                       solver_suboptimal=not certified)
