"""Transformed-l1 penalty, its DC split and the soft-thresholding map.

The penalty is ``rho_a(t) = (a + 1)|t| / (a + |t|)`` for a shape parameter
``a > 0``.  Small ``a`` makes it behave like the l0 count, large ``a`` like
the l1 norm.  It is written as a difference of convex functions

    P_a(x) = ((a + 1) / a) ||x||_1 - h(x),

with ``h`` convex and differentiable away from the coordinate axes, which is
what the DCA solvers linearize.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import DomainError, check_vector


@dataclass(frozen=True)
class PenaltyParam:
    """Shape parameter of the transformed-l1 penalty."""

    a: float

    def __post_init__(self):
        a = self.a
        if isinstance(a, bool) or not np.isscalar(a) or not np.isfinite(a) or a <= 0:
            raise DomainError(f"penalty parameter a must be positive and finite, got {a!r}")
        object.__setattr__(self, "a", float(a))

    @property
    def l1_weight(self):
        """Weight ``(a + 1) / a`` of the convex l1 part."""
        return (self.a + 1.0) / self.a

    @property
    def sup(self):
        """Supremum ``a + 1`` of ``rho_a``; never attained."""
        return self.a + 1.0


def _param(p):
    return p if isinstance(p, PenaltyParam) else PenaltyParam(p)


def rho_a(t, p):
    """Evaluate ``rho_a(|t|)`` elementwise.

    Parameters
    ----------
    t : float or array_like
        Finite real argument(s).
    p : PenaltyParam or float
        Shape parameter ``a``.

    Returns
    -------
    float or ndarray
        Values in ``[0, a + 1)``, same shape as ``t``.
    """
    a = _param(p).a
    arr = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError("rho_a is defined for finite arguments only")
    mag = np.abs(arr)
    out = (a + 1.0) * mag / (a + mag)
    return float(out) if out.ndim == 0 else out


def penalty(x, p):
    """Transformed-l1 penalty ``P_a(x) = sum_i rho_a(|x_i|)``."""
    x = check_vector(x)
    return float(np.sum(rho_a(x, p)))


def concave_part(x, p):
    """Convex function ``h(x) = ((a+1)/a) ||x||_1 - P_a(x)`` subtracted in the DC split."""
    p = _param(p)
    x = check_vector(x)
    return float(p.l1_weight * np.sum(np.abs(x)) - np.sum(rho_a(x, p)))


def dc_subgradient(x, p):
    """Linearization vector ``z`` of ``h`` at ``x`` used by the DCA outer step.

    Componentwise ``z_i = ((a+1)/a) sgn(x_i) - (a+1) sgn(x_i)/(a+|x_i|)
    + (a+1) x_i/(a+|x_i|)^2`` with ``sgn(0) = 0``, so ``z_i = 0`` at ``x_i = 0``.
    """
    a = _param(p).a
    x = check_vector(x)
    sgn = np.sign(x)
    mag = np.abs(x)
    denom = a + mag
    return (a + 1.0) / a * sgn - (a + 1.0) * sgn / denom + (a + 1.0) * x / denom**2


def shrink(x, r):
    """Soft thresholding ``sgn(x_i) max(|x_i| - r, 0)``."""
    if not np.isscalar(r) or not np.isfinite(r) or r < 0:
        raise DomainError(f"shrink threshold must be a finite nonnegative real, got {r!r}")
    return soft_threshold(check_vector(x), r)


def soft_threshold(x, r):
    """Unchecked ``shrink`` for solver inner loops.

    ``x - clip(x, -r, r)`` equals ``sgn(x) max(|x| - r, 0)`` exactly and
    needs two array passes instead of four.
    """
    return x - np.clip(x, -r, r)
