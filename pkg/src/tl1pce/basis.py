"""Total-degree Legendre chaos basis and measurement-matrix assembly."""

import csv
import io
from dataclasses import dataclass, field
from math import comb

import numpy as np

from ._validation import DomainError, SizeError, check_positive_int

DEFAULT_BASIS_CAP = 10**6
_RANGE_TOL = 1e-12


@dataclass(frozen=True)
class Basis:
    """Ordered total-degree multi-index set ``{alpha : |alpha| <= k}``.

    ``indices`` is an ``(N, d)`` integer array in graded order: rows sorted
    by total degree, and within one degree by descending first component,
    then descending second component, and so on.
    """

    d: int
    k: int
    indices: np.ndarray = field(repr=False)

    @property
    def N(self):
        return self.indices.shape[0]

    @property
    def totals(self):
        return self.indices.sum(axis=1)

    def labels(self):
        return ["phi_" + "_".join(str(c) for c in row) for row in self.indices]


@dataclass(frozen=True)
class SampleSet:
    """``M`` points in ``[-1, 1]^d`` together with the seed that produced them."""

    points: np.ndarray = field(repr=False)
    seed: int | None = None

    @property
    def M(self):
        return self.points.shape[0]

    @property
    def d(self):
        return self.points.shape[1]

    def to_csv(self):
        header = [f"z{i + 1}" for i in range(self.d)]
        return _table_csv(header, self.points)


@dataclass(frozen=True)
class MeasurementMatrix:
    """Basis evaluations ``entries[i, j] = Phi_j(z^i)``, optionally scaled by ``1/sqrt(M)``."""

    entries: np.ndarray = field(repr=False)
    normalized: bool
    basis: Basis
    samples: SampleSet

    @property
    def shape(self):
        return self.entries.shape

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.entries, dtype=dtype)

    def to_csv(self):
        return _table_csv(self.basis.labels(), self.entries)


def _table_csv(header, rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        # repr gives the shortest decimal that round-trips
        writer.writerow([repr(float(v)) for v in row])
    return buf.getvalue()


def _compositions(d, total):
    if d == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(d - 1, total - first):
            yield (first,) + rest


def enumerate_total_degree(d, k, cap=DEFAULT_BASIS_CAP):
    """Enumerate the total-degree set of dimension ``d`` and degree ``k``.

    Raises
    ------
    SizeError
        If ``binomial(d + k, k)`` exceeds ``cap``.
    """
    d = check_positive_int(d, "d")
    k = check_positive_int(k, "k", minimum=0)
    n = comb(d + k, k)
    if n > cap:
        raise SizeError(f"basis size binomial({d}+{k}, {k}) = {n} exceeds cap {cap}")
    rows = [alpha for total in range(k + 1) for alpha in _compositions(d, total)]
    indices = np.array(rows, dtype=np.int64).reshape(n, d)
    return Basis(d=d, k=k, indices=indices)


def _check_range(t):
    t = np.asarray(t, dtype=float)
    if not np.all(np.isfinite(t)) or np.any(np.abs(t) > 1.0 + _RANGE_TOL):
        raise DomainError("Legendre arguments must lie in [-1, 1]")
    return t


def legendre_table(t, n_max):
    """Orthonormal Legendre values ``psi_0..psi_{n_max}`` at ``t``.

    Uses the three-term recurrence
    ``(n+1) P_{n+1} = (2n+1) t P_n - n P_{n-1}`` and scales by
    ``sqrt(2n+1)`` so that the family is orthonormal under the uniform
    probability density on ``[-1, 1]``.

    Returns
    -------
    ndarray
        Shape ``t.shape + (n_max + 1,)``.
    """
    t = _check_range(t)
    out = np.empty(t.shape + (n_max + 1,))
    out[..., 0] = 1.0
    if n_max >= 1:
        out[..., 1] = t
    for n in range(1, n_max):
        out[..., n + 1] = ((2 * n + 1) * t * out[..., n] - n * out[..., n - 1]) / (n + 1)
    out *= np.sqrt(2.0 * np.arange(n_max + 1) + 1.0)
    return out


def eval_legendre_1d(n, t):
    """Orthonormal Legendre polynomial ``psi_n(t) = sqrt(2n+1) P_n(t)``."""
    n = check_positive_int(n, "n", minimum=0)
    value = legendre_table(t, n)[..., n]
    return float(value) if np.ndim(value) == 0 else value


def _design(basis, points):
    table = legendre_table(points, basis.k)  # (M, d, k+1)
    out = np.ones((points.shape[0], basis.N))
    for i in range(basis.d):
        out *= table[:, i, basis.indices[:, i]]
    return out


def eval_basis(basis, z):
    """Evaluate every basis function at a single point ``z`` in ``[-1, 1]^d``."""
    z = np.asarray(z, dtype=float).reshape(-1)
    if z.shape[0] != basis.d:
        raise DomainError(f"point has {z.shape[0]} coordinates, basis expects {basis.d}")
    return _design(basis, z[None, :])[0]


def sample_uniform(d, M, seed):
    """Draw ``M`` i.i.d. uniform points on ``[-1, 1]^d`` with a seeded PCG64 stream."""
    d = check_positive_int(d, "d")
    M = check_positive_int(M, "M")
    rng = np.random.Generator(np.random.PCG64(seed))
    return SampleSet(points=rng.uniform(-1.0, 1.0, size=(M, d)), seed=seed)


def assemble_matrix(basis, samples, normalize=False):
    """Measurement matrix of ``basis`` evaluated at ``samples``."""
    if isinstance(samples, np.ndarray):
        samples = SampleSet(points=np.atleast_2d(samples))
    if samples.d != basis.d:
        raise DomainError(f"samples have dimension {samples.d}, basis has {basis.d}")
    entries = _design(basis, samples.points)
    if normalize:
        entries = entries / np.sqrt(samples.M)
    return MeasurementMatrix(entries=entries, normalized=bool(normalize), basis=basis,
                             samples=samples)


def assemble_rhs(f, samples):
    """Evaluate ``f`` at each sample point, in row order."""
    points = samples.points if isinstance(samples, SampleSet) else np.atleast_2d(samples)
    out = np.empty(points.shape[0])
    for i, z in enumerate(points):
        try:
            out[i] = f(z)
        except Exception as exc:
            raise RuntimeError(f"evaluation of f failed at sample {i}") from exc
    return out


def evaluate_expansion(basis, coef, points):
    """Evaluate ``sum_j coef_j Phi_j`` at the rows of ``points``."""
    return _design(basis, np.atleast_2d(np.asarray(points, dtype=float))) @ np.asarray(coef)
