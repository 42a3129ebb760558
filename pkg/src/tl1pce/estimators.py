"""scikit-learn wrappers: Legendre chaos features and sparse-recovery regressors.

The regressors solve the equality-constrained problem ``X coef = y`` exactly,
so they are meant for underdetermined, consistent systems such as chaos
interpolation from few samples::

    model = make_sparse_pce(degree=20, method="adaptiveTL1")
    model.fit(Z_train, f(Z_train))
    model.predict(Z_test)
"""

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin, TransformerMixin
from sklearn.pipeline import Pipeline
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y, validate_data

from ._validation import DomainError
from .basis import assemble_matrix, enumerate_total_degree
from .solvers import (
    LOW_DIM_CANDIDATES,
    SolverConfig,
    adaptive_dca_tl1,
    dca_tl1,
    l1_basis_pursuit,
    l12_dca,
)


class LegendreFeatures(TransformerMixin, BaseEstimator):
    """Map points of ``[-1, 1]^d`` to orthonormal total-degree Legendre features.

    Parameters
    ----------
    degree : int
        Total degree ``k`` of the basis.
    normalize : bool
        Scale the features by ``1 / sqrt(n_samples)``.
    """

    def __init__(self, degree=2, normalize=False):
        self.degree = degree
        self.normalize = normalize

    def fit(self, X, y=None):
        X = validate_data(self, X, dtype=np.float64)
        self.basis_ = enumerate_total_degree(X.shape[1], self.degree)
        self.n_output_features_ = self.basis_.N
        return self

    def transform(self, X):
        check_is_fitted(self, "basis_")
        X = validate_data(self, X, dtype=np.float64, reset=False)
        if np.any(np.abs(X) > 1.0 + 1e-12):
            raise DomainError("inputs must lie in [-1, 1]^d")
        return assemble_matrix(self.basis_, X, normalize=self.normalize).entries

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "basis_")
        return np.asarray(self.basis_.labels(), dtype=object)


class _SparseRecoveryRegressor(RegressorMixin, BaseEstimator):
    def __init__(self, eps_outer=1e-5, eps_inner=1e-6, delta=10.0, max_outer=50, max_inner=5000):
        self.eps_outer = eps_outer
        self.eps_inner = eps_inner
        self.delta = delta
        self.max_outer = max_outer
        self.max_inner = max_inner

    def _config(self, a=0.3):
        return SolverConfig(eps_outer=self.eps_outer, eps_inner=self.eps_inner, delta=self.delta,
                            max_outer=self.max_outer, max_inner=self.max_inner, a=a)

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True, dtype=np.float64)
        self.n_features_in_ = X.shape[1]
        result = self._solve(X, y)
        self.result_ = result
        self.coef_ = result.x
        self.sparsity_ = result.sparsity
        self.converged_ = result.converged
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X @ self.coef_


class TL1Regressor(_SparseRecoveryRegressor):
    """Transformed-l1 interpolation by DCA with a fixed shape parameter ``a``."""

    def __init__(self, a=0.3, eps_outer=1e-5, eps_inner=1e-6, delta=10.0, max_outer=50,
                 max_inner=5000):
        super().__init__(eps_outer, eps_inner, delta, max_outer, max_inner)
        self.a = a

    def _solve(self, X, y):
        return dca_tl1(X, y, self._config(self.a))


class AdaptiveTL1Regressor(_SparseRecoveryRegressor):
    """Transformed-l1 interpolation keeping the sparsest solution over ``candidates``."""

    def __init__(self, candidates=LOW_DIM_CANDIDATES, eps_outer=1e-5, eps_inner=1e-6, delta=10.0,
                 max_outer=50, max_inner=5000):
        super().__init__(eps_outer, eps_inner, delta, max_outer, max_inner)
        self.candidates = candidates

    def _solve(self, X, y):
        result = adaptive_dca_tl1(X, y, self.candidates, self._config())
        self.a_ = result.a_used
        return result


class L1Regressor(_SparseRecoveryRegressor):
    """Basis pursuit: minimum l1 norm interpolation."""

    def _solve(self, X, y):
        return l1_basis_pursuit(X, y, self._config())


class L12Regressor(_SparseRecoveryRegressor):
    """Minimum ``l1 - l2`` interpolation by DCA."""

    def _solve(self, X, y):
        return l12_dca(X, y, self._config())


REGRESSORS = {
    "TL1": TL1Regressor,
    "adaptiveTL1": AdaptiveTL1Regressor,
    "L1": L1Regressor,
    "L1minus2": L12Regressor,
}


def make_sparse_pce(degree, method="adaptiveTL1", **params):
    """Pipeline of ``LegendreFeatures(degree)`` and the regressor for ``method``."""
    if method not in REGRESSORS:
        raise DomainError(f"unknown method {method!r}")
    return Pipeline([
        ("features", LegendreFeatures(degree=degree)),
        ("regressor", REGRESSORS[method](**params)),
    ])
