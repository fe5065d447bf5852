"""Ridge regression of per-category accuracy on cluster inclusion bits."""

from __future__ import annotations

import numpy as np
from scipy import linalg
from sklearn.base import BaseEstimator, MultiOutputMixin, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data


class SingularSystemError(np.linalg.LinAlgError):
    pass


def ridge_fit(X, y, lam: float = 1.0, fit_intercept: bool = True):
    r"""Solve :math:`(\tilde X^\top \tilde X + \lambda I)\beta = \tilde X^\top \tilde y` by Cholesky.

    With ``fit_intercept`` the columns of ``X`` and ``y`` are centered first and
    the unpenalized intercept is recovered as ``mean(y) - mean(X) @ beta``.
    ``y`` may be 1-D or (n_samples, n_targets).

    Returns
    -------
    beta : ndarray of shape (n_features,) or (n_features, n_targets)
    intercept : float or ndarray of shape (n_targets,)
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if lam < 0:
        raise ValueError("lam must be non-negative")
    if not (np.isfinite(X).all() and np.isfinite(y).all()):
        raise ValueError("non-finite values in ridge inputs")
    if fit_intercept:
        x_mean, y_mean = X.mean(axis=0), y.mean(axis=0)
        Xc, yc = X - x_mean, y - y_mean
    else:
        Xc, yc = X, y
    gram = Xc.T @ Xc
    gram[np.diag_indices_from(gram)] += lam
    try:
        factor = linalg.cho_factor(gram, lower=True, check_finite=False)
    except linalg.LinAlgError as exc:
        raise SingularSystemError(f"normal equations are singular at lam={lam}") from exc
    if lam == 0 and np.linalg.cond(gram) > 1e14:
        raise SingularSystemError("normal equations are numerically singular at lam=0")
    beta = linalg.cho_solve(factor, Xc.T @ yc, check_finite=False)
    if fit_intercept:
        intercept = y_mean - x_mean @ beta
    else:
        intercept = np.zeros(y.shape[1:]) if y.ndim > 1 else 0.0
    return beta, intercept


class ContributionRegressor(MultiOutputMixin, RegressorMixin, BaseEstimator):
    """Multi-output ridge regressor whose coefficients are per-cluster contributions.

    Parameters
    ----------
    alpha : float, default=1.0
        Ridge penalty on the coefficients (the intercept is never penalized).
    fit_intercept : bool, default=True

    Attributes
    ----------
    coef_ : ndarray of shape (n_targets, n_features) or (n_features,)
    intercept_ : ndarray of shape (n_targets,) or float
    """

    def __init__(self, alpha: float = 1.0, fit_intercept: bool = True):
        self.alpha = alpha
        self.fit_intercept = fit_intercept

    def fit(self, X, y):
        X, y = validate_data(self, X, y, multi_output=True, y_numeric=True, dtype=float)
        beta, intercept = ridge_fit(X, y, self.alpha, self.fit_intercept)
        self.coef_ = beta.T
        self.intercept_ = intercept
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False, dtype=float)
        return X @ self.coef_.T + self.intercept_


def select_lambda(X, Y, grid=None, holdout: float = 0.2, seed: int = 0) -> tuple[float, dict]:
    """Pick the penalty minimizing held-out squared error over a log grid.

    Returns (best_lambda, {lambda: mean squared error}).
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    grid = np.logspace(-3, 3, 13) if grid is None else np.asarray(grid, dtype=float)
    n = X.shape[0]
    order = np.random.default_rng(seed).permutation(n)
    n_val = max(1, int(round(holdout * n)))
    val, train = order[:n_val], order[n_val:]
    errors = {}
    for lam in grid:
        model = ContributionRegressor(alpha=float(lam)).fit(X[train], Y[train])
        errors[float(lam)] = float(np.mean((model.predict(X[val]) - Y[val]) ** 2))
    best = min(errors, key=lambda k: (errors[k], k))
    return best, errors
