"""Linear regression of sweep outcomes on building features.

The Gaussian identity-link model is fitted by ordinary least squares using a
QR factorization. Building type enters as dummy columns against a reference
category (school by default); consumption (MWh/a) and the summertime and
daytime shares (percent by default) enter linearly.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy.linalg import solve_triangular
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted

from ._validation import check_matrix
from .special import f_sf, t_sf_two_sided

__all__ = [
    "StatsError",
    "DesignMatrix",
    "RegressionFit",
    "build_design",
    "fit_ols",
    "anova_single",
    "pearson",
    "write_regression_report",
    "OLSRegression",
]

INTERCEPT = "(Intercept)"


class StatsError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DesignMatrix:
    """Regressors ``X`` (first column the intercept) with response ``y``."""

    X: np.ndarray
    y: np.ndarray
    columns: tuple
    share_unit: str = "percent"

    def __post_init__(self):
        X = check_matrix(self.X, "X").copy()
        y = np.asarray(self.y, dtype=float).ravel().copy()
        columns = tuple(self.columns)
        n, k = X.shape
        if y.size != n:
            raise StatsError(f"y has {y.size} rows, X has {n}")
        if len(columns) != k:
            raise StatsError(f"{len(columns)} column names for {k} columns")
        if n <= k:
            raise StatsError(f"need more rows than columns ({n} rows, {k} columns)")
        if not np.all(np.isfinite(y)):
            raise StatsError("response contains non-finite values")
        for j in range(k):
            if columns[j] != INTERCEPT and np.ptp(X[:, j]) == 0:
                raise StatsError(f"column {columns[j]!r} is constant")
        _check_rank(X, columns)
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "columns", columns)

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def k(self):
        return self.X.shape[1]


def _check_rank(X, columns):
    scale = np.linalg.norm(X, axis=0)
    scale[scale == 0] = 1.0
    Xs = X / scale
    tol = max(X.shape) * np.finfo(float).eps * 1e3
    kept = []
    for j in range(X.shape[1]):
        trial = Xs[:, kept + [j]]
        s = np.linalg.svd(trial, compute_uv=False)
        if s[-1] <= tol * s[0]:
            # find a minimal set of earlier columns spanning column j
            coef, *_ = np.linalg.lstsq(Xs[:, kept], Xs[:, j], rcond=None)
            partners = [columns[kept[i]] for i in np.flatnonzero(np.abs(coef) > 1e-8)]
            raise StatsError(
                f"design is rank deficient: column {columns[j]!r} is a linear combination "
                f"of {partners}")
        kept.append(j)


def build_design(building_types: Sequence, ec, sc, dc, y, reference: str = "school",
                 percent: bool = True, include_types: bool = True) -> DesignMatrix:
    """Design with intercept, type dummies, EC, SC and DC.

    Shares are given as fractions and converted to percent when ``percent``.
    Only levels that occur get a dummy; if the reference level is absent the
    first level present (in sorted order) becomes the reference.
    """
    labels = [getattr(t, "value", t) for t in building_types]
    n = len(labels)
    ec, sc, dc = (np.asarray(v, dtype=float).ravel() for v in (ec, sc, dc))
    if not (ec.size == sc.size == dc.size == n):
        raise StatsError("feature vectors must have one entry per property")
    factor = 100.0 if percent else 1.0
    cols = [np.ones(n)]
    names = [INTERCEPT]
    if include_types:
        levels = sorted(set(labels))
        ref = reference if reference in levels else levels[0]
        for level in levels:
            if level == ref:
                continue
            cols.append(np.array([1.0 if lab == level else 0.0 for lab in labels]))
            names.append(f"type[{level}]")
    cols += [ec, sc * factor, dc * factor]
    names += ["EC", "SC", "DC"]
    return DesignMatrix(np.column_stack(cols), y, tuple(names),
                        "percent" if percent else "fraction")


@dataclass(frozen=True, eq=False)
class RegressionFit:
    columns: tuple
    coefficients: np.ndarray
    std_errors: np.ndarray
    t_values: np.ndarray
    p_values: np.ndarray
    sigma: float
    r_squared: float
    f_statistic: float
    f_p_value: float
    aic: float
    rss: float
    n: int
    k: int
    residuals: np.ndarray = field(repr=False)
    fitted: np.ndarray = field(repr=False)

    def coef(self, name: str) -> float:
        return float(self.coefficients[self.columns.index(name)])

    def table(self) -> list[dict]:
        return [dict(term=c, estimate=float(b), se=float(s), t=float(t), p=float(p))
                for c, b, s, t, p in zip(self.columns, self.coefficients, self.std_errors,
                                         self.t_values, self.p_values)]


def fit_ols(design: DesignMatrix) -> RegressionFit:
    """Least-squares fit with classical standard errors and a Gaussian AIC."""
    X, y = design.X, design.y
    n, k = X.shape
    if np.ptp(y) == 0:
        raise StatsError("response is constant; R squared undefined")
    Q, R = np.linalg.qr(X, mode="reduced")
    beta = solve_triangular(R, Q.T @ y)
    fitted = X @ beta
    resid = y - fitted
    rss = float(resid @ resid)
    ybar = y.mean()
    tss = float(((y - ybar) ** 2).sum())
    df = n - k
    sigma2 = rss / df
    Rinv = solve_triangular(R, np.eye(k))
    cov_unscaled = Rinv @ Rinv.T
    se = np.sqrt(np.diag(cov_unscaled) * sigma2)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(se > 0, beta / np.where(se > 0, se, 1.0),
                     np.where(beta != 0, np.copysign(np.inf, beta), np.nan))
    p = np.array([t_sf_two_sided(float(v), df) if np.isfinite(v) or np.isinf(v) else np.nan
                  for v in t])
    r2 = min(1.0, max(0.0, 1.0 - rss / tss))
    has_intercept = INTERCEPT in design.columns
    df1 = k - 1 if has_intercept else k
    if df1 > 0:
        f = (r2 / df1) / ((1.0 - r2) / df) if r2 < 1.0 else math.inf
        fp = f_sf(f, df1, df)
    else:
        f, fp = math.nan, math.nan
    aic = n * math.log(rss / n) + 2 * (k + 1) if rss > 0 else -math.inf
    return RegressionFit(columns=design.columns, coefficients=beta, std_errors=se,
                         t_values=t, p_values=p, sigma=math.sqrt(sigma2), r_squared=r2,
                         f_statistic=f, f_p_value=fp, aic=aic, rss=rss, n=n, k=k,
                         residuals=resid, fitted=fitted)


def _predictor_columns(x):
    x = np.asarray(x)
    if x.dtype.kind in "biuf":
        x = x.astype(float)
        return (x[:, None] if x.ndim == 1 else x), None
    labels = [getattr(v, "value", v) for v in x.tolist()]
    levels = sorted(set(labels))
    cols = [[1.0 if lab == lev else 0.0 for lab in labels] for lev in levels[1:]]
    return np.array(cols, dtype=float).T.reshape(len(labels), len(levels) - 1), levels


def anova_single(x, y) -> tuple[float, float, float]:
    """Variance explained by one predictor: ``(R^2, F, p)``.

    ``x`` is numeric (one or more columns) or categorical labels, which are
    expanded into dummies against the first level.
    """
    cols, levels = _predictor_columns(x)
    names = [INTERCEPT] + ([f"x{j}" for j in range(cols.shape[1])] if levels is None
                           else [f"level[{v}]" for v in levels[1:]])
    design = DesignMatrix(np.column_stack([np.ones(cols.shape[0]), cols]), y, tuple(names))
    fit = fit_ols(design)
    return fit.r_squared, fit.f_statistic, fit.f_p_value


def pearson(x, y) -> float:
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.size != y.size:
        raise StatsError("x and y must have equal length")
    if x.size < 2:
        raise StatsError("need at least two points")
    dx, dy = x - x.mean(), y - y.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise StatsError("correlation undefined for constant input")
    return max(-1.0, min(1.0, float(dx @ dy) / math.sqrt(sxx * syy)))


def write_regression_report(fit: RegressionFit, path) -> None:
    """One row per coefficient, then a model row with R^2, F (and its p) and AIC."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["term", "estimate", "se", "t", "p", "r_squared", "f", "aic", "n"])
        for row in fit.table():
            w.writerow([row["term"], repr(row["estimate"]), repr(row["se"]), repr(row["t"]),
                        repr(row["p"]), "", "", "", ""])
        w.writerow(["model", "", "", "", repr(fit.f_p_value), repr(fit.r_squared),
                    repr(fit.f_statistic), repr(fit.aic), fit.n])


class OLSRegression(RegressorMixin, BaseEstimator):
    """Estimator wrapper around :func:`fit_ols`."""

    def __init__(self, fit_intercept: bool = True, column_names=None):
        self.fit_intercept = fit_intercept
        self.column_names = column_names

    def fit(self, X, y):
        X = check_matrix(X, "X")
        names = list(self.column_names) if self.column_names is not None \
            else [f"x{j}" for j in range(X.shape[1])]
        if self.fit_intercept:
            X = np.column_stack([np.ones(X.shape[0]), X])
            names = [INTERCEPT] + names
        self.fit_ = fit_ols(DesignMatrix(X, y, tuple(names)))
        beta = self.fit_.coefficients
        self.intercept_ = float(beta[0]) if self.fit_intercept else 0.0
        self.coef_ = beta[1:].copy() if self.fit_intercept else beta.copy()
        self.r_squared_ = self.fit_.r_squared
        self.aic_ = self.fit_.aic
        self.p_values_ = self.fit_.p_values
        self.n_features_in_ = X.shape[1] - (1 if self.fit_intercept else 0)
        return self

    def predict(self, X):
        check_is_fitted(self, "fit_")
        X = check_matrix(X, "X")
        return X @ self.coef_ + self.intercept_
