"""Affine-weight fitting for interaction-transformation expressions.

Weights are adjusted by linear least squares on the term columns, with an
optional ridge penalty. The solver works on the centered, column-scaled
normal equations via a Cholesky factorization; a failed factorization
signals rank deficiency (duplicate or constant terms happen all the time
under mutation) and triggers an automatic tiny-ridge refit. The intercept
is never penalized.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .expr import AllTermsInvalid, Individual, TermEvaluator, feature_matrix

__all__ = ["FitConfig", "LengthMismatch", "fit", "rmse", "RIDGE_FALLBACK_LAMBDA"]

# regularization used when the least-squares system is rank deficient
RIDGE_FALLBACK_LAMBDA = 1e-8


class LengthMismatch(ValueError):
    """Vectors of unequal length were passed to an elementwise metric."""


@dataclass(frozen=True)
class FitConfig:
    """Choice of linear model: plain least squares or ridge.

    ``lam`` is the ridge strength; it is ignored for ols.
    """

    model: str = "ols"
    lam: float = 0.0

    def __post_init__(self):
        if self.model not in ("ols", "ridge"):
            raise ValueError(f"model must be 'ols' or 'ridge', got {self.model!r}")
        if self.lam < 0:
            raise ValueError("lambda must be non-negative")
        if self.model == "ridge" and self.lam <= 0:
            raise ValueError("ridge requires lambda > 0")


def rmse(y, yhat) -> float:
    """Root mean squared error between two equal-length vectors."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.shape != yhat.shape:
        raise LengthMismatch(f"shapes {y.shape} and {yhat.shape} differ")
    if y.size == 0:
        raise LengthMismatch("empty vectors")
    r = y - yhat
    return float(np.sqrt(np.mean(r * r)))


def _try_cholesky(G: np.ndarray, b: np.ndarray) -> np.ndarray | None:
    if not np.isfinite(G).all():
        return None
    try:
        L = np.linalg.cholesky(G)
    except np.linalg.LinAlgError:
        return None
    return scipy.linalg.cho_solve((L, True), b, check_finite=False)


def _scale_columns(Z: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Rescale columns to unit max-magnitude: (Zs, scales, means)."""
    with np.errstate(all="ignore"):
        a = np.max(np.abs(Z), axis=0)
        a[~((a > 0.0) & np.isfinite(a))] = 1.0
        Zs = Z / a
        return Zs, a, Zs.mean(axis=0)


def _solve_affine(Zs: np.ndarray, a: np.ndarray, zbar: np.ndarray,
                  y: np.ndarray, cfg: FitConfig) -> tuple[np.ndarray, np.ndarray, float]:
    """Least-squares weights and intercept for y ~ w0 + (Zs * a) w.

    Returns (w, yhat, w0) on the raw column scale. Centering handles the
    intercept exactly; the unit-magnitude columns keep the normal
    equations finite and reasonably conditioned no matter how large a
    term's values get (a valid term can reach ~1e300 before its square
    would overflow).
    """
    n, m = Zs.shape
    with np.errstate(all="ignore"):
        ybar = float(y.mean())
        # Gram downdate: (Zs - zbar)^T (Zs - zbar) = Zs^T Zs - n zbar zbar^T
        G = Zs.T @ Zs - n * np.outer(zbar, zbar)
        b = Zs.T @ y - (n * ybar) * zbar
        s = np.sqrt(np.abs(np.diag(G)))
        s[s == 0.0] = 1.0
        G /= np.outer(s, s)
        b /= s

        if cfg.model == "ridge":
            # penalty on raw-scale coefficients: lam * diag(1/(a s)^2) here
            G += cfg.lam * np.diag(1.0 / (a * a * s * s))

        wn = _try_cholesky(G, b)
        if wn is None:
            lam = RIDGE_FALLBACK_LAMBDA
            eye = np.eye(m)
            while wn is None and lam < 1.0:
                wn = _try_cholesky(G + lam * eye, b)
                lam *= 1e3
        if wn is None:  # pathological input; a zero model is still well defined
            wn = np.zeros(m)

        ws = wn / s
        w0 = ybar - float(zbar @ ws)
        yhat = w0 + Zs @ ws
        w = ws / a
    return w, yhat, w0


def fit(ind: Individual, X, y, cfg: FitConfig = FitConfig(),
        evaluator: TermEvaluator | None = None) -> Individual:
    """Return a copy of ``ind`` with weights, intercept and fitness set.

    Invalid terms (those that fail to evaluate anywhere on X) get weight
    exactly 0 and take no part in the regression. When every term is
    invalid the result keeps all-zero weights and +inf fitness. Fitness is
    the in-sample RMSE.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    try:
        if evaluator is not None:
            Zs, scales, zbar, mask = evaluator.scaled_matrix(ind.terms)
        else:
            Z, mask = feature_matrix(ind.terms, X)
            Zs, scales, zbar = _scale_columns(Z)
    except AllTermsInvalid:
        return replace(ind, weights=(0.0,) * len(ind.terms), intercept=0.0,
                       fitness=math.inf)

    w_valid, yhat, w0 = _solve_affine(Zs, scales, zbar, y, cfg)

    weights = []
    it = iter(w_valid)
    for ok in mask:
        weights.append(float(next(it)) if ok else 0.0)

    value = rmse(y, yhat)
    if not math.isfinite(value):
        value = math.inf
    return replace(ind, weights=tuple(weights), intercept=w0, fitness=value)
