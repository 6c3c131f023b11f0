"""Analytical derivatives of fitted expressions.

Because every term is a transformation of a monomial, the partial
derivative with respect to variable j has the closed form

    d/dx_j  w * t(p(x))  =  w * t'(p(x)) * k_j * p(x) / x_j

where p(x) is the interaction. The quotient p(x)/x_j is never computed by
division: it is assembled as x_j**(k_j - 1) times the x_j-free factor, so
points with x_j = 0 and k_j >= 1 evaluate cleanly. Marginal-effect curves
replace each term's x_j-free factor with its mean over a sample of the
data, giving a univariate view of the variable's influence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import transforms
from .expr import Individual, _powi
from .transforms import DomainError

__all__ = [
    "DerivedTerm",
    "PartialDerivative",
    "EvaluationError",
    "EmptyGrid",
    "UndefinedAt",
    "partial",
    "gradient",
    "marginal_effect",
]


class EvaluationError(ValueError):
    def __init__(self, var: int, reason: str):
        self.var = var
        self.reason = reason
        super().__init__(f"derivative w.r.t. variable {var} undefined: {reason}")


class EmptyGrid(ValueError):
    pass


class UndefinedAt(ValueError):
    def __init__(self, g: float):
        self.g = g
        super().__init__(f"marginal effect undefined at grid point {g!r}")


@dataclass(frozen=True)
class DerivedTerm:
    """One differentiated term: weight, interaction strengths, function id."""

    weight: float
    strengths: tuple[int, ...]
    func: str


@dataclass(frozen=True)
class PartialDerivative:
    """Closed-form partial derivative of an expression w.r.t. one variable.

    Terms that do not involve the variable (or carry weight 0) contribute
    nothing and are omitted; an empty term list is the zero function.
    """

    var: int
    dim: int
    terms: tuple[DerivedTerm, ...]

    def evaluate(self, x) -> float:
        """Value at a single point. Raises EvaluationError when undefined."""
        x = [float(v) for v in x]
        if len(x) != self.dim:
            raise ValueError(f"point has {len(x)} entries, expected {self.dim}")
        j = self.var
        total = 0.0
        for dt in self.terms:
            k = dt.strengths[j]
            c = 1.0
            for i, ki in enumerate(dt.strengths):
                if i == j or ki == 0:
                    continue
                if x[i] == 0.0 and ki < 0:
                    raise EvaluationError(j, f"x{i} = 0 raised to power {ki}")
                c *= _powi(x[i], ki)
            xj = x[j]
            if xj == 0.0 and k < 0:
                raise EvaluationError(j, f"x{j} = 0 raised to power {k}")
            # when xj == 0 the checks above leave k >= 1, so k - 1 >= 0
            xjpow = _powi(xj, k - 1)
            p = _powi(xj, k) * c
            if not np.isfinite(p):
                raise EvaluationError(j, "non-finite interaction value")
            try:
                tprime = transforms.derivative(dt.func, p)
            except DomainError as exc:
                raise EvaluationError(j, str(exc)) from None
            total += dt.weight * k * xjpow * c * tprime
        if not np.isfinite(total):
            raise EvaluationError(j, "non-finite derivative value")
        return total

    def evaluate_rows(self, X) -> np.ndarray:
        """Value on every row of X; undefined rows come back as NaN."""
        X = np.asarray(X, dtype=float)
        out = np.zeros(X.shape[0])
        j = self.var
        with np.errstate(all="ignore"):
            for dt in self.terms:
                k = dt.strengths[j]
                c = None
                for i, ki in enumerate(dt.strengths):
                    if i == j or ki == 0:
                        continue
                    f = _powi(X[:, i], ki)
                    c = f if c is None else c * f
                if c is None:
                    c = np.ones(X.shape[0])
                xj = X[:, j]
                xjpow = _powi(xj, k - 1) if k != 1 else np.ones(X.shape[0])
                p = _powi(xj, k) * c
                tp = transforms.derivative_array(dt.func, p)
                tp[~np.isfinite(p)] = np.nan
                out += dt.weight * k * xjpow * c * tp
        out[~np.isfinite(out)] = np.nan
        return out


def partial(ind: Individual, j: int) -> PartialDerivative:
    """Symbolic partial derivative of a fitted expression w.r.t. x_j."""
    if not ind.fitted:
        raise ValueError("individual is not fitted")
    d = len(ind.terms[0].strengths)
    if not 0 <= j < d:
        raise ValueError(f"variable index {j} out of range for d={d}")
    terms = tuple(
        DerivedTerm(w, t.strengths, t.func)
        for t, w in zip(ind.terms, ind.weights)
        if w != 0.0 and t.strengths[j] != 0
    )
    return PartialDerivative(var=j, dim=d, terms=terms)


def gradient(ind: Individual, x) -> np.ndarray:
    """All partial derivatives evaluated at one point."""
    if not ind.fitted:
        raise ValueError("individual is not fitted")
    d = len(ind.terms[0].strengths)
    return np.array([partial(ind, j).evaluate(x) for j in range(d)])


def marginal_effect(ind: Individual, j: int, X_train, grid) -> np.ndarray:
    """Univariate influence curve of x_j over a grid.

    Each differentiated term splits into its x_j-dependent factor and an
    x_j-free factor; the latter (which also feeds the transformation's
    argument) is replaced by its mean over the training rows where it
    evaluates. Raises UndefinedAt for grid points where the x_j-dependent
    part is undefined.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise EmptyGrid("marginal-effect grid is empty")
    pd = partial(ind, j)
    if not pd.terms:
        return np.zeros(grid.size)

    X = np.asarray(X_train, dtype=float)
    segments = []
    with np.errstate(all="ignore"):
        for dt in pd.terms:
            c = None
            for i, ki in enumerate(dt.strengths):
                if i == j or ki == 0:
                    continue
                f = _powi(X[:, i], ki)
                c = f if c is None else c * f
            if c is None:
                cbar = 1.0
            else:
                finite = np.isfinite(c)
                if not finite.any():
                    raise EvaluationError(
                        j, "a term's variable-free factor evaluates on no training row")
                cbar = float(c[finite].mean())
            segments.append((dt.weight, dt.strengths[j], dt.func, cbar))

    out = np.empty(grid.size)
    for gi, g in enumerate(grid):
        total = 0.0
        for w, k, func, cbar in segments:
            if g == 0.0 and k - 1 < 0:
                raise UndefinedAt(float(g))
            xjpow = _powi(float(g), k - 1)
            p = _powi(float(g), k) * cbar
            if not np.isfinite(p):
                raise UndefinedAt(float(g))
            try:
                tprime = transforms.derivative(func, p)
            except DomainError:
                raise UndefinedAt(float(g)) from None
            total += w * k * xjpow * cbar * tprime
        if not np.isfinite(total):
            raise UndefinedAt(float(g))
        out[gi] = total
    return out
