"""Interaction-transformation expression model and evaluation.

An expression is an affine combination of transformed interactions:

    f(x) = w0 + sum_i  w_i * t_i( prod_j x_j ** k_ij )

Each term carries an integer strength vector (the exponents k) and the id
of its transformation function. Terms are evaluated independently; a term
that fails anywhere on a sample set is marked invalid rather than
poisoning the whole expression.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from . import transforms
from .transforms import DomainError

__all__ = [
    "Term",
    "Individual",
    "AllTermsInvalid",
    "PredictionError",
    "eval_term",
    "term_column",
    "feature_matrix",
    "TermEvaluator",
    "predict",
    "render",
    "individual_to_dict",
    "individual_from_dict",
]


class AllTermsInvalid(ValueError):
    """Every term of an expression failed to evaluate on the sample set."""


class PredictionError(ValueError):
    """Unprotected prediction hit an invalid term on some row."""

    def __init__(self, row: int):
        self.row = row
        super().__init__(f"term evaluation failed on row {row}")


@dataclass(frozen=True)
class Term:
    """One transformed interaction: integer exponents plus a function id."""

    strengths: tuple[int, ...]
    func: str

    def __post_init__(self):
        object.__setattr__(self, "strengths", tuple(int(k) for k in self.strengths))
        if self.func not in transforms.TRANSFORM_IDS:
            raise ValueError(f"unknown transformation {self.func!r}")


@dataclass(frozen=True)
class Individual:
    """An expression plus its fitted weights, intercept and fitness.

    ``weights`` is None until the individual has been fitted; a fitness of
    +inf marks an expression with no usable term. Invalid terms stay in
    the genotype with weight exactly 0.
    """

    terms: tuple[Term, ...]
    weights: tuple[float, ...] | None = None
    intercept: float = 0.0
    fitness: float = math.inf

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if not self.terms:
            raise ValueError("an expression needs at least one term")
        if self.weights is not None:
            w = tuple(float(v) for v in self.weights)
            if len(w) != len(self.terms):
                raise ValueError("one weight per term required")
            object.__setattr__(self, "weights", w)

    @property
    def fitted(self) -> bool:
        return self.weights is not None

    def unfitted(self) -> "Individual":
        """Copy with fit results cleared (after a structural mutation)."""
        return replace(self, weights=None, intercept=0.0, fitness=math.inf)


def _powi(v, k: int):
    """v ** k for integer k, by repeated multiplication when |k| <= 8.

    Works on scalars and arrays alike. Small exponents dominate in
    practice; repeated multiplication keeps them exact and cheap.
    """
    if k == 0:
        return np.ones_like(v, dtype=float) if isinstance(v, np.ndarray) else 1.0
    a = abs(k)
    if a <= 8:
        out = v
        for _ in range(a - 1):
            out = out * v
    else:
        out = np.power(v, a)
    if k < 0:
        return 1.0 / out
    return out


def eval_term(term: Term, x: Sequence[float]) -> float:
    """Evaluate one term at a single point.

    Zero strengths are skipped, so 0**0 never arises. Raises DomainError
    when a zero is raised to a negative power, when the interaction value
    is non-finite, or when the transformation rejects its input.
    """
    if len(x) != len(term.strengths):
        raise ValueError(
            f"dimension mismatch: point has {len(x)} entries, term expects "
            f"{len(term.strengths)}")
    p = 1.0
    for xi, k in zip(x, term.strengths):
        if k == 0:
            continue
        xi = float(xi)
        if xi == 0.0 and k < 0:
            raise DomainError("interaction", xi, f"0 ** {k}")
        p *= _powi(xi, k)
    if not math.isfinite(p):
        raise DomainError("interaction", p, "non-finite interaction value")
    return transforms.apply(term.func, p)


def term_column(term: Term, X: np.ndarray) -> np.ndarray:
    """Evaluate one term on every row of X; failed rows come back as NaN."""
    with np.errstate(all="ignore"):
        p = None
        for i, k in enumerate(term.strengths):
            if k == 0:
                continue
            f = _powi(X[:, i], k)
            p = f if p is None else p * f
        if p is None:
            p = np.ones(X.shape[0])
        col = transforms.apply_array(term.func, p)
    col[~np.isfinite(p)] = np.nan
    return col


def feature_matrix(terms: Sequence[Term], X: np.ndarray) -> tuple[np.ndarray, list[bool]]:
    """Evaluate terms column-wise over X.

    Returns (Z, mask): Z holds one column per *valid* term in term order,
    mask flags which terms evaluated cleanly on every row. Raises
    AllTermsInvalid when no term survives.
    """
    X = np.asarray(X, dtype=float)
    cols = []
    mask = []
    for term in terms:
        col = term_column(term, X)
        ok = bool(np.isfinite(col).all())
        mask.append(ok)
        if ok:
            cols.append(col)
    if not cols:
        raise AllTermsInvalid(f"all {len(mask)} terms failed to evaluate")
    return np.column_stack(cols), mask


class TermEvaluator:
    """Caching term evaluator bound to one sample matrix.

    Identical terms recur constantly during a search (a mutation touches
    one term and leaves the rest alone), so columns are memoized by term.
    Valid columns are stored rescaled to unit max-magnitude together with
    their scale and mean, which is what the least-squares solver wants.
    The cache is bounded; the oldest half is dropped when it fills up.
    """

    def __init__(self, X: np.ndarray, max_entries: int = 8192):
        self.X = np.asarray(X, dtype=float)
        self.max_entries = max_entries
        # term -> (scaled column, scale, mean of scaled column, valid)
        self._cache: dict[Term, tuple[np.ndarray, float, float, bool]] = {}

    def _entry(self, term: Term) -> tuple[np.ndarray, float, float, bool]:
        hit = self._cache.get(term)
        if hit is not None:
            return hit
        col = term_column(term, self.X)
        ok = bool(np.isfinite(col).all())
        if ok:
            scale = float(np.max(np.abs(col)))
            if scale == 0.0 or not math.isfinite(scale):
                scale = 1.0
            col /= scale
            mean = float(col.mean())
        else:
            scale, mean = 1.0, math.nan
        if len(self._cache) >= self.max_entries:
            for key in list(self._cache)[: self.max_entries // 2]:
                del self._cache[key]
        entry = (col, scale, mean, ok)
        self._cache[term] = entry
        return entry

    def column(self, term: Term) -> tuple[np.ndarray, bool]:
        """Raw column values for one term (fresh array) plus validity."""
        col, scale, _, ok = self._entry(term)
        return col * scale, ok

    def matrix(self, terms: Sequence[Term]) -> tuple[np.ndarray, list[bool]]:
        """Same contract as :func:`feature_matrix`, served from the cache."""
        cols = []
        mask = []
        for term in terms:
            col, ok = self.column(term)
            mask.append(ok)
            if ok:
                cols.append(col)
        if not cols:
            raise AllTermsInvalid(f"all {len(mask)} terms failed to evaluate")
        return np.column_stack(cols), mask

    def scaled_matrix(self, terms: Sequence[Term]) -> tuple[np.ndarray, np.ndarray, np.ndarray, list[bool]]:
        """Valid columns rescaled to unit magnitude: (Zs, scales, means, mask)."""
        cols = []
        scales = []
        means = []
        mask = []
        for term in terms:
            col, scale, mean, ok = self._entry(term)
            mask.append(ok)
            if ok:
                cols.append(col)
                scales.append(scale)
                means.append(mean)
        if not cols:
            raise AllTermsInvalid(f"all {len(mask)} terms failed to evaluate")
        return np.column_stack(cols), np.array(scales), np.array(means), mask


def predict(ind: Individual, X: np.ndarray, protected: bool = False) -> np.ndarray:
    """Evaluate a fitted expression on every row of X.

    Zero-weight terms contribute nothing and are skipped outright (they
    were discarded during fitting). In protected mode a term that errors
    on a row contributes 0 to that row; otherwise such a row raises
    PredictionError.
    """
    if not ind.fitted:
        raise ValueError("individual is not fitted")
    X = np.asarray(X, dtype=float)
    out = np.full(X.shape[0], ind.intercept, dtype=float)
    for term, w in zip(ind.terms, ind.weights):
        if w == 0.0:
            continue
        col = term_column(term, X)
        bad = ~np.isfinite(col)
        if bad.any():
            if not protected:
                raise PredictionError(int(np.flatnonzero(bad)[0]))
            col = np.where(bad, 0.0, col)
        out += w * col
    return out


def _format_interaction(strengths: Sequence[int], names: Sequence[str]) -> str:
    parts = []
    for k, name in zip(strengths, names):
        if k == 0:
            continue
        parts.append(name if k == 1 else f"{name}^{k}")
    return "·".join(parts) if parts else "1"


def render(ind: Individual, names: Sequence[str]) -> str:
    """Human-readable form: weights at 3 decimals, zero strengths omitted."""
    if not ind.fitted:
        raise ValueError("individual is not fitted")
    d = len(ind.terms[0].strengths)
    if len(names) != d:
        raise ValueError(f"expected {d} names, got {len(names)}")
    out = [f"{ind.intercept:.3f}"]
    for term, w in zip(ind.terms, ind.weights):
        sign = " - " if w < 0 else " + "
        body = _format_interaction(term.strengths, names)
        out.append(f"{sign}{abs(w):.3f}·{term.func}({body})")
    return "".join(out)


def individual_to_dict(ind: Individual) -> dict:
    """JSON-ready form: terms / funs / weights / intercept / fitness."""
    if not ind.fitted:
        raise ValueError("individual is not fitted")
    return {
        "terms": [list(t.strengths) for t in ind.terms],
        "funs": [t.func for t in ind.terms],
        "weights": list(ind.weights),
        "intercept": ind.intercept,
        "fitness": ind.fitness,
    }


def individual_from_dict(obj: dict) -> Individual:
    terms = obj["terms"]
    funs = obj["funs"]
    if len(terms) != len(funs):
        raise ValueError("terms and funs must have equal length")
    return Individual(
        terms=tuple(Term(tuple(s), f) for s, f in zip(terms, funs)),
        weights=tuple(float(w) for w in obj["weights"]),
        intercept=float(obj["intercept"]),
        fitness=float(obj["fitness"]),
    )
