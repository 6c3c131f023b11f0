"""Greedy breadth-style search over interaction-transformation expressions.

The search grows a queue of expressions level by level, starting from the
plain linear model. A node's candidate terms come from combining its own
terms pairwise (multiplying or dividing the interactions) and from
swapping transformation functions; every improving subset of candidates
becomes a child after insignificant terms are pruned away. Exhaustive
subset enumeration is only attempted for small candidate sets; past the
guard the node falls back to adding the single best candidate.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from . import fitting
from .expr import Individual, Term, TermEvaluator
from .fitting import FitConfig
from .transforms import make_transform_set

__all__ = [
    "POWER_SET_LIMIT",
    "SymTreeConfig",
    "TooManyCandidates",
    "candidate_terms",
    "expand",
    "expand_greedy",
    "symtree_search",
]

# above this many candidates the power set is no longer enumerated
POWER_SET_LIMIT = 12


class TooManyCandidates(ValueError):
    def __init__(self, count: int):
        self.count = count
        super().__init__(
            f"{count} candidate terms exceed the power-set limit of {POWER_SET_LIMIT}")


@dataclass(frozen=True)
class SymTreeConfig:
    """Significance threshold on |weight|, level budget and wall-clock cap."""

    threshold: float = 1e-3
    max_iter: int = 5
    time_budget: float = 3600.0

    def __post_init__(self):
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.max_iter < 0:
            raise ValueError("max_iter must be >= 0")
        if self.time_budget <= 0:
            raise ValueError("time_budget must be positive")


def candidate_terms(ind: Individual, funcs) -> list[Term]:
    """Candidate terms for expanding an expression.

    Pairwise products keep each target term's function (so a pair yields
    one candidate per ordering), pairwise quotients are ordered, and every
    term is offered with each alternative function. All-zero strength
    vectors and duplicates of existing or earlier candidates are dropped.
    """
    funcs = make_transform_set(funcs)
    seen = set(ind.terms)
    out: list[Term] = []

    def push(strengths: tuple[int, ...], func: str):
        if not any(strengths):
            return
        cand = Term(strengths, func)
        if cand in seen:
            return
        seen.add(cand)
        out.append(cand)

    terms = ind.terms
    for target in terms:
        for source in terms:
            push(tuple(a + b for a, b in zip(target.strengths, source.strengths)),
                 target.func)
    for target in terms:
        for source in terms:
            push(tuple(a - b for a, b in zip(target.strengths, source.strengths)),
                 target.func)
    for term in terms:
        for func in funcs:
            if func != term.func:
                push(term.strengths, func)
    return out


def _prune_insignificant(child: Individual, threshold: float, X, y,
                         fit_cfg: FitConfig,
                         evaluator: TermEvaluator | None) -> Individual:
    """Drop terms with |weight| below the threshold and refit.

    At least one term always survives: if everything falls below the
    threshold the single largest-weight term is kept.
    """
    keep = [t for t, w in zip(child.terms, child.weights) if abs(w) >= threshold]
    if len(keep) == len(child.terms):
        return child
    if not keep:
        best = max(range(len(child.terms)), key=lambda i: abs(child.weights[i]))
        keep = [child.terms[best]]
    return fitting.fit(Individual(tuple(keep)), X, y, fit_cfg, evaluator)


def expand(ind: Individual, X, y, cfg: SymTreeConfig, funcs,
           fit_cfg: FitConfig = FitConfig(),
           evaluator: TermEvaluator | None = None) -> list[Individual]:
    """Children of a node: improving, maximal candidate subsets.

    Every non-empty subset of the candidate terms is fitted on top of the
    parent expression. Subsets that do not strictly improve the parent are
    terminal; among the improving ones, proper subsets of other improving
    subsets are discarded. Survivors get their insignificant terms pruned
    (and are refitted), and must still beat the parent afterwards.

    Raises TooManyCandidates past the power-set guard.
    """
    cands = candidate_terms(ind, funcs)
    if len(cands) > POWER_SET_LIMIT:
        raise TooManyCandidates(len(cands))
    if not cands:
        return []

    kept: list[tuple[int, Individual]] = []
    for bits in range(1, 1 << len(cands)):
        extra = tuple(cands[i] for i in range(len(cands)) if bits >> i & 1)
        child = fitting.fit(Individual(ind.terms + extra), X, y, fit_cfg, evaluator)
        if child.fitness < ind.fitness:
            kept.append((bits, child))

    maximal = [
        (bits, child) for bits, child in kept
        if not any(other != bits and bits & other == bits for other, _ in kept)
    ]

    out = []
    for _, child in maximal:
        pruned = _prune_insignificant(child, cfg.threshold, X, y, fit_cfg, evaluator)
        if pruned.fitness < ind.fitness:
            out.append(pruned)
    return out


def expand_greedy(ind: Individual, X, y, cfg: SymTreeConfig, funcs,
                  fit_cfg: FitConfig = FitConfig(),
                  evaluator: TermEvaluator | None = None) -> list[Individual]:
    """Fallback expansion: add only the best single improving candidate."""
    best: Individual | None = None
    for cand in candidate_terms(ind, funcs):
        child = fitting.fit(Individual(ind.terms + (cand,)), X, y, fit_cfg, evaluator)
        if child.fitness < ind.fitness and (best is None or child.fitness < best.fitness):
            best = child
    if best is None:
        return []
    pruned = _prune_insignificant(best, cfg.threshold, X, y, fit_cfg, evaluator)
    return [pruned] if pruned.fitness < ind.fitness else []


def symtree_search(X, y, cfg: SymTreeConfig, funcs,
                   fit_cfg: FitConfig = FitConfig()) -> Individual:
    """Breadth-style search seeded with the fitted linear model.

    Expands level by level up to ``cfg.max_iter`` levels or until the
    queue empties or the time budget runs out, and returns the best
    expression ever fitted.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("need a non-empty n x d matrix")
    d = X.shape[1]
    evaluator = TermEvaluator(X)

    seed_terms = tuple(
        Term(tuple(1 if j == i else 0 for j in range(d)), "id") for i in range(d))
    seed = fitting.fit(Individual(seed_terms), X, y, fit_cfg, evaluator)
    best = seed
    queue = [seed]
    deadline = time.monotonic() + cfg.time_budget

    for _ in range(cfg.max_iter):
        next_queue: list[Individual] = []
        for node in queue:
            if time.monotonic() > deadline:
                return best
            try:
                children = expand(node, X, y, cfg, funcs, fit_cfg, evaluator)
            except TooManyCandidates:
                children = expand_greedy(node, X, y, cfg, funcs, fit_cfg, evaluator)
            for child in children:
                if child.fitness < best.fitness:
                    best = child
            next_queue.extend(children)
        queue = next_queue
        if not queue:
            break
    return best
