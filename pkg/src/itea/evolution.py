"""Mutation-only evolutionary search over interaction-transformation expressions.

Each generation every individual produces exactly one mutant (one of six
structural edits chosen uniformly among those currently applicable), the
mutant is refitted, and a selection scheme merges parents and children
back to the configured population size. Randomness is organized as named
streams derived from (seed, generation, index) so that runs reproduce
bit-for-bit regardless of evaluation order.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from . import fitting
from .expr import Individual, Term, TermEvaluator
from .fitting import FitConfig
from .transforms import DEFAULT_TRANSFORMS, make_transform_set

__all__ = [
    "MUTATION_IDS",
    "SELECTION_SCHEMES",
    "STRENGTH_CAP",
    "ConfigError",
    "EvolutionConfig",
    "GenerationRecord",
    "RunResult",
    "derived_rng",
    "random_term",
    "random_individual",
    "mutate_drop",
    "mutate_add",
    "mutate_replace_interaction",
    "mutate_interact",
    "mutate_replace_transform",
    "eligible_mutations",
    "mutate",
    "select",
    "evolve",
    "load_config",
    "parse_config_items",
]

MUTATION_IDS = (
    "add",
    "drop",
    "replace-interaction",
    "positive",
    "negative",
    "replace-transformation",
)

SELECTION_SCHEMES = ("tournament", "roulette", "elitist-replacement")

# interaction mutations may push strengths past the creation range [lb, ub];
# an absolute cap keeps powers from overflowing on ordinary data
STRENGTH_CAP = 8


class ConfigError(ValueError):
    """A configuration value or key is invalid."""


@dataclass(frozen=True)
class EvolutionConfig:
    """User parameters of the search.

    ``n_terms`` bounds the term count only at creation time; ``min_drop``
    and ``max_add`` gate the drop/add mutations afterwards. ``lb``/``ub``
    bound strengths drawn at creation and replacement; interaction
    mutations are clamped to [-STRENGTH_CAP, STRENGTH_CAP] instead.
    """

    pop: int = 100
    funcs: tuple[str, ...] = DEFAULT_TRANSFORMS
    generations: int = 1000
    n_terms: int = 15
    lb: int = -3
    ub: int = 3
    min_drop: int = 2
    max_add: int = 15
    fit: FitConfig = field(default_factory=FitConfig)
    seed: int = 0
    mutation_set: tuple[str, ...] = MUTATION_IDS
    selection: str = "tournament"

    def __post_init__(self):
        object.__setattr__(self, "funcs", make_transform_set(self.funcs))
        if self.pop < 1:
            raise ConfigError("pop must be >= 1")
        if self.generations < 0:
            raise ConfigError("generations must be >= 0")
        if self.n_terms < 1:
            raise ConfigError("n_terms must be >= 1")
        if self.lb > self.ub:
            raise ConfigError("lb must be <= ub")
        if self.lb == 0 and self.ub == 0:
            raise ConfigError("strength range [0, 0] admits no usable term")
        if self.min_drop < 2:
            raise ConfigError("min_drop must be >= 2")
        if self.max_add < 1:
            raise ConfigError("max_add must be >= 1")
        if self.seed < 0:
            raise ConfigError("seed must be non-negative")
        ops = tuple(dict.fromkeys(self.mutation_set))
        unknown = [op for op in ops if op not in MUTATION_IDS]
        if unknown:
            raise ConfigError(
                f"unknown mutation {unknown[0]!r}; known: {', '.join(MUTATION_IDS)}")
        if not ops:
            raise ConfigError("mutation_set must not be empty")
        # canonical order keeps operator choice reproducible across configs
        object.__setattr__(
            self, "mutation_set",
            tuple(op for op in MUTATION_IDS if op in ops))
        if self.selection not in SELECTION_SCHEMES:
            raise ConfigError(
                f"unknown selection {self.selection!r}; known: {', '.join(SELECTION_SCHEMES)}")


@dataclass(frozen=True)
class GenerationRecord:
    generation: int
    best_fitness: float
    median_fitness: float
    mean_length: float


@dataclass(frozen=True)
class RunResult:
    best: Individual
    history: tuple[GenerationRecord, ...]


def derived_rng(seed: int, generation: int, index: int) -> np.random.Generator:
    """Independent stream for one (generation, index) slot of a run."""
    return np.random.default_rng([int(seed), int(generation), int(index)])


def random_term(d: int, cfg: EvolutionConfig, rng: np.random.Generator) -> Term:
    """Fresh term: strengths uniform over [lb, ub] (all-zero redrawn)."""
    while True:
        strengths = rng.integers(cfg.lb, cfg.ub + 1, size=d)
        if strengths.any():
            break
    func = cfg.funcs[int(rng.integers(len(cfg.funcs)))]
    return Term(tuple(int(k) for k in strengths), func)


def random_individual(d: int, cfg: EvolutionConfig, X, y,
                      rng: np.random.Generator,
                      evaluator: TermEvaluator | None = None) -> Individual:
    """Fresh fitted individual with 1..n_terms random terms."""
    count = int(rng.integers(1, cfg.n_terms + 1))
    terms = tuple(random_term(d, cfg, rng) for _ in range(count))
    return fitting.fit(Individual(terms), X, y, cfg.fit, evaluator)


def mutate_drop(ind: Individual, rng: np.random.Generator) -> Individual:
    """Remove one uniformly chosen term."""
    idx = int(rng.integers(len(ind.terms)))
    return Individual(ind.terms[:idx] + ind.terms[idx + 1:])


def mutate_add(ind: Individual, cfg: EvolutionConfig,
               rng: np.random.Generator) -> Individual:
    """Append one fresh random term."""
    d = len(ind.terms[0].strengths)
    return Individual(ind.terms + (random_term(d, cfg, rng),))


def mutate_replace_interaction(ind: Individual, cfg: EvolutionConfig,
                               rng: np.random.Generator) -> Individual:
    """Redraw one strength entry of one term from [lb, ub].

    The draw may be zero; if that would zero out the whole vector the
    entry is redrawn until nonzero.
    """
    terms = list(ind.terms)
    ti = int(rng.integers(len(terms)))
    strengths = list(terms[ti].strengths)
    vi = int(rng.integers(len(strengths)))
    while True:
        strengths[vi] = int(rng.integers(cfg.lb, cfg.ub + 1))
        if any(strengths):
            break
    terms[ti] = Term(tuple(strengths), terms[ti].func)
    return Individual(tuple(terms))


def _nonzero_draw(cfg: EvolutionConfig, rng: np.random.Generator) -> int:
    while True:
        k = int(rng.integers(cfg.lb, cfg.ub + 1))
        if k != 0:
            return k


def mutate_interact(ind: Individual, sign: int, cfg: EvolutionConfig,
                    rng: np.random.Generator) -> Individual:
    """Combine two terms: target strengths +/- source strengths, elementwise.

    The target keeps its transformation function. With a single term the
    term pairs with itself. A self-cancelling all-zero result gets one
    entry re-randomized to a nonzero strength.
    """
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    terms = list(ind.terms)
    nt = len(terms)
    ti = int(rng.integers(nt))
    if nt >= 2:
        si = int(rng.integers(nt - 1))
        if si >= ti:
            si += 1
    else:
        si = ti
    target, source = terms[ti], terms[si]
    combined = [
        max(-STRENGTH_CAP, min(STRENGTH_CAP, a + sign * b))
        for a, b in zip(target.strengths, source.strengths)
    ]
    if not any(combined):
        vi = int(rng.integers(len(combined)))
        combined[vi] = _nonzero_draw(cfg, rng)
    terms[ti] = Term(tuple(combined), target.func)
    return Individual(tuple(terms))


def mutate_replace_transform(ind: Individual, cfg: EvolutionConfig,
                             rng: np.random.Generator) -> Individual:
    """Give one term a different transformation function."""
    terms = list(ind.terms)
    ti = int(rng.integers(len(terms)))
    options = [f for f in cfg.funcs if f != terms[ti].func]
    if not options:
        return ind
    func = options[int(rng.integers(len(options)))]
    terms[ti] = Term(terms[ti].strengths, func)
    return Individual(tuple(terms))


def eligible_mutations(ind: Individual, cfg: EvolutionConfig) -> tuple[str, ...]:
    """Subset of the configured operators applicable to this individual."""
    nt = len(ind.terms)
    out = []
    for op in cfg.mutation_set:
        if op == "drop" and nt < cfg.min_drop:
            continue
        if op == "add" and nt > cfg.max_add:
            continue
        if op == "replace-transformation" and len(cfg.funcs) < 2:
            continue
        out.append(op)
    return tuple(out)


def mutate(ind: Individual, cfg: EvolutionConfig, X, y,
           rng: np.random.Generator,
           evaluator: TermEvaluator | None = None) -> Individual:
    """Apply one uniformly chosen eligible operator and refit.

    With an empty eligible set (possible only under restrictive ablation
    configs) the individual is returned unchanged.
    """
    ops = eligible_mutations(ind, cfg)
    if not ops:
        return ind
    op = ops[int(rng.integers(len(ops)))]
    if op == "add":
        child = mutate_add(ind, cfg, rng)
    elif op == "drop":
        child = mutate_drop(ind, rng)
    elif op == "replace-interaction":
        child = mutate_replace_interaction(ind, cfg, rng)
    elif op == "positive":
        child = mutate_interact(ind, 1, cfg, rng)
    elif op == "negative":
        child = mutate_interact(ind, -1, cfg, rng)
    else:
        child = mutate_replace_transform(ind, cfg, rng)
    return fitting.fit(child.unfitted(), X, y, cfg.fit, evaluator)


def select(parents: list[Individual], children: list[Individual],
           cfg: EvolutionConfig, rng: np.random.Generator) -> list[Individual]:
    """Merge parents and children back down to the population size.

    tournament (default): the merged pool is shuffled and consumed in
    disjoint pairs, the better of each pair surviving; every individual
    plays exactly once, so the pool's best always survives. roulette:
    fitness-proportionate sampling on 1/(1+rmse), plus the best. Plain
    elitist replacement keeps the best half outright.
    """
    if len(parents) != len(children):
        raise ValueError("parents and children must have equal size")
    pool = list(parents) + list(children)
    n = len(parents)

    if cfg.selection == "tournament":
        perm = rng.permutation(len(pool))
        out = []
        for i in range(n):
            a = pool[perm[2 * i]]
            b = pool[perm[2 * i + 1]]
            out.append(a if a.fitness <= b.fitness else b)
        return out

    fits = np.array([ind.fitness for ind in pool])
    best = pool[int(np.argmin(fits))]

    if cfg.selection == "roulette":
        weights = np.where(np.isfinite(fits), 1.0 / (1.0 + fits), 0.0)
        total = weights.sum()
        if total <= 0:
            weights = np.ones(len(pool))
            total = weights.sum()
        idx = rng.choice(len(pool), size=n - 1, replace=True, p=weights / total)
        return [best] + [pool[int(i)] for i in idx]

    # elitist-replacement: truncate the merged pool
    order = np.argsort(fits, kind="stable")
    return [pool[int(i)] for i in order[:n]]


def _record(generation: int, best: Individual,
            population: list[Individual]) -> GenerationRecord:
    fits = np.array([ind.fitness for ind in population])
    return GenerationRecord(
        generation=generation,
        best_fitness=best.fitness,
        median_fitness=float(np.median(fits)),
        mean_length=float(np.mean([len(ind.terms) for ind in population])),
    )


def evolve(dataset, cfg: EvolutionConfig) -> RunResult:
    """Run the full search on a dataset (anything with .X and .y).

    Deterministic for a given config: every random draw comes from a
    stream derived from (seed, generation, index).
    """
    X = np.asarray(dataset.X, dtype=float)
    y = np.asarray(dataset.y, dtype=float)
    if X.ndim != 2 or X.shape[0] == 0 or X.shape[1] == 0:
        raise ValueError("dataset must be a non-empty n x d matrix")
    d = X.shape[1]
    evaluator = TermEvaluator(X)

    population = [
        random_individual(d, cfg, X, y, derived_rng(cfg.seed, 0, i), evaluator)
        for i in range(cfg.pop)
    ]
    best = min(population, key=lambda ind: ind.fitness)
    history = [_record(0, best, population)]

    for gen in range(1, cfg.generations + 1):
        children = [
            mutate(population[i], cfg, X, y, derived_rng(cfg.seed, gen, i), evaluator)
            for i in range(cfg.pop)
        ]
        champion = min(children, key=lambda ind: ind.fitness)
        if champion.fitness < best.fitness:
            best = champion
        population = select(population, children, cfg,
                            derived_rng(cfg.seed, gen, cfg.pop))
        history.append(_record(gen, best, population))

    return RunResult(best=best, history=tuple(history))


# --- flat key=value configuration files ---------------------------------

_INT_KEYS = ("pop", "generations", "n_terms", "lb", "ub", "min_drop",
             "max_add", "seed")
_LIST_KEYS = ("funcs", "mutation_set")
CONFIG_KEYS = _INT_KEYS + _LIST_KEYS + ("model", "lambda", "selection")


def parse_config_items(lines) -> dict:
    """Parse ``key = value`` lines ('#' comments, blanks ignored)."""
    out: dict = {}
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value, got {raw.strip()!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        value = value.strip()
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r} (line {lineno})")
        if key in _INT_KEYS:
            try:
                out[key] = int(value)
            except ValueError:
                raise ConfigError(f"config key {key!r} needs an integer, got {value!r}") from None
        elif key in _LIST_KEYS:
            out[key] = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key == "lambda":
            try:
                out[key] = float(value)
            except ValueError:
                raise ConfigError(f"config key 'lambda' needs a number, got {value!r}") from None
        else:
            out[key] = value
    return out


def config_from_items(items: dict, **overrides) -> EvolutionConfig:
    """Build an EvolutionConfig from parsed items plus explicit overrides."""
    merged = dict(items)
    merged.update({k: v for k, v in overrides.items() if v is not None})
    model = merged.pop("model", "ols")
    lam = merged.pop("lambda", None)
    if model == "ridge" and lam is None:
        raise ConfigError("model=ridge requires a lambda value")
    try:
        fit_cfg = FitConfig(model=model, lam=0.0 if lam is None else lam)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    try:
        return EvolutionConfig(fit=fit_cfg, **merged)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path, **overrides) -> EvolutionConfig:
    """Load an EvolutionConfig from a flat key=value file."""
    text = Path(path).read_text(encoding="utf-8")
    return config_from_items(parse_config_items(text.splitlines()), **overrides)
