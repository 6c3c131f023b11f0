"""Univariate transformation functions and their first derivatives.

Every transformation maps a real to a real. The registry pairs each
function with its derivative so fitted expressions can be differentiated
in closed form. Inputs outside a function's domain raise DomainError
instead of letting a NaN or infinity leak into downstream arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "DomainError",
    "TRANSFORM_IDS",
    "DEFAULT_TRANSFORMS",
    "apply",
    "derivative",
    "apply_array",
    "derivative_array",
    "make_transform_set",
]

# exp(v) for v beyond this is treated as an overflow (float64 tops out near 709)
EXP_MAX_INPUT = 700.0


class DomainError(ValueError):
    """A transformation (or its derivative) is undefined at the given input."""

    def __init__(self, func: str, value: float, detail: str = ""):
        self.func = func
        self.value = value
        msg = f"{func} undefined at {value!r}"
        if detail:
            msg += f" ({detail})"
        super().__init__(msg)


def _tanh_deriv(v: float) -> float:
    t = math.tanh(v)
    return 1.0 - t * t


def _sqrt_abs(v: float) -> float:
    return math.sqrt(abs(v))


def _sqrt_abs_deriv(v: float) -> float:
    # d/dv sqrt(|v|) = sign(v) / (2 sqrt(|v|)); unbounded at 0
    return math.copysign(0.5 / math.sqrt(abs(v)), v)


def _sqrt_abs_deriv_array(v: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.sign(v) * (0.5 / np.sqrt(np.abs(v)))
    return np.where(v == 0.0, np.nan, out)


def _log_array(v: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = np.log(v)
    return np.where(v > 0.0, out, np.nan)


def _log_deriv_array(v: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        out = 1.0 / v
    return np.where(v > 0.0, out, np.nan)


def _exp_array(v: np.ndarray) -> np.ndarray:
    with np.errstate(over="ignore", invalid="ignore"):
        out = np.exp(v)
    return np.where(v > EXP_MAX_INPUT, np.nan, out)


def _tanh_deriv_array(v: np.ndarray) -> np.ndarray:
    t = np.tanh(v)
    return 1.0 - t * t


@dataclass(frozen=True)
class _Transform:
    name: str
    fn: Callable[[float], float]
    deriv: Callable[[float], float]
    fn_array: Callable[[np.ndarray], np.ndarray]
    deriv_array: Callable[[np.ndarray], np.ndarray]


_REGISTRY: dict[str, _Transform] = {
    t.name: t
    for t in (
        _Transform("id", lambda v: v, lambda v: 1.0,
                   lambda v: np.asarray(v, dtype=float).copy(),
                   lambda v: np.ones_like(v, dtype=float)),
        _Transform("sin", math.sin, math.cos, np.sin, np.cos),
        _Transform("cos", math.cos, lambda v: -math.sin(v), np.cos,
                   lambda v: -np.sin(v)),
        _Transform("tanh", math.tanh, _tanh_deriv, np.tanh, _tanh_deriv_array),
        _Transform("sqrt_abs", _sqrt_abs, _sqrt_abs_deriv,
                   lambda v: np.sqrt(np.abs(v)), _sqrt_abs_deriv_array),
        _Transform("log", math.log, lambda v: 1.0 / v, _log_array,
                   _log_deriv_array),
        _Transform("exp", math.exp, math.exp, _exp_array, _exp_array),
    )
}

TRANSFORM_IDS: tuple[str, ...] = tuple(_REGISTRY)

# the full function set; runs may restrict to any non-empty subset
DEFAULT_TRANSFORMS: tuple[str, ...] = TRANSFORM_IDS

# alias: a transform set is an ordered tuple of registered ids
TransformSet = tuple


def make_transform_set(ids) -> tuple[str, ...]:
    """Validate and normalize an iterable of transformation ids.

    Raises ValueError on unknown ids, duplicates, or an empty set.
    """
    out = tuple(ids)
    if not out:
        raise ValueError("transform set must not be empty")
    seen = set()
    for name in out:
        if name not in _REGISTRY:
            raise ValueError(
                f"unknown transformation {name!r}; known: {', '.join(TRANSFORM_IDS)}")
        if name in seen:
            raise ValueError(f"duplicate transformation {name!r}")
        seen.add(name)
    return out


def _lookup(func: str) -> _Transform:
    try:
        return _REGISTRY[func]
    except KeyError:
        raise ValueError(
            f"unknown transformation {func!r}; known: {', '.join(TRANSFORM_IDS)}"
        ) from None


def apply(func: str, v: float) -> float:
    """Evaluate transformation ``func`` at ``v``.

    Raises DomainError where the mathematical result is undefined or
    non-finite (log of a non-positive value, exp overflow).
    """
    t = _lookup(func)
    if func == "log" and v <= 0.0:
        raise DomainError(func, v, "requires v > 0")
    if func == "exp" and v > EXP_MAX_INPUT:
        raise DomainError(func, v, "overflow")
    out = t.fn(v)
    if not math.isfinite(out):
        raise DomainError(func, v, "non-finite result")
    return out


def derivative(func: str, v: float) -> float:
    """Evaluate the first derivative of ``func`` at ``v``.

    Raises DomainError where the derivative is undefined (v = 0 for
    sqrt_abs, v <= 0 for log, exp overflow).
    """
    t = _lookup(func)
    if func == "log" and v <= 0.0:
        raise DomainError(func, v, "derivative requires v > 0")
    if func == "sqrt_abs" and v == 0.0:
        raise DomainError(func, v, "derivative unbounded at 0")
    if func == "exp" and v > EXP_MAX_INPUT:
        raise DomainError(func, v, "overflow")
    out = t.deriv(v)
    if not math.isfinite(out):
        raise DomainError(func, v, "non-finite result")
    return out


def apply_array(func: str, values: np.ndarray) -> np.ndarray:
    """Vectorized ``apply``: out-of-domain entries come back as NaN."""
    with np.errstate(all="ignore"):
        out = _lookup(func).fn_array(np.asarray(values, dtype=float))
    return out


def derivative_array(func: str, values: np.ndarray) -> np.ndarray:
    """Vectorized ``derivative``: out-of-domain entries come back as NaN."""
    with np.errstate(all="ignore"):
        out = _lookup(func).deriv_array(np.asarray(values, dtype=float))
    return out
