"""Quality measures beyond plain fitness.

Disentanglement gauges how collinear the transformed features of an
expression are: the mean absolute pairwise Pearson correlation over the
term columns. Lower is better; 0 means mutually uncorrelated features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = ["CorrelationReport", "TooFewFeatures", "disentanglement"]


class TooFewFeatures(ValueError):
    """Fewer than two non-constant feature columns were supplied."""


@dataclass(frozen=True)
class CorrelationReport:
    value: float  # mean |pearson| over all unordered column pairs, in [0, 1]
    pairs: int

    def __post_init__(self):
        if not 0.0 <= self.value <= 1.0:
            raise ValueError(f"correlation mean out of range: {self.value}")


def disentanglement(Z) -> CorrelationReport:
    """Mean absolute pairwise Pearson correlation of the columns of Z.

    Constant columns are dropped first (their correlation is undefined);
    TooFewFeatures is raised when fewer than two columns remain.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2 or Z.shape[0] < 2:
        raise ValueError("need an n x m matrix with n >= 2")
    keep = [j for j in range(Z.shape[1]) if np.ptp(Z[:, j]) > 0.0]
    if len(keep) < 2:
        raise TooFewFeatures(f"{len(keep)} non-constant columns, need >= 2")
    C = np.corrcoef(Z[:, keep], rowvar=False)
    iu = np.triu_indices(len(keep), k=1)
    vals = np.abs(C[iu])
    # rounding can push a perfect correlation epsilon past 1
    return CorrelationReport(value=float(np.clip(vals.mean(), 0.0, 1.0)),
                             pairs=len(vals))
