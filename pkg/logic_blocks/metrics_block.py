"""
Metrics Block - Map error and batch statistics
"""

from dataclasses import asdict, dataclass, field
from typing import Any, Dict, Sequence, Tuple
import math

import numpy as np
from scipy import stats

from logic_blocks.errors import DimensionMismatchError, InsufficientDataError


@dataclass(frozen=True)
class BatchStats:
    mean: float
    half_width: float
    n: int


@dataclass
class TrialReport:
    """
    Outcome of one pipeline run.

    success holds iff the final map has one component and one hole per obstacle.
    """

    gamma_est: float
    delta_cls: float
    mae: float
    pao: float
    betti0: int
    betti1: int
    truth_betti0: int
    truth_betti1: int
    obstacle_count: int
    success: bool
    coverage: bool
    coverage_missing: int
    sigma_max: float
    bound_satisfied: float
    gamma_bound_min: float
    rejected_updates: int
    n_tuples: int
    stage_seconds: Dict[str, float] = field(default_factory=dict, compare=False)

    def to_dict(self) -> Dict[str, Any]:
        data = asdict(self)
        data.pop("stage_seconds")
        return data


class MetricsBlock:
    """Evaluation metrics for estimated maps and batches of trials."""

    @staticmethod
    def mae(estimate: np.ndarray, truth: np.ndarray) -> float:
        """
        Fraction of cells where the estimated and true free/occupied labels differ.

        Args:
            estimate: boolean free mask of the estimated map
            truth: boolean free mask of the ground truth

        Returns:
            Misclassified fraction in [0, 1]
        """
        estimate = np.asarray(estimate, dtype=bool)
        truth = np.asarray(truth, dtype=bool)
        if estimate.shape != truth.shape:
            raise DimensionMismatchError(f"Map shapes differ: {estimate.shape} vs {truth.shape}")
        return float(np.count_nonzero(estimate != truth)) / truth.size

    @staticmethod
    def success(betti: Tuple[int, int], obstacle_count: int) -> bool:
        return betti[0] == 1 and betti[1] == obstacle_count

    @staticmethod
    def batch_stats(values: Sequence[float], confidence: float = 0.95) -> BatchStats:
        """Mean and Student-t confidence half-width with n - 1 degrees of freedom."""
        data = np.asarray(values, dtype=float)
        n = data.size
        if n < 2:
            raise InsufficientDataError(f"Confidence interval needs at least 2 values, got {n}")
        mean = float(np.mean(data))
        std = float(np.std(data, ddof=1))
        t_crit = float(stats.t.ppf(0.5 + confidence / 2.0, df=n - 1))
        return BatchStats(mean=mean, half_width=t_crit * std / math.sqrt(n), n=n)
