from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from ..errors import EmptyScores
from ..model.classifier import calibrate_threshold


PERCENTILE_RANGE = range(50, 101)


@dataclass(frozen=True)
class ErrorRates:
    eer: float
    threshold: float
    far: float
    frr: float


def candidate_thresholds(genuine: np.ndarray, impostor: np.ndarray) -> np.ndarray:
    values = np.unique(np.concatenate([genuine, impostor]))
    midpoints = (values[:-1] + values[1:]) / 2.0
    return np.unique(np.concatenate([values, midpoints]))


def error_rates(genuine_stats: Sequence[float], impostor_stats: Sequence[float]) -> ErrorRates:
    """
    Sweep thresholds over the pooled statistics and their midpoints.

    FRR(t) counts genuine windows above t, FAR(t) impostor windows at or below t.
    The first t minimising |FAR - FRR| wins, so ties resolve to the smaller t.
    """
    genuine = np.sort(np.asarray(genuine_stats, dtype=float))
    impostor = np.sort(np.asarray(impostor_stats, dtype=float))
    if len(genuine) == 0 or len(impostor) == 0:
        raise EmptyScores("EER needs at least one genuine and one impostor statistic")

    thresholds = candidate_thresholds(genuine, impostor)
    n_g, n_i = len(genuine), len(impostor)
    frr_count = n_g - np.searchsorted(genuine, thresholds, side='right')
    far_count = np.searchsorted(impostor, thresholds, side='right')
    # |FAR - FRR| scaled by n_g * n_i stays integral, so ties compare exactly
    gap = np.abs(far_count.astype(np.int64) * n_g - frr_count.astype(np.int64) * n_i)
    best = int(np.argmin(gap))
    far = far_count / n_i
    frr = frr_count / n_g
    return ErrorRates(
        eer=int(far_count[best] * n_g + frr_count[best] * n_i) / (2 * n_g * n_i),
        threshold=float(thresholds[best]),
        far=float(far[best]),
        frr=float(frr[best]),
    )


def compute_eer(genuine_stats: Sequence[float], impostor_stats: Sequence[float]) -> Tuple[float, float]:
    rates = error_rates(genuine_stats, impostor_stats)
    return rates.eer, rates.threshold


def percentile_for_threshold(d_g: Sequence[float], threshold: float) -> int:
    """Integer percentile in 50..100 whose nearest-rank value of D_G lies closest to threshold."""
    best_i, best_gap = PERCENTILE_RANGE[0], None
    for i in PERCENTILE_RANGE:
        gap = abs(calibrate_threshold(None, d_g, i) - threshold)
        if best_gap is None or gap < best_gap:
            best_i, best_gap = i, gap
    return best_i
