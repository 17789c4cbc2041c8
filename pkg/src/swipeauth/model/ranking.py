import logging
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from ..errors import InsufficientFeatures
from ..features.catalog import FeatureId, catalog


logger = logging.getLogger(__name__)

RATIO_EPSILON = 1e-6
TUKEY_K = 1.5


@dataclass(frozen=True, eq=False)
class Normalizer:
    """Per-column min/max bounds learned from a training pool."""
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        if self.lo.shape != self.hi.shape or np.any(self.lo > self.hi):
            raise ValueError("Normalizer bounds must satisfy lo <= hi column-wise")

    @property
    def width(self) -> int:
        return len(self.lo)

    def to_dict(self) -> Dict:
        return {'lo': [float(v) for v in self.lo], 'hi': [float(v) for v in self.hi]}

    @classmethod
    def from_dict(cls, data: Dict) -> 'Normalizer':
        return cls(np.array(data['lo'], dtype=float), np.array(data['hi'], dtype=float))


@dataclass(frozen=True, eq=False)
class TrainingSplit:
    genuine: np.ndarray
    impostor: np.ndarray

    def __post_init__(self):
        if len(self.genuine) == 0 or len(self.impostor) == 0:
            raise ValueError("TrainingSplit needs non-empty genuine and impostor matrices")
        if self.genuine.shape[1] != self.impostor.shape[1]:
            raise ValueError("Genuine and impostor matrices differ in width")


@dataclass(frozen=True)
class RankedFeatures:
    indices: Tuple[int, ...]
    scores: Tuple[float, ...]

    def __len__(self):
        return len(self.indices)

    def top(self, n: int) -> List[int]:
        return list(self.indices[:n])

    def entries(self) -> List[Tuple[FeatureId, float]]:
        features = catalog()
        return [(features[i], s) for i, s in zip(self.indices, self.scores)]


def fit_normalizer(pool: np.ndarray) -> Normalizer:
    pool = np.asarray(pool, dtype=float)
    if pool.ndim != 2 or len(pool) == 0:
        raise ValueError("Cannot fit a normalizer on an empty pool")
    return Normalizer(pool.min(axis=0), pool.max(axis=0))


def apply_normalizer(normalizer: Normalizer, matrix: np.ndarray) -> np.ndarray:
    """Map into [0, 1]; constant columns become 0.0 and unseen values are clamped."""
    matrix = np.asarray(matrix, dtype=float)
    span = normalizer.hi - normalizer.lo
    live = span > 0
    out = np.zeros(matrix.shape, dtype=float)
    out[..., live] = (matrix[..., live] - normalizer.lo[live]) / span[live]
    return np.clip(out, 0.0, 1.0)


def trimmed_means(matrix: np.ndarray) -> np.ndarray:
    """
    Column-wise mean after dropping points outside the Tukey fences.

    A column whose fences keep nothing falls back to its median; each mean is
    clamped into the range of the kept points.
    """
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or len(matrix) == 0:
        raise ValueError("trimmed_means needs a non-empty 2-D matrix")
    q1, q3 = np.percentile(matrix, [25, 75], axis=0)
    iqr = q3 - q1
    kept = (matrix >= q1 - TUKEY_K * iqr) & (matrix <= q3 + TUKEY_K * iqr)
    counts = kept.sum(axis=0)
    means = np.where(kept, matrix, 0.0).sum(axis=0) / np.maximum(counts, 1)
    lo = np.where(kept, matrix, np.inf).min(axis=0)
    hi = np.where(kept, matrix, -np.inf).max(axis=0)
    means = np.minimum(np.maximum(means, lo), hi)
    return np.where(counts > 0, means, np.median(matrix, axis=0))


def trimmed_mean(values: Sequence[float]) -> float:
    """Mean after dropping points outside the Tukey fences; falls back to the median."""
    values = np.asarray(values, dtype=float)
    if len(values) == 0:
        raise ValueError("trimmed_mean of an empty sequence")
    return float(trimmed_means(values.reshape(-1, 1))[0])


def rank_features(split: TrainingSplit, candidates: Optional[Sequence[int]] = None) -> RankedFeatures:
    """
    Rank candidate columns by |m_G - m_I| / max(m_G, eps) on normalized data.

    Ties keep ascending column order. `candidates` restricts the ranking to a
    feature set; by default every column competes.
    """
    width = split.genuine.shape[1]
    candidates = list(range(width)) if candidates is None else sorted(candidates)

    m_g = trimmed_means(split.genuine[:, candidates])
    m_i = trimmed_means(split.impostor[:, candidates])
    scores = np.abs(m_g - m_i) / np.maximum(m_g, RATIO_EPSILON)

    order = np.lexsort((np.asarray(candidates), -scores))
    return RankedFeatures(tuple(int(candidates[j]) for j in order), tuple(float(scores[j]) for j in order))


def select_pairs(ranked: RankedFeatures, top_k: int = 40) -> List[Tuple[int, int]]:
    if len(ranked) < top_k:
        raise InsufficientFeatures(f"Ranking has {len(ranked)} features, top_k={top_k} requested")
    top = ranked.top(top_k)
    return [(top[j], top[j + 1]) for j in range(len(top) - 1)]
