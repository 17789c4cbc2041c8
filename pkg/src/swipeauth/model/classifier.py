import json
import logging
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from .gmm import COVARIANCE_FLOOR, EM_MAX_ITER, EM_TOL, Gmm2D, fit_gmm_stack
from .ranking import (Normalizer, RankedFeatures, TrainingSplit, apply_normalizer, fit_normalizer,
                      rank_features, select_pairs)
from ..data.types import Context
from ..errors import EmptyScores, ModelFormatError, TooFewPoints
from ..features.catalog import FeatureSet, feature_indices


logger = logging.getLogger(__name__)

SCHEMA_VERSION = 1
DISTANCE_MODES = ('min', 'sum')


class Verdict(Enum):
    GENUINE = "Genuine"
    ANOMALY = "Anomaly"


@dataclass(frozen=True)
class EmSettings:
    tol: float = EM_TOL
    max_iter: int = EM_MAX_ITER
    covariance_floor: float = COVARIANCE_FLOOR

    def to_dict(self) -> Dict:
        return {'tol': self.tol, 'max_iter': self.max_iter, 'covariance_floor': self.covariance_floor}


@dataclass(frozen=True, eq=False)
class UserModel:
    user: str
    contexts: Tuple[Context, ...]
    feature_set: FeatureSet
    normalizer: Normalizer
    ranked: Tuple[int, ...]
    pairs: Tuple[Tuple[int, int], ...]
    gmms: Tuple[Gmm2D, ...]
    threshold: float
    percentile_i: float
    k: int
    seed: int
    em: EmSettings = field(default_factory=EmSettings)
    distance_mode: str = 'min'

    def to_dict(self) -> Dict:
        return {
            'schema_version': SCHEMA_VERSION,
            'user': self.user,
            'contexts': [c.value for c in self.contexts],
            'feature_set': self.feature_set.value,
            'normalizer': self.normalizer.to_dict(),
            'ranked': list(self.ranked),
            'pairs': [list(p) for p in self.pairs],
            'gmms': [g.to_dict() for g in self.gmms],
            'threshold': float(self.threshold),
            'percentile_i': self.percentile_i,
            'k': self.k,
            'seed': self.seed,
            'em': self.em.to_dict(),
            'distance_mode': self.distance_mode,
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'UserModel':
        version = data.get('schema_version')
        if version != SCHEMA_VERSION:
            raise ModelFormatError(f"Unsupported model schema_version: {version}")
        try:
            em = data.get('em', {})
            return cls(
                user=str(data['user']),
                contexts=tuple(Context.parse(c) for c in data['contexts']),
                feature_set=FeatureSet.parse(data['feature_set']),
                normalizer=Normalizer.from_dict(data['normalizer']),
                ranked=tuple(int(i) for i in data['ranked']),
                pairs=tuple((int(a), int(b)) for a, b in data['pairs']),
                gmms=tuple(Gmm2D.from_dict(g) for g in data['gmms']),
                threshold=float(data['threshold']),
                percentile_i=data['percentile_i'],
                k=int(data['k']),
                seed=int(data['seed']),
                em=EmSettings(float(em.get('tol', EM_TOL)), int(em.get('max_iter', EM_MAX_ITER)),
                              float(em.get('covariance_floor', COVARIANCE_FLOOR))),
                distance_mode=data.get('distance_mode', 'min'),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"Malformed model file: {e}") from e


@dataclass(frozen=True)
class ScoreWindow:
    values: Tuple[float, ...]
    m: int = 4

    @property
    def statistic(self) -> float:
        """Mean of the min(m, |C|) smallest distance sums."""
        smallest = np.sort(np.asarray(self.values, dtype=float))[:min(self.m, len(self.values))]
        return float(np.mean(smallest))


def train_ensemble(genuine: np.ndarray, pairs: Sequence[Tuple[int, int]], k: int, seed: int,
                   em: Optional[EmSettings] = None) -> List[Gmm2D]:
    """One mixture per feature pair, fitted as a single stack; pair j is seeded with seed + j."""
    genuine = np.asarray(genuine, dtype=float)
    if genuine.ndim != 2 or len(genuine) == 0:
        raise TooFewPoints("Cannot train an ensemble on an empty genuine matrix")
    if not pairs:
        return []
    em = em or EmSettings()
    stack = np.stack([genuine[:, [a, b]] for a, b in pairs])
    return fit_gmm_stack(stack, k, [seed + j for j in range(len(pairs))], em.tol, em.max_iter,
                         em.covariance_floor)


def pair_distances(gmm: Gmm2D, points: np.ndarray, distance_mode: str = 'min') -> np.ndarray:
    diff = points[:, None, :] - gmm.centroids[None, :, :]
    dist = np.sqrt(np.sum(diff * diff, axis=2))
    if distance_mode == 'sum':
        return dist.sum(axis=1)
    return dist.min(axis=1)


def score_normalized(model: UserModel, matrix: np.ndarray) -> np.ndarray:
    """Distance sums D for rows already mapped by the model's normalizer."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=float))
    total = np.zeros(len(matrix))
    for (a, b), gmm in zip(model.pairs, model.gmms):
        total += pair_distances(gmm, matrix[:, [a, b]], model.distance_mode)
    return total


def score_swipe(model: UserModel, v) -> float:
    values = getattr(v, 'values', v)
    return float(score_normalized(model, np.asarray(values, dtype=float)[None, :])[0])


def score_matrix(model: UserModel, raw: np.ndarray) -> np.ndarray:
    """Normalize raw feature rows with the model's bounds, then score them."""
    return score_normalized(model, apply_normalizer(model.normalizer, raw))


def _nearest_rank_index(n: int, i: float) -> int:
    # rounding guards against i * n / 100 landing a hair above an integer
    return max(int(math.ceil(round(i * n / 100.0, 9))) - 1, 0)


def calibrate_threshold(model: Optional[UserModel], d_g: Sequence[float], i: float) -> float:
    """Nearest-rank i-th percentile of the genuine training distance sums."""
    d_g = np.sort(np.asarray(d_g, dtype=float))
    if len(d_g) == 0:
        raise EmptyScores("Threshold calibration needs at least one distance sum")
    if not 50 <= i <= 100:
        raise ValueError(f"Percentile must lie in [50, 100], got {i}")
    return float(d_g[_nearest_rank_index(len(d_g), i)])


def decide_window(model: Union[UserModel, float], c: Sequence[float], m: int = 4) -> Tuple[Verdict, float]:
    if len(c) == 0:
        raise EmptyScores("Cannot decide on an empty window")
    threshold = model.threshold if isinstance(model, UserModel) else float(model)
    statistic = ScoreWindow(tuple(float(v) for v in c), m).statistic
    verdict = Verdict.GENUINE if statistic <= threshold else Verdict.ANOMALY
    return verdict, statistic


def stream_windows(scores: Sequence[float], w: int = 25, m: int = 4) -> List[ScoreWindow]:
    """Stride-1 windows of length w; fewer than w scores give one short window."""
    scores = [float(s) for s in scores]
    if not scores:
        raise EmptyScores("No scores to window")
    if len(scores) < w:
        return [ScoreWindow(tuple(scores), m)]
    return [ScoreWindow(tuple(scores[j:j + w]), m) for j in range(len(scores) - w + 1)]


def build_user_model(user: str, genuine_raw: np.ndarray, impostor_raw: np.ndarray,
                     contexts: Sequence[Context], feature_set: FeatureSet, k: int = 3, top_k: int = 40,
                     seed: int = 0, percentile: float = 95, em: Optional[EmSettings] = None,
                     distance_mode: str = 'min') -> Tuple[UserModel, np.ndarray]:
    """
    Fit the full per-user pipeline on raw training rows.

    Returns the model and the genuine training distance sums D_G used for calibration.
    """
    if distance_mode not in DISTANCE_MODES:
        raise ValueError(f"distance_mode must be one of {DISTANCE_MODES}")
    genuine_raw = np.asarray(genuine_raw, dtype=float)
    impostor_raw = np.asarray(impostor_raw, dtype=float)
    em = em or EmSettings()

    normalizer = fit_normalizer(np.vstack([genuine_raw, impostor_raw]))
    genuine = apply_normalizer(normalizer, genuine_raw)
    impostor = apply_normalizer(normalizer, impostor_raw)
    ranked: RankedFeatures = rank_features(TrainingSplit(genuine, impostor), feature_indices(feature_set))
    pairs = select_pairs(ranked, top_k)
    gmms = train_ensemble(genuine, pairs, k, seed, em)

    model = UserModel(
        user=user,
        contexts=tuple(contexts),
        feature_set=FeatureSet.parse(feature_set),
        normalizer=normalizer,
        ranked=tuple(ranked.top(top_k)),
        pairs=tuple(pairs),
        gmms=tuple(gmms),
        threshold=0.0,
        percentile_i=percentile,
        k=k,
        seed=seed,
        em=em,
        distance_mode=distance_mode,
    )
    d_g = score_normalized(model, genuine)
    model = replace(model, threshold=calibrate_threshold(model, d_g, percentile))
    logger.debug(f"Model {user}: {len(pairs)} pairs, k={k}, threshold={model.threshold:.4f}")
    return model, d_g


def save_model(model: UserModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(model.to_dict(), f, indent=2, sort_keys=True)
        f.write('\n')
    return path


def load_model(path: Union[str, Path]) -> UserModel:
    try:
        with open(path, 'r', encoding='utf-8') as f:
            data = json.load(f)
    except json.JSONDecodeError as e:
        raise ModelFormatError(f"{path} is not valid JSON: {e}") from e
    return UserModel.from_dict(data)
