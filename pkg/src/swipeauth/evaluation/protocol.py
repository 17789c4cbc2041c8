"""
Experimental protocols: per-user train/score/EER loops and the scenario tables.

Users are evaluated independently and merged in sorted user order, so reports do
not depend on the number of workers.
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd

from .eer import compute_eer, percentile_for_threshold
from .reports import EvalReport, UserResult
from ..data.ingest import Dataset
from ..data.types import ALL_CONTEXTS, Context
from ..errors import InvalidConfig, InvalidDataset, SwipeAuthError
from ..features.catalog import FeatureSet, feature_names
from ..features.extractor import build_feature_table
from ..features.segment import DirectionClass
from ..model.classifier import (DISTANCE_MODES, EmSettings, UserModel, build_user_model, calibrate_threshold,
                                score_matrix, stream_windows)
from ..utils.logger import ExperimentLogger


logger = logging.getLogger(__name__)

FEATURE_SETS = (FeatureSet.TOUCH, FeatureSet.MOTION, FeatureSet.FUSION)
USER_SEED_STRIDE = 1000

TABLE2_PAIRS: Tuple[Tuple[Context, Context], ...] = (
    (Context.S1, Context.S2), (Context.S2, Context.S1),
    (Context.S3, Context.S4), (Context.S4, Context.S3),
    (Context.S1, Context.S3), (Context.S3, Context.S1),
    (Context.S2, Context.S4), (Context.S4, Context.S2),
)


@dataclass(frozen=True)
class Protocol:
    train_contexts: Tuple[Context, ...]
    test_context: Context
    feature_set: FeatureSet
    train_sessions: Tuple[int, ...] = (1, 2)
    test_sessions: Tuple[int, ...] = (3, 4)
    window: int = 25
    m: int = 4
    k: int = 3
    top_k: int = 40
    seed: int = 0
    percentile: float = 95
    distance_mode: str = 'min'
    em: EmSettings = field(default_factory=EmSettings)
    direction: Optional[DirectionClass] = None
    label: str = ''

    def __post_init__(self):
        if set(self.train_sessions) & set(self.test_sessions):
            raise InvalidConfig(f"Train sessions {self.train_sessions} overlap test sessions {self.test_sessions}")
        if not self.train_contexts:
            raise InvalidConfig("Protocol needs at least one training context")
        if self.window < 1 or self.m < 1:
            raise InvalidConfig("window and m must be positive")
        if not 1 <= self.k <= 8:
            raise InvalidConfig(f"k must be in 1..8, got {self.k}")
        if self.top_k < 1:
            raise InvalidConfig(f"top_k must be positive, got {self.top_k}")
        if not 50 <= self.percentile <= 100:
            raise InvalidConfig(f"percentile must be in [50, 100], got {self.percentile}")
        if self.distance_mode not in DISTANCE_MODES:
            raise InvalidConfig(f"distance_mode must be one of {DISTANCE_MODES}")

    @property
    def train_label(self) -> str:
        return '+'.join(c.value for c in self.train_contexts)

    def to_dict(self) -> Dict:
        return {
            'train_contexts': [c.value for c in self.train_contexts],
            'test_context': self.test_context.value,
            'feature_set': self.feature_set.value,
            'train_sessions': list(self.train_sessions),
            'test_sessions': list(self.test_sessions),
            'window': self.window,
            'm': self.m,
            'k': self.k,
            'top_k': self.top_k,
            'seed': self.seed,
            'distance_mode': self.distance_mode,
            'em': self.em.to_dict(),
            'direction': self.direction.value if self.direction else None,
        }


def as_feature_table(data: Union[Dataset, pd.DataFrame], workers: int = 1) -> pd.DataFrame:
    if isinstance(data, Dataset):
        return build_feature_table(data, workers=workers)
    return data


def _sequences(frame: pd.DataFrame) -> Dict[str, List[np.ndarray]]:
    """Row positions of each (user, session) test sequence in chronological order, keyed by user."""
    result: Dict[str, List[np.ndarray]] = {}
    positions = np.arange(len(frame))
    keys = list(zip(frame['user'].to_numpy(), frame['session_index'].to_numpy()))
    for user, session in sorted(set(keys)):
        mask = (frame['user'].to_numpy() == user) & (frame['session_index'].to_numpy() == session)
        result.setdefault(user, []).append(positions[mask])
    return result


def _window_stats(scores: np.ndarray, sequences: Sequence[np.ndarray], w: int, m: int) -> List[float]:
    return [window.statistic for seq in sequences for window in stream_windows(scores[seq], w, m)]


class _ProtocolRun:
    def __init__(self, table: pd.DataFrame, protocol: Protocol):
        self.protocol = protocol
        names = feature_names()
        if protocol.direction is not None:
            table = table[table['direction'] == protocol.direction.value]
        self.users = sorted(table['user'].astype(str).unique().tolist())

        contexts = [c.value for c in protocol.train_contexts]
        train = table[table['context'].isin(contexts) & table['session_index'].isin(protocol.train_sessions)]
        test = table[(table['context'] == protocol.test_context.value)
                     & table['session_index'].isin(protocol.test_sessions)]
        test = test.sort_values(['user', 'session_index', 't_start'], kind='mergesort')

        self.train_users = train['user'].astype(str).to_numpy()
        self.train_x = train[names].to_numpy(dtype=float)
        self.test_x = test[names].to_numpy(dtype=float)
        self.test_sequences = _sequences(test.assign(user=test['user'].astype(str)))

    def evaluate_user(self, position: int, user: str) -> Tuple[Optional[UserResult], Optional[str], Optional[UserModel]]:
        p = self.protocol
        own = self.train_users == user
        genuine, impostor = self.train_x[own], self.train_x[~own]
        if len(genuine) < max(p.k, 2):
            return None, f"{len(genuine)} training swipes", None
        if len(impostor) == 0:
            return None, "no impostor training swipes", None
        own_sequences = self.test_sequences.get(user, [])
        other_sequences = [seq for u, seqs in self.test_sequences.items() if u != user for seq in seqs]
        if not own_sequences:
            return None, "no test swipes", None
        if not other_sequences:
            return None, "no impostor test swipes", None

        try:
            model, d_g = build_user_model(
                user, genuine, impostor, p.train_contexts, p.feature_set, k=p.k, top_k=p.top_k,
                seed=p.seed + USER_SEED_STRIDE * position, percentile=p.percentile, em=p.em,
                distance_mode=p.distance_mode,
            )
        except SwipeAuthError as e:
            return None, f"{type(e).__name__}: {e}", None

        scores = score_matrix(model, self.test_x)
        genuine_stats = _window_stats(scores, own_sequences, p.window, p.m)
        impostor_stats = _window_stats(scores, other_sequences, p.window, p.m)
        eer, threshold = compute_eer(genuine_stats, impostor_stats)
        percentile_i = percentile_for_threshold(d_g, threshold)
        model = replace(model, threshold=calibrate_threshold(model, d_g, percentile_i), percentile_i=percentile_i)
        result = UserResult(user, eer, threshold, percentile_i, len(genuine_stats), len(impostor_stats))
        return result, None, model


def run_protocol(data: Union[Dataset, pd.DataFrame], protocol: Protocol, workers: int = 1,
                 events: Optional[ExperimentLogger] = None,
                 models: Optional[Dict[str, UserModel]] = None) -> EvalReport:
    """
    Train one model per user and compute per-user EERs on the protocol's test context.

    Genuine windows come from the user's own test sessions, impostor windows from every
    other user's test sessions; windows never span two sessions or two users.
    Pass a dict as `models` to collect the trained models.
    """
    events = events or ExperimentLogger(logger)
    table = as_feature_table(data, workers)
    run = _ProtocolRun(table, protocol)
    events.log_protocol(protocol.label, protocol.train_label, protocol.test_context.value,
                        protocol.feature_set.title)

    jobs = list(enumerate(run.users))
    with ThreadPoolExecutor(max_workers=max(1, workers)) as executor:
        outcomes = list(executor.map(lambda job: run.evaluate_user(*job), jobs))

    report = EvalReport(protocol=protocol.to_dict(), label=protocol.label)
    for (_, user), (result, reason, model) in zip(jobs, outcomes):
        if result is None:
            report.skipped.append((user, reason))
            events.log_skip(user, reason)
            continue
        report.per_user.append(result)
        events.log_user(user, result.eer, result.percentile_i, result.n_genuine_windows,
                        result.n_impostor_windows)
        if models is not None:
            models[user] = model

    events.log_report(protocol.label, protocol.feature_set.title, report.mean_eer, report.std_eer,
                      len(report.per_user))
    return report


def default_protocol(**overrides) -> Protocol:
    settings = dict(train_contexts=ALL_CONTEXTS, test_context=Context.S1, feature_set=FeatureSet.FUSION)
    settings.update(overrides)
    return Protocol(**settings)


def _require_contexts(table: pd.DataFrame, contexts: Sequence[Context]):
    present = set(table['context'].astype(str).unique().tolist())
    missing = [c.value for c in contexts if c.value not in present]
    if missing:
        raise InvalidDataset(f"Dataset lacks contexts: {', '.join(missing)}")


def run_table1(data: Union[Dataset, pd.DataFrame], template: Optional[Protocol] = None, workers: int = 1,
               events: Optional[ExperimentLogger] = None) -> List[EvalReport]:
    """Context-specific and general regimes for every scenario and feature set: 24 reports."""
    template = template or default_protocol()
    table = as_feature_table(data, workers)
    _require_contexts(table, ALL_CONTEXTS)
    reports = []
    for context in ALL_CONTEXTS:
        for regime, train in (('context-specific', (context,)), ('general', ALL_CONTEXTS)):
            for feature_set in FEATURE_SETS:
                protocol = replace(template, train_contexts=train, test_context=context,
                                   feature_set=feature_set, direction=None,
                                   label=f"{context.value} {regime}")
                reports.append(run_protocol(table, protocol, workers, events))
    return reports


def run_table2(data: Union[Dataset, pd.DataFrame], template: Optional[Protocol] = None, workers: int = 1,
               events: Optional[ExperimentLogger] = None) -> List[EvalReport]:
    """Cross-scenario pairs sharing either activity or usage: 24 reports."""
    template = template or default_protocol()
    table = as_feature_table(data, workers)
    _require_contexts(table, ALL_CONTEXTS)
    reports = []
    for train, test in TABLE2_PAIRS:
        for feature_set in FEATURE_SETS:
            protocol = replace(template, train_contexts=(train,), test_context=test,
                               feature_set=feature_set, direction=None,
                               label=f"{train.value}->{test.value}")
            reports.append(run_protocol(table, protocol, workers, events))
    return reports


def run_direction_ablation(data: Union[Dataset, pd.DataFrame], template: Optional[Protocol] = None,
                           workers: int = 1,
                           events: Optional[ExperimentLogger] = None) -> Tuple[EvalReport, EvalReport]:
    """S3/S3 Touch with all swipes, then with vertical swipes only."""
    template = template or default_protocol()
    table = as_feature_table(data, workers)
    _require_contexts(table, (Context.S3,))
    base = replace(template, train_contexts=(Context.S3,), test_context=Context.S3,
                   feature_set=FeatureSet.TOUCH)
    all_swipes = run_protocol(table, replace(base, direction=None, label="S3 all swipes"), workers, events)
    vertical = run_protocol(table, replace(base, direction=DirectionClass.VERTICAL, label="S3 vertical only"),
                            workers, events)
    return all_swipes, vertical
