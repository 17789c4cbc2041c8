"""
Frozen feature registry: 117 touch features followed by 94 motion features.
"""

import json
from dataclasses import dataclass, asdict
from enum import Enum
from functools import lru_cache
from typing import Dict, List, Tuple


class Channel(Enum):
    TOUCH = "Touch"
    MOTION = "Motion"


class FeatureSet(Enum):
    TOUCH = "touch"
    MOTION = "motion"
    FUSION = "fusion"

    @classmethod
    def parse(cls, value) -> 'FeatureSet':
        if isinstance(value, FeatureSet):
            return value
        return cls(str(value).strip().lower())

    @property
    def title(self) -> str:
        return self.value.capitalize()


@dataclass(frozen=True)
class FeatureId:
    index: int
    name: str
    group: str
    channel: Channel

    def to_dict(self) -> Dict:
        data = asdict(self)
        data['channel'] = self.channel.value
        return data


STATS = ('mean', 'std', 'min', 'max', 'p5', 'p25', 'p50', 'p75', 'p95')
CHECKPOINTS = (20, 35, 50, 65, 80)
MOTION_WINDOWS = ('pre', 'during', 'post')

TOUCH_GEOMETRY = (
    'start_x', 'start_y', 'end_x', 'end_y', 'delta_x', 'delta_y', 'displacement',
    'path_length', 'straightness', 'x_range', 'y_range', 'aspect_ratio',
    'deviation_max', 'deviation_mean', 'deviation_std', 'chord_area',
    'curvature_mean', 'curvature_std', 'curvature_max', 'bbox_area',
)
TOUCH_DIRECTION = (
    'angle', 'angle_sin', 'angle_cos', 'angle_first3', 'angle_last3', 'angle_change',
    'segment_angle_mean', 'segment_angle_std', 'direction_changes_x', 'direction_changes_y',
)
TOUCH_TEMPORAL = (
    'duration', 'point_count', 'interval_mean', 'interval_std', 'peak_speed_time', 'peak_pressure_time',
)
TOUCH_TRANSITION = ('pressure_delta', 'speed_delta', 'jerk_mean')

WINDOW_GROUPS: Tuple[Tuple[str, Tuple[str, ...]], ...] = (
    ('central', ('mean', 'std', 'var', 'mad', 'trimmed_mean')),
    ('extremes', ('min', 'max', 'range', 'argmin_pos', 'argmax_pos')),
    ('percentiles', ('p5', 'p10', 'p25', 'p50', 'p75', 'p90', 'p95', 'iqr')),
    ('energy', ('rms', 'mean_square', 'mean_abs_diff')),
    ('shape', ('autocorr1', 'slope', 'mean_crossing_rate', 'peak_count', 'peak_height_mean',
               'first_last_delta', 'mean_median_diff')),
)
CROSS_STATS = ('mean', 'std', 'rms', 'max', 'range')

N_TOUCH = 117
N_MOTION = 94
N_FEATURES = N_TOUCH + N_MOTION


def _entries() -> List[Tuple[str, str, Channel]]:
    entries = []

    def touch(group, names):
        entries.extend((f"touch_{n}", group, Channel.TOUCH) for n in names)

    touch('position', [f"{axis}_{s}" for axis in ('x', 'y') for s in STATS])
    touch('pressure', [f"pressure_{s}" for s in STATS])
    touch('kinematics', [f"{sig}_{s}" for sig in ('vx', 'vy', 'speed', 'acc') for s in STATS])
    touch('geometry', TOUCH_GEOMETRY)
    touch('direction', TOUCH_DIRECTION)
    touch('temporal', TOUCH_TEMPORAL)
    touch('checkpoints', [f"{sig}_at{p}" for sig in ('speed', 'pressure', 'curvature') for p in CHECKPOINTS])
    touch('transition', TOUCH_TRANSITION)

    for window in MOTION_WINDOWS:
        for group, names in WINDOW_GROUPS:
            entries.extend((f"motion_{window}_{n}", group, Channel.MOTION) for n in names)
    for ref in ('pre', 'post'):
        entries.extend((f"motion_during_minus_{ref}_{s}", 'cross_window', Channel.MOTION) for s in CROSS_STATS)
    return entries


@lru_cache(maxsize=1)
def _catalog() -> Tuple[FeatureId, ...]:
    features = tuple(FeatureId(i, name, group, channel) for i, (name, group, channel) in enumerate(_entries()))
    if len(features) != N_FEATURES or len({f.name for f in features}) != N_FEATURES:
        raise RuntimeError("Feature catalog is inconsistent")
    return features


def catalog() -> List[FeatureId]:
    return list(_catalog())


def feature_names() -> List[str]:
    return [f.name for f in _catalog()]


def feature_indices(feature_set: FeatureSet) -> List[int]:
    feature_set = FeatureSet.parse(feature_set)
    if feature_set == FeatureSet.TOUCH:
        return list(range(N_TOUCH))
    if feature_set == FeatureSet.MOTION:
        return list(range(N_TOUCH, N_FEATURES))
    return list(range(N_FEATURES))


def catalog_json() -> str:
    return json.dumps([f.to_dict() for f in _catalog()], indent=2)
