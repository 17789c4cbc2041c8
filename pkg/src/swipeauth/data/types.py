import math
import logging
from enum import Enum
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np
import pandas as pd

from ..errors import EmptyStream


logger = logging.getLogger(__name__)

TOUCH_COLUMNS = ['t', 'x', 'y', 'pressure', 'action']
ACCEL_COLUMNS = ['t', 'ax', 'ay', 'az']


class TouchAction(Enum):
    # Android MotionEvent codes
    DOWN = 0
    UP = 1
    MOVE = 2


class Context(Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"

    @property
    def usage(self) -> str:
        return 'read' if self in (Context.S1, Context.S2) else 'map'

    @property
    def activity(self) -> str:
        return 'sit' if self in (Context.S1, Context.S3) else 'walk'

    @property
    def description(self) -> str:
        return f"{self.usage} & {self.activity}"

    @classmethod
    def parse(cls, value: Union[str, 'Context']) -> 'Context':
        if isinstance(value, Context):
            return value
        try:
            return cls(str(value).strip().upper()[:2])
        except ValueError:
            raise ValueError(f"Unknown context label: {value!r} (expected S1..S4)")


ALL_CONTEXTS = (Context.S1, Context.S2, Context.S3, Context.S4)


@dataclass(frozen=True)
class TouchSample:
    t: int  # ms
    x: float
    y: float
    pressure: float
    action: TouchAction

    def __post_init__(self):
        if self.pressure < 0:
            raise ValueError(f"Negative pressure {self.pressure} at t={self.t}")


@dataclass(frozen=True)
class AccelSample:
    t: int  # ms
    ax: float
    ay: float
    az: float


@dataclass(frozen=True)
class SessionId:
    user: str
    session_index: int
    context: Context

    def __post_init__(self):
        if self.session_index not in (1, 2, 3, 4):
            raise ValueError(f"session_index must be in 1..4, got {self.session_index}")

    @property
    def key(self):
        return (self.user, self.context.value, self.session_index)


def accel_magnitude(s: AccelSample) -> float:
    return math.sqrt(s.ax * s.ax + s.ay * s.ay + s.az * s.az)


def magnitude_array(ax: np.ndarray, ay: np.ndarray, az: np.ndarray) -> np.ndarray:
    """Vectorized accel_magnitude; same operation order, so results are identical."""
    return np.sqrt(ax * ax + ay * ay + az * az)


def touch_frame(samples: Sequence[TouchSample]) -> pd.DataFrame:
    return pd.DataFrame({
        't': np.array([s.t for s in samples], dtype=np.int64),
        'x': np.array([s.x for s in samples], dtype=float),
        'y': np.array([s.y for s in samples], dtype=float),
        'pressure': np.array([s.pressure for s in samples], dtype=float),
        'action': np.array([s.action.value for s in samples], dtype=np.int64),
    }, columns=TOUCH_COLUMNS)


def _validate_frame(frame: pd.DataFrame) -> pd.DataFrame:
    if 'action' in frame.columns:
        valid_codes = [a.value for a in TouchAction]
        keep = frame['action'].isin(valid_codes) & (frame['pressure'] >= 0)
        dropped = int((~keep).sum())
        if dropped:
            logger.debug(f"Dropped {dropped} touch rows with unsupported action or negative pressure")
        frame = frame[keep]

    frame = frame.astype({'t': np.int64})
    frame = frame.sort_values('t', kind='mergesort')
    frame = frame.drop_duplicates('t', keep='first')
    return frame.reset_index(drop=True)


def validate_stream(samples):
    """
    Sort stably by timestamp and collapse duplicate timestamps (keep first).

    Accepts a list of TouchSample/AccelSample or a stream DataFrame and returns
    the same kind. Touch rows with actions outside Down/Move/Up are dropped.
    """
    if len(samples) == 0:
        raise EmptyStream("Stream has zero samples")

    if isinstance(samples, pd.DataFrame):
        frame = _validate_frame(samples)
        if frame.empty:
            raise EmptyStream("Stream has no valid samples")
        return frame

    ordered = sorted(samples, key=lambda s: s.t)
    result = []
    last_t = None
    for sample in ordered:
        if isinstance(sample, TouchSample) and not isinstance(sample.action, TouchAction):
            continue
        if sample.t == last_t:
            continue
        result.append(sample)
        last_t = sample.t

    if not result:
        raise EmptyStream("Stream has no valid samples")
    return result
