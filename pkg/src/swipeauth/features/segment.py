import logging
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import List, Optional, Sequence

import numpy as np
import pandas as pd

from ..data.types import SessionId, TouchAction, TouchSample, magnitude_array


logger = logging.getLogger(__name__)

MIN_SWIPE_POINTS = 6
MAX_GAP_MS = 2000
MOTION_WINDOW_MS = 500


def _empty_window() -> np.ndarray:
    return np.empty((0, 2))


class DirectionClass(Enum):
    VERTICAL = "vertical"
    HORIZONTAL = "horizontal"


@dataclass(frozen=True, eq=False)
class Swipe:
    session: Optional[SessionId]
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    pressure: np.ndarray
    action: np.ndarray
    # (n, 2) arrays of (t, magnitude)
    mag_pre: np.ndarray = field(default_factory=_empty_window)
    mag_during: np.ndarray = field(default_factory=_empty_window)
    mag_post: np.ndarray = field(default_factory=_empty_window)

    @property
    def t_start(self) -> int:
        return int(self.t[0])

    @property
    def t_end(self) -> int:
        return int(self.t[-1])

    @property
    def n_points(self) -> int:
        return len(self.t)

    @property
    def direction(self) -> DirectionClass:
        dx = abs(float(self.x[-1] - self.x[0]))
        dy = abs(float(self.y[-1] - self.y[0]))
        return DirectionClass.VERTICAL if dy >= dx else DirectionClass.HORIZONTAL

    @property
    def samples(self) -> List[TouchSample]:
        return [TouchSample(int(t), float(x), float(y), float(p), TouchAction(int(a)))
                for t, x, y, p, a in zip(self.t, self.x, self.y, self.pressure, self.action)]

    @classmethod
    def from_samples(cls, samples: Sequence[TouchSample], session: Optional[SessionId] = None) -> 'Swipe':
        return cls(
            session=session,
            t=np.array([s.t for s in samples], dtype=np.int64),
            x=np.array([s.x for s in samples], dtype=float),
            y=np.array([s.y for s in samples], dtype=float),
            pressure=np.array([s.pressure for s in samples], dtype=float),
            action=np.array([s.action.value for s in samples], dtype=np.int64),
        )

    def to_dict(self) -> dict:
        return {
            'user': self.session.user if self.session else None,
            'session_index': self.session.session_index if self.session else None,
            'context': self.session.context.value if self.session else None,
            't_start': self.t_start,
            't_end': self.t_end,
            'direction': self.direction.value,
            'points': [[int(t), float(x), float(y), float(p)]
                       for t, x, y, p in zip(self.t, self.x, self.y, self.pressure)],
            'mag_pre': self.mag_pre.tolist(),
            'mag_during': self.mag_during.tolist(),
            'mag_post': self.mag_post.tolist(),
        }


def segment_swipes(touch: pd.DataFrame, session: Optional[SessionId] = None,
                   min_points: int = MIN_SWIPE_POINTS, max_gap_ms: int = MAX_GAP_MS) -> List[Swipe]:
    """
    Cut a validated touch stream into Down..Up gestures with at least min_points samples.

    A gesture interrupted by a sample gap above max_gap_ms, by a new Down, or by the
    end of the stream has no proper framing and is dropped.
    """
    t = touch['t'].to_numpy(dtype=np.int64)
    x = touch['x'].to_numpy(dtype=float)
    y = touch['y'].to_numpy(dtype=float)
    pressure = touch['pressure'].to_numpy(dtype=float)
    action = touch['action'].to_numpy(dtype=np.int64)

    down, up = TouchAction.DOWN.value, TouchAction.UP.value
    swipes: List[Swipe] = []
    start = None
    taps = 0
    for i in range(len(t)):
        if start is not None and t[i] - t[i - 1] > max_gap_ms:
            start = None
        if action[i] == down:
            start = i
        elif action[i] == up and start is not None:
            end = i + 1
            if end - start >= min_points:
                sl = slice(start, end)
                swipes.append(Swipe(session, t[sl].copy(), x[sl].copy(), y[sl].copy(),
                                    pressure[sl].copy(), action[sl].copy()))
            else:
                taps += 1
            start = None

    if taps:
        logger.debug(f"Discarded {taps} gestures with fewer than {min_points} points")
    return swipes


def attach_motion(swipes: Sequence[Swipe], accel: pd.DataFrame,
                  window_ms: int = MOTION_WINDOW_MS) -> List[Swipe]:
    """Attach pre [s-w, s), during [s, e] and post (e, e+w] magnitude windows."""
    t = accel['t'].to_numpy(dtype=np.int64)
    magnitude = magnitude_array(accel['ax'].to_numpy(dtype=float),
                                accel['ay'].to_numpy(dtype=float),
                                accel['az'].to_numpy(dtype=float))
    series = np.column_stack([t.astype(float), magnitude]) if len(t) else np.empty((0, 2))

    result = []
    for swipe in swipes:
        s, e = swipe.t_start, swipe.t_end
        a = np.searchsorted(t, s - window_ms, side='left')
        b = np.searchsorted(t, s, side='left')
        c = np.searchsorted(t, e, side='right')
        d = np.searchsorted(t, e + window_ms, side='right')
        result.append(replace(swipe, mag_pre=series[a:b], mag_during=series[b:c], mag_post=series[c:d]))
    return result


def filter_direction(swipes: Sequence[Swipe], keep: DirectionClass) -> List[Swipe]:
    return [s for s in swipes if s.direction == keep]
