#!/usr/bin/env python3
"""
Swipe segmentation and motion window checks
"""

import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Add src to the import path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from swipeauth.data.types import TouchAction, TouchSample, touch_frame
from swipeauth.features.segment import (
    DirectionClass, Swipe, attach_motion, filter_direction, segment_swipes
)

DOWN, MOVE, UP = TouchAction.DOWN, TouchAction.MOVE, TouchAction.UP


def gesture(t0: int, n: int, dx: float = 0.0, dy: float = -20.0, step: int = 16):
    samples = []
    for i in range(n):
        action = DOWN if i == 0 else (UP if i == n - 1 else MOVE)
        samples.append(TouchSample(t0 + i * step, 500.0 + i * dx, 1500.0 + i * dy, 0.4, action))
    return samples


def test_five_point_gesture_is_a_tap():
    assert segment_swipes(touch_frame(gesture(0, 5))) == []


def test_six_point_gesture_is_a_swipe():
    swipes = segment_swipes(touch_frame(gesture(0, 6)))
    assert len(swipes) == 1
    assert swipes[0].n_points == 6
    assert swipes[0].t_start == 0 and swipes[0].t_end == 80


def test_gap_drops_gesture():
    samples = gesture(0, 8)
    late = [TouchSample(s.t + 2500, s.x, s.y, s.pressure, s.action) for s in samples[4:]]
    swipes = segment_swipes(touch_frame(samples[:4] + late))
    assert swipes == []


def test_gap_at_limit_is_kept():
    samples = gesture(0, 8)
    late = [TouchSample(s.t + 2000 - 16, s.x, s.y, s.pressure, s.action) for s in samples[4:]]
    assert len(segment_swipes(touch_frame(samples[:4] + late))) == 1


def test_unterminated_and_restarted_gestures():
    first = gesture(0, 8)[:-1]           # no Up
    second = gesture(1000, 8)
    restarted = gesture(2000, 4)[:-1] + gesture(2100, 7)
    swipes = segment_swipes(touch_frame(first + second + restarted))
    assert [s.t_start for s in swipes] == [1000, 2100]


def test_samples_round_trip_and_direction():
    vertical = Swipe.from_samples(gesture(0, 8))
    horizontal = Swipe.from_samples(gesture(0, 8, dx=25.0, dy=3.0))
    assert vertical.samples == gesture(0, 8)
    assert vertical.direction == DirectionClass.VERTICAL
    assert horizontal.direction == DirectionClass.HORIZONTAL
    assert filter_direction([vertical, horizontal], DirectionClass.VERTICAL) == [vertical]


def test_diagonal_counts_as_vertical():
    assert Swipe.from_samples(gesture(0, 6, dx=10.0, dy=10.0)).direction == DirectionClass.VERTICAL


def test_motion_window_boundaries():
    swipe = Swipe.from_samples(gesture(1000, 6))     # 1000..1080
    t = np.array([499, 500, 999, 1000, 1080, 1081, 1580, 1581], dtype=np.int64)
    accel = pd.DataFrame({'t': t, 'ax': np.zeros(8), 'ay': np.zeros(8), 'az': np.arange(8, dtype=float) + 1})
    attached = attach_motion([swipe], accel)[0]
    assert attached.mag_pre[:, 0].tolist() == [500.0, 999.0]
    assert attached.mag_during[:, 0].tolist() == [1000.0, 1080.0]
    assert attached.mag_post[:, 0].tolist() == [1081.0, 1580.0]
    assert attached.mag_during[:, 1].tolist() == [4.0, 5.0]


def test_motion_windows_can_be_empty():
    swipe = Swipe.from_samples(gesture(1000, 6))
    accel = pd.DataFrame({'t': np.array([5000], dtype=np.int64), 'ax': [0.0], 'ay': [0.0], 'az': [9.8]})
    attached = attach_motion([swipe], accel)[0]
    assert attached.mag_pre.shape == (0, 2)
    assert attached.mag_during.shape == (0, 2)
    assert attached.mag_post.shape == (0, 2)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
