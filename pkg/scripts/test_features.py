#!/usr/bin/env python3
"""
Feature catalog and extractor checks against the golden fixtures
"""

import sys
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Add src to the import path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))
sys.path.insert(0, str(Path(__file__).parent))

import feature_oracle
from swipeauth.features.catalog import (
    N_FEATURES, N_MOTION, N_TOUCH, FeatureSet, catalog, catalog_json, feature_indices, feature_names
)
from swipeauth.features.extractor import (
    SwipeFeatures, extract, extract_motion, extract_touch, read_feature_table, wrap_degrees,
    write_feature_table, extract_table
)
from swipeauth.features.segment import Swipe, attach_motion

ROOT = Path(__file__).parent.parent
FIXTURES = Path(__file__).parent / "fixtures"


def load_golden(shift: int = 0):
    """Golden swipe with motion attached; `shift` moves touch and accel timestamps together."""
    with open(FIXTURES / "golden_swipe_01.json") as f:
        points = json.load(f)['points']
    with open(FIXTURES / "golden_accel_01.json") as f:
        accel = json.load(f)['samples']
    swipe = Swipe(
        session=None,
        t=np.array([p[0] for p in points], dtype=np.int64) + shift,
        x=np.array([p[1] for p in points], dtype=float),
        y=np.array([p[2] for p in points], dtype=float),
        pressure=np.array([p[3] for p in points], dtype=float),
        action=np.array([p[4] for p in points], dtype=np.int64),
    )
    frame = pd.DataFrame(accel, columns=['t', 'ax', 'ay', 'az'])
    frame['t'] = frame['t'].astype(np.int64) + shift
    return attach_motion([swipe], frame)[0], points, accel


def load_expected():
    with open(FIXTURES / "golden_swipe_01.json") as f:
        touch = json.load(f)['expected_touch']
    with open(FIXTURES / "golden_accel_01.json") as f:
        motion = json.load(f)['expected_motion']
    return np.array(touch, dtype=float), np.array(motion, dtype=float)


def straight_swipe(vertical: bool = True, pressure: float = 0.5) -> Swipe:
    t = np.arange(0, 110, 10, dtype=np.int64)
    along = 1000.0 + 2.0 * t
    fixed = np.full(len(t), 500.0)
    x, y = (fixed, along) if vertical else (along, fixed)
    action = np.full(len(t), 2, dtype=np.int64)
    action[0], action[-1] = 0, 1
    return Swipe(None, t, x, y, np.full(len(t), pressure), action)


def test_catalog_counts():
    names = feature_names()
    assert len(names) == N_FEATURES == 211
    assert N_TOUCH == 117 and N_MOTION == 94
    assert len(set(names)) == len(names)
    assert len(feature_indices(FeatureSet.TOUCH)) == 117
    assert len(feature_indices(FeatureSet.MOTION)) == 94
    assert feature_indices(FeatureSet.FUSION) == list(range(211))
    assert [f.index for f in catalog()] == list(range(211))


def test_catalog_matches_registry():
    with open(ROOT / "REGISTRY.json") as f:
        registry = json.load(f)
    assert json.loads(catalog_json()) == registry


def test_golden_swipe_matches_oracle():
    swipe, points, accel = load_golden()
    expected_touch = feature_oracle.touch_features([(p[0], p[1], p[2], p[3]) for p in points])
    expected_motion = feature_oracle.motion_features([tuple(a) for a in accel], points[0][0], points[-1][0])

    values = extract(swipe).values
    assert len(values) == 211
    np.testing.assert_allclose(values[:N_TOUCH], expected_touch, rtol=1e-9, atol=1e-9)


def test_golden_swipe_matches_frozen_vectors():
    swipe, _, _ = load_golden()
    expected_touch, expected_motion = load_expected()
    assert len(expected_touch) == N_TOUCH and len(expected_motion) == N_MOTION
    values = extract(swipe).values
    np.testing.assert_allclose(values[:N_TOUCH], expected_touch, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(values[N_TOUCH:], expected_motion, rtol=1e-9, atol=1e-12)
    np.testing.assert_allclose(values[N_TOUCH:], expected_motion, rtol=1e-9, atol=1e-9)


def test_golden_windows_partition_accel():
    swipe, points, _ = load_golden()
    assert len(swipe.mag_pre) == 50       # 500..990
    assert len(swipe.mag_during) == 19    # 1000..1180
    assert len(swipe.mag_post) == 50      # 1190..1680
    assert swipe.mag_pre[-1, 0] < points[0][0] <= swipe.mag_during[0, 0]


def test_time_shift_leaves_features_unchanged():
    swipe, _, _ = load_golden()
    shifted, _, _ = load_golden(shift=5000)
    assert shifted.mag_during.shape == swipe.mag_during.shape
    np.testing.assert_allclose(extract(shifted).values, extract(swipe).values, rtol=1e-12, atol=1e-12)


def test_straight_vertical_swipe_closed_form():
    names = feature_names()
    values = extract_touch(straight_swipe(vertical=True, pressure=0.5))
    assert values[names.index('touch_straightness')] == 1.0
    assert values[names.index('touch_speed_mean')] == 2.0
    assert values[names.index('touch_speed_std')] == 0.0
    assert values[names.index('touch_pressure_mean')] == 0.5
    assert values[names.index('touch_angle')] == pytest.approx(90.0)
    assert values[names.index('touch_path_length')] == 200.0

    swapped = extract_touch(straight_swipe(vertical=False, pressure=0.5))
    assert swapped[names.index('touch_angle')] == 0.0
    for name in ('touch_path_length', 'touch_displacement', 'touch_straightness', 'touch_speed_mean',
                 'touch_speed_std', 'touch_pressure_mean', 'touch_duration'):
        assert swapped[names.index(name)] == values[names.index(name)], name


def test_spatial_shift_moves_only_position_features():
    swipe, _, _ = load_golden()
    moved = Swipe(None, swipe.t, swipe.x + 100.0, swipe.y - 50.0, swipe.pressure, swipe.action)
    base, other = extract_touch(swipe), extract_touch(moved)
    absolute = {'touch_start_x', 'touch_start_y', 'touch_end_x', 'touch_end_y'}
    for f in catalog()[:N_TOUCH]:
        if f.group != 'position' and f.name not in absolute:
            assert other[f.index] == pytest.approx(base[f.index], rel=1e-9, abs=1e-9), f.name


def test_empty_motion_windows_are_zero():
    swipe, _, _ = load_golden()
    bare = Swipe(None, swipe.t, swipe.x, swipe.y, swipe.pressure, swipe.action)
    motion = extract_motion(bare)
    assert len(motion) == N_MOTION
    assert np.all(motion == 0.0)


def test_constant_window():
    window = np.column_stack([np.arange(0, 100, 10, dtype=float), np.full(10, 9.81)])
    f = SwipeFeatures.window_features(window)
    assert f[0] == 9.81
    assert f[1] == 0.0 and f[2] == 0.0
    assert f[19] == pytest.approx(9.81 ** 2)
    assert f[20] == 0.0
    assert f[21] == 0.0  # autocorrelation undefined, reported as 0


def test_derivative_and_wrap():
    t = np.array([0.0, 10.0, 20.0, 40.0])
    v = np.array([0.0, 1.0, 3.0, 7.0])
    np.testing.assert_allclose(SwipeFeatures.derivative(v, t), [0.1, 0.15, 0.2, 0.2])
    assert wrap_degrees(180.0) == 180.0
    assert wrap_degrees(-180.0) == 180.0
    assert wrap_degrees(270.0) == -90.0


def test_feature_table_round_trip(tmp_path):
    swipe, _, _ = load_golden()
    table = extract_table([swipe])
    path = write_feature_table(table, tmp_path / "features.csv")
    loaded = read_feature_table(path)
    np.testing.assert_allclose(loaded[feature_names()].to_numpy(dtype=float),
                               table[feature_names()].to_numpy(dtype=float), rtol=1e-12)


def test_read_feature_table_rejects_missing_columns(tmp_path):
    path = tmp_path / "broken.csv"
    pd.DataFrame({'user': ['a']}).to_csv(path, index=False)
    with pytest.raises(ValueError):
        read_feature_table(path)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
