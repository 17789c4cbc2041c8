#!/usr/bin/env python3
"""
Stream validation, CSV ingestion and synthetic dataset checks
"""

import sys
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Add src to the import path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from swipeauth.data.ingest import (
    ColumnMap, assemble_dataset, read_events, session_dir_name, write_dataset
)
from swipeauth.data.synthetic import (
    SynthConfig, blend, gait_amplitude, generate_synthetic, separable_config, user_styles
)
from swipeauth.data.types import (
    AccelSample, Context, SessionId, TouchAction, TouchSample, accel_magnitude, magnitude_array,
    touch_frame, validate_stream
)
from swipeauth.errors import (
    EmptyStream, InvalidConfig, LabelMissing, MissingColumn, ParseError
)


def small_config(**overrides) -> SynthConfig:
    settings = dict(n_users=3, swipes_per_session=25, rng_seed=7)
    settings.update(overrides)
    return SynthConfig(**settings)


def test_context_parse_and_properties():
    assert Context.parse("s3") == Context.S3
    assert Context.S1.usage == 'read' and Context.S4.usage == 'map'
    assert Context.S2.activity == 'walk' and Context.S3.activity == 'sit'
    with pytest.raises(ValueError):
        Context.parse("S9")


def test_session_index_range():
    with pytest.raises(ValueError):
        SessionId("u1", 5, Context.S1)


def test_validate_stream_sorts_and_collapses_duplicates():
    samples = [
        TouchSample(30, 3.0, 3.0, 0.5, TouchAction.UP),
        TouchSample(10, 1.0, 1.0, 0.5, TouchAction.DOWN),
        TouchSample(20, 2.0, 2.0, 0.5, TouchAction.MOVE),
        TouchSample(20, 9.0, 9.0, 0.5, TouchAction.MOVE),
    ]
    result = validate_stream(samples)
    assert [s.t for s in result] == [10, 20, 30]
    # stable sort keeps the first sample of a duplicated timestamp
    assert result[1].x == 2.0

    frame = validate_stream(touch_frame(samples))
    assert frame['t'].tolist() == [10, 20, 30]
    assert frame['x'].tolist() == [1.0, 2.0, 3.0]


def test_validate_stream_empty():
    with pytest.raises(EmptyStream):
        validate_stream([])


def test_negative_pressure_rejected():
    with pytest.raises(ValueError):
        TouchSample(0, 0.0, 0.0, -0.1, TouchAction.DOWN)


def test_accel_magnitude_examples():
    assert accel_magnitude(AccelSample(0, 3.0, 4.0, 0.0)) == 5.0
    assert accel_magnitude(AccelSample(0, 0.0, 0.0, 0.0)) == 0.0
    assert accel_magnitude(AccelSample(0, 1.0, 2.0, 2.0)) == 3.0


def test_assemble_empty_root(tmp_path):
    dataset = assemble_dataset(tmp_path)
    assert dataset.users == []


def test_magnitude_matches_scalar():
    s = AccelSample(0, 0.3, -5.9, 7.8)
    vector = magnitude_array(np.array([0.3]), np.array([-5.9]), np.array([7.8]))
    assert vector[0] == accel_magnitude(s)


def test_read_events_with_header(tmp_path):
    path = tmp_path / "touch.csv"
    path.write_text("t,x,y,pressure,action\n20,2,2,0.5,2\n10,1,1,0.5,0\n30,3,3,0.5,1\n")
    frame = read_events(path, ColumnMap.default())
    assert frame['t'].tolist() == [10, 20, 30]
    assert frame['action'].tolist() == [0, 2, 1]


def test_read_events_headerless_with_pointer_filter(tmp_path):
    column_map = ColumnMap.from_dict({
        'touch': {'t': 0, 'pointer_id': 1, 'action': 2, 'x': 3, 'y': 4, 'pressure': 5},
        'accel': {'t': 0, 'ax': 1, 'ay': 2, 'az': 3},
        'timestamp_unit': 'ns',
        'has_header': False,
        'action_codes': {'5': 'Down', '6': 'Up', '7': 'Move'},
    })
    path = tmp_path / "touch.csv"
    path.write_text(
        "10000000,0,5,1,1,0.5\n"
        "20000000,1,7,8,8,0.5\n"
        "20000000,0,7,2,2,0.5\n"
        "30000000,0,6,3,3,0.5\n"
        "40000000,0,9,4,4,0.5\n"
    )
    frame = read_events(path, column_map, 'touch')
    assert frame['t'].tolist() == [10, 20, 30]
    assert frame['x'].tolist() == [1.0, 2.0, 3.0]
    assert frame['action'].tolist() == [TouchAction.DOWN.value, TouchAction.MOVE.value, TouchAction.UP.value]


def test_read_events_errors(tmp_path):
    missing = tmp_path / "touch.csv"
    missing.write_text("t,x,y,action\n10,1,1,0\n")
    with pytest.raises(MissingColumn):
        read_events(missing, ColumnMap.default())

    bad = tmp_path / "accel.csv"
    bad.write_text("t,ax,ay,az\n10,0.1,0.2,0.3\n20,0.1,oops,0.3\n")
    with pytest.raises(ParseError) as info:
        read_events(bad, ColumnMap.default())
    assert info.value.row == 1

    empty = tmp_path / "empty" / "accel.csv"
    empty.parent.mkdir()
    empty.write_text("t,ax,ay,az\n")
    with pytest.raises(EmptyStream):
        read_events(empty, ColumnMap.default())


def test_column_map_rejects_bad_config():
    with pytest.raises(InvalidConfig):
        ColumnMap.from_dict({'touch': {'t': 't'}, 'accel': {'t': 't', 'ax': 'a', 'ay': 'b', 'az': 'c'}})
    with pytest.raises(InvalidConfig):
        ColumnMap.from_dict({'touch': {f: f for f in ('t', 'x', 'y', 'pressure', 'action')},
                             'accel': {'t': 't', 'ax': 'a', 'ay': 'b', 'az': 'c'},
                             'timestamp_unit': 'minutes'})


def test_hmog_column_map_loads():
    column_map = ColumnMap.from_json(Path(__file__).parent.parent / "config" / "hmog.map.json")
    assert column_map.has_header is False
    assert column_map.touch['pointer_id'] == 4


def test_synthetic_is_deterministic():
    a = generate_synthetic(small_config())
    b = generate_synthetic(small_config())
    assert a.user_ids == b.user_ids == ['user001', 'user002', 'user003']
    assert a.n_sessions == 3 * 4 * 4
    for ra, rb in zip(a.sessions(), b.sessions()):
        assert ra.session == rb.session
        pd.testing.assert_frame_equal(ra.touch, rb.touch)
        pd.testing.assert_frame_equal(ra.accel, rb.accel)


def test_synthetic_seed_changes_data():
    a = generate_synthetic(small_config())
    b = generate_synthetic(small_config(rng_seed=8))
    assert not a.sessions()[0].touch.equals(b.sessions()[0].touch)


def test_synthetic_config_validation():
    with pytest.raises(InvalidConfig):
        generate_synthetic(small_config(n_users=1))
    with pytest.raises(InvalidConfig):
        generate_synthetic(small_config(swipes_per_session=10))


def test_write_then_assemble(tmp_path):
    dataset = generate_synthetic(small_config(contexts=(Context.S1, Context.S3), sessions_per_context=2))
    write_dataset(dataset, tmp_path / "data")
    loaded = assemble_dataset(tmp_path / "data", workers=2)

    assert loaded.user_ids == dataset.user_ids
    assert loaded.contexts() == [Context.S1, Context.S3]
    for original, record in zip(dataset.sessions(), loaded.sessions()):
        assert original.session == record.session
        np.testing.assert_array_equal(original.touch.to_numpy(), record.touch.to_numpy())
        np.testing.assert_array_equal(original.accel.to_numpy(), record.accel.to_numpy())


def test_assemble_requires_labels(tmp_path):
    dataset = generate_synthetic(small_config(contexts=(Context.S1,), sessions_per_context=1))
    root = write_dataset(dataset, tmp_path / "data")
    labels = pd.read_csv(root / "labels.csv", dtype=str)
    labels.iloc[1:].to_csv(root / "labels.csv", index=False)
    with pytest.raises(LabelMissing):
        assemble_dataset(root)


def test_unusable_session_is_skipped(tmp_path):
    dataset = generate_synthetic(small_config(contexts=(Context.S1,), sessions_per_context=2))
    root = write_dataset(dataset, tmp_path / "data")
    first = dataset.sessions()[0].session
    (root / first.user / session_dir_name(first) / "accel.csv").write_text("t,ax,ay,az\n")
    loaded = assemble_dataset(root)
    assert loaded.n_sessions == dataset.n_sessions - 1
    assert len(loaded.warnings) == 1


def test_synth_config_round_trips_through_json():
    cfg = small_config()
    payload = json.loads(json.dumps(cfg.to_dict()))
    assert payload['contexts'] == ['S1', 'S2', 'S3', 'S4']
    assert payload['horizontal_identity'] == 0.6
    assert payload['walk_touch_identity'] == 0.5
    assert payload['sit_motion_identity'] == 0.0


def test_identity_knobs_are_validated():
    for name in ('horizontal_identity', 'walk_touch_identity', 'sit_motion_identity'):
        with pytest.raises(InvalidConfig):
            generate_synthetic(small_config(**{name: 1.5}))
        with pytest.raises(InvalidConfig):
            generate_synthetic(small_config(**{name: -0.1}))
    with pytest.raises(InvalidConfig):
        generate_synthetic(small_config(walk_anchor_jitter=-1.0))
    with pytest.raises(InvalidConfig):
        generate_synthetic(small_config(walk_touch_noise=-0.1))


def test_blend_endpoints():
    assert blend(4.0, 9.0, 1.0) == 9.0
    assert blend(4.0, 9.0, 0.0) == 4.0
    assert blend(4.0, 9.0, 0.5) == pytest.approx(6.0)


def test_separable_config_keeps_full_identity():
    cfg = separable_config()
    assert cfg.horizontal_identity == 1.0
    assert cfg.walk_touch_identity == 1.0
    assert cfg.sit_motion_identity == 1.0
    assert cfg.context_shift == 0.0


def test_gait_amplitude_centres_on_walk_noise():
    cfg = SynthConfig(n_users=20, context_shift=0.0, rng_seed=5)
    styles = user_styles(cfg)
    assert sorted(styles) == [f"user{u:03d}" for u in range(1, 21)]
    amplitudes = np.array([gait_amplitude(cfg, style, Context.S2) for style in styles.values()])
    assert np.all(amplitudes > 0)
    assert float(np.exp(np.mean(np.log(amplitudes)))) == pytest.approx(cfg.walk_noise, rel=1e-12)
    assert len(set(amplitudes.round(12))) == 20
    for style in styles.values():
        assert gait_amplitude(cfg, style, Context.S1) == 0.0
        assert gait_amplitude(cfg, style, Context.S3) == 0.0
        assert gait_amplitude(cfg, style, Context.S4) == gait_amplitude(cfg, style, Context.S2)


def test_user_styles_match_generated_users():
    cfg = small_config()
    assert sorted(user_styles(cfg)) == generate_synthetic(cfg).user_ids


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
