#!/usr/bin/env python3
"""
PCA projection and per-group mixture export checks
"""

import sys
import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

# Add src to the import path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from swipeauth.errors import DegenerateData
from swipeauth.evaluation.pca import export_pca_gmm, pca_project


def power_iteration(cov: np.ndarray, iterations: int = 2000) -> np.ndarray:
    v = np.ones(cov.shape[0]) / np.sqrt(cov.shape[0])
    for _ in range(iterations):
        v = cov @ v
        v = v / np.linalg.norm(v)
    return v


def test_points_on_a_line():
    t = np.linspace(-3.0, 5.0, 40)
    matrix = np.column_stack([t, 2.0 * t, np.full_like(t, 7.0)])
    projection = pca_project(matrix)
    expected = np.array([1.0, 2.0, 0.0]) / np.sqrt(5.0)
    np.testing.assert_allclose(projection.components[0], expected, atol=1e-10)
    assert projection.explained_ratio[0] == pytest.approx(1.0)
    assert projection.explained_ratio[1] == pytest.approx(0.0, abs=1e-12)


def test_variance_identity():
    rng = np.random.default_rng(4)
    matrix = rng.normal(0.0, 1.0, (200, 6)) @ rng.normal(0.0, 1.0, (6, 6))
    projection = pca_project(matrix)
    np.testing.assert_allclose(np.var(projection.scores, axis=0, ddof=1), projection.eigenvalues, rtol=1e-9)
    total = np.trace(np.cov(matrix, rowvar=False))
    np.testing.assert_allclose(projection.explained_ratio, projection.eigenvalues / total, rtol=1e-9)


def test_leading_axis_matches_power_iteration():
    rng = np.random.default_rng(12)
    matrix = rng.normal(0.0, [5.0, 2.0, 1.0, 0.5], (300, 4))
    projection = pca_project(matrix)
    v = power_iteration(np.cov(matrix, rowvar=False))
    v = v if v[np.flatnonzero(np.abs(v) > 1e-12)[0]] > 0 else -v
    np.testing.assert_allclose(projection.components[0], v, atol=1e-8)


def test_translation_leaves_scores_unchanged():
    rng = np.random.default_rng(13)
    matrix = rng.normal(0.0, 1.0, (50, 5)) * [3.0, 2.0, 1.0, 1.0, 0.5]
    a = pca_project(matrix)
    b = pca_project(matrix + 1000.0)
    np.testing.assert_allclose(a.scores, b.scores, atol=1e-8)


def test_sign_convention():
    rng = np.random.default_rng(14)
    projection = pca_project(rng.normal(0.0, 1.0, (80, 4)))
    for row in projection.components:
        assert row[np.flatnonzero(np.abs(row) > 1e-12)[0]] > 0


def test_degenerate_inputs():
    with pytest.raises(DegenerateData):
        pca_project(np.ones((10, 3)))
    with pytest.raises(DegenerateData):
        pca_project(np.array([[1.0, 2.0, 3.0]]))
    with pytest.raises(ValueError):
        pca_project(np.ones((10, 1)))


def test_export_writes_json_and_scatter(tmp_path):
    rng = np.random.default_rng(15)
    matrix = np.vstack([rng.normal(0.0, 1.0, (40, 6)), rng.normal(4.0, 1.0, (40, 6))])
    groups = ['S1'] * 40 + ['S3'] * 40
    path = tmp_path / "pca" / "plot.json"
    payload = export_pca_gmm(matrix, groups, k=3, seed=0, path=path)

    assert [g['group'] for g in payload['groups']] == ['S1', 'S3']
    assert all(len(g['components']) == 3 for g in payload['groups'])
    with open(path) as f:
        assert json.load(f) == json.loads(json.dumps(payload))
    scatter = pd.read_csv(path.with_suffix('.csv'))
    assert list(scatter.columns) == ['group', 'pc1', 'pc2']
    assert len(scatter) == 80


def test_export_small_group_uses_fewer_components():
    rng = np.random.default_rng(16)
    matrix = rng.normal(0.0, 1.0, (12, 4))
    payload = export_pca_gmm(matrix, ['a'] * 10 + ['b'] * 2, k=3)
    sizes = {g['group']: len(g['components']) for g in payload['groups']}
    assert sizes == {'a': 3, 'b': 2}
    with pytest.raises(ValueError):
        export_pca_gmm(matrix, ['a'] * 5, k=3)


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
