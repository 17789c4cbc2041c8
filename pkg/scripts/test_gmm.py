#!/usr/bin/env python3
"""
EM fitting checks for the 2-D Gaussian mixtures
"""

import sys
from pathlib import Path

import numpy as np
import pytest
from scipy.stats import multivariate_normal

# Add src to the import path
sys.path.insert(0, str(Path(__file__).parent.parent / "src"))

from swipeauth.errors import TooFewPoints
from swipeauth.model.gmm import (
    COVARIANCE_FLOOR, ExpectationMaximization, Gmm2D, fit_gmm, floor_covariance, kmeans_plus_plus, min_eigenvalues
)


def blobs(seed: int = 0, n: int = 100):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.0, 0.1, (n, 2))
    b = rng.normal(0.0, 0.1, (n, 2)) + 10.0
    return a, b


def test_single_component_is_sample_moments():
    rng = np.random.default_rng(5)
    points = rng.normal([1.0, -2.0], [0.5, 2.0], (200, 2))
    gmm = fit_gmm(points, k=1, seed=0)
    np.testing.assert_allclose(gmm.centroids[0], points.mean(axis=0), atol=1e-10)
    np.testing.assert_allclose(gmm.covariances[0], np.cov(points, rowvar=False, bias=True), atol=1e-10)
    assert gmm.weights[0] == pytest.approx(1.0)


def test_duplicated_rows_leave_single_component_unchanged():
    rng = np.random.default_rng(6)
    points = rng.random((40, 2))
    once = fit_gmm(points, k=1, seed=0)
    twice = fit_gmm(np.vstack([points, points]), k=1, seed=0)
    np.testing.assert_allclose(once.centroids, twice.centroids, atol=1e-12)
    np.testing.assert_allclose(once.covariances, twice.covariances, atol=1e-12)


def test_two_blobs_recovered():
    a, b = blobs()
    gmm = fit_gmm(np.vstack([a, b]), k=2, seed=0)
    centroids = gmm.centroids[np.argsort(gmm.centroids[:, 0])]
    assert np.all(np.abs(centroids[0] - a.mean(axis=0)) < 0.05)
    assert np.all(np.abs(centroids[1] - b.mean(axis=0)) < 0.05)
    np.testing.assert_allclose(np.sort(gmm.weights), [0.5, 0.5], atol=1e-6)


def test_log_likelihood_never_decreases():
    rng = np.random.default_rng(9)
    for run in range(50):
        k = int(rng.integers(1, 6))
        centers = rng.uniform(-5.0, 5.0, (3, 2))
        points = np.vstack([rng.normal(c, rng.uniform(0.2, 1.5), (int(rng.integers(20, 80)), 2)) for c in centers])
        em = ExpectationMaximization(k=k, seed=run)
        em.fit(points)
        trace = np.array(em.log_likelihoods)
        assert len(trace) >= 1
        assert np.all(np.diff(trace) >= -1e-9 * np.abs(trace[:-1]))


def test_fit_is_deterministic_for_a_seed():
    a, b = blobs(seed=2)
    points = np.vstack([a, b])
    first, second = fit_gmm(points, 3, seed=4), fit_gmm(points, 3, seed=4)
    np.testing.assert_array_equal(first.centroids, second.centroids)
    np.testing.assert_array_equal(first.covariances, second.covariances)


def test_too_few_points():
    with pytest.raises(TooFewPoints):
        fit_gmm(np.array([[0.0, 0.0], [1.0, 1.0]]), k=3, seed=0)


def test_identical_points_get_floored_covariance():
    points = np.tile([[0.25, 0.75]], (10, 1))
    gmm = fit_gmm(points, k=2, seed=0)
    for cov in gmm.covariances:
        assert np.all(np.linalg.eigvalsh(cov) >= COVARIANCE_FLOOR * (1 - 1e-9))
    assert np.isfinite(gmm.log_likelihood(points))


def test_floor_covariance():
    singular = np.array([[1.0, 1.0], [1.0, 1.0]])
    floored = floor_covariance(singular, 1e-3)
    assert np.linalg.eigvalsh(floored).min() == pytest.approx(1e-3)
    healthy = np.array([[2.0, 0.3], [0.3, 1.0]])
    np.testing.assert_array_equal(floor_covariance(healthy), healthy)


def test_component_density_matches_scipy():
    rng = np.random.default_rng(11)
    factors = rng.normal(0.0, 1.0, (3, 2, 2))
    covariances = factors @ factors.transpose(0, 2, 1) + 0.1 * np.eye(2)
    gmm = Gmm2D(3, rng.normal(0.0, 2.0, (3, 2)), covariances, np.array([0.2, 0.5, 0.3]))
    points = rng.normal(0.0, 2.0, (40, 2))
    expected = np.column_stack([
        np.log(gmm.weights[j]) + multivariate_normal(gmm.centroids[j], covariances[j]).logpdf(points)
        for j in range(3)
    ])
    np.testing.assert_allclose(gmm.component_log_density(points), expected, rtol=1e-10, atol=1e-10)
    np.testing.assert_allclose(min_eigenvalues(covariances),
                               [np.linalg.eigvalsh(c).min() for c in covariances], atol=1e-12)


def test_kmeans_plus_plus_picks_distinct_blobs():
    a, b = blobs(seed=3)
    centers = kmeans_plus_plus(np.vstack([a, b]), 2, np.random.default_rng(0))
    assert sorted(np.round(centers[:, 0] / 10.0).tolist()) == [0.0, 1.0]


def test_serialization_round_trip():
    a, b = blobs(seed=4)
    points = np.vstack([a, b])
    gmm = fit_gmm(points, 2, seed=1)
    again = Gmm2D.from_dict(gmm.to_dict())
    assert again.log_likelihood(points) == gmm.log_likelihood(points)
    ellipses = gmm.ellipses()
    assert len(ellipses) == 2
    assert ellipses[0]['lengths'][0] >= ellipses[0]['lengths'][1]


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v"]))
