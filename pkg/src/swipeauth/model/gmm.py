"""
Two-dimensional Gaussian mixtures fitted by expectation maximization.

Seeding is k-means++ from an explicit seed. Covariances are full and their
eigenvalues are clipped at a floor after every M-step; clipping is the exact
maximizer of the constrained covariance update, so the log-likelihood trace
never decreases.

Several mixtures over point sets of equal size can be fitted as one stack
(`fit_gmm_stack`); every fit runs its own iteration count and stopping test.
"""

import logging
from dataclasses import dataclass, field
from typing import Dict, List, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from ..errors import TooFewPoints


logger = logging.getLogger(__name__)

COVARIANCE_FLOOR = 1e-6
EM_TOL = 1e-6
EM_MAX_ITER = 100
EMPTY_COMPONENT = 1e-12
LOG_2PI = float(np.log(2.0 * np.pi))


def floor_covariance(cov: np.ndarray, floor: float = COVARIANCE_FLOOR) -> np.ndarray:
    sym = 0.5 * (cov + cov.T)
    eigvals, eigvecs = np.linalg.eigh(sym)
    if np.all(eigvals >= floor):
        return sym
    eigvals = np.maximum(eigvals, floor)
    out = (eigvecs * eigvals) @ eigvecs.T
    return 0.5 * (out + out.T)


def min_eigenvalues(covariances: np.ndarray) -> np.ndarray:
    """Smaller eigenvalue of every symmetric 2x2 matrix in a (..., 2, 2) stack."""
    a, b, d = covariances[..., 0, 0], covariances[..., 0, 1], covariances[..., 1, 1]
    return 0.5 * (a + d) - np.sqrt((0.5 * (a - d)) ** 2 + b * b)


def _log_density(points: np.ndarray, centroids: np.ndarray, covariances: np.ndarray,
                 weights: np.ndarray) -> np.ndarray:
    """(p, n, k) log(w_j) + log N(x | mu_j, S_j) for p stacked mixtures."""
    a, b = covariances[..., 0, 0][:, None, :], covariances[..., 0, 1][:, None, :]
    c, d = covariances[..., 1, 0][:, None, :], covariances[..., 1, 1][:, None, :]
    det = a * d - b * c
    diff = points[:, :, None, :] - centroids[:, None, :, :]
    dx, dy = diff[..., 0], diff[..., 1]
    maha = (d * dx * dx - (b + c) * dx * dy + a * dy * dy) / det
    with np.errstate(divide='ignore'):
        log_w = np.log(weights)[:, None, :]
    return log_w - LOG_2PI - 0.5 * np.log(det) - 0.5 * maha


@dataclass(frozen=True, eq=False)
class Gmm2D:
    k: int
    centroids: np.ndarray
    covariances: np.ndarray
    weights: np.ndarray

    def component_log_density(self, points: np.ndarray) -> np.ndarray:
        """(n, k) matrix of log(w_j) + log N(x | mu_j, S_j)."""
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        return _log_density(points[None], self.centroids[None], self.covariances[None], self.weights[None])[0]

    def log_likelihood(self, points: np.ndarray) -> float:
        return float(np.sum(logsumexp(self.component_log_density(points), axis=1)))

    def ellipses(self) -> List[Dict]:
        """Principal axes and one-sigma lengths of each component."""
        result = []
        for j in range(self.k):
            eigvals, eigvecs = np.linalg.eigh(self.covariances[j])
            order = np.argsort(eigvals)[::-1]
            result.append({
                'centroid': self.centroids[j].tolist(),
                'axes': eigvecs[:, order].T.tolist(),
                'lengths': np.sqrt(np.maximum(eigvals[order], 0.0)).tolist(),
                'weight': float(self.weights[j]),
            })
        return result

    def to_dict(self) -> Dict:
        return {
            'k': self.k,
            'weights': self.weights.tolist(),
            'centroids': self.centroids.tolist(),
            'covariances': self.covariances.tolist(),
        }

    @classmethod
    def from_dict(cls, data: Dict) -> 'Gmm2D':
        return cls(
            k=int(data['k']),
            centroids=np.array(data['centroids'], dtype=float).reshape(-1, 2),
            covariances=np.array(data['covariances'], dtype=float).reshape(-1, 2, 2),
            weights=np.array(data['weights'], dtype=float),
        )


def kmeans_plus_plus(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = len(points)
    centers = [points[int(rng.integers(n))]]
    closest = np.sum((points - centers[0]) ** 2, axis=1)
    for _ in range(1, k):
        total = float(np.sum(closest))
        if total > 0:
            idx = int(rng.choice(n, p=closest / total))
        else:
            idx = int(rng.integers(n))
        centers.append(points[idx])
        closest = np.minimum(closest, np.sum((points - points[idx]) ** 2, axis=1))
    return np.array(centers, dtype=float)


@dataclass
class StackFit:
    """Outcome of one fit inside a stack."""
    model: Gmm2D
    log_likelihoods: List[float]
    n_iter: int
    converged: bool


@dataclass
class ExpectationMaximization:
    k: int
    seed: int = 0
    tol: float = EM_TOL
    max_iter: int = EM_MAX_ITER
    floor: float = COVARIANCE_FLOOR
    log_likelihoods: List[float] = field(default_factory=list)
    n_iter: int = 0
    converged: bool = False

    def _initialize(self, stack: np.ndarray, seeds: Sequence[int]) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        centroids, covariances = [], []
        for points, seed in zip(stack, seeds):
            centroids.append(kmeans_plus_plus(points, self.k, np.random.default_rng(seed)))
            pooled = floor_covariance(np.cov(points, rowvar=False, bias=True).reshape(2, 2), self.floor)
            covariances.append(np.repeat(pooled[None, :, :], self.k, axis=0))
        weights = np.full((len(stack), self.k), 1.0 / self.k)
        return np.array(centroids), np.array(covariances), weights

    @staticmethod
    def _e_step(points, centroids, covariances, weights) -> Tuple[np.ndarray, np.ndarray]:
        log_dens = _log_density(points, centroids, covariances, weights)
        log_norm = logsumexp(log_dens, axis=2)
        return np.exp(log_dens - log_norm[..., None]), np.sum(log_norm, axis=1)

    def _m_step(self, points, resp, centroids, covariances):
        n = points.shape[1]
        nk = resp.sum(axis=1)
        # an empty component keeps its previous shape and location
        live = nk > EMPTY_COMPONENT
        safe_nk = np.where(live, nk, 1.0)
        new_centroids = np.matmul(resp.transpose(0, 2, 1), points) / safe_nk[..., None]
        new_centroids = np.where(live[..., None], new_centroids, centroids)
        diff = points[:, :, None, :] - new_centroids[:, None, :, :]
        cov = np.einsum('pnki,pnkj->pkij', resp[..., None] * diff, diff) / safe_nk[..., None, None]
        cov = 0.5 * (cov + np.swapaxes(cov, -1, -2))
        new_covariances = np.where(live[..., None, None], cov, covariances)
        for p, j in zip(*np.nonzero(live & (min_eigenvalues(new_covariances) < self.floor))):
            new_covariances[p, j] = floor_covariance(new_covariances[p, j], self.floor)
        weights = nk / n
        weights = weights / weights.sum(axis=1, keepdims=True)
        return new_centroids, new_covariances, weights

    def fit_stack(self, stack: np.ndarray, seeds: Sequence[int]) -> List[StackFit]:
        """Fit one mixture per (n, 2) slice of a (p, n, 2) stack; slice i is seeded with seeds[i]."""
        stack = np.asarray(stack, dtype=float)
        if stack.ndim != 3 or stack.shape[2] != 2:
            raise ValueError(f"Expected a (p, n, 2) stack, got shape {stack.shape}")
        if len(seeds) != len(stack):
            raise ValueError(f"{len(stack)} point sets but {len(seeds)} seeds")
        if stack.shape[1] < self.k:
            raise TooFewPoints(f"EM needs at least k={self.k} points, got {stack.shape[1]}")

        size = len(stack)
        centroids, covariances, weights = self._initialize(stack, seeds)
        traces: List[List[float]] = [[] for _ in range(size)]
        previous = np.zeros(size)
        n_iter = np.zeros(size, dtype=int)
        converged = np.zeros(size, dtype=bool)
        active = np.arange(size)
        for iteration in range(self.max_iter):
            if len(active) == 0:
                break
            resp, ll = self._e_step(stack[active], centroids[active], covariances[active], weights[active])
            for p, value in zip(active, ll):
                traces[p].append(float(value))
            if iteration > 0:
                prev = previous[active]
                done = (ll - prev) / np.maximum(np.abs(prev), 1e-300) < self.tol
            else:
                done = np.zeros(len(active), dtype=bool)
            converged[active[done]] = True
            previous[active] = ll

            active, resp = active[~done], resp[~done]
            if len(active):
                centroids[active], covariances[active], weights[active] = self._m_step(
                    stack[active], resp, centroids[active], covariances[active])
                n_iter[active] = iteration + 1

        return [
            StackFit(Gmm2D(self.k, centroids[p].copy(), covariances[p].copy(), weights[p].copy()),
                     traces[p], int(n_iter[p]), bool(converged[p]))
            for p in range(size)
        ]

    def fit(self, points: np.ndarray) -> Gmm2D:
        points = np.asarray(points, dtype=float).reshape(-1, 2)
        if len(points) < self.k:
            raise TooFewPoints(f"EM needs at least k={self.k} points, got {len(points)}")
        result = self.fit_stack(points[None], [self.seed])[0]
        self.log_likelihoods = result.log_likelihoods
        self.n_iter = result.n_iter
        self.converged = result.converged
        return result.model


def fit_gmm(points: np.ndarray, k: int, seed: int, tol: float = EM_TOL,
            max_iter: int = EM_MAX_ITER, floor: float = COVARIANCE_FLOOR) -> Gmm2D:
    return ExpectationMaximization(k=k, seed=seed, tol=tol, max_iter=max_iter, floor=floor).fit(points)


def fit_gmm_stack(stack: np.ndarray, k: int, seeds: Sequence[int], tol: float = EM_TOL,
                  max_iter: int = EM_MAX_ITER, floor: float = COVARIANCE_FLOOR) -> List[Gmm2D]:
    em = ExpectationMaximization(k=k, tol=tol, max_iter=max_iter, floor=floor)
    return [result.model for result in em.fit_stack(stack, seeds)]
