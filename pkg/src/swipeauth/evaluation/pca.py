import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Sequence, Union

import numpy as np
import pandas as pd

from ..errors import DegenerateData
from ..model.gmm import fit_gmm


logger = logging.getLogger(__name__)

RANK_TOLERANCE = 1e-12


@dataclass(frozen=True, eq=False)
class PcaProjection:
    mean: np.ndarray
    components: np.ndarray
    eigenvalues: np.ndarray
    explained_ratio: np.ndarray
    scores: np.ndarray


def pca_project(matrix: np.ndarray, n_components: int = 2) -> PcaProjection:
    """Project onto the leading eigenvectors of the sample covariance; first nonzero loading positive."""
    matrix = np.asarray(matrix, dtype=float)
    if matrix.ndim != 2 or len(matrix) == 0:
        raise ValueError("PCA needs a non-empty 2-D matrix")
    if matrix.shape[1] < n_components:
        raise ValueError(f"PCA needs at least {n_components} columns, got {matrix.shape[1]}")

    mean = matrix.mean(axis=0)
    centered = matrix - mean
    if len(matrix) < 2 or not np.any(np.abs(centered) > 0):
        raise DegenerateData("Covariance has rank 0")
    cov = centered.T @ centered / (len(matrix) - 1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    total = float(np.sum(np.maximum(eigvals, 0.0)))
    if total <= RANK_TOLERANCE:
        raise DegenerateData("Covariance has rank 0")

    order = np.argsort(eigvals)[::-1][:n_components]
    components = eigvecs[:, order].T.copy()
    for row in components:
        nonzero = np.flatnonzero(np.abs(row) > RANK_TOLERANCE)
        if len(nonzero) and row[nonzero[0]] < 0:
            row *= -1.0
    top = np.maximum(eigvals[order], 0.0)
    return PcaProjection(mean, components, top, top / total, centered @ components.T)


def export_pca_gmm(matrix: np.ndarray, groups: Sequence[str], k: int = 3, seed: int = 0,
                   path: Optional[Union[str, Path]] = None) -> Dict:
    """
    Two-component projection of a pooled matrix with one Gaussian mixture per group.

    When `path` is given, writes the JSON plot data and a companion CSV of the
    scatter points next to it.
    """
    groups = np.asarray([str(g) for g in groups])
    if len(groups) != len(matrix):
        raise ValueError("groups must label every row")
    projection = pca_project(matrix)

    payload = {
        'eigenvalues': projection.eigenvalues.tolist(),
        'explained_variance_ratio': projection.explained_ratio.tolist(),
        'groups': [],
    }
    for offset, label in enumerate(sorted(set(groups.tolist()))):
        points = projection.scores[groups == label]
        n_comp = min(k, len(points))
        if n_comp < k:
            logger.warning(f"Group {label} has {len(points)} points; fitting {n_comp} components")
        gmm = fit_gmm(points, n_comp, seed + offset)
        payload['groups'].append({
            'group': label,
            'points': points.tolist(),
            'components': gmm.ellipses(),
        })

    if path is not None:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write('\n')
        scatter = pd.DataFrame({
            'group': groups,
            'pc1': projection.scores[:, 0],
            'pc2': projection.scores[:, 1],
        })
        scatter.to_csv(path.with_suffix('.csv'), index=False, lineterminator='\n')
        logger.info(f"PCA export written to {path}")
    return payload
