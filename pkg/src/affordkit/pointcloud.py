"""Point-cloud container plus farthest point sampling and K-nearest-neighbor queries.

Anchors are chosen by greedy FPS seeded at the lexicographically smallest
coordinate tuple, which makes the selection a pure function of the coordinate
multiset (permutation invariant). Neighborhoods exclude the anchor itself:
its own offset is identically zero and would only dilute neighborhood means.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError
from .validation import as_coords, as_labels


@dataclass(frozen=True)
class PointCloud:
    """n unordered 3-D points with optional per-point label indices."""

    coords: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        coords = as_coords(self.coords)
        object.__setattr__(self, "coords", coords)
        if self.labels is not None:
            labels = as_labels(self.labels, coords.shape[0])
            object.__setattr__(self, "labels", labels)

    @property
    def n(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class AnchorSet:
    """Z anchor indices and, per anchor, its K nearest neighbor indices."""

    anchor_indices: np.ndarray  # (Z,) int64, distinct
    neighbor_indices: np.ndarray  # (Z, K) int64, anchor never in its own row

    @property
    def num_anchors(self) -> int:
        return self.anchor_indices.shape[0]

    @property
    def k(self) -> int:
        return self.neighbor_indices.shape[1]


def pairwise_sq_dist(coords: np.ndarray) -> np.ndarray:
    """All-pairs squared Euclidean distances, (n, n).

    Uses explicit differences rather than the norm expansion so the diagonal
    is exactly zero and the matrix exactly symmetric.
    """
    diff = coords[:, None, :] - coords[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _lex_ranks(coords: np.ndarray) -> np.ndarray:
    """Rank of each point under (x, y, z, original index) ordering."""
    n = coords.shape[0]
    order = np.lexsort((np.arange(n), coords[:, 2], coords[:, 1], coords[:, 0]))
    ranks = np.empty(n, dtype=np.int64)
    ranks[order] = np.arange(n)
    return ranks


def fps(cloud: PointCloud, ratio: float) -> np.ndarray:
    """Greedy farthest point sampling; returns floor(ratio*n) indices in selection order.

    Start point: lexicographically smallest (x, y, z). Each subsequent pick
    maximizes the minimum squared distance to the already-selected set; ties
    go to the lexicographically smallest coordinate tuple, then smaller index.
    """
    coords = cloud.coords
    n = coords.shape[0]
    z = int(np.floor(ratio * n))
    if z < 1:
        raise ConfigError(f"fps ratio {ratio} with n={n} yields zero anchors")
    ranks = _lex_ranks(coords)

    start = int(np.argmin(ranks))
    selected = np.empty(z, dtype=np.int64)
    selected[0] = start
    available = np.ones(n, dtype=bool)
    available[start] = False
    diff = coords - coords[start]
    min_d = np.einsum("ij,ij->i", diff, diff)

    for t in range(1, z):
        best = np.max(min_d[available])
        candidates = np.flatnonzero(available & (min_d == best))
        pick = candidates[np.argmin(ranks[candidates])]
        selected[t] = pick
        available[pick] = False
        diff = coords - coords[pick]
        np.minimum(min_d, np.einsum("ij,ij->i", diff, diff), out=min_d)

    return selected


def knn(cloud: PointCloud, anchors: np.ndarray, k: int) -> AnchorSet:
    """K nearest neighbors of each anchor, excluding the anchor itself.

    Distance ties break toward the smaller original index.
    """
    coords = cloud.coords
    n = coords.shape[0]
    if k > n - 1:
        raise ConfigError(f"k={k} neighbors requested but only n-1={n - 1} are available")
    if k < 1:
        raise ConfigError(f"k={k} must be at least 1")
    anchors = np.asarray(anchors, dtype=np.int64)

    diff = coords[anchors][:, None, :] - coords[None, :, :]
    d2 = np.einsum("ijk,ijk->ij", diff, diff)
    d2[np.arange(anchors.shape[0]), anchors] = np.inf
    order = np.argsort(d2, axis=1, kind="stable")
    return AnchorSet(anchor_indices=anchors, neighbor_indices=order[:, :k].astype(np.int64))


def sample_anchors(cloud: PointCloud, ratio: float, k: int) -> AnchorSet:
    """FPS then KNN in one step."""
    return knn(cloud, fps(cloud, ratio), k)
