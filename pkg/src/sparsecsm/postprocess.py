"""Turn a recovered source diagonal into a short list of sources.

Non-negligible diagonal entries are placed at their focus-grid positions,
grouped with k-means, and every group is reported by its centre and the
sum of its members' strengths.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from sklearn.metrics import silhouette_score

from .errors import DimensionError, ParameterError


@dataclass(frozen=True)
class WeightedPoint:
    position: tuple
    strength: float
    grid_index: int  # 1-based


@dataclass
class Cluster:
    centre: np.ndarray
    members: list = field(default_factory=list)


@dataclass(frozen=True)
class SourceEstimate:
    centroid: tuple
    total_strength: float
    member_indices: tuple

    @property
    def n_members(self):
        return len(self.member_indices)

    def to_record(self):
        x, y, z = (list(self.centroid) + [0.0, 0.0, 0.0])[:3]
        return {
            "x": float(x),
            "y": float(y),
            "z": float(z),
            "strength": float(self.total_strength),
            "n_members": self.n_members,
            "members": [int(i) for i in self.member_indices],
        }


@dataclass(frozen=True)
class RemapResult:
    points: list
    max_imag: float


def remap_diagonal(X, grid, threshold=1e-5):
    """Grid-placed points for every diagonal entry with ``|X_ii| > threshold``.

    Strength is ``|Re X_ii|``; the largest ``|Im X_ii|`` over all entries is
    returned alongside as a diagnostic.
    """
    X = np.asarray(X)
    diag = X if X.ndim == 1 else np.diagonal(X)
    if X.ndim == 2 and X.shape[0] != X.shape[1]:
        raise DimensionError("X must be square")
    if diag.shape[0] != grid.size:
        raise DimensionError(f"diagonal has {diag.shape[0]} entries, grid has {grid.size}")
    pts = grid.points()
    keep = np.flatnonzero(np.abs(diag) > threshold)
    points = [
        WeightedPoint(tuple(float(v) for v in pts[i]), float(abs(diag[i].real)), int(i) + 1)
        for i in keep
    ]
    max_imag = float(np.max(np.abs(np.imag(diag)))) if diag.size else 0.0
    return RemapResult(points, max_imag)


def _positions(points):
    return np.array([p.position for p in points], dtype=np.float64)


def _kmeanspp(pos, k, rng, weights=None):
    n = pos.shape[0]
    first = rng.integers(n)
    centres = [pos[first]]
    d2 = np.sum((pos - centres[0]) ** 2, axis=1)
    for _ in range(1, k):
        p = d2 if weights is None else d2 * weights
        total = p.sum()
        if total <= 0:
            idx = int(rng.integers(n))
        else:
            idx = int(rng.choice(n, p=p / total))
        centres.append(pos[idx])
        d2 = np.minimum(d2, np.sum((pos - pos[idx]) ** 2, axis=1))
    return np.array(centres)


def _assign(pos, centres):
    d2 = np.sum((pos[:, None, :] - centres[None, :, :]) ** 2, axis=2)
    return np.argmin(d2, axis=1), d2


def _fill_empty(labels, own_d2, k):
    """Give every empty cluster the point farthest from its own centre,
    taken from a cluster that keeps at least one member."""
    for c in range(k):
        if np.any(labels == c):
            continue
        counts = np.bincount(labels, minlength=k)
        movable = counts[labels] > 1
        far = int(np.argmax(np.where(movable, own_d2, -1.0)))
        labels[far] = c
        own_d2[far] = 0.0


def _centres(pos, w, labels, k):
    centres = np.empty((k, pos.shape[1]))
    for c in range(k):
        mask = labels == c
        wc = w[mask]
        if wc.sum() > 0:
            centres[c] = (pos[mask] * wc[:, None]).sum(axis=0) / wc.sum()
        else:
            centres[c] = pos[mask].mean(axis=0)
    return centres


def kmeans(points, k, seed=0, max_iter=100, weighted=False, return_trace=False):
    """Lloyd's algorithm with k-means++ seeding on point positions.

    With ``weighted`` the centres are strength-weighted means; by default
    all points count equally.  An emptied cluster is re-seeded with the
    point farthest from its current centre.
    """
    if k < 1:
        raise ParameterError("k must be >= 1")
    if k > len(points):
        raise ParameterError(f"k={k} exceeds the number of points ({len(points)})")
    pos = _positions(points)
    w = np.array([p.strength for p in points]) if weighted else np.ones(len(points))
    if weighted and not np.any(w > 0):
        w = np.ones(len(points))
    rng = np.random.default_rng(seed)
    centres = _kmeanspp(pos, k, rng, w if weighted else None)
    rows = np.arange(len(pos))
    labels, d2 = _assign(pos, centres)
    trace = []
    for _ in range(max_iter):
        _fill_empty(labels, d2[rows, labels].copy(), k)
        centres = _centres(pos, w, labels, k)
        new_labels, d2 = _assign(pos, centres)
        trace.append(float(np.sum(w * d2[rows, new_labels])))
        if np.array_equal(new_labels, labels):
            break
        labels = new_labels
    _fill_empty(labels, d2[rows, labels].copy(), k)
    centres = _centres(pos, w, labels, k)
    clusters = [Cluster(centres[c].copy(), [points[i] for i in np.flatnonzero(labels == c)])
                for c in range(k)]
    if return_trace:
        return clusters, trace
    return clusters


def silhouette_table(points, k_max, seed=0):
    """Mean silhouette coefficient for each candidate ``k >= 2``."""
    pos = _positions(points)
    table = {}
    for k in range(2, min(k_max, len(points) - 1) + 1):
        clusters = kmeans(points, k, seed=seed)
        label_of = {}
        for c, cl in enumerate(clusters):
            for p in cl.members:
                label_of[p.grid_index] = c
        labels = np.array([label_of[p.grid_index] for p in points])
        if len(set(labels)) < 2:
            continue
        table[k] = float(silhouette_score(pos, labels))
    return table


def choose_k(points, k_max=10, seed=0, min_silhouette=0.5):
    """k with the best mean silhouette; 1 when no split scores ``min_silhouette``."""
    table = silhouette_table(points, k_max, seed)
    if not table:
        return 1
    best = max(table, key=lambda k: (table[k], -k))
    return best if table[best] >= min_silhouette else 1


def merge_close(clusters, radius):
    """Merge clusters whose centres lie closer than ``radius``."""
    clusters = [Cluster(c.centre.copy(), list(c.members)) for c in clusters]
    merged = True
    while merged and len(clusters) > 1:
        merged = False
        for i in range(len(clusters)):
            for j in range(i + 1, len(clusters)):
                if np.linalg.norm(clusters[i].centre - clusters[j].centre) < radius:
                    members = clusters[i].members + clusters[j].members
                    centre = _positions(members).mean(axis=0)
                    clusters[i] = Cluster(centre, members)
                    del clusters[j]
                    merged = True
                    break
            if merged:
                break
    return clusters


def summarize(clusters):
    """One :class:`SourceEstimate` per cluster, strongest first."""
    out = []
    for cl in clusters:
        if not cl.members:
            continue
        total = math.fsum(p.strength for p in cl.members)
        out.append(SourceEstimate(
            tuple(float(v) for v in cl.centre),
            total,
            tuple(sorted(p.grid_index for p in cl.members)),
        ))
    out.sort(key=lambda e: (-e.total_strength, e.member_indices))
    return out
