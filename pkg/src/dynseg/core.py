"""Shared value types and label-sequence utilities.

A feature vector is a 1-d float64 numpy array of length ``dim``; a
feature stream is an ``(n, dim)`` array. Labels are plain sequences of
integer cluster ids, one per frame.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np


class Segment(NamedTuple):
    """Contiguous run of one label; ``end`` is exclusive."""

    start: int
    end: int
    label: int


@dataclass(frozen=True)
class ClusterStats:
    id: int
    center: np.ndarray
    second_moment: np.ndarray
    variance_diag: np.ndarray
    radius: float
    count: int


def check_vector(x, dim: int) -> np.ndarray:
    """Return ``x`` as a float64 vector, raising if it has the wrong length or is not finite."""
    v = np.asarray(x, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != dim:
        raise ValueError(f"dimension mismatch: expected vector of length {dim}, got shape {v.shape}")
    if not np.isfinite(v).all():
        raise ValueError("feature vector contains non-finite values")
    return v


def check_matrix(X, dim: int | None = None) -> np.ndarray:
    A = np.asarray(X, dtype=np.float64)
    if A.ndim != 2:
        raise ValueError(f"expected a 2-d feature matrix, got shape {A.shape}")
    if dim is not None and A.shape[1] != dim:
        raise ValueError(f"dimension mismatch: expected {dim} columns, got {A.shape[1]}")
    if not np.all(np.isfinite(A)):
        raise ValueError("feature matrix contains non-finite values")
    return A


class ModelState:
    """Evolving cluster set plus global thresholds.

    Per-cluster statistics are kept in row-stacked arrays that grow by
    doubling, so the online step touches ``k * dim`` numbers per frame.
    ``clusters`` materializes :class:`ClusterStats` copies for inspection.
    """

    def __init__(self, dim: int, uncertainty: float, capacity: int = 16):
        if dim < 1:
            raise ValueError("dim must be >= 1")
        if not uncertainty > 0:
            raise ValueError("uncertainty must be > 0")
        self.dim = int(dim)
        self.uncertainty = float(uncertainty)
        self.min_radius = self.uncertainty * self.dim
        cap = max(int(capacity), 1)
        self.centers = np.zeros((cap, self.dim))
        self.second_moments = np.zeros((cap, self.dim))
        self.variances = np.zeros((cap, self.dim))
        self.radii = np.zeros(cap)
        self.counts = np.zeros(cap, dtype=np.int64)
        self.n_clusters = 0
        self.warmup_labels: tuple[int, ...] = ()

    def _grow(self) -> None:
        cap = 2 * self.centers.shape[0]
        for name in ("centers", "second_moments", "variances"):
            old = getattr(self, name)
            new = np.zeros((cap, self.dim))
            new[: old.shape[0]] = old
            setattr(self, name, new)
        radii = np.zeros(cap)
        radii[: self.radii.shape[0]] = self.radii
        self.radii = radii
        counts = np.zeros(cap, dtype=np.int64)
        counts[: self.counts.shape[0]] = self.counts
        self.counts = counts

    def add_cluster(self, center, second_moment, variance_diag, count: int) -> int:
        """Append a cluster and return its id (its creation index)."""
        if count < 1:
            raise ValueError("cluster count must be >= 1")
        if self.n_clusters == self.centers.shape[0]:
            self._grow()
        i = self.n_clusters
        var = np.maximum(np.asarray(variance_diag, dtype=np.float64), 0.0)
        self.centers[i] = center
        self.second_moments[i] = second_moment
        self.variances[i] = var
        self.radii[i] = var.sum()
        self.counts[i] = count
        self.n_clusters += 1
        return i

    @property
    def clusters(self) -> list[ClusterStats]:
        return [self.cluster(i) for i in range(self.n_clusters)]

    def cluster(self, i: int) -> ClusterStats:
        if not 0 <= i < self.n_clusters:
            raise IndexError(f"no cluster with id {i}")
        return ClusterStats(
            id=i,
            center=self.centers[i].copy(),
            second_moment=self.second_moments[i].copy(),
            variance_diag=self.variances[i].copy(),
            radius=float(self.radii[i]),
            count=int(self.counts[i]),
        )

    def copy(self) -> "ModelState":
        other = ModelState(self.dim, self.uncertainty, capacity=self.centers.shape[0])
        other.min_radius = self.min_radius
        other.centers = self.centers.copy()
        other.second_moments = self.second_moments.copy()
        other.variances = self.variances.copy()
        other.radii = self.radii.copy()
        other.counts = self.counts.copy()
        other.n_clusters = self.n_clusters
        other.warmup_labels = self.warmup_labels
        return other

    def __repr__(self) -> str:
        return (
            f"ModelState(dim={self.dim}, clusters={self.n_clusters}, "
            f"min_radius={self.min_radius:g}, uncertainty={self.uncertainty:g})"
        )


def labels_to_segments(labels: Sequence[int]) -> list[Segment]:
    labels = [int(v) for v in labels]
    if not labels:
        raise ValueError("empty labeling")
    segments = []
    start = 0
    for t in range(1, len(labels)):
        if labels[t] != labels[t - 1]:
            segments.append(Segment(start, t, labels[start]))
            start = t
    segments.append(Segment(start, len(labels), labels[start]))
    return segments


def segments_to_labels(segments: Iterable[Segment]) -> list[int]:
    out: list[int] = []
    for seg in segments:
        out.extend([seg.label] * (seg.end - seg.start))
    return out


def segments_to_boundaries(segments: Sequence[Segment]) -> list[int]:
    """Frame index of each segment start except the first."""
    return [int(seg.start) for seg in segments[1:]]


def labels_to_boundaries(labels: Sequence[int]) -> list[int]:
    return segments_to_boundaries(labels_to_segments(labels))
