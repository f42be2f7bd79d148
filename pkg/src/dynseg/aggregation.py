"""Offline aggregation: soft-assignment codes, temporal pooling, pattern k-means."""

from __future__ import annotations

import math
from typing import NamedTuple, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .core import ModelState, check_matrix
from .spectral import kmeans


class Window(NamedTuple):
    start: int
    end: int  # exclusive


def default_bandwidth(model: ModelState) -> float:
    """sqrt(mean radius / d), falling back to the minimum radius when every cluster is a point."""
    k = model.n_clusters
    mean_radius = float(model.radii[:k].mean()) if k else 0.0
    if mean_radius <= 0:
        mean_radius = model.min_radius
    return math.sqrt(mean_radius / model.dim)


def soft_assign(X, model: ModelState, bandwidth: float | None = None) -> np.ndarray:
    """Gaussian soft-assignment codes against the model's cluster centers.

    Accepts one vector or an ``(n, d)`` array; each returned row sums to 1.
    """
    if bandwidth is None:
        bandwidth = default_bandwidth(model)
    if not bandwidth > 0:
        raise ValueError(f"bandwidth must be > 0, got {bandwidth}")
    if model.n_clusters < 1:
        raise ValueError("model has no clusters")
    single = np.ndim(X) == 1
    A = check_matrix(np.atleast_2d(X), model.dim)
    C = model.centers[: model.n_clusters]
    codes = np.empty((A.shape[0], C.shape[0]))
    for t in range(A.shape[0]):
        diff = C - A[t]
        logits = -np.einsum("ij,ij->i", diff, diff) / (2.0 * bandwidth * bandwidth)
        w = np.exp(logits - logits.max())
        codes[t] = w / w.sum()
    return codes[0] if single else codes


def pool_sliding(codes, window: int = 30, stride: int = 1) -> tuple[np.ndarray, list[Window]]:
    """Sum codes over each sliding window and L1-normalize the result."""
    codes = np.asarray(codes, dtype=np.float64)
    if window < 1 or stride < 1:
        raise ValueError("window and stride must be >= 1")
    n = codes.shape[0]
    if n < window:
        raise ValueError(f"stream shorter than window: {n} < {window}")
    starts = np.arange(0, n - window + 1, stride)
    sums = sliding_window_view(codes, window, axis=0)[starts].sum(axis=-1)
    patterns = sums / sums.sum(axis=1, keepdims=True)
    return patterns, [Window(int(s), int(s) + window) for s in starts]


def pool_windows(codes, windows: Sequence[Window]) -> np.ndarray:
    codes = np.asarray(codes, dtype=np.float64)
    out = np.empty((len(windows), codes.shape[1]))
    for j, (s, e) in enumerate(windows):
        total = codes[s:e].sum(axis=0)
        out[j] = total / total.sum()
    return out


def gaussian_smooth(signal, sigma: float) -> np.ndarray:
    """Truncated (3 sigma) Gaussian smoothing, kernel renormalized at the edges."""
    a = np.asarray(signal, dtype=np.float64)
    half = int(math.ceil(3 * sigma))
    offsets = np.arange(-half, half + 1)
    kernel = np.exp(-0.5 * (offsets / sigma) ** 2)
    num = np.convolve(a, kernel)[half : half + a.size]
    den = np.convolve(np.ones_like(a), kernel)[half : half + a.size]
    return num / den


def _local_peaks(s: np.ndarray) -> list[int]:
    """Index of each strict local maximum, plateaus counted once (at their left end)."""
    peaks = []
    n = s.size
    t = 0
    while t < n:
        u = t
        while u + 1 < n and s[u + 1] == s[t]:
            u += 1
        left_ok = t == 0 or s[t - 1] < s[t]
        right_ok = u == n - 1 or s[u + 1] < s[t]
        if left_ok and right_ok:
            peaks.append(t)
        t = u + 1
    return peaks


def null_action_windows(labels: Sequence[int], smoothing_sigma: float = 5.0,
                        peak_threshold: float = 0.5) -> list[Window]:
    """Activity windows around peaks of the smoothed non-null indicator.

    Frames sharing frame 0's cluster are treated as the null action. Each
    peak above ``peak_threshold`` yields the maximal run where the smoothed
    signal stays above half the peak height; overlapping runs are merged.
    """
    labels = list(labels)
    if not labels:
        raise ValueError("empty labeling")
    if not smoothing_sigma > 0:
        raise ValueError("smoothing_sigma must be > 0")
    null = labels[0]
    active = np.array([0.0 if v == null else 1.0 for v in labels])
    s = gaussian_smooth(active, smoothing_sigma)
    runs = []
    for p in _local_peaks(s):
        height = s[p]
        if height <= peak_threshold:
            continue
        lo = p
        while lo > 0 and s[lo - 1] > height / 2:
            lo -= 1
        hi = p
        while hi + 1 < s.size and s[hi + 1] > height / 2:
            hi += 1
        runs.append((lo, hi + 1))
    runs.sort()
    merged: list[Window] = []
    for lo, hi in runs:
        if merged and lo < merged[-1].end:
            merged[-1] = Window(merged[-1].start, max(merged[-1].end, hi))
        else:
            merged.append(Window(lo, hi))
    return merged


def segment_patterns(patterns, k_actions: int, seed: int = 0, max_iter: int = 300,
                     tol: float = 1e-10) -> np.ndarray:
    P = check_matrix(patterns)
    if k_actions < 1:
        raise ValueError("k_actions must be >= 1")
    if P.shape[0] < k_actions:
        raise ValueError(f"too few patterns: {P.shape[0]} for k_actions={k_actions}")
    assign, _ = kmeans(P, k_actions, seed=seed, max_iter=max_iter, tol=tol)
    # relabel by first appearance so output does not depend on seeding order
    remap: dict[int, int] = {}
    for a in assign:
        remap.setdefault(int(a), len(remap))
    return np.array([remap[int(a)] for a in assign], dtype=np.int64)


def frame_labels_from_sliding(pattern_labels, n_frames: int, window: int, stride: int) -> list[int]:
    """Give each frame the label of the window whose center is nearest (ties to the earlier window)."""
    pattern_labels = list(pattern_labels)
    last = len(pattern_labels) - 1
    out = []
    for t in range(n_frames):
        v = (t - (window - 1) / 2) / stride
        p = min(max(math.ceil(v - 0.5), 0), last)
        out.append(int(pattern_labels[p]))
    return out


def frame_labels_from_windows(pattern_labels, windows: Sequence[Window], n_frames: int) -> list[int]:
    """Frames inside window j get ``pattern_labels[j] + 1``; the rest are null (0)."""
    out = [0] * n_frames
    for lab, (s, e) in zip(pattern_labels, windows):
        for t in range(s, e):
            out[t] = int(lab) + 1
    return out


def aggregate(X, model: ModelState, k_actions: int, pooling: str = "sliding", window: int = 30,
              stride: int = 1, bandwidth: float | None = None, smoothing_sigma: float = 5.0,
              online_labels: Sequence[int] | None = None, seed: int = 0) -> list[int]:
    """Full offline pipeline from features to per-frame action labels."""
    X = check_matrix(X, model.dim)
    codes = soft_assign(X, model, bandwidth)
    if pooling == "sliding":
        patterns, _ = pool_sliding(codes, window, stride)
        labels = segment_patterns(patterns, k_actions, seed=seed)
        return frame_labels_from_sliding(labels, X.shape[0], window, stride)
    if pooling == "peaks":
        if online_labels is None:
            raise ValueError("peak pooling needs the online labels")
        windows = null_action_windows(online_labels, smoothing_sigma)
        if not windows:
            return [0] * X.shape[0]
        patterns = pool_windows(codes, windows)
        labels = segment_patterns(patterns, min(k_actions, len(windows)), seed=seed)
        return frame_labels_from_windows(labels, windows, X.shape[0])
    raise ValueError(f"unknown pooling {pooling!r}")
