"""Per-frame cluster evolution and transition detection."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .core import ModelState, check_matrix, check_vector
from .evaluation import TimingReport


@dataclass
class FrameOutcome:
    cluster_id: int
    created_new: bool
    distance: float
    update_cost: int


def nearest_cluster(x, model: ModelState) -> tuple[int, float]:
    """Exhaustive scan; ties go to the smallest id."""
    if model.n_clusters < 1:
        raise ValueError("model has no clusters")
    x = check_vector(x, model.dim)
    diff = model.centers[: model.n_clusters] - x
    d2 = np.einsum("ij,ij->i", diff, diff)
    i = int(np.argmin(d2))
    return i, float(d2[i])


def evolve(model: ModelState, x, mean_update: str = "exact", validate: bool = True) -> FrameOutcome:
    """Assign ``x`` to its nearest cluster or open a new one, mutating ``model``.

    ``mean_update="literal"`` uses ``c + (x - c) / n`` with the pre-update
    count and ``var = M - c*c``, as written in the original update rule.
    The default divides by ``n + 1`` so the center stays the exact running
    mean.
    """
    if validate:
        x = check_vector(x, model.dim)
        if model.n_clusters < 1:
            raise ValueError("model has no clusters")
    k = model.n_clusters
    diff = model.centers[:k] - x
    diff *= diff
    d2 = diff.sum(axis=1)
    i = int(d2.argmin())
    dist = float(d2[i])

    if dist >= max(model.radii[i], model.min_radius):
        cid = model.add_cluster(x, x * x, np.zeros(model.dim), 1)
        return FrameOutcome(cid, True, dist, k)

    n = int(model.counts[i])
    center = model.centers[i]
    second = model.second_moments[i]
    var = model.variances[i]
    second *= n
    second += x * x
    second /= n + 1
    if mean_update == "exact":
        dev_old = x - center
        # in-place; same arithmetic as (c * n + x) / (n + 1)
        center *= n
        center += x
        center /= n + 1
        # Welford form of M - c*c: identical in exact arithmetic, but free
        # of the cancellation that M - c*c suffers on tight clusters
        var *= n
        var += dev_old * (x - center)
        var /= n + 1
    elif mean_update == "literal":
        center += (x - center) / n
        np.subtract(second, center * center, out=var)
    else:
        raise ValueError(f"unknown mean_update {mean_update!r}")
    np.maximum(var, 0.0, out=var)
    model.radii[i] = var.sum()
    model.counts[i] = n + 1
    return FrameOutcome(i, False, dist, k)


def run_stream(model: ModelState, stream, mean_update: str = "exact", on_boundary=None,
               start_index: int | None = None) -> tuple[list[int], list[int], TimingReport]:
    """Evolve ``model`` over every frame of ``stream``.

    Returns the online labels (one per stream frame), the global frame
    indices where the label changes, and per-frame timings. Frame indices
    start after the warm-up unless ``start_index`` says otherwise; the
    first frame is compared against the last warm-up label. If given,
    ``on_boundary(frame, previous_label, label)`` fires as each transition
    is detected.
    """
    X = check_matrix(stream, model.dim) if len(stream) else np.zeros((0, model.dim))
    offset = len(model.warmup_labels) if start_index is None else int(start_index)
    prev = model.warmup_labels[-1] if model.warmup_labels else None
    labels: list[int] = []
    boundaries: list[int] = []
    report = TimingReport()
    clock = time.perf_counter
    t_start = clock()
    for t in range(X.shape[0]):
        t0 = clock()
        out = evolve(model, X[t], mean_update=mean_update, validate=False)
        report.per_frame_seconds.append(clock() - t0)
        report.update_costs.append(out.update_cost)
        labels.append(out.cluster_id)
        if prev is not None and out.cluster_id != prev:
            boundaries.append(offset + t)
            if on_boundary is not None:
                on_boundary(offset + t, prev, out.cluster_id)
        prev = out.cluster_id
    report.total_seconds = clock() - t_start
    return labels, boundaries, report

