"""End-to-end driver: warm-up initialization, online pass, optional aggregation."""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .aggregation import aggregate
from .config import RunConfig
from .core import ModelState, check_matrix, labels_to_boundaries
from .evaluation import TimingReport
from .online import run_stream
from .spectral import init_model


@dataclass
class SegmentationResult:
    labels: list[int]
    boundaries: list[int]
    online_labels: list[int]
    model: ModelState
    timing: TimingReport


def segment(X, config: RunConfig | None = None, aggregate_actions: bool = False) -> SegmentationResult:
    config = (config or RunConfig()).validate()
    X = check_matrix(X)
    n = X.shape[0]
    if n < 2:
        raise ValueError("need at least 2 frames")
    warm = min(config.warmup_len, n)

    t0 = time.perf_counter()
    model = init_model(X[:warm], **config.init_kwargs())
    online, _, timing = run_stream(model, X[warm:], mean_update=config.mean_update)
    labels = list(model.warmup_labels) + online
    timing.total_seconds = time.perf_counter() - t0

    if aggregate_actions:
        k_actions = config.k_actions or model.n_clusters
        labels = aggregate(X, model, k_actions, pooling=config.pooling, window=config.window,
                           stride=config.stride, bandwidth=config.bandwidth,
                           smoothing_sigma=config.smoothing_sigma, online_labels=labels,
                           seed=config.seed)
    return SegmentationResult(labels, labels_to_boundaries(labels), list(model.warmup_labels) + online,
                              model, timing)


def held_cluster_stream(n: int, dim: int, k: int, seed: int = 0, spread: float = 100.0,
                        run_length: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Warm-up plus stream drawn from ``k`` fixed unit-variance blobs.

    Used for latency measurements where the cluster count must stay put.
    """
    rng = np.random.default_rng(seed)
    means = np.zeros((k, dim))
    for j in range(k):
        means[j, j % dim] = spread * (1 + j // dim)
    per = 40
    warm = np.vstack([means[j] + rng.standard_normal((per, dim)) for j in range(k)])
    which = np.repeat(rng.integers(k, size=n // run_length + 1), run_length)[:n]
    stream = means[which] + rng.standard_normal((n, dim))
    return warm, stream
