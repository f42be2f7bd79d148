"""Piecewise-stationary Gaussian streams with known change points."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MAX_MEAN_DRAWS = 10_000


@dataclass
class SyntheticSpec:
    dim: int = 20
    segment_count: int = 8
    segment_length: tuple[int, int] = (200, 400)
    mean_separation: float = 20.0
    noise_std: float = 1.0
    seed: int = 0

    def validate(self) -> None:
        lo, hi = self.segment_length
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.segment_count < 1:
            raise ValueError("segment_count must be >= 1")
        if lo < 1 or hi < lo:
            raise ValueError(f"invalid segment_length range {self.segment_length}")
        if not self.mean_separation > 0:
            raise ValueError("mean_separation must be > 0")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")


def _draw_layout(spec: SyntheticSpec, rng: np.random.Generator):
    lo, hi = spec.segment_length
    lengths = rng.integers(lo, hi + 1, size=spec.segment_count)
    means: list[np.ndarray] = []
    for _ in range(spec.segment_count):
        for _ in range(MAX_MEAN_DRAWS):
            m = rng.normal(0.0, spec.mean_separation, spec.dim)
            if not means or np.linalg.norm(m - means[-1]) >= spec.mean_separation:
                break
        else:
            raise ValueError("could not draw segment means at the requested separation")
        means.append(m)
    return lengths, means


def generate_synthetic(spec: SyntheticSpec) -> tuple[np.ndarray, list[int], list[int]]:
    """Return ``(features, labels, boundaries)``.

    Segment means come from N(0, separation^2 I), redrawn until each is at
    least ``mean_separation`` from the previous one. Labels are segment
    indices and boundaries sit at each segment start after the first.
    """
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    lengths, means = _draw_layout(spec, rng)
    blocks = [mean + spec.noise_std * rng.standard_normal((int(n), spec.dim))
              for mean, n in zip(means, lengths)]
    X = np.vstack(blocks)
    labels = [s for s, n in enumerate(lengths) for _ in range(int(n))]
    boundaries = [int(b) for b in np.cumsum(lengths)[:-1]]
    return X, labels, boundaries


def segment_means(spec: SyntheticSpec) -> list[np.ndarray]:
    """The means :func:`generate_synthetic` draws for ``spec``."""
    spec.validate()
    return _draw_layout(spec, np.random.default_rng(spec.seed))[1]
