"""Segment-overlap and boundary-tolerance precision/recall, plus timing records."""

from __future__ import annotations

import json
import time
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .core import labels_to_segments

NULL_LABEL = 0


@dataclass
class PRResult:
    precision: float
    recall: float
    true_positives: int
    predicted_count: int
    ground_truth_count: int

    @classmethod
    def from_counts(cls, tp: int, predicted: int, truth: int) -> "PRResult":
        return cls(
            precision=tp / predicted if predicted else 0.0,
            recall=tp / truth if truth else 0.0,
            true_positives=tp,
            predicted_count=predicted,
            ground_truth_count=truth,
        )


@dataclass
class TimingReport:
    total_seconds: float = 0.0
    per_frame_seconds: list[float] = field(default_factory=list)
    update_costs: list[int] = field(default_factory=list)

    @property
    def mean_update_cost(self) -> float:
        if not self.update_costs:
            return 0.0
        return sum(self.update_costs) / len(self.update_costs)

    @property
    def mean_frame_seconds(self) -> float:
        if not self.per_frame_seconds:
            return 0.0
        return sum(self.per_frame_seconds) / len(self.per_frame_seconds)


def segment_pr(pred: Sequence[int], gt: Sequence[int], credit_rule: str = "credited") -> PRResult:
    """Segment-level precision/recall with null label 0 excluded.

    A non-null ground-truth segment counts as a true positive when its modal
    predicted label covers more than half its frames, is not the null
    label, and has not been used before. ``credit_rule`` picks what "used"
    means: ``"credited"`` (already matched to an earlier GT segment) or
    ``"emitted"`` (appeared anywhere in the prediction before this segment).
    """
    pred = [int(v) for v in pred]
    gt = [int(v) for v in gt]
    if len(pred) != len(gt):
        raise ValueError(f"length mismatch: {len(pred)} predicted vs {len(gt)} ground-truth frames")
    if credit_rule not in ("credited", "emitted"):
        raise ValueError(f"unknown credit_rule {credit_rule!r}")
    if not gt:
        return PRResult.from_counts(0, 0, 0)

    pred_segments = [s for s in labels_to_segments(pred) if s.label != NULL_LABEL]
    gt_segments = [s for s in labels_to_segments(gt) if s.label != NULL_LABEL]

    credited: set[int] = set()
    tp = 0
    for seg in gt_segments:
        counts = Counter(pred[seg.start:seg.end])
        top = max(counts.values())
        modal = min(label for label, c in counts.items() if c == top)
        if top * 2 <= seg.end - seg.start or modal == NULL_LABEL:
            continue
        if credit_rule == "credited":
            seen = modal in credited
        else:
            seen = modal in pred[: seg.start]
        if seen:
            continue
        credited.add(modal)
        tp += 1
    return PRResult.from_counts(tp, len(pred_segments), len(gt_segments))


def _check_sorted(name: str, values: Sequence[int]) -> None:
    for a, b in zip(values, values[1:]):
        if b < a:
            raise ValueError(f"{name} boundaries must be sorted ascending")


def boundary_pr(pred: Sequence[int], gt: Sequence[int], tolerance_frames: int) -> PRResult:
    """Greedy one-to-one matching of boundaries within +/- ``tolerance_frames``.

    Each ground-truth boundary, in order, takes the earliest unmatched
    prediction inside its tolerance window.
    """
    pred = [int(v) for v in pred]
    gt = [int(v) for v in gt]
    if tolerance_frames < 0:
        raise ValueError("tolerance_frames must be >= 0")
    _check_sorted("predicted", pred)
    _check_sorted("ground-truth", gt)
    used = [False] * len(pred)
    tp = 0
    lo = 0
    for g in gt:
        while lo < len(pred) and pred[lo] < g - tolerance_frames:
            lo += 1
        j = lo
        while j < len(pred) and pred[j] <= g + tolerance_frames:
            if not used[j]:
                used[j] = True
                tp += 1
                break
            j += 1
    return PRResult.from_counts(tp, len(pred), len(gt))


def average_results(results: Sequence[PRResult]) -> dict:
    """Per-recording mean of precision and recall, with summed counts."""
    n = len(results)
    if n == 0:
        return {"precision": 0.0, "recall": 0.0, "recordings": 0}
    return {
        "precision": sum(r.precision for r in results) / n,
        "recall": sum(r.recall for r in results) / n,
        "true_positives": sum(r.true_positives for r in results),
        "predicted_count": sum(r.predicted_count for r in results),
        "ground_truth_count": sum(r.ground_truth_count for r in results),
        "recordings": n,
    }


def format_report(results: dict[str, PRResult], aggregate: dict | None = None, metric: str = "") -> str:
    prefix = f"{metric} " if metric else ""
    lines = []
    for name, r in results.items():
        lines.append(
            f"{prefix}{name}: precision {r.precision:.3f} recall {r.recall:.3f} "
            f"tp {r.true_positives} predicted {r.predicted_count} truth {r.ground_truth_count}"
        )
    if aggregate is not None and len(results) > 1:
        lines.append(f"{prefix}mean: precision {aggregate['precision']:.3f} recall {aggregate['recall']:.3f}")
    return "\n".join(lines) + "\n"


def json_records(results: dict[str, PRResult], aggregate: dict, metric: str) -> str:
    lines = [json.dumps({"recording": name, "metric": metric, **asdict(r)}, sort_keys=True)
             for name, r in results.items()]
    lines.append(json.dumps({"recording": "__aggregate__", "metric": metric, **aggregate}, sort_keys=True))
    return "\n".join(lines) + "\n"


def time_run(warmup, stream, **init_kwargs):
    """Time initialization plus streaming on already-loaded features.

    Returns ``(labels, boundaries, report)`` where ``report.total_seconds``
    covers both phases and the per-frame entries cover the online loop.
    """
    from .core import labels_to_boundaries
    from .online import run_stream
    from .spectral import init_model

    t0 = time.perf_counter()
    model = init_model(warmup, **init_kwargs)
    labels, _, report = run_stream(model, stream)
    report.total_seconds = time.perf_counter() - t0
    labels = list(model.warmup_labels) + labels
    return labels, labels_to_boundaries(labels), report
