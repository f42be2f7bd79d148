"""Online temporal segmentation by dynamic clustering."""

from .core import (ClusterStats, ModelState, Segment, labels_to_boundaries, labels_to_segments,
                   segments_to_boundaries, segments_to_labels)
from .evaluation import PRResult, TimingReport, boundary_pr, segment_pr, time_run
from .online import FrameOutcome, evolve, nearest_cluster, run_stream
from .spectral import (build_similarity, init_model, kmeans, normalized_laplacian, select_k_eigengap,
                       spectral_embed, spectrum)

__version__ = "0.1.0"
