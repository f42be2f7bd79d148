"""Warm-up initialization: similarity graph, eigengap model selection, k-means.

The warm-up window is small (hundreds of frames), so everything here
uses dense matrices and a full symmetric eigensolver.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import pdist, squareform

from .core import ModelState, check_matrix

log = logging.getLogger(__name__)

# exponents tried by the "auto" kernel width: sigma = median * 2**-j
AUTO_SIGMA_STEPS = 13
FRAGMENTED_EIGENVALUE = 1e-6
AUTO_MIN_DEGREE = 2.0
# widest exponent D2/sigma allowed for any vertex's nearest neighbour
MAX_NEIGHBOUR_EXPONENT = 50.0


@dataclass
class SimilarityMatrix:
    weights: np.ndarray
    kernel_sigma: float


@dataclass
class Embedding:
    rows: np.ndarray
    zero_rows: np.ndarray  # indices of rows left unnormalized


def pairwise_sq_distances(X) -> np.ndarray:
    X = check_matrix(X)
    return squareform(pdist(X, "sqeuclidean"))


def median_sq_distance(X) -> float:
    X = check_matrix(X)
    if X.shape[0] < 2:
        raise ValueError("initial window too small")
    return float(np.median(pdist(X, "sqeuclidean")))


def build_similarity(X, kernel_sigma: float) -> SimilarityMatrix:
    X = check_matrix(X)
    if X.shape[0] < 2:
        raise ValueError("initial window too small")
    if not kernel_sigma > 0:
        raise ValueError(f"kernel_sigma must be > 0, got {kernel_sigma}")
    W = np.exp(-pairwise_sq_distances(X) / kernel_sigma)
    np.fill_diagonal(W, 0.0)
    return SimilarityMatrix(W, float(kernel_sigma))


def normalized_laplacian(W) -> np.ndarray:
    """``I - D^-1/2 A D^-1/2`` for the (self-loop free) weight matrix."""
    A = W.weights if isinstance(W, SimilarityMatrix) else np.asarray(W, dtype=np.float64)
    deg = A.sum(axis=1)
    if np.any(deg <= 0):
        raise ValueError("isolated vertex: zero degree in similarity graph")
    s = 1.0 / np.sqrt(deg)
    L = -(s[:, None] * A * s[None, :])
    L[np.diag_indices_from(L)] += 1.0
    # exact symmetry; the scaling above is symmetric up to rounding order
    return 0.5 * (L + L.T)


def spectrum(L) -> np.ndarray:
    """Ascending eigenvalues of a symmetric matrix."""
    return np.linalg.eigvalsh(L)


def eigengaps(eigenvalues, k_max: int) -> np.ndarray:
    ev = np.asarray(eigenvalues, dtype=np.float64)
    if not 1 <= k_max <= ev.shape[0] - 1:
        raise ValueError(f"k_max must be in [1, {ev.shape[0] - 1}], got {k_max}")
    return np.diff(ev[: k_max + 1])


def select_k_eigengap(eigenvalues, k_max: int) -> int:
    """Smallest k in [1, k_max] maximizing ``lambda_{k+1} - lambda_k``."""
    return int(np.argmax(eigengaps(eigenvalues, k_max))) + 1


def default_k_max(n: int) -> int:
    return min(10, n - 1)


def spectral_embed(L, k: int) -> Embedding:
    L = np.asarray(L, dtype=np.float64)
    n = L.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}], got {k}")
    _, vecs = np.linalg.eigh(L)
    V = vecs[:, :k].copy()
    # eigh leaves signs arbitrary; pin them for reproducibility
    for j in range(k):
        if V[np.argmax(np.abs(V[:, j])), j] < 0:
            V[:, j] = -V[:, j]
    norms = np.sqrt(np.einsum("ij,ij->i", V, V))
    zero = np.flatnonzero(norms == 0)
    nz = norms > 0
    V[nz] /= norms[nz, None]
    if zero.size:
        log.debug("spectral embedding has %d all-zero rows", zero.size)
    return Embedding(V, zero)


def _sq_dists_to(points: np.ndarray, centers: np.ndarray) -> np.ndarray:
    # explicit differences rather than the Gram expansion: exact and
    # bit-reproducible, and the inputs here are small
    diff = points[:, None, :] - centers[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def kmeans_pp_seed(points: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = points.shape[0]
    idx = [int(rng.integers(n))]
    closest = _sq_dists_to(points, points[idx])[:, 0]
    for _ in range(1, k):
        total = closest.sum()
        if total <= 0:
            # every point coincides with a chosen center
            j = int(rng.integers(n))
        else:
            j = int(np.searchsorted(np.cumsum(closest), rng.random() * total, side="right"))
            j = min(j, n - 1)
        idx.append(j)
        closest = np.minimum(closest, _sq_dists_to(points, points[j : j + 1])[:, 0])
    return points[idx].copy()


def kmeans(points, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-10,
           history: list | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Lloyd's algorithm with k-means++ seeding.

    Returns ``(assignment, centers)``. When ``history`` is given, the
    total within-cluster cost after each assignment step is appended.
    Empty clusters are reseeded at the point farthest from its center.
    """
    P = check_matrix(points)
    n = P.shape[0]
    if k < 1:
        raise ValueError("k must be >= 1")
    if n < k:
        raise ValueError(f"too few points: {n} points for k={k}")
    rng = np.random.default_rng(seed)
    centers = kmeans_pp_seed(P, k, rng)
    assign = np.zeros(n, dtype=np.int64)
    for _ in range(max(int(max_iter), 1)):
        d2 = _sq_dists_to(P, centers)
        assign = np.argmin(d2, axis=1)
        point_cost = d2[np.arange(n), assign]
        counts = np.bincount(assign, minlength=k)
        for j in np.flatnonzero(counts == 0):
            donors = counts[assign] > 1
            far = int(np.argmax(np.where(donors, point_cost, -1.0)))
            counts[assign[far]] -= 1
            counts[j] = 1
            assign[far] = j
            centers[j] = P[far]
            point_cost[far] = 0.0
        if history is not None:
            history.append(float(point_cost.sum()))
        new_centers = centers.copy()
        for j in range(k):
            members = P[assign == j]
            if members.shape[0]:
                new_centers[j] = members.mean(axis=0)
        shift = np.sqrt(np.max(np.einsum("ij,ij->i", new_centers - centers, new_centers - centers)))
        centers = new_centers
        if shift <= tol:
            break
    return assign, centers


def resolve_kernel_sigma(X, kernel_sigma, k_max: int | None = None) -> float:
    """Turn a user setting (number, "median" or "auto") into a kernel width."""
    if isinstance(kernel_sigma, str):
        mode = kernel_sigma.lower()
    elif kernel_sigma is None:
        mode = "auto"
    else:
        sigma = float(kernel_sigma)
        if not sigma > 0:
            raise ValueError(f"kernel_sigma must be > 0, got {kernel_sigma}")
        return sigma
    X = check_matrix(X)
    med = median_sq_distance(X)
    if med <= 0:
        # most warm-up points coincide; fall back to the mean spread
        med = float(pdist(X, "sqeuclidean").mean())
        if med <= 0:
            return 1.0
    if mode == "median":
        return med
    if mode != "auto":
        raise ValueError(f"unknown kernel_sigma mode {kernel_sigma!r}")
    D2 = pairwise_sq_distances(X)
    kmax = default_k_max(X.shape[0]) if k_max is None else k_max
    # a far outlier would otherwise get all-zero weights at the median width
    nn = np.where(np.eye(len(D2), dtype=bool), np.inf, D2).min(axis=1)
    base = max(med, float(nn.max()) / MAX_NEIGHBOUR_EXPONENT)
    best_sigma, best_gap = base, -np.inf
    for j in range(AUTO_SIGMA_STEPS):
        sigma = base * 2.0 ** -j
        W = np.exp(-D2 / sigma)
        np.fill_diagonal(W, 0.0)
        # degrees shrink with sigma; past this point the graph shatters into
        # near-isolated vertices, which fakes large eigengaps
        if j > 0 and W.sum(axis=1).min() < AUTO_MIN_DEGREE:
            break
        ev = spectrum(normalized_laplacian(W))
        if ev[kmax] < FRAGMENTED_EIGENVALUE:
            # more than k_max near-disconnected components
            continue
        gap = eigengaps(ev, kmax).max()
        if gap > best_gap + 1e-12:
            best_sigma, best_gap = sigma, gap
    return best_sigma


def init_model(X, kernel_sigma=None, uncertainty_c: float = 1.0, k_max: int | None = None,
               seed: int = 0, max_iter: int = 300, tol: float = 1e-10,
               variance_normalization: str = "mean", report: dict | None = None) -> ModelState:
    """Build the initial cluster set from the warm-up frames ``X``.

    ``variance_normalization="sum"`` stores summed rather than averaged
    squared deviations per coordinate. If ``report`` is a dict it is
    filled with the chosen kernel width, spectrum, k and assignment.
    """
    X = check_matrix(X)
    n, d = X.shape
    if n < 2:
        raise ValueError("initial window too small")
    if variance_normalization not in ("mean", "sum"):
        raise ValueError(f"unknown variance_normalization {variance_normalization!r}")
    kmax = default_k_max(n) if k_max is None else int(k_max)
    sigma = resolve_kernel_sigma(X, kernel_sigma, kmax)
    L = normalized_laplacian(build_similarity(X, sigma))
    ev = spectrum(L)
    k = select_k_eigengap(ev, kmax)
    emb = spectral_embed(L, k)
    assign, _ = kmeans(emb.rows, k, seed=seed, max_iter=max_iter, tol=tol)

    model = ModelState(d, uncertainty_c, capacity=max(16, 2 * k))
    # relabel in order of first appearance so ids follow time
    remap: dict[int, int] = {}
    for a in assign:
        remap.setdefault(int(a), len(remap))
    labels = np.array([remap[int(a)] for a in assign], dtype=np.int64)
    for cid in range(len(remap)):
        members = X[labels == cid]
        center = members.mean(axis=0)
        var = members.var(axis=0)
        if variance_normalization == "sum":
            var = var * members.shape[0]
        model.add_cluster(center, np.mean(members * members, axis=0), var, members.shape[0])
    model.warmup_labels = tuple(int(v) for v in labels)
    log.debug("init: n=%d d=%d sigma=%g k=%d", n, d, sigma, model.n_clusters)
    if report is not None:
        report.update(kernel_sigma=sigma, eigenvalues=ev, k=k, assignment=labels)
    return model
