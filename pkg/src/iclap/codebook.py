"""k-means dictionary of tactile features, word-label assignment, and
bag-of-words histograms."""

from dataclasses import dataclass, field

import numpy as np

from . import kernels
from .data import Cloud, atomic_write_text, fmt
from .descriptors import DescriptorKind


class InfeasibleClusteringError(ValueError):
    """Fewer distinct descriptors than requested clusters."""


@dataclass(frozen=True, eq=False)
class Codebook:
    """k centroids over descriptor space; word labels are 1-based indices.

    norm_mean/norm_std hold the per-dimension standardization applied
    before clustering (None when standardization was off); queries are
    standardized the same way before assignment.
    """

    centroids: np.ndarray
    kind: DescriptorKind
    norm_mean: np.ndarray | None = None
    norm_std: np.ndarray | None = None
    inertia_trace: tuple = field(default=(), compare=False)

    def __post_init__(self):
        c = np.ascontiguousarray(self.centroids, dtype=np.float64)
        if c.ndim != 2 or c.shape[0] == 0:
            raise ValueError("centroids must be a non-empty (k, dim) array")
        if not np.all(np.isfinite(c)):
            raise ValueError("centroids must be finite")
        if len(np.unique(c, axis=0)) != c.shape[0]:
            raise ValueError("centroids must be pairwise distinct")
        c.flags.writeable = False
        object.__setattr__(self, "centroids", c)

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    @property
    def dim(self) -> int:
        return self.centroids.shape[1]

    def _standardize(self, X: np.ndarray) -> np.ndarray:
        if self.norm_mean is None:
            return X
        return (X - self.norm_mean) / self.norm_std


@dataclass(frozen=True, eq=False)
class BowHistogram:
    """Relative frequency of each word label; bins sum to 1."""

    bins: np.ndarray

    def __post_init__(self):
        b = np.ascontiguousarray(self.bins, dtype=np.float64)
        if b.ndim != 1 or b.size == 0:
            raise ValueError("histogram must be a non-empty vector")
        if np.any(b < 0):
            raise ValueError("histogram bins must be non-negative")
        if abs(b.sum() - 1.0) > 1e-9:
            raise ValueError("histogram bins must sum to 1")
        b.flags.writeable = False
        object.__setattr__(self, "bins", b)

    @property
    def k(self) -> int:
        return self.bins.shape[0]

    def __eq__(self, other):
        if not isinstance(other, BowHistogram):
            return NotImplemented
        return np.array_equal(self.bins, other.bins)


def _as_matrix(descriptors) -> np.ndarray:
    rows = []
    for d in descriptors:
        rows.append(d.values if hasattr(d, "values") else np.asarray(d, float))
    if not rows:
        raise ValueError("descriptor list is empty")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ValueError("descriptors must all have the same length")
    return np.array(rows, dtype=np.float64)


def _kmeans_pp_init(X: np.ndarray, k: int, rng: np.random.Generator) -> np.ndarray:
    n = X.shape[0]
    centroids = np.empty((k, X.shape[1]))
    first = int(rng.integers(n))
    centroids[0] = X[first]
    d2 = ((X - centroids[0]) ** 2).sum(axis=1)
    for j in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            # all remaining points coincide with chosen centroids
            raise InfeasibleClusteringError(
                "fewer distinct descriptors than clusters")
        r = rng.random() * total
        idx = int(np.searchsorted(np.cumsum(d2), r, side="right"))
        idx = min(idx, n - 1)
        centroids[j] = X[idx]
        d2 = np.minimum(d2, ((X - centroids[j]) ** 2).sum(axis=1))
    return centroids


def kmeans_fit(descriptors, k: int, seed: int = 0, max_iters: int = 100, *,
               kind: DescriptorKind = DescriptorKind.ZERNIKE_MOMENTS,
               standardize: bool = False) -> Codebook:
    """Lloyd's algorithm with k-means++ seeding from the given seed.

    Deterministic for fixed inputs.  Stops when no assignment changes
    or after max_iters; the per-iteration inertia is recorded on the
    returned codebook and is non-increasing.  Empty clusters are
    reseeded at the point farthest from its nearest centroid so the
    label space keeps exactly k words.
    """
    if k <= 0:
        raise ValueError("k must be positive")
    if max_iters <= 0:
        raise ValueError("max_iters must be positive")
    X = _as_matrix(descriptors)
    if X.shape[0] < k:
        raise InfeasibleClusteringError(
            f"need at least k={k} descriptors, got {X.shape[0]}")
    if len(np.unique(X, axis=0)) < k:
        raise InfeasibleClusteringError(
            "fewer distinct descriptors than clusters")
    mean = std = None
    if standardize:
        mean = X.mean(axis=0)
        std = X.std(axis=0)
        std = np.where(std > 0, std, 1.0)
        X = (X - mean) / std
    rng = np.random.default_rng(seed)
    C = _kmeans_pp_init(X, k, rng)
    trace = []
    prev_labels = None
    for _ in range(max_iters):
        labels, d2 = kernels.assign_nearest(X, C)
        trace.append(float(d2.sum()))
        if prev_labels is not None and np.array_equal(labels, prev_labels):
            break
        prev_labels = labels
        counts = np.bincount(labels, minlength=k).astype(np.float64)
        sums = np.zeros_like(C)
        np.add.at(sums, labels, X)
        nonempty = counts > 0
        C[nonempty] = sums[nonempty] / counts[nonempty, None]
        if not np.all(nonempty):
            spare = d2.copy()
            for j in np.flatnonzero(~nonempty):
                far = int(np.argmax(spare))
                C[j] = X[far]
                spare[far] = 0.0
    return Codebook(C, kind, norm_mean=mean, norm_std=std,
                    inertia_trace=tuple(trace))


def assign_label(cb: Codebook, descriptor) -> int:
    """1-based index of the nearest centroid; ties go to the lowest index."""
    v = descriptor.values if hasattr(descriptor, "values") else np.asarray(
        descriptor, dtype=np.float64)
    if v.shape != (cb.dim,):
        raise ValueError(f"descriptor length {v.shape} does not match "
                         f"codebook dim {cb.dim}")
    X = cb._standardize(np.asarray(v, dtype=np.float64).reshape(1, -1))
    labels, _ = kernels.assign_nearest(np.ascontiguousarray(X), cb.centroids)
    return int(labels[0]) + 1


def assign_labels(cb: Codebook, descriptors) -> np.ndarray:
    """Vectorized assign_label over a descriptor list (1-based labels)."""
    X = cb._standardize(_as_matrix(descriptors))
    if X.shape[1] != cb.dim:
        raise ValueError("descriptor length does not match codebook dim")
    labels, _ = kernels.assign_nearest(np.ascontiguousarray(X), cb.centroids)
    return labels + 1


def bow_histogram(labels, k: int) -> BowHistogram:
    labels = np.asarray(labels, dtype=np.int64)
    if labels.size == 0:
        raise ValueError("label list is empty")
    if np.any(labels < 1) or np.any(labels > k):
        raise ValueError(f"labels must lie in 1..{k}")
    counts = np.bincount(labels - 1, minlength=k).astype(np.float64)
    return BowHistogram(counts / counts.sum())


def build_labeled_cloud(entries, cb: Codebook, w_scale: float = 1.0) -> Cloud:
    """4-D cloud from (descriptor, position) entries: (x, y, z, w_scale*label).

    Entry order is preserved.  w_scale = 0 collapses the label axis and
    degenerates matching toward position-only behavior.
    """
    if not entries:
        raise ValueError("no entries to build a cloud from")
    labels = assign_labels(cb, [d for d, _ in entries])
    points = np.empty((len(entries), 4))
    for i, (_, pos) in enumerate(entries):
        points[i, :3] = pos
        points[i, 3] = w_scale * labels[i]
    return Cloud(points)


# ---------------------------------------------------------------------------
# codebook file format
#
#   codebook k=<k> dim=<dim> kind=<kind>
#   [norm <mean_1> ... <mean_dim>]        only when standardization was on
#   [scale <std_1> ... <std_dim>]
#   <centroid line> x k


def serialize_codebook(cb: Codebook) -> str:
    lines = [f"codebook k={cb.k} dim={cb.dim} kind={cb.kind.value}"]
    if cb.norm_mean is not None:
        lines.append("norm " + " ".join(fmt(v) for v in cb.norm_mean))
        lines.append("scale " + " ".join(fmt(v) for v in cb.norm_std))
    for row in cb.centroids:
        lines.append(" ".join(fmt(v) for v in row))
    return "\n".join(lines) + "\n"


def parse_codebook(text: str) -> Codebook:
    lines = [ln.strip() for ln in text.splitlines()
             if ln.strip() and not ln.startswith("#")]
    if not lines or not lines[0].startswith("codebook "):
        raise ValueError("missing codebook header")
    header = dict(tok.split("=", 1) for tok in lines[0].split()[1:])
    k, dim = int(header["k"]), int(header["dim"])
    kind = DescriptorKind(header["kind"])
    body = lines[1:]
    mean = std = None
    while body and body[0].split()[0] in ("norm", "scale"):
        tag, *vals = body.pop(0).split()
        vec = np.array([float(v) for v in vals])
        if tag == "norm":
            mean = vec
        else:
            std = vec
    rows = [np.array([float(t) for t in ln.split()]) for ln in body]
    if len(rows) != k or any(r.shape != (dim,) for r in rows):
        raise ValueError("centroid block does not match header")
    return Codebook(np.array(rows), kind, norm_mean=mean, norm_std=std)


def save_codebook(cb: Codebook, path) -> None:
    atomic_write_text(path, serialize_codebook(cb))


def load_codebook(path) -> Codebook:
    with open(path, encoding="utf-8") as fh:
        return parse_codebook(fh.read())
