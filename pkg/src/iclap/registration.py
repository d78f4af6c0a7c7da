"""Rigid registration in 3 or 4 dimensions: closed-form SVD alignment,
exact k-d tree nearest-neighbor search, and the iterative closest
(labeled) point loop.

The alignment minimizes the sum of squared matched-pair distances; the
reported registration error is the RMS distance of the matched pairs.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import kernels
from .data import Cloud


@dataclass(frozen=True, eq=False)
class RigidTransform:
    """Proper rotation plus translation in dim = 3 or 4."""

    rotation: np.ndarray
    translation: np.ndarray

    def __post_init__(self):
        R = np.ascontiguousarray(self.rotation, dtype=np.float64)
        T = np.ascontiguousarray(self.translation, dtype=np.float64)
        d = T.shape[0]
        if d not in (3, 4) or R.shape != (d, d):
            raise ValueError("rotation must be dxd and translation length d, "
                             "d in (3, 4)")
        if np.abs(R.T @ R - np.eye(d)).max() > 1e-9:
            raise ValueError("rotation matrix is not orthogonal")
        if abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise ValueError("rotation matrix is not proper (det != +1)")
        R.flags.writeable = False
        T.flags.writeable = False
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", T)

    @property
    def dim(self) -> int:
        return self.translation.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "RigidTransform":
        return cls(np.eye(dim), np.zeros(dim))

    def apply(self, points: np.ndarray) -> np.ndarray:
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation


class StopReason(Enum):
    ABS_TOLERANCE = "abs_tolerance"
    MAX_ITERS = "max_iters"
    REL_CHANGE = "rel_change"


_STOP_BY_CODE = {0: StopReason.ABS_TOLERANCE, 1: StopReason.MAX_ITERS,
                 2: StopReason.REL_CHANGE}


@dataclass(frozen=True)
class IcpParams:
    max_iters: int = 50
    abs_tolerance: float = 1e-6
    rel_change_threshold: float = 1e-4
    init: RigidTransform | None = None

    REL_EPS = 1e-12

    def __post_init__(self):
        if self.max_iters <= 0:
            raise ValueError("max_iters must be positive")
        if not (np.isfinite(self.abs_tolerance) and self.abs_tolerance >= 0):
            raise ValueError("abs_tolerance must be finite and >= 0")
        if not (np.isfinite(self.rel_change_threshold)
                and self.rel_change_threshold >= 0):
            raise ValueError("rel_change_threshold must be finite and >= 0")


@dataclass(frozen=True, eq=False)
class RegistrationResult:
    transform: RigidTransform
    error: float
    iterations: int
    stop_reason: StopReason
    error_trace: tuple


def _cloud_points(c) -> np.ndarray:
    if isinstance(c, Cloud):
        return c.points
    return np.ascontiguousarray(c, dtype=np.float64)


def centroid(cloud) -> np.ndarray:
    """Component-wise mean of the cloud's points."""
    pts = _cloud_points(cloud)
    if pts.shape[0] == 0:
        raise ValueError("cloud is empty")
    return pts.mean(axis=0)


def cross_covariance(P, Q) -> np.ndarray:
    """H = sum p'_i q'_i^T over deviations from the two centroids."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    if P.shape != Q.shape or P.shape[0] == 0:
        raise ValueError("matched point lists must have equal non-zero length")
    return (P - P.mean(axis=0)).T @ (Q - Q.mean(axis=0))


def kabsch(P, Q) -> RigidTransform:
    """Optimal rigid alignment of matched point lists P onto Q.

    Minimizes sum ||R p_i + T - q_i||^2 over proper rotations; the SVD
    reflection case is corrected by flipping the smallest singular
    direction.  A zero cross-covariance yields R = I with the centroid
    translation.
    """
    P = np.ascontiguousarray(P, dtype=np.float64)
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    if P.ndim != 2 or P.shape != Q.shape:
        raise ValueError("P and Q must be (n, d) arrays of equal shape")
    if P.shape[0] == 0:
        raise ValueError("matched point lists must be non-empty")
    if P.shape[1] not in (3, 4):
        raise ValueError("dim must be 3 or 4")
    R, T = kernels.kabsch_solve(P, Q)
    return RigidTransform(R, T)


def random_rotation(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Random proper rotation: sign-fixed QR of a Gaussian matrix."""
    A = rng.normal(size=(dim, dim))
    Q, R = np.linalg.qr(A)
    Q = Q * np.sign(np.diag(R))
    if np.linalg.det(Q) < 0:
        Q[:, 0] = -Q[:, 0]
    return Q


def trace_optimality_check(H, R: RigidTransform | np.ndarray,
                           trials: int = 500, seed: int = 0) -> bool:
    """Verify the alignment rotation maximizes tr(R H) among proper
    rotations and stays below the singular-value bound tr(sqrt(H^T H))."""
    H = np.asarray(H, dtype=np.float64)
    Rm = R.rotation if isinstance(R, RigidTransform) else np.asarray(R, float)
    if Rm.shape != H.shape:
        raise ValueError("H and R dims disagree")
    achieved = float(np.trace(Rm @ H))
    bound = float(np.linalg.svd(H, compute_uv=False).sum())
    if achieved > bound + 1e-9:
        return False
    rng = np.random.default_rng(seed)
    for _ in range(trials):
        Rr = random_rotation(H.shape[0], rng)
        if achieved < float(np.trace(Rr @ H)) - 1e-9:
            return False
    return True


# ---------------------------------------------------------------------------
# k-d tree


class KdTree:
    """Balanced median-split k-d tree with exact nearest-neighbor queries.

    The splitting dimension cycles x, y, z(, w) by depth; even-sized
    node sets split at the lower median.  Immutable after construction.
    """

    def __init__(self, cloud):
        pts = _cloud_points(cloud)
        if pts.ndim != 2 or pts.shape[0] == 0:
            raise ValueError("tree needs a non-empty (n, dim) point set")
        self.points = np.ascontiguousarray(pts)
        n, dim = pts.shape
        node_point = np.empty(n, np.int64)
        node_axis = np.empty(n, np.int64)
        node_left = np.full(n, -1, np.int64)
        node_right = np.full(n, -1, np.int64)
        counter = 0

        def build(idx: np.ndarray, depth: int) -> int:
            nonlocal counter
            if idx.size == 0:
                return -1
            axis = depth % dim
            idx = idx[np.argsort(self.points[idx, axis], kind="stable")]
            mid = (idx.size - 1) // 2
            node = counter
            counter += 1
            node_point[node] = idx[mid]
            node_axis[node] = axis
            node_left[node] = build(idx[:mid], depth + 1)
            node_right[node] = build(idx[mid + 1:], depth + 1)
            return node

        build(np.arange(n, dtype=np.int64), 0)
        self.node_point = node_point
        self.node_axis = node_axis
        self.node_left = node_left
        self.node_right = node_right

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def query(self, queries: np.ndarray):
        """Exact nearest neighbors of the query rows.

        Returns (indices, distances); distance ties resolve to the
        lowest point index, matching a linear scan.
        """
        q = np.ascontiguousarray(np.atleast_2d(np.asarray(queries, float)))
        if q.shape[1] != self.dim:
            raise ValueError(f"query dim {q.shape[1]} != tree dim {self.dim}")
        idx, d2 = kernels.kd_query(self.points, self.node_point,
                                   self.node_axis, self.node_left,
                                   self.node_right, q)
        return idx, np.sqrt(d2)


def build_kdtree(cloud) -> KdTree:
    return KdTree(cloud)


def nearest(tree: KdTree, query):
    """(point, index, distance) of the exact nearest neighbor of query."""
    query = np.asarray(query, dtype=np.float64)
    if query.shape != (tree.dim,):
        raise ValueError(f"query must be a {tree.dim}-vector")
    idx, dist = tree.query(query[None, :])
    i = int(idx[0])
    return tree.points[i], i, float(dist[0])


# ---------------------------------------------------------------------------
# iterative closest (labeled) point


def icp_register(test, model, params: IcpParams = IcpParams(), *,
                 model_tree: KdTree | None = None) -> RegistrationResult:
    """Iteratively match test points to their nearest model points and
    re-solve the rigid alignment until a termination rule fires.

    Default initialization aligns the test centroid with the model
    centroid (R = I); pass params.init for an explicit start, e.g.
    RigidTransform.identity(dim).  The per-iteration RMS error trace is
    non-increasing.
    """
    tp = _cloud_points(test)
    mp = _cloud_points(model)
    if tp.shape[0] == 0 or mp.shape[0] == 0:
        raise ValueError("clouds must be non-empty")
    if tp.shape[1] != mp.shape[1]:
        raise ValueError("test and model clouds must share dim")
    if tp.shape[1] not in (3, 4):
        raise ValueError("dim must be 3 or 4")
    d = tp.shape[1]
    if model_tree is None:
        model_tree = KdTree(mp)
    elif model_tree.dim != d or model_tree.points.shape[0] != mp.shape[0]:
        raise ValueError("model_tree does not match the model cloud")
    if params.init is not None:
        if params.init.dim != d:
            raise ValueError("init transform dim mismatch")
        R0 = params.init.rotation.copy()
        T0 = params.init.translation.copy()
    else:
        R0 = np.eye(d)
        T0 = mp.mean(axis=0) - tp.mean(axis=0)
    R, T, trace, iters, code = kernels.icp_run(
        np.ascontiguousarray(tp), model_tree.points,
        model_tree.node_point, model_tree.node_axis,
        model_tree.node_left, model_tree.node_right,
        R0, T0, params.max_iters, params.abs_tolerance,
        params.rel_change_threshold, params.REL_EPS)
    trace = tuple(float(v) for v in trace[:iters])
    return RegistrationResult(transform=RigidTransform(R, T),
                              error=trace[-1], iterations=iters,
                              stop_reason=_STOP_BY_CODE[int(code)],
                              error_trace=trace)


def iclap_distance(test4, model4, params: IcpParams = IcpParams(), *,
                   model_tree: KdTree | None = None) -> float:
    """Registration error of the 4-D labeled test cloud against a model."""
    return icp_register(test4, model4, params, model_tree=model_tree).error
