"""Fixed-length appearance descriptors computed from tactile frames.

Three descriptor families: raw image moments up to order 2, the seven
Hu invariants of the scale-normalized central moments, and Zernike
moment magnitudes on the unit disk.

Image axes follow one convention everywhere: x is the column index and
y is the row index, both 0-based.
"""

from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
import math

import numpy as np

from . import kernels
from .data import Exploration, TactileFrame


class DegenerateFrameError(ValueError):
    """The frame has zero total pressure, so normalization is undefined."""


class DescriptorKind(str, Enum):
    RAW_MOMENTS = "raw"
    HU_MOMENTS = "hu"
    ZERNIKE_MOMENTS = "zernike"


@dataclass(frozen=True)
class DescriptorConfig:
    """Which descriptor to extract and its knobs.

    normalize divides each frame by its peak pressure before extraction;
    off by default.
    """

    kind: DescriptorKind = DescriptorKind.ZERNIKE_MOMENTS
    zernike_max_order: int = 4
    normalize: bool = False

    def __post_init__(self):
        if self.zernike_max_order < 0:
            raise ValueError("zernike_max_order must be >= 0")

    @property
    def length(self) -> int:
        return descriptor_length(self.kind, self.zernike_max_order)


@dataclass(frozen=True, eq=False)
class Descriptor:
    kind: DescriptorKind
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(v)):
            raise ValueError("descriptor values must be finite")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __eq__(self, other):
        if not isinstance(other, Descriptor):
            return NotImplemented
        return self.kind == other.kind and np.array_equal(self.values, other.values)


def descriptor_length(kind: DescriptorKind, zernike_max_order: int = 4) -> int:
    if kind == DescriptorKind.RAW_MOMENTS:
        return 6
    if kind == DescriptorKind.HU_MOMENTS:
        return 7
    return len(zernike_pairs(zernike_max_order))


def zernike_order_for_length(length: int) -> int:
    """Invert descriptor_length for the Zernike family."""
    for order in range(0, 64):
        if descriptor_length(DescriptorKind.ZERNIKE_MOMENTS, order) == length:
            return order
    raise ValueError(f"no Zernike order yields a {length}-long descriptor")


# ---------------------------------------------------------------------------
# raw and central moments


def raw_moments(frame: TactileFrame) -> Descriptor:
    """(m00, m10, m01, m20, m11, m02) with m_pq = sum v(x, y) x^p y^q."""
    m = kernels.moments_upto3(frame.pressures)
    values = np.array([m[0, 0], m[1, 0], m[0, 1], m[2, 0], m[1, 1], m[0, 2]])
    return Descriptor(DescriptorKind.RAW_MOMENTS, values)


def central_moments(frame: TactileFrame):
    """Central moments mu_pq up to order 3 about the intensity centroid.

    Returned as (m00, xbar, ybar, mu) where mu is a (4, 4) array indexed
    [p, q]; mu00 = m00, mu10 = mu01 = 0.
    """
    m = kernels.moments_upto3(frame.pressures)
    m00 = m[0, 0]
    if m00 <= 0.0:
        raise DegenerateFrameError("frame has zero total pressure")
    xb = m[1, 0] / m00
    yb = m[0, 1] / m00
    mu = np.zeros((4, 4))
    mu[0, 0] = m00
    mu[2, 0] = m[2, 0] - xb * m[1, 0]
    mu[0, 2] = m[0, 2] - yb * m[0, 1]
    mu[1, 1] = m[1, 1] - xb * m[0, 1]
    mu[3, 0] = m[3, 0] - 3 * xb * m[2, 0] + 2 * xb * xb * m[1, 0]
    mu[0, 3] = m[0, 3] - 3 * yb * m[0, 2] + 2 * yb * yb * m[0, 1]
    mu[2, 1] = m[2, 1] - 2 * xb * m[1, 1] - yb * m[2, 0] + 2 * xb * xb * m[0, 1]
    mu[1, 2] = m[1, 2] - 2 * yb * m[1, 1] - xb * m[0, 2] + 2 * yb * yb * m[1, 0]
    return m00, xb, yb, mu


def normalized_central_moments(frame: TactileFrame) -> np.ndarray:
    """eta_pq = mu_pq / mu00^(1 + (p+q)/2) as a (4, 4) array for p+q in 2..3."""
    m00, _, _, mu = central_moments(frame)
    eta = np.zeros((4, 4))
    for p in range(4):
        for q in range(4):
            if 2 <= p + q <= 3:
                eta[p, q] = mu[p, q] / m00 ** (1.0 + (p + q) / 2.0)
    return eta


def hu_moments(frame: TactileFrame) -> Descriptor:
    """The seven classical Hu invariants of the normalized central moments."""
    eta = normalized_central_moments(frame)
    n20, n02, n11 = eta[2, 0], eta[0, 2], eta[1, 1]
    n30, n03, n21, n12 = eta[3, 0], eta[0, 3], eta[2, 1], eta[1, 2]
    a = n30 + n12
    b = n21 + n03
    c = n30 - 3 * n12
    d = 3 * n21 - n03
    phi = np.array([
        n20 + n02,
        (n20 - n02) ** 2 + 4 * n11 ** 2,
        c ** 2 + d ** 2,
        a ** 2 + b ** 2,
        c * a * (a ** 2 - 3 * b ** 2) + d * b * (3 * a ** 2 - b ** 2),
        (n20 - n02) * (a ** 2 - b ** 2) + 4 * n11 * a * b,
        d * a * (a ** 2 - 3 * b ** 2) - c * b * (3 * a ** 2 - b ** 2),
    ])
    return Descriptor(DescriptorKind.HU_MOMENTS, phi)


# ---------------------------------------------------------------------------
# Zernike moments


@lru_cache(maxsize=None)
def zernike_pairs(max_order: int):
    """All (n, m) with 0 <= m <= n <= max_order and n - m even."""
    return tuple((n, m) for n in range(max_order + 1)
                 for m in range(n % 2, n + 1, 2))


@lru_cache(maxsize=None)
def _zernike_tables(max_order: int):
    pairs = zernike_pairs(max_order)
    n_arr = np.array([n for n, _ in pairs], dtype=np.int64)
    m_arr = np.array([m for _, m in pairs], dtype=np.int64)
    smax = max((n - m) // 2 for n, m in pairs) + 1
    coefs = np.zeros((len(pairs), smax))
    for j, (n, m) in enumerate(pairs):
        for s in range((n - m) // 2 + 1):
            coefs[j, s] = ((-1) ** s * math.factorial(n - s)
                           / (math.factorial(s)
                              * math.factorial((n + m) // 2 - s)
                              * math.factorial((n - m) // 2 - s)))
    return n_arr, m_arr, coefs


def zernike_moments(frame: TactileFrame, max_order: int = 4) -> Descriptor:
    """Magnitudes |A_nm| for n <= max_order, n - m even.

    The grid is mapped into the unit disk centered on the intensity
    centroid; the disk radius is the largest distance from the centroid
    to any pixel of the grid, so every pixel lies inside.  A_nm =
    (n+1)/pi * sum f(x, y) V*_nm(rho, theta).
    """
    if max_order < 0:
        raise ValueError("max_order must be >= 0")
    p = frame.pressures
    m = kernels.moments_upto3(p)
    m00 = m[0, 0]
    if m00 <= 0.0:
        raise DegenerateFrameError("frame has zero total pressure")
    cx = m[1, 0] / m00
    cy = m[0, 1] / m00
    rows, cols = p.shape
    corners = ((0.0, 0.0), (0.0, cols - 1.0), (rows - 1.0, 0.0),
               (rows - 1.0, cols - 1.0))
    radius = math.sqrt(max((x - cx) ** 2 + (y - cy) ** 2 for y, x in corners))
    if radius == 0.0:  # 1x1 grid
        radius = 1.0
    n_arr, m_arr, coefs = _zernike_tables(max_order)
    values = kernels.zernike_accumulate(p, cx, cy, radius, n_arr, m_arr, coefs)
    return Descriptor(DescriptorKind.ZERNIKE_MOMENTS, values)


# ---------------------------------------------------------------------------
# per-exploration extraction


def compute_descriptor(frame: TactileFrame, cfg: DescriptorConfig) -> Descriptor:
    if cfg.normalize:
        peak = float(frame.pressures.max())
        if peak > 0.0:
            frame = TactileFrame(frame.pressures / peak)
    if cfg.kind == DescriptorKind.RAW_MOMENTS:
        return raw_moments(frame)
    if cfg.kind == DescriptorKind.HU_MOMENTS:
        return hu_moments(frame)
    return zernike_moments(frame, cfg.zernike_max_order)


def describe_samples(samples, cfg: DescriptorConfig):
    """Descriptors paired with contact positions, in sample order.

    Frames that fail the descriptor precondition (zero total pressure
    for the normalized families) are skipped; idle-load frames at the
    start of an exploration are expected.  Returns (entries, skipped)
    where entries is a list of (Descriptor, position).
    """
    entries = []
    skipped = 0
    for s in samples:
        try:
            d = compute_descriptor(s.frame, cfg)
        except DegenerateFrameError:
            skipped += 1
            continue
        entries.append((d, s.position))
    return entries, skipped


def describe_exploration(e: Exploration, cfg: DescriptorConfig):
    return describe_samples(e.samples, cfg)
