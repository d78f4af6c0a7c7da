"""Deterministic synthetic stand-in for a real touch dataset: parametric
objects with planar footprints, height fields, and local texture
patterns, explored by simulated touches.

The standard benchmark is built around deliberately confusable pairs:
objects sharing geometry but differing in texture (invisible to a
position-only matcher) and objects sharing texture but differing in
size (invisible to an appearance-only matcher).
"""

from dataclasses import dataclass
import math

import numpy as np

from .data import Dataset, Exploration, TactileFrame, TouchSample


# --- footprints (centered on the origin, mm) ---


@dataclass(frozen=True)
class RectFootprint:
    width: float
    height: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError("footprint dimensions must be positive")

    def contains(self, x, y):
        return abs(x) <= self.width / 2 and abs(y) <= self.height / 2

    def sample(self, rng):
        return (rng.uniform(-self.width / 2, self.width / 2),
                rng.uniform(-self.height / 2, self.height / 2))


@dataclass(frozen=True)
class DiskFootprint:
    radius: float

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("footprint radius must be positive")

    def contains(self, x, y):
        return x * x + y * y <= self.radius ** 2

    def sample(self, rng):
        r = self.radius * math.sqrt(rng.uniform(0.0, 1.0))
        phi = rng.uniform(0.0, 2.0 * math.pi)
        return r * math.cos(phi), r * math.sin(phi)


# --- height fields ---


@dataclass(frozen=True)
class Flat:
    def height(self, x, y):
        return 0.0


@dataclass(frozen=True)
class Hemisphere:
    radius: float

    def height(self, x, y):
        return math.sqrt(max(self.radius ** 2 - x * x - y * y, 0.0))


@dataclass(frozen=True)
class Ridge:
    """Linear ridge running along the given axis direction (degrees)."""

    axis_deg: float
    width: float

    def height(self, x, y):
        theta = math.radians(self.axis_deg)
        s = -x * math.sin(theta) + y * math.cos(theta)
        return (self.width / 4.0) * max(0.0, 1.0 - abs(s) / (self.width / 2.0))


# --- textures (intensity fields over the plane) ---


@dataclass(frozen=True)
class Dots:
    """Gaussian blobs on a square lattice."""

    pitch: float
    sigma: float

    def intensity(self, x, y):
        fx = x - self.pitch * round(x / self.pitch)
        fy = y - self.pitch * round(y / self.pitch)
        return math.exp(-(fx * fx + fy * fy) / (2.0 * self.sigma ** 2))


@dataclass(frozen=True)
class Bars:
    """Smooth parallel stripes."""

    orientation_deg: float
    pitch: float

    def intensity(self, x, y):
        theta = math.radians(self.orientation_deg)
        s = x * math.cos(theta) + y * math.sin(theta)
        return 0.5 * (1.0 + math.cos(2.0 * math.pi * s / self.pitch))


@dataclass(frozen=True)
class Ring:
    """A single annulus around the footprint center."""

    radius: float
    sigma: float = 1.5

    def intensity(self, x, y):
        r = math.hypot(x, y)
        return math.exp(-((r - self.radius) ** 2) / (2.0 * self.sigma ** 2))


@dataclass(frozen=True)
class Blank:
    def intensity(self, x, y):
        return 0.0


@dataclass(frozen=True)
class SynthObjectSpec:
    object_id: str
    footprint: object
    height_field: object
    texture: object
    pressure_gain: float = 1.0

    def __post_init__(self):
        if self.pressure_gain <= 0:
            raise ValueError("pressure_gain must be positive")


@dataclass(frozen=True)
class ExplorationSpec:
    """How an object is explored: touches, noise, and sensor geometry.

    cell_pitch defaults to the 3.4 mm spacing of the reference sensor.
    """

    n_touches: int = 60
    position_noise: float = 0.0
    pressure_noise: float = 0.0
    seed: int = 0
    sensor_rows: int = 14
    sensor_cols: int = 6
    cell_pitch: float = 3.4

    def __post_init__(self):
        if self.n_touches <= 0:
            raise ValueError("n_touches must be positive")
        if self.position_noise < 0 or self.pressure_noise < 0:
            raise ValueError("noise sigma must be >= 0")
        if self.sensor_rows <= 0 or self.sensor_cols <= 0:
            raise ValueError("sensor dims must be positive")


def render_touch(spec: SynthObjectSpec, contact_xy, espec: ExplorationSpec,
                 rng: np.random.Generator) -> TouchSample:
    """Simulate one touch: sample the texture on the sensor grid centered
    at the contact, and read the position off the height field.

    The texture field extends past the footprint edge, so frames near
    the rim stay statistically identical to interior ones; the designed
    benchmark asymmetries rely on that.
    """
    x, y = float(contact_xy[0]), float(contact_xy[1])
    if not spec.footprint.contains(x, y):
        raise ValueError(f"contact ({x}, {y}) lies outside the footprint")
    rows, cols = espec.sensor_rows, espec.sensor_cols
    frame = np.empty((rows, cols))
    for r in range(rows):
        dv = (r - (rows - 1) / 2.0) * espec.cell_pitch
        for c in range(cols):
            du = (c - (cols - 1) / 2.0) * espec.cell_pitch
            frame[r, c] = spec.pressure_gain * spec.texture.intensity(
                x + du, y + dv)
    if espec.pressure_noise > 0:
        frame = frame + rng.normal(0.0, espec.pressure_noise, frame.shape)
    frame = np.maximum(frame, 0.0)
    position = np.array([x, y, spec.height_field.height(x, y)])
    if espec.position_noise > 0:
        position = position + rng.normal(0.0, espec.position_noise, 3)
    return TouchSample(position, TactileFrame(frame))


def generate_exploration(spec: SynthObjectSpec,
                         espec: ExplorationSpec) -> Exploration:
    """n_touches contacts drawn uniformly over the footprint, in draw order."""
    rng = np.random.default_rng(espec.seed)
    samples = []
    for _ in range(espec.n_touches):
        contact = spec.footprint.sample(rng)
        samples.append(render_touch(spec, contact, espec, rng))
    return Exploration(spec.object_id, tuple(samples))


# ---------------------------------------------------------------------------
# standard benchmark catalog

GEOMETRY_TWIN_PAIR = ("plate_dots", "plate_bars")
TEXTURE_TWIN_PAIR = ("dome_dots_small", "dome_dots_large")


def _catalog(n_objects: int):
    # Textures come from a small palette shared across objects, so
    # appearance alone cannot separate everything; geometry twins share
    # a footprint and differ only in texture, texture twins share a
    # texture and differ only in size.
    base = [
        SynthObjectSpec("plate_dots", RectFootprint(60, 40), Flat(),
                        Dots(pitch=9, sigma=1.8)),
        SynthObjectSpec("plate_bars", RectFootprint(60, 40), Flat(),
                        Bars(orientation_deg=0, pitch=10)),
        SynthObjectSpec("dome_dots_small", DiskFootprint(18), Hemisphere(22),
                        Dots(pitch=9, sigma=1.8)),
        SynthObjectSpec("dome_dots_large", DiskFootprint(32), Hemisphere(38),
                        Dots(pitch=9, sigma=1.8)),
        SynthObjectSpec("dome_ring", DiskFootprint(26), Hemisphere(32),
                        Ring(radius=13)),
        SynthObjectSpec("ridge_bars", RectFootprint(76, 30),
                        Ridge(axis_deg=0, width=18),
                        Bars(orientation_deg=90, pitch=10)),
        SynthObjectSpec("ridge_dots", RectFootprint(48, 22),
                        Ridge(axis_deg=90, width=14),
                        Dots(pitch=6.5, sigma=1.2)),
        SynthObjectSpec("disk_rings", DiskFootprint(20), Flat(),
                        Ring(radius=11)),
        SynthObjectSpec("bar_small", RectFootprint(34, 24), Flat(),
                        Bars(orientation_deg=30, pitch=14)),
        SynthObjectSpec("blob_plate", RectFootprint(56, 34), Flat(),
                        Dots(pitch=13, sigma=3.2)),
    ]
    extra = [
        SynthObjectSpec("plate_rings", RectFootprint(60, 40), Flat(),
                        Ring(radius=13)),
        SynthObjectSpec("bar_tiny", RectFootprint(26, 18), Flat(),
                        Bars(orientation_deg=30, pitch=14)),
        SynthObjectSpec("dome_bars", DiskFootprint(25), Hemisphere(30),
                        Bars(orientation_deg=45, pitch=10)),
        SynthObjectSpec("disk_bars", DiskFootprint(32), Flat(),
                        Bars(orientation_deg=120, pitch=10)),
        SynthObjectSpec("ridge_rings", RectFootprint(64, 26),
                        Ridge(axis_deg=0, width=16), Ring(radius=13)),
        SynthObjectSpec("plate_dots_fine", RectFootprint(56, 36), Flat(),
                        Dots(pitch=6.5, sigma=1.2)),
        SynthObjectSpec("disk_dots_small", DiskFootprint(16), Flat(),
                        Dots(pitch=9, sigma=1.8)),
        SynthObjectSpec("disk_dots_large", DiskFootprint(34), Flat(),
                        Dots(pitch=9, sigma=1.8)),
        SynthObjectSpec("dome_bars_steep", DiskFootprint(22), Hemisphere(24),
                        Bars(orientation_deg=75, pitch=10)),
        SynthObjectSpec("bar_wide", RectFootprint(70, 20), Flat(),
                        Bars(orientation_deg=150, pitch=14)),
    ]
    if n_objects == 10:
        return base
    if n_objects == 20:
        return base + extra
    raise ValueError("catalog supports 10 or 20 objects")


def standard_benchmark(seed: int = 1, n_objects: int = 10,
                       explorations_per_object: int = 5,
                       touches_per_exploration: int = 60) -> Dataset:
    """Fixed catalog of confusable objects, each explored several times.

    Fully deterministic from the seed; per-exploration generators are
    derived from (seed, object index, exploration index).
    """
    specs = _catalog(n_objects)
    object_ids = tuple(s.object_id for s in specs)
    display = {s.object_id: s.object_id.replace("_", " ") for s in specs}
    explorations = {}
    for oi, spec in enumerate(specs):
        runs = []
        for ei in range(explorations_per_object):
            espec = ExplorationSpec(
                n_touches=touches_per_exploration,
                position_noise=0.3,
                pressure_noise=0.02,
                seed=np.random.SeedSequence([seed, oi, ei]).generate_state(1)[0],
            )
            runs.append(generate_exploration(spec, espec))
        explorations[spec.object_id] = tuple(runs)
    return Dataset(object_ids, display, explorations)
