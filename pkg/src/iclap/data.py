"""Core data model: pressure frames, touch samples, explorations, point
clouds, and the line-oriented dataset file formats.

All containers are immutable after construction (arrays are marked
read-only) and safe to share across threads.
"""

from dataclasses import dataclass, field
from pathlib import Path
import os
import tempfile

import numpy as np


class ParseError(ValueError):
    """A dataset file violated the touch-file format; carries the line number."""

    def __init__(self, line_no: int, message: str):
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


def fmt(x: float) -> str:
    """Canonical decimal form: shortest string that round-trips the value."""
    return repr(float(x))


def _freeze(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class TactileFrame:
    """One pressure image from the sensor array (default grid is 14x6)."""

    pressures: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.pressures, dtype=np.float64)
        if p.ndim != 2 or p.size == 0:
            raise ValueError("pressures must be a non-empty 2-D array")
        if not np.all(np.isfinite(p)):
            raise ValueError("pressures must be finite")
        if np.any(p < 0):
            raise ValueError("pressures must be non-negative")
        object.__setattr__(self, "pressures", _freeze(p))

    @property
    def rows(self) -> int:
        return self.pressures.shape[0]

    @property
    def cols(self) -> int:
        return self.pressures.shape[1]

    def __eq__(self, other):
        if not isinstance(other, TactileFrame):
            return NotImplemented
        return (self.pressures.shape == other.pressures.shape
                and np.array_equal(self.pressures, other.pressures))


@dataclass(frozen=True, eq=False)
class TouchSample:
    """A tactile frame together with the 3-D sensor position (mm)."""

    position: np.ndarray
    frame: TactileFrame

    def __post_init__(self):
        pos = np.asarray(self.position, dtype=np.float64)
        if pos.shape != (3,):
            raise ValueError("position must be a 3-vector")
        if not np.all(np.isfinite(pos)):
            raise ValueError("position must be finite")
        object.__setattr__(self, "position", _freeze(pos))

    def __eq__(self, other):
        if not isinstance(other, TouchSample):
            return NotImplemented
        return (np.array_equal(self.position, other.position)
                and self.frame == other.frame)


@dataclass(frozen=True, eq=False)
class Exploration:
    """One recorded exploration of an object: an ordered list of touches."""

    object_id: str
    samples: tuple

    def __post_init__(self):
        samples = tuple(self.samples)
        if not samples:
            raise ValueError("exploration must contain at least one sample")
        shape = samples[0].frame.pressures.shape
        for s in samples[1:]:
            if s.frame.pressures.shape != shape:
                raise ValueError("all frames in an exploration must share dims")
        object.__setattr__(self, "samples", samples)

    @property
    def frame_dims(self):
        return self.samples[0].frame.pressures.shape

    def positions(self) -> np.ndarray:
        return np.array([s.position for s in self.samples])

    def __len__(self):
        return len(self.samples)

    def __eq__(self, other):
        if not isinstance(other, Exploration):
            return NotImplemented
        return (self.object_id == other.object_id
                and len(self.samples) == len(other.samples)
                and all(a == b for a, b in zip(self.samples, other.samples)))


@dataclass(frozen=True, eq=False)
class Cloud:
    """A non-empty set of 3-D or 4-D points as an (n, dim) float array.

    Rows of a 4-D cloud are (x, y, z, w) where w is the scaled word
    label attached to that contact.
    """

    points: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim != 2 or p.shape[0] == 0:
            raise ValueError("cloud must be a non-empty (n, dim) array")
        if p.shape[1] not in (3, 4):
            raise ValueError("cloud dim must be 3 or 4")
        if not np.all(np.isfinite(p)):
            raise ValueError("cloud points must be finite")
        object.__setattr__(self, "points", _freeze(p))

    @property
    def dim(self) -> int:
        return self.points.shape[1]

    def __len__(self):
        return self.points.shape[0]

    def __eq__(self, other):
        if not isinstance(other, Cloud):
            return NotImplemented
        return (self.points.shape == other.points.shape
                and np.array_equal(self.points, other.points))


# ---------------------------------------------------------------------------
# touch-file format
#
#   # comment lines and blank lines are ignored
#   dims <rows> <cols>
#   x y z v_1 v_2 ... v_(rows*cols)     one line per touch, pressures row-major


def parse_exploration(text, object_id: str = "") -> Exploration:
    """Parse a touch file (text or bytes) into an Exploration.

    The file format does not carry the object id; it comes from the
    dataset directory layout, so callers pass it in.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    dims = None
    samples = []
    for line_no, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if tokens[0] == "dims":
            if dims is not None:
                raise ParseError(line_no, "duplicate dims header")
            if len(tokens) != 3:
                raise ParseError(line_no, "dims header needs rows and cols")
            try:
                rows, cols = int(tokens[1]), int(tokens[2])
            except ValueError:
                raise ParseError(line_no, "dims values must be integers") from None
            if rows <= 0 or cols <= 0:
                raise ParseError(line_no, "dims must be positive")
            dims = (rows, cols)
            continue
        if dims is None:
            raise ParseError(line_no, "data line before dims header")
        expected = 3 + dims[0] * dims[1]
        if len(tokens) != expected:
            raise ParseError(
                line_no,
                f"expected {expected} fields (3 position + {dims[0] * dims[1]} "
                f"pressures), got {len(tokens)}")
        try:
            values = [float(t) for t in tokens]
        except ValueError:
            raise ParseError(line_no, "non-numeric field") from None
        if not all(np.isfinite(v) for v in values):
            raise ParseError(line_no, "non-finite field")
        pressures = np.array(values[3:]).reshape(dims)
        if np.any(pressures < 0):
            raise ParseError(line_no, "negative pressure value")
        samples.append(TouchSample(np.array(values[:3]), TactileFrame(pressures)))
    if dims is None:
        raise ParseError(1, "missing dims header")
    if not samples:
        raise ParseError(1, "file contains no touch samples")
    return Exploration(object_id, tuple(samples))


def serialize_exploration(e: Exploration) -> str:
    """Canonical text form of an exploration; parse() inverts it exactly."""
    rows, cols = e.frame_dims
    lines = [f"dims {rows} {cols}"]
    for s in e.samples:
        fields = [fmt(v) for v in s.position]
        fields.extend(fmt(v) for v in s.frame.pressures.ravel())
        lines.append(" ".join(fields))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# dataset directory layout
#
#   <root>/objects.txt                object_id<TAB>display name, one per line
#   <root>/<object_id>/<eid>.touches  one file per exploration


@dataclass(frozen=True, eq=False)
class Dataset:
    """A collection of objects, each with one or more explorations."""

    object_ids: tuple
    display_names: dict
    explorations: dict = field(repr=False)

    def __post_init__(self):
        if not self.object_ids:
            raise ValueError("dataset must contain at least one object")
        for oid in self.object_ids:
            if not self.explorations.get(oid):
                raise ValueError(f"object {oid!r} has no explorations")

    def exploration_counts(self):
        return {oid: len(self.explorations[oid]) for oid in self.object_ids}

    def save(self, root) -> None:
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        lines = [f"{oid}\t{self.display_names.get(oid, oid)}"
                 for oid in self.object_ids]
        atomic_write_text(root / "objects.txt", "\n".join(lines) + "\n")
        for oid in self.object_ids:
            obj_dir = root / oid
            obj_dir.mkdir(exist_ok=True)
            for i, e in enumerate(self.explorations[oid]):
                atomic_write_text(obj_dir / f"e{i:02d}.touches",
                                  serialize_exploration(e))

    @classmethod
    def load(cls, root) -> "Dataset":
        root = Path(root)
        index = root / "objects.txt"
        if not index.is_file():
            raise FileNotFoundError(f"no objects.txt under {root}")
        object_ids = []
        names = {}
        for raw in index.read_text(encoding="utf-8").splitlines():
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            oid, _, name = line.partition("\t")
            oid = oid.strip()
            object_ids.append(oid)
            names[oid] = name.strip() or oid
        explorations = {}
        for oid in object_ids:
            files = sorted((root / oid).glob("*.touches"))
            if not files:
                raise FileNotFoundError(f"object {oid!r} has no .touches files")
            explorations[oid] = tuple(
                parse_exploration(f.read_text(encoding="utf-8"), object_id=oid)
                for f in files)
        return cls(tuple(object_ids), names, explorations)


def atomic_write_text(path, text: str) -> None:
    """Write text to path via a temp file + rename, so readers never see
    a partial file."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
