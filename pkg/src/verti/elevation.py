"""Elevation maps: representation, linear-interpolation terrain generation,
vehicle-centred patch extraction and the ``VWMAP`` text format."""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from functools import lru_cache
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import DimensionError, MapFormatError, ParameterError, RangeError

# testbed footprint (m) and height ceiling
TESTBED_WIDTH = 1.3
TESTBED_LENGTH = 3.1
MAX_HEIGHT = 0.5
GRID_ROWS = 128
GRID_COLS = 64

PATCH_SIZE = 64
PATCH_WINDOW = 1.0


@dataclass(frozen=True, eq=False)
class ElevationMap:
    """Height grid in metres.

    ``heights[r, c]`` is the height at ``x = c * width_m / (cols - 1)``,
    ``y = r * height_m / (rows - 1)``; the grid nodes span the extents
    corner to corner.
    """

    heights: np.ndarray
    width_m: float
    height_m: float
    id: int | None = None

    def __post_init__(self):
        h = np.array(self.heights, dtype=np.float64)
        if h.ndim != 2 or h.shape[0] < 2 or h.shape[1] < 2:
            raise DimensionError(f"heights must be a 2-D grid of at least 2x2, got {h.shape}")
        if not np.all(np.isfinite(h)):
            raise ParameterError("heights contain non-finite values")
        if not (self.width_m > 0 and self.height_m > 0):
            raise ParameterError("map extents must be positive")
        h.setflags(write=False)
        object.__setattr__(self, "heights", h)

    @property
    def rows(self) -> int:
        return self.heights.shape[0]

    @property
    def cols(self) -> int:
        return self.heights.shape[1]

    @property
    def dx(self) -> float:
        return self.width_m / (self.cols - 1)

    @property
    def dy(self) -> float:
        return self.height_m / (self.rows - 1)

    def same_grid(self, other: "ElevationMap") -> bool:
        return (self.heights.shape == other.heights.shape
                and self.width_m == other.width_m
                and self.height_m == other.height_m)

    def __eq__(self, other):
        if not isinstance(other, ElevationMap):
            return NotImplemented
        return (self.same_grid(other) and self.id == other.id
                and np.array_equal(self.heights, other.heights))

    __hash__ = None


@dataclass
class TerrainSet:
    maps: list[ElevationMap]
    N: int = field(default=0)

    def __len__(self):
        return len(self.maps)

    def __getitem__(self, i):
        return self.maps[i]

    def __iter__(self):
        return iter(self.maps)


def flat_map(rows: int = GRID_ROWS, cols: int = GRID_COLS,
             width_m: float = TESTBED_WIDTH, height_m: float = TESTBED_LENGTH) -> ElevationMap:
    return ElevationMap(np.zeros((rows, cols)), width_m, height_m)


def plane_map(gx: float, gy: float, rows: int = GRID_ROWS, cols: int = GRID_COLS,
              width_m: float = TESTBED_WIDTH, height_m: float = TESTBED_LENGTH,
              z0: float = 0.0) -> ElevationMap:
    """Tilted plane ``z = z0 + gx*x + gy*y``; handy for analytic checks."""
    x = np.linspace(0.0, width_m, cols)
    y = np.linspace(0.0, height_m, rows)
    return ElevationMap(z0 + gx * x[None, :] + gy * y[:, None], width_m, height_m)


def interpolate_map(i0: ElevationMap, iN: ElevationMap, i: int, N: int) -> ElevationMap:
    if not i0.same_grid(iN):
        raise DimensionError("endpoint maps differ in shape or extents")
    if N < 1:
        raise RangeError(f"N must be >= 1, got {N}")
    if not 0 <= i <= N:
        raise RangeError(f"index {i} outside [0, {N}]")
    t = i / N
    heights = (1.0 - t) * i0.heights + t * iN.heights
    return ElevationMap(heights, i0.width_m, i0.height_m, id=i)


def generate_training_set(i0: ElevationMap, iN: ElevationMap, count: int) -> TerrainSet:
    if count < 2:
        raise RangeError(f"count must be >= 2, got {count}")
    N = count - 1
    return TerrainSet([interpolate_map(i0, iN, k, N) for k in range(count)], N=N)


def _value_noise(rng: np.random.Generator, rows: int, cols: int,
                 width_m: float, height_m: float, spacing: float) -> np.ndarray:
    # random lattice values, smoothstep-interpolated onto the grid
    nx = int(math.ceil(width_m / spacing)) + 2
    ny = int(math.ceil(height_m / spacing)) + 2
    lattice = rng.random((ny, nx))
    ox, oy = rng.random(2)
    gx = np.linspace(0.0, width_m, cols) / spacing + ox
    gy = np.linspace(0.0, height_m, rows) / spacing + oy
    ix, iy = np.floor(gx).astype(int), np.floor(gy).astype(int)
    fx, fy = gx - ix, gy - iy
    sx = fx * fx * (3 - 2 * fx)
    sy = fy * fy * (3 - 2 * fy)
    a = lattice[iy[:, None], ix[None, :]]
    b = lattice[iy[:, None], ix[None, :] + 1]
    c = lattice[iy[:, None] + 1, ix[None, :]]
    d = lattice[iy[:, None] + 1, ix[None, :] + 1]
    top = a + (b - a) * sx[None, :]
    bot = c + (d - c) * sx[None, :]
    return top + (bot - top) * sy[:, None]


def synth_rugged_endpoint(seed: int, roughness: float = 1.0, *,
                          rows: int = GRID_ROWS, cols: int = GRID_COLS,
                          width_m: float = TESTBED_WIDTH, height_m: float = TESTBED_LENGTH,
                          base_spacing: float = 0.5, octaves: int = 3,
                          persistence: float = 0.5, contrast: float = 16.0) -> ElevationMap:
    """Rock-field stand-in: multi-octave value noise rescaled to [0, 0.5] m.

    ``roughness`` shrinks the lattice spacing of every octave, so larger
    values give shorter, steeper features at the same height range. A
    logistic ``contrast`` pass turns the smooth noise into plateaus with
    steep flanks; set it to 0 to keep the raw noise.
    """
    if not roughness > 0:
        raise ParameterError(f"roughness must be positive, got {roughness}")
    rng = np.random.default_rng(seed)
    z = np.zeros((rows, cols))
    amp, spacing = 1.0, base_spacing / roughness
    for _ in range(octaves):
        z += amp * _value_noise(rng, rows, cols, width_m, height_m, spacing)
        amp *= persistence
        spacing /= 2.0
    if contrast > 0:
        z = (z - z.min()) / (z.max() - z.min())
        z = 1.0 / (1.0 + np.exp(-contrast * (z - 0.5)))
    lo, hi = z.min(), z.max()
    z = (z - lo) / (hi - lo) * MAX_HEIGHT
    return ElevationMap(z, width_m, height_m)


def sample_heights(emap: ElevationMap, xs, ys) -> np.ndarray:
    """Bilinear height lookup; points outside the map clamp to the edge."""
    h = emap.heights
    fc = np.clip(np.asarray(xs, dtype=np.float64) / emap.dx, 0.0, emap.cols - 1)
    fr = np.clip(np.asarray(ys, dtype=np.float64) / emap.dy, 0.0, emap.rows - 1)
    c0 = np.minimum(fc.astype(np.intp), emap.cols - 2)
    r0 = np.minimum(fr.astype(np.intp), emap.rows - 2)
    tc = fc - c0
    tr = fr - r0
    z00 = h[r0, c0]
    z01 = h[r0, c0 + 1]
    z10 = h[r0 + 1, c0]
    z11 = h[r0 + 1, c0 + 1]
    top = z00 + (z01 - z00) * tc
    bot = z10 + (z11 - z10) * tc
    return top + (bot - top) * tr


@lru_cache(maxsize=8)
def _patch_offsets(size: int, window: float) -> np.ndarray:
    step = window / (size - 1)
    off = (np.arange(size) - size // 2) * step
    off.setflags(write=False)
    return off


def extract_patch(emap: ElevationMap, center_xy: Sequence[float], heading: float,
                  size: int = PATCH_SIZE, window: float = PATCH_WINDOW) -> np.ndarray:
    """Heading-aligned ``size x size`` height patch around the vehicle.

    Axis 0 runs along the heading (rear to front), axis 1 across it
    (right to left). Heights are relative to the ground under the centre,
    so ``patch[size // 2, size // 2] == 0``.
    """
    if size < 2:
        raise ParameterError(f"patch size must be >= 2, got {size}")
    off = _patch_offsets(size, window)
    c, s = math.cos(heading), math.sin(heading)
    fwd = off[:, None]
    lat = off[None, :]
    xs = center_xy[0] + fwd * c - lat * s
    ys = center_xy[1] + fwd * s + lat * c
    patch = sample_heights(emap, xs, ys)
    return patch - patch[size // 2, size // 2]


# ---------------------------------------------------------------- file I/O

_MAGIC = "VWMAP"


def format_map(emap: ElevationMap) -> str:
    lines = [f"{_MAGIC} {emap.rows} {emap.cols} {emap.width_m!r} {emap.height_m!r}"]
    for row in emap.heights:
        lines.append(" ".join(repr(float(v)) for v in row))
    return "\n".join(lines) + "\n"


def parse_map(text: str, map_id: int | None = None) -> ElevationMap:
    lines = text.splitlines()
    if not lines:
        raise MapFormatError("empty file", 1)
    head = lines[0].split()
    if len(head) != 5 or head[0] != _MAGIC:
        raise MapFormatError(f"expected '{_MAGIC} <rows> <cols> <width_m> <height_m>'", 1)
    try:
        rows, cols = int(head[1]), int(head[2])
        width_m, height_m = float(head[3]), float(head[4])
    except ValueError as exc:
        raise MapFormatError(f"bad header field ({exc})", 1) from None
    if rows < 2 or cols < 2:
        raise MapFormatError("rows and cols must be >= 2", 1)
    if not (math.isfinite(width_m) and math.isfinite(height_m) and width_m > 0 and height_m > 0):
        raise MapFormatError("extents must be finite and positive", 1)
    body = lines[1:]
    while body and not body[-1].strip():
        body.pop()
    if len(body) != rows:
        first_bad = len(body) + 2 if len(body) < rows else rows + 2
        raise MapFormatError(f"header declares {rows} rows, found {len(body)}", first_bad)
    heights = np.empty((rows, cols))
    for r, line in enumerate(body):
        lineno = r + 2
        fields = line.split()
        if len(fields) != cols:
            raise MapFormatError(f"expected {cols} values, found {len(fields)}", lineno)
        try:
            vals = [float(f) for f in fields]
        except ValueError as exc:
            raise MapFormatError(str(exc), lineno) from None
        if not all(math.isfinite(v) for v in vals):
            raise MapFormatError("non-finite height", lineno)
        heights[r] = vals
    return ElevationMap(heights, width_m, height_m, id=map_id)


def write_map(emap: ElevationMap, path) -> None:
    Path(path).write_text(format_map(emap))


def read_map(path, map_id: int | None = None) -> ElevationMap:
    return parse_map(Path(path).read_text(), map_id)


def with_id(emap: ElevationMap, map_id: int | None) -> ElevationMap:
    return replace(emap, id=map_id)
