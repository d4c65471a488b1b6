"""Metric-calibrated polar and Cartesian BEV grids.

Conventions used throughout the package:

* A polar grid stores ``values[azimuth_row, range_bin]``. Row ``i`` points at
  azimuth exactly ``i * (2*pi / n_azimuth)``, measured counter-clockwise from
  the vehicle's forward (+x) axis. The azimuth axis is circular: row
  ``n_azimuth - 1`` is adjacent to row 0.
* Range bin ``k`` of a grid with ``range_offset`` covers the metric interval
  ``[(range_offset + k) * res, (range_offset + k + 1) * res)``; its center sits
  at ``(range_offset + k + 0.5) * res``.
* A Cartesian grid stores ``values[row, col]``. The center of pixel ``(r, c)``
  maps to metric ``x = (c - origin_col) * res`` and ``y = (origin_row - r) * res``
  (x right/forward along columns, y up along decreasing rows).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from PIL import Image

from .errors import InvalidArgumentError, ParseError, RegionOutOfBoundsError

GRID_KINDS = ("power", "probability", "occupancy")

PNG_SCALE = 65535


def _validate_values(values: np.ndarray, kind: str) -> np.ndarray:
    if kind not in GRID_KINDS:
        raise InvalidArgumentError(f"unknown grid kind {kind!r}, expected one of {GRID_KINDS}")
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim != 2 or arr.size == 0:
        raise InvalidArgumentError(f"grid values must be a non-empty 2D array, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise InvalidArgumentError("grid values must be finite")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise InvalidArgumentError("grid values must lie in [0, 1]")
    if kind == "occupancy" and not np.all((arr == 0.0) | (arr == 1.0)):
        raise InvalidArgumentError("occupancy grids may contain only {0, 1}")
    return arr


@dataclass(frozen=True)
class PolarGrid:
    """BEV raster indexed by (azimuth row, range bin)."""

    values: np.ndarray
    range_resolution: float
    kind: str
    range_offset: int = 0

    def __post_init__(self):
        object.__setattr__(self, "values", _validate_values(self.values, self.kind))
        if self.range_resolution <= 0:
            raise InvalidArgumentError("range_resolution must be > 0")
        if self.range_offset < 0:
            raise InvalidArgumentError("range_offset must be >= 0")

    @property
    def n_azimuth(self) -> int:
        return self.values.shape[0]

    @property
    def n_range(self) -> int:
        return self.values.shape[1]

    @property
    def azimuth_step(self) -> float:
        return 2.0 * math.pi / self.n_azimuth

    @property
    def max_range(self) -> float:
        """Outer metric edge of the last range bin."""
        return (self.range_offset + self.n_range) * self.range_resolution

    def with_values(self, values: np.ndarray, kind: str | None = None) -> "PolarGrid":
        return PolarGrid(values, self.range_resolution, kind or self.kind, self.range_offset)


@dataclass(frozen=True)
class CartesianGrid:
    """BEV raster on a metric (x, y) lattice with the sensor at ``sensor_origin``."""

    values: np.ndarray
    resolution: float
    kind: str
    sensor_origin: tuple[float, float] = field(default=None)  # (row, col), may be fractional

    def __post_init__(self):
        object.__setattr__(self, "values", _validate_values(self.values, self.kind))
        if self.resolution <= 0:
            raise InvalidArgumentError("resolution must be > 0")
        h, w = self.values.shape
        origin = self.sensor_origin
        if origin is None:
            origin = ((h - 1) / 2.0, (w - 1) / 2.0)
        origin = (float(origin[0]), float(origin[1]))
        if not (-0.5 <= origin[0] <= h - 0.5 and -0.5 <= origin[1] <= w - 0.5):
            raise InvalidArgumentError(f"sensor_origin {origin} outside {h}x{w} grid")
        object.__setattr__(self, "sensor_origin", origin)

    @property
    def height(self) -> int:
        return self.values.shape[0]

    @property
    def width(self) -> int:
        return self.values.shape[1]

    def pixel_xy(self) -> tuple[np.ndarray, np.ndarray]:
        """Metric (x, y) coordinates of every pixel center, each (H, W)."""
        orow, ocol = self.sensor_origin
        x = (np.arange(self.width, dtype=np.float64) - ocol) * self.resolution
        y = (orow - np.arange(self.height, dtype=np.float64)) * self.resolution
        return np.broadcast_to(x, self.values.shape).copy(), np.broadcast_to(y[:, None], self.values.shape).copy()

    def with_values(self, values: np.ndarray, kind: str | None = None) -> "CartesianGrid":
        return CartesianGrid(values, self.resolution, kind or self.kind, self.sensor_origin)


@dataclass(frozen=True)
class RegionSpec:
    """One segment of the range-binned region scheme.

    ``d`` is the region unit in range bins (polar) or pixels (Cartesian); the
    metric unit is ``d * resolution``. Polar regions are full-azimuth range
    slabs ``[n*d, (n+1)*d)``; Cartesian regions are Chebyshev (square) annuli
    between half-widths ``n*d`` and ``(n+1)*d`` pixels around the sensor. The
    train region is region 0 in both spaces.
    """

    d: int
    n: int
    space: str  # "polar" | "cartesian"
    role: str = "eval"  # "train" | "eval"

    def __post_init__(self):
        if self.d <= 0:
            raise InvalidArgumentError("region unit d must be > 0")
        if self.n < 0:
            raise InvalidArgumentError("region index n must be >= 0")
        if self.space not in ("polar", "cartesian"):
            raise InvalidArgumentError(f"unknown region space {self.space!r}")
        if self.role not in ("train", "eval"):
            raise InvalidArgumentError(f"unknown region role {self.role!r}")
        if self.role == "train" and self.n != 0:
            raise InvalidArgumentError("train region is region 0 by definition")


# ---------------------------------------------------------------------------
# Resampling


def _bilinear_polar(values: np.ndarray, az: np.ndarray, rc: np.ndarray) -> np.ndarray:
    """Bilinear sample of a polar raster at continuous (row, bin) coordinates.

    Azimuth wraps circularly; range is clamped to the first/last bin.
    """
    n_az, n_range = values.shape
    i0 = np.floor(az).astype(np.int64)
    wa = (az - i0).astype(np.float64)
    i0 %= n_az
    i1 = (i0 + 1) % n_az

    rcc = np.clip(rc, 0.0, n_range - 1.0)
    k0 = np.floor(rcc).astype(np.int64)
    k0 = np.clip(k0, 0, n_range - 1)
    k1 = np.minimum(k0 + 1, n_range - 1)
    wr = rcc - k0

    v = values.astype(np.float64)
    top = v[i0, k0] * (1.0 - wr) + v[i0, k1] * wr
    bot = v[i1, k0] * (1.0 - wr) + v[i1, k1] * wr
    return top * (1.0 - wa) + bot * wa


def _bilinear_cartesian(values: np.ndarray, row: np.ndarray, col: np.ndarray) -> np.ndarray:
    """Bilinear sample of a Cartesian raster; coordinates clamped to the border."""
    h, w = values.shape
    rc = np.clip(row, 0.0, h - 1.0)
    cc = np.clip(col, 0.0, w - 1.0)
    r0 = np.floor(rc).astype(np.int64)
    c0 = np.floor(cc).astype(np.int64)
    r0 = np.clip(r0, 0, h - 1)
    c0 = np.clip(c0, 0, w - 1)
    r1 = np.minimum(r0 + 1, h - 1)
    c1 = np.minimum(c0 + 1, w - 1)
    wr = rc - r0
    wc = cc - c0

    v = values.astype(np.float64)
    top = v[r0, c0] * (1.0 - wc) + v[r0, c1] * wc
    bot = v[r1, c0] * (1.0 - wc) + v[r1, c1] * wc
    return top * (1.0 - wr) + bot * wr


def polar_to_cartesian(src: PolarGrid, resolution: float, half_extent: float) -> CartesianGrid:
    """Render a polar grid onto a square Cartesian raster centered on the sensor.

    Power/probability values are sampled bilinearly over (azimuth, range) with
    circular azimuth interpolation; occupancy is sampled by nearest bin so
    that binary labels stay binary. Pixels beyond the polar grid's range
    extent (or inside its inner edge, for range-windowed grids) are 0.
    """
    if resolution <= 0 or half_extent <= 0:
        raise InvalidArgumentError("resolution and half_extent must be > 0")
    if half_extent > src.max_range + 1e-9:
        raise InvalidArgumentError(
            f"half_extent {half_extent} exceeds polar max range {src.max_range:.3f}"
        )
    side = int(math.ceil(2.0 * half_extent / resolution))
    origin = ((side - 1) / 2.0, (side - 1) / 2.0)

    x = (np.arange(side, dtype=np.float64) - origin[1]) * resolution
    y = (origin[0] - np.arange(side, dtype=np.float64)) * resolution
    X = np.broadcast_to(x, (side, side))
    Y = np.broadcast_to(y[:, None], (side, side))
    r = np.hypot(X, Y)
    theta = np.mod(np.arctan2(Y, X), 2.0 * math.pi)

    res = src.range_resolution
    inner = src.range_offset * res
    inside = (r < src.max_range) & (r >= inner)

    if src.kind == "occupancy":
        az = np.mod(np.rint(theta / src.azimuth_step).astype(np.int64), src.n_azimuth)
        k = np.floor(r / res).astype(np.int64) - src.range_offset
        valid = inside & (k >= 0) & (k < src.n_range)
        k = np.clip(k, 0, src.n_range - 1)
        out = np.where(valid, src.values[az, k], 0.0)
    else:
        az = theta / src.azimuth_step
        rc = r / res - 0.5 - src.range_offset
        out = np.where(inside, _bilinear_polar(src.values, az, rc), 0.0)
    return CartesianGrid(out.astype(np.float32), resolution, src.kind, origin)


def cartesian_to_polar(
    src: CartesianGrid,
    n_azimuth: int,
    n_range: int,
    range_resolution: float,
    range_offset: int = 0,
) -> PolarGrid:
    """Resample a Cartesian raster onto a polar grid around its sensor origin.

    Mirror of :func:`polar_to_cartesian`: bilinear for power/probability,
    nearest pixel for occupancy, zero for bins whose center falls outside the
    Cartesian raster.
    """
    if n_azimuth <= 0 or n_range <= 0 or range_resolution <= 0:
        raise InvalidArgumentError("polar grid dimensions and resolution must be > 0")
    theta = np.arange(n_azimuth, dtype=np.float64) * (2.0 * math.pi / n_azimuth)
    rr = (np.arange(n_range, dtype=np.float64) + range_offset + 0.5) * range_resolution
    X = rr[None, :] * np.cos(theta)[:, None]
    Y = rr[None, :] * np.sin(theta)[:, None]

    orow, ocol = src.sensor_origin
    col = X / src.resolution + ocol
    row = orow - Y / src.resolution
    inside = (col >= -0.5) & (col <= src.width - 0.5) & (row >= -0.5) & (row <= src.height - 0.5)

    if src.kind == "occupancy":
        ri = np.clip(np.rint(row).astype(np.int64), 0, src.height - 1)
        ci = np.clip(np.rint(col).astype(np.int64), 0, src.width - 1)
        out = np.where(inside, src.values[ri, ci], 0.0)
    else:
        out = np.where(inside, _bilinear_cartesian(src.values, row, col), 0.0)
    return PolarGrid(out.astype(np.float32), range_resolution, src.kind, range_offset)


# ---------------------------------------------------------------------------
# Region scheme


def region_mask(
    spec: RegionSpec,
    grid_shape: tuple[int, int],
    sensor_origin: tuple[float, float] | None = None,
) -> np.ndarray:
    """Boolean mask selecting one region of the range-binned scheme.

    ``grid_shape`` is (n_azimuth, n_range) for polar and (height, width) for
    Cartesian. For Cartesian grids the sensor defaults to the geometric center
    of the raster.
    """
    n = 0 if spec.role == "train" else spec.n
    if spec.space == "polar":
        n_az, n_range = grid_shape
        lo, hi = n * spec.d, (n + 1) * spec.d
        if hi > n_range:
            raise RegionOutOfBoundsError(n, f"bins [{lo}, {hi}) exceed n_range={n_range}")
        mask = np.zeros(grid_shape, dtype=bool)
        mask[:, lo:hi] = True
        return mask

    h, w = grid_shape
    if sensor_origin is None:
        sensor_origin = ((h - 1) / 2.0, (w - 1) / 2.0)
    orow, ocol = float(sensor_origin[0]), float(sensor_origin[1])
    outer = (n + 1) * spec.d
    reach = min(orow, ocol, h - 1 - orow, w - 1 - ocol) + 0.5
    if outer > reach + 1e-9:
        raise RegionOutOfBoundsError(n, f"half-width {outer} px exceeds grid reach {reach:.1f} px")
    rows = np.abs(np.arange(h, dtype=np.float64) - orow)
    cols = np.abs(np.arange(w, dtype=np.float64) - ocol)
    cheb = np.maximum(rows[:, None], cols[None, :])
    return (cheb >= n * spec.d) & (cheb < outer)


def region_partition(
    d: int,
    space: str,
    grid_shape: tuple[int, int],
    sensor_origin: tuple[float, float] | None = None,
) -> tuple[list[np.ndarray], np.ndarray]:
    """All region masks that fit the grid, plus the uncovered remainder mask."""
    masks = []
    n = 0
    while True:
        try:
            masks.append(region_mask(RegionSpec(d, n, space), grid_shape, sensor_origin))
        except RegionOutOfBoundsError:
            break
        n += 1
    if not masks:
        raise RegionOutOfBoundsError(0, f"unit d={d} does not fit grid {grid_shape}")
    covered = np.logical_or.reduce(masks)
    return masks, ~covered


# ---------------------------------------------------------------------------
# Range windows


def crop_polar_range(src: PolarGrid, start_bin: int, n_bins: int) -> PolarGrid:
    """Cut a full-azimuth range window; the offset is recorded for stitching."""
    if start_bin < 0 or n_bins <= 0 or start_bin + n_bins > src.n_range:
        raise InvalidArgumentError(
            f"window [{start_bin}, {start_bin + n_bins}) out of bounds for n_range={src.n_range}"
        )
    return PolarGrid(
        src.values[:, start_bin : start_bin + n_bins].copy(),
        src.range_resolution,
        src.kind,
        src.range_offset + start_bin,
    )


def embed_polar_range(window: PolarGrid, n_range_total: int, base_offset: int = 0) -> PolarGrid:
    """Place a range window back into a zero-filled full-length grid.

    ``base_offset`` is the range_offset of the target grid; the window lands at
    bins ``[window.range_offset - base_offset, ...)``.
    """
    start = window.range_offset - base_offset
    if start < 0 or start + window.n_range > n_range_total:
        raise InvalidArgumentError(
            f"window at offset {window.range_offset} does not fit total {n_range_total} bins"
        )
    values = np.zeros((window.n_azimuth, n_range_total), dtype=np.float32)
    values[:, start : start + window.n_range] = window.values
    return PolarGrid(values, window.range_resolution, window.kind, base_offset)


# ---------------------------------------------------------------------------
# Serialization: 16-bit grayscale PNG + JSON sidecar


def _sidecar_path(png_path: Path) -> Path:
    return png_path.with_suffix(".json")


def save_grid(grid: PolarGrid | CartesianGrid, png_path: str | Path) -> Path:
    """Write a grid as 16-bit grayscale PNG plus a JSON calibration sidecar.

    Occupancy round-trips bit-exactly ({0,1} maps to {0, 65535}); power and
    probability quantize to 1/65535.
    """
    png_path = Path(png_path)
    arr = np.rint(grid.values.astype(np.float64) * PNG_SCALE).astype(np.uint16)
    img = Image.fromarray(arr)
    png_path.parent.mkdir(parents=True, exist_ok=True)
    img.save(png_path, format="PNG")

    if isinstance(grid, PolarGrid):
        meta = {
            "grid": "polar",
            "kind": grid.kind,
            "n_azimuth": grid.n_azimuth,
            "n_range": grid.n_range,
            "range_resolution": grid.range_resolution,
            "range_offset": grid.range_offset,
        }
    else:
        meta = {
            "grid": "cartesian",
            "kind": grid.kind,
            "width": grid.width,
            "height": grid.height,
            "resolution": grid.resolution,
            "sensor_origin": list(grid.sensor_origin),
        }
    _sidecar_path(png_path).write_text(json.dumps(meta, sort_keys=True) + "\n")
    return png_path


def load_grid(png_path: str | Path) -> PolarGrid | CartesianGrid:
    """Load a grid written by :func:`save_grid`."""
    png_path = Path(png_path)
    sidecar = _sidecar_path(png_path)
    if not sidecar.exists():
        raise ParseError(png_path, "JSON sidecar next to PNG", "missing sidecar")
    meta = json.loads(sidecar.read_text())
    arr = np.asarray(Image.open(png_path))
    if arr.dtype != np.uint16:
        raise ParseError(png_path, "16-bit grayscale PNG", f"dtype {arr.dtype}")
    values = (arr.astype(np.float64) / PNG_SCALE).astype(np.float32)

    if meta.get("grid") == "polar":
        expected = (meta["n_azimuth"], meta["n_range"])
        if arr.shape != expected:
            raise ParseError(png_path, f"shape {expected}", f"shape {arr.shape}")
        return PolarGrid(values, meta["range_resolution"], meta["kind"], meta.get("range_offset", 0))
    if meta.get("grid") == "cartesian":
        expected = (meta["height"], meta["width"])
        if arr.shape != expected:
            raise ParseError(png_path, f"shape {expected}", f"shape {arr.shape}")
        return CartesianGrid(values, meta["resolution"], meta["kind"], tuple(meta["sensor_origin"]))
    raise ParseError(sidecar, "grid field 'polar' or 'cartesian'", repr(meta.get("grid")))
