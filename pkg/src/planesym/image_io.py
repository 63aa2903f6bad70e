"""Raster image IO, histogram statistics, region masks, hka files, reports.

Images are 8-bit-scale grayscale grids held as float64 arrays; color input
is reduced with Rec. 601 luma.  The ``.hka`` text format carries one
``h k amplitude phase`` record per line with phases in degrees, matching
electron-crystallography export conventions; internally phases are radians.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image

_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True)
class RasterImage:
    """Grayscale pixel grid with row-major float64 storage."""

    width: int
    height: int
    pixels: np.ndarray

    @classmethod
    def from_array(cls, pixels: np.ndarray) -> "RasterImage":
        arr = np.asarray(pixels, dtype=np.float64)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError(f"expected a non-empty 2D pixel grid, got shape {arr.shape}")
        return cls(width=arr.shape[1], height=arr.shape[0], pixels=arr)


@dataclass(frozen=True)
class Histogram:
    """Intensity statistics over (optionally masked) pixels.

    ``rms`` is the standard deviation about the mean, ``mad`` the mean
    absolute deviation, ``fwid`` the full intensity span max - min, and
    ``mode_count`` the population of the tallest of the 256 bins.
    """

    bins: np.ndarray
    mean: float
    rms: float
    mad: float
    fwid: float
    mode_count: int


@dataclass(frozen=True)
class RegionSelection:
    """Circular pixel selection: all p with ``|p - center| <= radius``."""

    center: tuple[float, float]
    radius: float
    mask: np.ndarray


def load_image(path: str | Path) -> RasterImage:
    """Load a PNG or PGM image as grayscale.

    Color images are converted with Rec. 601 luma (rounded to the nearest
    integer level); alpha channels are ignored.
    """
    with Image.open(path) as im:
        im.load()
        if im.width < 1 or im.height < 1:
            raise ValueError(f"zero-size image: {path}")
        if im.mode in ("L", "I", "I;16", "F"):
            arr = np.asarray(im, dtype=np.float64)
        elif im.mode in ("RGB", "RGBA"):
            rgb = np.asarray(im, dtype=np.float64)[..., :3]
            arr = np.rint(rgb @ _LUMA)
        elif im.mode == "P" or im.mode == "1":
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64)
            arr = np.rint(rgb @ _LUMA)
        else:
            raise ValueError(f"unsupported image mode {im.mode!r}: {path}")
    return RasterImage.from_array(arr)


def save_image(image: RasterImage | np.ndarray, path: str | Path) -> None:
    """Write an 8-bit grayscale PNG or PGM, clipping to [0, 255]."""
    arr = image.pixels if isinstance(image, RasterImage) else np.asarray(image)
    data = np.rint(np.clip(arr, 0.0, 255.0)).astype(np.uint8)
    suffix = Path(path).suffix.lower()
    if suffix not in (".png", ".pgm"):
        raise ValueError(f"unsupported output format {suffix!r} (use .png or .pgm)")
    Image.fromarray(data, mode="L").save(path)


def circular_region(
    image: RasterImage | tuple[int, int],
    center: tuple[float, float] | None = None,
    radius: float | None = None,
) -> RegionSelection:
    """Build the circular mask centered at ``center = (x, y)``.

    Defaults to the largest centered disk that fits.  The selection must
    lie inside the image bounds.
    """
    if isinstance(image, RasterImage):
        height, width = image.height, image.width
    else:
        height, width = image
    if center is None:
        center = ((width - 1) / 2.0, (height - 1) / 2.0)
    if radius is None:
        radius = min((width - 1) / 2.0, (height - 1) / 2.0,
                     center[0], center[1],
                     width - 1 - center[0], height - 1 - center[1])
    cx, cy = float(center[0]), float(center[1])
    if radius <= 0:
        raise ValueError("radius must be positive")
    if cx - radius < -0.5 or cy - radius < -0.5 \
            or cx + radius > width - 0.5 or cy + radius > height - 0.5:
        raise ValueError("circular region extends outside the image")
    yy, xx = np.mgrid[0:height, 0:width]
    mask = (xx - cx) ** 2 + (yy - cy) ** 2 <= radius ** 2
    return RegionSelection(center=(cx, cy), radius=float(radius), mask=mask)


def compute_histogram(image: RasterImage, mask: RegionSelection | None = None) -> Histogram:
    """Histogram statistics over the whole image or a masked selection."""
    if mask is not None:
        if mask.mask.shape != image.pixels.shape:
            raise ValueError("mask shape does not match image")
        values = image.pixels[mask.mask]
    else:
        values = image.pixels.ravel()
    if values.size == 0:
        raise ValueError("empty selection")
    values = values.astype(np.float64)
    lo, hi = float(values.min()), float(values.max())
    if 0.0 <= lo and hi <= 255.0:
        bins, _ = np.histogram(values, bins=256, range=(0.0, 256.0))
    else:
        bins, _ = np.histogram(values, bins=256, range=(lo, hi if hi > lo else lo + 1.0))
    mean = float(values.mean())
    rms = float(values.std())
    mad = float(np.abs(values - mean).mean())
    return Histogram(
        bins=bins,
        mean=mean,
        rms=rms,
        mad=mad,
        fwid=hi - lo,
        mode_count=int(bins.max()),
    )


@dataclass(frozen=True)
class HkaRecord:
    """One reciprocal-space record: integer indices, amplitude, phase (deg)."""

    h: int
    k: int
    amplitude: float
    phase: float


def _first_token_numeric(line: str) -> bool:
    token = line.split()[0]
    try:
        float(token)
        return True
    except ValueError:
        return False


def parse_hka(path: str | Path) -> list[HkaRecord]:
    """Parse an ``.hka`` text file into records, in file order.

    Lines starting with ``#`` and lines whose first token is non-numeric
    (headers) are skipped.  A line that starts numerically must carry
    exactly ``h k amplitude phase``.
    """
    records: list[HkaRecord] = []
    seen: set[tuple[int, int]] = set()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#") or not _first_token_numeric(line):
                continue
            tokens = line.split()
            if len(tokens) != 4:
                raise ValueError(f"{path}:{lineno}: expected 'h k amplitude phase', got {line!r}")
            try:
                h, k = int(tokens[0]), int(tokens[1])
                amplitude, phase = float(tokens[2]), float(tokens[3])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: malformed numeric field in {line!r}") from exc
            if amplitude < 0:
                raise ValueError(f"{path}:{lineno}: negative amplitude")
            if (h, k) in seen:
                raise ValueError(f"{path}:{lineno}: duplicate index ({h}, {k})")
            seen.add((h, k))
            records.append(HkaRecord(h=h, k=k, amplitude=amplitude, phase=phase))
    if not records:
        raise ValueError(f"{path}: no coefficient records found")
    return records


def write_hka(records: list[HkaRecord], path: str | Path) -> None:
    """Write records sorted by (h, k), one ``%d %d %.4f %.4f`` line each."""
    with open(path, "w", encoding="utf-8") as fh:
        for rec in sorted(records, key=lambda r: (r.h, r.k)):
            fh.write(f"{rec.h} {rec.k} {rec.amplitude:.4f} {rec.phase:.4f}\n")


def write_report(result, fmt: str, path: str | Path) -> None:
    """Serialize a classification result as JSON or a CSV residual table.

    The JSON document carries the full result (anchors, labels, ascent
    rows, confidence levels, noise estimate); the CSV variant holds one
    row per tested setting.  Field names are documented in the README.
    """
    data = result.to_dict() if hasattr(result, "to_dict") else dict(result)
    if fmt == "json":
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(data, fh, indent=2)
            fh.write("\n")
    elif fmt == "csv":
        fields = ["setting", "k", "n", "j_cfc", "j_afc", "applicable", "label"]
        with open(path, "w", encoding="utf-8", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
            writer.writeheader()
            for row in data["models"]:
                writer.writerow(row)
    else:
        raise ValueError(f"unknown report format {fmt!r} (use 'json' or 'csv')")
