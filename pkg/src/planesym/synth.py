"""Synthetic 2D crystal patterns with controlled pseudosymmetry and noise.

Patterns are built in fractional coordinates: an asymmetric unit is
replicated by the group's direct-space operations and sampled on an
integer pixel lattice whose cell vectors match the group's metric class,
so the generated image is exactly symmetric up to floating-point
rounding.  A nonzero ``pseudo_delta`` adds near-copies of the motif
under a chosen supergroup operation, displaced by a controlled fraction
of their ideal separation: the genuine group stays exact while the
supergroup is broken by a tunable amount.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .groups import LATTICE_IMPLIES, PlaneGroup, SETTINGS
from .image_io import RasterImage

# Three-image experiment defaults: a fourfold pattern whose motif almost
# has the glides and diagonal mirrors of p4gm, plus a mild, a moderate
# and a roughly five-times-stronger noise mix.  The deformation is sized
# so the broken ops sit within a decade of the mild-noise anchor residual
# (labeled pseudosymmetry) yet stay failed under moderate noise, and the
# clean member carries the mild mix because a perfectly rendered pattern
# has only rounding-dust residuals, which no real scan shows.
TRIO_GROUP = "p4"
TRIO_PSEUDO = "p4gm"
TRIO_DELTA = 0.001
CLEAN_SIGMA = 4.0
CLEAN_SPREAD = 1
MODERATE_SIGMA = 10.0
MODERATE_SPREAD = 1
HEAVY_SIGMA = 55.0
HEAVY_SPREAD = 1
DEFAULT_TRIO_SEED = 1007

# Built-in asymmetric unit: fractional center, width as a fraction of the
# cell edge, peak intensity.  The centers are generic (no special sites)
# and intensities balance each blob's integrated power, so the spectrum
# is spread over many reflections and no two-coefficient origin shift can
# phase-align it: the p1 pattern stays far from every k=2 model.  A
# narrower blob than 0.04 would alias on a 48-pixel cell.
_BASE_BLOBS = (
    (0.214, 0.466, 0.040, 250.0),
    (0.929, 0.572, 0.042, 238.0),
    (0.725, 0.928, 0.045, 222.0),
    (0.395, 0.257, 0.048, 208.0),
    (0.347, 0.664, 0.050, 200.0),
    (0.497, 0.643, 0.044, 227.0),
)


@dataclass
class MotifSpec:
    """Recipe for one synthetic pattern.

    ``motif`` is an optional vectorized function of wrapped fractional
    coordinates returning intensities; when None a built-in blob motif is
    used, which is the only motif ``pseudo_delta`` can deform.  ``metric``
    requests a cell of a different (compatible) lattice class than the
    group's own minimal one.
    """

    group: str | PlaneGroup
    motif: Callable[[np.ndarray, np.ndarray], np.ndarray] | None = None
    cell_px: int = 96
    cells: int = 12
    pseudo_delta: float = 0.0
    pseudo_group: str | None = None
    metric: str | None = None


@dataclass
class NoiseSpec:
    """Mixed noise: i.i.d. Gaussian gray-level noise followed by local
    intensity spreading (position shuffling)."""

    gaussian_sigma: float = 0.0
    spread_radius: int = 0
    seed: int = 0


def _resolve(group: str | PlaneGroup) -> PlaneGroup:
    if isinstance(group, PlaneGroup):
        return group
    try:
        return SETTINGS[group]
    except KeyError:
        raise ValueError(f"unknown plane-group setting {group!r}") from None


def cell_vectors(metric: str, cell_px: int, cells: int = 2) -> tuple[np.ndarray, tuple[int, int]]:
    """Integer direct-cell vectors (rows a, b in pixels) for a metric
    class, with the (width, height) of a canvas holding ``cells`` cells
    per edge.

    The canvas is commensurate with the lattice, so the rendered pattern
    is exactly periodic on the pixel torus and its spectrum sits on
    integer grid positions.  The oblique shear and the hexagonal cell are
    the closest commensurate integer approximations of their ideal shapes
    and stay well inside the classification tolerances.
    """
    if cell_px < 8:
        raise ValueError("cell_px must be at least 8")
    if cells < 2:
        raise ValueError("need at least a 2x2 block of cells")
    cp = cell_px
    if metric == "oblique":
        # The shear must come back to a lattice point after ``cells``
        # steps, or the pattern cannot wrap.
        step = cp // math.gcd(cp, cells)
        bx = step * round(0.35 * cp / step)
        if bx == 0:
            bx = step
        by = round(1.15 * cp)
        return np.array([[cp, 0], [bx, by]]), (cells * cp, cells * by)
    if metric == "rectangular":
        by = round(0.75 * cp)
        return np.array([[cp, 0], [0, by]]), (cells * cp, cells * by)
    if metric == "square":
        return np.array([[cp, 0], [0, cp]]), (cells * cp, cells * cp)
    if metric == "rhombic":
        if cells % 2:
            raise ValueError("a rhombic canvas needs an even cell count")
        p, q = round(0.75 * cp), round(0.30 * cp)
        return np.array([[p, -q], [p, q]]), (cells * p, cells * q)
    if metric == "hexagonal":
        if cp % 2:
            raise ValueError("a hexagonal cell needs an even cell_px")
        if cells % 2:
            raise ValueError("a hexagonal canvas needs an even cell count")
        by = round(cp * math.sqrt(3) / 2)
        return np.array([[cp, 0], [-cp // 2, by]]), (cells * cp, cells * by)
    raise ValueError(f"unknown metric {metric!r}")


def _metric_gram(metric: str, vectors: np.ndarray) -> np.ndarray:
    """Quadratic form used to shape blobs, exactly invariant under every
    point operation of the metric class (the rounded hexagonal vectors
    are replaced by the ideal cell for this purpose)."""
    if metric == "hexagonal":
        s2 = float(vectors[0] @ vectors[0])
        return s2 * np.array([[1.0, -0.5], [-0.5, 1.0]])
    v = vectors.astype(np.float64)
    return v @ v.T


def _direct_ops(group: PlaneGroup) -> list[tuple[np.ndarray, np.ndarray]]:
    """Direct-space actions u -> u M^T + t of the group's operations on
    fractional row coordinates."""
    out = []
    for m, t in group.ops:
        out.append((
            np.array(m, dtype=np.float64).T,
            np.array([float(t[0]), float(t[1])]),
        ))
    return out


def _pseudo_blobs(group: PlaneGroup, pseudo_group: str, delta: float):
    """Base blobs plus their near-copies under one coset operation of the
    designated supergroup."""
    sup = _resolve(pseudo_group)
    if not set(group.ops) <= set(sup.ops):
        raise ValueError(
            f"{sup.name} does not contain every operation of {group.name}"
        )
    coset = sorted(set(sup.ops) - set(group.ops))
    if not coset:
        raise ValueError(f"{sup.name} adds no operations over {group.name}")
    m0, t0 = coset[0]
    mt = np.array(m0, dtype=np.float64).T
    tv = np.array([float(t0[0]), float(t0[1])])
    blobs = list(_BASE_BLOBS)
    for cu, cv, width, amp in _BASE_BLOBS:
        c = np.array([cu, cv])
        mirror = c @ mt + tv
        displaced = mirror + delta * (mirror - c)
        # Brightening the displaced copies as well breaks the amplitude
        # map at first order in delta, not just the phases.
        blobs.append((float(displaced[0] % 1.0), float(displaced[1] % 1.0),
                      width, amp * (1.0 + delta)))
    return blobs


def generate_pattern(spec: MotifSpec) -> RasterImage:
    """Render a periodic pattern with exact symmetry under ``spec.group``.

    The canvas is the commensurate ``cells``-per-edge block returned by
    ``cell_vectors``, rescaled into the gray range [15, 240] (an affine
    map, so it cannot break symmetry).
    """
    group = _resolve(spec.group)
    metric = spec.metric or group.lattice
    if metric not in LATTICE_IMPLIES:
        raise ValueError(f"unknown metric {spec.metric!r}")
    if group.lattice not in LATTICE_IMPLIES[metric]:
        raise ValueError(
            f"{group.name} needs a {group.lattice} cell; a {metric} cell "
            "cannot carry it"
        )
    if not 0.0 <= spec.pseudo_delta <= 1.0:
        raise ValueError("pseudo_delta must lie in [0, 1]")
    if spec.cells < 2:
        raise ValueError("need at least a 2x2 block of cells")

    blobs = None
    if spec.motif is None:
        if spec.pseudo_group is not None:
            sup = _resolve(spec.pseudo_group)
            if sup.lattice not in LATTICE_IMPLIES[metric]:
                raise ValueError(
                    f"pseudo group {sup.name} needs a {sup.lattice} cell"
                )
            blobs = _pseudo_blobs(group, spec.pseudo_group, spec.pseudo_delta)
        else:
            blobs = list(_BASE_BLOBS)
    elif spec.pseudo_group is not None or spec.pseudo_delta != 0.0:
        raise ValueError("pseudo_delta deformation applies to the built-in motif only")

    vectors, (width, height) = cell_vectors(metric, spec.cell_px, spec.cells)
    gram = _metric_gram(metric, vectors)
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    pix = np.stack([xx, yy], axis=-1)
    frac = pix @ np.linalg.inv(vectors.astype(np.float64))

    acc = np.zeros((height, width))
    for mt, tv in _direct_ops(group):
        moved = frac @ mt + tv
        if blobs is None:
            wrapped = moved - np.floor(moved)
            acc += spec.motif(wrapped[..., 0], wrapped[..., 1])
        else:
            for cu, cv, width, amp in blobs:
                d = moved - np.array([cu, cv])
                d -= np.rint(d)
                # Sum the 3x3 block of periodic images: keeping only the
                # nearest image would leave a seam discontinuity of order
                # exp(-cell^2 / 8 sigma^2), far above rounding noise.
                r2 = np.einsum("...i,ij,...j->...", d, gram, d)
                gd = d @ gram
                sigma2 = (width * spec.cell_px) ** 2
                for nu in (-1.0, 0.0, 1.0):
                    for nv in (-1.0, 0.0, 1.0):
                        shift = (
                            r2
                            - 2.0 * (nu * gd[..., 0] + nv * gd[..., 1])
                            + (nu * nu * gram[0, 0] + 2.0 * nu * nv * gram[0, 1]
                               + nv * nv * gram[1, 1])
                        )
                        acc += amp * np.exp(-0.5 * shift / sigma2)

    lo, hi = float(acc.min()), float(acc.max())
    if hi > lo:
        out = 15.0 + (acc - lo) * (225.0 / (hi - lo))
    else:
        out = np.full_like(acc, 128.0)
    return RasterImage.from_array(out)


def add_gaussian_noise(image: RasterImage, sigma: float, seed: int) -> RasterImage:
    """Add i.i.d. normal noise (gray levels), clamped to [0, 255]."""
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    if sigma == 0:
        return RasterImage.from_array(image.pixels.copy())
    rng = np.random.default_rng(seed)
    noisy = image.pixels + rng.normal(0.0, sigma, size=image.pixels.shape)
    return RasterImage.from_array(np.clip(noisy, 0.0, 255.0))


def add_spread_noise(image: RasterImage, radius: int, seed: int) -> RasterImage:
    """Shuffle pixel intensities locally, preserving the histogram exactly.

    In one scan-order pass, every pixel swaps values with a uniformly
    chosen pixel at most ``radius`` away in each axis (Chebyshev ball,
    wrapping at the borders so the choice stays uniform everywhere).
    Swaps permute the values, so the intensity histogram is unchanged.
    """
    if radius < 0:
        raise ValueError("radius must be >= 0")
    if radius == 0:
        return RasterImage.from_array(image.pixels.copy())
    h, w = image.pixels.shape
    n = h * w
    rng = np.random.default_rng(seed)
    dy = rng.integers(-radius, radius + 1, size=n)
    dx = rng.integers(-radius, radius + 1, size=n)
    ys = np.repeat(np.arange(h), w)
    xs = np.tile(np.arange(w), h)
    targets = ((ys + dy) % h) * w + (xs + dx) % w
    values = image.pixels.astype(np.float64).ravel().tolist()
    for i, j in enumerate(targets.tolist()):
        values[i], values[j] = values[j], values[i]
    out = np.array(values, dtype=np.float64).reshape(h, w)
    return RasterImage.from_array(out)


def apply_noise(image: RasterImage, spec: NoiseSpec) -> RasterImage:
    """Gaussian noise followed by spreading, with derived per-stage seeds."""
    noisy = add_gaussian_noise(image, spec.gaussian_sigma, spec.seed)
    return add_spread_noise(noisy, spec.spread_radius, spec.seed + 1)


def paper_trio(
    seed: int = DEFAULT_TRIO_SEED, cell_px: int = 96, cells: int = 12
) -> dict[str, RasterImage]:
    """The three-image experiment: a pseudosymmetric pattern under a mild,
    a moderate and a roughly five-times-stronger noise mix."""
    spec = MotifSpec(
        group=TRIO_GROUP,
        cell_px=cell_px,
        cells=cells,
        pseudo_delta=TRIO_DELTA,
        pseudo_group=TRIO_PSEUDO,
    )
    base = generate_pattern(spec)
    clean = apply_noise(base, NoiseSpec(CLEAN_SIGMA, CLEAN_SPREAD, seed))
    moderate = apply_noise(base, NoiseSpec(MODERATE_SIGMA, MODERATE_SPREAD, seed + 500))
    heavy = apply_noise(base, NoiseSpec(HEAVY_SIGMA, HEAVY_SPREAD, seed + 1000))
    return {"clean": clean, "moderate": moderate, "heavy": heavy}
