"""Fourier side of the pipeline: DFT, lattice determination, coefficients.

The forward transform follows the analysis convention
``I(x) = mean + sum_j A_j cos(2 pi q_j . x + phi_j)``, i.e. coefficients
are read off a numpy forward FFT and synthesized back with positive
frequency sign.  Reciprocal positions are measured in DFT grid units
("reciprocal pixels") relative to the centered DC term.
"""

from __future__ import annotations

import cmath
import itertools
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .image_io import RasterImage, RegionSelection
from .groups import canonical_index


@dataclass(frozen=True)
class SpectralMap:
    """DC-centered complex DFT of a (masked) image region."""

    width: int
    height: int
    coefficients: np.ndarray
    mean_level: float

    @property
    def origin(self) -> tuple[int, int]:
        """Grid position (row, col) of the DC coefficient."""
        return (self.height // 2, self.width // 2)


@dataclass(frozen=True)
class ReciprocalBasis:
    """Refined reciprocal-lattice basis on a DFT grid.

    ``a_star``/``b_star`` are (x, y) vectors in reciprocal pixels relative
    to DC; ``field_size`` is the (width, height) of the transform the
    basis was measured on, needed to convert grid offsets to spatial
    frequencies.
    """

    a_star: tuple[float, float]
    b_star: tuple[float, float]
    origin: tuple[int, int]
    fit_rms: float
    field_size: tuple[int, int]
    n_peaks: int = 0
    n_indexed: int = 0

    def frequency(self, h: int, k: int) -> tuple[float, float]:
        """Spatial frequency (cycles per pixel) of reflection (h, k)."""
        qx = h * self.a_star[0] + k * self.b_star[0]
        qy = h * self.a_star[1] + k * self.b_star[1]
        return (qx / self.field_size[0], qy / self.field_size[1])

    def position(self, h: int, k: int) -> tuple[float, float]:
        """Grid position (col, row) of reflection (h, k)."""
        return (
            self.origin[1] + h * self.a_star[0] + k * self.b_star[0],
            self.origin[0] + h * self.a_star[1] + k * self.b_star[1],
        )

    def direct_cell(self) -> tuple[float, float, float]:
        """Direct-space lattice parameters (a, b in pixels, gamma in deg).

        The direct basis is the inverse transpose of the frequency matrix;
        gamma is canonicalized into [90, 180) by flipping b when acute.
        """
        freq = np.array(
            [
                [self.a_star[0] / self.field_size[0], self.a_star[1] / self.field_size[1]],
                [self.b_star[0] / self.field_size[0], self.b_star[1] / self.field_size[1]],
            ]
        )
        direct = np.linalg.inv(freq).T
        av, bv = direct[0], direct[1]
        a, b = float(np.hypot(*av)), float(np.hypot(*bv))
        cosg = float(np.dot(av, bv) / (a * b))
        gamma = float(np.degrees(np.arccos(np.clip(cosg, -1.0, 1.0))))
        if gamma < 90.0:
            gamma = 180.0 - gamma
        return a, b, gamma


@dataclass(frozen=True)
class FourierCoefficient:
    """One structure-bearing coefficient on the normalized amplitude scale."""

    h: int
    k: int
    amplitude: float
    phase: float

    @property
    def value(self) -> complex:
        return self.amplitude * cmath.exp(1j * self.phase)


@dataclass(frozen=True)
class CoefficientSet:
    """Half-set of Fourier coefficients indexed by canonical (h, k).

    Stored indices satisfy ``h > 0 or (h == 0 and k > 0)``; the coefficient
    at ``(-h, -k)`` is implicitly the complex conjugate (real input).  The
    DC term is excluded and carried as ``mean_level``.  ``intensity_scale``
    converts one normalized amplitude unit back to the direct-space cosine
    amplitude of the source region.
    """

    coefficients: dict[tuple[int, int], FourierCoefficient]
    dynamic_range: float
    resolution_radius: float
    basis: ReciprocalBasis
    mean_level: float = 0.0
    intensity_scale: float = 1.0

    def __post_init__(self) -> None:
        for (h, k), coef in self.coefficients.items():
            if (h, k) == (0, 0):
                raise ValueError("(0, 0) must not be stored in a coefficient set")
            if not (h > 0 or (h == 0 and k > 0)):
                raise ValueError(f"non-canonical index ({h}, {k}) in coefficient set")
            if coef.amplitude < 0:
                raise ValueError(f"negative amplitude at ({h}, {k})")

    @property
    def n_count(self) -> int:
        return len(self.coefficients)

    def value(self, h: int, k: int) -> complex:
        """Complex value at any index of the full set (conjugate-extended)."""
        (ch, ck), conj = canonical_index(h, k)
        v = self.coefficients[(ch, ck)].value
        return v.conjugate() if conj else v

    def max_amplitude(self) -> float:
        return max(c.amplitude for c in self.coefficients.values()) if self.coefficients else 0.0


def dft2(image: RasterImage, mask: RegionSelection | None = None) -> SpectralMap:
    """DC-centered forward DFT of the image or of a circular selection.

    With a mask the transform is taken over the mask's bounding box with
    pixels outside the disk replaced by the selection mean, which keeps
    the aperture from leaking a cross term into every frequency.
    """
    if mask is None:
        data = image.pixels.astype(np.float64)
        mean = float(data.mean())
    else:
        if mask.mask.shape != image.pixels.shape:
            raise ValueError("mask shape does not match image")
        rows = np.flatnonzero(mask.mask.any(axis=1))
        cols = np.flatnonzero(mask.mask.any(axis=0))
        sub = image.pixels[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1].astype(np.float64)
        submask = mask.mask[rows[0]:rows[-1] + 1, cols[0]:cols[-1] + 1]
        mean = float(sub[submask].mean())
        data = np.where(submask, sub, mean)
    spectrum = np.fft.fftshift(np.fft.fft2(data))
    return SpectralMap(
        width=data.shape[1],
        height=data.shape[0],
        coefficients=spectrum,
        mean_level=mean,
    )


def _lattice_span(vectors: list[np.ndarray], reach: int = 3) -> tuple[np.ndarray, np.ndarray]:
    """Two shortest non-collinear generators of the lattice spanned by
    small integer combinations of the candidate vectors."""
    coeffs = range(-reach, reach + 1)
    base = np.array(vectors)
    combos: list[np.ndarray] = []
    for ms in itertools.product(coeffs, repeat=len(vectors)):
        v = np.dot(ms, base)
        if np.hypot(v[0], v[1]) < 1e-9:
            continue
        combos.append(v)
    best: list[np.ndarray] = []
    for v in sorted(combos, key=lambda u: float(np.hypot(u[0], u[1]))):
        if not best:
            best.append(v)
            continue
        cross = best[0][0] * v[1] - best[0][1] * v[0]
        if abs(cross) > 0.05 * np.hypot(*best[0]) * np.hypot(*v):
            best.append(v)
            break
    if len(best) < 2:
        raise ValueError("collinear peak set: cannot span a 2D lattice")
    return best[0], best[1]


def _reduce_canonical(
    a: np.ndarray, b: np.ndarray, field_size: tuple[int, int]
) -> tuple[np.ndarray, np.ndarray]:
    """Lagrange-Gauss reduction plus a Bravais-conventional snap.

    Lengths and angles are measured in spatial-frequency units because the
    DFT grid is anisotropic for non-square fields; the integer transforms
    found there are applied to the grid-unit vectors.  A reduced hexagonal
    pair is turned to 60 degrees (120-degree direct cell) and a reduced
    centered-rectangular pair sitting on the reduction boundary
    (|a.b| = a^2/2) is replaced by the equal-length primitive pair, which
    is the setting the centered-group operation matrices assume.
    """
    w, h = field_size
    scale = np.array([1.0 / w, 1.0 / h])
    a, b = a.astype(np.float64).copy(), b.astype(np.float64).copy()
    while True:
        pa, pb = a * scale, b * scale
        if pa @ pa > pb @ pb:
            a, b = b, a
            continue
        m = round(float((pa @ pb) / (pa @ pa)))
        if m == 0:
            break
        b = b - m * a
    pa, pb = a * scale, b * scale
    if pa[0] * pb[1] - pa[1] * pb[0] < 0:
        b = -b
        pb = -pb
    la, lb = float(np.hypot(*pa)), float(np.hypot(*pb))
    dot = float(pa @ pb)
    if abs(la - lb) <= 0.01 * (la + lb):
        # cos within 0.031 of -1/2 is gamma within ~2 degrees of 120.
        if abs(dot / (la * lb) + 0.5) <= 0.031:
            b = a + b
    elif abs(2.0 * abs(dot) - la * la) <= 0.05 * la * la:
        if dot > 0:
            a, b = b.copy(), b - a
        else:
            a, b = a + b, b.copy()
    return a, b


def find_lattice(spectrum: SpectralMap, min_peak_snr: float = 10.0) -> ReciprocalBasis:
    """Locate reciprocal-lattice peaks and fit a reduced basis.

    Local maxima above ``min_peak_snr`` times the median amplitude are
    refined to sub-pixel positions by 3x3 center of mass.  The basis
    starts from the two shortest non-collinear peak vectors and is grown
    whenever strong peaks index at half-integral coordinates (systematic
    absences can make the naive shortest pair span only a sublattice),
    then refined by least squares over all indexable peaks and reduced to
    the Bravais-conventional setting.
    """
    amp = np.abs(spectrum.coefficients)
    oy, ox = spectrum.origin
    background = float(np.median(amp))
    if background <= 0:
        background = float(amp.mean()) or 1.0
    threshold = min_peak_snr * background

    local_max = amp == ndimage.maximum_filter(amp, size=3, mode="constant")
    candidates = local_max & (amp > threshold)
    candidates[0, :] = candidates[-1, :] = False
    candidates[:, 0] = candidates[:, -1] = False
    yy, xx = np.nonzero(candidates)
    rr = np.hypot(xx - ox, yy - oy)
    keep = rr > 2.0
    yy, xx = yy[keep], xx[keep]
    if len(xx) < 2:
        raise ValueError("fewer than 2 independent peaks above the detection threshold")

    order = np.argsort(amp[yy, xx])[::-1][:160]
    peaks = []
    strengths = []
    for y, x in zip(yy[order], xx[order]):
        window = amp[y - 1:y + 2, x - 1:x + 2]
        total = window.sum()
        gy, gx = np.mgrid[y - 1:y + 2, x - 1:x + 2]
        py = float((window * gy).sum() / total)
        px = float((window * gx).sum() / total)
        peaks.append((px - ox, py - oy))
        strengths.append(float(amp[y, x]))
    pv = np.array(peaks)
    pw = np.array(strengths)

    # Seed the basis from the strongest peaks only: windowed (masked)
    # transforms surround every true peak with weak sidelobes, and a
    # sidelobe must not become a basis vector just for being short.
    pool = pv[: min(len(pv), 40)]
    by_norm = pool[np.argsort(np.hypot(pool[:, 0], pool[:, 1]))]
    a = by_norm[0]
    b = None
    for cand in by_norm[1:]:
        cross = a[0] * cand[1] - a[1] * cand[0]
        if abs(cross) > 0.05 * np.hypot(*a) * np.hypot(*cand):
            b = cand
            break
    if b is None:
        raise ValueError("all detected peaks are collinear")

    basis = np.array([a, b], dtype=np.float64)
    indexed = np.zeros((len(pv), 2))
    for _ in range(24):
        frac = pv @ np.linalg.inv(basis)
        indexed = np.rint(frac)
        resid = pv - indexed @ basis
        miss = np.hypot(resid[:, 0], resid[:, 1])
        tol = 0.25 * min(np.hypot(*basis[0]), np.hypot(*basis[1]))
        bad = miss > tol
        good = ~bad
        # Polish the basis against the peaks that already index before
        # judging the rest: the seed comes from one noisy centroid, and
        # its scale error grows with the index, so far orders can look
        # off-lattice under a seed that is merely imprecise.
        if good.sum() >= 2 and np.linalg.matrix_rank(indexed[good]) == 2:
            new_basis, _, _, _ = np.linalg.lstsq(indexed[good], pv[good], rcond=None)
            if not np.allclose(new_basis, basis, atol=1e-10):
                basis = new_basis
                continue
        if bad.sum() > 0.2 * len(pv):
            # Many peaks off the lattice usually means the naive basis
            # spans only a sublattice (systematic absences hide the short
            # vectors).  Misses then sit at simple fractional indices, so
            # grow by the exact subdivision vector rather than a noisy
            # residual, which keeps the span well conditioned.
            off = frac[bad] % 1.0
            # Quarters arise when the seed pair spans an index-4 sublattice
            # (two absences compose); thirds cover hexagonal subdivisions.
            snaps = np.array([0.0, 0.25, 1.0 / 3.0, 0.5, 2.0 / 3.0, 0.75, 1.0])
            nearest = np.argmin(np.abs(off[:, :, None] - snaps[None, None, :]), axis=2)
            snapped = snaps[nearest] % 1.0
            err = np.abs(off - snaps[nearest])
            usable = (err < 0.12).all(axis=1) & (snapped.sum(axis=1) > 0)
            # Absence-hidden reflections are as strong as the indexed ones;
            # window sidelobes are not.  Subdivide only when the off-lattice
            # peaks carry real weight, else discard them as artifacts.
            weighty = pw[bad][usable].sum() >= 0.1 * pw[~bad].sum()
            if usable.sum() >= max(4, 0.3 * bad.sum()) and weighty:
                classes, counts = np.unique(snapped[usable], axis=0, return_counts=True)
                p, q = classes[int(np.argmax(counts))]
                v = p * basis[0] + q * basis[1]
                a2, b2 = _lattice_span([basis[0], basis[1], v])
                basis = np.array([a2, b2])
            else:
                pv, pw = pv[~bad], pw[~bad]
                if len(pv) < 2:
                    raise ValueError(
                        "fewer than 2 peaks index on any candidate lattice"
                    )
            continue
        break

    frac = pv @ np.linalg.inv(basis)
    indexed = np.rint(frac)
    resid = pv - indexed @ basis
    miss = np.hypot(resid[:, 0], resid[:, 1])
    tol = 0.25 * min(np.hypot(*basis[0]), np.hypot(*basis[1]))
    good = miss <= tol
    if good.sum() < 2:
        raise ValueError("fewer than 2 peaks index on the fitted lattice")
    fit_rms = float(np.sqrt(np.mean(miss[good] ** 2)))

    a_red, b_red = _reduce_canonical(basis[0], basis[1], (spectrum.width, spectrum.height))
    det = abs(a_red[0] * b_red[1] - a_red[1] * b_red[0])
    if min(np.hypot(*a_red), np.hypot(*b_red)) < 1.0 or det < 1.0:
        raise ValueError(
            "degenerate reciprocal basis: fitted peak spacing is below one "
            "grid step (image may not be periodic)"
        )
    return ReciprocalBasis(
        a_star=(float(a_red[0]), float(a_red[1])),
        b_star=(float(b_red[0]), float(b_red[1])),
        origin=(oy, ox),
        fit_rms=fit_rms,
        field_size=(spectrum.width, spectrum.height),
        n_peaks=int(len(pv)),
        n_indexed=int(good.sum()),
    )


def _bilinear(grid: np.ndarray, x: float, y: float) -> complex | None:
    """Complex bilinear sample at (col, row); None if the stencil leaves
    the grid."""
    x0, y0 = int(np.floor(x)), int(np.floor(y))
    if x0 < 0 or y0 < 0 or x0 + 1 >= grid.shape[1] or y0 + 1 >= grid.shape[0]:
        return None
    fx, fy = x - x0, y - y0
    return complex(
        grid[y0, x0] * (1 - fx) * (1 - fy)
        + grid[y0, x0 + 1] * fx * (1 - fy)
        + grid[y0 + 1, x0] * (1 - fx) * fy
        + grid[y0 + 1, x0 + 1] * fx * fy
    )


def extract_coefficients(
    spectrum: SpectralMap,
    basis: ReciprocalBasis,
    dynamic_range: float = 200.0,
    resolution_radius: float | None = None,
) -> CoefficientSet:
    """Sample the lattice reflections and return the normalized half set.

    Every integer (h, k) other than (0, 0) whose predicted position falls
    within ``resolution_radius`` of DC is sampled by complex bilinear
    interpolation; Friedel mates are averaged into one stored coefficient.
    Amplitudes are rescaled so the strongest equals 10000 and entries
    below ``10000 / dynamic_range`` are dropped.
    """
    if dynamic_range < 1.0:
        raise ValueError("dynamic_range must be >= 1")
    nyquist = min(spectrum.width, spectrum.height) / 2.0
    if resolution_radius is None:
        resolution_radius = nyquist
    if resolution_radius > nyquist + 1e-9:
        raise ValueError("resolution_radius exceeds the Nyquist limit")

    bmat = np.array([basis.a_star, basis.b_star], dtype=np.float64)
    inv = np.linalg.inv(bmat)
    hmax = int(np.ceil(resolution_radius * np.abs(inv[:, 0]).sum())) + 1
    kmax = int(np.ceil(resolution_radius * np.abs(inv[:, 1]).sum())) + 1
    if (2 * hmax + 1) * (2 * kmax + 1) > 4_000_000:
        raise ValueError(
            "reciprocal basis too fine for the resolution window "
            f"(would enumerate {(2 * hmax + 1) * (2 * kmax + 1)} indices)"
        )

    oy, ox = spectrum.origin
    raw: dict[tuple[int, int], complex] = {}
    for h in range(0, hmax + 1):
        krange = range(1, kmax + 1) if h == 0 else range(-kmax, kmax + 1)
        for k in krange:
            qx = h * bmat[0, 0] + k * bmat[1, 0]
            qy = h * bmat[0, 1] + k * bmat[1, 1]
            if np.hypot(qx, qy) > resolution_radius:
                continue
            plus = _bilinear(spectrum.coefficients, ox + qx, oy + qy)
            minus = _bilinear(spectrum.coefficients, ox - qx, oy - qy)
            if plus is None or minus is None:
                continue
            raw[(h, k)] = 0.5 * (plus + minus.conjugate())

    if not raw:
        raise ValueError("no reflections inside the resolution limit")
    amps = {hk: abs(v) for hk, v in raw.items()}
    max_amp = max(amps.values())
    if max_amp <= 0:
        raise ValueError("all sampled reflections vanish")
    cutoff = max_amp / dynamic_range
    scale = 10000.0 / max_amp

    kept: dict[tuple[int, int], FourierCoefficient] = {}
    for hk, v in raw.items():
        if amps[hk] >= cutoff:
            kept[hk] = FourierCoefficient(
                h=hk[0], k=hk[1], amplitude=amps[hk] * scale, phase=cmath.phase(v)
            )
    if not kept:
        raise ValueError("no coefficients above the dynamic-range threshold")

    npix = spectrum.width * spectrum.height
    return CoefficientSet(
        coefficients=kept,
        dynamic_range=float(dynamic_range),
        resolution_radius=float(resolution_radius),
        basis=basis,
        mean_level=spectrum.mean_level,
        intensity_scale=2.0 * max_amp / (npix * 10000.0),
    )


def back_transform(
    coeffs: CoefficientSet,
    out_size: int | tuple[int, int],
    mean_level: float | None = None,
    amplitude_scale: float = 1.0,
) -> RasterImage:
    """Direct-space synthesis of the coefficient set.

    ``I(x) = mean + sum_j s A_j cos(2 pi q_j . x + phi_j)`` over the stored
    half set, evaluated on an ``out_size`` pixel grid in the frame of the
    transformed region (phases are referenced to its first pixel).  An
    empty set yields the constant mean image.
    """
    if isinstance(out_size, int):
        height, width = out_size, out_size
    else:
        height, width = out_size
    if mean_level is None:
        mean_level = coeffs.mean_level
    if not coeffs.coefficients:
        return RasterImage.from_array(np.full((height, width), mean_level, dtype=np.float64))

    items = list(coeffs.coefficients.values())
    fx = np.empty(len(items))
    fy = np.empty(len(items))
    cval = np.empty(len(items), dtype=np.complex128)
    for j, c in enumerate(items):
        fx[j], fy[j] = coeffs.basis.frequency(c.h, c.k)
        cval[j] = amplitude_scale * c.amplitude * cmath.exp(1j * c.phase)

    xs = np.arange(width)
    ys = np.arange(height)
    # Rank-1 accumulation as one complex matrix product:
    #   sum_j c_j exp(2 pi i fy_j y) exp(2 pi i fx_j x)
    col = np.exp(2j * np.pi * np.outer(ys, fy)) * cval[None, :]
    row = np.exp(2j * np.pi * np.outer(fx, xs))
    pixels = mean_level + (col @ row).real
    return RasterImage.from_array(pixels)
