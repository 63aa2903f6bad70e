"""Shared golden data and brute-force oracles for the test suite.

The frozen tables below pin the reference classification of a fourfold
pattern with a weak p4gm pseudosymmetry at three noise levels (noise-free,
moderate, heavy).  Residuals are G-AIC inputs: J_cFC is the complex-valued
plane-group residual, J_aFC the amplitude-only Laue residual, N the number
of observed reflections.  The ascent rows record the model-comparison
ratios, thresholds, and verdicts that follow from those inputs.
"""

from fractions import Fraction

import numpy as np

from planesym.fourier import (
    CoefficientSet,
    FourierCoefficient,
    ReciprocalBasis,
    dft2,
    extract_coefficients,
    find_lattice,
)
from planesym.groups import LATTICE_IMPLIES, SETTINGS, canonical_index
from planesym.hierarchy import classify

# The pinned extraction settings for the three-image benchmark series: an
# open amplitude cut plus a resolution limit keeps orbit mates of weak
# glide/mirror reflections paired under heavy noise.
TRIO_DYNAMIC_RANGE = 1.0e9
TRIO_RESOLUTION_RADIUS = 174.0

# Setting pairs that are the same wallpaper-group type in swapped axis
# settings.  Lattice indexing is free to return either orientation, so
# type-level assertions must not distinguish them.
TYPE_EQUIVALENT = {
    "p1m1": "pm",
    "p11m": "pm",
    "p1g1": "pg",
    "p11g": "pg",
    "c1m1": "cm",
    "c11m": "cm",
    "p2mg": "pmg",
    "p2gm": "pmg",
}


def group_type(name):
    return TYPE_EQUIVALENT.get(name, name)


def rational_ascent_rhs(k_m, k_l, n_m, n_l):
    """Exact rational form of the ascent threshold."""
    k_m = Fraction(k_m)
    k_l = Fraction(k_l)
    ratio = Fraction(n_m) / Fraction(n_l)
    return 1 + 2 * (k_m - ratio * k_l) / (k_m * (k_l - 1))


# Residual inputs per setting: (j_cfc, j_afc, n).  The reference (p1) row
# carries no residual and is omitted; class-2 settings have no amplitude
# residual of their own.
INPUT_NOISE_FREE = {
    "p2": (0.0042, None, 956),
    "p1m1": (1.8799, 0.0052, 937),
    "p11m": (1.8642, 0.0052, 937),
    "p1g1": (0.0094, 0.0052, 934),
    "p11g": (0.0081, 0.0052, 934),
    "c1m1": (0.0103, 0.0053, 924),
    "c11m": (0.0110, 0.0053, 924),
    "p3": (2.5290, 1.3339, 954),
    "p2gg": (0.0096, 0.0052, 931),
    "c2mm": (0.0119, 0.0053, 924),
    "p4": (0.0065, 0.0021, 948),
    "p4mm": (1.9558, 0.0063, 918),
    "p4gm": (0.0102, 0.0061, 912),
}

INPUT_MODERATE = {
    "p2": (0.0041, None, 665),
    "p1m1": (1.7207, 0.0041, 654),
    "p11m": (1.7210, 0.0041, 654),
    "p1g1": (0.0059, 0.0041, 652),
    "p11g": (0.0066, 0.0041, 652),
    "c1m1": (0.0081, 0.0043, 655),
    "c11m": (0.0081, 0.0043, 655),
    "p3": (2.0554, 1.3052, 685),
    "p2gg": (0.0066, 0.0041, 650),
    "c2mm": (0.0102, 0.0043, 655),
    "p4": (0.0040, 0.0015, 648),
    "p4mm": (1.7934, 0.0050, 644),
    "p4gm": (0.0074, 0.0050, 640),
}

INPUT_HEAVY = {
    "p2": (0.0061, None, 275),
    "p1m1": (1.5353, 0.0039, 271),
    "p11m": (1.5320, 0.0039, 271),
    "p1g1": (0.0069, 0.0039, 265),
    "p11g": (0.0078, 0.0039, 270),
    "c1m1": (0.0085, 0.0041, 269),
    "c11m": (0.0074, 0.0041, 269),
    "p3": (1.7565, 1.2029, 306),
    "p2gg": (0.0098, 0.0039, 264),
    "c2mm": (0.0115, 0.0041, 269),
    "p4": (0.0088, 0.0028, 276),
    "p4mm": (1.5876, 0.0053, 276),
    "p4gm": (0.0109, 0.0051, 266),
}

# Ascent rows: (upper, lower, j_m, j_l, k_m, k_l, n_m, n_l, lhs, rhs, passes).
# lhs = j_m / j_l, rhs = ascent threshold from the (k, N) pairs, passes is
# the strict lhs < rhs verdict.
PLANE_ASCENT_NOISE_FREE = [
    ("p2gg", "p2", 0.0096, 0.0042, 4, 2, 931, 956, 2.285714, 2.02615063, False),
    ("p2gg", "p1g1", 0.0096, 0.0094, 4, 2, 931, 934, 1.021277, 2.00321199, True),
    ("p2gg", "p11g", 0.0096, 0.0081, 4, 2, 931, 934, 1.185185, 2.00321199, True),
    ("c2mm", "p2", 0.0119, 0.0042, 4, 2, 924, 956, 2.833333, 2.03347280, False),
    ("c2mm", "c1m1", 0.0119, 0.0103, 4, 2, 924, 924, 1.155340, 2.0, True),
    ("c2mm", "c11m", 0.0119, 0.0110, 4, 2, 924, 924, 1.081818, 2.0, True),
    ("p4", "p2", 0.0065, 0.0042, 4, 2, 948, 956, 1.547619, 2.00836820, True),
    ("p4mm", "p4", 1.9558, 0.0065, 8, 4, 918, 948, 300.8923, 1.34388186, False),
    ("p4gm", "p4", 0.0102, 0.0065, 8, 4, 912, 948, 1.569231, 1.34599156, False),
    ("p4gm", "p2gg", 0.0102, 0.0096, 8, 4, 912, 931, 1.06250, 1.34013605, True),
    ("p4gm", "c2mm", 0.0102, 0.0119, 8, 4, 912, 924, 0.857143, 1.33766234, True),
]

LAUE_ASCENT_NOISE_FREE = [
    ("4mm", "4", 0.0063, 0.0021, 8, 4, 918, 948, 3.0, 1.34388186, False),
    ("4mm", "4", 0.0061, 0.0021, 8, 4, 912, 948, 2.9047619, 1.34599156, False),
    ("4mm", "2mm", 0.0063, 0.0052, 8, 4, 918, 931, 1.2115385, 1.33798783, True),
    ("4mm", "2mm", 0.0063, 0.0053, 8, 4, 918, 924, 1.1886792, 1.33549784, True),
]

PLANE_ASCENT_MODERATE = [
    ("p2gg", "p2", 0.0066, 0.0041, 4, 2, 650, 665, 1.6097561, 2.02255639, True),
    ("p2gg", "p1g1", 0.0066, 0.0059, 4, 2, 650, 652, 1.1186441, 2.00306748, True),
    ("p2gg", "p11g", 0.0066, 0.0066, 4, 2, 650, 652, 1.0, 2.00306748, True),
    ("c2mm", "p2", 0.0102, 0.0041, 4, 2, 655, 665, 2.4878049, 2.01503759, False),
    ("c2mm", "c1m1", 0.0102, 0.0081, 4, 2, 655, 655, 1.2592593, 2.0, True),
    ("c2mm", "c11m", 0.0102, 0.0081, 4, 2, 655, 655, 1.2592593, 2.0, True),
    ("p4", "p2", 0.0040, 0.0041, 4, 2, 648, 665, 0.9756098, 2.02556391, True),
    ("p4mm", "p4", 1.7934, 0.0040, 8, 4, 644, 648, 448.35, 1.33539095, False),
    ("p4gm", "p4", 0.0074, 0.0040, 8, 4, 640, 648, 1.85, 1.33744856, False),
    ("p4gm", "p2gg", 0.0074, 0.0066, 8, 4, 640, 650, 1.1212121, 1.33846154, True),
    ("p4gm", "c2mm", 0.0074, 0.0102, 8, 4, 640, 655, 0.7254902, 1.34096692, True),
]

LAUE_ASCENT_MODERATE = [
    ("4mm", "4", 0.0050, 0.0015, 8, 4, 644, 648, 3.333333, 1.33539095, False),
    ("4mm", "4", 0.0050, 0.0015, 8, 4, 640, 648, 3.333333, 1.33744856, False),
    ("4mm", "2mm", 0.0050, 0.0041, 8, 4, 640, 650, 1.2195122, 1.33846154, True),
    ("4mm", "2mm", 0.0050, 0.0043, 8, 4, 644, 655, 1.1627907, 1.33893130, True),
]

PLANE_ASCENT_HEAVY = [
    ("p2gg", "p2", 0.0098, 0.0061, 4, 2, 264, 275, 1.6065574, 2.04, True),
    ("p2gg", "p1g1", 0.0098, 0.0069, 4, 2, 264, 265, 1.4202899, 2.00377358, True),
    ("p2gg", "p11g", 0.0098, 0.0078, 4, 2, 264, 270, 1.2564103, 2.02222222, True),
    ("c2mm", "p2", 0.0115, 0.0061, 4, 2, 269, 275, 1.8852459, 2.02181818, True),
    ("c2mm", "c1m1", 0.0115, 0.0085, 4, 2, 269, 269, 1.3529412, 2.0, True),
    ("c2mm", "c11m", 0.0115, 0.0074, 4, 2, 269, 269, 1.5540541, 2.0, True),
    ("p4", "p2", 0.0088, 0.0061, 4, 2, 276, 275, 1.442623, 1.99636364, True),
    ("p4mm", "p4", 1.5876, 0.0088, 8, 4, 276, 276, 180.4091, 1.33333333, False),
    ("p4gm", "p4", 0.0109, 0.0088, 8, 4, 266, 276, 1.2386364, 1.34541063, True),
    ("p4gm", "p2gg", 0.0109, 0.0098, 8, 4, 266, 264, 1.1122449, 1.33080808, True),
    ("p4gm", "c2mm", 0.0109, 0.0115, 8, 4, 266, 269, 0.947826, 1.33705081, True),
]

LAUE_ASCENT_HEAVY = [
    ("4mm", "4", 0.0053, 0.0028, 8, 4, 276, 276, 1.8928571, 1.33333333, False),
    ("4mm", "4", 0.0051, 0.0028, 8, 4, 266, 276, 1.8214286, 1.34541063, False),
    ("4mm", "2mm", 0.0051, 0.0039, 8, 4, 266, 269, 1.3076923, 1.33705081, True),
    ("4mm", "2mm", 0.0053, 0.0041, 8, 4, 276, 269, 1.2926829, 1.32465923, True),
]

ALL_ASCENT_ROWS = (
    PLANE_ASCENT_NOISE_FREE
    + LAUE_ASCENT_NOISE_FREE
    + PLANE_ASCENT_MODERATE
    + LAUE_ASCENT_MODERATE
    + PLANE_ASCENT_HEAVY
    + LAUE_ASCENT_HEAVY
)


def square_settings():
    """Settings whose lattice requirements a square cell satisfies."""
    allowed = LATTICE_IMPLIES["square"]
    return [name for name in SETTINGS if SETTINGS[name].lattice in allowed]


def toy_basis(step=4.0, field=64):
    return ReciprocalBasis(
        a_star=(float(step), 0.0),
        b_star=(0.0, float(step)),
        origin=(field // 2, field // 2),
        fit_rms=0.0,
        field_size=(field, field),
    )


def make_set(coeffs, basis=None, mean_level=100.0, intensity_scale=1.0):
    return CoefficientSet(
        coefficients=coeffs,
        dynamic_range=float("inf"),
        resolution_radius=0.0,
        basis=basis if basis is not None else toy_basis(),
        mean_level=mean_level,
        intensity_scale=intensity_scale,
    )


def random_coefficient_set(seed, nmax=5, basis=None, mean_level=100.0):
    """A coefficient set with random amplitudes and phases on the full
    canonical half-plane out to nmax."""
    rng = np.random.default_rng(seed)
    coeffs = {}
    for h in range(0, nmax + 1):
        for k in range(-nmax, nmax + 1):
            if h == 0 and k <= 0:
                continue
            amp = float(rng.uniform(100.0, 10000.0))
            phase = float(rng.uniform(-np.pi, np.pi))
            coeffs[(h, k)] = FourierCoefficient(h=h, k=k, amplitude=amp, phase=phase)
    return make_set(coeffs, basis=basis, mean_level=mean_level)


def tiled_random_cell(seed, cell_px=16, cells=4, band=5):
    """A periodic test image: one band-limited random cell tiled over the
    canvas.  Band limiting keeps all structure strictly inside the Nyquist
    disc of the tiled image."""
    rng = np.random.default_rng(seed)
    white = rng.normal(size=(cell_px, cell_px))
    spec = np.fft.fft2(white)
    freq = np.fft.fftfreq(cell_px, d=1.0 / cell_px)
    keep = np.abs(freq) <= band
    spec *= np.outer(keep, keep)
    cell = np.fft.ifft2(spec).real
    lo, hi = cell.min(), cell.max()
    cell = 20.0 + 215.0 * (cell - lo) / (hi - lo)
    return np.tile(cell, (cells, cells))


def direct_space_average(image, group, cell_px):
    """Average an exactly periodic image over a plane group's operations
    using integer pixel maps.  Valid when the cell is square and aligned
    with the pixel grid and cell_px is even."""
    image = np.asarray(image, dtype=float)
    height, width = image.shape
    ys, xs = np.indices(image.shape)
    total = np.zeros_like(image)
    ops = SETTINGS[group].ops
    for matrix, trans in ops:
        tx = int(trans[0] * cell_px)
        ty = int(trans[1] * cell_px)
        px = (matrix[0][0] * xs + matrix[0][1] * ys + tx) % width
        py = (matrix[1][0] * xs + matrix[1][1] * ys + ty) % height
        total += image[py, px]
    return total / len(ops)


def classify_image(image, dynamic_range=200.0, resolution_radius=None, config=None):
    """End-to-end classification of a raster image."""
    spectrum = dft2(image)
    basis = find_lattice(spectrum)
    coeffs = extract_coefficients(
        spectrum, basis,
        dynamic_range=dynamic_range,
        resolution_radius=resolution_radius,
    )
    return classify(coeffs, config)


def index_orbit(h, k, group):
    """Canonical storage keys of the orbit of (h, k) under a setting."""
    keys = set()
    for matrix, _ in SETTINGS[group].ops:
        hh = h * matrix[0][0] + k * matrix[1][0]
        kk = h * matrix[0][1] + k * matrix[1][1]
        key, _ = canonical_index(hh, kk)
        keys.add(key)
    return keys
