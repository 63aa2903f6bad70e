"""Transform, lattice indexing, extraction and synthesis round trips."""

import numpy as np
import pytest

from planesym.fourier import (
    CoefficientSet,
    FourierCoefficient,
    back_transform,
    dft2,
    extract_coefficients,
    find_lattice,
)
from planesym.hierarchy import ClassifyConfig, lattice_kinds
from planesym.image_io import RasterImage, circular_region
from planesym.synth import MotifSpec, generate_pattern

from helpers import make_set, tiled_random_cell, toy_basis


def _image(pixels):
    return RasterImage.from_array(pixels)


def _cosine_image(size, terms, mean=100.0):
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    out = np.full((size, size), mean)
    for (cx, cy), amp, phase in terms:
        out += amp * np.cos(2 * np.pi * (cx * xx + cy * yy) / size + phase)
    return _image(out)


def test_dft2_matches_the_textbook_sum():
    rng = np.random.default_rng(0)
    pixels = rng.uniform(0, 255, size=(12, 16))
    spectrum = dft2(_image(pixels))
    oy, ox = spectrum.origin
    ys, xs = np.mgrid[0:12, 0:16]
    for kx, ky in ((0, 0), (1, 0), (0, 1), (3, -2), (-5, 4)):
        direct = np.sum(
            pixels * np.exp(-2j * np.pi * (kx * xs / 16.0 + ky * ys / 12.0))
        )
        assert spectrum.coefficients[oy + ky, ox + kx] == pytest.approx(direct, rel=1e-10)
    assert spectrum.mean_level == pytest.approx(pixels.mean(), rel=1e-12)


def test_dft2_satisfies_parseval():
    rng = np.random.default_rng(1)
    pixels = rng.uniform(0, 255, size=(24, 24))
    spectrum = dft2(_image(pixels))
    power = np.sum(np.abs(spectrum.coefficients) ** 2)
    assert power == pytest.approx(24 * 24 * np.sum(pixels ** 2), rel=1e-12)


def test_masked_transform_works_on_the_disk_bounding_box():
    rng = np.random.default_rng(2)
    pixels = rng.uniform(0, 255, size=(32, 32))
    image = _image(pixels)
    region = circular_region(image, center=(16.0, 16.0), radius=10.0)
    spectrum = dft2(image, mask=region)
    assert spectrum.mean_level == pytest.approx(pixels[region.mask].mean(), rel=1e-12)
    rows = np.flatnonzero(region.mask.any(axis=1))
    assert spectrum.height == rows[-1] - rows[0] + 1
    oy, ox = spectrum.origin
    # Pixels outside the disk are replaced by the mean, so DC integrates
    # the same mean over the whole bounding box.
    dc = spectrum.coefficients[oy, ox]
    assert dc.real == pytest.approx(spectrum.mean_level * spectrum.width * spectrum.height, rel=1e-9)
    assert dc.imag == pytest.approx(0.0, abs=1e-6)


def test_extraction_recovers_cosine_amplitudes_and_phases():
    # Two commensurate cosines on a 64-pixel frame with a 16-pixel cell:
    # the sign convention puts the cosine phase directly into the stored
    # coefficient phase.
    image = _cosine_image(64, [
        ((4, 0), 30.0, 0.7),
        ((0, 8), 12.0, -1.2),
    ])
    spectrum = dft2(image)
    coeffs = extract_coefficients(spectrum, toy_basis(step=4.0, field=64))
    assert set(coeffs.coefficients) == {(1, 0), (0, 2)}
    assert coeffs.coefficients[(1, 0)].amplitude == pytest.approx(10000.0, rel=1e-9)
    assert coeffs.coefficients[(0, 2)].amplitude == pytest.approx(4000.0, rel=1e-9)
    assert coeffs.coefficients[(1, 0)].phase == pytest.approx(0.7, abs=1e-9)
    assert coeffs.coefficients[(0, 2)].phase == pytest.approx(-1.2, abs=1e-9)
    # intensity_scale turns normalized units back into cosine amplitude.
    assert 10000.0 * coeffs.intensity_scale == pytest.approx(30.0, rel=1e-9)


def test_dynamic_range_cut():
    image = _cosine_image(64, [
        ((4, 0), 30.0, 0.0),
        ((8, 4), 1.0, 0.3),
    ])
    spectrum = dft2(image)
    basis = toy_basis(step=4.0, field=64)
    wide = extract_coefficients(spectrum, basis, dynamic_range=100.0)
    narrow = extract_coefficients(spectrum, basis, dynamic_range=20.0)
    assert (2, 1) in wide.coefficients
    assert (2, 1) not in narrow.coefficients
    assert (1, 0) in narrow.coefficients
    with pytest.raises(ValueError):
        extract_coefficients(spectrum, basis, dynamic_range=0.5)


def test_resolution_radius_limits_and_validation():
    image = _cosine_image(64, [
        ((4, 0), 30.0, 0.0),
        ((0, 8), 12.0, -0.4),
    ])
    spectrum = dft2(image)
    basis = toy_basis(step=4.0, field=64)
    limited = extract_coefficients(spectrum, basis, resolution_radius=4.5)
    assert set(limited.coefficients) == {(1, 0)}
    assert limited.coefficients[(1, 0)].amplitude == pytest.approx(10000.0, rel=1e-9)
    with pytest.raises(ValueError):
        extract_coefficients(spectrum, basis, resolution_radius=33.0)


def test_back_transform_round_trip():
    pixels = tiled_random_cell(seed=5, cell_px=16, cells=4, band=5)
    image = _image(pixels)
    spectrum = dft2(image)
    coeffs = extract_coefficients(spectrum, toy_basis(step=4.0, field=64),
                                  dynamic_range=1e9)
    out = back_transform(coeffs, (64, 64), mean_level=spectrum.mean_level,
                         amplitude_scale=coeffs.intensity_scale)
    assert out.pixels.shape == (64, 64)
    assert np.max(np.abs(out.pixels - pixels)) < 1e-6 * np.ptp(pixels)


def test_back_transform_of_an_empty_set_is_constant():
    out = back_transform(make_set({}), (8, 10), mean_level=7.5)
    assert out.pixels.shape == (8, 10)
    assert np.all(out.pixels == 7.5)


def _cell_of(group, cell_px, cells, metric=None):
    image = generate_pattern(MotifSpec(group=group, cell_px=cell_px, cells=cells,
                                       metric=metric))
    basis = find_lattice(dft2(image))
    return basis.direct_cell()


def test_find_lattice_square_cell():
    a, b, gamma = _cell_of("p4", 32, 4)
    assert a == pytest.approx(32.0, abs=0.1)
    assert b == pytest.approx(32.0, abs=0.1)
    assert gamma == pytest.approx(90.0, abs=0.1)


def test_find_lattice_rectangular_cell():
    a, b, gamma = _cell_of("p1m1", 32, 4)
    assert sorted((a, b)) == pytest.approx([24.0, 32.0], abs=0.1)
    assert gamma == pytest.approx(90.0, abs=0.1)


def test_find_lattice_hexagonal_cell():
    a, b, gamma = _cell_of("p3", 24, 6)
    # The commensurate cell is [[24, 0], [-12, 21]]: equal lengths to
    # within 1 percent and gamma just under 120 degrees.
    assert abs(a - b) / (0.5 * (a + b)) < 0.02
    assert gamma == pytest.approx(119.74, abs=0.5)


def test_find_lattice_oblique_cell_preserves_area():
    a, b, gamma = _cell_of("p2", 32, 4)
    area = a * b * np.sin(np.radians(gamma))
    # Whatever primitive pair the reduction picks, the cell area is the
    # lattice invariant det([[32, 0], [8, 37]]).
    assert area == pytest.approx(32 * 37, rel=5e-3)
    kinds = lattice_kinds((a, b, gamma), ClassifyConfig())
    assert "oblique" in kinds
    assert "rectangular" not in kinds
    assert "square" not in kinds


def test_find_lattice_rhombic_cell():
    a, b, gamma = _cell_of("c1m1", 32, 4)
    kinds = lattice_kinds((a, b, gamma), ClassifyConfig())
    assert "rhombic" in kinds
    area = a * b * np.sin(np.radians(gamma))
    assert area == pytest.approx(2 * 24 * 10, rel=5e-3)


def test_find_lattice_grows_through_systematic_absences():
    # The visible shortest peaks of a fourfold glide pattern span only the
    # even-sum sublattice; indexing must recover the true cell anyway.
    image = generate_pattern(MotifSpec(group="p4gm", cell_px=32, cells=6))
    spectrum = dft2(image)
    basis = find_lattice(spectrum)
    a, b, gamma = basis.direct_cell()
    assert a == pytest.approx(32.0, rel=5e-3)
    assert b == pytest.approx(32.0, rel=5e-3)
    assert gamma == pytest.approx(90.0, abs=0.2)
    coeffs = extract_coefficients(spectrum, basis)
    keys = set(coeffs.coefficients)
    assert (1, 0) not in keys and (3, 0) not in keys
    assert any(hk in keys for hk in ((2, 1), (1, 2), (1, -2), (2, -1)))


def test_find_lattice_rejects_structureless_input():
    rng = np.random.default_rng(9)
    with pytest.raises(ValueError):
        find_lattice(dft2(_image(rng.uniform(0, 255, size=(128, 128)))))


def test_coefficient_set_validation():
    good = FourierCoefficient(h=1, k=0, amplitude=10.0, phase=0.0)
    make_set({(1, 0): good})
    with pytest.raises(ValueError):
        make_set({(-1, 0): FourierCoefficient(h=-1, k=0, amplitude=1.0, phase=0.0)})
    with pytest.raises(ValueError):
        make_set({(0, 0): FourierCoefficient(h=0, k=0, amplitude=1.0, phase=0.0)})
    with pytest.raises(ValueError):
        make_set({(1, 0): FourierCoefficient(h=1, k=0, amplitude=-2.0, phase=0.0)})


def test_value_extends_by_conjugation():
    coeffs = make_set({(2, -1): FourierCoefficient(h=2, k=-1, amplitude=5.0, phase=0.9)})
    v = coeffs.value(2, -1)
    w = coeffs.value(-2, 1)
    assert w == pytest.approx(v.conjugate(), rel=1e-12)
    with pytest.raises(KeyError):
        coeffs.value(1, 1)
