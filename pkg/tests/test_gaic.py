"""Model-selection arithmetic: thresholds, residuals, noise, confidence."""

import math
from fractions import Fraction

import numpy as np
import pytest

from planesym.fourier import FourierCoefficient
from planesym.gaic import (
    ascent_rhs,
    ascent_test,
    confidence_level,
    gaic_value,
    noise_estimate,
    residual_amplitude,
    residual_complex,
)
from planesym.groups import SETTINGS, laue_ops
from planesym.symmetrize import symmetrize_plane_group, symmetrize_point_class

from helpers import (
    ALL_ASCENT_ROWS,
    make_set,
    random_coefficient_set,
    rational_ascent_rhs,
)


def distinct_threshold_tuples():
    seen = {}
    for row in ALL_ASCENT_ROWS:
        _, _, _, _, k_m, k_l, n_m, n_l, _, _, _ = row
        seen[(k_m, k_l, n_m, n_l)] = True
    return sorted(seen)


@pytest.mark.parametrize("k_m,k_l,n_m,n_l", distinct_threshold_tuples())
def test_ascent_rhs_matches_rational_arithmetic(k_m, k_l, n_m, n_l):
    exact = rational_ascent_rhs(k_m, k_l, n_m, n_l)
    assert ascent_rhs(k_m, k_l, n_m, n_l) == pytest.approx(float(exact), abs=1e-12)


@pytest.mark.parametrize("row", ALL_ASCENT_ROWS, ids=lambda r: f"{r[0]}-over-{r[1]}-n{r[6]}")
def test_reference_thresholds(row):
    _, _, _, _, k_m, k_l, n_m, n_l, _, rhs_expected, _ = row
    assert ascent_rhs(k_m, k_l, n_m, n_l) == pytest.approx(rhs_expected, abs=1e-6)


@pytest.mark.parametrize("row", ALL_ASCENT_ROWS, ids=lambda r: f"{r[0]}-over-{r[1]}-n{r[6]}")
def test_reference_ratios_and_verdicts(row):
    _, _, j_m, j_l, k_m, k_l, n_m, n_l, lhs_expected, _, passes = row
    outcome = ascent_test(j_m, j_l, k_m, k_l, n_m, n_l)
    assert outcome.lhs == pytest.approx(lhs_expected, abs=1e-6 * max(1.0, lhs_expected))
    assert outcome.passed is passes


def test_ascent_test_is_strict_at_the_threshold():
    k_m, k_l, n_m, n_l = 4, 2, 931, 956
    rhs = ascent_rhs(k_m, k_l, n_m, n_l)
    j_l = 0.0042
    assert not ascent_test(j_l * rhs, j_l, k_m, k_l, n_m, n_l).passed
    assert ascent_test(j_l * rhs * (1 - 1e-12), j_l, k_m, k_l, n_m, n_l).passed


def test_ascent_from_k1_is_rejected():
    with pytest.raises(ValueError):
        ascent_rhs(2, 1, 900, 900)


def test_ascent_test_requires_positive_subgroup_residual():
    with pytest.raises(ValueError):
        ascent_test(0.01, 0.0, 4, 2, 900, 900)
    with pytest.raises(ValueError):
        ascent_test(0.01, -0.1, 4, 2, 900, 900)


def test_gaic_value_formula():
    j, n, k, eps2 = 0.0065, 948, 4, 9.1421e-6
    expected = Fraction("0.0065") + 2 * Fraction(948, 4) * Fraction("9.1421e-6")
    assert gaic_value(j, n, k, eps2) == pytest.approx(float(expected), rel=1e-12)
    with pytest.raises(ValueError):
        gaic_value(0.1, 100, 0, 1e-6)
    with pytest.raises(ValueError):
        gaic_value(0.1, 100, 2, -1e-6)


def test_ascent_equals_gaic_ordering():
    # The climbing-up inequality is algebraically the statement that the
    # supergroup model has the smaller geometric AIC when the noise level
    # is estimated from the subgroup model.
    rng = np.random.default_rng(42)
    for _ in range(300):
        k_l = int(rng.choice([2, 3, 4]))
        k_m = k_l * int(rng.choice([2, 3]))
        n_l = int(rng.integers(50, 1200))
        n_m = int(rng.integers(max(10, n_l // 2), n_l + 1))
        j_l = float(rng.uniform(1e-4, 1.0))
        j_m = float(rng.uniform(1e-4, 3.0))
        eps2 = noise_estimate(j_l, n_l, k_l)
        outcome = ascent_test(j_m, j_l, k_m, k_l, n_m, n_l)
        better = gaic_value(j_m, n_m, k_m, eps2) < gaic_value(j_l, n_l, k_l, eps2)
        assert outcome.passed == better


def test_noise_estimate_reference_value():
    assert noise_estimate(0.0065, 948, 4) == pytest.approx(0.0065 / 711.0, rel=1e-12)


def test_noise_estimate_monotonicity_and_domain():
    base = noise_estimate(0.01, 600, 4)
    assert noise_estimate(0.02, 600, 4) > base
    assert noise_estimate(0.01, 800, 4) < base
    with pytest.raises(ValueError):
        noise_estimate(0.01, 600, 1)


def test_confidence_boundary_values():
    k_m, k_l, n_m, n_l = 4, 2, 948, 956
    rhs = ascent_rhs(k_m, k_l, n_m, n_l)
    assert confidence_level(1.0, k_m, k_l, n_m, n_l) == pytest.approx(1.0, abs=1e-12)
    assert confidence_level(rhs, k_m, k_l, n_m, n_l) == pytest.approx(0.0, abs=1e-9)
    beyond = confidence_level(rhs * 1.5, k_m, k_l, n_m, n_l)
    assert beyond < 0.0


def test_confidence_domain_errors():
    with pytest.raises(ValueError):
        confidence_level(-0.1, 4, 2, 900, 900)
    with pytest.raises(ValueError):
        confidence_level(1.2, 4, 1, 900, 900)


def _two_index_set(values):
    coeffs = {
        (h, k): FourierCoefficient(h=h, k=k, amplitude=abs(v),
                                   phase=math.atan2(v.imag, v.real))
        for (h, k), v in values.items()
    }
    return make_set(coeffs)


def test_residual_counts_model_missing_indices_at_full_power():
    trans = _two_index_set({(1, 0): 3 + 4j, (0, 1): 2 + 0j})
    sym = _two_index_set({(0, 1): 2 + 0j})
    assert residual_complex(trans, sym) == pytest.approx(25.0, rel=1e-12)
    assert residual_amplitude(trans, sym) == pytest.approx(25.0, rel=1e-12)


def test_residual_is_a_raw_sum_of_squares():
    trans = _two_index_set({(1, 0): 3 + 4j, (0, 1): 1 + 1j})
    sym = _two_index_set({(1, 0): 3 + 0j, (0, 1): 1 + 1j})
    assert residual_complex(trans, sym) == pytest.approx(16.0, rel=1e-12)
    assert residual_amplitude(trans, sym) == pytest.approx((5.0 - 3.0) ** 2, rel=1e-12)


def test_residual_requires_shared_indices():
    a = _two_index_set({(1, 0): 1 + 0j})
    b = _two_index_set({(0, 1): 1 + 0j})
    with pytest.raises(ValueError):
        residual_complex(a, b)


def test_translation_model_residual_is_zero():
    for seed in range(3):
        trans = random_coefficient_set(seed)
        model = symmetrize_plane_group(trans, SETTINGS["p1"])
        total = sum(c.amplitude ** 2 for c in trans.coefficients.values())
        assert residual_complex(trans, model) <= 1e-16 * total


def test_class_two_amplitude_residual_is_zero():
    for seed in range(3):
        trans = random_coefficient_set(seed + 10)
        model = symmetrize_point_class(trans, laue_ops(SETTINGS["p2"]))
        assert residual_amplitude(trans, model) == 0.0
