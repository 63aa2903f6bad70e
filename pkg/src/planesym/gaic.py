"""Residual sums, geometric-AIC arithmetic, ascent tests, confidence.

The information criterion for a symmetry model with residual ``J`` over
``N`` coefficients and ``k`` operations per lattice point is

    G-AIC = J + 2 (d N + n) eps^2,    d = 0,  n = N / k,

so comparing a minimal supergroup m against a maximal subgroup l reduces
to the ascent inequality

    J_m / J_l < 1 + 2 (k_m - (N_m / N_l) k_l) / (k_m (k_l - 1)),

whose equal-N form is the inset value printed on the hierarchy-tree edges.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .fourier import CoefficientSet


@dataclass(frozen=True)
class ResidualPair:
    """Complex and amplitude residuals of one symmetry model."""

    j_complex: float
    j_amplitude: float
    n_count: int
    k: int


@dataclass(frozen=True)
class GaicParams:
    """Fixed criterion parameters: model dimension 0, co-dimension 1."""

    eps2: float
    d: int = 0
    r: int = 1


@dataclass(frozen=True)
class AscentOutcome:
    """One climbing-up test along a tree edge."""

    lhs: float
    rhs: float
    passed: bool


def _paired_residual(trans: CoefficientSet, sym: CoefficientSet, amplitude: bool) -> float:
    t_keys = set(trans.coefficients)
    s_keys = set(sym.coefficients)
    if not t_keys & s_keys:
        raise ValueError("coefficient sets share no indices (lattice or indexing mismatch)")
    total = 0.0
    for hk in t_keys:
        tc = trans.coefficients[hk]
        sc = sym.coefficients.get(hk)
        if amplitude:
            model = sc.amplitude if sc is not None else 0.0
            total += (tc.amplitude - model) ** 2
        else:
            model = sc.value if sc is not None else 0.0j
            diff = tc.value - model
            total += diff.real**2 + diff.imag**2
    return total


def residual_complex(trans: CoefficientSet, sym: CoefficientSet) -> float:
    """Sum of squared complex differences over the translation set's
    indices; indices the model drops as absent count with their full
    squared amplitude (the model claims them zero)."""
    return _paired_residual(trans, sym, amplitude=False)


def residual_amplitude(trans: CoefficientSet, sym: CoefficientSet) -> float:
    """Sum of squared amplitude differences, same index accounting as
    ``residual_complex``."""
    return _paired_residual(trans, sym, amplitude=True)


def gaic_value(j: float, n_count: int, k: int, eps2: float) -> float:
    """Geometric AIC of a model: ``J + 2 (N / k) eps2``."""
    if k < 1:
        raise ValueError("k must be >= 1")
    if eps2 < 0:
        raise ValueError("eps2 must be non-negative")
    return j + 2.0 * (n_count / k) * eps2

def ascent_rhs(k_m: int, k_l: int, n_m: int, n_l: int) -> float:
    """Right-hand side of the climbing-up inequality along a tree edge."""
    if k_l <= 1:
        raise ValueError("ascent from a k = 1 model is impossible")
    return 1.0 + 2.0 * (k_m - (n_m / n_l) * k_l) / (k_m * (k_l - 1))


def ascent_test(
    j_m: float, j_l: float, k_m: int, k_l: int, n_m: int, n_l: int
) -> AscentOutcome:
    """Test whether a climb from the subgroup model to the supergroup
    model is statistically allowed (strict inequality)."""
    if j_l <= 0:
        raise ValueError("subgroup residual must be positive for an ascent test")
    lhs = j_m / j_l
    rhs = ascent_rhs(k_m, k_l, n_m, n_l)
    return AscentOutcome(lhs=lhs, rhs=rhs, passed=lhs < rhs)


def noise_estimate(j: float, n_count: int, k: int) -> float:
    """Noise variance of the best model: ``eps2 = J / (N - N / k)``."""
    if k < 2:
        raise ValueError("noise estimation needs k >= 2 (N - N/k must be positive)")
    return j / (n_count - n_count / k)


def confidence_level(ratio: float, k_m: int, k_l: int, n_m: int, n_l: int) -> float:
    """Confidence in an identified minimal supergroup, from the residual
    ratio ``J_m / J_l``.

    ``C = (1 - K) / (1 - K_crit)`` with

        K(ratio)  = sqrt[(ratio + 2 N_m k_l / (k_m N_l (k_l - 1)))
                         * (k_l - 1) / (k_l + 1)]
        K_crit    = K(1)

    which is the square root of the ratio of the two models' criterion
    values under the shared subgroup noise estimate.  C equals 1 at
    ratio 1, falls strictly to 0 at the ascent-inequality boundary, and
    goes negative (reported verbatim) when the ascent test fails.
    """
    if ratio < 0:
        raise ValueError("residual ratio must be non-negative")
    if k_l <= 1:
        raise ValueError("confidence needs k_l >= 2")

    def kfun(rho: float) -> float:
        return math.sqrt((rho + 2.0 * n_m * k_l / (k_m * n_l * (k_l - 1)))
                         * (k_l - 1) / (k_l + 1))

    k_crit = kfun(1.0)
    if k_crit >= 1.0:
        raise ValueError("degenerate edge: zero-confidence boundary at or below ratio 1")
    return (1.0 - kfun(ratio)) / (1.0 - k_crit)
