"""Origin refinement and Fourier-space symmetrization.

A plane-group model of a coefficient set is its orthogonal projection onto
the subspace of sets invariant under the group's index action

    F(h M_g) = F(h) * exp(+2 pi i * h . t_g),

computed orbit-wise as the mean of phase-aligned members (averaged over
the operations whose image index was actually observed).  Systematically
absent indices are dropped beforehand; centrosymmetric groups force real
coefficients, i.e. phases snapped onto {0, pi}.  Point-class models touch
amplitudes only.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np

from .fourier import CoefficientSet, FourierCoefficient
from .groups import Mat, PlaneGroup, canonical_index, index_action, is_absent


@dataclass(frozen=True)
class OriginShift:
    """Refined phase origin: fractional cell shift plus the remaining
    amplitude-weighted RMS phase deviation (radians)."""

    shift: tuple[float, float]
    phase_residual: float


def apply_shift(coeffs: CoefficientSet, shift: tuple[float, float]) -> CoefficientSet:
    """Move the phase origin by a fractional cell vector ``shift``.

    Shifting the image content by ``s`` multiplies each coefficient by
    ``exp(+2 pi i * h . s)``.
    """
    s1, s2 = shift
    if s1 == 0.0 and s2 == 0.0:
        return coeffs
    moved = {}
    for (h, k), c in coeffs.coefficients.items():
        phase = cmath.phase(cmath.exp(1j * (c.phase + 2.0 * math.pi * (h * s1 + k * s2))))
        moved[(h, k)] = FourierCoefficient(h=h, k=k, amplitude=c.amplitude, phase=phase)
    return CoefficientSet(
        coefficients=moved,
        dynamic_range=coeffs.dynamic_range,
        resolution_radius=coeffs.resolution_radius,
        basis=coeffs.basis,
        mean_level=coeffs.mean_level,
        intensity_scale=coeffs.intensity_scale,
    )


def _member_table(keys: list[tuple[int, int]], group: PlaneGroup):
    """Flat orbit table over the observed indices.

    For each stored representative ``h`` and each operation ``g`` whose
    image index is observed, records the storage position of the image,
    a conjugation flag, the aligning phase ``h . t_g`` (cycles), and the
    raw image index (needed when the set is re-phased by an origin shift).
    Rows are grouped by representative.
    """
    pos = {hk: i for i, hk in enumerate(keys)}
    rep, mem, conj, align, midx = [], [], [], [], []
    for i, h in enumerate(keys):
        for m, t in group.ops:
            image = index_action(h, m)
            can, flip = canonical_index(*image)
            j = pos.get(can)
            if j is None:
                continue
            rep.append(i)
            mem.append(j)
            conj.append(flip)
            align.append(float(h[0] * t[0] + h[1] * t[1]))
            midx.append(image)
    return (
        np.array(rep, dtype=np.intp),
        np.array(mem, dtype=np.intp),
        np.array(conj, dtype=bool),
        np.array(align, dtype=np.float64),
        np.array(midx, dtype=np.float64).reshape(-1, 2),
    )


def _project(values: np.ndarray, table, n_reps: int) -> np.ndarray:
    """Orbit means of phase-aligned members for every representative."""
    rep, mem, conj, align, _ = table
    obs = np.where(conj, np.conj(values[mem]), values[mem])
    z = obs * np.exp(-2j * np.pi * align)
    sums = np.zeros(n_reps, dtype=np.complex128)
    np.add.at(sums, rep, z)
    counts = np.bincount(rep, minlength=n_reps)
    return sums / counts


def refine_origin(
    coeffs: CoefficientSet, group: PlaneGroup, grid_step: float = 1.0 / 64.0
) -> OriginShift:
    """Find the cell origin that best satisfies the group's phase relations.

    Scans a coarse grid of candidate shifts (``grid_step`` cell steps over
    the region not related by origin-choice invariance), maximizing the
    coherent orbit alignment, then refines each axis with a three-point
    parabola.  Ties resolve to the lexicographically smallest shift.
    """
    if group.k < 2:
        return OriginShift(shift=(0.0, 0.0), phase_residual=0.0)
    keys = [hk for hk in coeffs.coefficients if not is_absent(group, hk)]
    if not keys:
        return OriginShift(shift=(0.0, 0.0), phase_residual=0.0)
    keys.sort()
    values = np.array([coeffs.coefficients[hk].value for hk in keys])
    table = _member_table(keys, group)
    rep, mem, conj, align, midx = table
    if len(rep) == 0:
        return OriginShift(shift=(0.0, 0.0), phase_residual=0.0)

    base = np.where(conj, np.conj(values[mem]), values[mem]) * np.exp(-2j * np.pi * align)
    counts = np.bincount(rep, minlength=len(keys)).astype(np.float64)
    starts = np.flatnonzero(np.r_[1, np.diff(rep)])
    seg_counts = counts[rep[starts]]

    def alignment(shifts: np.ndarray) -> np.ndarray:
        """Coherence score for an array of candidate shifts (n, 2)."""
        out = np.empty(len(shifts))
        chunk = 256
        for lo in range(0, len(shifts), chunk):
            s = shifts[lo:lo + chunk]
            phase = np.exp(2j * np.pi * (midx @ s.T))
            e = np.add.reduceat(base[:, None] * phase, starts, axis=0)
            out[lo:lo + chunk] = ((e.real ** 2 + e.imag ** 2) / seg_counts[:, None]).sum(axis=0)
        return out

    def axis_candidates(axis: int) -> np.ndarray:
        cols = []
        for m, _ in group.ops:
            if axis == 0:
                cols.append((1 - m[0][0], -m[1][0]))
            else:
                cols.append((-m[0][1], 1 - m[1][1]))
        if all(c == (0, 0) for c in cols):
            return np.array([0.0])
        if all(c[0] % 2 == 0 and c[1] % 2 == 0 for c in cols):
            return np.arange(0.0, 0.5, grid_step)
        return np.arange(0.0, 1.0, grid_step)

    c1, c2 = axis_candidates(0), axis_candidates(1)
    grid = np.array([(a, b) for a in c1 for b in c2])
    scores = alignment(grid)
    best = grid[int(np.argmax(scores))]

    refined = list(best)
    for axis in range(2):
        if len((c1, c2)[axis]) < 2:
            continue
        probe = np.tile(refined, (3, 1))
        probe[0, axis] -= grid_step
        probe[2, axis] += grid_step
        q = alignment(probe)
        denom = q[0] - 2.0 * q[1] + q[2]
        if denom < 0:
            delta = 0.5 * grid_step * (q[0] - q[2]) / denom
            refined[axis] += float(np.clip(delta, -grid_step, grid_step))
    shift = (refined[0] % 1.0, refined[1] % 1.0)

    shifted = np.where(conj, np.conj(values[mem]), values[mem]) \
        * np.exp(2j * np.pi * (midx @ np.array(shift) - align))
    means = np.zeros(len(keys), dtype=np.complex128)
    np.add.at(means, rep, shifted)
    means /= counts
    ok = np.abs(means[rep]) > 1e-12
    dphi = np.angle(shifted[ok] / means[rep][ok])
    w = np.abs(shifted[ok]) ** 2
    residual = float(np.sqrt((w * dphi**2).sum() / w.sum())) if w.sum() > 0 else 0.0
    return OriginShift(shift=shift, phase_residual=residual)


def symmetrize_plane_group(
    coeffs: CoefficientSet,
    group: PlaneGroup,
    origin: OriginShift | tuple[float, float] | None = None,
) -> CoefficientSet:
    """Project a coefficient set onto a plane-group model.

    Applies the refined origin shift (if given), drops systematically
    absent indices, replaces each orbit by the mean of its phase-aligned
    observed members, and zeroes the imaginary parts for centrosymmetric
    groups.  The returned set lives in the shifted (conventional-origin)
    frame.
    """
    if origin is not None:
        shift = origin.shift if isinstance(origin, OriginShift) else origin
        coeffs = apply_shift(coeffs, shift)
    keys = sorted(hk for hk in coeffs.coefficients if not is_absent(group, hk))
    if not keys:
        raise ValueError(f"no coefficients survive the {group.name} absence rules")
    values = np.array([coeffs.coefficients[hk].value for hk in keys])
    table = _member_table(keys, group)
    projected = _project(values, table, len(keys))
    if group.centrosymmetric:
        projected = projected.real.astype(np.complex128)
    out = {}
    for hk, v in zip(keys, projected):
        original = coeffs.coefficients[hk]
        if v == original.value:
            # An orbit fixed at its observed value must keep the stored
            # polar pair; rebuilding it from rectangular form drifts by
            # an ulp and breaks the exact-zero residual of trivial models.
            out[hk] = original
            continue
        out[hk] = FourierCoefficient(
            h=hk[0], k=hk[1], amplitude=abs(v), phase=cmath.phase(v) if v != 0 else 0.0
        )
    return CoefficientSet(
        coefficients=out,
        dynamic_range=coeffs.dynamic_range,
        resolution_radius=coeffs.resolution_radius,
        basis=coeffs.basis,
        mean_level=coeffs.mean_level,
        intensity_scale=coeffs.intensity_scale,
    )


def symmetrize_point_class(
    coeffs: CoefficientSet, matrices: tuple[Mat, ...]
) -> CoefficientSet:
    """Average amplitudes over point-class orbits; phases pass through.

    ``matrices`` is the full list of the class's point operations in the
    working basis (see ``groups.laue_ops``).  Class 2 (identity plus the
    inversion that amplitudes of a real image always carry) returns the
    amplitude set unchanged.
    """
    keys = sorted(coeffs.coefficients)
    pos = {hk: i for i, hk in enumerate(keys)}
    amps = np.array([coeffs.coefficients[hk].amplitude for hk in keys])
    sums = np.zeros(len(keys))
    counts = np.zeros(len(keys))
    for i, h in enumerate(keys):
        for m in matrices:
            image = index_action(h, m)
            can, _ = canonical_index(*image)
            j = pos.get(can)
            if j is None:
                continue
            sums[i] += amps[j]
            counts[i] += 1
    means = sums / np.maximum(counts, 1)
    out = {}
    for hk, amp in zip(keys, means):
        c = coeffs.coefficients[hk]
        out[hk] = FourierCoefficient(h=hk[0], k=hk[1], amplitude=float(amp), phase=c.phase)
    return CoefficientSet(
        coefficients=out,
        dynamic_range=coeffs.dynamic_range,
        resolution_radius=coeffs.resolution_radius,
        basis=coeffs.basis,
        mean_level=coeffs.mean_level,
        intensity_scale=coeffs.intensity_scale,
    )
