"""Symmetry-hierarchy trees and the full classification driver.

``classify`` symmetrizes a coefficient set to every plane-group setting
the refined lattice metric supports, anchors at the least-broken low-k
model, climbs the maximal-subgroup tree as far as the information
criterion allows, labels the remaining low-residual settings as
Fedorov-type pseudosymmetries, runs the analogous selection over the
projected Laue classes on the amplitude residuals, and arbitrates the
two levels for consistency.  ``classify_from_models`` runs the same
selection on externally supplied per-setting coefficient files.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .fourier import CoefficientSet
from .gaic import (
    ascent_rhs,
    confidence_level,
    noise_estimate,
    residual_amplitude,
    residual_complex,
)
from .groups import (
    LAUE_CLASSES,
    LAUE_MAXIMAL,
    PLANE_MAXIMAL,
    SETTING_ORDER,
    SETTINGS,
    compatible,
    laue_ops,
)
from .symmetrize import apply_shift, refine_origin, symmetrize_plane_group, symmetrize_point_class

# Residuals are quoted on the normalized amplitude scale (max 10000), so
# raw squared sums are divided by 10000^2.
_NORM = 1.0e8

# Classes the Laue ascent can climb to (k = 2 is the unconditional root).
_LAUE_UPPER = ("2mm", "4", "6", "4mm", "6mm")


@dataclass(frozen=True)
class TreeEdge:
    """Directed maximal-subgroup -> minimal-supergroup edge with its
    equal-N inset ratio (None on edges leaving the k = 1 root)."""

    lower: str
    upper: str
    inset: float | None


@dataclass(frozen=True)
class HierarchyTree:
    nodes: tuple[str, ...]
    edges: tuple[TreeEdge, ...]


def _edges_from(maximal: dict[str, tuple[str, ...]], order_of) -> tuple[TreeEdge, ...]:
    out = []
    for upper, lowers in maximal.items():
        for lower in lowers:
            k_m, k_l = order_of(upper), order_of(lower)
            inset = ascent_rhs(k_m, k_l, 1, 1) if k_l > 1 else None
            out.append(TreeEdge(lower=lower, upper=upper, inset=inset))
    return tuple(out)


def plane_edges() -> HierarchyTree:
    """Maximal-subgroup tree of the 21 plane-group settings."""
    return HierarchyTree(
        nodes=SETTING_ORDER,
        edges=_edges_from(PLANE_MAXIMAL, lambda n: SETTINGS[n].k),
    )


def laue_edges() -> HierarchyTree:
    """Tree of the six projected Laue classes."""
    classical = ("2",) + _LAUE_UPPER
    maximal = {c: LAUE_MAXIMAL[c] for c in _LAUE_UPPER}
    return HierarchyTree(
        nodes=classical,
        edges=_edges_from(maximal, lambda n: LAUE_CLASSES[n].k),
    )


def quasicrystal_edges() -> HierarchyTree:
    """Laue tree extended by the 8-, 10- and 12-fold classes used for
    quasicrystal amplitude maps (tree level only; no plane models)."""
    return HierarchyTree(
        nodes=tuple(LAUE_CLASSES),
        edges=_edges_from(LAUE_MAXIMAL, lambda n: LAUE_CLASSES[n].k),
    )


@dataclass
class ClassifyConfig:
    """Tunable thresholds of the classification workflow."""

    pseudo_band: float = 10.0
    square_length_tol: float = 0.01
    square_angle_tol: float = 1.0
    rect_angle_tol: float = 1.0
    rhombic_length_tol: float = 0.01
    hex_length_tol: float = 0.02
    hex_angle_tol: float = 2.0
    translation_power_band: float = 0.25
    origin_grid_step: float = 1.0 / 64.0
    # Residuals below this fraction of total power are treated as exact
    # zeros: their ratios are floating-point dust, not evidence.
    exact_floor: float = 1.0e-12


@dataclass
class ModelEntry:
    """Residual-table row for one plane-group setting."""

    setting: str
    k: int
    applicable: bool
    n: int | None = None
    j_cfc: float | None = None
    j_afc: float | None = None
    laue: str | None = None
    origin: tuple[float, float] | None = None
    phase_residual: float | None = None
    label: str = "not applicable"

    def to_dict(self) -> dict:
        return {
            "setting": self.setting,
            "k": self.k,
            "applicable": self.applicable,
            "n": self.n,
            "j_cfc": self.j_cfc,
            "j_afc": self.j_afc,
            "laue": self.laue,
            "origin": list(self.origin) if self.origin is not None else None,
            "phase_residual": self.phase_residual,
            "label": self.label,
        }


@dataclass
class AscentRow:
    """One recorded climbing-up test."""

    level: str
    upper: str
    lower: str
    upper_model: str
    lower_model: str
    lhs: float
    rhs: float
    passed: bool
    confidence: float | None

    def to_dict(self) -> dict:
        return {
            "level": self.level,
            "upper": self.upper,
            "lower": self.lower,
            "upper_model": self.upper_model,
            "lower_model": self.lower_model,
            "lhs": self.lhs,
            "rhs": self.rhs,
            "passed": self.passed,
            "confidence": self.confidence,
        }


@dataclass
class ClassificationResult:
    anchor_plane: str
    genuine_plane: list[str]
    pseudo_plane: list[str]
    rejected_plane: list[str]
    best_plane: str
    anchor_laue: str
    genuine_laue: str
    pseudo_laue: list[str]
    consistency: str
    noise_eps2: float | None
    confidences: dict[str, float]
    residual_table: list[ModelEntry]
    ascent_rows: list[AscentRow]
    lattice: dict
    warnings: list[str] = field(default_factory=list)

    @property
    def conflict(self) -> bool:
        return self.consistency != "consistent"

    def to_dict(self) -> dict:
        return {
            "anchor": self.anchor_plane,
            "genuine": list(self.genuine_plane),
            "pseudo": list(self.pseudo_plane),
            "rejected": list(self.rejected_plane),
            "best_plane": self.best_plane,
            "anchor_laue": self.anchor_laue,
            "genuine_laue": self.genuine_laue,
            "pseudo_laue": list(self.pseudo_laue),
            "consistency": self.consistency,
            "conflict": self.conflict,
            "noise_eps2": self.noise_eps2,
            "confidences": dict(self.confidences),
            "models": [m.to_dict() for m in self.residual_table],
            "ascent": [r.to_dict() for r in self.ascent_rows],
            "lattice": dict(self.lattice),
            "warnings": list(self.warnings),
        }


def lattice_kinds(cell: tuple[float, float, float], config: ClassifyConfig) -> set[str]:
    """Lattice constraints supported by a direct cell (a, b, gamma)."""
    a, b, gamma = cell
    mean = 0.5 * (a + b)
    kinds = {"oblique"}
    if abs(gamma - 90.0) <= config.rect_angle_tol:
        kinds.add("rectangular")
    if abs(a - b) / mean <= config.rhombic_length_tol:
        kinds.add("rhombic")
    if abs(gamma - 90.0) <= config.square_angle_tol \
            and abs(a - b) / mean <= config.square_length_tol:
        kinds.add("square")
        kinds.add("rhombic")
    if abs(gamma - 120.0) <= config.hex_angle_tol \
            and abs(a - b) / mean <= config.hex_length_tol:
        kinds.add("hexagonal")
        kinds.add("rhombic")
    return kinds


def anchor(table: list[ModelEntry], level: str) -> str:
    """Anchoring node of a residual table.

    Plane level: the smallest complex residual among the mutually
    disjoint k = 2 and 3 settings.  Laue level: the class of the model
    with the smallest amplitude residual (class-2 models excluded, their
    amplitude residual being structurally zero).  Ties resolve in the
    fixed setting order.
    """
    if level == "plane":
        rows = [m for m in table if m.applicable and SETTINGS[m.setting].k in (2, 3)
                and m.j_cfc is not None]
        if not rows:
            raise ValueError("no applicable k = 2 or 3 models to anchor on")
        best = min(rows, key=lambda m: m.j_cfc)
        return best.setting
    if level == "laue":
        rows = [m for m in table if m.applicable and m.j_afc is not None]
        if not rows:
            raise ValueError("no models with a nonzero-class amplitude residual")
        best = min(rows, key=lambda m: m.j_afc)
        return compatible(best.setting)
    raise ValueError(f"unknown level {level!r}")


def _restrict(coeffs: CoefficientSet, keys) -> CoefficientSet:
    kept = {hk: coeffs.coefficients[hk] for hk in keys if hk in coeffs.coefficients}
    return CoefficientSet(
        coefficients=kept,
        dynamic_range=coeffs.dynamic_range,
        resolution_radius=coeffs.resolution_radius,
        basis=coeffs.basis,
        mean_level=coeffs.mean_level,
        intensity_scale=coeffs.intensity_scale,
    )


def _guarded_test(j_m: float, j_l: float, k_m: int, k_l: int, n_m: int, n_l: int,
                  floor: float = 0.0):
    """Ascent test tolerating subgroup residuals at the exactness floor
    (perfectly symmetric data leaves rounding dust, not evidence)."""
    rhs = ascent_rhs(k_m, k_l, n_m, n_l)
    if j_m <= floor:
        j_m = 0.0
    if j_l <= floor:
        j_l = 0.0
    if j_l == 0.0:
        if j_m == 0.0:
            return 1.0, rhs, True
        return float("inf"), rhs, False
    lhs = float(j_m / j_l)
    return lhs, rhs, bool(lhs < rhs)


def _confidence(lhs: float, k_m: int, k_l: int, n_m: int, n_l: int) -> float | None:
    try:
        if lhs == float("inf"):
            return None
        return confidence_level(lhs, k_m, k_l, n_m, n_l)
    except ValueError:
        return None


def _amplitude_residual_entry(
    trans: CoefficientSet, name: str, model_keys
) -> float | None:
    """Amplitude (Laue-level) residual of one setting, None for class 2."""
    group = SETTINGS[name]
    if compatible(name) == "2":
        return None
    retained = _restrict(trans, model_keys)
    amp_model = symmetrize_point_class(retained, laue_ops(group))
    return residual_amplitude(trans, amp_model) / _NORM


def _select(
    table: list[ModelEntry],
    total_power: float,
    lattice_info: dict,
    warnings: list[str],
    config: ClassifyConfig,
) -> ClassificationResult:
    """Anchoring, both ascents, labeling and arbitration over a filled
    residual table."""
    by_name = {m.setting: m for m in table}
    anchor_plane = anchor(table, "plane")
    j_anchor = by_name[anchor_plane].j_cfc
    floor = config.exact_floor * total_power

    # Translation-only guard: a pattern without any point symmetry leaves
    # an order-of-total-power residual even in the least broken model.
    if j_anchor > config.translation_power_band * total_power:
        warnings.append(
            "no plane symmetry beyond translation detected: the least-broken "
            f"low-k model ({anchor_plane}) retains J = {j_anchor:.4g} of total "
            f"power {total_power:.4g}"
        )
        for entry in table:
            if entry.applicable and entry.k >= 2:
                entry.label = "rejected"
        by_name["p1"].label = "genuine"
        return ClassificationResult(
            anchor_plane=anchor_plane,
            genuine_plane=["p1"],
            pseudo_plane=[],
            rejected_plane=[m.setting for m in table if m.label == "rejected"],
            best_plane="p1",
            anchor_laue="2",
            genuine_laue="2",
            pseudo_laue=[],
            consistency="consistent",
            noise_eps2=None,
            confidences={},
            residual_table=table,
            ascent_rows=[],
            lattice=lattice_info,
            warnings=warnings,
        )

    def in_band(entry: ModelEntry) -> bool:
        return entry.j_cfc is not None and entry.j_cfc <= config.pseudo_band * j_anchor

    # Plane-level climbing: a supergroup joins when the test passes from
    # at least one genuine maximal subgroup and from every maximal
    # subgroup inside the pseudosymmetry band.
    genuine: set[str] = {anchor_plane}
    rows: dict[tuple[str, str], AscentRow] = {}
    confidences: dict[str, float] = {}
    changed = True
    while changed:
        changed = False
        for name in SETTING_ORDER:
            entry = by_name.get(name)
            if entry is None or not entry.applicable or entry.k < 4 or name in genuine:
                continue
            subs = [s for s in PLANE_MAXIMAL[name]
                    if s in by_name and by_name[s].applicable
                    and by_name[s].j_cfc is not None and by_name[s].k > 1]
            required = [s for s in subs if s in genuine or in_band(by_name[s])]
            if not required:
                continue
            all_pass = True
            genuine_pass = False
            for s in required:
                sub = by_name[s]
                lhs, rhs, passed = _guarded_test(
                    entry.j_cfc, sub.j_cfc, entry.k, sub.k, entry.n, sub.n,
                    floor=floor,
                )
                conf = _confidence(lhs, entry.k, sub.k, entry.n, sub.n)
                rows[(name, s)] = AscentRow(
                    level="plane", upper=name, lower=s, upper_model=name,
                    lower_model=s, lhs=lhs, rhs=rhs, passed=passed, confidence=conf,
                )
                if not passed:
                    all_pass = False
                if passed and s in genuine:
                    genuine_pass = True
            if all_pass and genuine_pass:
                genuine.add(name)
                for s in required:
                    row = rows[(name, s)]
                    if row.passed and row.confidence is not None:
                        confidences[f"{name}/{s}"] = row.confidence
                changed = True

    # Pseudosymmetry / rejection labels.
    for entry in table:
        if not entry.applicable or entry.k < 2:
            continue
        name = entry.setting
        if name in genuine:
            entry.label = "genuine"
        elif in_band(entry):
            entry.label = "pseudosymmetry"
        else:
            passed_via_pseudo = any(
                rows[(name, s)].passed
                for s in PLANE_MAXIMAL.get(name, ())
                if (name, s) in rows and by_name[s].label == "pseudosymmetry"
            )
            entry.label = "pseudosymmetry" if passed_via_pseudo else "rejected"

    # Laue level: representative (lowest amplitude residual) model per class.
    reps: dict[str, ModelEntry] = {}
    for entry in table:
        if not entry.applicable or entry.j_afc is None:
            continue
        cls = compatible(entry.setting)
        if cls not in reps or entry.j_afc < reps[cls].j_afc:
            reps[cls] = entry

    genuine_classes: set[str] = {"2"}
    pseudo_laue: list[str] = []
    anchor_laue = "2"
    if reps:
        anchor_laue = anchor(table, "laue")
        j_laue_anchor = reps[anchor_laue].j_afc
        genuine_classes.add(anchor_laue)
        changed = True
        while changed:
            changed = False
            for cls in _LAUE_UPPER:
                if cls in genuine_classes or cls not in reps:
                    continue
                subs = [c for c in LAUE_MAXIMAL[cls] if c in reps]
                required = [
                    c for c in subs
                    if c in genuine_classes
                    or reps[c].j_afc <= config.pseudo_band * j_laue_anchor
                ]
                if not required:
                    continue
                all_pass = True
                genuine_pass = False
                for c in required:
                    up, lo = reps[cls], reps[c]
                    k_m, k_l = LAUE_CLASSES[cls].k, LAUE_CLASSES[c].k
                    lhs, rhs, passed = _guarded_test(
                        up.j_afc, lo.j_afc, k_m, k_l, up.n, lo.n, floor=floor
                    )
                    conf = _confidence(lhs, k_m, k_l, up.n, lo.n)
                    rows[(cls, c)] = AscentRow(
                        level="laue", upper=cls, lower=c,
                        upper_model=up.setting, lower_model=lo.setting,
                        lhs=lhs, rhs=rhs, passed=passed, confidence=conf,
                    )
                    if not passed:
                        all_pass = False
                    if passed and c in genuine_classes:
                        genuine_pass = True
                if all_pass and genuine_pass:
                    genuine_classes.add(cls)
                    for c in required:
                        row = rows[(cls, c)]
                        if row.passed and row.confidence is not None:
                            confidences[f"{cls}/{c}"] = row.confidence
                    changed = True
        pseudo_laue = [
            c for c in _LAUE_UPPER
            if c in reps and c not in genuine_classes
            and reps[c].j_afc <= config.pseudo_band * j_laue_anchor
        ]

    def top_plane(names: set[str]) -> str | None:
        if not names:
            return None
        ordered = sorted(
            names,
            key=lambda n: (-SETTINGS[n].k, by_name[n].j_cfc, SETTING_ORDER.index(n)),
        )
        return ordered[0]

    best_before = top_plane(genuine)

    # Consistency arbitration: the Laue level overrules the plane level.
    # A plane group survives when its class lies at or below some genuine
    # class (a genuine 4mm covers the 2mm subgroup settings too).
    covered: set[str] = set()
    stack = list(genuine_classes)
    while stack:
        cls = stack.pop()
        if cls in covered:
            continue
        covered.add(cls)
        stack.extend(LAUE_MAXIMAL[cls])
    demoted = sorted(g for g in genuine if compatible(g) not in covered)
    for g in demoted:
        genuine.discard(g)
        by_name[g].label = "pseudosymmetry"
    if demoted:
        confidences = {
            key: v for key, v in confidences.items()
            if key.split("/")[0] not in demoted
        }

    best_plane = top_plane(genuine)
    if best_plane is None:
        warnings.append(
            "consistency arbitration removed every genuine plane group; "
            "falling back to translation symmetry only"
        )
        best_plane = "p1"
        noise = None
    else:
        best = by_name[best_plane]
        noise = noise_estimate(best.j_cfc, best.n, best.k) if best.k > 1 else None

    def class_rank(c: str) -> tuple:
        j = reps[c].j_afc if c in reps else float("inf")
        return (LAUE_CLASSES[c].k, -j)

    genuine_laue = max(genuine_classes, key=class_rank)
    if demoted and best_before in demoted:
        consistency = (
            f"conflict: plane-level selection reached {best_before} implying Laue "
            f"class {compatible(best_before)}, but the Laue level selected "
            f"{genuine_laue}; demoted {demoted} and kept {best_plane}"
        )
    else:
        consistency = "consistent"

    return ClassificationResult(
        anchor_plane=anchor_plane,
        genuine_plane=[n for n in SETTING_ORDER if n in genuine],
        pseudo_plane=[m.setting for m in table if m.label == "pseudosymmetry"],
        rejected_plane=[m.setting for m in table if m.label == "rejected"],
        best_plane=best_plane,
        anchor_laue=anchor_laue,
        genuine_laue=genuine_laue,
        pseudo_laue=pseudo_laue,
        consistency=consistency,
        noise_eps2=noise,
        confidences=confidences,
        residual_table=table,
        ascent_rows=[rows[key] for key in sorted(rows)],
        lattice=lattice_info,
        warnings=warnings,
    )


def classify(trans: CoefficientSet, config: ClassifyConfig | None = None) -> ClassificationResult:
    """Full plane-group and projected-Laue-class classification of an
    extracted (translation-averaged) coefficient set.

    Every setting whose lattice constraint the refined metric supports is
    evaluated: the origin is refined, the set is symmetrized, and complex
    (plane-level) and amplitude (Laue-level) residuals are taken against
    the shifted input.  Selection then runs over the residual table.
    """
    if config is None:
        config = ClassifyConfig()
    if trans.n_count == 0:
        raise ValueError("empty coefficient set")

    warnings: list[str] = []
    cell = trans.basis.direct_cell()
    kinds = lattice_kinds(cell, config)
    if trans.basis.fit_rms > 0.5:
        warnings.append(
            f"lattice fit rms {trans.basis.fit_rms:.2f} reciprocal pixels is large; "
            "indexing may be unreliable"
        )

    total_power = sum(
        (c.amplitude / 10000.0) ** 2 for c in trans.coefficients.values()
    )

    table: list[ModelEntry] = []
    for name in SETTING_ORDER:
        group = SETTINGS[name]
        entry = ModelEntry(setting=name, k=group.k, applicable=group.lattice in kinds,
                           laue=compatible(name))
        table.append(entry)
        if not entry.applicable:
            continue
        if group.k == 1:
            entry.n = trans.n_count
            entry.j_cfc = 0.0
            entry.origin = (0.0, 0.0)
            entry.phase_residual = 0.0
            entry.label = "reference"
            continue
        shift = refine_origin(trans, group, grid_step=config.origin_grid_step)
        shifted = apply_shift(trans, shift.shift)
        model = symmetrize_plane_group(shifted, group)
        entry.n = model.n_count
        entry.j_cfc = residual_complex(shifted, model) / _NORM
        entry.origin = shift.shift
        entry.phase_residual = shift.phase_residual
        entry.j_afc = _amplitude_residual_entry(shifted, name, model.coefficients.keys())

    lattice_info = {
        "a": cell[0],
        "b": cell[1],
        "gamma": cell[2],
        "fit_rms": trans.basis.fit_rms,
        "kinds": sorted(kinds),
        "a_star": list(trans.basis.a_star),
        "b_star": list(trans.basis.b_star),
    }
    return _select(table, total_power, lattice_info, warnings, config)


def classify_from_models(
    reference: CoefficientSet,
    models: dict[str, CoefficientSet],
    config: ClassifyConfig | None = None,
) -> ClassificationResult:
    """Selection over externally symmetrized per-setting coefficient sets.

    ``reference`` is the translation-only (p1) set; ``models`` maps
    setting names to coefficient sets symmetrized in that setting, all in
    one common indexing and origin frame.  No lattice step runs: only the
    provided settings are compared, and amplitude residuals are formed by
    point-class averaging of the reference on each model's index set.
    """
    if config is None:
        config = ClassifyConfig()
    if reference.n_count == 0:
        raise ValueError("empty reference coefficient set")
    unknown = sorted(set(models) - set(SETTING_ORDER))
    if unknown:
        raise ValueError(f"unknown setting names: {', '.join(unknown)}")

    warnings: list[str] = []
    total_power = sum(
        (c.amplitude / 10000.0) ** 2 for c in reference.coefficients.values()
    )

    table: list[ModelEntry] = [
        ModelEntry(setting="p1", k=1, applicable=True, n=reference.n_count,
                   j_cfc=0.0, laue="2", label="reference"),
    ]
    for name in SETTING_ORDER:
        if name == "p1" or name not in models:
            continue
        group = SETTINGS[name]
        model = models[name]
        shared = [hk for hk in reference.coefficients if hk in model.coefficients]
        if not shared:
            raise ValueError(f"model {name} shares no indices with the reference")
        entry = ModelEntry(setting=name, k=group.k, applicable=True,
                           laue=compatible(name))
        entry.n = len(shared)
        entry.j_cfc = residual_complex(reference, model) / _NORM
        entry.j_afc = _amplitude_residual_entry(reference, name, shared)
        table.append(entry)

    lattice_info = {"mode": "coefficient files", "settings": sorted(models)}
    return _select(table, total_power, lattice_info, warnings, config)
