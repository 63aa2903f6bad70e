"""Command-line frontend: classify, process, generate.

Exit codes: 0 success (consistent classification), 2 plane/Laue conflict
(the report is still written), 1 any error.  All subcommands are
deterministic given their options and seed.  A JSON config file given
with ``--config`` overrides the corresponding flags; the environment
variable ``PLANESYM_OUTDIR`` supplies the default output directory.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import warnings as _warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .cip import CipConfig, process as cip_process
from .fourier import (
    CoefficientSet,
    FourierCoefficient,
    ReciprocalBasis,
    dft2,
    extract_coefficients,
    find_lattice,
)
from .groups import SETTINGS
from .hierarchy import ClassifyConfig, classify, classify_from_models
from .image_io import (
    HkaRecord,
    circular_region,
    compute_histogram,
    load_image,
    parse_hka,
    save_image,
    write_hka,
    write_report,
)
from .synth import (
    DEFAULT_TRIO_SEED,
    MotifSpec,
    NoiseSpec,
    apply_noise,
    generate_pattern,
    paper_trio,
)


@dataclass
class RunConfig:
    """Resolved pipeline options of one classify/process invocation."""

    input: str | None = None
    center: tuple[float, float] | None = None
    radius: float | None = None
    dynamic_range: float = 200.0
    resolution_radius: float | None = None
    min_peak_snr: float = 10.0
    pseudo_band: float = 10.0
    square_length_tol: float = 0.01
    square_angle_tol: float = 1.0
    rect_angle_tol: float = 1.0
    rhombic_length_tol: float = 0.01
    hex_length_tol: float = 0.02
    hex_angle_tol: float = 2.0
    translation_power_band: float = 0.25
    origin_grid_step: float = 1.0 / 64.0

    def classify_config(self) -> ClassifyConfig:
        return ClassifyConfig(
            pseudo_band=self.pseudo_band,
            square_length_tol=self.square_length_tol,
            square_angle_tol=self.square_angle_tol,
            rect_angle_tol=self.rect_angle_tol,
            rhombic_length_tol=self.rhombic_length_tol,
            hex_length_tol=self.hex_length_tol,
            hex_angle_tol=self.hex_angle_tol,
            translation_power_band=self.translation_power_band,
            origin_grid_step=self.origin_grid_step,
        )


class _Parser(argparse.ArgumentParser):
    """Argument errors exit with code 1; code 2 is reserved for the
    plane/Laue conflict diagnostic."""

    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(1)


def _default_outdir() -> Path:
    return Path(os.environ.get("PLANESYM_OUTDIR", "."))


def _parse_center(text: str) -> tuple[float, float]:
    parts = text.split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected 'x,y'")
    return (float(parts[0]), float(parts[1]))


def _add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--center", type=_parse_center, default=None,
                        help="circular region center as 'x,y' pixels (default: image center)")
    parser.add_argument("--radius", type=float, default=None,
                        help="circular region radius in pixels (default: no region, full frame)")
    parser.add_argument("--dynamic-range", type=float, default=200.0,
                        help="keep coefficients down to max/dynamic_range (default 200)")
    parser.add_argument("--resolution-radius", type=float, default=None,
                        help="reciprocal-pixel resolution limit (default: Nyquist)")
    parser.add_argument("--min-peak-snr", type=float, default=10.0,
                        help="peak detection threshold over the median background")
    parser.add_argument("--pseudo-band", type=float, default=10.0,
                        help="residual band (times anchor J) labeled pseudosymmetry")
    parser.add_argument("--square-length-tol", type=float, default=0.01)
    parser.add_argument("--square-angle-tol", type=float, default=1.0)
    parser.add_argument("--rect-angle-tol", type=float, default=1.0)
    parser.add_argument("--rhombic-length-tol", type=float, default=0.01)
    parser.add_argument("--hex-length-tol", type=float, default=0.02)
    parser.add_argument("--hex-angle-tol", type=float, default=2.0)
    parser.add_argument("--translation-band", type=float, default=0.25, dest="translation_power_band",
                        help="anchor-J fraction of total power beyond which only translation is kept")
    parser.add_argument("--origin-step", type=float, default=1.0 / 64.0, dest="origin_grid_step",
                        help="origin-refinement grid step in cell fractions")


def _run_config(args: argparse.Namespace) -> RunConfig:
    return RunConfig(
        input=getattr(args, "input", None),
        center=args.center,
        radius=args.radius,
        dynamic_range=args.dynamic_range,
        resolution_radius=args.resolution_radius,
        min_peak_snr=args.min_peak_snr,
        pseudo_band=args.pseudo_band,
        square_length_tol=args.square_length_tol,
        square_angle_tol=args.square_angle_tol,
        rect_angle_tol=args.rect_angle_tol,
        rhombic_length_tol=args.rhombic_length_tol,
        hex_length_tol=args.hex_length_tol,
        hex_angle_tol=args.hex_angle_tol,
        translation_power_band=args.translation_power_band,
        origin_grid_step=args.origin_grid_step,
    )


def _image_coefficients(config: RunConfig):
    image = load_image(config.input)
    region = None
    if config.center is not None or config.radius is not None:
        region = circular_region(image, center=config.center, radius=config.radius)
    spectrum = dft2(image, mask=region)
    basis = find_lattice(spectrum, min_peak_snr=config.min_peak_snr)
    coeffs = extract_coefficients(
        spectrum, basis,
        dynamic_range=config.dynamic_range,
        resolution_radius=config.resolution_radius,
    )
    return image, region, spectrum, basis, coeffs


def _records_to_set(records: list[HkaRecord], scale: float = 1.0) -> CoefficientSet:
    """Canonicalize parsed records into a coefficient set.

    Friedel mates present on both sides are averaged; the (0, 0) record,
    if any, is taken as the mean level.  ``scale`` multiplies amplitudes
    (one common factor per run keeps paired residuals meaningful).
    """
    from .groups import canonical_index

    sums: dict[tuple[int, int], complex] = {}
    counts: dict[tuple[int, int], int] = {}
    mean_level = 0.0
    for rec in records:
        if (rec.h, rec.k) == (0, 0):
            mean_level = rec.amplitude
            continue
        (ch, ck), conj = canonical_index(rec.h, rec.k)
        value = rec.amplitude * complex(
            math.cos(math.radians(rec.phase)), math.sin(math.radians(rec.phase))
        )
        if conj:
            value = value.conjugate()
        sums[(ch, ck)] = sums.get((ch, ck), 0j) + value
        counts[(ch, ck)] = counts.get((ch, ck), 0) + 1
    coeffs = {}
    for hk, total in sums.items():
        v = total / counts[hk] * scale
        coeffs[hk] = FourierCoefficient(
            h=hk[0], k=hk[1], amplitude=abs(v),
            phase=math.atan2(v.imag, v.real) if v != 0 else 0.0,
        )
    placeholder = ReciprocalBasis(
        a_star=(1.0, 0.0), b_star=(0.0, 1.0), origin=(0, 0),
        fit_rms=0.0, field_size=(1, 1),
    )
    return CoefficientSet(
        coefficients=coeffs,
        dynamic_range=float("inf"),
        resolution_radius=0.0,
        basis=placeholder,
        mean_level=mean_level,
    )


def _infer_setting(path: str) -> str:
    stem = Path(path).stem
    if stem in SETTINGS:
        return stem
    for sep in ("_", "-"):
        tail = stem.rsplit(sep, 1)[-1]
        if tail in SETTINGS:
            return tail
    raise ValueError(
        f"cannot infer a setting name from {path!r}; use the NAME=PATH form"
    )


def _load_hka_sets(items: list[str]) -> tuple[CoefficientSet, dict[str, CoefficientSet]]:
    named: dict[str, list[HkaRecord]] = {}
    for item in items:
        if "=" in item:
            name, path = item.split("=", 1)
        else:
            path, name = item, _infer_setting(item)
        if name != "p1" and name not in SETTINGS:
            raise ValueError(f"unknown setting name {name!r} for {path!r}")
        if name in named:
            raise ValueError(f"duplicate coefficient file for setting {name}")
        named[name] = parse_hka(path)
    if "p1" not in named:
        raise ValueError("coefficient-file mode needs a p1 (reference) file")
    ref_records = named.pop("p1")
    ref_max = max(r.amplitude for r in ref_records if (r.h, r.k) != (0, 0))
    scale = 10000.0 / ref_max if ref_max > 0 else 1.0
    reference = _records_to_set(ref_records, scale)
    models = {name: _records_to_set(recs, scale) for name, recs in named.items()}
    return reference, models


def _save_amplitude_map(spectrum, path: str) -> None:
    amp = np.log1p(np.abs(spectrum.coefficients))
    top = float(amp.max())
    scaled = amp * (255.0 / top) if top > 0 else amp
    save_image(scaled, path)


def _report_format(args: argparse.Namespace) -> str:
    if args.format:
        return args.format
    if args.report and str(args.report).lower().endswith(".csv"):
        return "csv"
    return "json"


def _print_summary(result) -> None:
    print(f"anchor: {result.anchor_plane}")
    print(f"genuine: {', '.join(result.genuine_plane) or '(none)'}")
    print(f"pseudosymmetries: {', '.join(result.pseudo_plane) or '(none)'}")
    print(f"best plane group: {result.best_plane}")
    print(f"Laue class: {result.genuine_laue} (anchor {result.anchor_laue})")
    print(f"consistency: {result.consistency}")
    if result.noise_eps2 is not None:
        print(f"noise estimate (eps^2): {result.noise_eps2:.6g}")
    for warning in result.warnings:
        print(f"warning: {warning}", file=sys.stderr)


def _histogram_dict(hist) -> dict:
    return {
        "mean": hist.mean,
        "rms": hist.rms,
        "mad": hist.mad,
        "fwid": hist.fwid,
        "mode_count": hist.mode_count,
        "bins": np.asarray(hist.bins).tolist(),
    }


def cmd_classify(args: argparse.Namespace) -> int:
    config = _run_config(args)
    if args.hka:
        if args.input:
            raise ValueError("give either --in or --hka files, not both")
        reference, models = _load_hka_sets(args.hka)
        result = classify_from_models(reference, models, config.classify_config())
    else:
        if not args.input:
            raise ValueError("--in image or --hka files required")
        _, _, spectrum, _, coeffs = _image_coefficients(config)
        if args.amplitude_map:
            _save_amplitude_map(spectrum, args.amplitude_map)
        result = classify(coeffs, config.classify_config())
    if args.report:
        write_report(result, _report_format(args), args.report)
    _print_summary(result)
    return 2 if result.conflict else 0


def cmd_process(args: argparse.Namespace) -> int:
    config = _run_config(args)
    image = load_image(args.input)
    region = None
    if args.center is not None or args.radius is not None:
        region = circular_region(image, center=args.center, radius=args.radius)

    group_name = args.group
    caught: list[str] = []
    if group_name == "auto":
        _, _, _, _, coeffs = _image_coefficients(config)
        result = classify(coeffs, config.classify_config())
        group_name = result.best_plane
        print(f"selected plane group: {group_name}")
        if result.conflict:
            caught.append(result.consistency)
        check = False
    else:
        if group_name not in SETTINGS:
            raise ValueError(f"unknown plane-group setting {group_name!r}")
        check = not args.no_consistency_check

    cip_config = CipConfig(
        center=args.center,
        radius=args.radius,
        dynamic_range=args.dynamic_range,
        resolution_radius=args.resolution_radius,
        min_peak_snr=args.min_peak_snr,
        origin_grid_step=args.origin_grid_step,
        check_consistency=check,
        classify_config=config.classify_config(),
    )
    with _warnings.catch_warnings(record=True) as grabbed:
        _warnings.simplefilter("always")
        processed, quality = cip_process(image, group_name, cip_config)
    caught.extend(str(w.message) for w in grabbed)
    for message in caught:
        print(f"warning: {message}", file=sys.stderr)

    save_image(processed, args.out)
    if args.report:
        before = compute_histogram(image, mask=region)
        after = compute_histogram(processed, mask=region)
        payload = {
            "group": group_name,
            "quality": quality.to_dict(),
            "histogram_before": _histogram_dict(before),
            "histogram_after": _histogram_dict(after),
            "warnings": caught,
        }
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2)
            fh.write("\n")
    print(f"processed image written to {args.out}")
    print(f"cells averaged: {quality.n_cells} (filter boost {quality.fourier_filter_boost:.4f}), "
          f"multiplicity {quality.k_multiplicity} (enforcement boost {quality.cip_boost:.4f})")
    return 0


def cmd_generate(args: argparse.Namespace) -> int:
    outdir = Path(args.out_dir) if args.out_dir else _default_outdir()
    if args.preset == "paper-trio":
        outdir.mkdir(parents=True, exist_ok=True)
        trio = paper_trio(seed=args.seed, cell_px=args.cell_px, cells=args.cells)
        for name, image in trio.items():
            path = outdir / f"{name}.png"
            save_image(image, path)
            print(f"wrote {path}")
        return 0

    if not args.group:
        raise ValueError("--group is required without a preset")
    spec = MotifSpec(
        group=args.group,
        cell_px=args.cell_px,
        cells=args.cells,
        pseudo_delta=args.pseudo_delta,
        pseudo_group=args.pseudo_group,
        metric=args.metric,
    )
    image = generate_pattern(spec)
    if args.sigma > 0 or args.spread > 0:
        image = apply_noise(image, NoiseSpec(args.sigma, args.spread, args.seed))
    out = Path(args.out) if args.out else outdir / f"{args.group}.png"
    out.parent.mkdir(parents=True, exist_ok=True)
    save_image(image, out)
    print(f"wrote {out}")
    return 0


# Flags whose argparse destination differs from their option name; config
# files may use either spelling.
_CONFIG_ALIASES = {
    "translation_band": "translation_power_band",
    "origin_step": "origin_grid_step",
}


def _apply_config_file(args: argparse.Namespace, parser: argparse.ArgumentParser) -> None:
    if not getattr(args, "config", None):
        return
    with open(args.config, "r", encoding="utf-8") as fh:
        overrides = json.load(fh)
    if not isinstance(overrides, dict):
        parser.error("--config must hold a JSON object")
    for key, value in overrides.items():
        dest = key.replace("-", "_")
        dest = _CONFIG_ALIASES.get(dest, dest)
        if not hasattr(args, dest):
            parser.error(f"config file sets unknown option {key!r}")
        if dest == "center" and isinstance(value, (list, tuple)):
            value = (float(value[0]), float(value[1]))
        setattr(args, dest, value)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="planesym",
        description="Plane-symmetry-group and Laue-class classification, "
                    "symmetry-enforced image processing, and test-pattern synthesis.",
    )
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p_cls = sub.add_parser("classify", help="classify an image or coefficient files")
    p_cls.add_argument("--in", dest="input", default=None, help="input PNG/PGM image")
    p_cls.add_argument("--hka", action="append", default=[],
                       help="coefficient file, NAME=PATH or a path whose stem names "
                            "the setting; repeat per setting, include p1 as reference")
    p_cls.add_argument("--report", default=None, help="report output path")
    p_cls.add_argument("--format", choices=("json", "csv"), default=None,
                       help="report format (default: by extension, json otherwise)")
    p_cls.add_argument("--amplitude-map", default=None,
                       help="write the log-scaled Fourier amplitude map to this image")
    p_cls.add_argument("--config", default=None, help="JSON config overriding flags")
    _add_pipeline_flags(p_cls)
    p_cls.set_defaults(func=cmd_classify)

    p_proc = sub.add_parser("process", help="enforce a plane group on an image")
    p_proc.add_argument("--in", dest="input", required=True, help="input PNG/PGM image")
    p_proc.add_argument("--group", default="auto",
                        help="plane-group setting to enforce, or 'auto' (classify first)")
    p_proc.add_argument("--out", required=True, help="processed image output path")
    p_proc.add_argument("--report", default=None,
                        help="JSON report with quality metrics and before/after histograms")
    p_proc.add_argument("--no-consistency-check", action="store_true",
                        help="skip the classification cross-check of the chosen group")
    p_proc.add_argument("--config", default=None, help="JSON config overriding flags")
    _add_pipeline_flags(p_proc)
    p_proc.set_defaults(func=cmd_process)

    p_gen = sub.add_parser("generate", help="synthesize test patterns")
    p_gen.add_argument("--preset", choices=("paper-trio",), default=None,
                       help="generate the clean/moderate/heavy experiment set")
    p_gen.add_argument("--group", default=None, help="plane-group setting to generate")
    p_gen.add_argument("--cells", type=int, default=12, help="cells per edge (default 12)")
    p_gen.add_argument("--cell-px", type=int, default=96, help="pixels per cell edge (default 96)")
    p_gen.add_argument("--pseudo-delta", type=float, default=0.0,
                       help="supergroup-breaking offset in [0, 1]")
    p_gen.add_argument("--pseudo-group", default=None,
                       help="supergroup the built-in motif almost satisfies")
    p_gen.add_argument("--metric", default=None,
                       choices=("oblique", "rectangular", "rhombic", "square", "hexagonal"),
                       help="cell metric class (default: the group's own)")
    p_gen.add_argument("--sigma", type=float, default=0.0, help="Gaussian noise level")
    p_gen.add_argument("--spread", type=int, default=0, help="spread-noise radius in pixels")
    p_gen.add_argument("--seed", type=int, default=DEFAULT_TRIO_SEED, help="noise seed")
    p_gen.add_argument("--out", default=None, help="output image path (single pattern)")
    p_gen.add_argument("--out-dir", default=None,
                       help="output directory (default: $PLANESYM_OUTDIR or '.')")
    p_gen.add_argument("--config", default=None, help="JSON config overriding flags")
    p_gen.set_defaults(func=cmd_generate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_config_file(args, parser)
        return args.func(args)
    except SystemExit:
        raise
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
