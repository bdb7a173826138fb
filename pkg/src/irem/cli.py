"""Command-line front end.

Subcommands: ``phantom``, ``simulate``, ``train``, ``reconstruct``,
``baseline``, ``evaluate``, ``sweep``.  Every command is rerunnable:
identical inputs and config produce identical outputs (bitwise for binary
artifacts, textual for CSV modulo the seconds column).  Exit codes:
0 success, 2 validation failure, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

import numpy as np

from .bspline import bspline_fuse
from .checkpoint import Checkpoint, load_checkpoint
from .config import ExperimentConfig, load_config
from .encoding import FourierEncoder
from .metrics import compare
from .network import init_params
from .phantom import smooth_phantom, textured_phantom
from .reconstruct import GridSpec, export_slices, reconstruct_checkpoint
from .simulate import SimulationConfig, simulate_stacks
from .training import build_training_set, train
from .volume import (
    Box,
    NormalizedStackSet,
    load_transform,
    load_volume,
    normalize_intensities,
    save_transform,
    save_volume,
)

METRICS_HEADER = ("method", "psnr_db", "ssim", "data_range", "grid_spacing")


def _parse_spacing(text: str) -> np.ndarray:
    parts = [float(p) for p in text.split(",")]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3 or any(p <= 0 for p in parts):
        raise ValueError(f"spacing must be one or three positive numbers, got {text!r}")
    return np.asarray(parts)


def _parse_box(text: str) -> Box:
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 6:
        raise ValueError("bbox must be six numbers: minx,miny,minz,maxx,maxy,maxz")
    return Box(parts[:3], parts[3:])


def _spacing_label(spacing: np.ndarray) -> str:
    vals = [f"{float(s):g}" for s in spacing]
    return vals[0] if len(set(vals)) == 1 else "x".join(vals)


def _default_spacing(stack_set: NormalizedStackSet) -> np.ndarray:
    finest = min(float(s.spacing.min()) for s in stack_set.stacks)
    return np.full(3, finest)


def _write_metrics(path: Path, rows: list[tuple], append: bool = False) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    exists = append and path.exists()
    with open(path, "a" if append else "w", newline="") as fh:
        writer = csv.writer(fh)
        if not exists:
            writer.writerow(METRICS_HEADER)
        writer.writerows(rows)


def _load_stack_manifest(path: Path) -> NormalizedStackSet:
    if not path.exists():
        raise FileNotFoundError(f"stack manifest not found: {path}")
    with open(path) as fh:
        manifest = json.load(fh)
    base = path.parent
    stacks = [load_volume(base / p) for p in manifest["stacks"]]
    transforms = [load_transform(base / p) for p in manifest["transforms"]]
    return normalize_intensities(stacks, transforms)


def _train_once(
    cfg: ExperimentConfig, out_dir: Path, encoder_dim: int | None = None
) -> tuple[Path, Checkpoint]:
    """Run one full training per the config; returns the final checkpoint."""
    stack_set = cfg.load_stack_set()
    samples = build_training_set(stack_set)
    dim = cfg.encoder_dim if encoder_dim is None else encoder_dim
    encoder = FourierEncoder(L=dim // 2, seed=cfg.encoder_seed)
    params = init_params(L=dim // 2, seed=cfg.init_seed, hidden=cfg.hidden)
    out_dir.mkdir(parents=True, exist_ok=True)
    train(cfg.train, samples, encoder, params, out_dir=out_dir, log_path=out_dir / "log.csv")
    ckpt_path = out_dir / f"ckpt_{cfg.train.epochs}.json"
    return ckpt_path, load_checkpoint(ckpt_path)


def cmd_phantom(args) -> int:
    if args.kind == "smooth":
        vol = smooth_phantom(n=args.size, spacing=args.spacing)
    else:
        vol = textured_phantom(n=args.size, spacing=args.spacing, seed=args.seed)
    path = save_volume(vol, args.output)
    print(f"wrote {args.kind} phantom {vol.dims} to {path}")
    return 0


def cmd_simulate(args) -> int:
    hr = load_volume(args.input)
    cfg = SimulationConfig(factor=args.factor, orientations=tuple(args.orientations.split(",")))
    stacks, transforms = simulate_stacks(hr, cfg)
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stack_names, transform_names = [], []
    for name, stack, t in zip(cfg.orientations, stacks, transforms):
        save_volume(stack, out_dir / f"{name}.json")
        save_transform(t, out_dir / f"{name}_transform.json")
        stack_names.append(f"{name}.json")
        transform_names.append(f"{name}_transform.json")
        print(f"{name}: dims {stack.dims}, spacing {np.round(stack.spacing, 6).tolist()} mm")
    manifest = {
        "source": str(args.input),
        "factor": cfg.factor,
        "orientations": list(cfg.orientations),
        "stacks": stack_names,
        "transforms": transform_names,
    }
    with open(out_dir / "stacks_manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")
    print(f"manifest: {out_dir / 'stacks_manifest.json'}")
    return 0


def cmd_train(args) -> int:
    cfg = load_config(args.config)
    out_dir = Path(args.out_dir) if args.out_dir else cfg.output_dir
    ckpt_path, ckpt = _train_once(cfg, out_dir)
    print(f"checkpoint: {ckpt_path} (L={ckpt.encoder.L}, epoch={ckpt.epoch})")
    print(f"log: {out_dir / 'log.csv'}")
    return 0


def _grid_from_args(args, ckpt: Checkpoint) -> GridSpec:
    box = _parse_box(args.bbox) if args.bbox else ckpt.box
    return GridSpec(box=box, spacing=_parse_spacing(args.spacing))


def cmd_reconstruct(args) -> int:
    ckpt = load_checkpoint(args.checkpoint)
    spec = _grid_from_args(args, ckpt)
    vol = reconstruct_checkpoint(ckpt, spec, chunk_size=args.chunk_size)
    path = save_volume(vol, args.output)
    print(f"reconstructed {vol.dims} at spacing {_spacing_label(spec.spacing)} -> {path}")
    if args.export_slices:
        slice_dir = Path(args.slice_dir) if args.slice_dir else Path(args.output).parent / "slices"
        paths = export_slices(vol, slice_dir, axis=args.export_slices)
        print(f"exported {len(paths)} slices to {slice_dir}")
    return 0


def cmd_baseline(args) -> int:
    stack_set = _load_stack_manifest(Path(args.stacks))
    spacing = _parse_spacing(args.spacing) if args.spacing else _default_spacing(stack_set)
    box = _parse_box(args.bbox) if args.bbox else stack_set.world_box()
    spec = GridSpec(box=box, spacing=spacing)
    vol = bspline_fuse(stack_set, spec, fill_value=args.fill_value)
    path = save_volume(vol, args.output)
    print(f"fused {len(stack_set.stacks)} stacks onto {vol.dims} grid -> {path}")
    return 0


def cmd_evaluate(args) -> int:
    reference = load_volume(args.reference)
    rows = []
    for entry in args.test:
        if "=" not in entry:
            raise ValueError(f"--test expects METHOD=PATH, got {entry!r}")
        method, _, path = entry.partition("=")
        vol = load_volume(path)
        report = compare(reference, vol, data_range=args.data_range)
        rows.append(
            (
                method,
                repr(report.psnr_db),
                repr(report.ssim),
                repr(report.data_range),
                _spacing_label(vol.spacing),
            )
        )
        print(f"{method}: psnr {report.psnr_db:.3f} dB, ssim {report.ssim:.5f}")
    _write_metrics(Path(args.output), rows, append=args.append)
    print(f"metrics: {args.output}")
    return 0


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    dims = [int(d) for d in args.dims.split(",") if d.strip()]
    if not dims:
        raise ValueError("sweep needs a non-empty list of encoder dimensions")
    if any(d < 2 or d % 2 for d in dims):
        raise ValueError(f"encoder dimensions must be positive even integers: {dims}")
    if cfg.reference is None:
        raise ValueError("sweep needs a 'reference' volume in the config")
    reference = load_volume(cfg.reference)
    out_dir = Path(args.out_dir) if args.out_dir else cfg.output_dir
    rows = []
    for dim in dims:
        run_dir = out_dir / f"dim_{dim}"
        _, ckpt = _train_once(cfg, run_dir, encoder_dim=dim)
        spacing = cfg.grid_spacing if cfg.grid_spacing is not None else reference.spacing
        box = cfg.grid_box if cfg.grid_box is not None else ckpt.box
        vol = reconstruct_checkpoint(ckpt, GridSpec(box=box, spacing=spacing))
        save_volume(vol, run_dir / "reconstruction.json")
        report = compare(reference, vol)
        rows.append(
            (
                dim,
                repr(report.psnr_db),
                repr(report.ssim),
                repr(report.data_range),
                _spacing_label(spacing),
            )
        )
        print(f"dim {dim}: psnr {report.psnr_db:.3f} dB, ssim {report.ssim:.5f}")
    sweep_path = Path(args.output) if args.output else out_dir / "sweep.csv"
    sweep_path.parent.mkdir(parents=True, exist_ok=True)
    with open(sweep_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(("dim",) + METRICS_HEADER[1:])
        writer.writerows(rows)
    print(f"sweep results: {sweep_path}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="irem",
        description="Isotropic volume super-resolution from anisotropic stacks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("phantom", help="generate a procedural test volume")
    p.add_argument("--kind", choices=("smooth", "textured"), default="textured")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--spacing", type=float, default=1.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_phantom)

    p = sub.add_parser("simulate", help="derive thick-slice LR stacks from an HR volume")
    p.add_argument("--input", required=True)
    p.add_argument("--factor", type=int, required=True)
    p.add_argument("--orientations", default="axial,coronal,sagittal")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("train", help="train the coordinate network per a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out-dir", help="override the config's output directory")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("reconstruct", help="sample a trained model onto a dense grid")
    p.add_argument("--checkpoint", required=True)
    p.add_argument("--spacing", required=True, help="mm, one value or x,y,z")
    p.add_argument("--bbox", help="minx,miny,minz,maxx,maxy,maxz (default: model box)")
    p.add_argument("--chunk-size", type=int, default=131072)
    p.add_argument("--output", required=True)
    p.add_argument("--export-slices", choices=("x", "y", "z"), help="write 8-bit PGM slices")
    p.add_argument("--slice-dir")
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("baseline", help="cubic B-spline multi-stack fusion")
    p.add_argument("--stacks", required=True, help="stack manifest from `simulate`")
    p.add_argument("--spacing", help="mm, one value or x,y,z (default: finest stack spacing)")
    p.add_argument("--bbox", help="default: union box of the stacks")
    p.add_argument("--fill-value", type=float, default=0.0)
    p.add_argument("--output", required=True)
    p.set_defaults(func=cmd_baseline)

    p = sub.add_parser("evaluate", help="PSNR/SSIM of volumes against a reference")
    p.add_argument("--reference", required=True)
    p.add_argument(
        "--test",
        action="append",
        required=True,
        metavar="METHOD=PATH",
        help="repeatable; one CSV row per entry",
    )
    p.add_argument("--data-range", type=float, default=None)
    p.add_argument("--output", required=True)
    p.add_argument("--append", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("sweep", help="train at several encoder dimensions and tabulate metrics")
    p.add_argument("--config", required=True)
    p.add_argument("--dims", required=True, help="comma-separated 2L values")
    p.add_argument("--out-dir")
    p.add_argument("--output", help="sweep CSV path (default: <out-dir>/sweep.csv)")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, FileNotFoundError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - CLI boundary
        print(f"runtime failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
