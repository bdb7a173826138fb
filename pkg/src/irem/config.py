"""Experiment configuration files.

One JSON file fully describes a run: input volume (or pre-aligned stacks
with their transforms), simulation settings, encoder dimension and seed,
training hyperparameters, and the output grid.  Seeds must be explicit;
there are no entropy defaults anywhere.  Relative paths are resolved
against the config file's directory so committed profiles stay relocatable.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .simulate import SimulationConfig
from .training import TrainConfig
from .volume import (
    Box,
    NormalizedStackSet,
    RigidTransform,
    Volume,
    load_transform,
    load_volume,
    normalize_intensities,
)

__all__ = ["ExperimentConfig", "load_config"]


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    output_dir: Path
    encoder_dim: int  # 2L
    encoder_seed: int
    init_seed: int
    hidden: int
    train: TrainConfig
    hr_volume: Path | None = None
    simulation: SimulationConfig | None = None
    stack_paths: tuple[Path, ...] = ()
    transform_paths: tuple[Path, ...] = ()
    grid_spacing: np.ndarray | None = None
    grid_box: Box | None = None
    reference: Path | None = None

    @property
    def L(self) -> int:
        return self.encoder_dim // 2

    def load_raw_stacks(self) -> tuple[list[Volume], list[RigidTransform]]:
        """Input stacks at original intensity, simulated or loaded from disk."""
        if self.hr_volume is not None:
            from .simulate import simulate_stacks

            hr = load_volume(self.hr_volume)
            return simulate_stacks(hr, self.simulation)
        stacks = [load_volume(p) for p in self.stack_paths]
        transforms = [load_transform(p) for p in self.transform_paths]
        return stacks, transforms

    def load_stack_set(self) -> NormalizedStackSet:
        stacks, transforms = self.load_raw_stacks()
        return normalize_intensities(stacks, transforms)


def _require(mapping: dict, key: str, context: str):
    if key not in mapping:
        raise ValueError(f"config {context} is missing required field '{key}'")
    return mapping[key]


def load_config(path) -> ExperimentConfig:
    """Parse and validate an experiment config; all checks happen here."""
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(f"config file not found: {path}")
    try:
        with open(path) as fh:
            raw = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"config {path} is not valid JSON: {exc}") from exc
    base = path.parent

    def resolve(p) -> Path:
        p = Path(p)
        return p if p.is_absolute() else base / p

    name = str(raw.get("name", path.stem))
    output_dir = resolve(_require(raw, "output_dir", name))

    enc = _require(raw, "encoder", name)
    encoder_dim = int(_require(enc, "dim", f"{name}.encoder"))
    if encoder_dim < 2 or encoder_dim % 2 != 0:
        raise ValueError(f"encoder dim (2L) must be a positive even integer, got {encoder_dim}")
    encoder_seed = int(_require(enc, "seed", f"{name}.encoder"))

    tr = _require(raw, "train", name)
    init_seed = int(_require(tr, "init_seed", f"{name}.train"))
    hidden = int(tr.get("hidden", 256))
    if hidden < 1:
        raise ValueError(f"hidden width must be >= 1, got {hidden}")
    train = TrainConfig(
        epochs=int(_require(tr, "epochs", f"{name}.train")),
        batch_size=int(tr.get("batch_size", 2500)),
        lr0=float(tr.get("lr0", 1e-4)),
        decay_factor=float(tr.get("decay_factor", 0.5)),
        decay_every=int(tr.get("decay_every", 500)),
        betas=tuple(tr.get("betas", (0.9, 0.999))),
        epsilon=float(tr.get("epsilon", 1e-8)),
        shuffle_seed=int(_require(tr, "shuffle_seed", f"{name}.train")),
        checkpoint_every=int(tr.get("checkpoint_every", 0)),
    )

    inp = _require(raw, "input", name)
    hr_volume = None
    simulation = None
    stack_paths: tuple[Path, ...] = ()
    transform_paths: tuple[Path, ...] = ()
    if "hr_volume" in inp:
        hr_volume = resolve(inp["hr_volume"])
        if not hr_volume.exists():
            raise ValueError(f"config {name}: input volume {hr_volume} does not exist")
        sim = _require(raw, "simulate", name)
        simulation = SimulationConfig(
            factor=int(_require(sim, "factor", f"{name}.simulate")),
            orientations=tuple(sim.get("orientations", ("axial", "coronal", "sagittal"))),
            seed=int(sim.get("seed", 0)),
        )
    elif "stacks" in inp:
        stack_paths = tuple(resolve(p) for p in inp["stacks"])
        transform_paths = tuple(resolve(p) for p in _require(inp, "transforms", f"{name}.input"))
        if len(stack_paths) != len(transform_paths):
            raise ValueError(
                f"config {name}: {len(stack_paths)} stacks but {len(transform_paths)} transforms"
            )
        if not stack_paths:
            raise ValueError(f"config {name}: empty stack list")
        for p in (*stack_paths, *transform_paths):
            if not p.exists():
                raise ValueError(f"config {name}: input file {p} does not exist")
    else:
        raise ValueError(f"config {name}: input needs either 'hr_volume' or 'stacks'")

    grid_spacing = None
    grid_box = None
    if "grid" in raw:
        grid = raw["grid"]
        if "spacing" in grid:
            sp = grid["spacing"]
            if np.isscalar(sp):
                sp = [sp] * 3
            grid_spacing = np.asarray(sp, dtype=np.float64).reshape(3)
            if np.any(grid_spacing <= 0):
                raise ValueError(f"config {name}: grid spacing must be positive")
        if "bbox" in grid:
            grid_box = Box(grid["bbox"]["min"], grid["bbox"]["max"])

    reference = None
    if "reference" in raw:
        reference = resolve(raw["reference"])
        if not reference.exists():
            raise ValueError(f"config {name}: reference volume {reference} does not exist")

    return ExperimentConfig(
        name=name,
        output_dir=output_dir,
        encoder_dim=encoder_dim,
        encoder_seed=encoder_seed,
        init_seed=init_seed,
        hidden=hidden,
        train=train,
        hr_volume=hr_volume,
        simulation=simulation,
        stack_paths=stack_paths,
        transform_paths=transform_paths,
        grid_spacing=grid_spacing,
        grid_box=grid_box,
        reference=reference,
    )
