"""Training-set assembly, MSE loss, Adam, the step-decay schedule, and the loop.

The training set is one (coordinate in N, intensity) pair per voxel of every
stack, in deterministic stack-major, x-fastest order, with no deduplication
of coincident voxels.  Epoch shuffling is reseeded as ``shuffle_seed +
epoch`` so the full trajectory is a pure function of the configured seeds.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from time import perf_counter

import numpy as np

from .checkpoint import Checkpoint, save_checkpoint
from .encoding import FourierEncoder, encode_world_points
from .network import NetworkParams, backward, forward, grad_arrays, param_arrays
from .volume import Box, NormalizedStackSet, apply_rigid, voxel_to_world

__all__ = [
    "TrainingSample",
    "TrainingSet",
    "TrainConfig",
    "AdamState",
    "EpochLog",
    "build_training_set",
    "mse_loss",
    "init_adam",
    "adam_step",
    "lr_at",
    "train",
    "LOG_HEADER",
]

LOG_HEADER = ("epoch", "loss", "lr", "seconds")


@dataclass(frozen=True)
class TrainingSample:
    coordinate: np.ndarray  # (3,) mm in normalized space N
    intensity: float  # in [0, 1]


@dataclass(frozen=True)
class TrainingSet:
    """Structure-of-arrays sample store plus the model's coordinate box."""

    coords: np.ndarray  # (N, 3) float32, mm in N
    values: np.ndarray  # (N,) float32 in [0, 1]
    box: Box
    intensity_scale: float

    def __len__(self) -> int:
        return self.coords.shape[0]

    def __getitem__(self, i: int) -> TrainingSample:
        return TrainingSample(self.coords[i], float(self.values[i]))


@dataclass(frozen=True)
class TrainConfig:
    epochs: int
    batch_size: int = 2500
    lr0: float = 1e-4
    decay_factor: float = 0.5
    decay_every: int = 500
    betas: tuple[float, float] = (0.9, 0.999)
    epsilon: float = 1e-8
    shuffle_seed: int = 0
    checkpoint_every: int = 0  # 0 = final checkpoint only

    def __post_init__(self):
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if not self.lr0 > 0:
            raise ValueError("lr0 must be positive")
        if not 0 < self.decay_factor <= 1:
            raise ValueError("decay_factor must be in (0, 1]")
        if self.decay_every < 1:
            raise ValueError("decay_every must be >= 1")
        if not all(0 <= b < 1 for b in self.betas):
            raise ValueError("betas must be in [0, 1)")
        object.__setattr__(self, "betas", tuple(self.betas))


def build_training_set(stack_set: NormalizedStackSet) -> TrainingSet:
    """Every voxel of every stack as a (coordinate in N, intensity) sample."""
    coord_chunks, value_chunks = [], []
    for stack, transform in zip(stack_set.stacks, stack_set.transforms):
        nx, ny, nz = stack.dims
        ii, jj, kk = np.meshgrid(
            np.arange(nx), np.arange(ny), np.arange(nz), indexing="ij"
        )
        idx = np.stack(
            [ii.ravel(order="F"), jj.ravel(order="F"), kk.ravel(order="F")], axis=1
        )
        world = apply_rigid(transform, voxel_to_world(stack, idx))
        coord_chunks.append(world.astype(np.float32))
        value_chunks.append(stack.data.ravel(order="F"))
    return TrainingSet(
        coords=np.concatenate(coord_chunks),
        values=np.concatenate(value_chunks),
        box=stack_set.world_box(),
        intensity_scale=stack_set.intensity_scale,
    )


def mse_loss(pred: np.ndarray, target: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean squared error and its per-element gradient 2*(pred-target)/K."""
    pred = np.asarray(pred)
    target = np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    k = pred.size
    if k < 1:
        raise ValueError("loss needs at least one element")
    diff = pred - target
    loss = float(np.mean(diff.astype(np.float64) ** 2))
    return loss, (2.0 / k) * diff


@dataclass
class AdamState:
    """Step counter and per-parameter first/second moment estimates."""

    t: int
    m: list[np.ndarray]
    v: list[np.ndarray]


def init_adam(params: list[np.ndarray]) -> AdamState:
    return AdamState(
        t=0,
        m=[np.zeros_like(p) for p in params],
        v=[np.zeros_like(p) for p in params],
    )


def adam_step(
    state: AdamState,
    params: list[np.ndarray],
    grads: list[np.ndarray],
    lr: float,
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update, in place, in the parameters' dtype."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise ValueError("params/grads/state length mismatch")
    b1, b2 = betas
    t = state.t + 1
    c1 = 1.0 - b1**t
    c2 = 1.0 - b2**t
    for p, g, m, v in zip(params, grads, state.m, state.v):
        if p.shape != g.shape:
            raise ValueError(f"gradient shape {g.shape} != parameter shape {p.shape}")
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)
    state.t = t
    return params, state


def lr_at(cfg: TrainConfig, epoch: int) -> float:
    """Step-decayed learning rate: lr0 * factor^floor(epoch / every)."""
    if epoch < 0:
        raise ValueError("epoch must be >= 0")
    return cfg.lr0 * cfg.decay_factor ** (epoch // cfg.decay_every)


@dataclass(frozen=True)
class EpochLog:
    epoch: int
    loss: float
    lr: float
    seconds: float


def train(
    cfg: TrainConfig,
    samples: TrainingSet,
    encoder: FourierEncoder,
    params: NetworkParams,
    out_dir=None,
    log_path=None,
) -> tuple[NetworkParams, list[EpochLog]]:
    """Optimize ``params`` on ``samples``; returns them with the epoch log.

    Per epoch: shuffle, split into batches of ``batch_size`` (final short
    batch kept; a final batch of a single sample is folded into the previous
    one since batch statistics need two), train-mode forward, MSE, backward,
    Adam with the decayed learning rate.  Writes a CSV log row per epoch
    when ``log_path`` is given and checkpoints ``ckpt_<epoch>`` under
    ``out_dir`` on the configured cadence (plus the final epoch).
    """
    n = len(samples)
    if n == 0:
        raise ValueError("training set is empty")
    if n == 1 and cfg.epochs > 0:
        raise ValueError("training needs at least two samples")
    bounds = [
        (start, min(start + cfg.batch_size, n)) for start in range(0, n, cfg.batch_size)
    ]
    if len(bounds) > 1 and bounds[-1][1] - bounds[-1][0] == 1:
        bounds[-2:] = [(bounds[-2][0], n)]
    arrays = param_arrays(params)
    state = init_adam(arrays)
    logs: list[EpochLog] = []

    log_file = writer = None
    if log_path is not None:
        Path(log_path).parent.mkdir(parents=True, exist_ok=True)
        log_file = open(log_path, "w", newline="")
        writer = csv.writer(log_file)
        writer.writerow(LOG_HEADER)

    def checkpoint(epoch_done: int) -> None:
        if out_dir is None:
            return
        ckpt = Checkpoint(
            encoder=encoder,
            params=params,
            box=samples.box,
            intensity_scale=samples.intensity_scale,
            epoch=epoch_done,
        )
        save_checkpoint(ckpt, Path(out_dir) / f"ckpt_{epoch_done}")

    try:
        for epoch in range(cfg.epochs):
            t0 = perf_counter()
            lr = lr_at(cfg, epoch)
            order = np.random.default_rng(cfg.shuffle_seed + epoch).permutation(n)
            sq_sum = 0.0
            for start, end in bounds:
                sel = order[start:end]
                feats = encode_world_points(encoder, samples.box, samples.coords[sel])
                pred, cache = forward(params, feats, "train")
                loss, dpred = mse_loss(pred, samples.values[sel])
                grads = backward(params, cache, dpred)
                adam_step(
                    state, arrays, grad_arrays(grads), lr, cfg.betas, cfg.epsilon
                )
                sq_sum += loss * sel.size
            seconds = perf_counter() - t0
            entry = EpochLog(epoch=epoch, loss=sq_sum / n, lr=lr, seconds=seconds)
            logs.append(entry)
            if writer is not None:
                writer.writerow(
                    [entry.epoch, repr(entry.loss), repr(entry.lr), f"{entry.seconds:.3f}"]
                )
            if cfg.checkpoint_every and (epoch + 1) % cfg.checkpoint_every == 0:
                checkpoint(epoch + 1)
        if cfg.epochs and not (
            cfg.checkpoint_every and cfg.epochs % cfg.checkpoint_every == 0
        ):
            checkpoint(cfg.epochs)
    finally:
        if log_file is not None:
            log_file.close()
    return params, logs
