"""The 18-layer fully-connected network and its exact analytic gradients.

Layers 1-17 apply affine -> batch norm -> ReLU; layer 18 is affine only, so
the scalar output is unclamped.  The encoder features are concatenated onto
the activations coming out of layers 6 and 12, i.e. the inputs of layers 7
and 13 are ``hidden + 2L`` wide.  Widths: layer 1 takes the 2L features,
every hidden layer emits ``hidden`` units (256 in the full model; narrower
nets are used for exhaustive gradient checks).

Batch-norm semantics: biased batch variance for normalization and for the
running-statistic update, momentum 0.1, eps 1e-5.  Train mode uses batch
statistics and updates the running ones in place; eval mode reads the
running statistics and mutates nothing, so eval forward is a pure function.

All arithmetic is 32-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEPTH",
    "SKIP_LAYERS",
    "BN_EPS",
    "NetworkParams",
    "ParamGrads",
    "ForwardCache",
    "layer_sizes",
    "init_params",
    "parameter_count",
    "forward",
    "backward",
    "param_arrays",
    "grad_arrays",
]

DEPTH = 18
SKIP_LAYERS = (7, 13)  # 1-indexed layers whose input is concat(activation, features)
BN_EPS = np.float32(1e-5)
BN_MOMENTUM = 0.1


def layer_sizes(L: int, hidden: int) -> list[tuple[int, int]]:
    """(fan_in, fan_out) for layers 1..18 given feature dim 2L."""
    sizes = []
    for layer in range(1, DEPTH + 1):
        if layer == 1:
            fan_in = 2 * L
        elif layer in SKIP_LAYERS:
            fan_in = hidden + 2 * L
        else:
            fan_in = hidden
        fan_out = 1 if layer == DEPTH else hidden
        sizes.append((fan_in, fan_out))
    return sizes


@dataclass
class NetworkParams:
    """Weights, biases, and batch-norm state for the fixed 18-layer net.

    Weight ``l`` has shape (fan_in, fan_out); batch-norm arrays exist for
    the 17 hidden layers only.  Running statistics are the only mutable
    state, and only train-mode forward touches them.
    """

    L: int
    hidden: int
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    bn_scale: list[np.ndarray]
    bn_shift: list[np.ndarray]
    running_mean: list[np.ndarray]
    running_var: list[np.ndarray]
    momentum: float = BN_MOMENTUM

    def __post_init__(self):
        expected = layer_sizes(self.L, self.hidden)
        if len(self.weights) != DEPTH or len(self.biases) != DEPTH:
            raise ValueError("expected 18 weight/bias pairs")
        for l, (w, size) in enumerate(zip(self.weights, expected)):
            if w.shape != size:
                raise ValueError(f"layer {l + 1} weight shape {w.shape} != {size}")
        if not all(
            len(lst) == DEPTH - 1
            for lst in (self.bn_scale, self.bn_shift, self.running_mean, self.running_var)
        ):
            raise ValueError("expected 17 batch-norm parameter sets")
        for v in self.running_var:
            if np.any(v <= 0):
                raise ValueError("running variance must stay positive")


@dataclass
class ParamGrads:
    """Gradients mirroring :class:`NetworkParams` trainable arrays."""

    weights: list[np.ndarray]
    biases: list[np.ndarray]
    bn_scale: list[np.ndarray]
    bn_shift: list[np.ndarray]


@dataclass
class ForwardCache:
    """Train-mode intermediates needed by :func:`backward`."""

    params: NetworkParams
    features: np.ndarray
    inputs: list[np.ndarray]  # affine input per layer (post-concat)
    xhat: list[np.ndarray]  # normalized pre-scale/shift values per BN layer
    inv_std: list[np.ndarray]  # 1/sqrt(batch var + eps) per BN layer
    acts: list[np.ndarray]  # post-ReLU activations per hidden layer
    batch_mean: list[np.ndarray]
    batch_var: list[np.ndarray]


def init_params(L: int, seed: int, hidden: int = 256) -> NetworkParams:
    """He-uniform weights, zero biases, identity batch-norm, unit running var."""
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in layer_sizes(L, hidden):
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)).astype(np.float32))
        biases.append(np.zeros(fan_out, dtype=np.float32))
    n_bn = DEPTH - 1
    return NetworkParams(
        L=L,
        hidden=hidden,
        weights=weights,
        biases=biases,
        bn_scale=[np.ones(hidden, dtype=np.float32) for _ in range(n_bn)],
        bn_shift=[np.zeros(hidden, dtype=np.float32) for _ in range(n_bn)],
        running_mean=[np.zeros(hidden, dtype=np.float32) for _ in range(n_bn)],
        running_var=[np.ones(hidden, dtype=np.float32) for _ in range(n_bn)],
    )


def parameter_count(params: NetworkParams) -> int:
    """Number of trainable scalars (weights, biases, BN scale and shift)."""
    return sum(
        arr.size
        for group in (params.weights, params.biases, params.bn_scale, params.bn_shift)
        for arr in group
    )


def forward(
    params: NetworkParams, features: np.ndarray, mode: str = "eval"
) -> tuple[np.ndarray, ForwardCache | None]:
    """Run the network on a (N, 2L) feature batch.

    Returns (predictions (N,), cache); the cache is None in eval mode.
    Train mode requires N >= 2 (batch statistics need a variance) and
    updates the running statistics in place.
    """
    if mode not in ("train", "eval"):
        raise ValueError(f"mode must be 'train' or 'eval', got {mode!r}")
    feats = np.asarray(features, dtype=np.float32)
    if feats.ndim != 2 or feats.shape[1] != 2 * params.L:
        raise ValueError(
            f"features must be (N, {2 * params.L}), got {feats.shape}"
        )
    train = mode == "train"
    n = feats.shape[0]
    if train and n < 2:
        raise ValueError("train mode needs batch size >= 2")

    inputs, xhats, inv_stds, acts, means, variances = [], [], [], [], [], []
    a = feats
    for l in range(DEPTH - 1):
        if (l + 1) in SKIP_LAYERS:
            a = np.concatenate([a, feats], axis=1)
        inputs.append(a)
        z = a @ params.weights[l]
        z += params.biases[l]
        if train:
            mean = z.mean(axis=0)
            var = z.var(axis=0)
            inv_std = 1.0 / np.sqrt(var + BN_EPS)
            xhat = (z - mean) * inv_std
            m = np.float32(params.momentum)
            params.running_mean[l] *= 1.0 - m
            params.running_mean[l] += m * mean
            params.running_var[l] *= 1.0 - m
            params.running_var[l] += m * var
            means.append(mean)
            variances.append(var)
        else:
            inv_std = 1.0 / np.sqrt(params.running_var[l] + BN_EPS)
            xhat = (z - params.running_mean[l]) * inv_std
        y = params.bn_scale[l] * xhat
        y += params.bn_shift[l]
        a = np.maximum(y, 0.0, out=y)
        if train:
            xhats.append(xhat)
            inv_stds.append(inv_std)
            acts.append(a)
    inputs.append(a)
    out = (a @ params.weights[DEPTH - 1] + params.biases[DEPTH - 1]).ravel()

    if not train:
        return out, None
    cache = ForwardCache(
        params=params,
        features=feats,
        inputs=inputs,
        xhat=xhats,
        inv_std=inv_stds,
        acts=acts,
        batch_mean=means,
        batch_var=variances,
    )
    return out, cache


def backward(
    params: NetworkParams, cache: ForwardCache, output_grads: np.ndarray
) -> ParamGrads:
    """Gradients of a scalar loss w.r.t. every trainable parameter.

    ``output_grads`` is dLoss/dPrediction, shape (N,).  Gradients flow
    through the batch statistics (full batch-norm backward); the skip
    concatenations route their feature slice back to the encoder branch,
    which holds no trainable parameters.
    """
    if cache is None or cache.params is not params:
        raise ValueError("cache does not belong to these parameters")
    g = np.asarray(output_grads, dtype=np.float32)
    n = cache.features.shape[0]
    if g.shape != (n,):
        raise ValueError(f"output_grads must be ({n},), got {g.shape}")

    d_w = [None] * DEPTH
    d_b = [None] * DEPTH
    d_scale = [None] * (DEPTH - 1)
    d_shift = [None] * (DEPTH - 1)

    dz = g[:, None]
    d_w[DEPTH - 1] = cache.inputs[DEPTH - 1].T @ dz
    d_b[DEPTH - 1] = dz.sum(axis=0)
    da = dz @ params.weights[DEPTH - 1].T

    for l in range(DEPTH - 2, -1, -1):
        dy = da * (cache.acts[l] > 0)
        xhat = cache.xhat[l]
        d_scale[l] = (dy * xhat).sum(axis=0)
        d_shift[l] = dy.sum(axis=0)
        dxhat = dy * params.bn_scale[l]
        dz = cache.inv_std[l] * (
            dxhat - dxhat.mean(axis=0) - xhat * (dxhat * xhat).mean(axis=0)
        )
        d_w[l] = cache.inputs[l].T @ dz
        d_b[l] = dz.sum(axis=0)
        if l > 0:
            da = dz @ params.weights[l].T
            if (l + 1) in SKIP_LAYERS:
                da = da[:, : params.hidden]
    return ParamGrads(weights=d_w, biases=d_b, bn_scale=d_scale, bn_shift=d_shift)


def param_arrays(params: NetworkParams) -> list[np.ndarray]:
    """Trainable arrays in the fixed order shared with :func:`grad_arrays`."""
    return [*params.weights, *params.biases, *params.bn_scale, *params.bn_shift]


def grad_arrays(grads: ParamGrads) -> list[np.ndarray]:
    return [*grads.weights, *grads.biases, *grads.bn_scale, *grads.bn_shift]
