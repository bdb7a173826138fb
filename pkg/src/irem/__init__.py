"""Isotropic volume super-resolution from anisotropic thick-slice stacks.

Learns a continuous intensity field of 3D world coordinates from multiple
low-resolution stacks (Fourier feature encoding + deep fully-connected
network trained from scratch), then samples it on an arbitrarily fine
isotropic grid.  Includes thick-slice simulation, a cubic B-spline fusion
baseline, and PSNR/SSIM evaluation.
"""

from ._kernels import BACKEND as KERNEL_BACKEND
from .bspline import bspline_fuse, spline_coefficients, sample_spline
from .checkpoint import Checkpoint, load_checkpoint, save_checkpoint
from .encoding import FourierEncoder, encode_world_points, fourier_encode
from .metrics import MetricReport, compare, psnr, ssim
from .network import NetworkParams, backward, forward, init_params
from .phantom import smooth_phantom, textured_phantom
from .reconstruct import GridSpec, make_dense_grid, reconstruct_checkpoint, reconstruct_volume
from .simulate import SimulationConfig, downsample_axis, simulate_lr_stacks, simulate_stacks
from .training import (
    AdamState,
    TrainConfig,
    TrainingSet,
    adam_step,
    build_training_set,
    lr_at,
    mse_loss,
    train,
)
from .volume import (
    Box,
    NormalizedStackSet,
    RigidTransform,
    Volume,
    apply_rigid,
    load_transform,
    load_volume,
    normalize_intensities,
    save_transform,
    save_volume,
    voxel_to_world,
)

__version__ = "0.1.0"
