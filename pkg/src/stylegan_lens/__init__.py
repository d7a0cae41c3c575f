"""Desk-scale style-based GAN: equalized-learning-rate generator, magnitude
pruning sweeps, and latent steering, all on numpy with a from-scratch
reverse-mode autodiff core.
"""

from .autodiff import (
    GraphError,
    ShapeError,
    Tensor,
    avg_pool2,
    concat,
    conv2d,
    leaky_relu,
    log_sigmoid,
    matmul,
    no_grad,
    sigmoid,
    upsample,
)
from .layers import (
    EqualizedConv2d,
    EqualizedLinear,
    EqualizedParam,
    Module,
    NoiseInjector,
    StyleAffine,
    adain,
    equalized_scale,
    instance_norm,
    minibatch_stddev,
    pixel_norm,
)
from .generator import (
    GBlock,
    Generator,
    GeneratorConfig,
    MappingNetwork,
    SynthesisNetwork,
    WBatch,
    ema_update,
    style_mix,
    truncate,
)
from .discriminator import Discriminator, probability
from .training import (
    Adam,
    FolderDataset,
    SyntheticFaceDataset,
    TrainParams,
    TrainResult,
    TrainingDiverged,
    d_loss,
    denormalize_image,
    g_loss,
    histogram,
    load_training_checkpoint,
    normalize_image,
    save_training_checkpoint,
    train,
)
from .pruning import (
    PruneMask,
    PruneReport,
    count_nonzero,
    prune_generator,
    prune_generator_fraction,
    sweep,
    total_prunable,
    weight_stats,
)
from .latent import (
    LatentBatch,
    Perturbation,
    compare_pair,
    perturb,
    perturb_w,
    sample_latents,
    scale_latent,
)
from . import checkpoint
from .imaging import decode_png, encode_png, image_grid, save_image_grid, save_png

__version__ = "0.1.0"
