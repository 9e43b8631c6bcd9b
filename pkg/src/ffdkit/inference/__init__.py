"""Forward-pass engine: tensor ops, network spec, weight bundles, scorers."""

from .bundle import WeightBundle, random_bundle, read_bundle, write_bundle
from .network import (
    BlockDef,
    FoldedNetwork,
    HeadDef,
    NetworkSpec,
    StemDef,
    default_spec,
    default_spec_path,
    forward,
    width_scaled_channels,
)
from .ops import batchnorm_fold, conv2d, dense, depthwise_conv2d, relu6, softmax
from .scorer import CnnScorer, PlaybackScorer, score_source

__all__ = [
    "BlockDef",
    "CnnScorer",
    "FoldedNetwork",
    "HeadDef",
    "NetworkSpec",
    "PlaybackScorer",
    "StemDef",
    "WeightBundle",
    "batchnorm_fold",
    "conv2d",
    "default_spec",
    "default_spec_path",
    "dense",
    "depthwise_conv2d",
    "forward",
    "random_bundle",
    "read_bundle",
    "relu6",
    "score_source",
    "softmax",
    "width_scaled_channels",
    "write_bundle",
]
