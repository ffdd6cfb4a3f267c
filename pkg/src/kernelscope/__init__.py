"""Counter-free performance analysis of depthwise 1D convolution GPU kernels."""

from .accumulate import ChunkedTwoStage, PairwiseTree, Sequential
from .conv_core import ConvShape, DimensionError, backward_input, backward_weight, forward, pad_width, validate
from .exec_model import DeviceSpec, ExecPath, Variant

__version__ = "0.1.0"
