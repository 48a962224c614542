"""Online adaptive image reconstruction with learned patch dictionaries."""
from ._kernels import BACKEND
from .dct import build_dct_dictionary
from .dictlearn import Accumulators, Dictionary
from .errors import ConfigError, NumericalDegeneracyError, OnairError, TensorFormatError
from .io import read_dictionary, read_tensor, write_dictionary, write_tensor
from .masks import MaskSpec, gen_mask
from .metrics import MetricReport, nrmse, psnr
from .patches import PatchConfig, aggregate_patches, extract_patches
from .pipeline import (
    MeasurementStream,
    OnairConfig,
    StreamResult,
    batch_reconstruct,
    reconstruct_stream,
)
from .sensing import SensingOperator
from .synth import synth_phantom, synth_planted
from .windows import sliding_windows

__version__ = "0.1.0"
