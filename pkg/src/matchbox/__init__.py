"""Small-footprint keyword spotting with time-channel separable 1D
convolutions: audio I/O, MFCC features, augmentation, a compact autodiff
core, the BxRxC network, its training recipe and noise-robustness
evaluation."""

__version__ = "0.1.0"

from .audio_io import AudioClip, decode_wav, encode_wav, fit_to_duration
from .features import FeatureConfig, FeatureMap, mfcc
from .model import ModelConfig, Network, build, count_params, kernel_schedule
from .optim import NovoGrad, OptimConfig, lr_at, softmax_cross_entropy

__all__ = [
    "AudioClip", "decode_wav", "encode_wav", "fit_to_duration",
    "FeatureConfig", "FeatureMap", "mfcc",
    "ModelConfig", "Network", "build", "count_params", "kernel_schedule",
    "NovoGrad", "OptimConfig", "lr_at", "softmax_cross_entropy",
    "__version__",
]
