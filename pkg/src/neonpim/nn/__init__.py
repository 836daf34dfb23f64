from .fcnet import (FcNet, Layer, ShapeError, backward, build_net, cosine_similarity,
                    forward, mse, xavier_uniform)
from .optim import AdamState, adam_step
from .train import TrainConfig, TrainResult, split_dataset, train
from .quant import QuantResult, QuantSpec, calibrate, quantize_eval
from .serialize import load_net, save_net

__all__ = [
    "FcNet", "Layer", "ShapeError", "backward", "build_net", "cosine_similarity", "forward",
    "mse", "xavier_uniform", "AdamState", "adam_step", "TrainConfig", "TrainResult",
    "split_dataset", "train", "QuantResult", "QuantSpec", "calibrate", "quantize_eval",
    "load_net", "save_net",
]
