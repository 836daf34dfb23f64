from .bounds import BoundSpec, clamp, extract_bounds
from .datasets import (CaptureDataset, CaptureError, InputDistribution, capture, load_dataset,
                       save_dataset, synthetic_dataset)
from .grow import GrowthReport, NeonNet, grow_structure
from .gridsearch import activation_grid_search
from .rewrite import apply_replacement, delineate, neon_groups, rewrite_sigmoid
from .finetune import FineTuneResult, accuracy, fine_tune
from .pipeline import TransformResult, derive_seed, graph_samples, transform_graph

__all__ = [
    "BoundSpec", "clamp", "extract_bounds", "CaptureDataset", "CaptureError",
    "InputDistribution", "capture", "load_dataset", "save_dataset", "synthetic_dataset",
    "GrowthReport", "NeonNet", "grow_structure", "activation_grid_search",
    "apply_replacement", "delineate", "neon_groups", "rewrite_sigmoid", "FineTuneResult",
    "accuracy", "fine_tune", "TransformResult", "derive_seed", "graph_samples",
    "transform_graph",
]
