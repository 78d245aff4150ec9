"""Kernel classification of tensors through weighted per-mode subspaces.

Each tensor is summarized by the leading left singular vectors of its mode
unfoldings; a small network assigns an uncertainty to every basis vector, and
a Nystrom-approximated Grassmann RBF kernel feeds a linear softmax classifier.
"""

__version__ = "0.1.0"

from .kernel import KernelConfig, gram_matrix, tensor_kernel
from .model import (TrainConfig, UktlModel, evaluate, forward, grad_check, load_checkpoint, predict,
                    predict_proba, save_checkpoint, train)
from .subspace import Subspace, principal_angles, projection_distance_sq, tensor_subspaces, truncated_subspace
from .tensor import fold, matricize, read_tensor, write_tensor

__all__ = [
    "__version__",
    "KernelConfig",
    "gram_matrix",
    "tensor_kernel",
    "TrainConfig",
    "UktlModel",
    "evaluate",
    "forward",
    "grad_check",
    "load_checkpoint",
    "predict",
    "predict_proba",
    "save_checkpoint",
    "train",
    "Subspace",
    "principal_angles",
    "projection_distance_sq",
    "tensor_subspaces",
    "truncated_subspace",
    "fold",
    "matricize",
    "read_tensor",
    "write_tensor",
]
