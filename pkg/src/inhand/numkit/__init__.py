from .dense import DenseNet, AffineLayer, init_affine, activate, activate_grad, ACTIVATIONS
from .conv import ConvStack, ConvLayer, conv_output_length
from .adam import AdamState, adam_step, clip_grads_, global_grad_norm
from .gradcheck import (
    check_dense,
    check_conv,
    run_suite,
    relative_error,
    dense_kinks_ok,
    conv_kinks_ok,
    REL_TOL,
)
from .checkpoint import save_arrays, load_arrays

__all__ = [
    "DenseNet",
    "AffineLayer",
    "init_affine",
    "activate",
    "activate_grad",
    "ACTIVATIONS",
    "ConvStack",
    "ConvLayer",
    "conv_output_length",
    "AdamState",
    "adam_step",
    "clip_grads_",
    "global_grad_norm",
    "check_dense",
    "check_conv",
    "run_suite",
    "relative_error",
    "dense_kinks_ok",
    "conv_kinks_ok",
    "REL_TOL",
    "save_arrays",
    "load_arrays",
]
