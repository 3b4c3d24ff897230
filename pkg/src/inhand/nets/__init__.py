from .bundle import (
    PolicyBundle,
    make_bundle,
    make_adaptation_net,
    conv_specs_for,
    encode_extrinsics,
    policy_act,
    critic_value,
    adapt_estimate,
    gaussian_log_prob,
    EXTRINSICS_WIDTH,
    ACTION_WIDTH,
    LOG_STD_INIT,
    CONV_SPECS,
    KINDS,
)

__all__ = [
    "PolicyBundle",
    "make_bundle",
    "make_adaptation_net",
    "conv_specs_for",
    "encode_extrinsics",
    "policy_act",
    "critic_value",
    "adapt_estimate",
    "gaussian_log_prob",
    "EXTRINSICS_WIDTH",
    "ACTION_WIDTH",
    "LOG_STD_INIT",
    "CONV_SPECS",
    "KINDS",
]
