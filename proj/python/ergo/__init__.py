"""Ergodic exploration under bounded disturbance."""

from ._ergo import (
    CorruptFile,
    CostParams,
    ErgoError,
    FingerprintMismatch,
    InvalidArgument,
    Problem,
    ReMPCConfig,
    ValueNet,
    compare,
    make_value_net,
    opt_control_from_costate,
    rollout,
    worst_case_disturbance,
)

__all__ = [
    "CorruptFile",
    "CostParams",
    "ErgoError",
    "FingerprintMismatch",
    "InvalidArgument",
    "Problem",
    "ReMPCConfig",
    "ValueNet",
    "compare",
    "make_value_net",
    "opt_control_from_costate",
    "rollout",
    "worst_case_disturbance",
]
