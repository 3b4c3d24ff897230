from .randomize import (
    randomize,
    privileged_vector,
    ranges_for,
    PRIVILEGED_WIDTH,
    POSITION_NORM,
    PRIVILEGED_CLIP,
    DISTRIBUTIONS,
)
from .grasps import (
    GraspCache,
    generate_grasps,
    resimulate_fraction,
    canonical_grasp,
    grasp_predicates,
    bucket_scales,
    bucket_index,
    BUCKET_WIDTH,
    TIP_DISTANCE_BOUND,
)
from .env import RotationEnv, StepOutput, OBS_PAIR_WIDTH

__all__ = [
    "randomize",
    "privileged_vector",
    "ranges_for",
    "PRIVILEGED_WIDTH",
    "POSITION_NORM",
    "PRIVILEGED_CLIP",
    "DISTRIBUTIONS",
    "GraspCache",
    "generate_grasps",
    "resimulate_fraction",
    "canonical_grasp",
    "grasp_predicates",
    "bucket_scales",
    "bucket_index",
    "BUCKET_WIDTH",
    "TIP_DISTANCE_BOUND",
    "RotationEnv",
    "StepOutput",
    "OBS_PAIR_WIDTH",
]
