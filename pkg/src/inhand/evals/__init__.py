from .metrics import EpisodeMetrics, compute_metrics, aggregate, METRIC_NAMES
from .controllers import (
    Controller,
    ExpertController,
    AdaptiveController,
    DRController,
    PeriodicController,
    VariantSpec,
    VARIANT_TAGS,
)
from .runner import (
    EvalResult,
    evaluate,
    run_episodes,
    recompute_aggregate,
    make_periodic,
    export_traces,
    write_csv,
    EVAL_BATCH,
)
from .probes import ProbeReport, probe_extrinsics, ols_r2, episode_features

__all__ = [
    "EpisodeMetrics",
    "compute_metrics",
    "aggregate",
    "METRIC_NAMES",
    "Controller",
    "ExpertController",
    "AdaptiveController",
    "DRController",
    "PeriodicController",
    "VariantSpec",
    "VARIANT_TAGS",
    "EvalResult",
    "evaluate",
    "run_episodes",
    "recompute_aggregate",
    "make_periodic",
    "export_traces",
    "write_csv",
    "EVAL_BATCH",
    "ProbeReport",
    "probe_extrinsics",
    "ols_r2",
    "episode_features",
]
