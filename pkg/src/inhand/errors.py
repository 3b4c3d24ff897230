"""Exception taxonomy shared across the package.

The CLI maps these onto distinct exit codes, so prefer raising one of
them over a bare ValueError when the failure is user-facing.
"""


class ConfigError(ValueError):
    """Bad configuration: malformed config file, invalid ranges, or a
    network/stack whose shapes cannot compose."""


class UsageError(RuntimeError):
    """API misuse: stale backward cache, wrong history length, missing
    artifact for a requested operation."""


class SimulationFault(RuntimeError):
    """Non-finite state encountered while stepping the physics."""


class TrainingFault(RuntimeError):
    """Training-time failure: non-finite gradients, divergence, or a
    regression loss that refuses to decrease."""
