"""Deployment-time controllers: how each evaluated variant wires its
inputs to the shared policy interface."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..envgym import RotationEnv
from ..errors import ConfigError
from ..nets import PolicyBundle, adapt_estimate, encode_extrinsics, policy_act
from ..numkit import ConvStack


class Controller:
    """Stateful per-batch policy wrapper; act() returns PD targets."""

    uses_estimator = False

    def reset(self, n: int) -> None:  # pragma: no cover - default no-op
        pass

    def act(self, obs: np.ndarray, env: RotationEnv, t: int) -> np.ndarray:
        raise NotImplementedError

    def current_estimate(self) -> np.ndarray | None:
        return None


@dataclass
class ExpertController(Controller):
    """Privileged teacher: embedding from the true parameters each step."""

    bundle: PolicyBundle

    def act(self, obs, env, t):
        z = encode_extrinsics(self.bundle, env.privileged())
        action, _ = policy_act(self.bundle, obs, z, "mean")
        return action


@dataclass
class AdaptiveController(Controller):
    """Deployed pipeline: embedding estimated from proprioception history.

    freeze_after > 0 reproduces the no-online-adaptation baseline: the
    estimate updates normally until the first full history window, then
    stays frozen for the rest of the episode.
    """

    bundle: PolicyBundle
    estimator: ConvStack
    freeze_after: int = 0
    _frozen: np.ndarray | None = field(default=None, repr=False)
    _estimate: np.ndarray | None = field(default=None, repr=False)

    uses_estimator = True

    def reset(self, n):
        self._frozen = None
        self._estimate = None

    def act(self, obs, env, t):
        if self.freeze_after and self._frozen is not None:
            z = self._frozen
        else:
            z = adapt_estimate(self.estimator, env.adaptation_window())
            if self.freeze_after and t + 1 >= self.freeze_after:
                self._frozen = z
        self._estimate = z
        action, _ = policy_act(self.bundle, obs, z, "mean")
        return action

    def current_estimate(self):
        return self._estimate


@dataclass
class DRController(Controller):
    """Domain-randomization baseline: observation only, no embedding."""

    bundle: PolicyBundle

    def act(self, obs, env, t):
        action, _ = policy_act(self.bundle, obs, None, "mean")
        return action


@dataclass
class PeriodicController(Controller):
    """Open-loop replay of a recorded expert episode, with wraparound."""

    sequence: np.ndarray  # (L, 16) targets

    def act(self, obs, env, t):
        row = self.sequence[t % len(self.sequence)]
        return np.tile(row, (env.n, 1))


VARIANT_TAGS = ("expert", "ours", "dr", "sysid", "noadapt", "periodic")


@dataclass
class VariantSpec:
    """Evaluation wiring for one named variant."""

    tag: str
    bundle: PolicyBundle | None = None
    estimator: ConvStack | None = None
    sequence: np.ndarray | None = None
    history_len: int | None = None  # override for ablation estimators

    def __post_init__(self):
        if self.tag not in VARIANT_TAGS:
            raise ConfigError(f"unknown variant {self.tag!r}")
        needs_bundle = self.tag != "periodic"
        if needs_bundle and self.bundle is None:
            raise ConfigError(f"variant {self.tag!r} needs a policy bundle")
        if self.tag in ("ours", "sysid", "noadapt"):
            if self.estimator is None:
                raise ConfigError(f"variant {self.tag!r} needs an estimator")
        if self.tag == "periodic" and self.sequence is None:
            raise ConfigError("periodic variant needs a recorded action sequence")
        if self.tag == "sysid" and self.bundle is not None and self.bundle.kind != "sysid":
            raise ConfigError("sysid variant needs a sysid bundle")

    def make_controller(self, freeze_window: int | None = None) -> Controller:
        if self.tag == "expert":
            return ExpertController(self.bundle)
        if self.tag in ("ours", "sysid"):
            return AdaptiveController(self.bundle, self.estimator)
        if self.tag == "noadapt":
            window = freeze_window or self.estimator.history_len
            return AdaptiveController(self.bundle, self.estimator, freeze_after=window)
        if self.tag == "dr":
            return DRController(self.bundle)
        return PeriodicController(self.sequence)

    @property
    def window_len(self) -> int | None:
        if self.estimator is not None:
            return self.estimator.history_len
        return self.history_len
