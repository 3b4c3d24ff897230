"""The four learned functions and their packaging.

A bundle holds the property encoder (privileged vector -> embedding),
the Gaussian policy, the critic, and optionally the history estimator.
Three kinds exist:

  extrinsics  encoder compresses the 9-dim privileged vector to 8
  sysid       no encoder; the policy consumes the normalized privileged
              vector directly and the estimator regresses all 9 dims
  dr          no privileged path at all (domain-randomization baseline)
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..envgym import PRIVILEGED_WIDTH
from ..errors import ConfigError, UsageError
from ..numkit import ConvStack, DenseNet, load_arrays, save_arrays

EXTRINSICS_WIDTH = 8
ACTION_WIDTH = 16
# exploration noise on absolute radian targets; -1.0 drowns the reward
# signal in actuation-work noise at desk batch sizes
LOG_STD_INIT = -2.3

ENCODER_HIDDEN = [256, 128]
POLICY_HIDDEN = [512, 256, 128]
STEP_ENCODER_WIDTHS = [32, 32]

# temporal conv specs per supported history length; shorter histories
# shrink the later kernels so the receptive field still fits
CONV_SPECS: dict[int, list[tuple[int, int, int, int]]] = {
    30: [(32, 32, 9, 2), (32, 32, 5, 1), (32, 32, 5, 1)],
    20: [(32, 32, 6, 2), (32, 32, 5, 1), (32, 32, 3, 1)],
    10: [(32, 32, 4, 2), (32, 32, 3, 1), (32, 32, 2, 1)],
}

KINDS = ("extrinsics", "sysid", "dr")


def conv_specs_for(history_len: int) -> list[tuple[int, int, int, int]]:
    if history_len not in CONV_SPECS:
        raise ConfigError(
            f"no conv specs for history length {history_len}; supported: {sorted(CONV_SPECS)}"
        )
    return CONV_SPECS[history_len]


@dataclass
class PolicyBundle:
    kind: str
    obs_width: int
    history_len: int
    policy: DenseNet
    critic: DenseNet
    log_std: np.ndarray  # (16,)
    encoder: DenseNet | None = None
    adapt: ConvStack | None = None

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigError(f"unknown bundle kind {self.kind!r}")
        expect = self.obs_width + self.extrinsics_width
        if self.policy.in_width != expect or self.critic.in_width != expect:
            raise ConfigError(
                f"policy/critic input width must be {expect}, got "
                f"{self.policy.in_width}/{self.critic.in_width}"
            )
        if self.policy.out_width != ACTION_WIDTH or self.critic.out_width != 1:
            raise ConfigError("policy must emit 16 actions and critic a scalar")
        if self.kind == "extrinsics":
            if self.encoder is None or self.encoder.in_width != PRIVILEGED_WIDTH:
                raise ConfigError("extrinsics bundle needs a 9-input encoder")
            if self.encoder.out_width != EXTRINSICS_WIDTH:
                raise ConfigError("encoder must emit the 8-dim embedding")
        if self.adapt is not None and self.adapt.out_width != self.extrinsics_width:
            raise ConfigError("estimator output width must match the embedding")

    @property
    def extrinsics_width(self) -> int:
        if self.kind == "extrinsics":
            return EXTRINSICS_WIDTH
        if self.kind == "sysid":
            return PRIVILEGED_WIDTH
        return 0

    # ---- parameter groups ----------------------------------------------------

    def actor_critic_parameters(self) -> list[np.ndarray]:
        params = self.policy.parameters() + self.critic.parameters()
        if self.encoder is not None:
            params += self.encoder.parameters()
        return params + [self.log_std]

    def frozen_hash(self) -> str:
        """Hash of the policy + encoder parameters (the stage-2 freeze
        contract covers exactly these)."""
        digest = hashlib.sha256()
        for arr in self.policy.parameters():
            digest.update(np.ascontiguousarray(arr, dtype=np.float32).tobytes())
        if self.encoder is not None:
            for arr in self.encoder.parameters():
                digest.update(np.ascontiguousarray(arr, dtype=np.float32).tobytes())
        digest.update(np.ascontiguousarray(self.log_std, dtype=np.float32).tobytes())
        return digest.hexdigest()

    # ---- persistence -----------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Writes <path>.nkpt (checkpoint) and <path>.json (manifest)."""
        path = Path(path)
        entries = self.policy.to_entries("policy") + self.critic.to_entries("critic")
        entries.append(("log_std", self.log_std, "none"))
        roles = {"policy": "policy", "critic": "critic", "log_std": "log_std"}
        if self.encoder is not None:
            entries += self.encoder.to_entries("encoder")
            roles["encoder"] = "encoder"
        if self.adapt is not None:
            entries += self.adapt.to_entries("adapt")
            roles["adapt"] = "adapt"
        save_arrays(path.with_suffix(".nkpt"), entries)
        manifest = {
            "kind": self.kind,
            "obs_width": self.obs_width,
            "history_len": self.history_len,
            "checkpoint": path.with_suffix(".nkpt").name,
            "roles": roles,
            "format": "NKCKP1",
        }
        path.with_suffix(".json").write_text(json.dumps(manifest, indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "PolicyBundle":
        path = Path(path)
        manifest = json.loads(path.with_suffix(".json").read_text())
        entries = load_arrays(path.parent / manifest["checkpoint"])
        log_std, _ = entries["log_std"]
        bundle = cls(
            kind=manifest["kind"],
            obs_width=int(manifest["obs_width"]),
            history_len=int(manifest["history_len"]),
            policy=DenseNet.from_entries(entries, "policy"),
            critic=DenseNet.from_entries(entries, "critic"),
            log_std=log_std.astype(np.float32),
            encoder=(
                DenseNet.from_entries(entries, "encoder") if "encoder" in manifest["roles"] else None
            ),
            adapt=(
                ConvStack.from_entries(entries, "adapt") if "adapt" in manifest["roles"] else None
            ),
        )
        return bundle


def make_adaptation_net(
    history_len: int, out_width: int, rng: np.random.Generator
) -> ConvStack:
    return ConvStack.create(
        step_in=32,
        step_widths=STEP_ENCODER_WIDTHS,
        conv_specs=conv_specs_for(history_len),
        out_width=out_width,
        history_len=history_len,
        rng=rng,
    )


def make_bundle(
    kind: str,
    rng: np.random.Generator,
    obs_width: int = 96,
    history_len: int = 30,
    with_adaptation: bool = False,
) -> PolicyBundle:
    if kind not in KINDS:
        raise ConfigError(f"unknown bundle kind {kind!r}")
    z_width = {"extrinsics": EXTRINSICS_WIDTH, "sysid": PRIVILEGED_WIDTH, "dr": 0}[kind]
    in_width = obs_width + z_width

    encoder = None
    if kind == "extrinsics":
        encoder = DenseNet.create(
            [PRIVILEGED_WIDTH] + ENCODER_HIDDEN + [EXTRINSICS_WIDTH],
            ["relu", "relu", "identity"],
            rng,
        )
    policy = DenseNet.create(
        [in_width] + POLICY_HIDDEN + [ACTION_WIDTH], ["elu", "elu", "elu", "identity"], rng
    )
    # small head so the initial action mean sits at the bias (set by the
    # trainer to a canonical grasp) instead of radian-scale swings
    policy.layers[-1].weight *= 0.01
    critic = DenseNet.create(
        [in_width] + POLICY_HIDDEN + [1], ["elu", "elu", "elu", "identity"], rng
    )
    # zero final layer: value starts at 0 everywhere for stable early updates
    critic.layers[-1].weight[:] = 0.0
    critic.layers[-1].bias[:] = 0.0

    adapt = None
    if with_adaptation and kind != "dr":
        adapt = make_adaptation_net(history_len, z_width, rng)

    return PolicyBundle(
        kind=kind,
        obs_width=obs_width,
        history_len=history_len,
        policy=policy,
        critic=critic,
        log_std=np.full(ACTION_WIDTH, LOG_STD_INIT, dtype=np.float32),
        encoder=encoder,
        adapt=adapt,
    )


# ---- functional ops -------------------------------------------------------------


def encode_extrinsics(bundle: PolicyBundle, e: np.ndarray) -> np.ndarray:
    """z = encoder(e); for sysid bundles the encoder is the identity."""
    if bundle.kind == "dr":
        raise UsageError("dr bundles have no privileged pathway")
    if bundle.kind == "sysid":
        return np.asarray(e, dtype=np.float32)
    return bundle.encoder.apply(np.asarray(e, dtype=np.float32))


def _policy_input(bundle: PolicyBundle, obs: np.ndarray, z: np.ndarray | None) -> np.ndarray:
    obs = np.asarray(obs, dtype=np.float32)
    if bundle.extrinsics_width == 0:
        if z is not None:
            raise UsageError("dr bundle given an embedding")
        return obs
    if z is None:
        raise UsageError(f"{bundle.kind} bundle needs an embedding input")
    return np.concatenate([obs, np.asarray(z, dtype=np.float32)], axis=-1)


def policy_act(
    bundle: PolicyBundle,
    obs: np.ndarray,
    z: np.ndarray | None,
    mode: str = "mean",
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Returns (action, log_prob). mode='mean' is deterministic;
    mode='sample' adds diagonal Gaussian noise exp(log_std)."""
    x = _policy_input(bundle, obs, z)
    mean = bundle.policy.apply(x)
    std = np.exp(bundle.log_std)
    if mode == "mean":
        action = mean
    elif mode == "sample":
        if rng is None:
            raise UsageError("sample mode needs an rng")
        action = mean + std * rng.standard_normal(size=mean.shape).astype(np.float32)
    else:
        raise UsageError(f"unknown act mode {mode!r}")
    logp = gaussian_log_prob(action, mean, bundle.log_std)
    return action, logp


def gaussian_log_prob(action, mean, log_std) -> np.ndarray:
    z = (action - mean) / np.exp(log_std)
    return (-0.5 * z**2 - log_std - 0.5 * np.log(2.0 * np.pi)).sum(axis=-1)


def critic_value(bundle: PolicyBundle, obs: np.ndarray, z: np.ndarray | None) -> np.ndarray:
    x = _policy_input(bundle, obs, z)
    return bundle.critic.apply(x)[..., 0]


def adapt_estimate(bundle_or_net, window: np.ndarray) -> np.ndarray:
    """z_hat from the (T, 32) or (N, T, 32) history window."""
    net = bundle_or_net.adapt if isinstance(bundle_or_net, PolicyBundle) else bundle_or_net
    if net is None:
        raise UsageError("bundle has no adaptation module")
    return net.apply(np.asarray(window, dtype=np.float32))
