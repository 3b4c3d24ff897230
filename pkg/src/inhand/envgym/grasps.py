"""Stable-grasp generation and the on-disk grasp cache.

Candidates perturb a canonical curled pose by U(-0.25, 0.25) rad per
joint, settle for half a second with the perturbed pose as the held PD
target, and are accepted when the settled state keeps the object
centered, at least two fingertips in contact, and every fingertip close
to the object. Accepted grasps store the settled joints and object pose.

Cache file layout (little-endian, no padding):

    magic    6 bytes  b"GRSPC1"
    version  u16      currently 1
    buckets  u32      number of scale buckets B
    B bucket scales   f32 each
    records  u32      total grasp count M
    M records, each:  bucket_id u32, q f32*16, obj_pos f32*2, obj_yaw f32
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..config import OOD_RANGES, TRAIN_RANGES
from ..errors import ConfigError
from ..handsim import (
    HandModel,
    OBJECT_BASE_RADIUS,
    PhysParams,
    SimConstants,
    fingertip_fk,
    init_state,
    nominal_params,
    step_physics,
)
from .. import rngstream as rs

CACHE_MAGIC = b"GRSPC1"
CACHE_VERSION = 1

BUCKET_WIDTH = 0.04
# grasp acceptance: fingertip-to-object-center bound, scaled from the
# full-size 10 cm rule by this hand's reach
TIP_DISTANCE_BOUND = 0.06
SETTLE_SECONDS = 0.5
OFFSET_RANGE = 0.25
GRASP_PRESS = 0.0012  # canonical fingertip penetration


def bucket_scales() -> np.ndarray:
    """Scale buckets covering the union of train and OOD ranges."""
    lo = OOD_RANGES.scale[0]
    hi = OOD_RANGES.scale[1]
    centers = np.arange(lo + BUCKET_WIDTH / 2, hi, BUCKET_WIDTH)
    return np.round(centers, 4)


def bucket_index(scale: np.ndarray) -> np.ndarray:
    scales = bucket_scales()
    return np.argmin(np.abs(np.asarray(scale)[..., None] - scales), axis=-1)


def canonical_grasp(model: HandModel, obj_radius: float, press: float = GRASP_PRESS) -> np.ndarray:
    """Curled 16-joint pose with each fingertip pressed `press` into a
    disk of obj_radius at the origin. Damped least-squares IK on one
    finger, replicated by symmetry."""
    target = np.array([obj_radius - press, 0.0])
    q = np.array([0.0, 0.9, 0.9, 0.6])
    q_nom = q.copy()
    for _ in range(80):
        tips, jac = fingertip_fk(model, np.tile(q, model.fingers)[None])
        p = tips[0, 0]
        J = jac[0, 0]
        err = target - p
        pinv = J.T @ np.linalg.inv(J @ J.T + 1e-6 * np.eye(2))
        dq = pinv @ err + 0.05 * ((np.eye(4) - pinv @ J) @ (q_nom - q))
        q = np.clip(q + dq, model.joint_lower, model.joint_upper)
    residual = np.linalg.norm(fingertip_fk(model, np.tile(q, 4)[None])[0][0, 0] - target)
    if residual > 2e-3:
        raise ConfigError(f"canonical grasp IK failed: residual {residual:.4f} m")
    return np.tile(q, model.fingers)


@dataclass
class GraspCache:
    scales: np.ndarray  # (B,) bucket scales
    bucket_id: np.ndarray  # (M,) int
    q: np.ndarray  # (M, 16)
    obj_pos: np.ndarray  # (M, 2)
    obj_yaw: np.ndarray  # (M,)

    @property
    def size(self) -> int:
        return len(self.bucket_id)

    def bucket_slices(self) -> list[np.ndarray]:
        return [np.where(self.bucket_id == b)[0] for b in range(len(self.scales))]

    def validate(self) -> None:
        counts = np.bincount(self.bucket_id, minlength=len(self.scales))
        if counts.min() < 1:
            empty = int(np.argmin(counts))
            raise ConfigError(f"grasp cache bucket {empty} (scale {self.scales[empty]}) is empty")

    def save(self, path: str | Path) -> None:
        chunks = [CACHE_MAGIC, struct.pack("<HI", CACHE_VERSION, len(self.scales))]
        chunks.append(np.asarray(self.scales, dtype="<f4").tobytes())
        chunks.append(struct.pack("<I", self.size))
        rec = np.empty((self.size, 20), dtype="<f4")
        rec[:, 0] = self.bucket_id
        rec[:, 1:17] = self.q
        rec[:, 17:19] = self.obj_pos
        rec[:, 19] = self.obj_yaw
        chunks.append(rec.tobytes())
        Path(path).write_bytes(b"".join(chunks))

    @classmethod
    def load(cls, path: str | Path) -> "GraspCache":
        data = Path(path).read_bytes()
        if data[:6] != CACHE_MAGIC:
            raise ConfigError(f"{path}: not a grasp cache (bad magic)")
        version, buckets = struct.unpack_from("<HI", data, 6)
        if version != CACHE_VERSION:
            raise ConfigError(f"{path}: unsupported cache version {version}")
        off = 12
        scales = np.frombuffer(data, dtype="<f4", count=buckets, offset=off).astype(np.float64)
        off += 4 * buckets
        (count,) = struct.unpack_from("<I", data, off)
        off += 4
        rec = np.frombuffer(data, dtype="<f4", count=count * 20, offset=off).reshape(count, 20)
        cache = cls(
            scales=scales,
            bucket_id=rec[:, 0].astype(np.int64),
            q=rec[:, 1:17].astype(np.float64),
            obj_pos=rec[:, 17:19].astype(np.float64),
            obj_yaw=rec[:, 19].astype(np.float64),
        )
        cache.validate()
        return cache

    def export_csv(self, path: str | Path) -> None:
        header = (
            "bucket_id,scale," + ",".join(f"q{i}" for i in range(16)) + ",obj_x,obj_y,obj_yaw"
        )
        rows = [header]
        for i in range(self.size):
            b = int(self.bucket_id[i])
            cells = [str(b), f"{self.scales[b]:.4f}"]
            cells += [f"{v:.6f}" for v in self.q[i]]
            cells += [f"{self.obj_pos[i, 0]:.6f}", f"{self.obj_pos[i, 1]:.6f}", f"{self.obj_yaw[i]:.6f}"]
            rows.append(",".join(cells))
        Path(path).write_text("\n".join(rows) + "\n")


def _settle(
    q_start: np.ndarray,
    targets: np.ndarray,
    scale: float,
    model: HandModel,
    consts: SimConstants,
    obj_pos: np.ndarray | None = None,
    obj_yaw: np.ndarray | None = None,
):
    """Hold targets for the settle window with a disk object; returns the
    settled state and per-env tip distances to the object center."""
    n = q_start.shape[0]
    params = nominal_params(n, scale=scale)
    state = init_state(n, model)
    state.q[:] = q_start
    if obj_pos is not None:
        state.obj_pos[:] = obj_pos
    if obj_yaw is not None:
        state.obj_yaw[:] = obj_yaw
    steps = int(round(SETTLE_SECONDS / consts.dt_control))
    for _ in range(steps):
        state, _ = step_physics(state, targets, params, model, consts)
    tips, _ = fingertip_fk(model, state.q)
    tip_dist = np.linalg.norm(tips - state.obj_pos[:, None, :], axis=-1)
    return state, tip_dist


def grasp_predicates(state, tip_dist: np.ndarray, drop_pos: float) -> np.ndarray:
    """(N,) acceptance mask: tips near the object, two or more contacts,
    object still centered."""
    tips_ok = np.all(tip_dist <= TIP_DISTANCE_BOUND, axis=1)
    contacts_ok = state.contact_active.sum(axis=1) >= 2
    centered = np.linalg.norm(state.obj_pos, axis=1) <= drop_pos
    return tips_ok & contacts_ok & centered


def generate_grasps(
    count_per_bucket: int,
    seed: int,
    drop_pos: float = 0.02,
    model: HandModel | None = None,
    consts: SimConstants | None = None,
    batch: int = 512,
    max_candidates_per_bucket: int = 200_000,
) -> GraspCache:
    model = model or HandModel()
    consts = consts or SimConstants()
    scales = bucket_scales()

    all_bucket, all_q, all_pos, all_yaw = [], [], [], []
    for b, scale in enumerate(scales):
        canonical = canonical_grasp(model, OBJECT_BASE_RADIUS * scale)
        kept = 0
        tried = 0
        while kept < count_per_bucket:
            if tried >= max_candidates_per_bucket:
                raise ConfigError(
                    f"bucket {b}: only {kept}/{count_per_bucket} grasps after {tried} candidates"
                )
            ids = tried + np.arange(batch)
            offsets = rs.uniform_range(
                seed, ids, rs.TAG_GRASP, b, -OFFSET_RANGE, OFFSET_RANGE, 16
            )
            q_cand = np.clip(canonical + offsets, model.joint_lower, model.joint_upper)
            state, tip_dist = _settle(q_cand, q_cand, scale, model, consts)
            ok = grasp_predicates(state, tip_dist, drop_pos)
            tried += batch
            if tried >= 10_000 and (kept + ok.sum()) / tried < 0.01:
                raise ConfigError(
                    f"bucket {b}: acceptance rate below 1% ({kept + ok.sum()}/{tried}); "
                    "canonical pose unusable"
                )
            take = np.where(ok)[0][: count_per_bucket - kept]
            all_bucket.append(np.full(len(take), b, dtype=np.int64))
            all_q.append(state.q[take])
            all_pos.append(state.obj_pos[take])
            all_yaw.append(state.obj_yaw[take])
            kept += len(take)

    cache = GraspCache(
        scales=scales,
        bucket_id=np.concatenate(all_bucket),
        q=np.concatenate(all_q),
        obj_pos=np.concatenate(all_pos),
        obj_yaw=np.concatenate(all_yaw),
    )
    cache.validate()
    return cache


def resimulate_fraction(
    cache: GraspCache,
    drop_pos: float = 0.02,
    model: HandModel | None = None,
    consts: SimConstants | None = None,
    batch: int = 512,
) -> float:
    """Fraction of cached grasps that re-satisfy the acceptance
    predicates when settled again from the stored pose."""
    model = model or HandModel()
    consts = consts or SimConstants()
    ok_total = 0
    for b, scale in enumerate(cache.scales):
        idx = np.where(cache.bucket_id == b)[0]
        for lo in range(0, len(idx), batch):
            sel = idx[lo : lo + batch]
            state, tip_dist = _settle(
                cache.q[sel],
                cache.q[sel],
                float(scale),
                model,
                consts,
                obj_pos=cache.obj_pos[sel],
                obj_yaw=cache.obj_yaw[sel],
            )
            ok_total += int(grasp_predicates(state, tip_dist, drop_pos).sum())
    return ok_total / cache.size
