import numpy as np
import pytest

from inhand.handsim import (
    HandModel,
    OBJECT_BASE_RADIUS,
    SimConstants,
    contact_forces,
    fingertip_fk,
    fingertip_velocities,
    nominal_params,
)


def _call(q, obj_pos, obj_yaw, obj_linvel, obj_angvel, params, qd=None, consts=None):
    model = HandModel()
    consts = consts or SimConstants()
    qd = np.zeros_like(q) if qd is None else qd
    tips, jac = fingertip_fk(model, q)
    tip_vel = fingertip_velocities(jac, qd)
    res = contact_forces(
        tips, tip_vel, jac, obj_pos, obj_yaw, obj_linvel, obj_angvel, params, consts
    )
    return res, tips, jac, tip_vel


def test_no_penetration_no_forces():
    params = nominal_params(1, scale=0.70)
    # straight fingers: tips at radius 0.03 w.r.t. base anchors, object far away
    res, *_ = _call(
        np.zeros((1, 16)),
        np.array([[0.5, 0.5]]),
        np.zeros(1),
        np.zeros((1, 2)),
        np.zeros(1),
        params,
    )
    assert not res.active.any()
    assert np.all(res.force == 0)
    assert np.all(res.reaction == 0)
    assert np.all(res.object_torque == 0)


def test_static_penalty_force_value():
    # single static contact at 1 mm penetration with k_n = 500 N/m -> 0.5 N;
    # mass chosen heavy enough that the stability clamp stays inactive
    model = HandModel()
    params = nominal_params(1, scale=0.78)
    params.mass[:] = 0.13
    radius = OBJECT_BASE_RADIUS * 0.78
    # object beyond finger 0's straight tip so only that tip penetrates, 1 mm
    tip_x = model.base_radius - sum(model.link_lengths)  # -0.03
    obj_pos = np.array([[tip_x - (radius - 0.001), 0.0]])
    res, tips, _, _ = _call(
        np.zeros((1, 16)), obj_pos, np.zeros(1), np.zeros((1, 2)), np.zeros(1), params
    )
    assert res.active[0, 0] and res.active.sum() == 1
    assert res.penetration[0, 0] == pytest.approx(0.001, rel=1e-9)
    assert res.normal_force[0, 0] == pytest.approx(0.5, rel=1e-9)
    assert abs(res.tangent_force[0, 0]) <= params.friction[0] * 0.5 + 1e-9
    # static: no slip, no friction at all
    assert res.tangent_force[0, 0] == pytest.approx(0.0, abs=1e-12)


def test_friction_cone_on_random_states():
    rng = np.random.default_rng(0)
    n = 512
    params = nominal_params(n)
    params.mass[:] = rng.uniform(0.01, 0.30, n)
    params.friction[:] = rng.uniform(0.2, 3.5, n)
    params.scale[:] = rng.uniform(0.66, 0.90, n)
    q = rng.uniform(-1.5, 1.5, size=(n, 16))
    qd = rng.normal(scale=2.0, size=(n, 16))
    obj_pos = rng.normal(scale=0.01, size=(n, 2))
    res, *_ = _call(
        q,
        obj_pos,
        rng.uniform(-3, 3, n),
        rng.normal(scale=0.05, size=(n, 2)),
        rng.normal(scale=2.0, size=(n,)),
        params,
        qd=qd,
    )
    cone = params.friction[:, None] * res.normal_force + 1e-9
    assert np.all(np.abs(res.tangent_force) <= cone)
    assert np.all(res.penetration[res.active] >= 0)
    assert np.all(res.normal_force >= 0)


def test_jacobian_power_balance():
    # reaction power on the joints equals minus contact power at the tips
    rng = np.random.default_rng(1)
    n = 256
    params = nominal_params(n)
    params.scale[:] = rng.uniform(0.66, 0.90, n)
    q = rng.uniform(-1.5, 1.5, size=(n, 16))
    qd = rng.normal(scale=1.0, size=(n, 16))
    res, tips, jac, tip_vel = _call(
        q,
        rng.normal(scale=0.01, size=(n, 2)),
        rng.uniform(-3, 3, n),
        rng.normal(scale=0.05, size=(n, 2)),
        rng.normal(scale=1.0, size=(n,)),
        params,
        qd=qd,
    )
    joint_power = (res.reaction * qd).sum(axis=1)
    tip_power = np.einsum("nkc,nkc->n", res.force, tip_vel)
    scale = np.maximum(np.abs(joint_power), np.abs(tip_power))
    mask = scale > 1e-12
    rel = np.abs(joint_power + tip_power)[mask] / scale[mask]
    assert rel.max() < 1e-6


def test_light_object_forces_are_clamped_but_bounded():
    # the stability clamp only ever shrinks forces; cone still holds
    params = nominal_params(1, scale=0.78)
    params.mass[:] = 0.01
    model = HandModel()
    radius = OBJECT_BASE_RADIUS * 0.78
    tip_x = model.base_radius - sum(model.link_lengths)
    obj_pos = np.array([[tip_x - (radius - 0.001), 0.0]])
    res, *_ = _call(
        np.zeros((1, 16)), obj_pos, np.zeros(1), np.zeros((1, 2)), np.zeros(1), params
    )
    consts = SimConstants()
    h = consts.dt
    k_clamped = consts.stiffness_safety * 0.01 / (h * h)
    assert k_clamped < consts.contact_stiffness
    assert res.normal_force[0, 0] == pytest.approx(k_clamped * 0.001, rel=1e-9)
    assert res.normal_force[0, 0] < 0.5  # below the unclamped value
