import numpy as np
import pytest

from inhand.handsim import HandModel, fingertip_fk, fingertip_velocities


@pytest.fixture
def model():
    return HandModel()


def test_straight_chain_tip(model):
    tips, _ = fingertip_fk(model, np.zeros((1, 16)))
    reach = sum(model.link_lengths)
    expected = model.base_anchors + reach * np.stack(
        [np.cos(model.headings), np.sin(model.headings)], axis=-1
    )
    assert np.allclose(tips[0], expected, atol=1e-12)
    # finger 0: base at (R, 0), heading -x, so tip at R - sum(L)
    assert tips[0, 0] == pytest.approx([model.base_radius - reach, 0.0], abs=1e-12)


def test_jacobian_matches_finite_differences(model):
    rng = np.random.default_rng(0)
    q = rng.uniform(-1.2, 1.2, size=(4, 16))
    _, jac = fingertip_fk(model, q)
    eps = 1e-6
    worst = 0.0
    for j in range(16):
        qp, qm = q.copy(), q.copy()
        qp[:, j] += eps
        qm[:, j] -= eps
        tp, _ = fingertip_fk(model, qp)
        tm, _ = fingertip_fk(model, qm)
        numeric = (tp - tm) / (2 * eps)
        finger, col = divmod(j, 4)
        rel = np.abs(numeric[:, finger] - jac[:, finger, :, col])
        rel = rel / np.maximum(np.abs(jac[:, finger, :, col]), 1e-3)
        worst = max(worst, rel.max())
        other = [f for f in range(4) if f != finger]
        assert np.abs(numeric[:, other]).max() < 1e-9
    assert worst < 1e-6


def test_finger_relabel_is_quarter_turn(model):
    # moving finger k's joint values to finger k+1 rotates its tip by 90 deg
    rng = np.random.default_rng(1)
    q = rng.uniform(-1.0, 1.0, size=(1, 16))
    rolled = np.roll(q.reshape(1, 4, 4), 1, axis=1).reshape(1, 16)
    tips, _ = fingertip_fk(model, q)
    tips_rolled, _ = fingertip_fk(model, rolled)
    rotated = np.stack([-tips[0, :, 1], tips[0, :, 0]], axis=-1)  # +90 deg
    assert np.allclose(tips_rolled[0], np.roll(rotated, 1, axis=0), atol=1e-12)


def test_tip_velocities_consistent_with_fk(model):
    rng = np.random.default_rng(2)
    q = rng.uniform(-1.0, 1.0, size=(2, 16))
    qd = rng.normal(size=(2, 16))
    _, jac = fingertip_fk(model, q)
    vel = fingertip_velocities(jac, qd)
    dt = 1e-7
    tips0, _ = fingertip_fk(model, q)
    tips1, _ = fingertip_fk(model, q + dt * qd)
    assert np.allclose(vel, (tips1 - tips0) / dt, atol=1e-5)
