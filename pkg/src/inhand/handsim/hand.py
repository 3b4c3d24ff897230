"""Planar forward kinematics and Jacobians for the four-finger hand.

Finger k is a serial chain rooted at its base anchor with heading
beta_k + pi (pointing at the workspace center). Joint angles add
counterclockwise, so link i points along
heading + q_0 + ... + q_i.
"""

from __future__ import annotations

import numpy as np

from .params import HandModel


def fingertip_fk(model: HandModel, q: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """q: (N, 16) -> tips (N, 4, 2), jacobians (N, 4, 2, 4).

    Column j of finger k's Jacobian is the derivative of that fingertip
    with respect to the finger's own joint j; other fingers' joints
    never move it.
    """
    q = np.asarray(q, dtype=np.float64)
    n = q.shape[0]
    qf = q.reshape(n, model.fingers, model.joints_per_finger)
    lengths = np.asarray(model.link_lengths)

    angles = model.headings[None, :, None] + np.cumsum(qf, axis=2)  # (N, 4, 4)
    seg_x = lengths * np.cos(angles)
    seg_y = lengths * np.sin(angles)

    anchors = model.base_anchors  # (4, 2)
    tips = np.empty((n, model.fingers, 2))
    tips[:, :, 0] = anchors[None, :, 0] + seg_x.sum(axis=2)
    tips[:, :, 1] = anchors[None, :, 1] + seg_y.sum(axis=2)

    # d tip / d q_j = sum over links i >= j of L_i * (-sin, cos)(angle_i)
    rev = slice(None, None, -1)
    suffix_x = np.cumsum(seg_y[:, :, rev], axis=2)[:, :, rev]  # holds sum L sin
    suffix_y = np.cumsum(seg_x[:, :, rev], axis=2)[:, :, rev]  # holds sum L cos
    jac = np.empty((n, model.fingers, 2, model.joints_per_finger))
    jac[:, :, 0, :] = -suffix_x
    jac[:, :, 1, :] = suffix_y
    return tips, jac


def fingertip_velocities(jac: np.ndarray, qd: np.ndarray) -> np.ndarray:
    """jac: (N, 4, 2, 4), qd: (N, 16) -> tip velocities (N, 4, 2)."""
    n = qd.shape[0]
    qdf = qd.reshape(n, jac.shape[1], jac.shape[3])
    return np.einsum("nkcj,nkj->nkc", jac, qdf)


def joint_torques_from_tip_forces(jac: np.ndarray, forces: np.ndarray) -> np.ndarray:
    """Jacobian-transpose map: tip forces (N, 4, 2) -> joint torques (N, 16)."""
    n = forces.shape[0]
    tau = np.einsum("nkcj,nkc->nkj", jac, forces)
    return tau.reshape(n, -1)
