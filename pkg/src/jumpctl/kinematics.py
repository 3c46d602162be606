"""Leg kinematics for a three-joint (abduction, hip, knee) leg.

Sign convention, in the hip frame (x forward, y left, z up):

* the hip and knee rotate about the leg's local y axis; at zero angles the
  leg points straight down, positive hip angle swings the foot backward;
* the knee angle is measured relative to the thigh, and the knee-backward
  branch uses negative knee angles;
* the abduction joint rotates the whole leg plane about the x axis, which is
  offset sideways by ``abduction_length`` (outward for each side).

In the leg plane the foot sits at::

    px = -thigh * sin(q1) - calf * sin(q1 + q2)
    pz = -thigh * cos(q1) - calf * cos(q1 + q2)

and the base-frame foot position is ``hip + Rx(q0) @ (px, side * l_abd, pz)``.
"""

from __future__ import annotations

import math

import numpy as np

from .model import SIDE_SIGN, RobotModel


class Unreachable(ValueError):
    """Target foot position lies outside the leg workspace."""

    def __init__(self, target, reason: str = "outside workspace"):
        super().__init__(f"target {np.asarray(target).tolist()} unreachable: {reason}")
        self.target = np.asarray(target, dtype=float)


def _rot_x(angle: float) -> np.ndarray:
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]])


def _leg_plane(model: RobotModel, leg: int, q1: float, q2: float) -> np.ndarray:
    t, c = model.thigh_length, model.calf_length
    return np.array(
        [
            -t * math.sin(q1) - c * math.sin(q1 + q2),
            SIDE_SIGN[leg] * model.abduction_length,
            -t * math.cos(q1) - c * math.cos(q1 + q2),
        ]
    )


def forward_kinematics(model: RobotModel, leg: int, joint_angles) -> np.ndarray:
    """Foot position in the base frame."""
    q0, q1, q2 = (float(a) for a in joint_angles)
    return model.hip_offsets[leg] + _rot_x(q0) @ _leg_plane(model, leg, q1, q2)


def inverse_kinematics(model: RobotModel, leg: int, target, tol: float = 1e-12) -> np.ndarray:
    """Joint angles placing the foot at ``target`` (base frame).

    Raises :class:`Unreachable` when the target cannot be reached. Distances
    within ``tol`` of the workspace boundary are snapped onto it.
    """
    target = np.asarray(target, dtype=float)
    x, y, z = target - model.hip_offsets[leg]
    t, c = model.thigh_length, model.calf_length
    offset = SIDE_SIGN[leg] * model.abduction_length

    # abduction: the leg plane must keep the foot below the abduction axis
    yz_sq = y * y + z * z
    pz_sq = yz_sq - offset * offset
    if pz_sq < -tol:
        raise Unreachable(target, "inside abduction offset")
    pz = -math.sqrt(max(pz_sq, 0.0))
    q0 = math.atan2(z, y) - math.atan2(pz, offset)
    q0 = (q0 + math.pi) % (2.0 * math.pi) - math.pi

    r_sq = x * x + pz * pz
    r = math.sqrt(r_sq)
    if r > t + c + tol or r < abs(t - c) - tol:
        raise Unreachable(target, f"sagittal reach {r:.6f} outside [{abs(t - c):.6f}, {t + c:.6f}]")
    cos_knee = (r_sq - t * t - c * c) / (2.0 * t * c)
    cos_knee = min(1.0, max(-1.0, cos_knee))
    q2 = math.acos(cos_knee)
    if model.knee_backward:
        q2 = -q2
    q1 = math.atan2(-x, -pz) - math.atan2(c * math.sin(q2), t + c * math.cos(q2))
    return np.array([q0, q1, q2])


def foot_jacobian(model: RobotModel, leg: int, joint_angles) -> np.ndarray:
    """3x3 Jacobian of the base-frame foot position w.r.t. the joint angles."""
    q0, q1, q2 = (float(a) for a in joint_angles)
    t, c = model.thigh_length, model.calf_length
    s0, c0 = math.sin(q0), math.cos(q0)
    rx = _rot_x(q0)
    d_rx = np.array([[0.0, 0.0, 0.0], [0.0, -s0, -c0], [0.0, c0, -s0]])
    s1, c1 = math.sin(q1), math.cos(q1)
    s12, c12 = math.sin(q1 + q2), math.cos(q1 + q2)

    jac = np.empty((3, 3))
    jac[:, 0] = d_rx @ _leg_plane(model, leg, q1, q2)
    jac[:, 1] = rx @ np.array([-t * c1 - c * c12, 0.0, t * s1 + c * s12])
    jac[:, 2] = rx @ np.array([-c * c12, 0.0, c * s12])
    return jac


def torque_from_grf(model: RobotModel, leg: int, joint_angles, grf) -> tuple[np.ndarray, bool]:
    """Joint torques ``J^T f`` for a stance leg, clamped to the torque limit.

    ``grf`` is the ground reaction force in the base frame, i.e. the force the
    leg transmits onto the base; the foot itself pushes on the ground with
    ``-grf``. Returns ``(torques, saturated)``.
    """
    tau = foot_jacobian(model, leg, joint_angles).T @ np.asarray(grf, dtype=float)
    lim = model.torque_limit
    saturated = bool(np.any(np.abs(tau) > lim))
    return np.clip(tau, -lim, lim), saturated


def clamp_to_workspace(model: RobotModel, leg: int, target, margin: float = 1e-3) -> tuple[np.ndarray, bool]:
    """Pull a base-frame foot target back inside the reachable workspace.

    The sagittal reach is limited to ``[|thigh - calf| + margin, thigh + calf - margin]``
    and the foot is kept below the abduction axis. Returns ``(target, clamped)``.
    """
    target = np.asarray(target, dtype=float)
    hip = model.hip_offsets[leg]
    x, y, z = target - hip
    t, c = model.thigh_length, model.calf_length
    offset = SIDE_SIGN[leg] * model.abduction_length
    clamped = False

    yz = math.hypot(y, z)
    min_yz = abs(offset) + margin
    if yz < min_yz or z > 0.0:
        # keep the foot below the hip, at least ``margin`` under the abduction axis
        angle = math.atan2(z, y) if z <= 0.0 else -math.pi / 2
        yz = max(yz, min_yz)
        y, z = yz * math.cos(angle), yz * math.sin(angle)
        clamped = True
    pz = -math.sqrt(max(yz * yz - offset * offset, 0.0))
    r = math.hypot(x, pz)
    r_max = t + c - margin
    r_min = abs(t - c) + margin
    if r > r_max or r < r_min:
        scale = (r_max if r > r_max else r_min) / max(r, 1e-12)
        x_new, pz_new = x * scale, pz * scale
        if r < 1e-12:
            x_new, pz_new = 0.0, -r_min
        # rebuild the yz pair at the same abduction angle with the new depth
        q0 = math.atan2(z, y) - math.atan2(pz, offset)
        yz_vec = _rot_x(q0) @ np.array([0.0, offset, pz_new])
        x, y, z = x_new, yz_vec[1], yz_vec[2]
        clamped = True
    return hip + np.array([x, y, z]), clamped
