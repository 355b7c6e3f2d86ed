"""Scalar quaternion / rotation helpers for the fixed-timestep hot path.

Everything here works on plain floats and tuples so that the per-step
integration loop never touches numpy (array construction overhead dominates
at 3-vector sizes). Quaternions are (w, x, y, z); rotation matrices are
row-major 9-tuples.
"""

from __future__ import annotations

import math

Vec3 = tuple[float, float, float]
Quat = tuple[float, float, float, float]
Mat3 = tuple[float, float, float, float, float, float, float, float, float]

IDENTITY_QUAT: Quat = (1.0, 0.0, 0.0, 0.0)


def quat_normalize(q: Quat) -> Quat:
    w, x, y, z = q
    n = math.sqrt(w * w + x * x + y * y + z * z)
    inv = 1.0 / n
    return (w * inv, x * inv, y * inv, z * inv)


def quat_multiply(a: Quat, b: Quat) -> Quat:
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return (
        aw * bw - ax * bx - ay * by - az * bz,
        aw * bx + ax * bw + ay * bz - az * by,
        aw * by - ax * bz + ay * bw + az * bx,
        aw * bz + ax * by - ay * bx + az * bw,
    )


def quat_from_yaw(yaw: float) -> Quat:
    h = 0.5 * yaw
    return (math.cos(h), 0.0, 0.0, math.sin(h))


def quat_from_axis_angle(axis: Vec3, angle: float) -> Quat:
    ax, ay, az = axis
    n = math.sqrt(ax * ax + ay * ay + az * az)
    if n == 0.0:
        return IDENTITY_QUAT
    h = 0.5 * angle
    s = math.sin(h) / n
    return (math.cos(h), ax * s, ay * s, az * s)


def quat_integrate(q: Quat, omega: Vec3, dt: float) -> Quat:
    """Advance q by body angular velocity omega over dt, renormalized."""
    w, x, y, z = q
    ox, oy, oz = omega
    hw = -0.5 * dt * (x * ox + y * oy + z * oz)
    hx = 0.5 * dt * (w * ox + y * oz - z * oy)
    hy = 0.5 * dt * (w * oy + z * ox - x * oz)
    hz = 0.5 * dt * (w * oz + x * oy - y * ox)
    return quat_normalize((w + hw, x + hx, y + hy, z + hz))


def quat_to_matrix(q: Quat) -> Mat3:
    w, x, y, z = q
    xx, yy, zz = x * x, y * y, z * z
    xy, xz, yz = x * y, x * z, y * z
    wx, wy, wz = w * x, w * y, w * z
    return (
        1.0 - 2.0 * (yy + zz), 2.0 * (xy - wz), 2.0 * (xz + wy),
        2.0 * (xy + wz), 1.0 - 2.0 * (xx + zz), 2.0 * (yz - wx),
        2.0 * (xz - wy), 2.0 * (yz + wx), 1.0 - 2.0 * (xx + yy),
    )


def quat_from_matrix(m: Mat3) -> Quat:
    # Shepperd's method: pick the largest diagonal combination for stability.
    m00, m01, m02, m10, m11, m12, m20, m21, m22 = m
    tr = m00 + m11 + m22
    if tr > 0.0:
        s = math.sqrt(tr + 1.0) * 2.0
        return quat_normalize(((0.25 * s), (m21 - m12) / s, (m02 - m20) / s, (m10 - m01) / s))
    if m00 > m11 and m00 > m22:
        s = math.sqrt(1.0 + m00 - m11 - m22) * 2.0
        return quat_normalize(((m21 - m12) / s, 0.25 * s, (m01 + m10) / s, (m02 + m20) / s))
    if m11 > m22:
        s = math.sqrt(1.0 + m11 - m00 - m22) * 2.0
        return quat_normalize(((m02 - m20) / s, (m01 + m10) / s, 0.25 * s, (m12 + m21) / s))
    s = math.sqrt(1.0 + m22 - m00 - m11) * 2.0
    return quat_normalize(((m10 - m01) / s, (m02 + m20) / s, (m12 + m21) / s, 0.25 * s))


def rotate(m: Mat3, v: Vec3) -> Vec3:
    """R * v (body -> world when m is the body orientation)."""
    x, y, z = v
    return (
        m[0] * x + m[1] * y + m[2] * z,
        m[3] * x + m[4] * y + m[5] * z,
        m[6] * x + m[7] * y + m[8] * z,
    )


def rotate_t(m: Mat3, v: Vec3) -> Vec3:
    """R^T * v (world -> body when m is the body orientation)."""
    x, y, z = v
    return (
        m[0] * x + m[3] * y + m[6] * z,
        m[1] * x + m[4] * y + m[7] * z,
        m[2] * x + m[5] * y + m[8] * z,
    )


def euler_zyx_from_matrix(m: Mat3) -> Vec3:
    """(roll, pitch, yaw) for R = Rz(yaw) @ Ry(pitch) @ Rx(roll)."""
    m00, _, _, m10, _, _, m20, m21, m22 = m[0], m[1], m[2], m[3], m[4], m[5], m[6], m[7], m[8]
    sp = -m20
    sp = max(-1.0, min(1.0, sp))
    pitch = math.asin(sp)
    if abs(sp) < 1.0 - 1e-12:
        roll = math.atan2(m21, m22)
        yaw = math.atan2(m10, m00)
    else:
        # Gimbal lock: yaw is unobservable, fold it into roll.
        roll = math.atan2(-m[5], m[4])
        yaw = 0.0
    return (roll, pitch, yaw)


def quat_from_euler_zyx(roll: float, pitch: float, yaw: float) -> Quat:
    cr, sr = math.cos(0.5 * roll), math.sin(0.5 * roll)
    cp, sp = math.cos(0.5 * pitch), math.sin(0.5 * pitch)
    cy, sy = math.cos(0.5 * yaw), math.sin(0.5 * yaw)
    return (
        cy * cp * cr + sy * sp * sr,
        cy * cp * sr - sy * sp * cr,
        cy * sp * cr + sy * cp * sr,
        sy * cp * cr - cy * sp * sr,
    )


def pose_matrix(quat: Quat, pos: Vec3):
    """Homogeneous 4x4 world-from-body transform as a numpy array."""
    import numpy as np

    m = quat_to_matrix(quat)
    out = np.eye(4)
    out[0, :3] = m[0:3]
    out[1, :3] = m[3:6]
    out[2, :3] = m[6:9]
    out[:3, 3] = pos
    return out


def invert_rigid(t):
    """Invert a rigid 4x4 transform (numpy in, numpy out)."""
    import numpy as np

    r = t[:3, :3]
    out = np.eye(4)
    out[:3, :3] = r.T
    out[:3, 3] = -r.T @ t[:3, 3]
    return out
