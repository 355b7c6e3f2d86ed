"""Per-subsystem force laws: suspension, anti-roll, steering, brakes, tires, aero."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import GRAVITY, GEAR_REVERSE


@dataclass
class SuspensionResult:
    force: float          # along body up, >= 0; applied at the wheel's force_height
    wheel_z: float        # hub height, world frame
    wheel_zdot: float
    compression: float    # spring compression, m (<= 0 means airborne)
    grounded: bool
    travel: float         # normalized travel for the anti-roll bar
    contact_z_body: float # body-frame z of the contact point (valid when grounded)


def suspension_step(
    wheel_z: float,
    wheel_zdot: float,
    prev_compression: float,
    mount_z_world: float,
    ground_z: float,
    rest_length: float,
    spring_k: float,
    damper_b: float,
    wheel_radius: float,
    static_displacement: float,
    mount_to_body_z: float,
    dt: float,
) -> SuspensionResult:
    """One vertical update for a single wheel.

    The wheel rides a point contact directly below its mount. When the ground
    is within the suspension travel the hub is bound to it kinematically and
    the spring/damper force (compression only) pushes the body up. When
    airborne the unsprung mass free-falls until the strut reaches full
    extension; no force reaches the body.
    """
    hub_on_ground = ground_z + wheel_radius
    full_extension = mount_z_world - rest_length
    if hub_on_ground >= full_extension:
        new_z = hub_on_ground
        new_zdot = (new_z - wheel_z) / dt
        compression = mount_z_world - hub_on_ground
        compression = rest_length - compression
        comp_rate = (compression - prev_compression) / dt
        force = spring_k * compression + damper_b * comp_rate
        if force < 0.0:
            force = 0.0
        contact_z_body = (ground_z - mount_z_world) + mount_to_body_z
        travel = (-contact_z_body - wheel_radius) / static_displacement
        return SuspensionResult(force, new_z, new_zdot, compression, True, travel, contact_z_body)
    # airborne: integrate free fall, clamp at full extension
    new_zdot = wheel_zdot - GRAVITY * dt
    new_z = wheel_z + new_zdot * dt
    if new_z < full_extension:
        new_z = full_extension
        new_zdot = 0.0
    return SuspensionResult(0.0, new_z, new_zdot, 0.0, False, 0.0, 0.0)


def antiroll_forces(
    travel_left: float,
    travel_right: float,
    stiffness: float,
    left_grounded: bool,
    right_grounded: bool,
) -> tuple[float, float]:
    """Anti-roll bar forces on the (left, right) wheels of one axle.

    Antisymmetric in the travel difference; a wheel only receives force while
    it is grounded.
    """
    left = stiffness * (travel_right - travel_left) if left_grounded else 0.0
    right = stiffness * (travel_left - travel_right) if right_grounded else 0.0
    return left, right


def steering_step(
    steer_cmd: float,
    current_angle: float,
    speed: float,
    limit: float,
    sensitivity: float,
    speed_factor: float,
    top_speed: float,
    wheelbase: float,
    track: float,
    dt: float,
) -> tuple[float, float, float]:
    """Slew the steering angle toward the command and resolve per-wheel angles.

    Returns (angle, left_angle, right_angle) under Ackermann geometry.
    """
    target = max(-1.0, min(1.0, steer_cmd)) * limit
    rate = sensitivity + speed_factor * abs(speed) / top_speed
    max_step = rate * dt
    delta = target - current_angle
    if delta > max_step:
        delta = max_step
    elif delta < -max_step:
        delta = -max_step
    angle = current_angle + delta
    angle = max(-limit, min(limit, angle))
    left, right = ackermann_angles(angle, wheelbase, track)
    return angle, left, right


def ackermann_angles(angle: float, wheelbase: float, track: float) -> tuple[float, float]:
    t = math.tan(angle)
    two_l = 2.0 * wheelbase
    num = two_l * t
    den_l = two_l + track * t
    den_r = two_l - track * t
    left = math.atan(num / den_l) if den_l != 0.0 else math.copysign(math.pi / 2.0, num)
    right = math.atan(num / den_r) if den_r != 0.0 else math.copysign(math.pi / 2.0, num)
    return left, right


def brake_torque(
    corner_mass: float,
    speed: float,
    disk_radius: float,
    braking_distance: float,
) -> float:
    """Brake torque magnitude for one wheel at the current speed."""
    return corner_mass * speed * speed / (2.0 * braking_distance) * disk_radius


def wheel_brake_torques(
    corner_masses: tuple[float, float, float, float],
    speed: float,
    disk_radius: float,
    braking_distance: float,
    brake_type: str,
) -> tuple[float, float, float, float]:
    """Per-wheel brake torques in (FL, FR, RL, RR) order.

    Combi brakes act on all wheels; the handbrake acts on the rear axle only.
    """
    torques = [brake_torque(m, speed, disk_radius, braking_distance) for m in corner_masses]
    if brake_type == "handbrake":
        torques[0] = 0.0
        torques[1] = 0.0
    elif brake_type != "combi":
        raise ValueError(f"unknown brake type {brake_type!r}")
    return tuple(torques)


def tire_forces(
    wheel_omega: float,
    v_x: float,
    v_y: float,
    wheel_radius: float,
    spline,
    normal_load: float,
    eps_v: float = 0.1,
    lon_force_cap: float = math.inf,
) -> tuple[float, float, float, float]:
    """Longitudinal/lateral tire forces and slips in the wheel frame.

    Slip denominators are guarded by eps_v and the forces taper linearly
    below it so contact is quiet at standstill. Forces oppose the slip.
    lon_force_cap bounds the longitudinal force to the impulse that would
    zero the contact's relative velocity within one step (keeps the stiff
    wheel-slip coupling stable under explicit integration).
    """
    denom = abs(v_x)
    if denom < eps_v:
        denom = eps_v
    rel = wheel_radius * wheel_omega - v_x
    s_x = rel / denom
    s_y = v_y / denom
    taper_x = min(1.0, max(abs(v_x), abs(wheel_radius * wheel_omega)) / eps_v)
    taper_y = min(1.0, max(abs(v_x), abs(v_y)) / eps_v)
    f_x = math.copysign(spline(abs(s_x)), rel) * normal_load * taper_x if rel != 0.0 else 0.0
    if abs(f_x) > lon_force_cap:
        f_x = math.copysign(lon_force_cap, f_x)
    f_y = -math.copysign(spline(abs(s_y)), v_y) * normal_load * taper_y if v_y != 0.0 else 0.0
    return f_x, f_y, s_x, s_y


# Aero case identifiers, in evaluation order.
AERO_TOP_SPEED = "top_speed"
AERO_COAST = "coast"
AERO_REVERSE = "reverse_overspeed"
AERO_NOMINAL = "nominal"


def aero_drag_case(
    speed: float,
    tau_out: float,
    gear: int,
    wheel_rpm: float,
    params,
) -> tuple[float, str]:
    """Air drag magnitude and which case of the operating-condition table fired."""
    if speed >= params.top_speed:
        return params.drag_max, AERO_TOP_SPEED
    if tau_out == 0.0:
        return params.drag_idle, AERO_COAST
    if speed >= params.reverse_speed and gear == GEAR_REVERSE and wheel_rpm < 0.0:
        return params.drag_reverse, AERO_REVERSE
    return params.drag_idle, AERO_NOMINAL


def aero_forces(
    velocity_body: tuple[float, float, float],
    omega_body: tuple[float, float, float],
    tau_out: float,
    gear: int,
    wheel_rpm: float,
    params,
    eps_v: float = 0.1,
) -> tuple[tuple[float, float, float], tuple[float, float, float], float, str]:
    """Drag force opposing motion, angular drag torque, downforce magnitude.

    The drag direction is undefined at rest, so its magnitude tapers to zero
    below eps_v.
    """
    vx, vy, vz = velocity_body
    speed = math.sqrt(vx * vx + vy * vy + vz * vz)
    magnitude, case = aero_drag_case(speed, tau_out, gear, wheel_rpm, params)
    if speed > 1e-12:
        scale = magnitude * min(1.0, speed / eps_v) / speed
        drag = (-vx * scale, -vy * scale, -vz * scale)
    else:
        drag = (0.0, 0.0, 0.0)
    ox, oy, oz = omega_body
    torque = (-params.angular_drag * ox, -params.angular_drag * oy, -params.angular_drag * oz)
    downforce = params.downforce_coeff * speed
    return drag, torque, downforce, case
