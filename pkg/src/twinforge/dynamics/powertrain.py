"""Engine / automatic transmission / differential model.

The transmission map works in MPH and tire inches; that unit conversion is
confined to transmission_map_rpm(). Everything else is SI.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .config import GEAR_NEUTRAL, GEAR_PARK, GEAR_REVERSE, PowertrainParams

METERS_PER_INCH = 0.0254
METERS_PER_MILE = 1609.344

STANDSTILL_SPEED = 0.1  # m/s


class GearError(RuntimeError):
    """Internal gear bookkeeping error; must be unreachable from valid input."""


def transmission_map_rpm(speed_mps: float, tire_radius_m: float, fdr: float, gear_ratio: float) -> float:
    """Engine RPM implied by vehicle speed through a given gear."""
    v_mph = abs(speed_mps) * 3600.0 / METERS_PER_MILE
    r_in = tire_radius_m / METERS_PER_INCH
    wheel_rpm = v_mph * 5280.0 * 12.0 / (60.0 * 2.0 * math.pi * r_in)
    return wheel_rpm * fdr * abs(gear_ratio)


def throttle_smoothing(throttle: float, gain: float) -> float:
    """Non-linear acceleration boost, monotone in throttle, 1.0 at zero."""
    return 1.0 + gain * throttle * throttle


@dataclass
class PowertrainState:
    engine_rpm: float
    gear: int = GEAR_NEUTRAL
    shift_timer: float = 0.0
    direction_request: int = 1  # +1 forward, -1 reverse


def powertrain_step(
    params: PowertrainParams,
    pt: PowertrainState,
    throttle: float,
    handbrake: float,
    speed: float,
    wheel_rpm_avg: float,
    dt: float,
) -> float:
    """Advance gear/RPM state, return total drivetrain torque.

    Gear policy: neutral at standstill, park at standstill with the
    handbrake, drive<->reverse only through neutral, zero torque while a
    shift is in progress, and up/down shifts decided against the
    transmission map thresholds.
    """
    if pt.gear not in params.gear_ratios:
        raise GearError(f"gear {pt.gear} missing from ratio table")

    # a direction-change request drops to neutral immediately, cancelling any
    # shift in progress; drive<->reverse never happens directly
    if pt.gear >= 1 and pt.direction_request < 0:
        pt.gear = GEAR_NEUTRAL
        pt.shift_timer = 0.0
    elif pt.gear == GEAR_REVERSE and pt.direction_request > 0:
        pt.gear = GEAR_NEUTRAL
        pt.shift_timer = 0.0

    shifting = pt.shift_timer > 0.0
    if shifting:
        pt.shift_timer = max(0.0, pt.shift_timer - dt)

    standstill = abs(speed) < STANDSTILL_SPEED and abs(wheel_rpm_avg) < 30.0
    if not shifting:
        self_gear = pt.gear
        if standstill and handbrake >= 0.5:
            pt.gear = GEAR_PARK
        elif standstill and throttle <= 1e-3:
            pt.gear = GEAR_NEUTRAL
        elif self_gear == GEAR_PARK:
            if handbrake < 0.5 and standstill:
                pt.gear = GEAR_NEUTRAL
        elif self_gear == GEAR_NEUTRAL:
            if throttle > 1e-3:
                if pt.direction_request >= 0:
                    pt.gear = 1
                    pt.shift_timer = params.shift_time
                elif standstill:
                    pt.gear = GEAR_REVERSE
                    pt.shift_timer = params.shift_time
        elif self_gear >= 1:
            map_rpm = transmission_map_rpm(
                speed, params.tire_radius, params.final_drive, params.gear_ratios[self_gear])
            if map_rpm > params.shift_up_rpm and self_gear < params.top_forward_gear:
                pt.gear = self_gear + 1
                pt.shift_timer = params.shift_time
            elif map_rpm < params.shift_down_rpm and self_gear > 1:
                pt.gear = self_gear - 1
                pt.shift_timer = params.shift_time

    ratio = params.gear_ratios[pt.gear]
    target_rpm = params.idle_rpm + abs(wheel_rpm_avg) * params.final_drive * abs(ratio)
    alpha = min(1.0, dt / params.rpm_smoothing_tau)
    pt.engine_rpm += alpha * (target_rpm - pt.engine_rpm)

    if pt.shift_timer > 0.0 or ratio == 0.0 or throttle <= 0.0:
        return 0.0
    engine_torque = params.engine_torque(pt.engine_rpm)
    boost = throttle_smoothing(throttle, params.throttle_smoothing_gain)
    return engine_torque * ratio * params.final_drive * throttle * boost


def torque_split(
    tau_total: float,
    drive_config: str,
    steer_angle: float,
    torque_drop: float,
) -> tuple[float, float]:
    """(left, right) wheel torque on a driven axle.

    The differential sheds torque on one side as steering angle grows; the
    drop factor is clamped to [0, 0.9].
    """
    if drive_config == "AWD":
        tau_out = tau_total / 4.0
    elif drive_config in ("FWD", "RWD"):
        tau_out = tau_total / 2.0
    else:
        raise ValueError(f"unknown drive_config {drive_config!r}")
    neg = -steer_angle if steer_angle < 0.0 else 0.0
    pos = steer_angle if steer_angle > 0.0 else 0.0
    drop_left = min(0.9, max(0.0, torque_drop * neg))
    drop_right = min(0.9, max(0.0, torque_drop * pos))
    return tau_out * (1.0 - drop_left), tau_out * (1.0 - drop_right)
