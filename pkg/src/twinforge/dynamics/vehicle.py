"""Vehicle state and the fixed-timestep 6-DOF integration step.

The step is a pure function of (state, commands, config, terrain, dt): identical
inputs produce bit-identical state. Translation/rotation are integrated about
the center of mass with semi-implicit Euler; wheel spin and suspension travel
integrate alongside. All hot-path math is plain-float (see se3.py).
"""

from __future__ import annotations

import math

from ..se3 import quat_integrate, quat_to_matrix, rotate, rotate_t
from .config import GEAR_PARK, GRAVITY, VehicleConfig
from .forces import (
    aero_forces,
    antiroll_forces,
    steering_step,
    suspension_step,
    tire_forces,
    wheel_brake_torques,
)
from .powertrain import PowertrainState, powertrain_step, torque_split


class SimulationFault(RuntimeError):
    """Non-finite quantity reached the integrator; the episode must abort."""


class VehicleState:
    __slots__ = (
        "pos", "quat", "vel", "omega",
        "wheel_z", "wheel_zdot", "wheel_omega", "wheel_compression",
        "wheel_grounded", "wheel_rev", "slip_x", "slip_y",
        "pt", "steer_angle", "steer_left", "steer_right",
        "cmd_throttle", "cmd_steer", "cmd_brake", "cmd_handbrake",
        "last_tau_total", "last_aero_case", "last_normal_loads",
    )

    def __init__(self):
        self.pos = [0.0, 0.0, 0.0]        # world COM position
        self.quat = (1.0, 0.0, 0.0, 0.0)  # world-from-body
        self.vel = [0.0, 0.0, 0.0]        # body-frame COM velocity
        self.omega = [0.0, 0.0, 0.0]      # body-frame angular velocity
        self.wheel_z = [0.0] * 4          # hub heights, world frame (FL FR RL RR)
        self.wheel_zdot = [0.0] * 4
        self.wheel_omega = [0.0] * 4      # spin, rad/s, positive rolling forward
        self.wheel_compression = [0.0] * 4
        self.wheel_grounded = [True] * 4
        self.wheel_rev = [0.0] * 4        # accumulated revolutions
        self.slip_x = [0.0] * 4
        self.slip_y = [0.0] * 4
        self.pt = PowertrainState(engine_rpm=0.0)
        self.steer_angle = 0.0
        self.steer_left = 0.0
        self.steer_right = 0.0
        self.cmd_throttle = 0.0
        self.cmd_steer = 0.0
        self.cmd_brake = 0.0
        self.cmd_handbrake = 0.0
        self.last_tau_total = 0.0
        self.last_aero_case = "coast"
        self.last_normal_loads = [0.0] * 4

    def set_commands(self, throttle: float, steer: float, brake: float, handbrake: float) -> None:
        self.cmd_throttle = min(1.0, max(0.0, throttle))
        self.cmd_steer = min(1.0, max(-1.0, steer))
        self.cmd_brake = min(1.0, max(0.0, brake))
        self.cmd_handbrake = 1.0 if handbrake >= 0.5 else 0.0

    @property
    def speed(self) -> float:
        vx, vy, vz = self.vel
        return math.sqrt(vx * vx + vy * vy + vz * vz)

    @property
    def forward_speed(self) -> float:
        return self.vel[0]

    def rotation_matrix(self):
        return quat_to_matrix(self.quat)


class Vehicle:
    def __init__(self, config: VehicleConfig):
        self.cfg = config

    # -- construction ------------------------------------------------------

    def spawn_state(self, terrain, x: float, y: float, yaw: float) -> VehicleState:
        """State at static ride height, attitude conformal to the local slope."""
        cfg = self.cfg
        st = VehicleState()
        cy, sy = math.cos(yaw), math.sin(yaw)
        ground, gx, gy = terrain.height_and_gradient(x, y)
        slope_fwd = gx * cy + gy * sy
        slope_lat = -gx * sy + gy * cy
        pitch = -math.atan(slope_fwd)
        roll = math.atan(slope_lat)
        from ..se3 import quat_from_euler_zyx
        st.quat = quat_from_euler_zyx(roll, pitch, yaw)
        wn = cfg.suspension.natural_frequency
        static_comp = GRAVITY / (wn * wn)
        mount_z_body = cfg.wheel_mounts["FL"][2]
        strut = cfg.suspension.wheel_radius + cfg.suspension.rest_length - static_comp
        origin_z = ground + strut * math.cos(pitch) * math.cos(roll) - mount_z_body
        com = cfg.com
        m = quat_to_matrix(st.quat)
        com_w = rotate(m, com)
        st.pos = [x + com_w[0], y + com_w[1], origin_z + com_w[2]]
        for i, w in enumerate(cfg.wheels):
            mx = x + cy * w.mount[0] - sy * w.mount[1]
            my = y + sy * w.mount[0] + cy * w.mount[1]
            gz, _, _ = terrain.height_and_gradient(mx, my)
            st.wheel_z[i] = gz + cfg.suspension.wheel_radius
            st.wheel_compression[i] = static_comp
        st.pt.engine_rpm = cfg.powertrain.idle_rpm
        return st

    def origin_pose(self, state: VehicleState):
        """World-from-body 4x4 for the config origin (numpy)."""
        import numpy as np

        m = quat_to_matrix(state.quat)
        com = self.cfg.com
        shift = rotate(m, com)
        out = np.eye(4)
        out[0, :3] = m[0:3]
        out[1, :3] = m[3:6]
        out[2, :3] = m[6:9]
        out[0, 3] = state.pos[0] - shift[0]
        out[1, 3] = state.pos[1] - shift[1]
        out[2, 3] = state.pos[2] - shift[2]
        return out

    def body_point_world(self, state: VehicleState, point) -> tuple[float, float, float]:
        m = quat_to_matrix(state.quat)
        com = self.cfg.com
        rel = (point[0] - com[0], point[1] - com[1], point[2] - com[2])
        w = rotate(m, rel)
        return (state.pos[0] + w[0], state.pos[1] + w[1], state.pos[2] + w[2])

    def kinetic_energy(self, state: VehicleState) -> float:
        """Body translational + rotational KE plus wheel spin KE."""
        vx, vy, vz = state.vel
        ox, oy, oz = state.omega
        ix, iy, iz = self.cfg.inertia
        ke = 0.5 * self.cfg.total_mass * (vx * vx + vy * vy + vz * vz) + 0.5 * (
            ix * ox * ox + iy * oy * oy + iz * oz * oz)
        for w in state.wheel_omega:
            ke += 0.5 * self.cfg.wheel_inertia * w * w
        return ke

    # -- integration ---------------------------------------------------------

    def step(self, state: VehicleState, terrain, dt: float) -> None:
        cfg = self.cfg
        susp = cfg.suspension
        mass = cfg.total_mass
        com = cfg.com
        m = quat_to_matrix(state.quat)
        px, py, pz = state.pos
        vx, vy, vz = state.vel
        ox, oy, oz = state.omega

        # steering
        angle, d_left, d_right = steering_step(
            state.cmd_steer, state.steer_angle, vx,
            cfg.steering.limit, cfg.steering.sensitivity, cfg.steering.speed_factor,
            cfg.steering.top_speed, cfg.steering.wheelbase, cfg.steering.track, dt)
        state.steer_angle = angle
        state.steer_left = d_left
        state.steer_right = d_right
        wheel_steer = (d_left, d_right, 0.0, 0.0)

        # powertrain
        driven = [i for i, w in enumerate(cfg.wheels) if w.driven]
        rpm_scale = 60.0 / (2.0 * math.pi)
        wheel_rpm_avg = sum(state.wheel_omega[i] for i in driven) * rpm_scale / len(driven)
        tau_total = powertrain_step(
            cfg.powertrain, state.pt, state.cmd_throttle, state.cmd_handbrake,
            vx, wheel_rpm_avg, dt)
        state.last_tau_total = tau_total

        front_split = torque_split(tau_total, cfg.powertrain.drive_config, angle,
                                   cfg.powertrain.diff_torque_drop)
        drive_torque = [0.0] * 4
        for i, w in enumerate(cfg.wheels):
            if w.driven:
                drive_torque[i] = front_split[0] if w.side > 0 else front_split[1]

        corner_masses = tuple(w.corner_mass for w in cfg.wheels)
        combi = wheel_brake_torques(corner_masses, vx, cfg.brake.disk_radius,
                                    cfg.brake.braking_distance_60mph, "combi")
        hand = wheel_brake_torques(corner_masses, vx, cfg.brake.disk_radius,
                                   cfg.brake.braking_distance_60mph, "handbrake")
        brake = [state.cmd_brake * combi[i] + state.cmd_handbrake * hand[i] for i in range(4)]

        fx_sum = fy_sum = fz_sum = 0.0
        tx_sum = ty_sum = tz_sum = 0.0

        # suspension per wheel
        travels = [0.0] * 4
        contact_z = [0.0] * 4
        vertical = [0.0] * 4
        for i, w in enumerate(cfg.wheels):
            rel = (w.mount[0] - com[0], w.mount[1] - com[1], w.mount[2] - com[2])
            mw = rotate(m, rel)
            mount_x = px + mw[0]
            mount_y = py + mw[1]
            mount_z = pz + mw[2]
            gz, _, _ = terrain.height_and_gradient(mount_x, mount_y)
            res = suspension_step(
                state.wheel_z[i], state.wheel_zdot[i], state.wheel_compression[i],
                mount_z, gz, susp.rest_length, w.spring_k, w.damper_b,
                susp.wheel_radius, w.static_displacement, w.mount[2], dt)
            state.wheel_z[i] = res.wheel_z
            state.wheel_zdot[i] = res.wheel_zdot
            state.wheel_compression[i] = res.compression
            state.wheel_grounded[i] = res.grounded
            travels[i] = res.travel
            contact_z[i] = res.contact_z_body
            vertical[i] = res.force

        # anti-roll bars per axle
        for axle in (0, 1):
            li, ri = (0, 1) if axle == 0 else (2, 3)
            fl, fr = antiroll_forces(travels[li], travels[ri], susp.antiroll_stiffness,
                                     state.wheel_grounded[li], state.wheel_grounded[ri])
            vertical[li] += fl
            vertical[ri] += fr

        # suspension + anti-roll forces act along body-up at the force height
        for i, w in enumerate(cfg.wheels):
            f = vertical[i]
            if f == 0.0:
                continue
            rx = w.mount[0] - com[0]
            ry = w.mount[1] - com[1]
            rz = w.force_height - com[2]
            fz_sum += f
            tx_sum += ry * f
            ty_sum += -rx * f
            state.last_normal_loads[i] = max(0.0, f)
        for i in range(4):
            if not state.wheel_grounded[i]:
                state.last_normal_loads[i] = 0.0

        # tire forces
        spline = cfg.tire_spline
        eps_v = cfg.slip_speed_guard
        tire_fx_wheel = [0.0] * 4
        for i, w in enumerate(cfg.wheels):
            if not state.wheel_grounded[i]:
                state.slip_x[i] = 0.0
                state.slip_y[i] = 0.0
                continue
            load = state.last_normal_loads[i]
            rx = w.mount[0] - com[0]
            ry = w.mount[1] - com[1]
            rz = contact_z[i] - com[2]
            cvx = vx + oy * rz - oz * ry
            cvy = vy + oz * rx - ox * rz
            sa = wheel_steer[i]
            cs, sn = math.cos(sa), math.sin(sa)
            wvx = cs * cvx + sn * cvy
            wvy = -sn * cvx + cs * cvy
            rel = susp.wheel_radius * state.wheel_omega[i] - wvx
            cap = abs(rel) * w.contact_reduced_mass / dt
            f_lon, f_lat, s_x, s_y = tire_forces(
                state.wheel_omega[i], wvx, wvy, susp.wheel_radius, spline, load,
                eps_v, cap)
            state.slip_x[i] = s_x
            state.slip_y[i] = s_y
            tire_fx_wheel[i] = f_lon
            bfx = cs * f_lon - sn * f_lat
            bfy = sn * f_lon + cs * f_lat
            fx_sum += bfx
            fy_sum += bfy
            tx_sum += ry * 0.0 - rz * bfy
            ty_sum += rz * bfx - rx * 0.0
            tz_sum += rx * bfy - ry * bfx

        # aerodynamics
        tau_out = tau_total / (4.0 if cfg.powertrain.drive_config == "AWD" else 2.0)
        drag, ang_drag, downforce, case = aero_forces(
            (vx, vy, vz), (ox, oy, oz), tau_out, state.pt.gear, wheel_rpm_avg,
            cfg.aero, eps_v)
        state.last_aero_case = case
        fx_sum += drag[0]
        fy_sum += drag[1]
        fz_sum += drag[2] - downforce
        tx_sum += ang_drag[0]
        ty_sum += ang_drag[1]
        tz_sum += ang_drag[2]

        # gravity (body frame)
        gb = rotate_t(m, (0.0, 0.0, -mass * GRAVITY))
        fx_sum += gb[0]
        fy_sum += gb[1]
        fz_sum += gb[2]

        # low-speed brake hold: kills the quadratic brake law's creep tail
        if state.cmd_brake > 0.05 or state.cmd_handbrake >= 0.5:
            sp = math.sqrt(vx * vx + vy * vy + vz * vz)
            if 0.0 < sp < cfg.standstill_brake_speed:
                cap = cfg.standstill_brake_decel * max(state.cmd_brake, state.cmd_handbrake)
                a_hold = min(sp / dt, cap) * mass / sp
                fx_sum -= vx * a_hold
                fy_sum -= vy * a_hold
                fz_sum -= vz * a_hold

        # rigid-body integration (semi-implicit Euler, body frame)
        ax = fx_sum / mass - (oy * vz - oz * vy)
        ay = fy_sum / mass - (oz * vx - ox * vz)
        az = fz_sum / mass - (ox * vy - oy * vx)
        nvx = vx + ax * dt
        nvy = vy + ay * dt
        nvz = vz + az * dt

        ix, iy, iz = cfg.inertia
        dox = (tx_sum - (iz - iy) * oy * oz) / ix
        doy = (ty_sum - (ix - iz) * oz * ox) / iy
        doz = (tz_sum - (iy - ix) * ox * oy) / iz
        nox = ox + dox * dt
        noy = oy + doy * dt
        noz = oz + doz * dt

        wv = rotate(m, (nvx, nvy, nvz))
        state.pos = [px + wv[0] * dt, py + wv[1] * dt, pz + wv[2] * dt]
        state.vel = [nvx, nvy, nvz]
        state.omega = [nox, noy, noz]
        state.quat = quat_integrate(state.quat, (nox, noy, noz), dt)

        # wheel spin (brake torque pulls toward zero but cannot cross it)
        i_w = cfg.wheel_inertia
        locked = state.pt.gear == GEAR_PARK
        for i in range(4):
            if locked:
                state.wheel_omega[i] = 0.0
                continue
            net = drive_torque[i] - susp.wheel_radius * tire_fx_wheel[i]
            w_spin = state.wheel_omega[i] + dt * net / i_w
            cap = dt * brake[i] / i_w
            if w_spin > cap:
                w_spin -= cap
            elif w_spin < -cap:
                w_spin += cap
            else:
                w_spin = 0.0
            state.wheel_omega[i] = w_spin
            state.wheel_rev[i] += w_spin * dt / (2.0 * math.pi)

        total = (state.pos[0] + state.pos[1] + state.pos[2]
                 + nvx + nvy + nvz + nox + noy + noz
                 + state.quat[0] + state.quat[1] + state.quat[2] + state.quat[3])
        if not math.isfinite(total):
            raise SimulationFault(
                f"non-finite state after step: pos={state.pos} vel={state.vel} "
                f"omega={state.omega} gear={state.pt.gear}")
