"""Simulated sensors: actuator feedback, incremental encoders, INS,
camera view/projection pipeline, planar and spatial LIDAR.

All sensors are noise-free by default; the INS and LIDAR expose additive
Gaussian hooks (sigma = 0 keeps them inert and the outputs deterministic).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .se3 import euler_zyx_from_matrix, quat_from_matrix

GRAVITY = 9.81


class DegenerateFrustumError(ValueError):
    pass


# -- actuator feedback -------------------------------------------------------

def actuator_feedback(state) -> tuple[float, float, float, float]:
    """Echo the last commanded (throttle, steering, brake, handbrake)."""
    return (state.cmd_throttle, state.cmd_steer, state.cmd_brake, state.cmd_handbrake)


# -- incremental encoders ----------------------------------------------------

@dataclass(frozen=True)
class EncoderConfig:
    ppr: int
    cumulative_gear_ratio: float

    def __post_init__(self):
        if self.ppr < 1 or int(self.ppr) != self.ppr:
            raise ValueError("ppr must be a positive integer")
        if self.cumulative_gear_ratio <= 0:
            raise ValueError("cumulative_gear_ratio must be > 0")


def encoder_ticks(config: EncoderConfig, revolutions: float) -> int:
    return math.floor(config.ppr * config.cumulative_gear_ratio * revolutions)


# -- inertial navigation -----------------------------------------------------

@dataclass
class InsReading:
    position: tuple[float, float, float]
    euler: tuple[float, float, float]      # roll, pitch, yaw (zyx convention)
    quaternion: tuple[float, float, float, float]  # (w, x, y, z)
    linear_accel: tuple[float, float, float]
    angular_vel: tuple[float, float, float]


class InsSensor:
    """Positioning + IMU from the rigid-body pose history.

    The accelerometer reports specific force: body-frame velocity delta per
    step plus the gravity reaction, so it reads (0, 0, +g) at rest.
    """

    def __init__(self, accel_sigma: float = 0.0, gyro_sigma: float = 0.0):
        self.accel_sigma = accel_sigma
        self.gyro_sigma = gyro_sigma
        self._last_vel = None

    def read(self, pose, vel_body, omega_body, dt: float, rng=None) -> InsReading:
        r = pose[:3, :3]
        m = (r[0, 0], r[0, 1], r[0, 2], r[1, 0], r[1, 1], r[1, 2], r[2, 0], r[2, 1], r[2, 2])
        euler = euler_zyx_from_matrix(m)
        quat = quat_from_matrix(m)
        grav_body = (GRAVITY * r[2, 0], GRAVITY * r[2, 1], GRAVITY * r[2, 2])
        if self._last_vel is None:
            accel = grav_body
        else:
            lv = self._last_vel
            accel = ((vel_body[0] - lv[0]) / dt + grav_body[0],
                     (vel_body[1] - lv[1]) / dt + grav_body[1],
                     (vel_body[2] - lv[2]) / dt + grav_body[2])
        self._last_vel = (vel_body[0], vel_body[1], vel_body[2])
        omega = (omega_body[0], omega_body[1], omega_body[2])
        if rng is not None and (self.accel_sigma > 0.0 or self.gyro_sigma > 0.0):
            accel = tuple(a + rng.normal(0.0, self.accel_sigma) for a in accel)
            omega = tuple(w + rng.normal(0.0, self.gyro_sigma) for w in omega)
        return InsReading(
            position=(float(pose[0, 3]), float(pose[1, 3]), float(pose[2, 3])),
            euler=euler,
            quaternion=quat,
            linear_accel=accel,
            angular_vel=omega,
        )


# -- camera ------------------------------------------------------------------

@dataclass
class CameraConfig:
    focal_length: float       # dimensionless: 2N/(R-L) of the projection
    sensor_size: tuple[float, float]  # (s_x, s_y); aspect a = s_y / s_x
    resolution: tuple[int, int]       # (W_px, H_px)
    near: float
    far: float
    mount: np.ndarray = field(default_factory=lambda: np.eye(4))  # body-from-camera

    def __post_init__(self):
        if not (0.0 < self.near < self.far):
            raise DegenerateFrustumError(f"need 0 < near < far, got {self.near}, {self.far}")
        if min(self.resolution) < 1:
            raise DegenerateFrustumError("resolution must be >= 1 px")
        if self.focal_length <= 0 or min(self.sensor_size) <= 0:
            raise DegenerateFrustumError("focal length and sensor size must be > 0")
        self.mount = np.asarray(self.mount, dtype=np.float64)

    @property
    def aspect(self) -> float:
        return self.sensor_size[1] / self.sensor_size[0]

    def frustum_offsets(self) -> tuple[float, float, float, float]:
        """(L, R, T, B) of a symmetric frustum from focal length and aspect."""
        half_w = self.near / self.focal_length
        half_h = half_w * self.aspect
        return (-half_w, half_w, half_h, -half_h)


def forward_camera_mount(position=(1.2, 0.0, 1.4)) -> np.ndarray:
    """Body-from-camera transform for a camera looking along body +x.

    Camera axes: x right (-body y), y up (+body z), z backward (-body x).
    """
    t = np.eye(4)
    t[:3, 0] = (0.0, -1.0, 0.0)
    t[:3, 1] = (0.0, 0.0, 1.0)
    t[:3, 2] = (-1.0, 0.0, 0.0)
    t[:3, 3] = position
    return t


def projection_matrix(config: CameraConfig) -> np.ndarray:
    left, right, top, bottom = config.frustum_offsets()
    n, f = config.near, config.far
    if right == left or top == bottom:
        raise DegenerateFrustumError("degenerate frustum")
    p = np.zeros((4, 4))
    p[0, 0] = 2.0 * n / (right - left)
    p[0, 2] = (right + left) / (right - left)
    p[1, 1] = 2.0 * n / (top - bottom)
    p[1, 2] = (top + bottom) / (top - bottom)
    p[2, 2] = -(f + n) / (f - n)
    p[2, 3] = -2.0 * f * n / (f - n)
    p[3, 2] = -1.0
    return p


def camera_matrices(config: CameraConfig, camera_to_world: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """View matrix (world -> camera) and projection matrix."""
    r = camera_to_world[:3, :3]
    v = np.eye(4)
    v[:3, :3] = r.T
    v[:3, 3] = -r.T @ camera_to_world[:3, 3]
    return v, projection_matrix(config)


@dataclass
class ProjectedPoint:
    ndc: tuple[float, float, float] | None
    pixel: tuple[float, float] | None
    visible: bool


def project_point(world_point, view: np.ndarray, proj: np.ndarray,
                  resolution: tuple[int, int]) -> ProjectedPoint:
    """World point -> NDC -> pixel. Visible iff NDC lands in [-1, 1]^3 with
    the point in front of the camera."""
    w = np.array([world_point[0], world_point[1], world_point[2], 1.0])
    c = proj @ (view @ w)
    if abs(c[3]) < 1e-12 or c[3] <= 0.0:
        return ProjectedPoint(None, None, False)
    ndc = (c[0] / c[3], c[1] / c[3], c[2] / c[3])
    visible = all(-1.0 <= v <= 1.0 for v in ndc)
    px = (ndc[0] + 1.0) * 0.5 * resolution[0]
    py = (1.0 - ndc[1]) * 0.5 * resolution[1]
    return ProjectedPoint(ndc, (px, py), visible)


def project_points(world_points: np.ndarray, view: np.ndarray, proj: np.ndarray,
                   resolution: tuple[int, int]):
    """Vectorized projection. Returns (ndc (n,3), pixels (n,2), visible (n,))."""
    n = world_points.shape[0]
    homo = np.hstack([world_points, np.ones((n, 1))])
    c = (proj @ view @ homo.T).T
    w = c[:, 3]
    in_front = w > 1e-12
    safe_w = np.where(in_front, w, 1.0)
    ndc = c[:, :3] / safe_w[:, None]
    visible = in_front & np.all(np.abs(ndc) <= 1.0, axis=1)
    pixels = np.empty((n, 2))
    pixels[:, 0] = (ndc[:, 0] + 1.0) * 0.5 * resolution[0]
    pixels[:, 1] = (1.0 - ndc[:, 1]) * 0.5 * resolution[1]
    return ndc, pixels, visible


@dataclass
class BoxProjection:
    u_min: float
    v_min: float
    u_max: float
    v_max: float
    area: float
    center: tuple[float, float]


def project_box(corners_world: np.ndarray, view: np.ndarray, proj: np.ndarray,
                resolution: tuple[int, int]) -> BoxProjection | None:
    """Clipped image-space bounding box of a world-space box (8 corners).

    Returns None when every corner is behind the camera or the clipped box is
    empty.
    """
    _, pixels, _ = project_points(corners_world, view, proj, resolution)
    homo = np.hstack([corners_world, np.ones((len(corners_world), 1))])
    w = (proj @ view @ homo.T).T[:, 3]
    front = w > 1e-12
    if not np.any(front):
        return None
    pts = pixels[front]
    u_min = max(0.0, float(pts[:, 0].min()))
    v_min = max(0.0, float(pts[:, 1].min()))
    u_max = min(float(resolution[0]), float(pts[:, 0].max()))
    v_max = min(float(resolution[1]), float(pts[:, 1].max()))
    if u_max <= u_min or v_max <= v_min:
        return None
    area = (u_max - u_min) * (v_max - v_min)
    return BoxProjection(u_min, v_min, u_max, v_max, area,
                         ((u_min + u_max) / 2.0, (v_min + v_max) / 2.0))


# -- LIDAR -------------------------------------------------------------------

@dataclass
class LidarConfig:
    mode: str                 # "planar" | "spatial"
    r_min: float
    r_max: float
    theta_min: float
    theta_max: float
    theta_res: float
    phi_min: float = 0.0
    phi_max: float = 0.0
    phi_res: float = 0.0
    rate: float = 10.0
    mount: np.ndarray = field(default_factory=lambda: np.eye(4))
    range_sigma: float = 0.0

    def __post_init__(self):
        if not (0.0 <= self.r_min < self.r_max):
            raise ValueError("need 0 <= r_min < r_max")
        if self.theta_res <= 0 or self.theta_max < self.theta_min:
            raise ValueError("bad horizontal angular range")
        if self.mode == "spatial":
            if self.phi_res <= 0 or self.phi_max < self.phi_min:
                raise ValueError("spatial mode needs a vertical angular range")
        elif self.mode != "planar":
            raise ValueError(f"unknown LIDAR mode {self.mode!r}")
        self.mount = np.asarray(self.mount, dtype=np.float64)

    def theta_grid(self) -> np.ndarray:
        n = int(math.floor((self.theta_max - self.theta_min) / self.theta_res + 1e-9)) + 1
        return self.theta_min + np.arange(n) * self.theta_res

    def phi_grid(self) -> np.ndarray:
        n = int(math.floor((self.phi_max - self.phi_min) / self.phi_res + 1e-9)) + 1
        return self.phi_min + np.arange(n) * self.phi_res


def lidar_scan_2d(config: LidarConfig, lidar_to_world: np.ndarray, raycaster,
                  rng=None) -> np.ndarray:
    """One planar sweep. ranges[i] is the hit distance for theta_grid()[i],
    inf when nothing is hit inside [r_min, r_max].

    raycaster(origin, direction, r_max) -> distance or None.
    """
    r = lidar_to_world[:3, :3]
    origin = lidar_to_world[:3, 3]
    thetas = config.theta_grid()
    out = np.full(len(thetas), np.inf)
    for i, theta in enumerate(thetas):
        local = (math.cos(theta), math.sin(theta), 0.0)
        d = r @ local
        dist = raycaster(origin, d, config.r_max)
        if dist is None:
            continue
        if config.range_sigma > 0.0 and rng is not None:
            dist = dist + rng.normal(0.0, config.range_sigma)
        if config.r_min <= dist <= config.r_max:
            out[i] = dist
    return out


def lidar_scan_3d(config: LidarConfig, lidar_to_world: np.ndarray, raycaster,
                  rng=None) -> tuple[np.ndarray, bytes]:
    """Spatial scan: sensor-frame hit points, row-major channel-then-azimuth.

    Returns (points (channels, rays, 3) with NaN triplets for misses, and the
    packed byte encoding from encode_point_cloud).
    """
    r = lidar_to_world[:3, :3]
    origin = lidar_to_world[:3, 3]
    thetas = config.theta_grid()
    phis = config.phi_grid()
    points = np.full((len(phis), len(thetas), 3), np.nan)
    for ci, phi in enumerate(phis):
        cp, sp = math.cos(phi), math.sin(phi)
        for ri, theta in enumerate(thetas):
            local = (math.cos(theta) * cp, math.sin(theta) * cp, -sp)
            d = r @ local
            dist = raycaster(origin, d, config.r_max)
            if dist is None:
                continue
            if config.range_sigma > 0.0 and rng is not None:
                dist = dist + rng.normal(0.0, config.range_sigma)
            if config.r_min <= dist <= config.r_max:
                points[ci, ri, 0] = local[0] * dist
                points[ci, ri, 1] = local[1] * dist
                points[ci, ri, 2] = local[2] * dist
    return points, encode_point_cloud(points)


def encode_point_cloud(points: np.ndarray) -> bytes:
    """Little-endian float32 x,y,z interleaved; misses stay NaN triplets."""
    return np.ascontiguousarray(points, dtype="<f4").tobytes()


def point_cloud_ascii(points: np.ndarray, decimals: int = 6) -> str:
    """Debug dump: one 'x y z' line per hit."""
    flat = points.reshape(-1, 3)
    keep = ~np.isnan(flat[:, 0])
    fmt = f"%.{decimals}f %.{decimals}f %.{decimals}f"
    return "\n".join(fmt % tuple(p) for p in flat[keep])
