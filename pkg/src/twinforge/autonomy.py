"""Candidate autonomy stack under test: surrogate visual perception with four
model presets, AEB planning with existence/threat filtering, a longitudinal
cruise controller, and the headlight controller.

The surrogate detector replaces neural-network inference with a closed-form
per-frame detection probability driven by visibility, ambient light and
range. Preset parameters are calibration constants, not measured model
behavior; they are chosen so the four presets rank the way small/large
detector variants rank in day versus night conditions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

AUTONOMY_SCHEMA_VERSION = 1

MODEL_IDS = ("v2", "v2_tiny", "v3", "v3_tiny")

# Exponent applied to visibility in low ambient light grows with the preset's
# low_light_penalty: exponent = 1 + NIGHT_EXPONENT_SCALE * penalty.
NIGHT_EXPONENT_SCALE = 3.0
LOW_LIGHT_THRESHOLD = 0.5

# Headlights restore part of the light term (never the weather term).
LIGHT_GAIN = {"off": 0.0, "low_beam": 0.55, "high_beam_plus_fog": 0.65}

STANDSTILL_SPEED = 0.05  # m/s, releases the AEB latch


@dataclass(frozen=True)
class PerceptionModelPreset:
    model_id: str
    base_detect_rate: float
    range_halflife: float      # m
    low_light_penalty: float   # in [0, 1]
    confidence_mean: float
    confidence_spread: float
    min_pixel_area: float      # px^2

    def __post_init__(self):
        for name in ("base_detect_rate", "low_light_penalty", "confidence_mean", "confidence_spread"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {v}")


DEFAULT_PRESETS = {
    "v3": PerceptionModelPreset("v3", 0.95, 60.0, 0.25, 0.85, 0.12, 350.0),
    "v2": PerceptionModelPreset("v2", 0.88, 45.0, 0.45, 0.78, 0.15, 400.0),
    "v3_tiny": PerceptionModelPreset("v3_tiny", 0.62, 32.0, 0.80, 0.70, 0.18, 450.0),
    "v2_tiny": PerceptionModelPreset("v2_tiny", 0.45, 26.0, 1.00, 0.62, 0.20, 500.0),
}

FALSE_POSITIVE_RATE = 0.008  # per frame, well under the 1% budget


@dataclass
class Detection:
    cls: str
    confidence: float
    area: float               # px^2
    center: tuple[float, float]


@dataclass
class AebConfig:
    threat_classes: tuple[str, ...] = ("moose",)
    min_confidence: float = 0.5
    min_area: float = 400.0
    persistence_frames: int = 3
    fos: float = 1.5
    cruise_speed: float = 11.1
    max_decel: float = 6.0         # planner's stopping-distance model, m/s^2
    range_to_dtc_offset: float = 1.5  # camera-range minus front-face DTC, m

    def __post_init__(self):
        if self.persistence_frames < 1:
            raise ValueError("persistence_frames must be >= 1")
        if self.fos < 1.0:
            raise ValueError("fos must be >= 1")


def effective_visibility(condition, lights: str) -> float:
    """Visibility after the headlights recover part of the light term."""
    light = min(1.0, condition.ambient_light + LIGHT_GAIN[lights])
    weather = condition.visibility / condition.ambient_light if condition.ambient_light > 0 else 0.0
    return min(1.0, max(0.0, light * weather))


def detection_probability(preset: PerceptionModelPreset, condition, lights: str,
                          distance: float) -> float:
    """Closed-form per-frame detection probability for one obstacle."""
    vis = effective_visibility(condition, lights)
    if condition.ambient_light < LOW_LIGHT_THRESHOLD:
        exponent = 1.0 + NIGHT_EXPONENT_SCALE * preset.low_light_penalty
    else:
        exponent = 1.0
    p = preset.base_detect_rate * (vis ** exponent) * 2.0 ** (-distance / preset.range_halflife)
    return min(1.0, max(0.0, p))


@dataclass
class ObstacleView:
    """Camera-space evidence for one obstacle, produced by the projection pipeline."""
    cls: str
    area: float
    center: tuple[float, float]
    distance: float  # camera to obstacle center, m


class SurrogateDetector:
    """Stochastic stand-in for a neural detector; owns the episode RNG stream."""

    def __init__(self, preset: PerceptionModelPreset, condition, rng: np.random.Generator,
                 false_positive_rate: float = FALSE_POSITIVE_RATE):
        self.preset = preset
        self.condition = condition
        self.rng = rng
        self.false_positive_rate = false_positive_rate

    def detect(self, views: list[ObstacleView], lights: str) -> list[Detection]:
        out: list[Detection] = []
        vis = effective_visibility(self.condition, lights)
        for view in views:
            if view.area < self.preset.min_pixel_area:
                continue
            p = detection_probability(self.preset, self.condition, lights, view.distance)
            if self.rng.random() >= p:
                continue
            conf = self.rng.normal(self.preset.confidence_mean * vis,
                                   self.preset.confidence_spread)
            out.append(Detection(view.cls, min(1.0, max(0.0, conf)), view.area, view.center))
        if self.rng.random() < self.false_positive_rate:
            area = self.rng.uniform(30.0, 250.0)
            conf = self.rng.uniform(0.3, 0.9)
            out.append(Detection("moose", conf, area, (self.rng.uniform(0, 640),
                                                       self.rng.uniform(0, 480))))
        return out


class AebPlanner:
    """Persistence-filtered threat detection plus a stopping-distance gate.

    Once braking is issued it latches until standstill; after the first
    emergency stop completes the mission is over and the planner never
    re-arms, so the active flag rises at most once per episode.
    """

    def __init__(self, cfg: AebConfig):
        self.cfg = cfg
        self.counter = 0
        self.braking = False
        self.finished = False

    def stopping_distance(self, speed: float) -> float:
        return speed * speed / (2.0 * self.cfg.max_decel)

    def plan(self, detections: list[Detection], dtc_estimate: float | None,
             speed: float) -> str:
        cfg = self.cfg
        qualifying = [d for d in detections
                      if d.cls in cfg.threat_classes
                      and d.confidence >= cfg.min_confidence
                      and d.area >= cfg.min_area]
        self.counter = self.counter + 1 if qualifying else 0

        if self.braking:
            if abs(speed) < STANDSTILL_SPEED:
                self.braking = False
                self.finished = True
            return "brake" if self.braking else "cruise"
        if self.finished:
            return "cruise"
        if (self.counter >= cfg.persistence_frames and dtc_estimate is not None
                and self.stopping_distance(speed) * cfg.fos >= dtc_estimate):
            self.braking = True
            return "brake"
        return "cruise"


def longitudinal_control(decision: str, speed: float, cruise_speed: float,
                         kp: float = 0.2) -> tuple[float, float]:
    """(throttle, brake) for the current planner decision."""
    if decision == "brake":
        return 0.0, 1.0
    throttle = min(1.0, max(0.0, kp * (cruise_speed - speed)))
    return throttle, 0.0


@dataclass(frozen=True)
class HeadlightThresholds:
    ambient_off: float = 0.6
    fog_off: float = 0.3
    ambient_high: float = 0.3
    fog_high: float = 0.6


def headlight_control(ambient_light: float, fog_density: float,
                      thresholds: HeadlightThresholds = HeadlightThresholds()) -> str:
    if ambient_light >= thresholds.ambient_off and fog_density < thresholds.fog_off:
        return "off"
    if ambient_light < thresholds.ambient_high and fog_density >= thresholds.fog_high:
        return "high_beam_plus_fog"
    return "low_beam"


def estimate_range_px(area_px: float, fx_px: float, fy_px: float,
                      assumed_frontal_area: float) -> float:
    """Pinhole range estimate from a bounding-box area."""
    if area_px <= 0.0:
        return math.inf
    return math.sqrt(fx_px * fy_px * assumed_frontal_area / area_px)


# -- preset document ----------------------------------------------------------

def default_autonomy_doc() -> dict:
    return {
        "schema_version": AUTONOMY_SCHEMA_VERSION,
        "presets": {
            mid: {
                "base_detect_rate": p.base_detect_rate,
                "range_halflife": p.range_halflife,
                "low_light_penalty": p.low_light_penalty,
                "confidence_mean": p.confidence_mean,
                "confidence_spread": p.confidence_spread,
                "min_pixel_area": p.min_pixel_area,
            }
            for mid, p in DEFAULT_PRESETS.items()
        },
        "aeb": {
            "threat_classes": ["moose"],
            "min_confidence": 0.5,
            "min_area": 400.0,
            "persistence_frames": 3,
            "fos": 1.5,
            "max_decel": 6.0,
            "range_to_dtc_offset": 1.5,
        },
        "control": {"cruise_kp": 0.2},
        "perception_period_steps": 10,
        "assumed_frontal_area": 4.3,
        "false_positive_rate": FALSE_POSITIVE_RATE,
    }


def parse_autonomy_doc(doc: dict) -> tuple[dict[str, PerceptionModelPreset], AebConfig, dict]:
    if doc.get("schema_version") != AUTONOMY_SCHEMA_VERSION:
        raise ValueError(f"unsupported autonomy schema_version {doc.get('schema_version')!r}")
    presets = {
        mid: PerceptionModelPreset(model_id=mid, **fields)
        for mid, fields in doc["presets"].items()
    }
    a = doc["aeb"]
    aeb = AebConfig(
        threat_classes=tuple(a["threat_classes"]),
        min_confidence=a["min_confidence"],
        min_area=a["min_area"],
        persistence_frames=a["persistence_frames"],
        fos=a["fos"],
        max_decel=a["max_decel"],
        range_to_dtc_offset=a["range_to_dtc_offset"],
    )
    return presets, aeb, doc
