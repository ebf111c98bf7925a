"""Pinhole camera model and rotated-rectangle crops of label maps.

Image coordinates are ``(u, v)`` = (column, row) with pixel centers at
integer positions. A planar grasp angle ``theta`` names the closing
direction ``(cos theta, sin theta)`` in ``(u, v)``; zero is the image x-axis.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .maskio import InstanceLabelMap

DEFAULT_NOMINAL_DEPTH = 0.70  # camera to bin floor, meters


class CameraError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class CameraModel:
    """Pinhole intrinsics, camera-to-world rigid transform and working distance."""

    fx: float
    fy: float
    cx: float
    cy: float
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))
    nominal_depth: float = DEFAULT_NOMINAL_DEPTH

    def __post_init__(self):
        if not (self.fx > 0 and self.fy > 0):
            raise CameraError("focal lengths must be positive")
        if not self.nominal_depth > 0:
            raise CameraError("nominal_depth must be positive")
        R = np.array(self.rotation, dtype=float).reshape(3, 3)
        t = np.array(self.translation, dtype=float).reshape(3)
        if np.abs(R.T @ R - np.eye(3)).max() > 1e-9 or abs(np.linalg.det(R) - 1.0) > 1e-9:
            raise CameraError("cam_to_world rotation is not orthonormal with det +1")
        R.setflags(write=False)
        t.setflags(write=False)
        object.__setattr__(self, "rotation", R)
        object.__setattr__(self, "translation", t)

    @classmethod
    def from_dict(cls, doc: dict) -> "CameraModel":
        try:
            extr = doc.get("cam_to_world", {})
            return cls(
                fx=float(doc["fx"]),
                fy=float(doc["fy"]),
                cx=float(doc["cx"]),
                cy=float(doc["cy"]),
                rotation=np.array(extr.get("rotation", np.eye(3).ravel()), dtype=float),
                translation=np.array(extr.get("translation", [0.0, 0.0, 0.0]), dtype=float),
                nominal_depth=float(doc.get("nominal_depth_m", DEFAULT_NOMINAL_DEPTH)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise CameraError(f"invalid camera document: {exc}") from exc

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "nominal_depth_m": self.nominal_depth,
            "cam_to_world": {
                "rotation": [float(x) for x in self.rotation.ravel()],
                "translation": [float(x) for x in self.translation],
            },
        }

    @classmethod
    def load(cls, path: str | Path) -> "CameraModel":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise CameraError(f"{path}: {exc}") from exc
        return cls.from_dict(doc)


def _depth(cam: CameraModel, depth: float | None) -> float:
    z = cam.nominal_depth if depth is None else float(depth)
    if not z > 0:
        raise CameraError(f"depth must be positive, got {depth!r}")
    return z


def pixel_to_world(cam: CameraModel, u: float, v: float, depth: float | None = None) -> np.ndarray:
    z = _depth(cam, depth)
    p_cam = np.array([(u - cam.cx) * z / cam.fx, (v - cam.cy) * z / cam.fy, z])
    return cam.rotation @ p_cam + cam.translation


def world_to_pixel(cam: CameraModel, p) -> tuple[float, float, float]:
    p_cam = cam.rotation.T @ (np.asarray(p, dtype=float) - cam.translation)
    z = p_cam[2]
    if not z > 0:
        raise CameraError("point is behind camera")
    return (
        float(p_cam[0] * cam.fx / z + cam.cx),
        float(p_cam[1] * cam.fy / z + cam.cy),
        float(z),
    )


def meters_to_pixels(cam: CameraModel, length: float, depth: float | None = None) -> float:
    # fx: after alignment the closing axis is the crop's horizontal axis
    return length * cam.fx / _depth(cam, depth)


def pixels_to_meters(cam: CameraModel, length: float, depth: float | None = None) -> float:
    return length * _depth(cam, depth) / cam.fx


def image_yaw_to_world(cam: CameraModel, u: float, v: float, angle: float, depth: float | None = None) -> float:
    """World yaw (about world z) of the image-plane direction ``angle`` at ``(u, v)``."""
    c, s = rotation_terms(angle)
    a = pixel_to_world(cam, u, v, depth)
    b = pixel_to_world(cam, u + c, v + s, depth)
    d = b - a
    return math.atan2(d[1], d[0]) % math.pi


def rotation_terms(angle: float) -> tuple[float, float]:
    """cos/sin of ``angle`` with round-off at quarter turns snapped to exact 0."""
    c, s = math.cos(angle), math.sin(angle)
    if abs(c) < 1e-12:
        c = 0.0
    if abs(s) < 1e-12:
        s = 0.0
    return c, s


def normalize_angle(angle: float) -> float:
    a = math.fmod(angle, math.pi)
    if a < 0:
        a += math.pi
    return 0.0 if a >= math.pi else a


def nearest_index(x: np.ndarray) -> np.ndarray:
    # half-up rounding; np.rint would round half to even
    return np.floor(x + 0.5).astype(np.int64)


@dataclass(frozen=True, eq=False)
class AlignedCrop:
    """Grasp rectangle resampled so the closing direction runs along columns.

    ``pixels`` has shape ``(gb, gw)``. Cell ``(r, c)`` sits at offset
    ``(c - (gw-1)/2, r - (gb-1)/2)`` from ``src_center`` before rotation.
    """

    pixels: np.ndarray
    src_center: tuple[float, float]
    src_angle: float

    @property
    def gb(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def gw(self) -> int:
        return int(self.pixels.shape[1])

    def to_image(self, col: float, row: float) -> tuple[float, float]:
        """Map an aligned-frame position back to image ``(u, v)``."""
        return aligned_to_image(self.src_center, self.src_angle, self.gw, self.gb, col, row)


def _offsets(gw: int, gb: int) -> tuple[np.ndarray, np.ndarray]:
    dx = np.arange(gw, dtype=float) - (gw - 1) / 2.0
    dy = np.arange(gb, dtype=float) - (gb - 1) / 2.0
    return np.meshgrid(dx, dy)


def sample_points(center, angle: float, gw: int, gb: int) -> tuple[np.ndarray, np.ndarray]:
    """Sub-pixel image positions ``(u, v)`` of each crop cell, shape ``(gb, gw)``."""
    c, s = rotation_terms(angle)
    dx, dy = _offsets(gw, gb)
    u = center[0] + (dx * c - dy * s)
    v = center[1] + (dx * s + dy * c)
    return u, v


def aligned_to_image(center, angle: float, gw: int, gb: int, col: float, row: float) -> tuple[float, float]:
    c, s = rotation_terms(angle)
    dx = col - (gw - 1) / 2.0
    dy = row - (gb - 1) / 2.0
    return center[0] + (dx * c - dy * s), center[1] + (dx * s + dy * c)


def crop_aligned_rect(lm: InstanceLabelMap | np.ndarray, center, angle: float, gw: int, gb: int) -> AlignedCrop:
    if gw < 1 or gb < 1:
        raise ValueError("grasp rectangle dimensions must be >= 1")
    labels = lm.labels if isinstance(lm, InstanceLabelMap) else np.asarray(lm)
    h, w = labels.shape
    u, v = sample_points(center, angle, gw, gb)
    ui, vi = nearest_index(u), nearest_index(v)
    inside = (ui >= 0) & (ui < w) & (vi >= 0) & (vi < h)
    out = np.zeros((gb, gw), dtype=labels.dtype)
    out[inside] = labels[vi[inside], ui[inside]]
    out.setflags(write=False)
    return AlignedCrop(out, (float(center[0]), float(center[1])), float(angle))


def rect_corners(center, angle: float, gw: float, gb: float) -> np.ndarray:
    """Image-space corners (4x2, ``(u, v)``) of a ``gw`` x ``gb`` rectangle."""
    c, s = rotation_terms(angle)
    hw, hb = gw / 2.0, gb / 2.0
    local = np.array([[-hw, -hb], [hw, -hb], [hw, hb], [-hw, hb]])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.asarray(center, dtype=float)
