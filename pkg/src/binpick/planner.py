"""Grasp planning from an instance label map.

Every instance spawns ``D`` candidate grasps at its centroid, one per angle
``k*pi/D``. Each candidate's rectangle is cropped and aligned, its cells are
split into contact (target), free (background) and collision (other
instance) sectors, and the candidate is kept only when the object fits the
gripper and both fingers have room. Survivors are re-centered on the
contact sector, given a refined jaw width, scored, and the best one wins.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from enum import IntEnum
from pathlib import Path
from typing import Sequence

import numpy as np

from . import camgeom
from .camgeom import AlignedCrop, CameraModel
from .maskio import InstanceLabelMap, instance_records


class Sector(IntEnum):
    TC = 0  # target contact
    UO = 1  # unobstructed / background
    CL = 2  # collision with another instance


class PlanningError(ValueError):
    pass


@dataclass(frozen=True)
class GraspRectSpec:
    gw: int = 80
    gb: int = 24
    D: int = 6

    def __post_init__(self):
        if self.gw < 1 or self.gb < 1:
            raise PlanningError("gw and gb must be >= 1")
        if self.D < 1:
            raise PlanningError("D must be >= 1")

    def angles(self) -> list[float]:
        return [k * math.pi / self.D for k in range(self.D)]


@dataclass(frozen=True)
class GripperSpec:
    max_opening: float = 0.08  # m
    finger_width: float = 0.01  # m

    def __post_init__(self):
        if not (self.max_opening > 0 and self.finger_width > 0):
            raise PlanningError("gripper dimensions must be positive")
        if not self.finger_width < self.max_opening:
            raise PlanningError("finger_width must be smaller than max_opening")


def load_gripper_config(path: str | Path) -> tuple[GripperSpec, GraspRectSpec]:
    """Read ``{"max_opening_m", "finger_width_m", "gw_px", "gb_px", "D"}``."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise PlanningError(f"{path}: {exc}") from exc
    return gripper_from_dict(doc)


def gripper_from_dict(doc: dict) -> tuple[GripperSpec, GraspRectSpec]:
    g0, r0 = GripperSpec(), GraspRectSpec()
    try:
        gripper = GripperSpec(
            float(doc.get("max_opening_m", g0.max_opening)),
            float(doc.get("finger_width_m", g0.finger_width)),
        )
        rect = GraspRectSpec(int(doc.get("gw_px", r0.gw)), int(doc.get("gb_px", r0.gb)), int(doc.get("D", r0.D)))
    except (TypeError, ValueError) as exc:
        raise PlanningError(f"invalid gripper document: {exc}") from exc
    return gripper, rect


@dataclass(frozen=True, eq=False)
class SubsectorMap:
    sectors: np.ndarray  # (gb, gw) of Sector values
    target_id: int

    def count(self, sector: Sector) -> int:
        return int(np.count_nonzero(self.sectors == sector))


@dataclass(frozen=True)
class Widths:
    object_width: int
    fsl_width: int
    fsr_width: int


@dataclass(frozen=True)
class QualityBreakdown:
    oss: float
    cts: float
    ss: float

    @property
    def quality(self) -> float:
        return (self.oss + self.cts + self.ss) / 3.0


@dataclass(frozen=True)
class Candidate:
    instance: int
    center: tuple[float, float]
    angle: float
    angle_index: int


@dataclass(frozen=True)
class WorldPose:
    xyz: tuple[float, float, float]
    yaw: float
    width: float


@dataclass(frozen=True)
class GraspPose:
    center: tuple[float, float]
    angle: float
    width: float
    quality: float
    instance: int
    valid: bool
    angle_index: int = 0
    breakdown: QualityBreakdown | None = None
    widths: Widths | None = None
    sample_center: tuple[float, float] | None = None
    world: WorldPose | None = None
    reason: str = ""

    def to_dict(self, rect: GraspRectSpec | None = None) -> dict:
        doc = {
            "valid": self.valid,
            "center_px": [self.center[0], self.center[1]],
            "angle_rad": self.angle,
            "width_px": self.width,
            "width_m": self.world.width if self.world else None,
            "quality": self.quality,
            "breakdown": (
                {"oss": self.breakdown.oss, "cts": self.breakdown.cts, "ss": self.breakdown.ss}
                if self.breakdown
                else None
            ),
            "instance": self.instance,
            "world": (
                {"xyz_m": list(self.world.xyz), "yaw_rad": self.world.yaw} if self.world else None
            ),
            "angle_index": self.angle_index,
            "sample_center_px": list(self.sample_center) if self.sample_center else None,
        }
        if self.widths:
            doc["widths_px"] = {
                "object": self.widths.object_width,
                "free_left": self.widths.fsl_width,
                "free_right": self.widths.fsr_width,
            }
        if rect is not None:
            doc["rect_px"] = [rect.gw, rect.gb]
        if self.reason:
            doc["reason"] = self.reason
        return doc


@dataclass
class PlanResult:
    best: GraspPose | None
    candidates: list[GraspPose] = field(default_factory=list)

    @property
    def found(self) -> bool:
        return self.best is not None


def sample_candidates(lm: InstanceLabelMap, rect: GraspRectSpec) -> list[Candidate]:
    angles = rect.angles()
    out = []
    for rec in instance_records(lm):
        for k, theta in enumerate(angles):
            out.append(Candidate(rec.id, rec.centroid, theta, k))
    return out


def identify_subsectors(crop: AlignedCrop | np.ndarray, target: int) -> SubsectorMap:
    if target == 0:
        raise PlanningError("target instance id must be nonzero")
    px = crop.pixels if isinstance(crop, AlignedCrop) else np.asarray(crop)
    sectors = np.full(px.shape, Sector.CL, dtype=np.uint8)
    sectors[px == 0] = Sector.UO
    sectors[px == target] = Sector.TC
    return SubsectorMap(sectors, int(target))


def _free_runs(sub: SubsectorMap):
    """Per contact row: (row, first TC col, last TC col, left run, right run)."""
    sec = sub.sectors
    gw = sec.shape[1]
    rows = []
    for r in range(sec.shape[0]):
        cols = np.flatnonzero(sec[r] == Sector.TC)
        if cols.size == 0:
            continue
        lo, hi = int(cols[0]), int(cols[-1])
        left = 0
        while lo - 1 - left >= 0 and sec[r, lo - 1 - left] == Sector.UO:
            left += 1
        right = 0
        while hi + 1 + right < gw and sec[r, hi + 1 + right] == Sector.UO:
            right += 1
        rows.append((r, lo, hi, left, right))
    return rows


def measure_widths(sub: SubsectorMap) -> Widths:
    """Object extent and the narrowest free run beside it, along the closing axis.

    Rows without contact cells are ignored. The free run on each side is the
    background stretch that touches the object's outermost contact cell.
    """
    rows = _free_runs(sub)
    if not rows:
        raise PlanningError("empty contact sector")
    return Widths(
        object_width=max(hi - lo + 1 for _, lo, hi, _, _ in rows),
        fsl_width=min(left for *_, left, _ in rows),
        fsr_width=min(right for *_, right in rows),
    )


def passes_filtration(widths: Widths, max_opening_px: float, finger_px: float) -> bool:
    return (
        widths.fsl_width > finger_px
        and widths.fsr_width > finger_px
        and widths.object_width < max_opening_px
    )


def gripper_limits_px(gripper: GripperSpec, cam: CameraModel, depth: float | None = None) -> tuple[float, float]:
    return (
        camgeom.meters_to_pixels(cam, gripper.max_opening, depth),
        camgeom.meters_to_pixels(cam, gripper.finger_width, depth),
    )


def filter_pose(widths: Widths, gripper: GripperSpec, cam: CameraModel, depth: float | None = None) -> bool:
    return passes_filtration(widths, *gripper_limits_px(gripper, cam, depth))


def finetune_pose(sub: SubsectorMap, crop: AlignedCrop) -> tuple[tuple[float, float], float]:
    """Re-center on the contact sector; width = right minus left free-region centroid."""
    tv, tu = np.nonzero(sub.sectors == Sector.TC)
    if tu.size == 0:
        raise PlanningError("empty contact sector")
    col = int(tu.sum()) / tu.size
    row = int(tv.sum()) / tv.size
    new_center = crop.to_image(col, row)

    left_cols, right_cols = [], []
    for _, lo, hi, left, right in _free_runs(sub):
        left_cols.extend(range(lo - left, lo))
        right_cols.extend(range(hi + 1, hi + 1 + right))
    if not left_cols or not right_cols:
        raise PlanningError("free region empty on one side; pose should not have passed filtration")
    width = sum(right_cols) / len(right_cols) - sum(left_cols) / len(left_cols)
    return new_center, width


def central_region(gw: int, gb: int) -> tuple[slice, slice]:
    """Rows/cols of the centered ceil(gw/2) x ceil(gb/2) box used for contact scoring."""
    cw, ch = -(-gw // 2), -(-gb // 2)
    c0, r0 = (gw - cw) // 2, (gb - ch) // 2
    return slice(r0, r0 + ch), slice(c0, c0 + cw)


def score_pose(sub: SubsectorMap, confidence: float, rect: GraspRectSpec | None = None) -> QualityBreakdown:
    sec = sub.sectors
    gb, gw = sec.shape
    if rect is not None and (rect.gw, rect.gb) != (gw, gb):
        raise PlanningError("subsector map does not match the grasp rectangle")
    oss = 100.0 * int(np.count_nonzero(sec == Sector.UO)) / (gw * gb)
    rows, cols = central_region(gw, gb)
    centre = sec[rows, cols]
    cts = 100.0 * int(np.count_nonzero(centre == Sector.TC)) / centre.size
    ss = 100.0 * float(confidence)
    return QualityBreakdown(oss, cts, ss)


def _resolve_depth(depth, center) -> float | None:
    if depth is None:
        return None
    if np.isscalar(depth):
        z = float(depth)
    else:
        dm = np.asarray(depth)
        u = min(max(int(math.floor(center[0] + 0.5)), 0), dm.shape[1] - 1)
        v = min(max(int(math.floor(center[1] + 0.5)), 0), dm.shape[0] - 1)
        z = float(dm[v, u])
    return z if z > 0 and math.isfinite(z) else None


def evaluate_candidate(
    lm: InstanceLabelMap,
    cand: Candidate,
    rect: GraspRectSpec,
    gripper: GripperSpec,
    cam: CameraModel,
    depth=None,
) -> GraspPose:
    """Run crop, sectoring, filtration, finetuning and scoring for one candidate."""
    crop = camgeom.crop_aligned_rect(lm, cand.center, cand.angle, rect.gw, rect.gb)
    sub = identify_subsectors(crop, cand.instance)
    base = dict(
        center=cand.center,
        angle=cand.angle,
        width=float(rect.gw),
        quality=0.0,
        instance=cand.instance,
        angle_index=cand.angle_index,
        sample_center=cand.center,
    )
    try:
        widths = measure_widths(sub)
    except PlanningError as exc:
        return GraspPose(valid=False, reason=str(exc), **base)
    z = _resolve_depth(depth, cand.center)
    opening_px, finger_px = gripper_limits_px(gripper, cam, z)
    if not passes_filtration(widths, opening_px, finger_px):
        reason = "object wider than gripper opening" if widths.object_width >= opening_px else "insufficient finger clearance"
        return GraspPose(valid=False, widths=widths, reason=reason, **base)

    center, width = finetune_pose(sub, crop)
    breakdown = score_pose(sub, lm.scores[cand.instance], rect)
    z = _resolve_depth(depth, center)
    world = WorldPose(
        xyz=tuple(float(x) for x in camgeom.pixel_to_world(cam, center[0], center[1], z)),
        yaw=camgeom.image_yaw_to_world(cam, center[0], center[1], cand.angle, z),
        width=camgeom.pixels_to_meters(cam, width, z),
    )
    base.update(center=center, width=width, quality=breakdown.quality)
    return GraspPose(valid=True, breakdown=breakdown, widths=widths, world=world, **base)


def select_best(poses: Sequence[GraspPose]) -> GraspPose | None:
    """Highest quality; ties go to the lower instance id, then lower angle index."""
    valid = [p for p in poses if p.valid]
    if not valid:
        return None
    return min(valid, key=lambda p: (-p.quality, p.instance, p.angle_index))


def plan(
    lm: InstanceLabelMap,
    rect: GraspRectSpec,
    gripper: GripperSpec,
    cam: CameraModel,
    depth=None,
) -> PlanResult:
    """Evaluate every sampled candidate and pick the best valid grasp.

    ``depth`` overrides the camera's nominal depth, either as one value in
    meters or as a per-pixel map indexed ``[v, u]``.
    """
    poses = [evaluate_candidate(lm, c, rect, gripper, cam, depth) for c in sample_candidates(lm, rect)]
    return PlanResult(select_best(poses), poses)
