"""Static figures: instance overlays with grasp rectangles, and PR curves."""

from __future__ import annotations

import colorsys
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.patches import Polygon  # noqa: E402

from . import camgeom  # noqa: E402
from .planner import Sector, identify_subsectors  # noqa: E402

# green / white / red, as in the usual subsector illustrations
SECTOR_RGB = {
    Sector.TC: (0.10, 0.75, 0.20),
    Sector.UO: (1.00, 1.00, 1.00),
    Sector.CL: (0.90, 0.10, 0.10),
}

plt.rcParams.update(
    {
        "figure.dpi": 100,
        "savefig.dpi": 100,
        "font.size": 9,
        "axes.titlesize": 10,
        "svg.hashsalt": "binpick",
    }
)


def instance_color(iid: int) -> tuple[int, int, int]:
    """Deterministic, well-spread RGB color for an instance id (golden-ratio hue walk)."""
    hue = (iid * 0.618033988749895) % 1.0
    sat = 0.65 + 0.3 * ((iid * 7) % 3) / 2
    val = 0.95 - 0.25 * ((iid * 5) % 4) / 3
    r, g, b = colorsys.hsv_to_rgb(hue, sat, val)
    return int(round(r * 255)), int(round(g * 255)), int(round(b * 255))


def colorize(labels: np.ndarray, background: np.ndarray | None = None, alpha: float = 1.0) -> np.ndarray:
    """RGB uint8 overlay. Background pixels keep ``background`` (black if absent)."""
    labels = np.asarray(labels)
    h, w = labels.shape
    base = np.zeros((h, w, 3), dtype=np.uint8) if background is None else np.asarray(background, dtype=np.uint8).copy()
    if base.ndim == 2:
        base = np.repeat(base[..., None], 3, axis=2)
    if base.shape[:2] != (h, w):
        raise ValueError("background image does not match the label map size")
    out = base.copy()
    for iid in np.unique(labels):
        if iid == 0:
            continue
        m = labels == iid
        color = np.array(instance_color(int(iid)), dtype=float)
        out[m] = np.round(alpha * color + (1 - alpha) * base[m]).astype(np.uint8)
    return out


def sector_tint(labels: np.ndarray, center, angle: float, gw: int, gb: int, target: int, alpha: float = 0.45) -> np.ndarray:
    """RGBA layer coloring the image pixels sampled by the grasp crop by sector."""
    labels = np.asarray(labels)
    h, w = labels.shape
    crop = camgeom.crop_aligned_rect(labels, center, angle, gw, gb)
    sub = identify_subsectors(crop, target)
    u, v = camgeom.sample_points(center, angle, gw, gb)
    ui, vi = camgeom.nearest_index(u), camgeom.nearest_index(v)
    inside = (ui >= 0) & (ui < w) & (vi >= 0) & (vi < h)
    layer = np.zeros((h, w, 4))
    for sector, rgb in SECTOR_RGB.items():
        sel = inside & (sub.sectors == sector)
        layer[vi[sel], ui[sel]] = (*rgb, alpha)
    return layer


def draw_grasp(ax, labels: np.ndarray, pose: dict, gw: int, gb: int, tint: bool = True) -> None:
    """Draw the grasp rectangle, optional subsector tint, center and quality."""
    center = pose["center_px"]
    angle = float(pose["angle_rad"])
    sample_center = pose.get("sample_center_px") or center
    if tint and pose.get("instance"):
        ax.imshow(sector_tint(labels, sample_center, angle, gw, gb, int(pose["instance"])), interpolation="nearest")
    corners = camgeom.rect_corners(sample_center, angle, gw, gb)
    color = "yellow" if pose.get("valid") else "gray"
    ax.add_patch(Polygon(corners, closed=True, fill=False, edgecolor=color, linewidth=1.5))
    # jaw positions at the refined width
    c, s = camgeom.rotation_terms(angle)
    half = float(pose.get("width_px") or gw) / 2.0
    for sign in (-1, 1):
        ju, jv = center[0] + sign * half * c, center[1] + sign * half * s
        ax.plot([ju - gb / 2 * -s, ju + gb / 2 * -s], [jv - gb / 2 * c, jv + gb / 2 * c], color="cyan", linewidth=2)
    ax.plot([center[0]], [center[1]], marker="+", color="magenta", markersize=10, mew=2)
    ax.text(
        center[0],
        center[1] - gb / 2 - 3,
        f"Q={pose.get('quality', 0.0):.1f}",
        color="white",
        fontsize=8,
        ha="center",
        va="bottom",
        bbox={"facecolor": "black", "alpha": 0.6, "pad": 1, "edgecolor": "none"},
    )


def render_overlay(
    labels: np.ndarray,
    out_path: str | Path,
    pose: dict | None = None,
    rect: tuple[int, int] | None = None,
    background: np.ndarray | None = None,
    title: str | None = None,
) -> Path:
    labels = np.asarray(labels)
    h, w = labels.shape
    fig, ax = plt.subplots(figsize=(max(w / 80, 3), max(h / 80, 3)))
    ax.imshow(colorize(labels, background), interpolation="nearest")
    if pose is not None:
        gw, gb = rect or tuple(pose.get("rect_px") or (80, 24))
        draw_grasp(ax, labels, pose, int(gw), int(gb))
    ax.set_xlim(-0.5, w - 0.5)
    ax.set_ylim(h - 0.5, -0.5)
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, metadata={"Software": None})
    plt.close(fig)
    return out_path


def plot_pr_summary(report, out_path: str | Path) -> Path:
    """Interpolated precision vs recall per IoU threshold, plus AP/recall per threshold."""
    from .metrics import RECALL_POINTS

    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(9, 3.6))
    cmap = plt.get_cmap("viridis")
    n = max(len(report.per_threshold) - 1, 1)
    for k, t in enumerate(report.per_threshold):
        if t.precision_curve:
            ax1.plot(RECALL_POINTS, t.precision_curve, color=cmap(k / n), label=f"{t.iou:.2f}")
    ax1.set_xlabel("recall")
    ax1.set_ylabel("interpolated precision")
    ax1.set_xlim(0, 1)
    ax1.set_ylim(0, 1.02)
    ax1.legend(title="IoU", fontsize=6, ncol=2, loc="lower left")

    ious = [t.iou for t in report.per_threshold]
    ax2.plot(ious, [t.ap for t in report.per_threshold], "o-", label="AP")
    ax2.plot(ious, [t.recall for t in report.per_threshold], "s--", label="recall")
    ax2.set_xlabel("IoU threshold")
    ax2.set_ylim(-0.02, 1.02)
    ax2.set_title(f"AP={report.ap:.3f}  AR={report.ar:.3f}")
    ax2.legend(fontsize=8)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, metadata={"Software": None})
    plt.close(fig)
    return out_path
