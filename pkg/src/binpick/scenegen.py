"""Procedural top-down bin scenes with exact instance ground truth.

Shapes are painted back to front, so paint order doubles as depth order
and later shapes occlude earlier ones. All randomness comes from numpy's
PCG64 bit generator seeded with the scene seed; output for a given
``(config, seed)`` is stable across platforms.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np
from scipy import ndimage

from .maskio import GroundTruthScene, InstanceLabelMap

SHAPE_KINDS = ("rectangle", "ellipse", "capsule")

# rejected draws per object before giving up on it
MAX_ATTEMPTS = 50


@dataclass(frozen=True)
class SceneConfig:
    width: int = 160
    height: int = 160
    n_objects: tuple[int, int] = (1, 20)
    shape_kinds: tuple[str, ...] = SHAPE_KINDS
    size_range: tuple[float, float] = (10.0, 30.0)
    seed: int = 0
    bin_margin: int = 8

    def __post_init__(self):
        lo, hi = (int(x) for x in self.n_objects)
        smin, smax = (float(x) for x in self.size_range)
        object.__setattr__(self, "n_objects", (lo, hi))
        object.__setattr__(self, "size_range", (smin, smax))
        object.__setattr__(self, "shape_kinds", tuple(self.shape_kinds))
        if self.width < 1 or self.height < 1:
            raise ValueError("scene dimensions must be positive")
        if not 1 <= lo <= hi:
            raise ValueError(f"n_objects must satisfy 1 <= lo <= hi, got {self.n_objects}")
        if not 0 < smin <= smax:
            raise ValueError("size_range must be positive and ordered")
        if not self.shape_kinds or any(k not in SHAPE_KINDS for k in self.shape_kinds):
            raise ValueError(f"shape_kinds must be a non-empty subset of {SHAPE_KINDS}")
        if not 0 <= self.bin_margin < min(self.width, self.height) / 2:
            raise ValueError("bin_margin must be below half the smaller scene dimension")

    @classmethod
    def from_dict(cls, doc: dict) -> "SceneConfig":
        known = {k: v for k, v in doc.items() if k in cls.__dataclass_fields__}
        for key in ("n_objects", "size_range", "shape_kinds"):
            if key in known:
                known[key] = tuple(known[key])
        return cls(**known)

    @classmethod
    def load(cls, path: str | Path) -> "SceneConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("n_objects", "size_range", "shape_kinds"):
            d[key] = list(d[key])
        return d


def _rasterize(kind: str, cu: float, cv: float, a: float, b: float, theta: float, shape) -> np.ndarray:
    """Boolean mask of a shape with half-extents ``a`` (along theta) and ``b``."""
    h, w = shape
    vv, uu = np.mgrid[0:h, 0:w].astype(float)
    du, dv = uu - cu, vv - cv
    c, s = np.cos(theta), np.sin(theta)
    x = du * c + dv * s
    y = -du * s + dv * c
    if kind == "rectangle":
        m = (np.abs(x) <= a) & (np.abs(y) <= b)
    elif kind == "ellipse":
        m = (x / a) ** 2 + (y / b) ** 2 <= 1.0
    else:  # capsule: segment of half-length a-b, radius b
        half = max(a - b, 0.0)
        xc = np.clip(x, -half, half)
        m = (x - xc) ** 2 + y**2 <= b * b
    m[int(round(cv)), int(round(cu))] = True
    return m


def generate(cfg: SceneConfig) -> GroundTruthScene:
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    lo, hi = cfg.n_objects
    n = int(rng.integers(lo, hi + 1))
    h, w, m = cfg.height, cfg.width, cfg.bin_margin
    inner = np.zeros((h, w), dtype=bool)
    inner[m : h - m, m : w - m] = True
    smin, smax = cfg.size_range

    labels = np.zeros((h, w), dtype=np.uint16)
    placed = 0
    for _ in range(n):
        for _attempt in range(MAX_ATTEMPTS):
            kind = cfg.shape_kinds[int(rng.integers(len(cfg.shape_kinds)))]
            length = rng.uniform(smin, smax)
            breadth = rng.uniform(smin, length)
            cu = rng.uniform(m, w - m - 1)
            cv = rng.uniform(m, h - m - 1)
            theta = rng.uniform(0.0, np.pi)
            mask = _rasterize(kind, cu, cv, length / 2, breadth / 2, theta, (h, w)) & inner
            trial = labels.copy()
            trial[mask] = placed + 1
            # reject draws that bury an earlier object completely
            if placed and np.count_nonzero(np.bincount(trial.ravel(), minlength=placed + 2)[1 : placed + 1]) < placed:
                continue
            labels = trial
            placed += 1
            break
    return GroundTruthScene.from_labels(_compact_ids(labels))


def _compact_ids(labels: np.ndarray) -> np.ndarray:
    ids = [int(i) for i in np.unique(labels) if i != 0]
    lut = np.zeros(int(labels.max(initial=0)) + 1, dtype=np.uint16)
    for new, old in enumerate(ids, start=1):
        lut[old] = new
    return lut[labels]


def perturb_scores(
    scene: GroundTruthScene | InstanceLabelMap,
    noise: float,
    seed: int,
    morph: bool = True,
) -> InstanceLabelMap:
    """Turn ground truth into imperfect predictions.

    Each instance gets confidence ``1 - u*noise``. With ``morph``, each
    instance is also eroded or dilated by one pixel with probability
    ``noise``; dilation only claims background and erosion never empties a
    mask.
    """
    if not 0.0 <= noise <= 1.0:
        raise ValueError("noise must lie in [0, 1]")
    lm = scene.labelmap if isinstance(scene, GroundTruthScene) else scene
    rng = np.random.Generator(np.random.PCG64(seed))
    labels = lm.labels.copy()
    scores = {}
    for iid in lm.ids:
        u, apply, op = rng.random(), rng.random(), rng.random()
        scores[iid] = 1.0 - u * noise
        if not morph or apply >= noise:
            continue
        mask = labels == iid
        if op < 0.5:
            eroded = ndimage.binary_erosion(mask)
            if eroded.any():
                labels[mask & ~eroded] = 0
        else:
            grown = ndimage.binary_dilation(mask) & (labels == 0)
            labels[grown] = iid
    return InstanceLabelMap(labels, scores)


def scene_seeds(seed: int, count: int) -> list[int]:
    """Independent 64-bit per-scene seeds derived from one master seed."""
    state = np.random.SeedSequence(seed).generate_state(count, dtype=np.uint64)
    return [int(s) for s in state]


def generate_many(cfg: SceneConfig, count: int, seed: int) -> list[tuple[int, GroundTruthScene]]:
    return [(s, generate(replace(cfg, seed=s))) for s in scene_seeds(seed, count)]
