"""Instance label maps and their on-disk format.

A scene is stored as two files sharing a stem:

* ``<stem>.labels.png`` -- single-channel 16-bit PNG, pixel value = instance id,
  0 = background.
* ``<stem>.scores.json`` -- ``{"scores": {"<id>": <confidence in [0, 1]>}}``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping

import numpy as np
from PIL import Image, UnidentifiedImageError

LABELS_SUFFIX = ".labels.png"
SCORES_SUFFIX = ".scores.json"


class LabelMapError(ValueError):
    """Raised when a label map or its sidecar violates the format."""


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=np.uint16, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class InstanceLabelMap:
    """Per-pixel instance ids plus per-instance confidence.

    ``labels`` is indexed ``[row, col]`` (``v``, ``u``). The array is stored
    read-only; build a new map rather than mutating one.
    """

    labels: np.ndarray
    scores: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self):
        labels = np.asarray(self.labels)
        if labels.ndim != 2:
            raise LabelMapError(f"labels must be 2-D, got shape {labels.shape}")
        if labels.shape[0] < 1 or labels.shape[1] < 1:
            raise LabelMapError("label map must be at least 1x1")
        if labels.size and (labels.min() < 0 or labels.max() > 65535):
            raise LabelMapError("instance ids must fit in 16 bits")
        if not np.issubdtype(labels.dtype, np.integer):
            if not np.array_equal(labels, np.round(labels)):
                raise LabelMapError("instance ids must be integers")
        labels = _freeze(labels)

        scores = {}
        for key, value in dict(self.scores).items():
            iid = int(key)
            conf = float(value)
            if iid == 0:
                raise LabelMapError("background id 0 cannot carry a score")
            if not (0.0 <= conf <= 1.0) or math.isnan(conf):
                raise LabelMapError(f"confidence {conf!r} for instance {iid} outside [0, 1]")
            scores[iid] = conf

        present = {int(i) for i in np.unique(labels) if i != 0}
        unscored = sorted(present - scores.keys())
        if unscored:
            raise LabelMapError(f"unscored instance {unscored[0]}")
        missing = sorted(scores.keys() - present)
        if missing:
            raise LabelMapError(f"scored instance {missing[0]} absent from labels")

        object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "scores", dict(sorted(scores.items())))

    @property
    def height(self) -> int:
        return int(self.labels.shape[0])

    @property
    def width(self) -> int:
        return int(self.labels.shape[1])

    @property
    def ids(self) -> list[int]:
        return list(self.scores.keys())

    def mask(self, iid: int) -> np.ndarray:
        return self.labels == iid

    def with_scores(self, scores: Mapping[int, float]) -> "InstanceLabelMap":
        return InstanceLabelMap(self.labels, scores)

    def __eq__(self, other):
        if not isinstance(other, InstanceLabelMap):
            return NotImplemented
        return (
            self.labels.shape == other.labels.shape
            and np.array_equal(self.labels, other.labels)
            and self.scores == other.scores
        )

    __hash__ = None


@dataclass(frozen=True)
class InstanceRecord:
    id: int
    centroid: tuple[float, float]  # (u, v) pixel coords
    area: int


@dataclass(frozen=True)
class GroundTruthScene:
    labelmap: InstanceLabelMap
    instances: tuple[InstanceRecord, ...]

    @classmethod
    def from_labels(cls, labels: np.ndarray) -> "GroundTruthScene":
        """Build a ground-truth scene with unit scores and recounted records.

        Ids must already be consecutive from 1.
        """
        labels = np.asarray(labels)
        ids = [int(i) for i in np.unique(labels) if i != 0]
        if ids != list(range(1, len(ids) + 1)):
            raise LabelMapError(f"ground-truth ids must be consecutive from 1, got {ids}")
        lm = InstanceLabelMap(labels, {i: 1.0 for i in ids})
        return cls(lm, tuple(instance_records(lm)))


def instance_records(lm: InstanceLabelMap) -> list[InstanceRecord]:
    records = []
    for iid in lm.ids:
        vs, us = np.nonzero(lm.labels == iid)
        n = len(us)
        # integer sums keep the centroid exactly rounded
        cu = int(us.sum(dtype=np.int64)) / n
        cv = int(vs.sum(dtype=np.int64)) / n
        records.append(InstanceRecord(iid, (cu, cv), n))
    return records


def scene_paths(directory: str | Path, stem: str) -> tuple[Path, Path]:
    d = Path(directory)
    return d / f"{stem}{LABELS_SUFFIX}", d / f"{stem}{SCORES_SUFFIX}"


def list_stems(directory: str | Path) -> list[str]:
    d = Path(directory)
    return sorted(p.name[: -len(LABELS_SUFFIX)] for p in d.glob(f"*{LABELS_SUFFIX}"))


def read_labels_png(path: str | Path) -> np.ndarray:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"labels file not found: {path}")
    try:
        with Image.open(path) as im:
            im.load()
            if im.mode not in ("I;16", "I;16B", "I;16L", "L", "I"):
                raise LabelMapError(f"{path}: expected single-channel 16-bit raster, got mode {im.mode}")
            arr = np.array(im)
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise LabelMapError(f"{path}: malformed raster ({exc})") from exc
    if arr.ndim != 2:
        raise LabelMapError(f"{path}: expected a single channel")
    if arr.min(initial=0) < 0 or arr.max(initial=0) > 65535:
        raise LabelMapError(f"{path}: pixel values outside 16-bit range")
    return arr.astype(np.uint16)


def write_labels_png(labels: np.ndarray, path: str | Path) -> None:
    Image.fromarray(np.ascontiguousarray(labels, dtype=np.uint16)).save(Path(path), format="PNG")


def read_scores_json(path: str | Path) -> dict[int, float]:
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"scores file not found: {path}")
    try:
        doc = json.loads(path.read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise LabelMapError(f"{path}: malformed scores document ({exc})") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("scores"), dict):
        raise LabelMapError(f'{path}: expected {{"scores": {{...}}}}')
    scores = {}
    for key, value in doc["scores"].items():
        try:
            iid = int(key)
        except ValueError:
            raise LabelMapError(f"{path}: instance key {key!r} is not an integer") from None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise LabelMapError(f"{path}: confidence for {key} is not a number")
        scores[iid] = float(value)
    return scores


def load_label_map(labels_path: str | Path, scores_path: str | Path) -> InstanceLabelMap:
    labels = read_labels_png(labels_path)
    scores = read_scores_json(scores_path)
    return InstanceLabelMap(labels, scores)


def save_label_map(lm: InstanceLabelMap, labels_path: str | Path, scores_path: str | Path) -> None:
    write_labels_png(lm.labels, labels_path)
    # repr() round-trips doubles exactly through json
    doc = {"scores": {str(k): v for k, v in lm.scores.items()}}
    Path(scores_path).write_text(json.dumps(doc, indent=1) + "\n", encoding="utf-8")


def load_scene(directory: str | Path, stem: str) -> InstanceLabelMap:
    return load_label_map(*scene_paths(directory, stem))


def save_scene(lm: InstanceLabelMap, directory: str | Path, stem: str) -> None:
    save_label_map(lm, *scene_paths(directory, stem))
