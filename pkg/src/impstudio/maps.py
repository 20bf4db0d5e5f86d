"""Importance-map grid type, annotation aggregation, and evaluation metrics.

Maps hold per-cell importance in [0, 1]; unlike saliency distributions they
are absolute scores, so maps are max-normalized rather than sum-normalized.
KL is the exception: both maps are converted to probability distributions
(additive epsilon, then sum-normalization) before the divergence is taken,
following the usual saliency-benchmark convention.
"""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np
from PIL import Image

from .design import Element, VectorDesign, BBox, cell_span
from .errors import (
    ConstantTruth,
    DimensionMismatch,
    EmptyAnnotationSet,
    EmptyMask,
    ParseError,
)

KL_EPSILON = 1e-7


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class ImportanceMap:
    """w x h grid of importance values in [0, 1], row-major (values[y, x])."""

    w: int
    h: int
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.w < 1 or self.h < 1:
            raise ValueError("map dimensions must be >= 1")
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.h, self.w):
            raise DimensionMismatch(f"values shape {v.shape} != (h={self.h}, w={self.w})")
        if not np.all(np.isfinite(v)):
            raise ValueError("map values must be finite")
        if v.min() < 0.0 or v.max() > 1.0:
            raise ValueError("map values must lie in [0, 1]")
        object.__setattr__(self, "values", _freeze(v))

    @classmethod
    def from_array(cls, values: np.ndarray) -> "ImportanceMap":
        values = np.asarray(values, dtype=np.float64)
        h, w = values.shape
        return cls(w, h, values)

    def to_dict(self) -> dict:
        return {"w": self.w, "h": self.h, "values": [float(v) for v in self.values.ravel()]}

    @classmethod
    def from_dict(cls, obj: dict) -> "ImportanceMap":
        w, h = int(obj["w"]), int(obj["h"])
        values = np.asarray(obj["values"], dtype=np.float64)
        if values.size != w * h:
            raise DimensionMismatch(f"expected {w * h} values, got {values.size}")
        return cls(w, h, values.reshape(h, w))

    def to_png_bytes(self) -> bytes:
        """8-bit grayscale PNG, pixel = round(255 * value)."""
        img = Image.fromarray(np.round(self.values * 255.0).astype(np.uint8), mode="L")
        buf = io.BytesIO()
        img.save(buf, format="PNG")
        return buf.getvalue()


@dataclass(frozen=True)
class BinaryMask:
    w: int
    h: int
    bits: np.ndarray

    def __post_init__(self) -> None:
        b = np.asarray(self.bits, dtype=np.uint8)
        if b.shape != (self.h, self.w):
            raise DimensionMismatch(f"bits shape {b.shape} != (h={self.h}, w={self.w})")
        if not np.isin(b, (0, 1)).all():
            raise ValueError("mask bits must be 0 or 1")
        object.__setattr__(self, "bits", _freeze(b))

    @classmethod
    def from_array(cls, bits: np.ndarray) -> "BinaryMask":
        bits = np.asarray(bits, dtype=np.uint8)
        h, w = bits.shape
        return cls(w, h, bits)

    @property
    def popcount(self) -> int:
        return int(self.bits.sum())


@dataclass(frozen=True)
class AnnotationSet:
    design_id: str
    masks: tuple[BinaryMask, ...]
    sentinel_results: tuple[tuple[BinaryMask, BinaryMask], ...] = ()

    def __post_init__(self) -> None:
        if not self.masks:
            raise EmptyAnnotationSet(f"design {self.design_id!r} has no masks")
        dims = {(m.w, m.h) for m in self.masks}
        if len(dims) != 1:
            raise DimensionMismatch(f"masks of design {self.design_id!r} disagree on dimensions: {dims}")


@dataclass(frozen=True)
class MetricReport:
    r2: float
    rmse: float
    cc: float
    kl: float


@dataclass(frozen=True)
class GateResult:
    accepted: bool
    ious: tuple[float, ...]


def aggregate(masks: Sequence[BinaryMask]) -> ImportanceMap:
    """Per-cell fraction of annotators that marked the cell important."""
    if not masks:
        raise EmptyAnnotationSet("cannot aggregate zero masks")
    first = masks[0]
    for m in masks[1:]:
        if (m.w, m.h) != (first.w, first.h):
            raise DimensionMismatch(f"mask {m.w}x{m.h} != {first.w}x{first.h}")
    counts = np.zeros((first.h, first.w), dtype=np.int64)
    for m in masks:
        counts += m.bits
    return ImportanceMap(first.w, first.h, counts / len(masks))


def iou(a: BinaryMask, b: BinaryMask) -> float:
    """Intersection over union; 1.0 when both masks are empty."""
    if (a.w, a.h) != (b.w, b.h):
        raise DimensionMismatch(f"iou: {a.w}x{a.h} vs {b.w}x{b.h}")
    inter = int(np.logical_and(a.bits, b.bits).sum())
    union = int(np.logical_or(a.bits, b.bits).sum())
    if union == 0:
        return 1.0
    return inter / union


def sentinel_gate(
    results: Sequence[tuple[BinaryMask, BinaryMask]],
    iou_threshold: float = 0.6,
    pass_fraction: float = 2 / 3,
) -> GateResult:
    """Accept a participant iff strictly more than ``iou_threshold`` IoU was
    reached on at least ``pass_fraction`` of the sentinels.

    The fraction comparison is done exactly (passed/total as a rational) so
    2-of-3 passes the 2/3 default regardless of float rounding.
    """
    if not results:
        raise EmptyAnnotationSet("sentinel gate needs at least one sentinel result")
    ious = tuple(iou(annotated, truth) for annotated, truth in results)
    passed = sum(1 for v in ious if v > iou_threshold)
    accepted = Fraction(passed, len(ious)) >= Fraction(pass_fraction)
    return GateResult(accepted, ious)


def box_score(map_: ImportanceMap, bbox: BBox, design: VectorDesign) -> float:
    """Mean map value over the cells covered by a canvas-space box."""
    x0, x1, y0, y1 = cell_span(bbox, map_.w, map_.h, design.canvas_w, design.canvas_h)
    if x1 <= x0 or y1 <= y0:
        raise EmptyMask(f"box {bbox} rasterizes to zero cells at {map_.w}x{map_.h}")
    return float(map_.values[y0:y1, x0:x1].mean())


def element_score(map_: ImportanceMap, element: Element, design: VectorDesign) -> float:
    """Mean map value inside the element's rasterized mask."""
    return box_score(map_, element.bbox, design)


def region_stats(
    map_: ImportanceMap,
    face_boxes: Sequence[BBox],
    text_boxes: Sequence[BBox],
    design: VectorDesign,
) -> tuple[float | None, float | None]:
    """Mean importance over face boxes and over text boxes.

    An empty category yields None rather than zero.
    """

    def mean_over(boxes: Sequence[BBox]) -> float | None:
        if not boxes:
            return None
        return float(np.mean([box_score(map_, b, design) for b in boxes]))

    return mean_over(face_boxes), mean_over(text_boxes)


# --- evaluation metrics ---------------------------------------------------


def pearson_cc(prediction: np.ndarray, truth: np.ndarray) -> float:
    """Pearson correlation of the flattened arrays.

    Returns 0.0 when the prediction is constant (the truth being constant is
    the caller's ConstantTruth error).
    """
    p = prediction.ravel().astype(np.float64)
    t = truth.ravel().astype(np.float64)
    pd = p - p.mean()
    td = t - t.mean()
    denom = float(np.sqrt((pd * pd).sum() * (td * td).sum()))
    if denom == 0.0:
        return 0.0
    return float((pd * td).sum() / denom)


def rmse(prediction: np.ndarray, truth: np.ndarray) -> float:
    d = prediction.astype(np.float64) - truth.astype(np.float64)
    return float(np.sqrt((d * d).mean()))


def r_squared(prediction: np.ndarray, truth: np.ndarray) -> float:
    t = truth.astype(np.float64)
    p = prediction.astype(np.float64)
    ss_res = float(((t - p) ** 2).sum())
    ss_tot = float(((t - t.mean()) ** 2).sum())
    return 1.0 - ss_res / ss_tot


def kl_divergence(prediction: np.ndarray, truth: np.ndarray, eps: float = KL_EPSILON) -> float:
    """KL(truth || prediction) after eps-regularized sum-normalization."""
    q = prediction.astype(np.float64) + eps
    p = truth.astype(np.float64) + eps
    q /= q.sum()
    p /= p.sum()
    return float((p * np.log(p / q)).sum())


def bilinear_resample(values: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    """Resample a grid to a new size, sampling at output cell centers
    (half-pixel aligned, edge-clamped)."""
    in_h, in_w = values.shape
    xs = (np.arange(out_w) + 0.5) * in_w / out_w - 0.5
    ys = (np.arange(out_h) + 0.5) * in_h / out_h - 0.5
    x0 = np.clip(np.floor(xs).astype(int), 0, in_w - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    y1 = np.minimum(y0 + 1, in_h - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)
    fy = np.clip(ys - y0, 0.0, 1.0)
    top = values[np.ix_(y0, x0)] * (1 - fx) + values[np.ix_(y0, x1)] * fx
    bot = values[np.ix_(y1, x0)] * (1 - fx) + values[np.ix_(y1, x1)] * fx
    return top * (1 - fy[:, None]) + bot * fy[:, None]


def evaluate(prediction: ImportanceMap, ground_truth: ImportanceMap, strict: bool = False) -> MetricReport:
    """Standard distribution metrics of a predicted map against ground truth.

    Differently sized maps are bilinearly resampled to the truth's grid
    unless ``strict`` forbids it. The truth must not be constant (CC and R^2
    would be undefined).
    """
    pred = prediction.values
    if (prediction.w, prediction.h) != (ground_truth.w, ground_truth.h):
        if strict:
            raise DimensionMismatch(
                f"{prediction.w}x{prediction.h} vs {ground_truth.w}x{ground_truth.h} (strict mode)"
            )
        pred = np.clip(bilinear_resample(pred, ground_truth.w, ground_truth.h), 0.0, 1.0)
    truth = ground_truth.values
    if truth.max() == truth.min():
        raise ConstantTruth("ground truth map is constant")
    return MetricReport(
        r2=r_squared(pred, truth),
        rmse=rmse(pred, truth),
        cc=pearson_cc(pred, truth),
        kl=kl_divergence(pred, truth),
    )


# --- run-length-encoded mask lines ---------------------------------------


def mask_to_rle(mask: BinaryMask) -> list[int]:
    """Row-major run lengths, alternating values starting with zeros."""
    flat = mask.bits.ravel()
    runs: list[int] = []
    current = 0
    length = 0
    for bit in flat:
        if bit == current:
            length += 1
        else:
            runs.append(length)
            current = bit
            length = 1
    runs.append(length)
    return runs


def rle_to_mask(rle: Sequence[int], w: int, h: int) -> BinaryMask:
    total = sum(rle)
    if total != w * h:
        raise ParseError(f"rle covers {total} cells, expected {w * h}")
    if any((not isinstance(r, int)) or r < 0 for r in rle):
        raise ParseError("rle runs must be nonnegative integers")
    flat = np.zeros(w * h, dtype=np.uint8)
    pos = 0
    value = 0
    for run in rle:
        if value:
            flat[pos : pos + run] = 1
        pos += run
        value ^= 1
    return BinaryMask(w, h, flat.reshape(h, w))


def mask_line_to_json(design_id: str, participant_id: str, mask: BinaryMask, sentinel_id: str | None = None) -> str:
    """One JSON-lines record of the annotation import format."""
    obj: dict = {
        "design_id": design_id,
        "participant_id": participant_id,
        "w": mask.w,
        "h": mask.h,
        "rle": mask_to_rle(mask),
    }
    if sentinel_id is not None:
        obj["sentinel_id"] = sentinel_id
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
