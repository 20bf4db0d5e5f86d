"""Vector-design data model and deterministic geometry primitives.

Coordinate convention used everywhere in this package: continuous canvas
units, top-left origin, y grows downward. The same convention indexes
raster grids, so box (x, y, w, h) maps onto grid rows/columns without
axis flips.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from .errors import InvalidDesign, OversizedElement

MAX_ELEMENTS = 64


class ElementKind(Enum):
    TITLE = "title"
    BODY_TEXT = "body_text"
    IMAGE = "image"
    FACE = "face"
    LOGO = "logo"
    SHAPE = "shape"


class DesignClass(Enum):
    AD = "ad"
    INFOGRAPHIC = "infographic"
    MOBILE_UI = "mobile_ui"
    MOVIE_POSTER = "movie_poster"
    WEBPAGE = "webpage"
    NATURAL_IMAGE = "natural_image"


@dataclass(frozen=True)
class BBox:
    """Axis-aligned rectangle in canvas units."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self) -> None:
        for name in ("x", "y", "w", "h"):
            v = getattr(self, name)
            if isinstance(v, bool) or not isinstance(v, (int, float)) or not math.isfinite(v):
                raise InvalidDesign(f"bbox.{name} must be finite, got {v!r}")
            object.__setattr__(self, name, float(v))
        if self.w <= 0 or self.h <= 0:
            raise InvalidDesign(f"bbox must have positive size, got w={self.w}, h={self.h}")

    @property
    def area(self) -> float:
        return self.w * self.h

    @property
    def cx(self) -> float:
        return self.x + self.w / 2

    @property
    def cy(self) -> float:
        return self.y + self.h / 2

    @property
    def aspect(self) -> float:
        return self.w / self.h


@dataclass(frozen=True)
class Element:
    id: str
    kind: ElementKind
    bbox: BBox
    z: int
    label: str | None = None

    def __post_init__(self) -> None:
        if not self.id:
            raise InvalidDesign("element id must be a nonempty string")


@dataclass(frozen=True)
class VectorDesign:
    canvas_w: float
    canvas_h: float
    elements: tuple[Element, ...]
    design_class: DesignClass | None = None

    def __post_init__(self) -> None:
        if self.canvas_w <= 0 or self.canvas_h <= 0:
            raise InvalidDesign("canvas dimensions must be positive")
        object.__setattr__(self, "canvas_w", float(self.canvas_w))
        object.__setattr__(self, "canvas_h", float(self.canvas_h))
        if not isinstance(self.elements, tuple):
            object.__setattr__(self, "elements", tuple(self.elements))
        n = len(self.elements)
        if not 1 <= n <= MAX_ELEMENTS:
            raise InvalidDesign(f"designs must have 1..{MAX_ELEMENTS} elements, got {n}")
        ids = [e.id for e in self.elements]
        if len(set(ids)) != n:
            raise InvalidDesign("element ids must be unique within a design")
        zs = [e.z for e in self.elements]
        if len(set(zs)) != n:
            raise InvalidDesign("element z indices must be distinct (total layer order)")
        for e in self.elements:
            b = e.bbox
            if b.x >= self.canvas_w or b.x + b.w <= 0 or b.y >= self.canvas_h or b.y + b.h <= 0:
                raise InvalidDesign(f"element {e.id!r} does not intersect the canvas")

    @property
    def canvas_area(self) -> float:
        return self.canvas_w * self.canvas_h

    def element(self, element_id: str) -> Element:
        for e in self.elements:
            if e.id == element_id:
                return e
        raise KeyError(element_id)

    def replace_elements(self, elements: tuple[Element, ...]) -> "VectorDesign":
        return VectorDesign(self.canvas_w, self.canvas_h, elements, self.design_class)


def overlap_area(a: BBox, b: BBox) -> float:
    """Area of the rectangle intersection of two boxes; 0 when disjoint."""
    dx = min(a.x + a.w, b.x + b.w) - max(a.x, b.x)
    dy = min(a.y + a.h, b.y + b.h) - max(a.y, b.y)
    if dx <= 0 or dy <= 0:
        return 0.0
    return dx * dy


def clamp_to_canvas(bbox: BBox, design: VectorDesign) -> BBox:
    """Translate a box by the minimal amount so it lies fully on the canvas.

    Size is never changed; raises OversizedElement when the box cannot fit.
    """
    if bbox.w > design.canvas_w or bbox.h > design.canvas_h:
        raise OversizedElement(
            f"element {bbox.w}x{bbox.h} exceeds canvas {design.canvas_w}x{design.canvas_h}"
        )
    x = min(max(bbox.x, 0.0), design.canvas_w - bbox.w)
    y = min(max(bbox.y, 0.0), design.canvas_h - bbox.h)
    return BBox(x, y, bbox.w, bbox.h)


def cell_span(
    bbox: BBox, grid_w: int, grid_h: int, canvas_w: float, canvas_h: float
) -> tuple[int, int, int, int]:
    """Half-open grid index ranges (x0, x1, y0, y1) of cells whose centers
    fall inside the box. Cell (i, j) has its center at
    ((i + 0.5) * canvas_w / grid_w, (j + 0.5) * canvas_h / grid_h); a center
    exactly on the left/top edge is inside, on the right/bottom edge outside.
    """
    sx = grid_w / canvas_w
    sy = grid_h / canvas_h
    x0 = max(0, math.ceil(bbox.x * sx - 0.5))
    x1 = min(grid_w, math.ceil((bbox.x + bbox.w) * sx - 0.5))
    y0 = max(0, math.ceil(bbox.y * sy - 0.5))
    y1 = min(grid_h, math.ceil((bbox.y + bbox.h) * sy - 0.5))
    return x0, max(x0, x1), y0, max(y0, y1)


def rasterize_mask(element: Element, grid_w: int, grid_h: int, design: VectorDesign) -> np.ndarray:
    """Binary occupancy mask of an element on a grid_h x grid_w grid.

    A cell is 1 iff its center lies inside the element bbox mapped to grid
    coordinates (see cell_span for the boundary rule).
    """
    if grid_w < 1 or grid_h < 1:
        raise ValueError("grid dimensions must be >= 1")
    x0, x1, y0, y1 = cell_span(element.bbox, grid_w, grid_h, design.canvas_w, design.canvas_h)
    mask = np.zeros((grid_h, grid_w), dtype=np.uint8)
    mask[y0:y1, x0:x1] = 1
    return mask


# --- canonical JSON serialization ---------------------------------------

_DESIGN_KEYS = {"canvas", "class", "elements"}
_ELEMENT_KEYS = {"id", "kind", "bbox", "z", "label"}
_BBOX_KEYS = {"x", "y", "w", "h"}
_CANVAS_KEYS = {"w", "h"}


def _require(obj: dict, key: str, where: str):
    if key not in obj:
        raise InvalidDesign(f"missing field {key!r} in {where}")
    return obj[key]


def _check_unknown(obj: dict, allowed: set[str], where: str, strict: bool) -> None:
    if strict:
        extra = set(obj) - allowed
        if extra:
            raise InvalidDesign(f"unknown field(s) {sorted(extra)} in {where}")


def _as_number(v, where: str) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InvalidDesign(f"{where} must be a number, got {v!r}")
    return float(v)


def _parse_bbox(obj, where: str, strict: bool) -> BBox:
    if not isinstance(obj, dict):
        raise InvalidDesign(f"{where} must be an object")
    _check_unknown(obj, _BBOX_KEYS, where, strict)
    return BBox(*(_as_number(_require(obj, k, where), f"{where}.{k}") for k in ("x", "y", "w", "h")))


def _parse_element(obj, idx: int, strict: bool) -> Element:
    where = f"elements[{idx}]"
    if not isinstance(obj, dict):
        raise InvalidDesign(f"{where} must be an object")
    _check_unknown(obj, _ELEMENT_KEYS, where, strict)
    eid = _require(obj, "id", where)
    if not isinstance(eid, str):
        raise InvalidDesign(f"{where}.id must be a string")
    kind_raw = _require(obj, "kind", where)
    try:
        kind = ElementKind(kind_raw)
    except ValueError:
        raise InvalidDesign(f"{where}.kind: unknown element kind {kind_raw!r}") from None
    z = _require(obj, "z", where)
    if isinstance(z, bool) or not isinstance(z, int):
        raise InvalidDesign(f"{where}.z must be an integer")
    label = obj.get("label")
    if label is not None and not isinstance(label, str):
        raise InvalidDesign(f"{where}.label must be a string")
    return Element(eid, kind, _parse_bbox(_require(obj, "bbox", where), f"{where}.bbox", strict), z, label)


def design_from_dict(obj: dict, strict: bool = True) -> VectorDesign:
    """Parse the design JSON schema:
    {canvas:{w,h}, class?, elements:[{id,kind,bbox:{x,y,w,h},z,label?}]}.

    In strict mode unknown fields are rejected; in lenient mode ignored.
    """
    if not isinstance(obj, dict):
        raise InvalidDesign("design must be a JSON object")
    _check_unknown(obj, _DESIGN_KEYS, "design", strict)
    canvas = _require(obj, "canvas", "design")
    if not isinstance(canvas, dict):
        raise InvalidDesign("design.canvas must be an object")
    _check_unknown(canvas, _CANVAS_KEYS, "design.canvas", strict)
    cw = _as_number(_require(canvas, "w", "design.canvas"), "canvas.w")
    ch = _as_number(_require(canvas, "h", "design.canvas"), "canvas.h")
    cls = None
    if obj.get("class") is not None:
        try:
            cls = DesignClass(obj["class"])
        except ValueError:
            raise InvalidDesign(f"unknown design class {obj['class']!r}") from None
    elements_raw = _require(obj, "elements", "design")
    if not isinstance(elements_raw, list):
        raise InvalidDesign("design.elements must be an array")
    elements = tuple(_parse_element(e, i, strict) for i, e in enumerate(elements_raw))
    return VectorDesign(cw, ch, elements, cls)


def design_from_json(text: str, strict: bool = True) -> VectorDesign:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InvalidDesign(f"invalid JSON: {exc}") from None
    return design_from_dict(obj, strict=strict)


def design_to_dict(design: VectorDesign) -> dict:
    out: dict = {"canvas": {"w": design.canvas_w, "h": design.canvas_h}}
    if design.design_class is not None:
        out["class"] = design.design_class.value
    out["elements"] = []
    for e in design.elements:
        el: dict = {
            "id": e.id,
            "kind": e.kind.value,
            "bbox": {"x": e.bbox.x, "y": e.bbox.y, "w": e.bbox.w, "h": e.bbox.h},
            "z": e.z,
        }
        if e.label is not None:
            el["label"] = e.label
        out["elements"].append(el)
    return out


def design_to_json(design: VectorDesign) -> str:
    """Canonical serialization: sorted keys, no whitespace, element order kept."""
    return json.dumps(design_to_dict(design), sort_keys=True, separators=(",", ":"))
