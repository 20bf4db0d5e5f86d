"""Importance-rank-preserving reflow to a new canvas size.

Elements are ranked by their mean importance, a pre-authored template with
the same placeholder count and the closest aspect ratio is retrieved, and
the rank-k element is contain-fitted (centered, aspect preserved) into the
rank-k placeholder scaled to the target canvas.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .design import BBox, Element, VectorDesign
from .errors import CountMismatch, InvalidDesign, NoTemplateForCount
from .maps import ImportanceMap, element_score


@dataclass(frozen=True)
class Placeholder:
    bbox: BBox
    rank: int


@dataclass(frozen=True)
class Template:
    id: str
    canvas_w: float
    canvas_h: float
    placeholders: tuple[Placeholder, ...]

    def __post_init__(self) -> None:
        if self.canvas_w <= 0 or self.canvas_h <= 0:
            raise InvalidDesign(f"template {self.id!r}: canvas must be positive")
        n = len(self.placeholders)
        if n < 1:
            raise InvalidDesign(f"template {self.id!r} has no placeholders")
        if sorted(p.rank for p in self.placeholders) != list(range(1, n + 1)):
            raise InvalidDesign(f"template {self.id!r}: ranks must be a permutation of 1..{n}")

    @property
    def aspect(self) -> float:
        return self.canvas_w / self.canvas_h

    def by_rank(self, rank: int) -> Placeholder:
        for p in self.placeholders:
            if p.rank == rank:
                return p
        raise KeyError(rank)


@dataclass(frozen=True)
class TemplateLibrary:
    templates: tuple[Template, ...]

    def with_count(self, n: int) -> tuple[Template, ...]:
        return tuple(t for t in self.templates if len(t.placeholders) == n)

    @property
    def counts(self) -> tuple[int, ...]:
        return tuple(sorted({len(t.placeholders) for t in self.templates}))


def template_from_dict(obj: dict) -> Template:
    placeholders = tuple(
        Placeholder(
            BBox(float(p["bbox"]["x"]), float(p["bbox"]["y"]), float(p["bbox"]["w"]), float(p["bbox"]["h"])),
            int(p["rank"]),
        )
        for p in obj["placeholders"]
    )
    return Template(str(obj["id"]), float(obj["canvas"]["w"]), float(obj["canvas"]["h"]), placeholders)


def template_to_dict(t: Template) -> dict:
    return {
        "id": t.id,
        "canvas": {"w": t.canvas_w, "h": t.canvas_h},
        "placeholders": [
            {"bbox": {"x": p.bbox.x, "y": p.bbox.y, "w": p.bbox.w, "h": p.bbox.h}, "rank": p.rank}
            for p in t.placeholders
        ],
    }


def load_library(directory: str | Path | None = None) -> TemplateLibrary:
    """Load templates from a directory of JSON files, or the 14 shipped ones
    (element counts 2..8, one portrait and one landscape family each)."""
    if directory is None:
        root = resources.files("impstudio").joinpath("templates")
        texts = sorted(
            (entry.name, entry.read_text()) for entry in root.iterdir() if entry.name.endswith(".json")
        )
    else:
        texts = sorted((p.name, p.read_text()) for p in Path(directory).glob("*.json"))
    templates = tuple(template_from_dict(json.loads(text)) for _, text in texts)
    if not templates:
        raise NoTemplateForCount("template library is empty")
    return TemplateLibrary(templates)


def rank_elements(design: VectorDesign, map_: ImportanceMap) -> list[str]:
    """Element ids sorted by mean importance, descending; ties broken by
    ascending id so the ranking is deterministic."""
    scores = {e.id: element_score(map_, e, design) for e in design.elements}
    return sorted(scores, key=lambda eid: (-scores[eid], eid))


def retrieve_template(lib: TemplateLibrary, n: int, target_w: float, target_h: float) -> Template:
    """The template with n placeholders whose aspect ratio is closest (in
    log space) to the target; ties broken by template id order."""
    candidates = lib.with_count(n)
    if not candidates:
        raise NoTemplateForCount(f"no template with {n} placeholders (available: {lib.counts})")
    target_aspect = target_w / target_h
    return min(candidates, key=lambda t: (abs(math.log(t.aspect) - math.log(target_aspect)), t.id))


def _contain_fit(inner_w: float, inner_h: float, outer: BBox) -> BBox:
    scale = min(outer.w / inner_w, outer.h / inner_h)
    w = inner_w * scale
    h = inner_h * scale
    return BBox(outer.x + (outer.w - w) / 2, outer.y + (outer.h - h) / 2, w, h)


def apply_reflow(
    design: VectorDesign,
    map_: ImportanceMap,
    template: Template,
    target_w: float,
    target_h: float,
) -> VectorDesign:
    """Place the rank-k element of the design into the rank-k placeholder of
    the template, scaled to the target canvas. Elements keep their aspect
    ratio (contain-fit, centered); ids, kinds, and z order are preserved."""
    if len(template.placeholders) != len(design.elements):
        raise CountMismatch(
            f"template {template.id!r} has {len(template.placeholders)} placeholders, "
            f"design has {len(design.elements)} elements"
        )
    ranked = rank_elements(design, map_)
    sx = target_w / template.canvas_w
    sy = target_h / template.canvas_h
    placed: dict[str, BBox] = {}
    for rank, eid in enumerate(ranked, start=1):
        ph = template.by_rank(rank).bbox
        slot = BBox(ph.x * sx, ph.y * sy, ph.w * sx, ph.h * sy)
        e = design.element(eid)
        placed[eid] = _contain_fit(e.bbox.w, e.bbox.h, slot)
    elements = tuple(Element(e.id, e.kind, placed[e.id], e.z, e.label) for e in design.elements)
    return VectorDesign(target_w, target_h, elements, design.design_class)


def reflow_design(
    design: VectorDesign,
    map_: ImportanceMap,
    lib: TemplateLibrary,
    target_w: float,
    target_h: float,
    group_overflow: bool = False,
) -> VectorDesign:
    """Rank, retrieve, and apply in one step.

    With group_overflow, a design with more elements than any template is
    reduced by merging the lowest-ranked elements into one composite box;
    after placement the members are laid out inside the composite's slot by
    the same uniform transform, so their relative arrangement survives.
    """
    n = len(design.elements)
    if not lib.with_count(n) and group_overflow and lib.counts:
        max_count = max(lib.counts)
        if n > max_count:
            return _reflow_grouped(design, map_, lib, target_w, target_h, max_count)
    template = retrieve_template(lib, n, target_w, target_h)
    return apply_reflow(design, map_, template, target_w, target_h)


def _reflow_grouped(
    design: VectorDesign,
    map_: ImportanceMap,
    lib: TemplateLibrary,
    target_w: float,
    target_h: float,
    count: int,
) -> VectorDesign:
    ranked = rank_elements(design, map_)
    keep = ranked[: count - 1]
    grouped = ranked[count - 1 :]
    members = [design.element(eid) for eid in grouped]
    gx0 = min(e.bbox.x for e in members)
    gy0 = min(e.bbox.y for e in members)
    gx1 = max(e.bbox.x + e.bbox.w for e in members)
    gy1 = max(e.bbox.y + e.bbox.h for e in members)
    group_box = BBox(gx0, gy0, gx1 - gx0, gy1 - gy0)
    template = retrieve_template(lib, count, target_w, target_h)
    # Rank the reduced design positionally: kept elements keep their original
    # rank order (1..count-1), the composite is the lowest rank by construction.
    sx = target_w / template.canvas_w
    sy = target_h / template.canvas_h
    placed: dict[str, BBox] = {}
    for rank, eid in enumerate(keep + ["__group__"], start=1):
        ph = template.by_rank(rank).bbox
        slot = BBox(ph.x * sx, ph.y * sy, ph.w * sx, ph.h * sy)
        src = group_box if eid == "__group__" else design.element(eid).bbox
        placed[eid] = _contain_fit(src.w, src.h, slot)
    del placed["__group__"]
    group_slot = _contain_fit(group_box.w, group_box.h, BBox(
        template.by_rank(count).bbox.x * sx,
        template.by_rank(count).bbox.y * sy,
        template.by_rank(count).bbox.w * sx,
        template.by_rank(count).bbox.h * sy,
    ))
    gscale = group_slot.w / group_box.w
    for e in members:
        placed[e.id] = BBox(
            group_slot.x + (e.bbox.x - group_box.x) * gscale,
            group_slot.y + (e.bbox.y - group_box.y) * gscale,
            e.bbox.w * gscale,
            e.bbox.h * gscale,
        )
    elements = tuple(Element(e.id, e.kind, placed[e.id], e.z, e.label) for e in design.elements)
    return VectorDesign(target_w, target_h, elements, design.design_class)
