"""Ingestion pipeline: raw annotation exports -> quality-gated importance maps.

Input is the JSON-lines mask format (one RLE mask per line); lines carrying a
sentinel_id are quality probes checked against a registry of ground-truth
masks. A participant's whole batch is accepted or rejected as a unit by the
sentinel gate, mirroring a task-level quality bar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

from .errors import EmptyAnnotationSet, ParseError, UnknownSentinel
from .maps import AnnotationSet, BinaryMask, GateResult, ImportanceMap, aggregate, rle_to_mask, sentinel_gate

DEFAULT_MIN_ANNOTATORS = 25


@dataclass(frozen=True)
class SentinelRegistry:
    masks: dict[str, BinaryMask]

    def __post_init__(self) -> None:
        if not self.masks:
            raise EmptyAnnotationSet("sentinel registry is empty")

    @classmethod
    def from_dir(cls, directory: str | Path) -> "SentinelRegistry":
        masks = {}
        for path in sorted(Path(directory).glob("*.json")):
            obj = json.loads(path.read_text())
            masks[str(obj["sentinel_id"])] = rle_to_mask(obj["rle"], int(obj["w"]), int(obj["h"]))
        return cls(masks)


@dataclass
class AnnotationBatch:
    """One participant's submission: design masks plus sentinel annotations."""

    participant_id: str
    design_masks: dict[str, BinaryMask] = field(default_factory=dict)
    sentinel_masks: dict[str, BinaryMask] = field(default_factory=dict)


@dataclass(frozen=True)
class Rejection:
    participant_id: str
    reason: str
    ious: tuple[float, ...]


@dataclass(frozen=True)
class IngestResult:
    accepted: dict[str, AnnotationSet]  # design_id -> annotation set
    accepted_participants: tuple[str, ...]
    rejections: tuple[Rejection, ...]


def parse_lines(lines: Iterable[str]) -> list[AnnotationBatch]:
    """Group mask lines into per-participant batches, in first-seen order."""
    batches: dict[str, AnnotationBatch] = {}
    for lineno, raw in enumerate(lines, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            obj = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ParseError(f"invalid JSON: {exc.msg}", line=lineno) from None
        try:
            participant = str(obj["participant_id"])
            mask = rle_to_mask(obj["rle"], int(obj["w"]), int(obj["h"]))
        except ParseError as exc:
            raise ParseError(str(exc), line=lineno) from None
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError(f"bad record: {exc!r}", line=lineno) from None
        batch = batches.setdefault(participant, AnnotationBatch(participant))
        if "sentinel_id" in obj:
            sid = str(obj["sentinel_id"])
            if sid in batch.sentinel_masks:
                raise ParseError(f"duplicate sentinel {sid!r} for participant {participant!r}", line=lineno)
            batch.sentinel_masks[sid] = mask
        elif "design_id" in obj:
            did = str(obj["design_id"])
            if did in batch.design_masks:
                raise ParseError(f"duplicate design {did!r} for participant {participant!r}", line=lineno)
            batch.design_masks[did] = mask
        else:
            raise ParseError("record has neither design_id nor sentinel_id", line=lineno)
    return list(batches.values())


def ingest(
    batches: Iterable[AnnotationBatch],
    registry: SentinelRegistry,
    iou_threshold: float = 0.6,
    pass_fraction: float = 2 / 3,
) -> IngestResult:
    """Gate each batch on its sentinels; group the surviving masks by design.

    Batches failing the gate are excluded entirely; the rejection log keeps
    the participant, the reason, and the per-sentinel IoUs. The result is
    independent of input order: masks are grouped under sorted participant
    order per design.
    """
    per_design: dict[str, dict[str, BinaryMask]] = {}
    accepted_participants: list[str] = []
    rejections: list[Rejection] = []
    for batch in batches:
        if not batch.sentinel_masks:
            rejections.append(Rejection(batch.participant_id, "no_sentinels", ()))
            continue
        results = []
        for sid in sorted(batch.sentinel_masks):
            truth = registry.masks.get(sid)
            if truth is None:
                raise UnknownSentinel(f"sentinel {sid!r} (participant {batch.participant_id!r}) not in registry")
            results.append((batch.sentinel_masks[sid], truth))
        gate: GateResult = sentinel_gate(results, iou_threshold, pass_fraction)
        if not gate.accepted:
            rejections.append(Rejection(batch.participant_id, "failed_sentinel_gate", gate.ious))
            continue
        accepted_participants.append(batch.participant_id)
        for design_id, mask in batch.design_masks.items():
            per_design.setdefault(design_id, {})[batch.participant_id] = mask
    accepted = {
        design_id: AnnotationSet(design_id, tuple(masks[p] for p in sorted(masks)))
        for design_id, masks in sorted(per_design.items())
    }
    return IngestResult(
        accepted,
        tuple(sorted(accepted_participants)),
        tuple(sorted(rejections, key=lambda r: r.participant_id)),
    )


@dataclass(frozen=True)
class CoverageEntry:
    annotators: int
    below_minimum: bool


@dataclass(frozen=True)
class BuildResult:
    maps: dict[str, ImportanceMap]
    coverage: dict[str, CoverageEntry]


def build_maps(accepted: dict[str, AnnotationSet], min_annotators: int = DEFAULT_MIN_ANNOTATORS) -> BuildResult:
    """Aggregate each design's accepted masks; flag thin coverage.

    Falling below min_annotators is a warning flag in the report, not an
    error, so small desk-scale corpora stay usable.
    """
    maps: dict[str, ImportanceMap] = {}
    coverage: dict[str, CoverageEntry] = {}
    for design_id, aset in accepted.items():
        maps[design_id] = aggregate(aset.masks)
        n = len(aset.masks)
        coverage[design_id] = CoverageEntry(n, n < min_annotators)
    return BuildResult(maps, coverage)
