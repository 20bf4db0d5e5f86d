"""Genetic layout optimization toward user-specified importance targets.

Each candidate layout is a genome of per-element (dx, dy, s) genes applied to
the input design. Candidates are scored by predicting the importance map of
the adjusted design and measuring the MSE between per-element scores and
their targets, plus a pairwise overlap penalty. Breeding is elitist: the
lowest-total genomes survive unchanged, the rest of the population is
refilled with mutated crossover children of elite pairs.

All randomness flows through one seeded generator with a fixed draw order
(genomes are generated sequentially), so a run is bit-reproducible.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from itertools import combinations
from typing import Callable, Protocol

import numpy as np

from .design import BBox, Element, VectorDesign, clamp_to_canvas, overlap_area
from .errors import GenomeLengthMismatch, OptimizationCancelled
from .maps import ImportanceMap, element_score


class Predictor(Protocol):
    def predict_map(self, design: VectorDesign) -> ImportanceMap: ...


@dataclass(frozen=True)
class Genome:
    """Per-element (dx, dy, s): translation in canvas units, scale about the
    element center."""

    genes: tuple[tuple[float, float, float], ...]

    @classmethod
    def identity(cls, n: int) -> "Genome":
        return cls(((0.0, 0.0, 1.0),) * n)

    def __len__(self) -> int:
        return len(self.genes)


@dataclass(frozen=True)
class TargetSpec:
    """Element id -> target importance in [0, 1]. Elements not listed are
    pinned to their predicted score on the unmodified design."""

    targets: dict[str, float]

    def __post_init__(self) -> None:
        for eid, t in self.targets.items():
            if not 0.0 <= t <= 1.0:
                raise ValueError(f"target for {eid!r} must be in [0, 1], got {t}")

    def validate_ids(self, design: VectorDesign) -> None:
        known = {e.id for e in design.elements}
        unknown = set(self.targets) - known
        if unknown:
            raise KeyError(f"targets reference unknown element ids: {sorted(unknown)}")

    def resolve(self, design: VectorDesign, predictor: Predictor) -> "TargetSpec":
        """Fill every unspecified element with its current predicted score."""
        self.validate_ids(design)
        missing = [e for e in design.elements if e.id not in self.targets]
        full = dict(self.targets)
        if missing:
            baseline = predictor.predict_map(design)
            for e in missing:
                full[e.id] = element_score(baseline, e, design)
        return TargetSpec(full)


@dataclass(frozen=True)
class GAConfig:
    population: int = 100
    mutation_prob: float = 0.5
    elite: int = 25
    offspring: int = 75
    epochs: int = 20
    overlap_weight: float = 1.0
    pos_sigma_frac: float = 0.05
    scale_step: tuple[float, float] = (0.9, 1.1)
    scale_min: float = 0.5
    scale_max: float = 2.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.elite + self.offspring != self.population:
            raise ValueError("elite + offspring must equal population")
        if not 0.0 <= self.mutation_prob <= 1.0:
            raise ValueError("mutation_prob must be in [0, 1]")
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.elite < 1:
            raise ValueError("elite must be >= 1")
        if not 0 < self.scale_min <= self.scale_max:
            raise ValueError("need 0 < scale_min <= scale_max")

    def to_dict(self) -> dict:
        return {
            "population": self.population,
            "mutation_prob": self.mutation_prob,
            "elite": self.elite,
            "offspring": self.offspring,
            "epochs": self.epochs,
            "overlap_weight": self.overlap_weight,
            "pos_sigma_frac": self.pos_sigma_frac,
            "scale_step": list(self.scale_step),
            "scale_min": self.scale_min,
            "scale_max": self.scale_max,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "GAConfig":
        kwargs = dict(obj)
        if "scale_step" in kwargs:
            kwargs["scale_step"] = tuple(kwargs["scale_step"])
        return cls(**kwargs)

    @classmethod
    def from_json(cls, text: str) -> "GAConfig":
        return cls.from_dict(json.loads(text))


@dataclass(frozen=True)
class FitnessReport:
    """Lower total is better; total = mse + overlap_weight * overlap_penalty."""

    mse: float
    overlap_penalty: float
    total: float
    per_element: tuple[tuple[str, float, float], ...]  # (id, predicted, target)

    def to_dict(self) -> dict:
        return {"mse": self.mse, "overlap_penalty": self.overlap_penalty, "total": self.total}


@dataclass(frozen=True)
class EpochStats:
    epoch: int
    best: FitnessReport
    best_genome: Genome
    population_size: int


@dataclass(frozen=True)
class OptimizeResult:
    best_design: VectorDesign
    best_report: FitnessReport
    history: tuple[EpochStats, ...]


def apply_genome(design: VectorDesign, genome: Genome) -> VectorDesign:
    """Translate each element by (dx, dy), scale by s about its center, then
    clamp it back onto the canvas. The scale is capped so the element can
    never outgrow the canvas itself."""
    if len(genome) != len(design.elements):
        raise GenomeLengthMismatch(f"genome length {len(genome)} != {len(design.elements)} elements")
    elements = []
    for e, (dx, dy, s) in zip(design.elements, genome.genes):
        s_eff = min(s, design.canvas_w / e.bbox.w, design.canvas_h / e.bbox.h)
        w = e.bbox.w * s_eff
        h = e.bbox.h * s_eff
        cx = e.bbox.cx + dx
        cy = e.bbox.cy + dy
        bbox = clamp_to_canvas(BBox(cx - w / 2, cy - h / 2, w, h), design)
        elements.append(Element(e.id, e.kind, bbox, e.z, e.label))
    return design.replace_elements(tuple(elements))


def fitness(
    design: VectorDesign,
    genome: Genome,
    targets: TargetSpec,
    predictor: Predictor,
    cfg: GAConfig,
) -> FitnessReport:
    """Score one genome. Targets missing from the spec are resolved against
    the unmodified design first (callers in the GA loop pass a fully
    resolved spec, so the baseline prediction happens once per run)."""
    full = targets if len(targets.targets) == len(design.elements) else targets.resolve(design, predictor)
    variant = apply_genome(design, genome)
    imap = predictor.predict_map(variant)
    per_element = []
    se = 0.0
    for e in variant.elements:
        predicted = element_score(imap, e, variant)
        target = full.targets[e.id]
        per_element.append((e.id, predicted, target))
        se += (predicted - target) ** 2
    mse = se / len(variant.elements)
    overlap = 0.0
    for a, b in combinations(variant.elements, 2):
        overlap += overlap_area(a.bbox, b.bbox)
    overlap /= variant.canvas_area
    total = mse + cfg.overlap_weight * overlap
    return FitnessReport(mse, overlap, total, tuple(per_element))


def mutate(
    genome: Genome,
    cfg: GAConfig,
    rng: np.random.Generator,
    canvas_w: float,
    canvas_h: float,
) -> Genome:
    """Adjust each gene independently with probability mutation_prob:
    Gaussian offset noise (sigma = pos_sigma_frac of the canvas dimension)
    and a multiplicative scale step, clamped to [scale_min, scale_max].

    Draw order per element: selection coin, then (if selected) dx noise,
    dy noise, scale step. The input genome is not modified.
    """
    genes = []
    for dx, dy, s in genome.genes:
        if rng.random() < cfg.mutation_prob:
            dx = dx + rng.normal(0.0, cfg.pos_sigma_frac * canvas_w)
            dy = dy + rng.normal(0.0, cfg.pos_sigma_frac * canvas_h)
            s = s * rng.uniform(cfg.scale_step[0], cfg.scale_step[1])
            s = min(max(s, cfg.scale_min), cfg.scale_max)
        genes.append((dx, dy, s))
    return Genome(tuple(genes))


def crossover(a: Genome, b: Genome, rng: np.random.Generator) -> Genome:
    """Child copies each (dx, dy, s) triple whole from one parent, chosen
    with probability 1/2 per element index (never a blend)."""
    if len(a) != len(b):
        raise GenomeLengthMismatch(f"parents differ in length: {len(a)} vs {len(b)}")
    return Genome(tuple(ga if rng.random() < 0.5 else gb for ga, gb in zip(a.genes, b.genes)))


def optimize(
    design: VectorDesign,
    targets: TargetSpec,
    predictor: Predictor,
    cfg: GAConfig | None = None,
    on_epoch: Callable[[int, VectorDesign, FitnessReport], None] | None = None,
    cancel: Callable[[], bool] | None = None,
) -> OptimizeResult:
    """Run the full genetic loop and return the best design found.

    Epoch 0's population is the identity genome plus population-1 mutations
    of it, so the result can never be worse than the input. Every epoch all
    candidates are scored, the elite lowest-total genomes survive unchanged,
    and offspring are bred by crossover of elite pairs followed by mutation.
    on_epoch fires once per epoch with the best design so far; cancel() is
    polled between epochs and aborts the run with OptimizationCancelled.
    """
    cfg = cfg or GAConfig()
    rng = np.random.default_rng(cfg.seed)
    full_targets = targets.resolve(design, predictor)
    n = len(design.elements)
    identity = Genome.identity(n)
    population = [identity]
    for _ in range(cfg.population - 1):
        population.append(mutate(identity, cfg, rng, design.canvas_w, design.canvas_h))

    best_genome = identity
    best_report: FitnessReport | None = None
    history: list[EpochStats] = []
    for epoch in range(cfg.epochs):
        reports = [fitness(design, g, full_targets, predictor, cfg) for g in population]
        order = sorted(range(len(population)), key=lambda i: (reports[i].total, i))
        epoch_best = order[0]
        if best_report is None or reports[epoch_best].total < best_report.total:
            best_report = reports[epoch_best]
            best_genome = population[epoch_best]
        history.append(EpochStats(epoch, best_report, best_genome, len(population)))
        if on_epoch is not None:
            on_epoch(epoch, apply_genome(design, best_genome), best_report)
        if cancel is not None and cancel():
            raise OptimizationCancelled(f"cancelled after epoch {epoch}")
        if epoch == cfg.epochs - 1:
            break
        elite = [population[i] for i in order[: cfg.elite]]
        children = []
        for _ in range(cfg.offspring):
            pa = elite[int(rng.integers(0, len(elite)))]
            pb = elite[int(rng.integers(0, len(elite)))]
            children.append(mutate(crossover(pa, pb, rng), cfg, rng, design.canvas_w, design.canvas_h))
        population = elite + children

    assert best_report is not None
    return OptimizeResult(apply_genome(design, best_genome), best_report, tuple(history))
