"""Visual-importance layout studio.

Per-element importance prediction for vector designs, genetic layout
optimization toward target importance values, and importance-rank-preserving
reflow to new aspect ratios, plus the annotation pipeline that produces
ground-truth importance maps and the HTTP service behind the interactive UI.
"""

from .design import (
    BBox,
    DesignClass,
    Element,
    ElementKind,
    VectorDesign,
    clamp_to_canvas,
    design_from_dict,
    design_from_json,
    design_to_dict,
    design_to_json,
    overlap_area,
    rasterize_mask,
)
from .maps import (
    AnnotationSet,
    BinaryMask,
    ImportanceMap,
    MetricReport,
    aggregate,
    element_score,
    evaluate,
    iou,
    region_stats,
    sentinel_gate,
)
from .optimizer import FitnessReport, GAConfig, Genome, TargetSpec, apply_genome, crossover, fitness, mutate, optimize
from .predictor import (
    ClassificationResult,
    ExternalPredictor,
    PredictorConfig,
    ReferencePredictor,
    classify,
    predict,
)
from .reflow import Template, TemplateLibrary, apply_reflow, load_library, rank_elements, reflow_design, retrieve_template

__version__ = "0.1.0"

__all__ = [
    "BBox",
    "DesignClass",
    "Element",
    "ElementKind",
    "VectorDesign",
    "clamp_to_canvas",
    "design_from_dict",
    "design_from_json",
    "design_to_dict",
    "design_to_json",
    "overlap_area",
    "rasterize_mask",
    "AnnotationSet",
    "BinaryMask",
    "ImportanceMap",
    "MetricReport",
    "aggregate",
    "element_score",
    "evaluate",
    "iou",
    "region_stats",
    "sentinel_gate",
    "FitnessReport",
    "GAConfig",
    "Genome",
    "TargetSpec",
    "apply_genome",
    "crossover",
    "fitness",
    "mutate",
    "optimize",
    "ClassificationResult",
    "ExternalPredictor",
    "PredictorConfig",
    "ReferencePredictor",
    "classify",
    "predict",
    "Template",
    "TemplateLibrary",
    "apply_reflow",
    "load_library",
    "rank_elements",
    "reflow_design",
    "retrieve_template",
]
