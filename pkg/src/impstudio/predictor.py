"""Pluggable importance prediction.

Two implementations share one contract (``predict_map(design) -> ImportanceMap``):

* ReferencePredictor — a deterministic, class-conditional heuristic. Element
  footprints are painted at an intensity driven by element kind, relative
  size, and a per-class spatial prior, then blurred and max-normalized.
  It stands in for a trained neural model so the downstream tooling
  (optimizer, reflow, service) can run self-contained.
* ExternalPredictor — renders the design to a PNG and posts it to a separately
  deployed model speaking the wire protocol documented in the README.
"""

from __future__ import annotations

import hashlib
import io
import json
import math
import threading
from dataclasses import dataclass, field
from functools import lru_cache

import httpx
import numpy as np
from PIL import Image, ImageDraw
from scipy.ndimage import uniform_filter

from .design import BBox, DesignClass, ElementKind, VectorDesign, cell_span, design_to_json, overlap_area
from .errors import EndpointUnreachable, MalformedResponse, RequestTimeout
from .maps import ImportanceMap

DEFAULT_KIND_WEIGHTS: dict[ElementKind, float] = {
    ElementKind.TITLE: 1.0,
    ElementKind.FACE: 0.9,
    ElementKind.LOGO: 0.7,
    ElementKind.IMAGE: 0.6,
    ElementKind.BODY_TEXT: 0.5,
    ElementKind.SHAPE: 0.3,
}

DEFAULT_MAP_SIZE = (256, 256)


@dataclass(frozen=True)
class PriorSpec:
    """Analytic spatial weighting field over the unit square.

    value(x, y) = floor + (1 - floor) * exp(-((x-cx)^2/(2*sx^2) + (y-cy)^2/(2*sy^2)))

    A None sigma makes the field uniform along that axis. Values are in
    (0, 1] with the maximum 1 at the bump center.
    """

    cx: float = 0.5
    cy: float = 0.5
    sigma_x: float | None = 0.35
    sigma_y: float | None = 0.35
    floor: float = 0.25

    def __post_init__(self) -> None:
        if not 0.0 < self.floor <= 1.0:
            raise ValueError("prior floor must be in (0, 1]")

    def value_at(self, x: float, y: float) -> float:
        expo = 0.0
        if self.sigma_x is not None:
            expo += (x - self.cx) ** 2 / (2 * self.sigma_x**2)
        if self.sigma_y is not None:
            expo += (y - self.cy) ** 2 / (2 * self.sigma_y**2)
        return self.floor + (1.0 - self.floor) * math.exp(-expo)


# Defaults encode the qualitative per-class trends the reference predictor
# follows; the exact shapes are calibration, overridable via PredictorConfig.
# The full parameter table is documented in the README.
DEFAULT_CLASS_PRIORS: dict[DesignClass, PriorSpec] = {
    DesignClass.AD: PriorSpec(0.5, 0.5, 0.35, 0.35, 0.25),
    DesignClass.INFOGRAPHIC: PriorSpec(0.5, 0.35, 0.8, 0.8, 0.85),
    DesignClass.MOBILE_UI: PriorSpec(0.5, 0.4, 0.8, 0.8, 0.85),
    DesignClass.MOVIE_POSTER: PriorSpec(0.5, 0.15, None, 0.3, 0.3),
    DesignClass.WEBPAGE: PriorSpec(0.2, 0.15, 0.3, 0.3, 0.25),
    DesignClass.NATURAL_IMAGE: PriorSpec(0.5, 0.45, 0.4, 0.4, 0.3),
}

CENTER_BIAS_CLASSES = (DesignClass.AD, DesignClass.NATURAL_IMAGE)


@dataclass(frozen=True)
class PredictorConfig:
    kind_weights: dict[ElementKind, float] = field(default_factory=lambda: dict(DEFAULT_KIND_WEIGHTS))
    prior_strength: float = 0.5
    blur_radius_frac: float = 0.02
    center_bias_weight: float = 0.15
    class_priors: dict[DesignClass, PriorSpec] = field(default_factory=lambda: dict(DEFAULT_CLASS_PRIORS))

    def __post_init__(self) -> None:
        if not 0.0 <= self.prior_strength <= 1.0:
            raise ValueError("prior_strength must be in [0, 1]")
        for kind in ElementKind:
            if self.kind_weights.get(kind, 0.0) <= 0.0:
                raise ValueError(f"kind weight for {kind.value} must be positive")
        if self.blur_radius_frac < 0:
            raise ValueError("blur_radius_frac must be >= 0")
        if self.center_bias_weight < 0:
            raise ValueError("center_bias_weight must be >= 0")


@dataclass(frozen=True)
class ClassificationResult:
    predicted: DesignClass
    probabilities: dict[DesignClass, float]


@lru_cache(maxsize=64)
def _prior_grid(spec: PriorSpec, w: int, h: int) -> np.ndarray:
    xs = (np.arange(w) + 0.5) / w
    ys = (np.arange(h) + 0.5) / h
    expo = np.zeros((h, w))
    if spec.sigma_x is not None:
        expo += ((xs - spec.cx) ** 2 / (2 * spec.sigma_x**2))[None, :]
    if spec.sigma_y is not None:
        expo += ((ys - spec.cy) ** 2 / (2 * spec.sigma_y**2))[:, None]
    grid = spec.floor + (1.0 - spec.floor) * np.exp(-expo)
    grid.flags.writeable = False
    return grid


@lru_cache(maxsize=8)
def _center_field(w: int, h: int, sigma: float = 0.2) -> np.ndarray:
    xs = (np.arange(w) + 0.5) / w - 0.5
    ys = (np.arange(h) + 0.5) / h - 0.5
    grid = np.exp(-(xs[None, :] ** 2 + ys[:, None] ** 2) / (2 * sigma**2))
    grid.flags.writeable = False
    return grid


def classify(design: VectorDesign) -> ClassificationResult:
    """Deterministic rule-based six-way classification.

    Scores per class are accumulated from aspect ratio and element
    composition, then softmaxed into probabilities. Runs regardless of any
    stored class label; the caller may prefer the label.
    """
    n = len(design.elements)
    tall = design.canvas_h / design.canvas_w >= 1.4
    wide = design.canvas_w / design.canvas_h >= 1.4
    kinds = [e.kind for e in design.elements]
    body_count = sum(1 for k in kinds if k is ElementKind.BODY_TEXT)
    has_text = any(k in (ElementKind.TITLE, ElementKind.BODY_TEXT) for k in kinds)
    has_face = ElementKind.FACE in kinds
    has_title = ElementKind.TITLE in kinds

    def covers(e) -> float:
        canvas = BBox(0.0, 0.0, design.canvas_w, design.canvas_h)
        return overlap_area(e.bbox, canvas) / design.canvas_area

    single_full_image = (
        n == 1 and kinds[0] is ElementKind.IMAGE and covers(design.elements[0]) >= 0.8 and not has_text
    )
    top_left_anchor = any(
        e.kind in (ElementKind.LOGO, ElementKind.TITLE)
        and e.bbox.cx <= 0.5 * design.canvas_w
        and e.bbox.cy <= 0.25 * design.canvas_h
        for e in design.elements
    )

    scores = {
        DesignClass.AD: 1.0,
        DesignClass.INFOGRAPHIC: (2.0 if body_count >= 4 else 0.0) + (0.5 if tall and body_count >= 2 else 0.0),
        DesignClass.MOBILE_UI: (2.0 if tall else 0.0) + (1.5 if n >= 8 else 0.0),
        DesignClass.MOVIE_POSTER: (1.5 if has_face else 0.0) + (1.0 if has_title else 0.0) + (0.5 if tall else 0.0),
        DesignClass.WEBPAGE: (2.0 if wide else 0.0) + (1.5 if top_left_anchor else 0.0),
        DesignClass.NATURAL_IMAGE: 4.0 if single_full_image else 0.0,
    }
    raw = np.array([scores[c] for c in DesignClass], dtype=np.float64)
    exp = np.exp(raw - raw.max())
    probs = exp / exp.sum()
    predicted = list(DesignClass)[int(np.argmax(probs))]
    return ClassificationResult(predicted, {c: float(p) for c, p in zip(DesignClass, probs)})


def predict(
    design: VectorDesign,
    design_class: DesignClass,
    config: PredictorConfig | None = None,
    map_w: int = DEFAULT_MAP_SIZE[0],
    map_h: int = DEFAULT_MAP_SIZE[1],
) -> ImportanceMap:
    """Render the class-conditional importance map of a design.

    Each element footprint is painted (per-cell maximum across elements) at

        kind_weight * sqrt(element area / canvas area)
                    * ((1 - g) + g * prior(centroid)),   g = prior_strength,

    then a box blur of the configured radius is applied, a center-bias field
    is added for Ad and NaturalImage, and the result is normalized so the
    maximum is 1. Deterministic for identical inputs.
    """
    cfg = config or PredictorConfig()
    prior = cfg.class_priors.get(design_class, DEFAULT_CLASS_PRIORS[design_class])
    g = cfg.prior_strength
    out = np.zeros((map_h, map_w))
    for e in design.elements:
        x0, x1, y0, y1 = cell_span(e.bbox, map_w, map_h, design.canvas_w, design.canvas_h)
        if x1 <= x0 or y1 <= y0:
            continue
        size_factor = math.sqrt(e.bbox.area / design.canvas_area)
        ux = min(max(e.bbox.cx / design.canvas_w, 0.0), 1.0)
        uy = min(max(e.bbox.cy / design.canvas_h, 0.0), 1.0)
        intensity = cfg.kind_weights[e.kind] * size_factor * ((1.0 - g) + g * prior.value_at(ux, uy))
        region = out[y0:y1, x0:x1]
        np.maximum(region, intensity, out=region)
    radius = max(1, round(cfg.blur_radius_frac * map_w))
    out = uniform_filter(out, size=2 * radius + 1, mode="nearest")
    if design_class in CENTER_BIAS_CLASSES and cfg.center_bias_weight > 0:
        out = out + cfg.center_bias_weight * _center_field(map_w, map_h)
    peak = out.max()
    if peak > 0:
        out = out / peak
    return ImportanceMap(map_w, map_h, np.clip(out, 0.0, 1.0))


class ReferencePredictor:
    """Deterministic predictor; resolves the design class from the stored
    label, falling back to classify()."""

    def __init__(self, config: PredictorConfig | None = None, map_w: int = DEFAULT_MAP_SIZE[0], map_h: int = DEFAULT_MAP_SIZE[1]):
        self.config = config or PredictorConfig()
        self.map_w = map_w
        self.map_h = map_h

    def resolve_class(self, design: VectorDesign) -> DesignClass:
        if design.design_class is not None:
            return design.design_class
        return classify(design).predicted

    def predict_map(self, design: VectorDesign) -> ImportanceMap:
        return predict(design, self.resolve_class(design), self.config, self.map_w, self.map_h)


# --- external neural predictor adapter ------------------------------------

KIND_FILL = {
    ElementKind.TITLE: (40, 40, 40),
    ElementKind.BODY_TEXT: (120, 120, 120),
    ElementKind.IMAGE: (80, 140, 200),
    ElementKind.FACE: (230, 190, 150),
    ElementKind.LOGO: (200, 60, 60),
    ElementKind.SHAPE: (150, 200, 120),
}


def render_design(design: VectorDesign, max_px: int = 512) -> Image.Image:
    """Flat-color raster of a design: one filled box per element (painted in
    z order) with kind-specific fill; labels drawn as text blocks."""
    scale = max_px / max(design.canvas_w, design.canvas_h)
    px_w = max(1, round(design.canvas_w * scale))
    px_h = max(1, round(design.canvas_h * scale))
    img = Image.new("RGB", (px_w, px_h), (255, 255, 255))
    draw = ImageDraw.Draw(img)
    for e in sorted(design.elements, key=lambda e: e.z):
        b = e.bbox
        x0, y0 = b.x * scale, b.y * scale
        x1, y1 = (b.x + b.w) * scale, (b.y + b.h) * scale
        draw.rectangle((x0, y0, x1, y1), fill=KIND_FILL[e.kind])
        if e.label:
            draw.text((x0 + 2, y0 + 2), e.label, fill=(255, 255, 255))
    return img


class ExternalPredictor:
    """Client for a separately trained model behind HTTP POST /predict.

    Request body is a PNG render of the design; the response is JSON
    {w, h, values} with row-major floats in [0, 1]. Responses are cached by
    design content hash; the cache is shared across threads.
    """

    def __init__(
        self,
        endpoint: str,
        timeout: float = 10.0,
        max_in_flight: int = 4,
        transport: httpx.BaseTransport | None = None,
    ):
        self.endpoint = endpoint.rstrip("/")
        self._client = httpx.Client(timeout=timeout, transport=transport)
        self._cache: dict[str, ImportanceMap] = {}
        self._cache_lock = threading.Lock()
        self._in_flight = threading.Semaphore(max_in_flight)

    def close(self) -> None:
        self._client.close()

    def predict_map(self, design: VectorDesign) -> ImportanceMap:
        key = hashlib.sha256(design_to_json(design).encode()).hexdigest()
        with self._cache_lock:
            cached = self._cache.get(key)
        if cached is not None:
            return cached
        buf = io.BytesIO()
        render_design(design).save(buf, format="PNG")
        with self._in_flight:
            try:
                resp = self._client.post(
                    self.endpoint + "/predict",
                    content=buf.getvalue(),
                    headers={"content-type": "image/png"},
                )
            except (httpx.ConnectError, httpx.ConnectTimeout) as exc:
                raise EndpointUnreachable(str(exc)) from exc
            except httpx.TimeoutException as exc:
                raise RequestTimeout(str(exc)) from exc
            except httpx.HTTPError as exc:
                raise EndpointUnreachable(str(exc)) from exc
        result = self._parse_response(resp)
        with self._cache_lock:
            self._cache[key] = result
        return result

    @staticmethod
    def _parse_response(resp: httpx.Response) -> ImportanceMap:
        if resp.status_code != 200:
            raise MalformedResponse(f"predictor returned HTTP {resp.status_code}")
        try:
            obj = resp.json()
            w, h, values = int(obj["w"]), int(obj["h"]), obj["values"]
        except (json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
            raise MalformedResponse(f"unparseable predictor response: {exc}") from exc
        arr = np.asarray(values, dtype=np.float64)
        if arr.ndim != 1 or arr.size != w * h or w < 1 or h < 1:
            raise MalformedResponse(f"expected {w * h} values, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)) or arr.min() < 0.0 or arr.max() > 1.0:
            raise MalformedResponse("predictor values outside [0, 1]")
        return ImportanceMap(w, h, arr.reshape(h, w))
