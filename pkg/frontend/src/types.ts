/** Wire types mirroring the studio service JSON schemas. */

export type ElementKind = "title" | "body_text" | "image" | "face" | "logo" | "shape";

export type DesignClass =
  | "ad"
  | "infographic"
  | "mobile_ui"
  | "movie_poster"
  | "webpage"
  | "natural_image";

export interface BBox {
  x: number;
  y: number;
  w: number;
  h: number;
}

export interface DesignElement {
  id: string;
  kind: ElementKind;
  bbox: BBox;
  z: number;
  label?: string;
}

export interface Design {
  canvas: { w: number; h: number };
  class?: DesignClass;
  elements: DesignElement[];
}

export interface MapPayload {
  w: number;
  h: number;
  values: number[];
}

export interface PredictResponse {
  map: MapPayload;
  scores: Record<string, number>;
  content_hash: string;
}

export interface FitnessDict {
  mse: number;
  overlap_penalty: number;
  total: number;
}

export interface EpochEvent {
  epoch: number;
  fitness: FitnessDict;
  design: Design;
}

export type JobState = "queued" | "running" | "done" | "cancelled" | "failed";

export interface JobInfo {
  id: string;
  design_id: string;
  state: JobState;
  epoch: number;
  epochs: number;
  error: string | null;
  best_design: Design | null;
  best_fitness: FitnessDict | null;
}

export const TERMINAL_JOB_STATES: JobState[] = ["done", "cancelled", "failed"];

export function isTerminal(state: JobState): boolean {
  return TERMINAL_JOB_STATES.includes(state);
}

export function cloneDesign(design: Design): Design {
  return {
    canvas: { ...design.canvas },
    ...(design.class !== undefined ? { class: design.class } : {}),
    elements: design.elements.map((e) => ({ ...e, bbox: { ...e.bbox } })),
  };
}
