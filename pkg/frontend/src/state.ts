/** Single-source-of-truth view state.
 *
 * The service owns the design; every local edit schedules a debounced PUT
 * (300 ms) followed by a re-prediction, and optimization progress arrives
 * as epoch events that replace the design wholesale. Nothing is rendered
 * from hidden client state: (design, map, job) is all there is.
 */

import { ApiError, StudioClient } from "./api.js";
import { JobEventStream, type EventSourceFactory } from "./sse.js";
import {
  cloneDesign,
  isTerminal,
  type Design,
  type EpochEvent,
  type FitnessDict,
  type JobState,
  type MapPayload,
} from "./types.js";

export const COMMIT_DEBOUNCE_MS = 300;
export const MIN_ELEMENT_SIZE = 1;

export interface JobProgress {
  id: string;
  state: JobState;
  epoch: number; // last completed epoch index, -1 before the first event
  epochs: number;
  fitness: FitnessDict | null;
}

export interface ViewState {
  designId: string | null;
  design: Design | null;
  selected: string | null;
  overlayOn: boolean;
  map: MapPayload | null;
  scores: Record<string, number>;
  /** User-dragged target handles; elements not present fall back to scores. */
  targets: Record<string, number>;
  job: JobProgress | null;
  notice: string | null;
}

function clamp(v: number, lo: number, hi: number): number {
  return Math.min(Math.max(v, lo), hi);
}

export class StudioStore {
  readonly state: ViewState = {
    designId: null,
    design: null,
    selected: null,
    overlayOn: false,
    map: null,
    scores: {},
    targets: {},
    job: null,
    notice: null,
  };

  private listeners: Array<() => void> = [];
  private commitTimer: ReturnType<typeof setTimeout> | null = null;
  private stream: JobEventStream | null = null;

  constructor(
    private readonly client: StudioClient,
    private readonly eventSourceFactory: EventSourceFactory,
  ) {}

  subscribe(listener: () => void): () => void {
    this.listeners.push(listener);
    return () => {
      this.listeners = this.listeners.filter((l) => l !== listener);
    };
  }

  private emit(): void {
    for (const listener of this.listeners) listener();
  }

  get jobRunning(): boolean {
    return this.state.job !== null && !isTerminal(this.state.job.state);
  }

  /** Target handle value for an element: user-set target or predicted score. */
  targetOf(elementId: string): number {
    return this.state.targets[elementId] ?? this.state.scores[elementId] ?? 0;
  }

  async load(designId: string): Promise<void> {
    const design = await this.client.getDesign(designId);
    this.state.designId = designId;
    this.state.design = design;
    this.state.selected = null;
    this.state.targets = {};
    this.state.job = null;
    await this.refreshPrediction();
  }

  async createAndLoad(design: Design): Promise<string> {
    const { id } = await this.client.createDesign(design);
    await this.load(id);
    return id;
  }

  select(elementId: string | null): void {
    this.state.selected = elementId;
    this.emit();
  }

  toggleOverlay(): void {
    this.state.overlayOn = !this.state.overlayOn;
    this.emit();
  }

  /** Drag gesture: translate an element, keeping it on the canvas. */
  moveElement(elementId: string, dx: number, dy: number): void {
    this.mutateElement(elementId, (bbox, canvas) => {
      bbox.x = clamp(bbox.x + dx, 0, Math.max(0, canvas.w - bbox.w));
      bbox.y = clamp(bbox.y + dy, 0, Math.max(0, canvas.h - bbox.h));
    });
  }

  /** Resize gesture: clamped to the minimum size and the canvas extent. */
  resizeElement(elementId: string, w: number, h: number): void {
    this.mutateElement(elementId, (bbox, canvas) => {
      bbox.w = clamp(w, MIN_ELEMENT_SIZE, canvas.w);
      bbox.h = clamp(h, MIN_ELEMENT_SIZE, canvas.h);
      bbox.x = clamp(bbox.x, 0, canvas.w - bbox.w);
      bbox.y = clamp(bbox.y, 0, canvas.h - bbox.h);
    });
  }

  private mutateElement(
    elementId: string,
    edit: (bbox: { x: number; y: number; w: number; h: number }, canvas: { w: number; h: number }) => void,
  ): void {
    const design = this.state.design;
    if (!design) return;
    if (this.jobRunning) {
      this.state.notice = "optimization already running";
      this.emit();
      return;
    }
    const element = design.elements.find((e) => e.id === elementId);
    if (!element) return;
    edit(element.bbox, design.canvas);
    this.scheduleCommit();
    this.emit();
  }

  /** Every local mutation funnels here: debounce, then PUT + re-predict. */
  private scheduleCommit(): void {
    if (this.commitTimer !== null) clearTimeout(this.commitTimer);
    this.commitTimer = setTimeout(() => {
      this.commitTimer = null;
      void this.commit();
    }, COMMIT_DEBOUNCE_MS);
  }

  async commit(): Promise<void> {
    const { designId, design } = this.state;
    if (!designId || !design) return;
    try {
      await this.client.putDesign(designId, design);
      await this.refreshPrediction();
    } catch (err) {
      this.state.notice = err instanceof Error ? err.message : String(err);
      this.emit();
    }
  }

  async refreshPrediction(): Promise<void> {
    const designId = this.state.designId;
    if (!designId) return;
    const res = await this.client.predict(designId);
    this.state.map = res.map;
    this.state.scores = res.scores;
    this.emit();
  }

  /**
   * Dragging a bar handle: build a target spec that pins every non-adjusted
   * element to its currently displayed score, then start an optimization
   * job and subscribe to its epoch stream.
   */
  async adjustTarget(elementId: string, value: number, config?: Record<string, unknown>): Promise<void> {
    const design = this.state.design;
    const designId = this.state.designId;
    if (!design || !designId) return;
    if (this.jobRunning) {
      this.state.notice = "optimization already running";
      this.emit();
      return;
    }
    const target = clamp(value, 0, 1);
    this.state.targets = { ...this.state.targets, [elementId]: target };
    const targets: Record<string, number> = {};
    for (const e of design.elements) {
      targets[e.id] = e.id === elementId ? target : (this.state.scores[e.id] ?? 0);
    }
    let jobId: string;
    try {
      ({ id: jobId } = await this.client.optimize(designId, targets, config));
    } catch (err) {
      this.state.notice =
        err instanceof ApiError && err.status === 409
          ? "optimization already running"
          : err instanceof Error
            ? err.message
            : String(err);
      this.emit();
      return;
    }
    const info = await this.client.getJob(jobId);
    this.state.job = { id: jobId, state: info.state, epoch: info.epoch, epochs: info.epochs, fitness: null };
    this.emit();
    this.stream?.close();
    this.stream = new JobEventStream(
      this.client.eventsUrl(jobId),
      this.eventSourceFactory,
      () => this.client.getJob(jobId),
      {
        onEpoch: (event) => this.applyEpoch(event),
        onResync: (job) => this.applyJobInfo(job),
        onEnd: (state) => {
          void this.finishJob(state);
        },
      },
    );
    this.stream.start();
  }

  async cancelJob(): Promise<void> {
    if (this.state.job && !isTerminal(this.state.job.state)) {
      await this.client.cancelJob(this.state.job.id);
    }
  }

  /** One canvas redraw per epoch: the event's design is the new truth. */
  private applyEpoch(event: EpochEvent): void {
    this.state.design = cloneDesign(event.design);
    if (this.state.job) {
      this.state.job.epoch = event.epoch;
      this.state.job.state = "running";
      this.state.job.fitness = event.fitness;
    }
    this.emit();
  }

  private applyJobInfo(job: {
    state: JobState;
    epoch: number;
    epochs: number;
    best_design: Design | null;
    best_fitness: FitnessDict | null;
  }): void {
    if (job.best_design && job.epoch > (this.state.job?.epoch ?? -1)) {
      this.state.design = cloneDesign(job.best_design);
    }
    if (this.state.job) {
      this.state.job.state = job.state;
      this.state.job.epoch = Math.max(this.state.job.epoch, job.epoch);
      this.state.job.fitness = job.best_fitness ?? this.state.job.fitness;
    }
    this.emit();
  }

  private async finishJob(state: JobState): Promise<void> {
    if (this.state.job) {
      this.state.job.state = state;
    }
    this.stream = null;
    // Commit what the canvas now shows: the job only streamed the best
    // design, the design record itself still holds the pre-job layout.
    const { designId, design, job } = this.state;
    if (designId && design && state !== "failed" && (job?.epoch ?? -1) >= 0) {
      try {
        await this.client.putDesign(designId, design);
      } catch (err) {
        this.state.notice = err instanceof Error ? err.message : String(err);
      }
    }
    await this.refreshPrediction();
  }

  /** Progress fraction in [0, 1] for the progress bar. */
  progress(): number {
    const job = this.state.job;
    if (!job || job.epochs <= 0) return 0;
    if (isTerminal(job.state)) return 1;
    return clamp((job.epoch + 1) / job.epochs, 0, 1);
  }

  dismissNotice(): void {
    this.state.notice = null;
    this.emit();
  }
}
