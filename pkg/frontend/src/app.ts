/** DOM shell: wires the store, canvas surface, bar plot, and progress bar. */

import { StudioClient } from "./api.js";
import { barEntries, barHeightPx, formatScore, valueFromPointerY } from "./barplot.js";
import { Canvas2DSurface, renderDesign } from "./canvas.js";
import { StudioStore, MIN_ELEMENT_SIZE } from "./state.js";
import type { Design } from "./types.js";

const DEMO_DESIGN: Design = {
  canvas: { w: 400, h: 600 },
  class: "movie_poster",
  elements: [
    { id: "title", kind: "title", bbox: { x: 40, y: 30, w: 320, h: 80 }, z: 2, label: "Title" },
    { id: "hero", kind: "face", bbox: { x: 100, y: 160, w: 200, h: 240 }, z: 1, label: "Hero" },
    { id: "blurb", kind: "body_text", bbox: { x: 40, y: 440, w: 200, h: 80 }, z: 3, label: "Blurb" },
    { id: "logo", kind: "logo", bbox: { x: 280, y: 450, w: 80, h: 60 }, z: 4, label: "Logo" },
  ],
};

const RESIZE_GRIP = 12; // canvas-unit corner region that starts a resize

type Gesture =
  | { kind: "move"; elementId: string; lastX: number; lastY: number }
  | { kind: "resize"; elementId: string; lastX: number; lastY: number };

export function setupApp(root: HTMLElement, baseUrl = ""): StudioStore {
  const client = new StudioClient(baseUrl);
  const store = new StudioStore(client, (url) => new EventSource(url));

  root.innerHTML = `
    <div class="studio">
      <div class="canvas-pane">
        <canvas id="design-canvas"></canvas>
        <div class="canvas-tools">
          <label><input type="checkbox" id="overlay-toggle"> importance overlay</label>
          <button id="raise">raise</button>
          <button id="lower">lower</button>
          <span id="job-label"></span>
          <progress id="job-progress" max="1" value="0"></progress>
          <button id="cancel-job" hidden>cancel</button>
        </div>
      </div>
      <div class="bar-pane">
        <h3>element importance</h3>
        <div id="bar-plot" class="bar-plot"></div>
        <p class="hint">drag a bar to set a target importance</p>
      </div>
      <div id="toast" class="toast" hidden></div>
    </div>`;

  const canvas = root.querySelector<HTMLCanvasElement>("#design-canvas")!;
  const surface = new Canvas2DSurface(canvas);
  const overlayToggle = root.querySelector<HTMLInputElement>("#overlay-toggle")!;
  const barPlot = root.querySelector<HTMLDivElement>("#bar-plot")!;
  const progress = root.querySelector<HTMLProgressElement>("#job-progress")!;
  const jobLabel = root.querySelector<HTMLSpanElement>("#job-label")!;
  const cancelButton = root.querySelector<HTMLButtonElement>("#cancel-job")!;
  const toast = root.querySelector<HTMLDivElement>("#toast")!;

  let gesture: Gesture | null = null;

  function canvasPoint(ev: PointerEvent): { x: number; y: number } {
    const rect = canvas.getBoundingClientRect();
    const design = store.state.design;
    if (!design) return { x: 0, y: 0 };
    return {
      x: ((ev.clientX - rect.left) / rect.width) * design.canvas.w,
      y: ((ev.clientY - rect.top) / rect.height) * design.canvas.h,
    };
  }

  function hitElement(x: number, y: number): string | null {
    const design = store.state.design;
    if (!design) return null;
    const ordered = [...design.elements].sort((a, b) => b.z - a.z);
    for (const e of ordered) {
      const b = e.bbox;
      if (x >= b.x && x < b.x + b.w && y >= b.y && y < b.y + b.h) return e.id;
    }
    return null;
  }

  canvas.addEventListener("pointerdown", (ev) => {
    const { x, y } = canvasPoint(ev);
    const hit = hitElement(x, y);
    store.select(hit);
    if (!hit) return;
    const bbox = store.state.design!.elements.find((e) => e.id === hit)!.bbox;
    const nearCorner = x >= bbox.x + bbox.w - RESIZE_GRIP && y >= bbox.y + bbox.h - RESIZE_GRIP;
    gesture = { kind: nearCorner ? "resize" : "move", elementId: hit, lastX: x, lastY: y };
    canvas.setPointerCapture(ev.pointerId);
  });

  canvas.addEventListener("pointermove", (ev) => {
    if (!gesture) return;
    const { x, y } = canvasPoint(ev);
    const dx = x - gesture.lastX;
    const dy = y - gesture.lastY;
    gesture.lastX = x;
    gesture.lastY = y;
    if (gesture.kind === "move") {
      store.moveElement(gesture.elementId, dx, dy);
    } else {
      const bbox = store.state.design!.elements.find((e) => e.id === gesture!.elementId)!.bbox;
      store.resizeElement(
        gesture.elementId,
        Math.max(MIN_ELEMENT_SIZE, bbox.w + dx),
        Math.max(MIN_ELEMENT_SIZE, bbox.h + dy),
      );
    }
  });

  canvas.addEventListener("pointerup", () => {
    gesture = null;
  });

  overlayToggle.addEventListener("change", () => store.toggleOverlay());
  cancelButton.addEventListener("click", () => void store.cancelJob());

  root.querySelector<HTMLButtonElement>("#raise")!.addEventListener("click", () => shiftZ(1));
  root.querySelector<HTMLButtonElement>("#lower")!.addEventListener("click", () => shiftZ(-1));

  function shiftZ(direction: 1 | -1): void {
    const design = store.state.design;
    const selected = store.state.selected;
    if (!design || !selected) return;
    const sorted = [...design.elements].sort((a, b) => a.z - b.z);
    const index = sorted.findIndex((e) => e.id === selected);
    const swapWith = sorted[index + direction];
    if (index < 0 || !swapWith) return;
    const me = sorted[index]!;
    const otherZ = swapWith.z;
    swapWith.z = me.z;
    me.z = otherZ;
    // reuse the element mutation path so the swap is committed
    store.moveElement(selected, 0, 0);
  }

  function renderBars(): void {
    const design = store.state.design;
    if (!design) return;
    const plotHeight = 180;
    barPlot.innerHTML = "";
    for (const entry of barEntries(design, store.state.scores, (id) => store.targetOf(id))) {
      const column = document.createElement("div");
      column.className = "bar-column";
      column.dataset.element = entry.id;
      const bar = document.createElement("div");
      bar.className = "bar";
      bar.style.height = `${barHeightPx(entry.score, plotHeight)}px`;
      if (store.state.selected === entry.id) bar.classList.add("selected");
      const handle = document.createElement("div");
      handle.className = "target-handle";
      handle.style.bottom = `${barHeightPx(entry.target, plotHeight)}px`;
      const caption = document.createElement("span");
      caption.textContent = `${entry.label} ${formatScore(entry.score)}`;
      column.append(handle, bar, caption);
      column.addEventListener("pointerdown", (ev) => {
        ev.preventDefault();
        store.select(entry.id);
        const rect = column.getBoundingClientRect();
        const release = (up: PointerEvent) => {
          window.removeEventListener("pointerup", release);
          const value = valueFromPointerY(up.clientY, rect.top, plotHeight);
          void store.adjustTarget(entry.id, value);
        };
        window.addEventListener("pointerup", release);
      });
      barPlot.append(column);
    }
  }

  function render(): void {
    const { design, overlayOn, map, selected, job, notice } = store.state;
    if (design) {
      renderDesign(surface, design, { selected, overlay: overlayOn ? map : null });
    }
    renderBars();
    progress.value = store.progress();
    if (job) {
      const label =
        job.state === "running" || job.state === "queued"
          ? `epoch ${Math.max(job.epoch + 1, 0)} of ${job.epochs}`
          : job.state;
      jobLabel.textContent = label;
      cancelButton.hidden = job.state !== "running" && job.state !== "queued";
    } else {
      jobLabel.textContent = "";
      cancelButton.hidden = true;
    }
    toast.hidden = notice === null;
    toast.textContent = notice ?? "";
    if (notice !== null) {
      setTimeout(() => store.dismissNotice(), 4000);
    }
  }

  store.subscribe(render);
  void store.createAndLoad(DEMO_DESIGN);
  return store;
}
