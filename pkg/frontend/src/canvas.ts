/** Canvas rendering behind a replayable draw-surface abstraction.
 *
 * Rendering is a pure function of (design, selection, overlay map): the
 * same inputs always produce the same draw command sequence, which is what
 * the tests record and compare.
 */

import type { Design, ElementKind, MapPayload } from "./types.js";

export interface DrawSurface {
  resize(w: number, h: number): void;
  clear(color: string): void;
  fillRect(x: number, y: number, w: number, h: number, color: string): void;
  strokeRect(x: number, y: number, w: number, h: number, color: string, lineWidth: number): void;
  text(content: string, x: number, y: number, color: string): void;
  /** Alpha-composite an importance map over the full canvas. */
  overlayMap(map: MapPayload, alpha: number): void;
}

export const KIND_COLORS: Record<ElementKind, string> = {
  title: "#2b2b2b",
  body_text: "#7a7a7a",
  image: "#4f8cc8",
  face: "#e6be96",
  logo: "#c83c3c",
  shape: "#96c878",
};

export const OVERLAY_ALPHA = 0.5;
export const SELECTION_COLOR = "#ff9500";

export interface RenderOptions {
  selected?: string | null;
  overlay?: MapPayload | null;
}

export function renderDesign(surface: DrawSurface, design: Design, options: RenderOptions = {}): void {
  surface.resize(design.canvas.w, design.canvas.h);
  surface.clear("#ffffff");
  const ordered = [...design.elements].sort((a, b) => a.z - b.z);
  for (const element of ordered) {
    const { x, y, w, h } = element.bbox;
    surface.fillRect(x, y, w, h, KIND_COLORS[element.kind]);
    if (element.label) {
      surface.text(element.label, x + 4, y + 14, "#ffffff");
    }
  }
  if (options.overlay) {
    surface.overlayMap(options.overlay, OVERLAY_ALPHA);
  }
  if (options.selected) {
    const selected = design.elements.find((e) => e.id === options.selected);
    if (selected) {
      const { x, y, w, h } = selected.bbox;
      surface.strokeRect(x, y, w, h, SELECTION_COLOR, 2);
    }
  }
}

/** DrawSurface over a real 2D canvas context. */
export class Canvas2DSurface implements DrawSurface {
  private readonly ctx: CanvasRenderingContext2D;

  constructor(private readonly canvas: HTMLCanvasElement) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("2d canvas context unavailable");
    this.ctx = ctx;
  }

  resize(w: number, h: number): void {
    if (this.canvas.width !== w || this.canvas.height !== h) {
      this.canvas.width = w;
      this.canvas.height = h;
    }
  }

  clear(color: string): void {
    this.ctx.globalAlpha = 1;
    this.ctx.fillStyle = color;
    this.ctx.fillRect(0, 0, this.canvas.width, this.canvas.height);
  }

  fillRect(x: number, y: number, w: number, h: number, color: string): void {
    this.ctx.globalAlpha = 1;
    this.ctx.fillStyle = color;
    this.ctx.fillRect(x, y, w, h);
  }

  strokeRect(x: number, y: number, w: number, h: number, color: string, lineWidth: number): void {
    this.ctx.globalAlpha = 1;
    this.ctx.strokeStyle = color;
    this.ctx.lineWidth = lineWidth;
    this.ctx.strokeRect(x, y, w, h);
  }

  text(content: string, x: number, y: number, color: string): void {
    this.ctx.globalAlpha = 1;
    this.ctx.fillStyle = color;
    this.ctx.font = "12px sans-serif";
    this.ctx.fillText(content, x, y);
  }

  overlayMap(map: MapPayload, alpha: number): void {
    const off = document.createElement("canvas");
    off.width = map.w;
    off.height = map.h;
    const offCtx = off.getContext("2d");
    if (!offCtx) return;
    const image = offCtx.createImageData(map.w, map.h);
    for (let i = 0; i < map.values.length; i++) {
      const v = map.values[i] ?? 0;
      // warm heat tint: importance drives red, suppresses blue
      image.data[i * 4] = Math.round(255 * v);
      image.data[i * 4 + 1] = Math.round(64 * v);
      image.data[i * 4 + 2] = Math.round(255 * (1 - v) * 0.4);
      image.data[i * 4 + 3] = 255;
    }
    offCtx.putImageData(image, 0, 0);
    this.ctx.globalAlpha = alpha;
    this.ctx.imageSmoothingEnabled = true;
    this.ctx.drawImage(off, 0, 0, this.canvas.width, this.canvas.height);
    this.ctx.globalAlpha = 1;
  }
}
