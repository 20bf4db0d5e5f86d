/** Interactive bar plot model: predicted score per element plus a draggable
 * target handle. Pure functions; the DOM shell lives in app.ts. */

import type { Design } from "./types.js";

export interface BarEntry {
  id: string;
  label: string;
  score: number;
  target: number;
}

/** One entry per design element, in stable ascending element-id order. */
export function barEntries(
  design: Design,
  scores: Record<string, number>,
  targetOf: (id: string) => number,
): BarEntry[] {
  return [...design.elements]
    .sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0))
    .map((e) => ({
      id: e.id,
      label: e.label ?? e.id,
      score: scores[e.id] ?? 0,
      target: targetOf(e.id),
    }));
}

export function barHeightPx(value: number, plotHeightPx: number): number {
  return Math.round(Math.min(Math.max(value, 0), 1) * plotHeightPx);
}

/** Displayed score text, two decimals to match the service values. */
export function formatScore(value: number): string {
  return value.toFixed(2);
}

/** Importance value for a pointer y-position inside the plot area. */
export function valueFromPointerY(pointerY: number, plotTop: number, plotHeightPx: number): number {
  const fraction = 1 - (pointerY - plotTop) / plotHeightPx;
  return Math.min(Math.max(fraction, 0), 1);
}
