/** Seam-score overlay: colored strips along shared chunk borders. */

import { SeamEntry } from "./types.js";

export interface SeamSegment {
  /* map-pixel endpoints of the border strip */
  x0: number;
  y0: number;
  x1: number;
  y1: number;
  score: number;
  color: string;
}

/** Green-to-red ramp over t in [0, 1]. */
export function heatColor(t: number): string {
  const clamped = Math.min(1, Math.max(0, t));
  const r = Math.round(255 * clamped);
  const g = Math.round(200 * (1 - clamped));
  return `rgb(${r},${g},40)`;
}

/**
 * Border strips for every reported pair, colored by the post-stitch seam
 * score normalized against the largest score in the report.
 */
export function seamOverlay(report: SeamEntry[], tileSize: number): SeamSegment[] {
  const peak = Math.max(1e-9, ...report.map((e) => e.seam_after));
  return report.map((entry) => {
    const [ax, ay] = entry.a;
    let x0: number, y0: number, x1: number, y1: number;
    if (entry.direction === "horizontal") {
      x0 = x1 = (ax + 1) * tileSize;
      y0 = ay * tileSize;
      y1 = (ay + 1) * tileSize;
    } else {
      y0 = y1 = (ay + 1) * tileSize;
      x0 = ax * tileSize;
      x1 = (ax + 1) * tileSize;
    }
    return {
      x0,
      y0,
      x1,
      y1,
      score: entry.seam_after,
      color: heatColor(entry.seam_after / peak),
    };
  });
}
