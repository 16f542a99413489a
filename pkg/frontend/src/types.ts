/** Wire types for the smartbrush /v1 JSON API. */

export interface GridSize {
  width: number;
  height: number;
}

export interface SessionInfo {
  session_id: string;
  grid: GridSize;
  tile_size: number;
  materials: string[];
}

export type JobStatus = "queued" | "running" | "done" | "failed";

export interface SeamEntry {
  a: [number, number];
  b: [number, number];
  direction: "horizontal" | "vertical";
  intersecting: boolean;
  seam_before: number;
  seam_after: number;
}

export interface JobResult {
  pairs?: SeamEntry[];
  chunk_seconds?: Record<string, number>;
  weight_sums?: Record<string, { min: number; mean: number; max: number }>;
  total_seconds?: number;
}

export interface JobInfo {
  id: string;
  session_id: string;
  generator: string;
  seed: number;
  chunks: [number, number][];
  status: JobStatus;
  error: string;
  result: JobResult;
}

export interface Point {
  x: number;
  y: number;
}

export const chunkKey = (x: number, y: number): string => `${x},${y}`;
