/** Editor session state: tool, mask layers, job lifecycle, compare mode.
 *
 * Everything here is DOM-free so the full editing loop can run headless;
 * the canvas layer subscribes through the onChange callback.
 */

import { ApiClient } from "./api.js";
import { MaskSet } from "./mask.js";
import { Viewport } from "./viewport.js";
import { JobInfo, Point, SeamEntry, SessionInfo } from "./types.js";

export interface Tool {
  kind: "brush" | "eraser";
  radius: number;
}

export interface EditorOptions {
  pollIntervalMs?: number;
  screenWidth?: number;
  screenHeight?: number;
}

const sleep = (ms: number) => new Promise<void>((resolve) => setTimeout(resolve, ms));

export class EditorState {
  readonly api: ApiClient;
  readonly session: SessionInfo;
  readonly masks: MaskSet;
  readonly viewport: Viewport;
  tool: Tool = { kind: "brush", radius: 12 };
  activeJob: JobInfo | null = null;
  lastJob: JobInfo | null = null;
  compareMode = false;
  beforeRender: Uint8Array | null = null;
  currentRender: Uint8Array | null = null;
  compareDivider = 0.5;
  seamReport: SeamEntry[] | null = null;
  lastError: string | null = null;
  readonly pollIntervalMs: number;
  onChange: (() => void) | null = null;

  constructor(api: ApiClient, session: SessionInfo, options: EditorOptions = {}) {
    this.api = api;
    this.session = session;
    this.masks = new MaskSet(session.tile_size, session.grid.width, session.grid.height);
    this.viewport = new Viewport(
      session.grid.width * session.tile_size,
      session.grid.height * session.tile_size,
      options.screenWidth ?? 800,
      options.screenHeight ?? 600,
    );
    this.pollIntervalMs = options.pollIntervalMs ?? 500;
  }

  private changed(): void {
    this.onChange?.();
  }

  /** Rasterize a pointer path given in screen coordinates. */
  paintStroke(screenPath: Point[]): Set<string> {
    const mapPath = screenPath.map((p) => this.viewport.screenToMap(p));
    return this.paintStrokeMap(mapPath);
  }

  /** Rasterize a pointer path already in map coordinates. */
  paintStrokeMap(mapPath: Point[]): Set<string> {
    const touched = this.masks.paintStroke(mapPath, this.tool.radius, this.tool.kind === "eraser");
    this.changed();
    return touched;
  }

  canGenerate(): boolean {
    return this.activeJob === null && this.masks.totalPixelCount() > 0;
  }

  async refreshRender(): Promise<Uint8Array> {
    this.currentRender = await this.api.fetchRender(this.session.session_id);
    this.changed();
    return this.currentRender;
  }

  /**
   * Upload the painted masks, start a job and poll it to a terminal state.
   * Masks are retained on failure so nothing the artist painted is lost.
   */
  async requestGenerate(generator: string, seed: number): Promise<JobInfo> {
    if (!this.canGenerate()) {
      throw new Error(this.activeJob ? "a job is already running" : "no mask painted");
    }
    this.lastError = null;
    this.beforeRender = await this.api.fetchRender(this.session.session_id);
    try {
      await this.api.submitMasks(this.session.session_id, this.masks.uploadPayloads());
      let job = await this.api.startGeneration(this.session.session_id, generator, seed);
      this.activeJob = job;
      this.changed();
      while (job.status === "queued" || job.status === "running") {
        await sleep(this.pollIntervalMs);
        job = await this.api.jobStatus(job.id);
        this.activeJob = job;
        this.changed();
      }
      this.activeJob = null;
      this.lastJob = job;
      if (job.status === "failed") {
        this.lastError = job.error;
      } else {
        this.seamReport = job.result.pairs ?? [];
        await this.refreshRender();
      }
      this.changed();
      return job;
    } catch (err) {
      this.activeJob = null;
      this.lastError = err instanceof Error ? err.message : String(err);
      this.changed();
      throw err;
    }
  }

  /** Before/after split view; needs a completed generation to compare. */
  toggleCompare(): boolean {
    if (!this.beforeRender || !this.currentRender) return false;
    this.compareMode = !this.compareMode;
    this.changed();
    return this.compareMode;
  }

  async undo(): Promise<void> {
    await this.api.undo(this.session.session_id);
    await this.refreshRender();
    this.seamReport = null;
    this.changed();
  }
}

export async function openEditor(
  baseUrl: string,
  bundle: string,
  options: EditorOptions = {},
): Promise<EditorState> {
  const api = new ApiClient(baseUrl);
  const session = await api.openSession(bundle);
  const state = new EditorState(api, session, options);
  await state.refreshRender();
  return state;
}
