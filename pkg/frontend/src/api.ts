/** Typed client for the smartbrush /v1 JSON API. */

import { JobInfo, SessionInfo } from "./types.js";

export class ApiError extends Error {
  readonly status: number;

  constructor(status: number, message: string) {
    super(message);
    this.status = status;
  }
}

async function expectJson<T>(resp: Response): Promise<T> {
  if (!resp.ok) {
    let detail = resp.statusText;
    try {
      const body = (await resp.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      /* non-JSON error body */
    }
    throw new ApiError(resp.status, detail);
  }
  return (await resp.json()) as T;
}

export class ApiClient {
  readonly baseUrl: string;

  constructor(baseUrl: string) {
    this.baseUrl = baseUrl.replace(/\/$/, "");
  }

  async openSession(bundle: string): Promise<SessionInfo> {
    const resp = await fetch(`${this.baseUrl}/v1/sessions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ bundle }),
    });
    return expectJson<SessionInfo>(resp);
  }

  renderUrl(
    sessionId: string,
    box?: { x0: number; y0: number; x1: number; y1: number },
    zoom = 1.0,
  ): string {
    const params = new URLSearchParams();
    if (box) {
      params.set("x0", String(box.x0));
      params.set("y0", String(box.y0));
      params.set("x1", String(box.x1));
      params.set("y1", String(box.y1));
    }
    params.set("zoom", String(zoom));
    return `${this.baseUrl}/v1/sessions/${sessionId}/render?${params}`;
  }

  async fetchRender(
    sessionId: string,
    box?: { x0: number; y0: number; x1: number; y1: number },
    zoom = 1.0,
  ): Promise<Uint8Array> {
    const resp = await fetch(this.renderUrl(sessionId, box, zoom));
    if (!resp.ok) throw new ApiError(resp.status, await resp.text());
    return new Uint8Array(await resp.arrayBuffer());
  }

  async submitMasks(sessionId: string, masks: Record<string, string>): Promise<string[]> {
    const resp = await fetch(`${this.baseUrl}/v1/sessions/${sessionId}/masks`, {
      method: "PUT",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ masks }),
    });
    const body = await expectJson<{ chunks: string[] }>(resp);
    return body.chunks;
  }

  async fetchMasks(sessionId: string): Promise<Record<string, string>> {
    const resp = await fetch(`${this.baseUrl}/v1/sessions/${sessionId}/masks`);
    const body = await expectJson<{ masks: Record<string, string> }>(resp);
    return body.masks;
  }

  async startGeneration(sessionId: string, generator: string, seed: number): Promise<JobInfo> {
    const resp = await fetch(`${this.baseUrl}/v1/sessions/${sessionId}/generate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ generator, seed }),
    });
    return expectJson<JobInfo>(resp);
  }

  async jobStatus(jobId: string): Promise<JobInfo> {
    const resp = await fetch(`${this.baseUrl}/v1/jobs/${jobId}`);
    return expectJson<JobInfo>(resp);
  }

  async undo(sessionId: string): Promise<[number, number][]> {
    const resp = await fetch(`${this.baseUrl}/v1/sessions/${sessionId}/undo`, { method: "POST" });
    const body = await expectJson<{ restored: [number, number][] }>(resp);
    return body.restored;
  }

  async exportBundle(sessionId: string, outPath: string): Promise<string> {
    const resp = await fetch(`${this.baseUrl}/v1/sessions/${sessionId}/export`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ out_path: outPath }),
    });
    const body = await expectJson<{ path: string }>(resp);
    return body.path;
  }
}
